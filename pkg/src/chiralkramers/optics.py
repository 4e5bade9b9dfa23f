"""Paraxial dual-beam standing wave: geometry, energy densities, chiral density and flux.

Two counter-propagating Gaussian beams with identical waist and intensity
interfere along the optical axis. Everything here is a pure function of an
immutable :class:`TrapConfiguration` and broadcasts over numpy arrays of the
cylindrical coordinates ``q`` (radius) and ``z`` (axial position).

Two evaluation paths are provided. The closed form splits the electric energy
density into a trapping envelope and an interference term. The second path
(``superposed_fields`` and ``densities_from_fields``) builds the complex E and
H vectors of both beams explicitly and recomputes every density from its
definition, so the two can be checked against each other.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import constants

__all__ = [
    "FluidMedium",
    "BeamGeometry",
    "PolarizationSettings",
    "TrapConfiguration",
    "FieldPoint",
    "FieldScalars",
    "FluxVectors",
    "cos_sin",
    "beam_radius",
    "gouy_and_curvature",
    "two_beam_phase",
    "energy_densities",
    "chiral_density",
    "chiral_flux",
    "poynting",
    "superposed_fields",
    "densities_from_fields",
]


@dataclass(frozen=True)
class FluidMedium:
    """Host fluid, with absolute SI permittivity and permeability."""

    permittivity_abs: float
    permeability_abs: float
    viscosity: float
    temperature: float

    def __post_init__(self):
        for name in ("permittivity_abs", "permeability_abs", "viscosity", "temperature"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"FluidMedium.{name} must be finite and > 0, got {value!r}")

    @classmethod
    def from_index(cls, refractive_index: float, viscosity: float, temperature: float) -> "FluidMedium":
        """Non-magnetic fluid with permittivity n**2 * eps0."""
        if not refractive_index > 0:
            raise ValueError("refractive index must be > 0")
        return cls(
            permittivity_abs=refractive_index**2 * constants.epsilon_0,
            permeability_abs=constants.mu_0,
            viscosity=viscosity,
            temperature=temperature,
        )

    @property
    def permittivity_rel(self) -> float:
        return self.permittivity_abs / constants.epsilon_0

    @property
    def permeability_rel(self) -> float:
        return self.permeability_abs / constants.mu_0

    @property
    def refractive_index(self) -> float:
        return float(np.sqrt(self.permittivity_rel * self.permeability_rel))

    @property
    def impedance(self) -> float:
        return float(np.sqrt(self.permeability_abs / self.permittivity_abs))

    @property
    def kT(self) -> float:
        return constants.k * self.temperature


@dataclass(frozen=True)
class BeamGeometry:
    """Shared geometry of both beams: vacuum wavelength, waist radius, field amplitude."""

    vacuum_wavelength: float
    waist_radius: float
    field_amplitude: float = 1.0

    def __post_init__(self):
        if not self.vacuum_wavelength > 0:
            raise ValueError("vacuum_wavelength must be > 0")
        if not self.waist_radius > 0:
            raise ValueError("waist_radius must be > 0")
        if not (np.isfinite(self.field_amplitude) and self.field_amplitude >= 0):
            raise ValueError("field_amplitude must be finite and >= 0")

    @property
    def angular_frequency(self) -> float:
        return 2.0 * np.pi * constants.c / self.vacuum_wavelength

    def wavenumber(self, fluid: FluidMedium) -> float:
        return fluid.refractive_index * 2.0 * np.pi / self.vacuum_wavelength

    def rayleigh_range(self, fluid: FluidMedium) -> float:
        return 0.5 * self.wavenumber(fluid) * self.waist_radius**2

    @classmethod
    def from_rayleigh_range(
        cls, vacuum_wavelength: float, rayleigh_range: float, fluid: FluidMedium, field_amplitude: float = 1.0
    ) -> "BeamGeometry":
        k = fluid.refractive_index * 2.0 * np.pi / vacuum_wavelength
        return cls(vacuum_wavelength, float(np.sqrt(2.0 * rayleigh_range / k)), field_amplitude)


def cos_sin(angle: float) -> tuple[float, float]:
    """cos and sin of an angle, exact at multiples of pi/2.

    np.cos(pi/2) is 6e-17, not 0. In a trap roughly 1e5 kT deep that residue
    breaks the mirror symmetry of the landscape at the 1e-11 kT level.
    """
    m = angle / (0.5 * np.pi)
    r = round(m)
    if abs(m - r) < 1e-13:
        return ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[int(r) % 4]
    return float(np.cos(angle)), float(np.sin(angle))


def _helicity_mix(h_plus, h_minus):
    mm = np.sqrt(1.0 - h_plus) * np.sqrt(1.0 - h_minus)
    pp = np.sqrt(1.0 + h_plus) * np.sqrt(1.0 + h_minus)
    return 0.5 * (mm - pp), 0.5 * (mm + pp)


@dataclass(frozen=True)
class PolarizationSettings:
    """Helicities of the forward (plus) and backward (minus) beams, relative phase and axis angle."""

    helicity_plus: float
    helicity_minus: float
    phase_delay: float
    axis_angle: float

    def __post_init__(self):
        for name in ("helicity_plus", "helicity_minus"):
            value = getattr(self, name)
            if not (-1.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [-1, 1], got {value!r}")
        for name in ("phase_delay", "axis_angle"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def h1(self) -> float:
        return float(_helicity_mix(self.helicity_plus, self.helicity_minus)[0])

    @property
    def h2(self) -> float:
        return float(_helicity_mix(self.helicity_plus, self.helicity_minus)[1])

    @property
    def helicity_sum(self) -> float:
        return self.helicity_plus + self.helicity_minus

    @property
    def helicity_difference(self) -> float:
        return self.helicity_plus - self.helicity_minus

    @property
    def interference_amplitude_on_axis(self) -> float:
        """Coefficient of cos(phase) in the interference term when the phase is at its optimum."""
        c, s = cos_sin(self.axis_angle)
        return float(np.hypot(self.h2 * c, self.h1 * s))

    def mirrored(self) -> "PolarizationSettings":
        """Opposite field enantiomorph: helicities and axis angle reversed."""
        return PolarizationSettings(-self.helicity_plus, -self.helicity_minus, self.phase_delay, -self.axis_angle)


@dataclass(frozen=True)
class TrapConfiguration:
    fluid: FluidMedium
    beam: BeamGeometry
    polarization: PolarizationSettings

    @property
    def omega(self) -> float:
        return self.beam.angular_frequency

    @property
    def wavenumber(self) -> float:
        return self.beam.wavenumber(self.fluid)

    @property
    def rayleigh_range(self) -> float:
        return self.beam.rayleigh_range(self.fluid)

    @property
    def waist_radius(self) -> float:
        return self.beam.waist_radius

    @property
    def sqrt_eps_mu(self) -> float:
        return float(np.sqrt(self.fluid.permittivity_abs * self.fluid.permeability_abs))

    @property
    def peak_trap_density(self) -> float:
        """W_trap at the focus, eps_f * E0**2 / 2, in J/m^3."""
        return 0.5 * self.fluid.permittivity_abs * self.beam.field_amplitude**2

    def with_field_amplitude(self, field_amplitude: float) -> "TrapConfiguration":
        return dataclasses.replace(self, beam=dataclasses.replace(self.beam, field_amplitude=float(field_amplitude)))

    def with_polarization(self, polarization: PolarizationSettings) -> "TrapConfiguration":
        return dataclasses.replace(self, polarization=polarization)


class FieldPoint(NamedTuple):
    radius: float
    axial: float


class FieldScalars(NamedTuple):
    w_trap: np.ndarray
    w_inter: np.ndarray
    w_electric: np.ndarray
    w_magnetic: np.ndarray
    chiral_density: np.ndarray


class FluxVectors(NamedTuple):
    """Cylindrical (rho, theta, z) components; the chiral fluxes only have z parts here."""

    chiral_flux: tuple
    poynting: tuple
    flux_trap: np.ndarray
    flux_inter: np.ndarray


def beam_radius(config: TrapConfiguration, z):
    z = np.asarray(z, dtype=float)
    return config.waist_radius * np.sqrt(1.0 + (z / config.rayleigh_range) ** 2)


def gouy_and_curvature(config: TrapConfiguration, z):
    """Gouy phase arctan(z/zR) and inverse wavefront radius z/(z**2 + zR**2), finite at z = 0."""
    z = np.asarray(z, dtype=float)
    zr = config.rayleigh_range
    return np.arctan(z / zr), z / (z * z + zr * zr)


def two_beam_phase(config: TrapConfiguration, q, z):
    q = np.asarray(q, dtype=float)
    gouy, inv_r = gouy_and_curvature(config, z)
    k = config.wavenumber
    return config.polarization.phase_delay + 2.0 * k * (z + 0.5 * q * q * inv_r) - 2.0 * gouy


def _trap(config: TrapConfiguration, q, z):
    q = np.asarray(q, dtype=float)
    z = np.asarray(z, dtype=float)
    w2 = beam_radius(config, z) ** 2
    return config.peak_trap_density * config.waist_radius**2 / w2 * np.exp(-2.0 * q * q / w2)


def energy_densities(config: TrapConfiguration, q, z) -> FieldScalars:
    pol = config.polarization
    w_trap = _trap(config, q, z)
    phi = two_beam_phase(config, q, z)
    c, s = np.cos(pol.axis_angle), np.sin(pol.axis_angle)
    w_inter = w_trap * (pol.h2 * c * np.cos(phi) + pol.h1 * s * np.sin(phi))
    k_density = -pol.helicity_difference * config.omega * config.sqrt_eps_mu * w_trap
    return FieldScalars(w_trap, w_inter, w_trap + w_inter, w_trap - w_inter, k_density)


def chiral_density(config: TrapConfiguration, q, z):
    return energy_densities(config, q, z).chiral_density


def chiral_flux(config: TrapConfiguration, q, z) -> FluxVectors:
    pol = config.polarization
    w_trap = _trap(config, q, z)
    phi = two_beam_phase(config, q, z)
    c, s = np.cos(pol.axis_angle), np.sin(pol.axis_angle)
    omega = config.omega
    flux_trap = -0.5 * omega * pol.helicity_sum * w_trap
    flux_inter = omega * w_trap * (pol.h1 * c * np.cos(phi) + pol.h2 * s * np.sin(phi))
    zero = np.zeros_like(w_trap)
    return FluxVectors(
        chiral_flux=(zero, zero, 2.0 * flux_trap),
        poynting=(zero, zero.copy(), zero.copy()),
        flux_trap=flux_trap,
        flux_inter=flux_inter,
    )


# Explicit superposition of both beams. Circular basis with e_l = (x + iy)/sqrt(2).
_E_L = np.array([1.0, 1.0j, 0.0]) / np.sqrt(2.0)
_E_R = np.array([1.0, -1.0j, 0.0]) / np.sqrt(2.0)
_Z_HAT = np.array([0.0, 0.0, 1.0])


def _polarization_vectors(pol: PolarizationSettings):
    hp, hm = pol.helicity_plus, pol.helicity_minus
    e_plus = (np.sqrt(1.0 - hp) * _E_L + np.sqrt(1.0 + hp) * _E_R) / np.sqrt(2.0)
    # relative phases of the backward beam enter conjugated, see the ledger
    e_minus = (
        np.sqrt(1.0 - hm) * np.exp(-1j * (pol.phase_delay - pol.axis_angle)) * _E_L
        + np.sqrt(1.0 + hm) * np.exp(-1j * (pol.phase_delay + pol.axis_angle)) * _E_R
    ) / np.sqrt(2.0)
    return e_plus, e_minus


def superposed_fields(config: TrapConfiguration, x, y, z):
    """Complex E (V/m) and H (A/m) of the standing wave at Cartesian points.

    Returns arrays of shape ``(3,) + broadcast_shape``. Each beam is a paraxial
    Gaussian whose magnetic field is ``k_hat x E / Z``.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
    q2 = x * x + y * y
    zr = config.rayleigh_range
    k = config.wavenumber
    w2 = config.waist_radius**2 * (1.0 + (z / zr) ** 2)
    inv_r = z / (z * z + zr * zr)
    envelope = config.beam.field_amplitude * np.sqrt(config.waist_radius**2 / w2) * np.exp(-q2 / w2)
    # forward beam phase; the backward beam is its mirror image z -> -z
    psi = k * z + 0.5 * k * q2 * inv_r - np.arctan(z / zr)
    amp_plus = envelope * np.exp(1j * psi)
    amp_minus = envelope * np.exp(-1j * psi)
    e_plus, e_minus = _polarization_vectors(config.polarization)
    h_plus_dir = np.cross(_Z_HAT, e_plus)
    h_minus_dir = np.cross(-_Z_HAT, e_minus)
    expand = (slice(None),) + (None,) * x.ndim
    e_field = amp_plus * e_plus[expand] + amp_minus * e_minus[expand]
    h_field = (amp_plus * h_plus_dir[expand] + amp_minus * h_minus_dir[expand]) / config.fluid.impedance
    return e_field, h_field


def densities_from_fields(config: TrapConfiguration, e_field, h_field) -> dict:
    """Energy densities, chiral density, ellipticities and Poynting vector from complex fields."""
    eps = config.fluid.permittivity_abs
    mu = config.fluid.permeability_abs
    omega = config.omega
    w_e = eps * np.sum(np.abs(e_field) ** 2, axis=0) / 4.0
    w_h = mu * np.sum(np.abs(h_field) ** 2, axis=0) / 4.0
    k_density = omega * eps * mu * np.imag(np.sum(e_field * np.conj(h_field), axis=0)) / 2.0
    # i * (A x A*) is real for any complex A
    flux_e = np.real(1j * omega * eps * np.cross(e_field, np.conj(e_field), axis=0) / 4.0)
    flux_h = np.real(1j * omega * mu * np.cross(h_field, np.conj(h_field), axis=0) / 4.0)
    poynting_vec = np.real(np.cross(e_field, np.conj(h_field), axis=0)) / 2.0
    return {
        "w_electric": w_e,
        "w_magnetic": w_h,
        "chiral_density": k_density,
        "flux_electric": flux_e,
        "flux_magnetic": flux_h,
        "chiral_flux": flux_e + flux_h,
        "poynting": poynting_vec,
    }


def poynting(config: TrapConfiguration, q, z):
    """Poynting vector of the explicitly superposed fields, evaluated in the x-z half plane."""
    e_field, h_field = superposed_fields(config, q, np.zeros_like(np.asarray(q, dtype=float)), z)
    return densities_from_fields(config, e_field, h_field)["poynting"]
