"""Dipolar optical forces on a chiral sphere in the standing wave.

All six force contributions (electric, magnetic and chiral; reactive and
dissipative) are evaluated in closed form from the trapping envelope, the
two-beam phase and their analytic derivatives. Radial and azimuthal forces
vanish linearly on the axis, so the kernels work with ``F_rho / q`` and
``F_theta / q``; the Cartesian projection ``x * f - y * g`` then needs no
division by the radius.

The same scalar routine ``reduced_force`` runs under numba (per particle) and
numpy (broadcast over arrays) because it only uses arithmetic and ufuncs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .optics import TrapConfiguration, cos_sin
from .particle import Polarizabilities, enantiomer_flip

__all__ = [
    "ForceModel",
    "ForceVector",
    "ForceDecomposition",
    "PotentialSample",
    "CurlReport",
    "pack_parameters",
    "reduced_force",
    "decompose_forces",
    "total_force",
    "potential",
    "potential_offset",
    "curl_diagnostic",
    "magnetic_potential",
    "N_PARAMS",
]

# layout of the packed parameter vector shared with the compiled kernels
P_W0, P_W02, P_ZR, P_K, P_COS_DELTA, P_SIN_DELTA, P_COS, P_SIN, P_H1, P_H2 = range(10)
P_HSUM, P_HDIFF, P_RE_A, P_IM_A, P_RE_B, P_IM_B, P_RE_X, P_IM_X = range(10, 18)
P_KCHI, P_MAGNETIC, P_AZIMUTHAL, P_HARMONIC = range(18, 22)
N_PARAMS = 22


@dataclass(frozen=True)
class ForceModel:
    """A particle in a trap, plus the switches that select force contributions.

    ``drag_factor`` sets the friction coefficient gamma = drag_factor * pi * eta * R
    (2 by default, 6 gives the usual Stokes law). ``harmonic_stiffness`` adds an
    isotropic restoring force -k r, used to validate the integrator.
    """

    config: TrapConfiguration
    particle: Polarizabilities
    include_magnetic: bool = False
    include_azimuthal: bool = True
    drag_factor: float = 2.0
    harmonic_stiffness: float = 0.0

    def __post_init__(self):
        if not self.drag_factor > 0:
            raise ValueError("drag_factor must be > 0")
        if self.harmonic_stiffness < 0:
            raise ValueError("harmonic_stiffness must be >= 0")

    @property
    def drag(self) -> float:
        return self.drag_factor * np.pi * self.config.fluid.viscosity * self.particle.radius

    @property
    def diffusion(self) -> float:
        return self.config.fluid.kT / self.drag

    @property
    def kT(self) -> float:
        return self.config.fluid.kT

    def flipped(self) -> "ForceModel":
        return self.replace(particle=enantiomer_flip(self.particle))

    def replace(self, **changes) -> "ForceModel":
        return dataclasses.replace(self, **changes)

    def with_config(self, config: TrapConfiguration) -> "ForceModel":
        return self.replace(config=config)


class ForceVector(NamedTuple):
    f_rho: np.ndarray
    f_theta: np.ndarray
    f_z: np.ndarray


class ForceDecomposition(NamedTuple):
    electric_reactive: ForceVector
    magnetic_reactive: ForceVector
    electric_dissipative: ForceVector
    magnetic_dissipative: ForceVector
    chiral_reactive: ForceVector
    chiral_dissipative: ForceVector

    def total(self, include_magnetic: bool = True, include_azimuthal: bool = True) -> ForceVector:
        parts = [self.electric_reactive, self.chiral_reactive, self.chiral_dissipative]
        if include_magnetic:
            parts.append(self.magnetic_reactive)
        if include_azimuthal:
            parts.append(self.electric_dissipative)
            if include_magnetic:
                parts.append(self.magnetic_dissipative)
        return ForceVector(*(sum(p[i] for p in parts) for i in range(3)))


class PotentialSample(NamedTuple):
    u_opt: np.ndarray
    u_chi: np.ndarray
    u_pot: np.ndarray


def pack_parameters(model: ForceModel) -> np.ndarray:
    cfg = model.config
    pol = cfg.polarization
    p = model.particle
    out = np.zeros(N_PARAMS)
    out[P_W0] = cfg.peak_trap_density
    out[P_W02] = cfg.waist_radius**2
    out[P_ZR] = cfg.rayleigh_range
    out[P_K] = cfg.wavenumber
    out[P_COS_DELTA], out[P_SIN_DELTA] = cos_sin(pol.phase_delay)
    out[P_COS], out[P_SIN] = cos_sin(pol.axis_angle)
    out[P_H1] = pol.h1
    out[P_H2] = pol.h2
    out[P_HSUM] = pol.helicity_sum
    out[P_HDIFF] = pol.helicity_difference
    out[P_RE_A], out[P_IM_A] = p.alpha.real, p.alpha.imag
    out[P_RE_B], out[P_IM_B] = p.beta.real, p.beta.imag
    out[P_RE_X], out[P_IM_X] = p.chi.real, p.chi.imag
    # Phi carries a factor omega, so the chiral dissipative force scales with omega sqrt(eps mu)
    out[P_KCHI] = cfg.omega * cfg.sqrt_eps_mu
    out[P_MAGNETIC] = 1.0 if model.include_magnetic else 0.0
    out[P_AZIMUTHAL] = 1.0 if model.include_azimuthal else 0.0
    out[P_HARMONIC] = model.harmonic_stiffness
    return out


def _field_terms(q, z, P):
    """Envelope, interference factors and log-derivatives at (q, z).

    Returns (w_trap, I, I', J, J', dlnw_q/q, dlnw_z, dphi_q/q, dphi_z) where the
    interference factor I = h2 cos(dt) cos(phi) + h1 sin(dt) sin(phi) sets
    W_inter = W_trap I and J sets the ellipticity interference the same way.
    Primes are derivatives with respect to the two-beam phase.
    """
    zr = P[P_ZR]
    w02 = P[P_W02]
    k = P[P_K]
    x = z / zr
    g = 1.0 / (1.0 + x * x)
    q2 = q * q
    w_trap = P[P_W0] * g * np.exp(-2.0 * q2 * g / w02)
    den = z * z + zr * zr
    inv_r = z / den
    dinv_r = (zr * zr - z * z) / (den * den)
    # phase = delta + psi, expanded so that an odd psi(z) keeps exact parity
    psi = 2.0 * k * z + k * q2 * inv_r - 2.0 * np.arctan(x)
    cpsi = np.cos(psi)
    spsi = np.sin(psi)
    cphi = P[P_COS_DELTA] * cpsi - P[P_SIN_DELTA] * spsi
    sphi = P[P_SIN_DELTA] * cpsi + P[P_COS_DELTA] * spsi
    a_c = P[P_H2] * P[P_COS]
    a_s = P[P_H1] * P[P_SIN]
    b_c = P[P_H1] * P[P_COS]
    b_s = P[P_H2] * P[P_SIN]
    inter = a_c * cphi + a_s * sphi
    inter_p = -a_c * sphi + a_s * cphi
    ell = b_c * cphi + b_s * sphi
    ell_p = -b_c * sphi + b_s * cphi
    dlnw_q = -4.0 * g / w02
    dlnw_z = -2.0 * z * g / (zr * zr) + 4.0 * q2 * z * g * g / (w02 * zr * zr)
    dphi_q = 2.0 * k * inv_r
    dphi_z = 2.0 * k + k * q2 * dinv_r - 2.0 * g / zr
    return w_trap, inter, inter_p, ell, ell_p, dlnw_q, dlnw_z, dphi_q, dphi_z


def reduced_force(q, z, P):
    """Total force as (F_rho / q, F_theta / q, F_z)."""
    w_trap, inter, inter_p, ell, ell_p, dlnw_q, dlnw_z, dphi_q, dphi_z = _field_terms(q, z, P)
    hsum = P[P_HSUM]
    # electric reactive: Re(alpha) grad W_E
    fr = P[P_RE_A] * w_trap * ((1.0 + inter) * dlnw_q + inter_p * dphi_q)
    fz = P[P_RE_A] * w_trap * ((1.0 + inter) * dlnw_z + inter_p * dphi_z)
    # chiral reactive: Re(chi) grad K / (omega sqrt(eps mu)) = -Re(chi) (h+ - h-) grad W_trap
    chi_r = -P[P_RE_X] * P[P_HDIFF] * w_trap
    fr = fr + chi_r * dlnw_q
    fz = fz + chi_r * dlnw_z
    # chiral dissipative: 2 sqrt(eps mu) Im(chi) Phi, axial only
    fz = fz - 2.0 * P[P_KCHI] * hsum * P[P_IM_X] * w_trap
    # azimuthal dissipative: -Im(alpha) curl(Phi_E) / omega
    ft = P[P_AZIMUTHAL] * P[P_IM_A] * w_trap * ((ell - 0.5 * hsum) * dlnw_q + ell_p * dphi_q)
    if P[P_MAGNETIC] != 0.0:
        fr = fr + P[P_RE_B] * w_trap * ((1.0 - inter) * dlnw_q - inter_p * dphi_q)
        fz = fz + P[P_RE_B] * w_trap * ((1.0 - inter) * dlnw_z - inter_p * dphi_z)
        ft = ft + P[P_AZIMUTHAL] * P[P_IM_B] * w_trap * ((-ell - 0.5 * hsum) * dlnw_q - ell_p * dphi_q)
    kh = P[P_HARMONIC]
    return fr - kh, ft, fz - kh * z


def decompose_forces(model: ForceModel, q, z) -> ForceDecomposition:
    """All six force contributions in cylindrical components (N), ignoring the model switches."""
    P = pack_parameters(model)
    q = np.asarray(q, dtype=float)
    z = np.asarray(z, dtype=float)
    q, z = np.broadcast_arrays(q, z)
    w_trap, inter, inter_p, ell, ell_p, dlnw_q, dlnw_z, dphi_q, dphi_z = _field_terms(q, z, P)
    hsum = P[P_HSUM]
    zero = np.zeros_like(w_trap)

    def vec(fr_reduced, ft_reduced, fz):
        return ForceVector(fr_reduced * q, ft_reduced * q, fz)

    grad_we_q = w_trap * ((1.0 + inter) * dlnw_q + inter_p * dphi_q)
    grad_we_z = w_trap * ((1.0 + inter) * dlnw_z + inter_p * dphi_z)
    grad_wh_q = w_trap * ((1.0 - inter) * dlnw_q - inter_p * dphi_q)
    grad_wh_z = w_trap * ((1.0 - inter) * dlnw_z - inter_p * dphi_z)
    chi_r = -P[P_RE_X] * P[P_HDIFF] * w_trap
    return ForceDecomposition(
        electric_reactive=vec(P[P_RE_A] * grad_we_q, zero, P[P_RE_A] * grad_we_z),
        magnetic_reactive=vec(P[P_RE_B] * grad_wh_q, zero, P[P_RE_B] * grad_wh_z),
        electric_dissipative=vec(
            zero, P[P_IM_A] * w_trap * ((ell - 0.5 * hsum) * dlnw_q + ell_p * dphi_q), zero.copy()
        ),
        magnetic_dissipative=vec(
            zero, P[P_IM_B] * w_trap * ((-ell - 0.5 * hsum) * dlnw_q - ell_p * dphi_q), zero.copy()
        ),
        chiral_reactive=vec(chi_r * dlnw_q, zero, chi_r * dlnw_z),
        chiral_dissipative=vec(zero, zero, -2.0 * P[P_KCHI] * hsum * P[P_IM_X] * w_trap),
    )


def total_force(model: ForceModel, q, z) -> ForceVector:
    """Force used by the simulator, honouring the magnetic/azimuthal switches and harmonic term."""
    q = np.asarray(q, dtype=float)
    fr, ft, fz = reduced_force(q, np.asarray(z, dtype=float), pack_parameters(model))
    return ForceVector(fr * q, ft * q, fz)


def potential(model: ForceModel, q, z) -> PotentialSample:
    """Optical potential -Re(alpha) W_E and chiral potential -Re(chi) K / (omega sqrt(eps mu))."""
    from .optics import energy_densities

    s = energy_densities(model.config, q, z)
    u_opt = -model.particle.alpha.real * s.w_electric
    u_chi = -model.particle.chi.real * s.chiral_density / (model.config.omega * model.config.sqrt_eps_mu)
    return PotentialSample(u_opt, u_chi, u_opt + u_chi)


def magnetic_potential(model: ForceModel, q, z):
    from .optics import energy_densities

    return -model.particle.beta.real * energy_densities(model.config, q, z).w_magnetic


def potential_offset(model: ForceModel, q, z, chiral: bool = False):
    """Conservative potential relative to its value at the focus of an interference-free trap.

    Equals U_opt (plus the magnetic term when enabled, plus U_chi when
    ``chiral``) minus the constant -(Re alpha [+ Re beta] [+ ...]) W0. The
    difference is assembled from small quantities, so barrier heights of a few
    kT on top of a trap that is 10^5 kT deep keep full relative precision.
    """
    P = pack_parameters(model)
    q = np.asarray(q, dtype=float)
    z = np.asarray(z, dtype=float)
    x = z / P[P_ZR]
    g = 1.0 / (1.0 + x * x)
    beta = 2.0 * q * q / P[P_W02]
    t = g * np.exp(-beta * g)
    dev = g * np.expm1(-beta * g) - x * x * g
    _, inter, *_ = _field_terms(q, z, P)
    w0 = P[P_W0]
    out = -P[P_RE_A] * w0 * (dev + t * inter)
    if model.include_magnetic:
        out = out - P[P_RE_B] * w0 * (dev - t * inter)
    if chiral:
        out = out + P[P_RE_X] * P[P_HDIFF] * w0 * dev
    return out


@dataclass(frozen=True)
class CurlReport:
    max_force_reactive: float
    max_curl_reactive: float
    max_force_chiral_dissipative: float
    max_curl_chiral_dissipative: float
    waist_radius: float
    rayleigh_range: float

    @property
    def reactive_is_conservative(self) -> bool:
        return self.max_curl_reactive <= 1e-6 * self.max_force_reactive / self.waist_radius

    @property
    def dissipative_has_curl(self) -> bool:
        return self.max_curl_chiral_dissipative > 1e-2 * self.max_force_chiral_dissipative / self.rayleigh_range


def _azimuthal_curl(fr_fun, fz_fun, q, z, hq, hz):
    """theta component d_z F_rho - d_q F_z by central differences."""
    return (fr_fun(q, z + hz) - fr_fun(q, z - hz)) / (2 * hz) - (fz_fun(q + hq, z) - fz_fun(q - hq, z)) / (2 * hq)


def curl_diagnostic(model: ForceModel, q_max: float | None = None, z_max: float | None = None, n: int = 41) -> CurlReport:
    """Finite-difference curl of the reactive and chiral dissipative force fields on a grid."""
    cfg = model.config
    q_max = 2.0 * cfg.waist_radius if q_max is None else q_max
    z_max = cfg.rayleigh_range if z_max is None else z_max
    qs = np.linspace(0.05 * q_max, q_max, n)
    zs = np.linspace(-z_max, z_max, n)
    Q, Z = np.meshgrid(qs, zs, indexing="ij")
    hq = 1e-5 * cfg.waist_radius
    hz = 1e-5 * cfg.waist_radius

    def reactive(q, z):
        d = decompose_forces(model, q, z)
        parts = [d.electric_reactive, d.chiral_reactive]
        if model.include_magnetic:
            parts.append(d.magnetic_reactive)
        return sum(p.f_rho for p in parts), sum(p.f_z for p in parts)

    def chiral_diss(q, z):
        d = decompose_forces(model, q, z).chiral_dissipative
        return d.f_rho, d.f_z

    out = []
    for fun in (reactive, chiral_diss):
        fr0, fz0 = fun(Q, Z)
        curl = _azimuthal_curl(lambda a, b: fun(a, b)[0], lambda a, b: fun(a, b)[1], Q, Z, hq, hz)
        out.append((float(np.max(np.hypot(fr0, fz0))), float(np.max(np.abs(curl)))))
    return CurlReport(out[0][0], out[0][1], out[1][0], out[1][1], cfg.waist_radius, cfg.rayleigh_range)
