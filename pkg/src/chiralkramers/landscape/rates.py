"""Kramers escape rates and their chiral modifications."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import constants, integrate

from ..forcefield import ForceModel
from .axial import AxialPotential
from .extrema import BistableLandscape, locate_extrema
from .pseudo import RegimeMismatch, pseudo_potential

__all__ = [
    "EscapeRates",
    "ChiralThermodynamics",
    "kramers_rates",
    "quadrature_rates",
    "reactive_rates",
    "dissipative_rates",
    "chiral_potential_shift",
    "dissipative_force_on_axis",
    "regime_of",
    "check_regime",
]

REGIMES = ("achiral", "reactive", "dissipative")


@dataclass(frozen=True)
class EscapeRates:
    rate_ac: float
    rate_ca: float
    regime: str

    @property
    def ratio(self) -> float:
        return self.rate_ac / self.rate_ca

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


@dataclass(frozen=True)
class ChiralThermodynamics:
    """Heat is in units of kT; the joule value and entropy are derived from it."""

    heat_transfer: float
    heat_transfer_joules: float
    entropy_production: float
    free_energy_shift_a: float | None
    free_energy_shift_c: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def regime_of(model: ForceModel) -> str:
    """Coupling selected by the helicities: reactive needs h+ = -h-, dissipative h+ = h-."""
    pol = model.config.polarization
    if pol.helicity_plus == 0 and pol.helicity_minus == 0:
        return "achiral"
    if pol.helicity_sum == 0:
        return "reactive"
    if pol.helicity_difference == 0:
        return "dissipative"
    return "mixed"


def check_regime(model: ForceModel, regime: str) -> None:
    pol = model.config.polarization
    if regime == "reactive" and pol.helicity_sum != 0:
        raise RegimeMismatch(f"reactive coupling needs h+ = -h-, got h+={pol.helicity_plus}, h-={pol.helicity_minus}")
    if regime == "dissipative" and pol.helicity_difference != 0:
        raise RegimeMismatch(f"dissipative coupling needs h+ = h-, got h+={pol.helicity_plus}, h-={pol.helicity_minus}")
    if regime == "achiral" and (pol.helicity_plus != 0 or pol.helicity_minus != 0):
        raise RegimeMismatch("achiral environment needs h+ = h- = 0")
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")


def kramers_rates(landscape: BistableLandscape, drag: float, regime: str = "achiral") -> EscapeRates:
    """Steepest-descent rates a b / (pi gamma) exp(-dU/kT) with a^2 = U''_A / 2, b^2 = |U''_B| / 2."""
    kT = landscape.kT
    if min(landscape.barrier_ab, landscape.barrier_cb) < kT * (1.0 - 1e-9):
        warnings.warn("barrier below 1 kT: the steepest-descent rate is unreliable", RuntimeWarning, stacklevel=2)
    a = np.sqrt(landscape.curvature_a / 2.0)
    b = np.sqrt(landscape.curvature_b / 2.0)
    c = np.sqrt(landscape.curvature_c / 2.0)
    rate_ac = a * b / (np.pi * drag) * np.exp(-landscape.barrier_ab / kT)
    rate_ca = c * b / (np.pi * drag) * np.exp(-landscape.barrier_cb / kT)
    return EscapeRates(float(rate_ac), float(rate_ca), regime)


def _flux_over_population(potential: AxialPotential, kT: float, drag: float, z_start: float, z_barrier: float, z_end: float, tail: float) -> float:
    """kT / (gamma * int_{well} dz' int_{z'}^{z_end} du exp([U(u) - U(z')] / kT)).

    The outer integral runs from deep inside the starting well over to the
    barrier, the inner one from z' to the absorbing point at the far well's
    minimum. The combined exponent keeps the integrand bounded.
    """
    lo, hi = (z_start - tail, z_barrier) if z_end > z_start else (z_barrier, z_start + tail)

    def inner(zp):
        u0 = float(potential.value(zp))
        f = lambda u: np.exp((float(potential.value(u)) - u0) / kT)
        if z_end > z_start:
            return integrate.quad(f, zp, z_end, limit=400, epsabs=0, epsrel=1e-10, points=[z_barrier] if zp < z_barrier else None)[0]
        return integrate.quad(f, z_end, zp, limit=400, epsabs=0, epsrel=1e-10, points=[z_barrier] if zp > z_barrier else None)[0]

    total = integrate.quad(inner, lo, hi, limit=400, epsabs=0, epsrel=1e-9, points=[z_start])[0]
    return kT / (drag * total)


def quadrature_rates(model: ForceModel, landscape: BistableLandscape | None = None, tail_sigmas: float = 12.0) -> EscapeRates:
    """Escape rates from the exact one-dimensional flux-over-population double integral.

    Independent of the curvature expansion used by :func:`kramers_rates`; the
    two agree only asymptotically for high barriers.
    """
    potential = AxialPotential(model)
    landscape = locate_extrema(model) if landscape is None else landscape
    kT = model.kT
    drag = model.drag
    rate_ac = _flux_over_population(
        potential, kT, drag, landscape.z_a, landscape.z_b, landscape.z_c, tail_sigmas * landscape.sigma("a")
    )
    rate_ca = _flux_over_population(
        potential, kT, drag, landscape.z_c, landscape.z_b, landscape.z_a, tail_sigmas * landscape.sigma("c")
    )
    return EscapeRates(rate_ac, rate_ca, "achiral")


def chiral_potential_shift(model: ForceModel, z_from, z_to):
    """U_chi(0, z_to) - U_chi(0, z_from), computed without cancellation."""
    cfg = model.config
    zr = cfg.rayleigh_range
    x1 = np.asarray(z_from) / zr
    x2 = np.asarray(z_to) / zr
    # g(x2) - g(x1) with g = 1/(1+x^2)
    dg = (x1 * x1 - x2 * x2) / ((1.0 + x1 * x1) * (1.0 + x2 * x2))
    return model.particle.chi.real * cfg.polarization.helicity_difference * cfg.peak_trap_density * dg


def reactive_rates(landscape: BistableLandscape, model: ForceModel) -> tuple[EscapeRates, ChiralThermodynamics]:
    """Rates biased by the chiral free energy U_chi(z_B) - U_chi(z_i) of each well."""
    check_regime(model, "reactive")
    base = kramers_rates(landscape, model.drag, "reactive")
    kT = landscape.kT
    shift_a = float(chiral_potential_shift(model, landscape.z_a, landscape.z_b))
    shift_c = float(chiral_potential_shift(model, landscape.z_c, landscape.z_b))
    rates = EscapeRates(base.rate_ac * np.exp(-shift_a / kT), base.rate_ca * np.exp(-shift_c / kT), "reactive")
    thermo = ChiralThermodynamics(0.0, 0.0, 0.0, shift_a, shift_c)
    return rates, thermo


def dissipative_force_on_axis(model: ForceModel) -> float:
    """Axial chiral dissipative force at the focus, F(0, 0), in N."""
    return float(pseudo_potential(model, 0.0, 2).force_coefficients[0])


def dissipative_rates(landscape: BistableLandscape, model: ForceModel) -> tuple[EscapeRates, ChiralThermodynamics]:
    """Rates tilted by the work F(0,0) (z_B - z_i) of the axial dissipative force."""
    check_regime(model, "dissipative")
    base = kramers_rates(landscape, model.drag, "dissipative")
    kT = landscape.kT
    f0 = dissipative_force_on_axis(model)
    rate_ac = base.rate_ac * np.exp(f0 * (landscape.z_b - landscape.z_a) / kT)
    rate_ca = base.rate_ca * np.exp(f0 * (landscape.z_b - landscape.z_c) / kT)
    heat = f0 * landscape.well_separation / kT
    thermo = ChiralThermodynamics(
        heat_transfer=float(heat),
        heat_transfer_joules=float(f0 * landscape.well_separation),
        entropy_production=float(heat * constants.k),
        free_energy_shift_a=None,
        free_energy_shift_c=None,
    )
    return EscapeRates(float(rate_ac), float(rate_ca), "dissipative"), thermo
