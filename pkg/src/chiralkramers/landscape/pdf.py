"""Stationary probability densities of the trapped particle and well populations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate, special

from ..forcefield import ForceModel, potential_offset
from .axial import AxialPotential
from .extrema import BistableLandscape, locate_extrema
from .pseudo import PseudoPotential, pseudo_potential
from .rates import check_regime

__all__ = [
    "QuadratureNotConverged",
    "EffectivePotential",
    "AxialPDF",
    "AxialMarginal",
    "Domain",
    "effective_potential",
    "stationary_pdf_axis",
    "axial_marginal",
    "population_integrals",
    "population_ratio_3d",
]


class QuadratureNotConverged(ArithmeticError):
    pass


@dataclass(frozen=True)
class Domain:
    """Integration box: radius in [0, q_max], axial position in [z_lo, z_hi]."""

    q_max: float
    z_lo: float
    z_hi: float
    sigma_q: float
    tail_bound: float


class EffectivePotential:
    """phi(q, z) in joules for the chosen coupling, shifted so that its on-axis minimum is 0.

    achiral: optical potential; reactive: plus the chiral potential; dissipative:
    plus the radius-dependent pseudo-potential of the axial dissipative force.
    """

    def __init__(self, model: ForceModel, regime: str, pseudo_order: int = 2):
        if regime != "achiral":
            check_regime(model, regime)
        self.model = model
        self.regime = regime
        self.pseudo_order = pseudo_order
        self.chiral = regime == "reactive"
        pseudo_axis = pseudo_potential(model, 0.0, pseudo_order) if regime == "dissipative" else None
        self.axial = AxialPotential(model, chiral=self.chiral, pseudo=pseudo_axis)
        self.landscape: BistableLandscape = locate_extrema(model, chiral=self.chiral, pseudo=pseudo_axis)
        self.offset = float(min(self.axial.value(self.landscape.z_a), self.axial.value(self.landscape.z_c)))

    @property
    def kT(self) -> float:
        return self.model.kT

    def pseudo_at(self, q) -> PseudoPotential | None:
        if self.regime != "dissipative":
            return None
        return pseudo_potential(self.model, q, self.pseudo_order)

    def __call__(self, q, z):
        q = np.asarray(q, dtype=float)
        z = np.asarray(z, dtype=float)
        out = potential_offset(self.model, q, z, chiral=self.chiral)
        if self.regime == "dissipative":
            out = out + self.pseudo_at(q).value(z)
        return out - self.offset

    def radial_stiffness(self, z) -> float:
        """-d^2 phi / dq^2 at the axis, by a one-sided difference (phi is even in q)."""
        h = 1e-11
        return float(2.0 * (self(h, z) - self(0.0, z)) / (h * h))

    def domain(self, z_sigmas: float = 6.0, q_sigmas: float = 8.0) -> Domain:
        land = self.landscape
        stiff = min(self.radial_stiffness(z) for z in (land.z_a, land.z_b, land.z_c))
        sigma_q = float(np.sqrt(self.kT / stiff))
        q_max = min(4.0 * self.model.config.waist_radius, q_sigmas * sigma_q)
        z_lo = land.z_a - z_sigmas * land.sigma("a")
        z_hi = land.z_c + z_sigmas * land.sigma("c")
        # Gaussian tails beyond the box, relative to a unit-mass well
        tail = float(np.exp(-0.5 * (q_max / sigma_q) ** 2) + special.erfc(z_sigmas / np.sqrt(2.0)))
        return Domain(q_max, z_lo, z_hi, sigma_q, tail)


def effective_potential(model: ForceModel, regime: str, pseudo_order: int = 2) -> EffectivePotential:
    return EffectivePotential(model, regime, pseudo_order)


@dataclass
class AxialPDF:
    """Normalized on-axis density p(0, z) = exp(-phi(0, z)/kT) / C."""

    z: np.ndarray
    density: np.ndarray
    normalization: float
    normalization_error: float
    potential: EffectivePotential

    def __call__(self, z):
        return np.exp(-self.potential(0.0, z) / self.potential.kT) / self.normalization


def stationary_pdf_axis(model: ForceModel, regime: str, n: int = 2001, pseudo_order: int = 2) -> AxialPDF:
    phi = EffectivePotential(model, regime, pseudo_order)
    dom = phi.domain()
    kT = phi.kT
    f = lambda z: float(np.exp(-phi(0.0, z) / kT))
    land = phi.landscape
    norm, err = integrate.quad(f, dom.z_lo, dom.z_hi, points=[land.z_a, land.z_b, land.z_c], epsabs=0, epsrel=1e-12, limit=400)
    z = np.linspace(dom.z_lo, dom.z_hi, n)
    return AxialPDF(z, np.exp(-phi(0.0, z) / kT) / norm, norm, err / norm, phi)


class AxialMarginal:
    """Radially integrated axial density p_z(z) = int p(q, z) 2 pi q dq, with its CDF.

    The radial integral uses a Gauss-Legendre rule on [0, q_max], far more nodes
    than the near-Gaussian radial profile needs, and the CDF is a cumulative
    Simpson integral on a fine axial grid.
    """

    def __init__(self, model: ForceModel, regime: str, n: int = 2001, pseudo_order: int = 2, radial_nodes: int = 96):
        self.phi = EffectivePotential(model, regime, pseudo_order)
        self.domain = self.phi.domain()
        kT = self.phi.kT
        nodes, weights = np.polynomial.legendre.leggauss(radial_nodes)
        q = 0.5 * self.domain.q_max * (nodes + 1.0)
        w = 0.5 * self.domain.q_max * weights
        z = np.linspace(self.domain.z_lo, self.domain.z_hi, n)
        pz = np.sum(w[:, None] * 2.0 * np.pi * q[:, None] * np.exp(-self.phi(q[:, None], z[None, :]) / kT), axis=0)
        cdf = np.concatenate([[0.0], integrate.cumulative_simpson(pz, x=z)])
        total = cdf[-1]
        self.z = z
        self.density = pz / total
        self.cdf_values = cdf / total
        self._cdf = interpolate.PchipInterpolator(z, self.cdf_values)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.clip(self._cdf(np.clip(z, self.z[0], self.z[-1])), 0.0, 1.0)

    def pdf(self, z):
        return np.interp(z, self.z, self.density, left=0.0, right=0.0)


def axial_marginal(model: ForceModel, regime: str, n: int = 2001, pseudo_order: int = 2) -> AxialMarginal:
    return AxialMarginal(model, regime, n, pseudo_order)


@dataclass(frozen=True)
class PopulationIntegrals:
    n_a: float
    n_c: float
    error_a: float
    error_c: float
    tail_bound: float
    domain: Domain

    @property
    def ratio(self) -> float:
        return self.n_c / self.n_a

    @property
    def relative_error(self) -> float:
        return self.error_a / self.n_a + self.error_c / self.n_c + self.tail_bound


def population_integrals(model: ForceModel, regime: str = "dissipative", pseudo_order: int = 2, rtol: float = 1e-6, split: float = 0.0) -> PopulationIntegrals:
    """Well populations int 2 pi q dq int dz exp(-phi/kT), split at ``split`` along z."""
    phi = EffectivePotential(model, regime, pseudo_order)
    dom = phi.domain()
    kT = phi.kT

    def integrand(x):
        q, z = x[:, 0], x[:, 1]
        return 2.0 * np.pi * q * np.exp(-phi(q, z) / kT)

    out = []
    for lo, hi in ((dom.z_lo, split), (split, dom.z_hi)):
        res = integrate.cubature(integrand, [0.0, lo], [dom.q_max, hi], rtol=rtol, atol=0.0)
        if res.status != "converged":
            raise QuadratureNotConverged(f"cubature status {res.status} on z in [{lo:.3e}, {hi:.3e}]")
        out.append((float(res.estimate), float(res.error)))
    (n_a, e_a), (n_c, e_c) = out
    return PopulationIntegrals(n_a, n_c, e_a, e_c, dom.tail_bound, dom)


def population_ratio_3d(model: ForceModel, pseudo_order: int = 2, regime: str = "dissipative", max_relative_error: float = 1e-4) -> float:
    """n_C / n_A from the three-dimensional model density, split at z = 0."""
    res = population_integrals(model, regime, pseudo_order)
    if res.relative_error > max_relative_error:
        raise QuadratureNotConverged(f"relative error estimate {res.relative_error:.2e} exceeds {max_relative_error:.0e}")
    return res.ratio
