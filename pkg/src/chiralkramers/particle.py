"""Quasistatic polarizabilities of a chiral nanosphere."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .optics import FluidMedium

__all__ = [
    "MaterialOptics",
    "Polarizabilities",
    "SingularDenominator",
    "NoSolution",
    "clausius_mossotti",
    "solve_kappa",
    "enantiomer_flip",
    "chiral_sphere",
]


class SingularDenominator(ArithmeticError):
    pass


class NoSolution(ArithmeticError):
    pass


@dataclass(frozen=True)
class MaterialOptics:
    """Relative permittivity, permeability and chirality parameter of the sphere material."""

    permittivity_rel: complex
    permeability_rel: complex = 1.0 + 0.0j
    chiral_parameter: complex = 0.0j

    def __post_init__(self):
        if complex(self.permittivity_rel).imag < 0:
            raise ValueError("a passive material needs Im(permittivity) >= 0")

    def with_kappa(self, kappa: complex) -> "MaterialOptics":
        return dataclasses.replace(self, chiral_parameter=complex(kappa))


@dataclass(frozen=True)
class Polarizabilities:
    """Electric, magnetic and mixed polarizabilities in m^3 (SI volume convention)."""

    alpha: complex
    beta: complex
    chi: complex
    radius: float

    @property
    def handedness(self) -> str:
        if self.chi == 0:
            return "achiral"
        return "left" if self.chi.imag > 0 or (self.chi.imag == 0 and self.chi.real < 0) else "right"


def _denominator(eps_m, mu_m, kappa, eps_f, mu_f):
    return (eps_m + 2.0 * eps_f) * (mu_m + 2.0 * mu_f) - kappa * kappa


def clausius_mossotti(radius: float, material: MaterialOptics, fluid: FluidMedium, tol: float = 1e-12) -> Polarizabilities:
    if not radius > 0:
        raise ValueError("radius must be > 0")
    eps_m = complex(material.permittivity_rel)
    mu_m = complex(material.permeability_rel)
    kappa = complex(material.chiral_parameter)
    eps_f = fluid.permittivity_rel
    mu_f = fluid.permeability_rel
    den = _denominator(eps_m, mu_m, kappa, eps_f, mu_f)
    if abs(den) < tol * max(1.0, abs(eps_m + 2 * eps_f) * abs(mu_m + 2 * mu_f)):
        raise SingularDenominator(f"|denominator| = {abs(den):.3e} for eps_m={eps_m}, mu_m={mu_m}, kappa={kappa}")
    volume = 4.0 * np.pi * radius**3
    alpha = volume * ((eps_m - eps_f) * (mu_m + 2.0 * mu_f) - kappa * kappa) / den
    beta = volume * ((eps_m + 2.0 * eps_f) * (mu_m - mu_f) - kappa * kappa) / den
    chi = 3.0 * volume * kappa / den
    if kappa == 0:
        chi = 0j
    return Polarizabilities(complex(alpha), complex(beta), complex(chi), float(radius))


def solve_kappa(target_ratio: complex, material: MaterialOptics, fluid: FluidMedium) -> tuple[complex, complex]:
    """Chirality parameter giving chi/alpha = target_ratio, and its enantiomer.

    chi/alpha = 3 kappa / [(eps_m - eps_f)(mu_m + 2 mu_f) - kappa^2], so kappa solves
    kappa^2 + 3 kappa/ratio - (eps_m - eps_f)(mu_m + 2 mu_f) = 0. Of the two roots the
    one with the smaller modulus is returned first.
    """
    ratio = complex(target_ratio)
    if ratio == 0:
        raise NoSolution("target ratio must be nonzero")
    c0 = (complex(material.permittivity_rel) - fluid.permittivity_rel) * (
        complex(material.permeability_rel) + 2.0 * fluid.permeability_rel
    )
    if not np.isfinite(ratio):
        # 3 kappa / ratio -> 0
        if c0 == 0:
            raise NoSolution("degenerate quadratic")
        root = np.sqrt(c0)
        return complex(root), complex(-root)
    b = 3.0 / ratio
    if c0 == 0:
        # kappa (kappa + b) = 0; the nonzero root is the only chiral one
        root = -b
    else:
        # numerically stable pair of roots
        disc = np.sqrt(b * b + 4.0 * c0)
        big = -0.5 * (b + disc) if abs(b + disc) >= abs(b - disc) else -0.5 * (b - disc)
        small = -c0 / big
        root = small if abs(small) <= abs(big) else big
    return complex(root), complex(-root)


def enantiomer_flip(p: Polarizabilities) -> Polarizabilities:
    return dataclasses.replace(p, chi=-p.chi)


def chiral_sphere(
    radius: float, material: MaterialOptics, fluid: FluidMedium, chirality_ratio: float, handedness: str = "left"
) -> Polarizabilities:
    """Polarizabilities of a sphere with |chi/alpha| = chirality_ratio.

    ``left`` picks the root with Im(chi) > 0, ``right`` its mirror image. A zero
    ratio (or handedness ``achiral``) yields chi = 0.
    """
    if handedness not in ("left", "right", "achiral"):
        raise ValueError(f"unknown handedness {handedness!r}")
    if chirality_ratio == 0 or handedness == "achiral":
        return clausius_mossotti(radius, material.with_kappa(0j), fluid)
    kappa, _ = solve_kappa(chirality_ratio, material, fluid)
    p = clausius_mossotti(radius, material.with_kappa(kappa), fluid)
    is_left = p.chi.imag > 0 or (p.chi.imag == 0 and p.chi.real < 0)
    if is_left != (handedness == "left"):
        p = clausius_mossotti(radius, material.with_kappa(-kappa), fluid)
    return p
