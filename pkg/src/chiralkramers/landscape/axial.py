"""On-axis effective potential with analytic first and second derivatives."""

from __future__ import annotations

import numpy as np

from ..forcefield import (
    P_COS,
    P_COS_DELTA,
    P_H1,
    P_H2,
    P_HDIFF,
    P_K,
    P_RE_A,
    P_RE_B,
    P_RE_X,
    P_SIN,
    P_SIN_DELTA,
    P_W0,
    P_ZR,
    ForceModel,
    pack_parameters,
)
from .pseudo import PseudoPotential

__all__ = ["AxialPotential"]


class AxialPotential:
    """Potential along the optical axis, measured from a constant offset.

    Values are U(0, z) minus the trap depth -(Re alpha [+ Re beta]) W0 of the
    interference-free focus, so that barrier heights of order kT are resolved
    on top of a trap that is ~1e5 kT deep. Includes the optical term (and the
    magnetic one when the model enables it), the chiral reactive potential when
    ``chiral`` is set, and a dissipative pseudo-potential when one is passed.
    """

    def __init__(self, model: ForceModel, chiral: bool = False, pseudo: PseudoPotential | None = None):
        self.model = model
        self.chiral = chiral
        self.pseudo = pseudo
        P = pack_parameters(model)
        self._zr = P[P_ZR]
        self._k = P[P_K]
        self._cd, self._sd = P[P_COS_DELTA], P[P_SIN_DELTA]
        self._ac = P[P_H2] * P[P_COS]
        self._as = P[P_H1] * P[P_SIN]
        w0 = P[P_W0]
        # coefficients multiplying the envelope deviation and the interference term
        self._c_env = -P[P_RE_A] * w0
        self._c_int = -P[P_RE_A] * w0
        if model.include_magnetic:
            self._c_env -= P[P_RE_B] * w0
            self._c_int += P[P_RE_B] * w0
        if chiral:
            self._c_env += P[P_RE_X] * P[P_HDIFF] * w0

    @property
    def kT(self) -> float:
        return self.model.kT

    def _pieces(self, z):
        z = np.asarray(z, dtype=float)
        zr, k = self._zr, self._k
        x = z / zr
        g = 1.0 / (1.0 + x * x)
        g1 = -2.0 * x * g * g / zr
        g2 = (-2.0 * g * g + 8.0 * x * x * g**3) / zr**2
        psi = 2.0 * k * z - 2.0 * np.arctan(x)
        cpsi, spsi = np.cos(psi), np.sin(psi)
        cphi = self._cd * cpsi - self._sd * spsi
        sphi = self._sd * cpsi + self._cd * spsi
        inter = self._ac * cphi + self._as * sphi
        inter_p = -self._ac * sphi + self._as * cphi
        phi1 = 2.0 * k - 2.0 * g / zr
        phi2 = -2.0 * g1 / zr
        return x, g, g1, g2, inter, inter_p, phi1, phi2

    def value(self, z):
        x, g, _, _, inter, *_ = self._pieces(z)
        out = self._c_env * (-x * x * g) + self._c_int * g * inter
        if self.pseudo is not None:
            out = out + self.pseudo.value(z)
        return out

    def slope(self, z):
        _, g, g1, _, inter, inter_p, phi1, _ = self._pieces(z)
        out = self._c_env * g1 + self._c_int * (g1 * inter + g * inter_p * phi1)
        if self.pseudo is not None:
            out = out + self.pseudo.slope(z)
        return out

    def curvature(self, z):
        _, g, g1, g2, inter, inter_p, phi1, phi2 = self._pieces(z)
        i1 = inter_p * phi1
        i2 = -inter * phi1 * phi1 + inter_p * phi2
        out = self._c_env * g2 + self._c_int * (g2 * inter + 2.0 * g1 * i1 + g * i2)
        if self.pseudo is not None:
            out = out + self.pseudo.curvature(z)
        return out

    def force(self, z):
        return -self.slope(z)
