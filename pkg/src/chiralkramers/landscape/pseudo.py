"""Taylor-integrated stand-in potential for the slowly varying axial dissipative force."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..forcefield import P_HSUM, P_IM_X, P_KCHI, P_W0, P_W02, P_ZR, ForceModel, pack_parameters

__all__ = ["PseudoPotential", "pseudo_potential", "RegimeMismatch", "envelope_series"]


class RegimeMismatch(ValueError):
    """Polarization settings do not select the requested chiral coupling."""


def _series_exp(a: np.ndarray, n: int) -> np.ndarray:
    """Power series of exp(sum a_k s^k) for a series with a_0 = 0, truncated at s^n."""
    b = np.zeros_like(a)
    b[0] = 1.0
    for m in range(1, n + 1):
        acc = np.zeros_like(a[0])
        for k in range(1, m + 1):
            acc = acc + k * a[k] * b[m - k]
        b[m] = acc / m
    return b


def envelope_series(beta, n: int) -> np.ndarray:
    """Coefficients c_m of g exp(-beta g) = sum_m c_m s^m with g = 1/(1+s), m = 0..n.

    ``beta`` (= 2 q^2 / w0^2) may be an array; the result has shape (n+1,) + beta.shape.
    """
    beta = np.asarray(beta, dtype=float)
    alt = np.array([(-1.0) ** m for m in range(n + 1)]).reshape((n + 1,) + (1,) * beta.ndim)
    g_series = alt * np.ones_like(beta)
    # 1 - g = s/(1+s) = sum_{m>=1} (-1)^(m+1) s^m
    one_minus_g = -g_series.copy()
    one_minus_g[0] = 0.0
    e = np.exp(-beta) * _series_exp(beta * one_minus_g, n)
    out = np.zeros_like(e)
    for m in range(n + 1):
        for j in range(m + 1):
            out[m] = out[m] + g_series[j] * e[m - j]
    return out


@dataclass(frozen=True)
class PseudoPotential:
    """u(z) = -sum_n f_2n z^(2n+1)/(2n+1), where F(q, z) ~ sum_n f_2n z^2n at fixed radius.

    ``force_coefficients[n]`` holds f_2n in N/m^(2n) and may carry a trailing
    shape when built for an array of radii.
    """

    expansion_order: int
    force_coefficients: np.ndarray
    reference_radius: np.ndarray

    @property
    def coefficients(self) -> np.ndarray:
        """Potential coefficients of z^(2n+1), in J/m^(2n+1)."""
        n = np.arange(len(self.force_coefficients)).reshape((-1,) + (1,) * (self.force_coefficients.ndim - 1))
        return -self.force_coefficients / (2 * n + 1)

    def force(self, z):
        z = np.asarray(z, dtype=float)
        z2 = z * z
        out = np.zeros(np.broadcast(z, self.force_coefficients[0]).shape)
        for f in self.force_coefficients[::-1]:
            out = out * z2 + f
        return out

    def value(self, z):
        z = np.asarray(z, dtype=float)
        z2 = z * z
        c = self.coefficients
        out = np.zeros(np.broadcast(z, c[0]).shape)
        for coeff in c[::-1]:
            out = out * z2 + coeff
        return out * z

    def slope(self, z):
        return -self.force(z)

    def curvature(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros(np.broadcast(z, self.force_coefficients[0]).shape)
        for n in range(len(self.force_coefficients) - 1, 0, -1):
            out = out + 2 * n * self.force_coefficients[n] * z ** (2 * n - 1)
        return -out


def pseudo_potential(model: ForceModel, q=0.0, order: int = 2) -> PseudoPotential:
    """Pseudo-potential of the axial chiral dissipative force at radius ``q``."""
    if order not in (2, 4, 6, 8):
        raise ValueError("order must be an even integer in 2..8")
    if model.config.polarization.helicity_difference != 0:
        raise RegimeMismatch("pseudo-potential needs a vanishing chiral density (h+ = h-)")
    P = pack_parameters(model)
    q = np.asarray(q, dtype=float)
    beta = 2.0 * q * q / P[P_W02]
    amplitude = -2.0 * P[P_KCHI] * P[P_HSUM] * P[P_IM_X] * P[P_W0]
    n = order // 2
    series = envelope_series(beta, n)
    scale = (1.0 / P[P_ZR] ** 2) ** np.arange(n + 1)
    coeffs = amplitude * series * scale.reshape((-1,) + (1,) * q.ndim)
    return PseudoPotential(order, coeffs, q)
