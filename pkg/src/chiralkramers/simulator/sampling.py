"""Inverse-transform sampling of initial positions from a tabulated p(q, z)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..forcefield import ForceModel
from ..landscape import Domain, EffectivePotential

__all__ = ["GridTooCoarse", "DensityGrid", "model_density_grid", "sample_from_density", "cylindrical_to_cartesian"]


class GridTooCoarse(ValueError):
    """The tabulated density is too coarse for its CDF to be inverted within one grid cell."""


@dataclass
class DensityGrid:
    """Mass density m(q, z) = 2 pi q p(q, z) on a tensor grid, shape (len(q), len(z))."""

    q: np.ndarray
    z: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        self.mass = np.asarray(self.mass, dtype=float)
        if self.mass.shape != (self.q.size, self.z.size):
            raise ValueError("mass must have shape (len(q), len(z))")
        if np.any(self.mass < 0) or not np.all(np.isfinite(self.mass)):
            raise ValueError("mass must be finite and non-negative")
        if np.any(np.diff(self.q) <= 0) or np.any(np.diff(self.z) <= 0):
            raise ValueError("grid nodes must be strictly increasing")


def model_density_grid(model: ForceModel, regime: str, domain: Domain | None = None, n_q: int = 129, n_z: int = 2049, pseudo_order: int = 2) -> DensityGrid:
    """Boltzmann weight of the effective potential tabulated over the quadrature domain."""
    phi = EffectivePotential(model, regime, pseudo_order)
    dom = domain or phi.domain()
    q = np.linspace(0.0, dom.q_max, n_q)
    z = np.linspace(dom.z_lo, dom.z_hi, n_z)
    mass = 2.0 * np.pi * q[:, None] * np.exp(-phi(q[:, None], z[None, :]) / phi.kT)
    return DensityGrid(q, z, mass)


def _cumulative(values, x, axis=-1):
    return integrate.cumulative_trapezoid(values, x=x, axis=axis, initial=0.0)


def _resolution_residual(values, x):
    """Largest gap between trapezoid and Simpson CDFs, in units of the heaviest cell mass."""
    if x.size < 3:
        return 0.0
    trap = _cumulative(values, x)
    simp = np.concatenate([[0.0], integrate.cumulative_simpson(values, x=x)])
    heaviest = float(np.max(0.5 * (values[1:] + values[:-1]) * np.diff(x)))
    if not heaviest > 0:
        return 0.0
    return float(np.max(np.abs(trap - simp)) / heaviest)


def _invert_rows(cdf_rows, nodes, u):
    """Invert piecewise-linear CDFs, one row per sample."""
    idx = np.sum(cdf_rows < u[:, None], axis=1)
    idx = np.clip(idx, 1, nodes.size - 1)
    rows = np.arange(u.size)
    c0 = cdf_rows[rows, idx - 1]
    c1 = cdf_rows[rows, idx]
    width = c1 - c0
    frac = np.where(width > 0, (u - c0) / np.where(width > 0, width, 1.0), 0.5)
    return nodes[idx - 1] + np.clip(frac, 0.0, 1.0) * (nodes[idx] - nodes[idx - 1])


def sample_from_density(grid: DensityGrid, uniforms: np.ndarray, block: int = 4096, max_residual: float = 1.0):
    """Map uniforms of shape (n, 3) to cylindrical samples (q, theta, z).

    z follows the inverse of the radially integrated CDF, q the inverse of the
    conditional CDF at the sampled z (linear blend of the two neighbouring
    grid rows), theta = 2 pi u. Raises :class:`GridTooCoarse` when the
    trapezoid CDF differs from a Simpson CDF by more than ``max_residual`` grid
    cells, in z or in any well-populated q row.
    """
    u = np.asarray(uniforms, dtype=float)
    if u.ndim != 2 or u.shape[1] != 3:
        raise ValueError("uniforms must have shape (n, 3)")
    marginal = np.trapezoid(grid.mass, grid.q, axis=0)
    total = float(np.trapezoid(marginal, grid.z))
    if not total > 0:
        raise GridTooCoarse("density integrates to zero on the grid")
    residual_z = _resolution_residual(marginal, grid.z)
    if residual_z > max_residual:
        raise GridTooCoarse(f"axial CDF inversion residual {residual_z:.2f} cells exceeds {max_residual}")
    heavy = marginal > 1e-3 * marginal.max()
    residual_q = max(_resolution_residual(grid.mass[:, j], grid.q) for j in np.nonzero(heavy)[0])
    if residual_q > max_residual:
        raise GridTooCoarse(f"radial CDF inversion residual {residual_q:.2f} cells exceeds {max_residual}")

    cdf_z = _cumulative(marginal, grid.z) / total
    z = np.interp(u[:, 0], cdf_z, grid.z)
    z = np.clip(z, grid.z[0], grid.z[-1])

    row_mass = _cumulative(grid.mass, grid.q, axis=0)
    row_total = row_mass[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(row_total > 0, row_mass / row_total, np.linspace(0.0, 1.0, grid.q.size)[:, None])
    cond = cond.T  # (n_z, n_q)

    cell = np.clip(np.searchsorted(grid.z, z, side="right") - 1, 0, grid.z.size - 2)
    weight = (z - grid.z[cell]) / (grid.z[cell + 1] - grid.z[cell])
    # a row with no mass cannot host the sample, lean fully on its neighbour
    weight = np.where(row_total[cell] > 0, weight, 1.0)
    weight = np.where(row_total[cell + 1] > 0, weight, 0.0)
    q = np.empty(u.shape[0])
    for start in range(0, u.shape[0], block):
        sl = slice(start, start + block)
        blended = (1.0 - weight[sl, None]) * cond[cell[sl]] + weight[sl, None] * cond[cell[sl] + 1]
        q[sl] = _invert_rows(blended, grid.q, u[sl, 1])
    theta = 2.0 * np.pi * u[:, 2]
    return q, theta, z


def cylindrical_to_cartesian(q, theta, z) -> np.ndarray:
    return np.stack([q * np.cos(theta), q * np.sin(theta), np.asarray(z, dtype=float)], axis=-1)
