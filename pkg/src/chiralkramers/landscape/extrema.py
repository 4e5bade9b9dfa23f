"""Wells, barrier and intensity calibration of the on-axis double well."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from ..forcefield import ForceModel
from .axial import AxialPotential
from .pseudo import PseudoPotential

__all__ = ["BistableLandscape", "NotBistable", "locate_extrema", "calibrate_intensity", "calibrated", "scan_extrema"]


class NotBistable(ValueError):
    """The on-axis potential does not have exactly two wells around one barrier."""


@dataclass(frozen=True)
class BistableLandscape:
    z_a: float
    z_b: float
    z_c: float
    curvature_a: float
    curvature_b: float
    curvature_c: float
    barrier_ab: float
    barrier_cb: float
    kT: float

    @property
    def well_separation(self) -> float:
        return self.z_c - self.z_a

    def sigma(self, well: str) -> float:
        """Thermal width sqrt(kT / curvature) at the named extremum ('a', 'b' or 'c')."""
        return float(np.sqrt(self.kT / getattr(self, f"curvature_{well}")))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["well_separation"] = self.well_separation
        return d


def scan_extrema(potential: AxialPotential, half_width: float, n: int = 8001):
    """Roots of the slope on [-half_width, half_width], refined by Brent's method."""
    zs = np.linspace(-half_width, half_width, n)
    slope = potential.slope(zs)
    sign = np.sign(slope)
    roots = []
    for i in np.nonzero(sign[:-1] * sign[1:] <= 0)[0]:
        lo, hi = zs[i], zs[i + 1]
        if sign[i] == 0:
            root = lo
        elif sign[i + 1] == 0:
            continue
        else:
            root = optimize.brentq(lambda z: float(potential.slope(z)), lo, hi, xtol=1e-24, rtol=4 * np.finfo(float).eps, maxiter=500)
        if not roots or root - roots[-1] > 1e-15:
            roots.append(float(root))
    return roots


def locate_extrema(
    model: ForceModel,
    chiral: bool = False,
    pseudo: PseudoPotential | None = None,
    half_width: float | None = None,
) -> BistableLandscape:
    """Find the two wells and the barrier of the effective on-axis potential.

    The scan covers one fringe period, |z| <= lambda / (2 n), unless
    ``half_width`` is given.
    """
    potential = AxialPotential(model, chiral=chiral, pseudo=pseudo)
    if half_width is None:
        cfg = model.config
        half_width = cfg.beam.vacuum_wavelength / (2.0 * cfg.fluid.refractive_index)
    roots = scan_extrema(potential, half_width)
    if len(roots) != 3:
        raise NotBistable(f"found {len(roots)} extrema of the on-axis potential in |z| <= {half_width:.3e} m")
    z_a, z_b, z_c = roots
    curv = potential.curvature(np.array(roots))
    if not (curv[0] > 0 and curv[1] < 0 and curv[2] > 0):
        raise NotBistable(f"extrema curvatures {curv} do not form a well-barrier-well sequence")
    u = potential.value(np.array(roots))
    return BistableLandscape(
        z_a=z_a,
        z_b=z_b,
        z_c=z_c,
        curvature_a=float(curv[0]),
        curvature_b=float(-curv[1]),
        curvature_c=float(curv[2]),
        barrier_ab=float(u[1] - u[0]),
        barrier_cb=float(u[1] - u[2]),
        kT=model.kT,
    )


def calibrate_intensity(model: ForceModel, target_barrier: float) -> float:
    """Field amplitude that sets the A-to-B barrier of the optical potential to ``target_barrier`` (J).

    Every term of the potential is quadratic in the field, so a single rescaling is exact.
    """
    if not target_barrier > 0:
        raise ValueError("target barrier must be > 0")
    current = locate_extrema(model).barrier_ab
    return float(model.config.beam.field_amplitude * np.sqrt(target_barrier / current))


def calibrated(model: ForceModel, target_barrier: float) -> ForceModel:
    """Copy of ``model`` with its field amplitude calibrated to ``target_barrier``."""
    e0 = calibrate_intensity(model, target_barrier)
    return model.with_config(model.config.with_field_amplitude(e0))
