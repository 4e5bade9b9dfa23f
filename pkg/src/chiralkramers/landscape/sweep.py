"""Chiral versus interference force ratios over the polarization plane."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..forcefield import ForceModel
from ..optics import PolarizationSettings, cos_sin

__all__ = ["SweepResult", "tuned_phase_delay", "polarization_sweep"]


def tuned_phase_delay(h_plus: float, h_minus: float, axis_angle: float) -> float:
    """Phase delay that makes the interference term most negative at z = 0.

    The interference factor at the focus is h2 cos(dt) cos(delta) + h1 sin(dt) sin(delta);
    its minimum over delta sits at atan2(h1 sin dt, h2 cos dt) + pi. The result is
    wrapped to (-pi, pi].
    """
    probe = PolarizationSettings(h_plus, h_minus, 0.0, axis_angle)
    c, s = cos_sin(axis_angle)
    delta = np.arctan2(probe.h1 * s, probe.h2 * c) + np.pi
    return float(np.pi - (np.pi - delta) % (2.0 * np.pi))


@dataclass
class SweepResult:
    mode: str
    helicities: np.ndarray
    axis_angles: np.ndarray
    ratio: np.ndarray
    phase_delays: np.ndarray

    @property
    def log_ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log10(self.ratio)


def _axis_force_maxima(model: ForceModel, pol: PolarizationSettings, mode: str, zs: np.ndarray):
    cfg = model.config
    zr = cfg.rayleigh_range
    k = cfg.wavenumber
    w0 = cfg.peak_trap_density
    p = model.particle
    x = zs / zr
    g = 1.0 / (1.0 + x * x)
    g1 = -2.0 * x * g * g / zr
    cd, sd = cos_sin(pol.phase_delay)
    c, s = cos_sin(pol.axis_angle)
    psi = 2.0 * k * zs - 2.0 * np.arctan(x)
    cphi = cd * np.cos(psi) - sd * np.sin(psi)
    sphi = sd * np.cos(psi) + cd * np.sin(psi)
    inter = pol.h2 * c * cphi + pol.h1 * s * sphi
    inter_p = -pol.h2 * c * sphi + pol.h1 * s * cphi
    f_inter = p.alpha.real * w0 * (g1 * inter + g * inter_p * (2.0 * k - 2.0 * g / zr))
    if mode == "reactive":
        f_chi = -p.chi.real * pol.helicity_difference * w0 * g1
    else:
        f_chi = -2.0 * cfg.omega * cfg.sqrt_eps_mu * pol.helicity_sum * p.chi.imag * w0 * g
    return float(np.max(np.abs(f_chi))), float(np.max(np.abs(f_inter)))


def polarization_sweep(model: ForceModel, helicities, axis_angles, mode: str, half_width: float | None = None, n_z: int = 2001) -> SweepResult:
    """max_z |F_chi| / max_z |F_inter| on the axis for each (h+, axis angle).

    ``reactive`` sets h- = -h+, ``dissipative`` sets h- = h+. The phase delay is
    re-tuned at each grid point with :func:`tuned_phase_delay`. Points without
    interference give +inf (or nan when the chiral force vanishes as well).
    """
    if mode not in ("reactive", "dissipative"):
        raise ValueError("mode must be 'reactive' or 'dissipative'")
    cfg = model.config
    if half_width is None:
        half_width = cfg.beam.vacuum_wavelength / (2.0 * cfg.fluid.refractive_index)
    zs = np.linspace(-half_width, half_width, n_z)
    hs = np.asarray(helicities, dtype=float)
    dts = np.asarray(axis_angles, dtype=float)
    ratio = np.empty((hs.size, dts.size))
    deltas = np.empty_like(ratio)
    for i, h in enumerate(hs):
        h_minus = -h if mode == "reactive" else h
        for j, dt in enumerate(dts):
            delta = tuned_phase_delay(h, h_minus, dt)
            pol = PolarizationSettings(h, h_minus, delta, dt)
            f_chi, f_inter = _axis_force_maxima(model, pol, mode, zs)
            deltas[i, j] = delta
            if f_inter == 0.0:
                ratio[i, j] = np.inf if f_chi > 0 else np.nan
            else:
                ratio[i, j] = f_chi / f_inter
    return SweepResult(mode, hs, dts, ratio, deltas)
