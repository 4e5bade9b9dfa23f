"""Beam-geometry re-derivation from a target dissipative rate ratio."""

from __future__ import annotations

import numpy as np
from scipy import optimize

from ..forcefield import ForceModel
from ..optics import BeamGeometry
from .extrema import calibrated, locate_extrema
from .rates import dissipative_rates

__all__ = ["with_rayleigh_range", "model_rate_ratio", "fit_rayleigh_range", "rayleigh_range_from_envelope_drop"]


def with_rayleigh_range(model: ForceModel, rayleigh_range: float) -> ForceModel:
    cfg = model.config
    beam = BeamGeometry.from_rayleigh_range(cfg.beam.vacuum_wavelength, rayleigh_range, cfg.fluid, cfg.beam.field_amplitude)
    return model.with_config(type(cfg)(cfg.fluid, beam, cfg.polarization))


def model_rate_ratio(model: ForceModel, barrier_kT: float = 1.0) -> float:
    """rate_ac / rate_ca after calibrating the optical barrier to ``barrier_kT``."""
    m = calibrated(model, barrier_kT * model.kT)
    rates, _ = dissipative_rates(locate_extrema(m), m)
    return rates.ratio


def rayleigh_range_from_envelope_drop(distance: float, relative_drop: float) -> float:
    """z_R such that the on-axis envelope changes by ``relative_drop`` = (distance / z_R)^2."""
    return float(distance / np.sqrt(relative_drop))


def fit_rayleigh_range(model: ForceModel, target_ratio: float, lo: float, hi: float, barrier_kT: float = 1.0, xtol: float = 1e-13) -> float:
    """Rayleigh range in [lo, hi] at which the calibrated dissipative model ratio hits ``target_ratio``."""
    f = lambda zr: model_rate_ratio(with_rayleigh_range(model, zr), barrier_kT) - target_ratio
    return float(optimize.brentq(f, lo, hi, xtol=xtol))
