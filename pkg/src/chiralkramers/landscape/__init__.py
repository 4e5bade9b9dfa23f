"""One-dimensional Kramers analytics of the on-axis double well."""

from .axial import AxialPotential
from .extrema import BistableLandscape, NotBistable, calibrate_intensity, calibrated, locate_extrema
from .geometry import fit_rayleigh_range, model_rate_ratio, rayleigh_range_from_envelope_drop, with_rayleigh_range
from .pdf import (
    AxialMarginal,
    AxialPDF,
    Domain,
    EffectivePotential,
    PopulationIntegrals,
    QuadratureNotConverged,
    axial_marginal,
    effective_potential,
    population_integrals,
    population_ratio_3d,
    stationary_pdf_axis,
)
from .pseudo import PseudoPotential, RegimeMismatch, pseudo_potential
from .rates import (
    ChiralThermodynamics,
    EscapeRates,
    check_regime,
    chiral_potential_shift,
    dissipative_force_on_axis,
    dissipative_rates,
    kramers_rates,
    quadrature_rates,
    reactive_rates,
    regime_of,
)
from .sweep import SweepResult, polarization_sweep, tuned_phase_delay

__all__ = [
    "AxialPotential",
    "BistableLandscape",
    "NotBistable",
    "calibrate_intensity",
    "calibrated",
    "locate_extrema",
    "fit_rayleigh_range",
    "model_rate_ratio",
    "rayleigh_range_from_envelope_drop",
    "with_rayleigh_range",
    "AxialMarginal",
    "AxialPDF",
    "Domain",
    "PopulationIntegrals",
    "EffectivePotential",
    "QuadratureNotConverged",
    "axial_marginal",
    "effective_potential",
    "population_integrals",
    "population_ratio_3d",
    "stationary_pdf_axis",
    "PseudoPotential",
    "RegimeMismatch",
    "pseudo_potential",
    "ChiralThermodynamics",
    "EscapeRates",
    "check_regime",
    "chiral_potential_shift",
    "dissipative_force_on_axis",
    "dissipative_rates",
    "kramers_rates",
    "quadrature_rates",
    "reactive_rates",
    "regime_of",
    "SweepResult",
    "polarization_sweep",
    "tuned_phase_delay",
]
