"""Overdamped Langevin ensembles in the dual-beam trap."""

from .ensemble import (
    DESK_ENSEMBLE,
    DESK_RESIDENCY,
    PAPER_ENSEMBLE,
    PAPER_RESIDENCY,
    AxialHistogram,
    EnantiomerEnsemble,
    EnsembleResult,
    Initializer,
    SimulationPlan,
    StabilityReport,
    TrajectoryRecord,
    UnstableTimeStep,
    dt_stability_check,
    empirical_axial_pdf,
    euler_maruyama_step,
    initial_positions,
    model_for,
    plan_domain,
    run_ensemble,
)
from .kernels import KernelGrid, integrate_chunk
from .sampling import DensityGrid, GridTooCoarse, cylindrical_to_cartesian, model_density_grid, sample_from_density

__all__ = [
    "DESK_ENSEMBLE",
    "DESK_RESIDENCY",
    "PAPER_ENSEMBLE",
    "PAPER_RESIDENCY",
    "AxialHistogram",
    "EnantiomerEnsemble",
    "EnsembleResult",
    "Initializer",
    "SimulationPlan",
    "StabilityReport",
    "TrajectoryRecord",
    "UnstableTimeStep",
    "dt_stability_check",
    "empirical_axial_pdf",
    "euler_maruyama_step",
    "initial_positions",
    "model_for",
    "plan_domain",
    "run_ensemble",
    "KernelGrid",
    "integrate_chunk",
    "DensityGrid",
    "GridTooCoarse",
    "cylindrical_to_cartesian",
    "model_density_grid",
    "sample_from_density",
]
