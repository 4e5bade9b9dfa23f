"""Chiral nanoparticles in a counter-propagating optical double-well trap.

Subpackages and modules, from fields to statistics:

``optics``
    Two-beam Gaussian fields, energy and chirality densities.
``particle``
    Dipolar polarizabilities of chiral spheres.
``forcefield``
    Optical and chiral forces and potentials.
``landscape``
    On-axis double-well analytics, Kramers rates and stationary densities.
``simulator``
    Overdamped Langevin ensembles with a counter-based random stream.
``statistics``
    Jump detection, residency-time fits and chirality extraction.
``config`` and ``cli``
    Configuration files and the ``chiralkramers`` command.
"""

from .config import ExperimentConfig, ParseError, ValidationError, load_config
from .forcefield import ForceModel
from .optics import BeamGeometry, FluidMedium, PolarizationSettings, TrapConfiguration
from .particle import MaterialOptics, Polarizabilities, chiral_sphere

__version__ = "0.1.0"

__all__ = [
    "BeamGeometry",
    "ExperimentConfig",
    "FluidMedium",
    "ForceModel",
    "MaterialOptics",
    "ParseError",
    "Polarizabilities",
    "PolarizationSettings",
    "TrapConfiguration",
    "ValidationError",
    "chiral_sphere",
    "load_config",
]
