"""Experiment configuration files.

The format is INI-style (``configparser``) with the unit spelled out in every
key name, e.g. ``radius_nm`` or ``dt_ps``. Complex numbers are written as
``[re, im]``. A ``[particle]`` section may pull its optical constants from a
separate material file via ``material_file``; relative paths resolve against
the including file, and bare names also resolve against the shipped configs.

Canonical internal units are SI. Loading validates physical ranges and the
regime selection rule (reactive: h+ = -h-, dissipative: h+ = h-, achiral:
h+ = h- = 0), so a file never describes a chiral environment other than the
one it names.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .forcefield import ForceModel
from .landscape import calibrated
from .optics import BeamGeometry, FluidMedium, PolarizationSettings, TrapConfiguration
from .particle import MaterialOptics, Polarizabilities, chiral_sphere
from .simulator import DESK_ENSEMBLE, DESK_RESIDENCY, PAPER_ENSEMBLE, PAPER_RESIDENCY, Initializer, SimulationPlan

__all__ = [
    "ParseError",
    "ValidationError",
    "ExperimentConfig",
    "AnalysisOptions",
    "load_config",
    "parse_config",
    "shipped_config",
    "shipped_config_names",
    "PRESETS",
]

REGIMES = ("achiral", "reactive", "dissipative")
PRESETS = {
    ("ensemble", "paper"): PAPER_ENSEMBLE,
    ("ensemble", "desk"): DESK_ENSEMBLE,
    ("residency", "paper"): PAPER_RESIDENCY,
    ("residency", "desk"): DESK_RESIDENCY,
}


class ParseError(ValueError):
    """Malformed file or value, with the offending line and field when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None, field_name: str | None = None):
        self.path = path
        self.line = line
        self.field = field_name
        where = ":".join(str(p) for p in (path, line) if p is not None)
        prefix = f"{where}: " if where else ""
        tag = f"[{field_name}] " if field_name else ""
        super().__init__(f"{prefix}{tag}{message}")


class ValidationError(ValueError):
    """A parsed configuration violates a physical or consistency invariant."""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


def shipped_config_names() -> list[str]:
    root = resources.files("chiralkramers") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def shipped_config(name: str) -> Path:
    """Filesystem path of a shipped configuration."""
    path = resources.files("chiralkramers") / "configs" / name
    if not path.is_file():
        raise FileNotFoundError(f"no shipped config named {name!r}")
    return Path(str(path))


class _Reader:
    """Typed access to a parsed file with line-aware errors."""

    def __init__(self, parser: configparser.ConfigParser, text: str, path: str | None):
        self.parser = parser
        self.lines = text.splitlines()
        self.path = path
        self.used: set[tuple[str, str]] = set()

    def line_of(self, section: str, key: str | None = None) -> int | None:
        in_section = False
        for n, raw in enumerate(self.lines, start=1):
            s = raw.strip()
            if s.startswith("[") and s.endswith("]"):
                in_section = s[1:-1].strip() == section
                if in_section and key is None:
                    return n
                continue
            if in_section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
                return n
        return None

    def error(self, section: str, key: str | None, message: str) -> ParseError:
        name = f"{section}.{key}" if key else section
        return ParseError(message, self.path, self.line_of(section, key), name)

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str, default=None, required: bool = False):
        if not self.parser.has_section(section):
            if required:
                raise ParseError("missing section", self.path, None, section)
            return default
        if not self.parser.has_option(section, key):
            if required:
                raise self.error(section, None, f"missing key {key!r}")
            return default
        self.used.add((section, key))
        return self.parser.get(section, key).strip()

    def number(self, section: str, key: str, default=None, required: bool = False) -> float | None:
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            raise self.error(section, key, f"expected a number, got {raw!r}") from None
        if not np.isfinite(value):
            raise self.error(section, key, f"value must be finite, got {raw!r}")
        return value

    def integer(self, section: str, key: str, default=None, required: bool = False) -> int | None:
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            raise self.error(section, key, f"expected an integer, got {raw!r}") from None
        if not value.is_integer():
            raise self.error(section, key, f"expected an integer, got {raw!r}")
        return int(raw) if re.fullmatch(r"[+-]?\d+", raw) else int(value)

    def complex(self, section: str, key: str, default=None, required: bool = False) -> complex | None:
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = None
        if isinstance(value, (int, float)):
            return complex(value, 0.0)
        if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value)):
            raise self.error(section, key, f"expected [re, im], got {raw!r}")
        return complex(float(value[0]), float(value[1]))

    def boolean(self, section: str, key: str, default: bool) -> bool:
        raw = self.raw(section, key, None)
        if raw is None:
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError:
            raise self.error(section, key, f"expected true/false, got {raw!r}") from None

    def choice(self, section: str, key: str, options, default=None, required: bool = False) -> str | None:
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        value = raw.lower()
        if value not in options:
            raise self.error(section, key, f"expected one of {sorted(options)}, got {raw!r}")
        return value


def _angle(reader: _Reader, section: str, stem: str, default: float | None = None) -> float:
    keys = {f"{stem}_rad": 1.0, f"{stem}_pi": np.pi, f"{stem}_deg": np.pi / 180.0}
    present = [k for k in keys if reader.has(section, k)]
    if len(present) > 1:
        raise reader.error(section, present[1], f"give only one of {sorted(keys)}")
    if not present:
        if default is None:
            raise reader.error(section, None, f"missing one of {sorted(keys)}")
        return default
    return float(reader.number(section, present[0]) * keys[present[0]])


@dataclass(frozen=True)
class AnalysisOptions:
    hysteresis_sigma: float | None = None  # m, None derives it from the barrier curvature
    min_events: int = 10
    min_bins: int = 8


@dataclass
class ExperimentConfig:
    fluid: FluidMedium
    beam: BeamGeometry
    polarization: PolarizationSettings
    material: MaterialOptics
    radius: float
    chirality_ratio: float
    enantiomer: str
    regime: str
    include_magnetic: bool = False
    include_azimuthal: bool = True
    drag_factor: float = 2.0
    target_barrier_kT: float | None = None
    plan: SimulationPlan | None = None
    residency_plan: SimulationPlan | None = None
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    config_hash: str = ""
    source: str | None = None
    text: str = ""
    material_source: str | None = None
    _model: ForceModel | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def trap(self) -> TrapConfiguration:
        return TrapConfiguration(self.fluid, self.beam, self.polarization)

    @property
    def particle(self) -> Polarizabilities:
        hand = "left" if self.enantiomer == "racemic" else self.enantiomer
        return chiral_sphere(self.radius, self.material, self.fluid, self.chirality_ratio, hand)

    def force_model(self) -> ForceModel:
        """Force model of the configured enantiomer (left for racemic files).

        When the file sets a target barrier instead of a field amplitude the
        amplitude is calibrated here.
        """
        if self._model is not None:
            return self._model
        model = ForceModel(
            self.trap,
            self.particle,
            include_magnetic=self.include_magnetic,
            include_azimuthal=self.include_azimuthal,
            drag_factor=self.drag_factor,
        )
        if self.target_barrier_kT is not None:
            model = calibrated(model, self.target_barrier_kT * self.fluid.kT)
        self._model = model
        return model

    def simulation_plan(self, kind: str = "ensemble", preset: str | None = None, **overrides) -> SimulationPlan:
        """Plan from the file, or from a named preset with this file's regime, enantiomer and seed."""
        base = self.plan if kind == "ensemble" else self.residency_plan
        seed = base.master_seed if base else 0
        if preset in (None, "config"):
            if base is None:
                raise ValidationError("plan-present", f"the file has no [{'simulation' if kind == 'ensemble' else 'residency'}] section; pick a preset")
            plan = base
        else:
            values = dict(PRESETS[(kind, preset)])
            values.setdefault("enantiomer", base.enantiomer if base else self.enantiomer)
            plan = SimulationPlan(regime=self.regime, master_seed=seed, **values)
            if base is not None:
                plan = plan.scaled(stored_trajectories=base.stored_trajectories, record_stride=base.record_stride,
                                   hysteresis_sigma=base.hysteresis_sigma)
        if self.analysis.hysteresis_sigma is not None and plan.hysteresis_sigma is None:
            plan = plan.scaled(hysteresis_sigma=self.analysis.hysteresis_sigma)
        return plan.scaled(**overrides) if overrides else plan

    def derived(self) -> dict:
        """Resolved quantities echoed into reports."""
        trap = self.trap
        p = self.particle
        model = self.force_model()
        return {
            "wavenumber_per_m": trap.wavenumber,
            "rayleigh_range_m": trap.rayleigh_range,
            "waist_radius_m": trap.waist_radius,
            "field_amplitude_v_per_m": model.config.beam.field_amplitude,
            "h1": self.polarization.h1,
            "h2": self.polarization.h2,
            "alpha_m3": [p.alpha.real, p.alpha.imag],
            "beta_m3": [p.beta.real, p.beta.imag],
            "chi_m3": [p.chi.real, p.chi.imag],
            "drag_kg_per_s": model.drag,
            "kT_J": self.fluid.kT,
        }


def _canonical(parser: configparser.ConfigParser, material: configparser.ConfigParser | None) -> str:
    parts = []
    for src in (parser, material):
        if src is None:
            continue
        for section in sorted(src.sections()):
            for key in sorted(src.options(section)):
                if section == "particle" and key == "material_file":
                    continue
                parts.append(f"{section}.{key}={src.get(section, key).strip()}")
    return "\n".join(parts)


def _read_parser(text: str, path: str | None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path or "<string>")
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("text before the first [section] header", path, exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        key = getattr(exc, "option", None)
        raise ParseError(str(exc).split(":")[-1].strip() or "duplicate entry", path, exc.lineno, f"{exc.section}.{key}" if key else exc.section) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("line is neither a section header nor key = value", path, line) from None
    return parser


def _resolve_include(name: str, base: Path | None) -> Path:
    candidate = Path(name)
    if not candidate.is_absolute() and base is not None:
        local = base.parent / candidate
        if local.is_file():
            return local
    if candidate.is_file():
        return candidate
    return shipped_config(candidate.name)


def _require(condition: bool, invariant: str, message: str):
    if not condition:
        raise ValidationError(invariant, message)


def parse_config(text: str, path: str | None = None) -> ExperimentConfig:
    """Parse and validate configuration text; ``path`` anchors includes and error messages."""
    parser = _read_parser(text, path)
    r = _Reader(parser, text, path)

    # fluid
    n_index = r.number("fluid", "refractive_index", required=True)
    viscosity = r.number("fluid", "viscosity_pa_s", required=True)
    temperature = r.number("fluid", "temperature_k", required=True)
    _require(n_index > 0, "positive-refractive-index", f"refractive_index = {n_index}")
    _require(viscosity > 0, "positive-viscosity", f"viscosity_pa_s = {viscosity}")
    _require(temperature > 0, "positive-temperature", f"temperature_k = {temperature}")
    fluid = FluidMedium.from_index(n_index, viscosity, temperature)

    # beam
    wavelength = r.number("beam", "vacuum_wavelength_nm", required=True)
    _require(wavelength > 0, "positive-wavelength", f"vacuum_wavelength_nm = {wavelength}")
    wavelength *= 1e-9
    waist = r.number("beam", "waist_radius_nm")
    zr = r.number("beam", "rayleigh_range_um")
    if (waist is None) == (zr is None):
        raise r.error("beam", None, "give exactly one of waist_radius_nm, rayleigh_range_um")
    amplitude = r.number("beam", "field_amplitude_v_per_m")
    barrier = r.number("beam", "barrier_kt")
    if amplitude is None and barrier is None:
        raise r.error("beam", None, "give field_amplitude_v_per_m or barrier_kt")
    if amplitude is not None:
        _require(amplitude > 0, "positive-field-amplitude", f"field_amplitude_v_per_m = {amplitude}")
    if barrier is not None:
        _require(barrier > 0, "positive-barrier", f"barrier_kt = {barrier}")
    e0 = amplitude if amplitude is not None else 1.0
    if waist is not None:
        _require(waist > 0, "positive-waist", f"waist_radius_nm = {waist}")
        beam = BeamGeometry(wavelength, waist * 1e-9, e0)
    else:
        _require(zr > 0, "positive-rayleigh-range", f"rayleigh_range_um = {zr}")
        beam = BeamGeometry.from_rayleigh_range(wavelength, zr * 1e-6, fluid, e0)

    # polarization
    h_plus = r.number("polarization", "helicity_plus", required=True)
    h_minus = r.number("polarization", "helicity_minus", required=True)
    for key, h in (("helicity_plus", h_plus), ("helicity_minus", h_minus)):
        _require(-1.0 <= h <= 1.0, "helicity-range", f"{key} = {h} is outside [-1, 1]")
    delta = _angle(r, "polarization", "phase_delay")
    axis = _angle(r, "polarization", "axis_angle")
    pol = PolarizationSettings(h_plus, h_minus, delta, axis)

    # particle
    radius = r.number("particle", "radius_nm", required=True)
    _require(radius > 0, "positive-radius", f"radius_nm = {radius}")
    ratio = r.number("particle", "chirality_ratio", 0.0)
    _require(ratio >= 0, "non-negative-chirality-ratio", f"chirality_ratio = {ratio}")
    enantiomer = r.choice("particle", "enantiomer", {"left", "right", "racemic"}, "left")
    material_parser = None
    material_source = None
    include = r.raw("particle", "material_file")
    if include is not None:
        if r.has("particle", "permittivity"):
            raise r.error("particle", "permittivity", "give either material_file or permittivity, not both")
        try:
            mpath = _resolve_include(include, Path(path) if path else None)
        except FileNotFoundError:
            raise r.error("particle", "material_file", f"cannot find {include!r}") from None
        mtext = mpath.read_text()
        material_parser = _read_parser(mtext, str(mpath))
        mr = _Reader(material_parser, mtext, str(mpath))
        eps = mr.complex("material", "permittivity", required=True)
        mu = mr.complex("material", "permeability", 1.0 + 0j)
        material_source = str(mpath)
    else:
        eps = r.complex("particle", "permittivity", required=True)
        mu = r.complex("particle", "permeability", 1.0 + 0j)
    material = MaterialOptics(eps, mu)

    # model
    regime = r.choice("model", "regime", set(REGIMES), required=True)
    if regime == "achiral":
        _require(h_plus == 0.0 and h_minus == 0.0, "regime-selection-rule", f"achiral needs h+ = h- = 0, got {h_plus}, {h_minus}")
    elif regime == "reactive":
        _require(h_plus == -h_minus and h_plus != 0.0, "regime-selection-rule", f"reactive needs h+ = -h- != 0, got {h_plus}, {h_minus}")
    else:
        _require(h_plus == h_minus and h_plus != 0.0, "regime-selection-rule", f"dissipative needs h+ = h- != 0, got {h_plus}, {h_minus}")
    drag_factor = r.number("model", "drag_factor", 2.0)
    _require(drag_factor > 0, "positive-drag", f"drag_factor = {drag_factor}")

    cfg = ExperimentConfig(
        fluid=fluid,
        beam=beam,
        polarization=pol,
        material=material,
        radius=radius * 1e-9,
        chirality_ratio=ratio,
        enantiomer=enantiomer,
        regime=regime,
        include_magnetic=r.boolean("model", "include_magnetic", False),
        include_azimuthal=r.boolean("model", "include_azimuthal", True),
        drag_factor=drag_factor,
        target_barrier_kT=barrier if amplitude is None else None,
        source=path,
        text=text,
        material_source=material_source,
    )

    sigma_nm = r.raw("analysis", "hysteresis_sigma_nm")
    sigma = None
    if sigma_nm is not None and sigma_nm.lower() != "auto":
        sigma = r.number("analysis", "hysteresis_sigma_nm")
        _require(sigma > 0, "positive-hysteresis", f"hysteresis_sigma_nm = {sigma}")
        sigma *= 1e-9
    cfg.analysis = AnalysisOptions(
        hysteresis_sigma=sigma,
        min_events=r.integer("analysis", "min_events", 10),
        min_bins=r.integer("analysis", "min_bins", 8),
    )
    cfg.plan = _plan_section(r, "simulation", regime, enantiomer, sigma)
    cfg.residency_plan = _plan_section(r, "residency", regime, enantiomer, sigma)

    known = {
        "fluid": {"refractive_index", "viscosity_pa_s", "temperature_k"},
        "beam": {"vacuum_wavelength_nm", "waist_radius_nm", "rayleigh_range_um", "field_amplitude_v_per_m", "barrier_kt"},
        "polarization": {"helicity_plus", "helicity_minus"} | {f"{s}_{u}" for s in ("phase_delay", "axis_angle") for u in ("rad", "pi", "deg")},
        "particle": {"radius_nm", "chirality_ratio", "enantiomer", "material_file", "permittivity", "permeability"},
        "model": {"regime", "include_magnetic", "include_azimuthal", "drag_factor"},
        "analysis": {"hysteresis_sigma_nm", "min_events", "min_bins"},
        "simulation": set(_PLAN_KEYS),
        "residency": set(_PLAN_KEYS),
        "meta": None,
    }
    for section in parser.sections():
        if section not in known:
            raise r.error(section, None, "unknown section")
        if known[section] is None:
            continue
        for key in parser.options(section):
            if key not in known[section]:
                raise r.error(section, key, "unknown key")

    digest = hashlib.sha256(_canonical(parser, material_parser).encode()).hexdigest()
    cfg.config_hash = digest
    return cfg


_PLAN_KEYS = (
    "dt_ps",
    "n_steps",
    "n_trajectories",
    "master_seed",
    "initializer",
    "initial_point_nm",
    "initial_well",
    "record_stride",
    "stored_trajectories",
    "enantiomer",
    "allow_unstable_dt",
    "n_z_bins",
    "n_q_bins",
    "chunk_size",
)


def _plan_section(r: _Reader, section: str, regime: str, enantiomer: str, sigma) -> SimulationPlan | None:
    if not r.parser.has_section(section):
        return None
    kind = r.choice(section, "initializer", {"model_pdf", "fixed_point", "uniform_well"}, "model_pdf")
    if kind == "fixed_point":
        raw = r.raw(section, "initial_point_nm", required=True)
        try:
            point = json.loads(raw)
            x, y, z = (float(v) * 1e-9 for v in point)
        except (json.JSONDecodeError, TypeError, ValueError):
            raise r.error(section, "initial_point_nm", f"expected [x, y, z], got {raw!r}") from None
        init = Initializer.fixed_point(x, y, z)
    elif kind == "uniform_well":
        init = Initializer.uniform_well(r.choice(section, "initial_well", {"a", "c"}, required=True).upper())
    else:
        init = Initializer.model_pdf()
    dt = r.number(section, "dt_ps", required=True)
    seed = r.integer(section, "master_seed", 0)
    try:
        return SimulationPlan(
            time_step=dt * 1e-12,
            n_steps=r.integer(section, "n_steps", required=True),
            n_trajectories=r.integer(section, "n_trajectories", required=True),
            master_seed=seed,
            initializer=init,
            record_stride=r.integer(section, "record_stride", 1),
            regime=regime,
            enantiomer=r.choice(section, "enantiomer", {"left", "right", "racemic"}, enantiomer),
            stored_trajectories=r.integer(section, "stored_trajectories", 0),
            hysteresis_sigma=sigma,
            n_z_bins=r.integer(section, "n_z_bins", 200),
            n_q_bins=r.integer(section, "n_q_bins", 32),
            chunk_size=r.integer(section, "chunk_size", 1024),
            allow_unstable_dt=r.boolean(section, "allow_unstable_dt", False),
        )
    except ValueError as exc:
        raise ValidationError(f"{section}-plan", str(exc)) from None


def load_config(path) -> ExperimentConfig:
    """Read, parse and validate a configuration file."""
    p = Path(path)
    if not p.is_file():
        try:
            p = shipped_config(str(path))
        except FileNotFoundError:
            raise ParseError("file not found", str(path)) from None
    return parse_config(p.read_text(), str(p))
