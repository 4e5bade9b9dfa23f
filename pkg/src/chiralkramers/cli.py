"""Command-line interface.

Subcommands: ``field-map``, ``calibrate``, ``rates``, ``simulate``,
``residency``, ``sweep`` and ``verify``. Every subcommand writes its outputs
atomically and a run manifest (config hash, seed, versions, wall time) next to
them. Exit codes: 0 success, 1 invalid input, 2 numerical failure,
3 failed ``verify`` check.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np
from scipy import stats

from . import _accel
from .config import ExperimentConfig, ParseError, ValidationError, load_config
from .forcefield import potential, total_force
from .landscape import (
    NotBistable,
    QuadratureNotConverged,
    RegimeMismatch,
    axial_marginal,
    dissipative_force_on_axis,
    dissipative_rates,
    kramers_rates,
    locate_extrema,
    polarization_sweep,
    population_ratio_3d,
    quadrature_rates,
    reactive_rates,
)
from .optics import chiral_density, chiral_flux, energy_densities, poynting
from .output import (
    atomic_write_json,
    atomic_write_text,
    axial_histogram_csv,
    csv_text,
    occupancy_csv,
    radial_axial_histogram_csv,
    read_csv_table,
    run_manifest,
    trajectory_csv,
    trajectory_metadata,
)
from .particle import NoSolution, SingularDenominator
from .simulator import GridTooCoarse, SimulationPlan, UnstableTimeStep, model_for, run_ensemble
from .statistics import (
    WELL_A,
    WELL_C,
    HysteresisConfig,
    InconsistentWells,
    InsufficientEvents,
    TrajectoryEvents,
    detect_jumps,
    events_csv,
    fit_report_jsonl,
    residency_distribution,
    residency_histogram_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3

NUMERICAL_ERRORS = (
    NotBistable,
    QuadratureNotConverged,
    RegimeMismatch,
    UnstableTimeStep,
    InsufficientEvents,
    InconsistentWells,
    GridTooCoarse,
    NoSolution,
    SingularDenominator,
    ArithmeticError,
)

# scale of the ensemble used by ``verify`` for the PDF overlay
VERIFY_ENSEMBLES = {
    "desk": dict(time_step=95.4e-12, n_steps=100_000, n_trajectories=256),
    "paper": dict(time_step=95.4e-12, n_steps=50_000, n_trajectories=10_000),
}


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _grid_pair(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[,x]\s*(\d+)\s*", text)
    if not m or int(m.group(1)) < 1 or int(m.group(2)) < 1:
        raise argparse.ArgumentTypeError(f"expected two positive integers like 64,64, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _barrier(text: str) -> float:
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*(kt|kT|KT)?\s*", text)
    try:
        value = float(m.group(1)) if m else float("nan")
    except ValueError:
        value = float("nan")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive barrier like 1.0kT, got {text!r}")
    return value


def _manifest_path(out: Path | None, explicit: str | None) -> Path | None:
    if explicit:
        return Path(explicit)
    if out is None:
        return None
    if out.suffix == "" or out.is_dir():
        return out / "manifest.json"
    return out.with_name(out.name + ".manifest.json")


def _emit(text: str, out: Path | None, written: list):
    if out is None:
        sys.stdout.write(text)
    else:
        written.append(atomic_write_text(out, text))


def _finish(args, cfg: ExperimentConfig, seed, start, written, out, extra=None):
    path = _manifest_path(out, getattr(args, "manifest", None))
    if path is not None:
        atomic_write_json(path, run_manifest(args.command, cfg.config_hash, seed, time.perf_counter() - start, written, extra))


# field-map


def cmd_field_map(args) -> int:
    start = time.perf_counter()
    cfg = load_config(args.config)
    model = cfg.force_model()
    trap = model.config
    n_q, n_z = args.grid
    q_max = args.q_max_nm * 1e-9 if args.q_max_nm else 2.0 * trap.waist_radius
    z_max = args.z_max_nm * 1e-9 if args.z_max_nm else trap.rayleigh_range
    q = np.linspace(0.0, q_max, n_q)
    z = np.linspace(-z_max, z_max, n_z)
    qq, zz = np.meshgrid(q, z, indexing="ij")
    dens = energy_densities(trap, qq, zz)
    kd = chiral_density(trap, qq, zz)
    flux = chiral_flux(trap, qq, zz).chiral_flux[2]
    pot = potential(model, qq, zz)
    force = total_force(model, qq, zz)
    columns = [qq, zz, dens.w_electric, dens.w_magnetic, kd, flux, pot.u_opt, pot.u_chi, force.f_rho, force.f_theta, force.f_z]
    header = ["q_m", "z_m", "w_electric_j_per_m3", "w_magnetic_j_per_m3", "chiral_density", "chiral_flux_z",
              "u_opt_j", "u_chi_j", "f_rho_n", "f_theta_n", "f_z_n"]
    rows = zip(*(np.broadcast_to(c, qq.shape).ravel() for c in columns))
    written: list = []
    out = Path(args.out)
    _emit(csv_text(header, rows, cfg.config_hash), out, written)
    _finish(args, cfg, None, start, written, out)
    return EXIT_OK


# calibrate


def calibrated_config_text(cfg: ExperimentConfig, amplitude: float) -> str:
    """Configuration text with the [beam] barrier replaced by a fixed field amplitude."""
    out, in_beam, inserted = [], False, False
    for line in cfg.text.splitlines():
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            in_beam = s[1:-1].strip() == "beam"
            out.append(line)
            if in_beam:
                out.append(f"field_amplitude_v_per_m = {amplitude!r}")
                inserted = True
            continue
        if in_beam and re.match(r"(barrier_kt|field_amplitude_v_per_m)\s*[=:]", s, re.IGNORECASE):
            continue
        out.append(line)
    if not inserted:
        raise ValidationError("beam-section", "the configuration has no [beam] section")
    return "\n".join(out) + "\n"


def cmd_calibrate(args) -> int:
    start = time.perf_counter()
    cfg = load_config(args.config)
    cfg.target_barrier_kT = args.barrier
    cfg._model = None
    amplitude = cfg.force_model().config.beam.field_amplitude
    written: list = []
    out = Path(args.out) if args.out else None
    _emit(calibrated_config_text(cfg, amplitude), out, written)
    _finish(args, cfg, None, start, written, out, {"field_amplitude_v_per_m": amplitude, "barrier_kT": args.barrier})
    if out is not None:
        print(f"field_amplitude_v_per_m = {amplitude!r}")
    return EXIT_OK


# rates


def rate_table(cfg: ExperimentConfig) -> dict:
    """Landscape, regime rates and chiral thermodynamics of the configured enantiomer."""
    model = cfg.force_model()
    landscape = locate_extrema(model)
    doc = {"config_hash": cfg.config_hash, "regime": cfg.regime, "enantiomer": cfg.enantiomer,
           "landscape": landscape.as_dict(), "derived": cfg.derived()}
    if cfg.regime == "reactive":
        rates, thermo = reactive_rates(landscape, model)
        doc["thermodynamics"] = thermo.as_dict()
    elif cfg.regime == "dissipative":
        rates, thermo = dissipative_rates(landscape, model)
        doc["thermodynamics"] = thermo.as_dict()
        doc["dissipative_force_on_axis_n"] = dissipative_force_on_axis(model)
    else:
        rates = kramers_rates(landscape, model.drag, "achiral")
    doc["rates"] = rates.as_dict()
    doc["ratio"] = rates.ratio
    return doc


def cmd_rates(args) -> int:
    start = time.perf_counter()
    cfg = load_config(args.config)
    doc = rate_table(cfg)
    if args.populations:
        model = cfg.force_model()
        doc["population_ratio_3d"] = population_ratio_3d(model, regime=cfg.regime)
    written: list = []
    out = Path(args.out) if args.out else None
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", out, written)
    _finish(args, cfg, None, start, written, out)
    return EXIT_OK


# simulate


def _plan_from_args(cfg: ExperimentConfig, args, kind: str) -> SimulationPlan:
    overrides = {}
    for name, key in (("seed", "master_seed"), ("trajectories", "n_trajectories"), ("steps", "n_steps"),
                      ("store", "stored_trajectories"), ("stride", "record_stride"), ("chunk_size", "chunk_size")):
        value = getattr(args, name, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "enantiomer", None):
        overrides["enantiomer"] = args.enantiomer
    try:
        return cfg.simulation_plan(kind, args.preset, **overrides)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError("simulation-plan", str(exc)) from None


def write_ensemble(result, cfg: ExperimentConfig, out: Path) -> list:
    """Histograms, occupancies, events, stored trajectories and a summary under ``out``."""
    h = cfg.config_hash
    written = []
    counts = {n: m.axial_counts for n, m in result.members.items()}
    written.append(atomic_write_text(out / "axial_histogram.csv", axial_histogram_csv(result.z_edges, counts, h)))
    qz = {n: m.hist_qz for n, m in result.members.items()}
    written.append(atomic_write_text(out / "radial_axial_histogram.csv", radial_axial_histogram_csv(result.q_edges, result.z_edges, qz, h)))
    written.append(atomic_write_text(out / "occupancy.csv", occupancy_csv(result.members, h)))
    pairs = [(int(i), ev) for m in result.members.values() for i, ev in zip(m.indices, m.events)]
    pairs.sort(key=lambda p: p[0])
    written.append(atomic_write_text(out / "events.csv", f"# config_hash={h}\n" + events_csv(pairs)))
    hyst = asdict(result.hysteresis) if result.hysteresis else None
    for rec in result.trajectories():
        stem = out / "trajectories" / f"trajectory_{rec.index:06d}"
        written.append(atomic_write_text(stem.with_suffix(".csv"), trajectory_csv(rec, h)))
        meta = trajectory_metadata(rec, h)
        meta["hysteresis"] = hyst
        written.append(atomic_write_json(stem.with_suffix(".json"), meta))
    summary = {
        "config_hash": h,
        "plan": _plan_dict(result.plan),
        "hysteresis": hyst,
        "escapes": result.escapes,
        "members": {},
    }
    for name, m in result.members.items():
        ratio, err = m.population_ratio()
        summary["members"][name] = {
            "population_ratio_c_over_a": ratio,
            "population_ratio_error": err,
            "jumps": int(sum(ev.count for ev in m.events)),
            "event_overflow": m.overflowed,
        }
    written.append(atomic_write_json(out / "summary.json", summary))
    return written


def _plan_dict(plan: SimulationPlan) -> dict:
    d = asdict(plan)
    d["initializer"] = {k: v for k, v in asdict(plan.initializer).items()}
    return d


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    cfg = load_config(args.config)
    plan = _plan_from_args(cfg, args, args.kind)
    model = cfg.force_model()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        result = run_ensemble(plan, model, backend=args.backend, threads=args.threads)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(args.out)
    written = write_ensemble(result, cfg, out)
    _finish(args, cfg, plan.master_seed, start, written, out, {"metrics": result.metrics(), "preset": args.preset, "kind": args.kind})
    for name, m in result.members.items():
        ratio, err = m.population_ratio()
        print(f"{name}: n_C/n_A = {ratio:.4f} +/- {err:.4f}")
    return EXIT_OK


# residency


def _events_from_directory(path: Path) -> tuple[dict, HysteresisConfig, str | None]:
    """Events per enantiomer from a ``simulate`` output or from stored trajectory CSVs."""
    summary_path = path / "summary.json"
    if summary_path.is_file() and (path / "events.csv").is_file():
        summary = json.loads(summary_path.read_text())
        if summary.get("hysteresis") is None:
            raise ValidationError("hysteresis-present", f"{summary_path} has no hysteresis thresholds")
        hyst = HysteresisConfig(**summary["hysteresis"])
        dt = summary["plan"]["time_step"]
        n_samples = summary["plan"]["n_steps"] + 1
        digest, occ = read_csv_table(path / "occupancy.csv")
        _, rows = read_csv_table(path / "events.csv")
        by_traj: dict = {}
        for r in rows:
            by_traj.setdefault(int(r["trajectory"]), []).append(r)
        grouped: dict = {}
        for row in occ:
            idx = int(row["trajectory"])
            evs = by_traj.get(idx, [])
            exit_i = np.array([round(float(r["exit_time_s"]) / dt) for r in evs], dtype=np.int64)
            entry_i = np.array([round(float(r["entry_time_s"]) / dt) for r in evs], dtype=np.int64)
            dest = np.array([WELL_C if r["to_well"] == "C" else WELL_A for r in evs], dtype=np.int64)
            grouped.setdefault(row["enantiomer"], []).append(TrajectoryEvents(exit_i, entry_i, dest, dt, n_samples))
        return grouped, hyst, digest
    files = sorted(path.glob("trajectory_*.csv")) or sorted((path / "trajectories").glob("trajectory_*.csv"))
    if not files:
        raise ValidationError("trajectory-input", f"{path} holds neither a simulate output nor trajectory CSVs")
    grouped = {}
    hyst = None
    digest = None
    for f in files:
        meta = json.loads(f.with_suffix(".json").read_text())
        if meta.get("hysteresis") is None:
            raise ValidationError("hysteresis-present", f"{f.with_suffix('.json')} has no hysteresis thresholds")
        hyst = HysteresisConfig(**meta["hysteresis"])
        digest, rows = read_csv_table(f)
        z = np.array([float(r["z_m"]) for r in rows])
        dt = meta["time_step_s"] * meta["record_stride"]
        grouped.setdefault(meta["enantiomer"], []).append(detect_jumps(z, hyst, dt))
    return grouped, hyst, digest


def cmd_residency(args) -> int:
    start = time.perf_counter()
    source = Path(args.input)
    out = Path(args.out)
    written: list = []
    if source.is_dir():
        grouped, hyst, digest = _events_from_directory(source)
        cfg_hash = digest or ""
        seed = None
        options = dict(min_events=args.min_events or 10, min_bins=args.min_bins or 8)
    else:
        cfg = load_config(source)
        plan = _plan_from_args(cfg, args, "residency")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            result = run_ensemble(plan, cfg.force_model(), backend=args.backend, threads=args.threads)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        written += write_ensemble(result, cfg, out)
        grouped = {n: m.events for n, m in result.members.items()}
        hyst = result.hysteresis
        cfg_hash = cfg.config_hash
        seed = plan.master_seed
        options = dict(min_events=args.min_events or cfg.analysis.min_events, min_bins=args.min_bins or cfg.analysis.min_bins)
    records = []
    hist_parts = []
    for name in sorted(grouped):
        res = residency_distribution(grouped[name], hyst, **options)
        rec = {"config_hash": cfg_hash, "enantiomer": name, "hysteresis": asdict(hyst)}
        rec.update(res.summary())
        records.append(rec)
        body = residency_histogram_csv(res, hyst)
        lines = body.splitlines()
        if not hist_parts:
            hist_parts.append("enantiomer," + lines[0])
        hist_parts += [f"{name},{line}" for line in lines[1:]]
        print(f"{name}: <tau_C>/<tau_A> = {res.ratio_c_over_a:.4f} +/- {res.ratio_error:.4f} (fit), "
              f"{res.mean_ratio_c_over_a:.4f} +/- {res.mean_ratio_error:.4f} (means)")
    written.append(atomic_write_text(out / "residency_fit.jsonl", fit_report_jsonl(records)))
    written.append(atomic_write_text(out / "residency_histogram.csv", f"# config_hash={cfg_hash}\n" + "\n".join(hist_parts) + "\n"))
    path = _manifest_path(out, args.manifest)
    atomic_write_json(path, run_manifest("residency", cfg_hash, seed, time.perf_counter() - start, written))
    return EXIT_OK


# sweep


def sweep_grid(n_h: int, n_theta: int, h_max: float = 1.0, theta_max: float = 0.5 * np.pi):
    """Helicities from 0 to ``h_max`` and axis angles at the centers of ``n_theta`` cells of (0, theta_max)."""
    helicities = np.linspace(0.0, h_max, n_h) if n_h > 1 else np.array([0.0])
    angles = (np.arange(n_theta) + 0.5) * theta_max / n_theta
    return helicities, angles


def cmd_sweep(args) -> int:
    start = time.perf_counter()
    cfg = load_config(args.config)
    if not 0 < args.h_max <= 1:
        raise ValidationError("helicity-range", f"--h-max {args.h_max} is outside (0, 1]")
    helicities, angles = sweep_grid(*args.grid, args.h_max, args.theta_max_pi * np.pi)
    res = polarization_sweep(cfg.force_model(), helicities, angles, args.mode)
    rows = []
    for i, h in enumerate(res.helicities):
        for j, a in enumerate(res.axis_angles):
            r = res.ratio[i, j]
            with np.errstate(divide="ignore"):
                rows.append([args.mode, h, a, res.phase_delays[i, j], r, np.log10(r) if r > 0 else float("-inf")])
    written: list = []
    out = Path(args.out)
    header = ["mode", "helicity_plus", "axis_angle_rad", "phase_delay_rad", "force_ratio", "log10_force_ratio"]
    _emit(csv_text(header, rows, cfg.config_hash), out, written)
    _finish(args, cfg, None, start, written, out)
    return EXIT_OK


# verify


def _check(name, passed, value=None, threshold=None, **detail):
    return {"check": name, "passed": bool(passed), "value": value, "threshold": threshold, **detail}


def verification_battery(cfg: ExperimentConfig, preset: str = "desk", backend=None, threads=None, seed: int | None = None) -> list:
    """Cross-module consistency checks for one configuration, as report records."""
    model = cfg.force_model()
    trap = model.config
    pol = trap.polarization
    report = []

    q = np.linspace(0.0, 2.0 * trap.waist_radius, 64)
    z = np.linspace(-trap.rayleigh_range, trap.rayleigh_range, 64)
    qq, zz = np.meshgrid(q, z, indexing="ij")
    dens = energy_densities(trap, qq, zz)
    rel = float(np.max(np.abs(dens.w_electric + dens.w_magnetic - 2.0 * dens.w_trap) / (2.0 * dens.w_trap)))
    report.append(_check("energy_density_sum", rel <= 1e-12, rel, 1e-12))
    pv = np.stack(poynting(trap, qq, zz))
    pmax = float(np.max(np.linalg.norm(pv, axis=0) / (299792458.0 * dens.w_trap)))
    report.append(_check("poynting_vanishes", pmax <= 1e-10, pmax, 1e-10))
    if pol.helicity_plus == pol.helicity_minus:
        kmax = float(np.max(np.abs(chiral_density(trap, qq, zz))))
        report.append(_check("chiral_density_zero", kmax == 0.0, kmax, 0.0))
    if pol.helicity_plus == -pol.helicity_minus:
        fmax = float(np.max(np.abs(chiral_flux(trap, qq, zz).chiral_flux[2])))
        report.append(_check("chiral_flux_zero", fmax == 0.0, fmax, 0.0))

    landscape = locate_extrema(model)
    kr = kramers_rates(landscape, model.drag)
    qr = quadrature_rates(model, landscape)
    dev = max(abs(kr.rate_ac / qr.rate_ac - 1.0), abs(kr.rate_ca / qr.rate_ca - 1.0))
    report.append(_check("kramers_vs_quadrature", dev <= 0.15, dev, 0.15, kramers=kr.as_dict(), quadrature=qr.as_dict()))

    if cfg.regime == "dissipative":
        rates, _ = dissipative_rates(landscape, model)
        f0 = dissipative_force_on_axis(model)
        expected = float(np.exp(f0 * landscape.well_separation / model.kT))
        err = abs(rates.ratio / expected - 1.0)
        report.append(_check("dissipative_ratio_identity", err <= 1e-12, err, 1e-12, ratio=rates.ratio, expected=expected))
        left = model_for(model, "left")
        left_ratio = dissipative_rates(locate_extrema(left), left)[0].ratio
        ratio_3d = population_ratio_3d(left)
        report.append(_check("model_rate_ratio_left", abs(left_ratio - 0.29) <= 0.02, left_ratio, [0.27, 0.31]))
        report.append(_check("population_ratio_3d_left", abs(ratio_3d - 0.36) <= 0.02, ratio_3d, [0.34, 0.38]))
        quotient = left_ratio / ratio_3d
        target = 0.29 / 0.36
        report.append(_check("model_over_3d_quotient", abs(quotient / target - 1.0) <= 0.10, quotient, [0.9 * target, 1.1 * target]))
    elif cfg.regime == "reactive":
        rates, _ = reactive_rates(landscape, model)
        err = abs(rates.ratio - 1.0)
        report.append(_check("reactive_equilibrium_constant", err <= 1e-12, err, 1e-12, ratio=rates.ratio))

    if preset != "none":
        hand = "left" if cfg.enantiomer == "racemic" else cfg.enantiomer
        base = cfg.plan.master_seed if cfg.plan else 0
        plan = SimulationPlan(regime=cfg.regime, enantiomer=hand, master_seed=base if seed is None else seed,
                              **VERIFY_ENSEMBLES[preset])
        result = run_ensemble(plan, model, backend=backend, threads=threads)
        member = result.member(hand)
        marginal = axial_marginal(member.model, cfg.regime)
        finals = member.final[:, 2]
        ks = stats.kstest(finals, marginal.cdf)
        report.append(_check("ensemble_pdf_ks", ks.pvalue > 0.01, float(ks.pvalue), 0.01,
                             statistic=float(ks.statistic), samples=int(finals.size), escapes=result.escapes))
        report.append(_check("ensemble_no_escapes", result.escapes == 0, result.escapes, 0))
    return report


def cmd_verify(args) -> int:
    start = time.perf_counter()
    cfg = load_config(args.config)
    report = verification_battery(cfg, args.preset, args.backend, args.threads, args.seed)
    for r in report:
        r["config_hash"] = cfg.config_hash
        mark = "PASS" if r["passed"] else "FAIL"
        print(f"{mark} {r['check']}: value={r['value']} threshold={r['threshold']}", file=sys.stderr)
    written: list = []
    out = Path(args.out) if args.out else None
    _emit(fit_report_jsonl(r for r in report), out, written)
    failed = [r["check"] for r in report if not r["passed"]]
    _finish(args, cfg, None, start, written, out, {"failed": failed})
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chiralkramers", description="Chiral optical double-well trap toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_required=False):
        sp.add_argument("config", help="configuration file or shipped config name")
        sp.add_argument("--out", required=out_required, help="output path")
        sp.add_argument("--manifest", help="run-manifest path (default: beside the output)")

    def engine(sp):
        sp.add_argument("--threads", type=int, help=f"worker threads (default: ${_accel.THREADS_ENV} or all cores)")
        sp.add_argument("--backend", choices=["numba", "numpy"], help=f"integrator backend (default: ${_accel.BACKEND_ENV} or numba)")

    sp = sub.add_parser("field-map", help="field densities, potentials and forces on a (q, z) grid")
    common(sp, out_required=True)
    sp.add_argument("--grid", type=_grid_pair, default=(64, 64), help="points in q and z, e.g. 64,64")
    sp.add_argument("--q-max-nm", type=float, help="radial extent (default: twice the waist)")
    sp.add_argument("--z-max-nm", type=float, help="axial half-extent (default: the Rayleigh range)")
    sp.set_defaults(func=cmd_field_map)

    sp = sub.add_parser("calibrate", help="fix the field amplitude for a target barrier")
    common(sp)
    sp.add_argument("--barrier", type=_barrier, default=1.0, help="optical barrier, e.g. 1.0kT")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("rates", help="landscape, escape rates and chiral thermodynamics as JSON")
    common(sp)
    sp.add_argument("--populations", action="store_true", help="also integrate the 3D population ratio")
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("simulate", help="Langevin ensemble with histograms and trajectory dumps")
    common(sp, out_required=True)
    _plan_args(sp)
    sp.add_argument("--kind", choices=["ensemble", "residency"], default="ensemble", help="which preset family")
    engine(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("residency", help="jump detection and residency-time fits")
    sp.add_argument("input", help="configuration file, simulate output directory or trajectory directory")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--manifest", help="run-manifest path")
    sp.add_argument("--min-events", type=int, help="minimum residencies per well")
    sp.add_argument("--min-bins", type=int, help="minimum histogram bins per fit")
    _plan_args(sp, default_preset="desk")
    engine(sp)
    sp.set_defaults(func=cmd_residency)

    sp = sub.add_parser("sweep", help="chiral to interference force ratios over (h+, axis angle)")
    common(sp, out_required=True)
    sp.add_argument("--mode", choices=["reactive", "dissipative"], required=True)
    sp.add_argument("--grid", type=_grid_pair, default=(21, 21), help="points in h+ and axis angle, e.g. 21,21")
    sp.add_argument("--h-max", type=float, default=1.0, help="largest helicity")
    sp.add_argument("--theta-max-pi", type=float, default=0.5, help="largest axis angle in units of pi")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="consistency battery; exits 3 when a check fails")
    common(sp)
    sp.add_argument("--preset", choices=["desk", "paper", "none"], default="desk", help="ensemble scale of the PDF check")
    sp.add_argument("--seed", type=int, help="master seed of the PDF check")
    engine(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def _plan_args(sp, default_preset="config"):
    sp.add_argument("--preset", choices=["paper", "desk", "config"], default=default_preset,
                    help="run scale: paper, desk, or the file's own plan")
    sp.add_argument("--seed", type=int, help="master seed")
    sp.add_argument("--trajectories", type=int, help="override the number of trajectories")
    sp.add_argument("--steps", type=int, help="override the number of steps")
    sp.add_argument("--store", type=int, help="trajectories whose positions are dumped")
    sp.add_argument("--stride", type=int, help="steps between dumped positions")
    sp.add_argument("--chunk-size", type=int, help="trajectories per kernel call")
    sp.add_argument("--enantiomer", choices=["left", "right", "racemic"], help="override the enantiomer")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_VALIDATION
        os.environ[_accel.THREADS_ENV] = str(args.threads)
    try:
        return args.func(args)
    except (ParseError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
