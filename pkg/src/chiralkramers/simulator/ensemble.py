"""Ensemble orchestration: plans, time-step check, initial sampling and streamed tallies."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .. import forcefield
from .._accel import set_threads, thread_count, use_numba
from ..forcefield import ForceModel, decompose_forces, pack_parameters
from ..landscape import Domain, EffectivePotential, NotBistable
from ..statistics import HysteresisConfig, TrajectoryEvents
from . import rng
from .kernels import KernelGrid, integrate_chunk
from .sampling import cylindrical_to_cartesian, model_density_grid, sample_from_density

__all__ = [
    "Initializer",
    "SimulationPlan",
    "StabilityReport",
    "UnstableTimeStep",
    "TrajectoryRecord",
    "EnantiomerEnsemble",
    "EnsembleResult",
    "AxialHistogram",
    "model_for",
    "plan_domain",
    "dt_stability_check",
    "initial_positions",
    "euler_maruyama_step",
    "run_ensemble",
    "empirical_axial_pdf",
    "DESK_ENSEMBLE",
    "PAPER_ENSEMBLE",
    "DESK_RESIDENCY",
    "PAPER_RESIDENCY",
]

REGIMES = ("achiral", "reactive", "dissipative")
ENANTIOMERS = ("left", "right", "racemic")


class UnstableTimeStep(ValueError):
    """The time step violates max |F_i| sqrt(dt) <= sqrt(2 kT gamma)."""


@dataclass(frozen=True)
class Initializer:
    """Where trajectories start.

    ``model_pdf`` draws from the stationary density of the effective potential,
    ``fixed_point`` starts every trajectory at ``point`` (m), and
    ``uniform_well`` draws z uniformly within one thermal width of well A or C
    and the radius uniformly over a disc of one radial thermal width.
    """

    kind: str = "model_pdf"
    point: tuple[float, float, float] | None = None
    well: str | None = None

    def __post_init__(self):
        if self.kind not in ("model_pdf", "fixed_point", "uniform_well"):
            raise ValueError(f"unknown initializer {self.kind!r}")
        if self.kind == "fixed_point" and (self.point is None or len(self.point) != 3):
            raise ValueError("fixed_point needs an (x, y, z) point")
        if self.kind == "uniform_well" and self.well not in ("A", "C"):
            raise ValueError("uniform_well needs well 'A' or 'C'")

    @classmethod
    def model_pdf(cls) -> "Initializer":
        return cls("model_pdf")

    @classmethod
    def fixed_point(cls, x: float, y: float, z: float) -> "Initializer":
        return cls("fixed_point", point=(float(x), float(y), float(z)))

    @classmethod
    def uniform_well(cls, well: str) -> "Initializer":
        return cls("uniform_well", well=well)


@dataclass(frozen=True)
class SimulationPlan:
    """Everything that defines an ensemble run apart from the force model.

    Trajectory i uses the random stream keyed by (master_seed, i). In a
    racemic plan the first half of the indices are left-handed and the second
    half right-handed. The first ``stored_trajectories`` indices keep their
    positions every ``record_stride`` steps; all others only feed histograms.
    """

    time_step: float
    n_steps: int
    n_trajectories: int
    master_seed: int = 0
    initializer: Initializer = field(default_factory=Initializer)
    record_stride: int = 1
    regime: str = "achiral"
    enantiomer: str = "left"
    stored_trajectories: int = 0
    hysteresis_sigma: float | None = None
    n_z_bins: int = 200
    n_q_bins: int = 32
    chunk_size: int = 1024
    event_capacity: int = 8192
    allow_unstable_dt: bool = False

    def __post_init__(self):
        if not self.time_step > 0:
            raise ValueError("time_step must be > 0")
        if self.n_steps < 1 or self.n_trajectories < 1:
            raise ValueError("n_steps and n_trajectories must be >= 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        if self.enantiomer not in ENANTIOMERS:
            raise ValueError(f"enantiomer must be one of {ENANTIOMERS}")
        if self.enantiomer == "racemic" and self.n_trajectories % 2:
            raise ValueError("a racemic plan needs an even number of trajectories")
        if self.hysteresis_sigma is not None and not self.hysteresis_sigma > 0:
            raise ValueError("hysteresis_sigma must be > 0")
        if self.chunk_size < 1 or self.event_capacity < 1 or self.n_z_bins < 1 or self.n_q_bins < 1:
            raise ValueError("chunk_size, event_capacity and bin counts must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def duration(self) -> float:
        return self.n_steps * self.time_step

    def groups(self) -> dict:
        """Trajectory indices of each enantiomer."""
        idx = np.arange(self.n_trajectories)
        if self.enantiomer == "racemic":
            half = self.n_trajectories // 2
            return {"left": idx[:half], "right": idx[half:]}
        return {self.enantiomer: idx}

    def scaled(self, **changes) -> "SimulationPlan":
        return replace(self, **changes)


# ensemble presets: 1e4 per enantiomer x 5e4 steps at 95.4 ps, and 1/16 of that for desks
PAPER_ENSEMBLE = dict(time_step=95.4e-12, n_steps=50_000, n_trajectories=20_000, enantiomer="racemic")
DESK_ENSEMBLE = dict(time_step=95.4e-12, n_steps=50_000, n_trajectories=1_250, enantiomer="racemic")
# residency presets: 4096 x 3e6 steps at 0.95 ns, and 256 per enantiomer x 1e6 steps for desks
PAPER_RESIDENCY = dict(time_step=0.95e-9, n_steps=3_000_000, n_trajectories=4096, allow_unstable_dt=True)
DESK_RESIDENCY = dict(time_step=0.95e-9, n_steps=1_000_000, n_trajectories=512, enantiomer="racemic", allow_unstable_dt=True)


def model_for(model: ForceModel, enantiomer: str) -> ForceModel:
    """The model of the requested enantiomer (achiral particles are their own mirror image)."""
    hand = model.particle.handedness
    if hand in ("achiral", enantiomer):
        return model
    return model.flipped()


@dataclass(frozen=True)
class StabilityReport:
    max_ratio: float
    passed: bool
    time_step: float
    worst_point: tuple[float, float]

    @property
    def margin(self) -> float:
        return 1.0 - self.max_ratio

    @property
    def largest_stable_step(self) -> float:
        return self.time_step / self.max_ratio**2 if self.max_ratio > 0 else np.inf


def _domain_union(domains) -> Domain:
    return Domain(
        q_max=max(d.q_max for d in domains),
        z_lo=min(d.z_lo for d in domains),
        z_hi=max(d.z_hi for d in domains),
        sigma_q=max(d.sigma_q for d in domains),
        tail_bound=max(d.tail_bound for d in domains),
    )


def plan_domain(plan: SimulationPlan, model: ForceModel) -> Domain:
    """Union of the quadrature domains of every enantiomer in the plan."""
    return _domain_union([EffectivePotential(model_for(model, e), plan.regime).domain() for e in plan.groups()])


def dt_stability_check(plan: SimulationPlan, model: ForceModel, domain: Domain | None = None, n_q: int = 33, n_z: int = 257) -> StabilityReport:
    """Largest |F_i| sqrt(dt) / sqrt(2 kT gamma) over the domain, every force term and enantiomer.

    Every component of every force term the model switches on, and of their
    sum, is checked on a (q, z) grid. The step passes when the ratio does not exceed one.
    """
    if domain is None:
        domain = plan_domain(plan, model)
    q = np.linspace(0.0, domain.q_max, n_q)[:, None]
    z = np.linspace(domain.z_lo, domain.z_hi, n_z)[None, :]
    worst = 0.0
    where = (0.0, 0.0)
    for enantiomer in plan.groups():
        m = model_for(model, enantiomer)
        parts = decompose_forces(m, q, z)
        active = [parts.electric_reactive, parts.chiral_reactive, parts.chiral_dissipative]
        if m.include_magnetic:
            active.append(parts.magnetic_reactive)
        if m.include_azimuthal:
            active.append(parts.electric_dissipative)
            if m.include_magnetic:
                active.append(parts.magnetic_dissipative)
        # the total also carries the optional harmonic restoring force
        active.append(forcefield.total_force(m, q, z))
        for vec in active:
            for comp in vec:
                mag = np.abs(np.broadcast_to(comp, (n_q, n_z)))
                i = np.unravel_index(np.argmax(mag), mag.shape)
                if mag[i] > worst:
                    worst = float(mag[i])
                    where = (float(q[i[0], 0]), float(z[0, i[1]]))
    scale = np.sqrt(2.0 * model.kT * model.drag)
    ratio = worst * np.sqrt(plan.time_step) / scale
    return StabilityReport(float(ratio), bool(ratio <= 1.0), plan.time_step, where)


def initial_positions(plan: SimulationPlan, model: ForceModel, enantiomer: str, indices, domain: Domain | None = None) -> np.ndarray:
    """Starting points (n, 3) for the given trajectory indices."""
    indices = np.asarray(indices)
    init = plan.initializer
    if init.kind == "fixed_point":
        return np.tile(np.asarray(init.point, dtype=float), (indices.size, 1))
    u = rng.initial_uniforms(plan.master_seed, indices)
    m = model_for(model, enantiomer)
    if init.kind == "model_pdf":
        grid = model_density_grid(m, plan.regime, domain)
        return cylindrical_to_cartesian(*sample_from_density(grid, u))
    phi = EffectivePotential(m, plan.regime)
    land = phi.landscape
    dom = phi.domain()
    centre = land.z_a if init.well == "A" else land.z_c
    width = land.sigma("a" if init.well == "A" else "c")
    z = centre + width * (2.0 * u[:, 0] - 1.0)
    q = dom.sigma_q * np.sqrt(u[:, 1])
    return cylindrical_to_cartesian(q, 2.0 * np.pi * u[:, 2], z)


def euler_maruyama_step(state, model: ForceModel, dt: float, noise) -> np.ndarray:
    """One Euler-Maruyama update of Cartesian positions (..., 3).

    ``noise`` holds standard normal draws; the increment is F dt / gamma plus
    sqrt(2 D dt) times the noise. The cylindrical force is projected with x/q
    and y/q, which the reduced force components already absorb, so the axis
    needs no special case.
    """
    state = np.asarray(state, dtype=float)
    noise = np.asarray(noise, dtype=float)
    x, y, z = state[..., 0], state[..., 1], state[..., 2]
    q = np.sqrt(x * x + y * y)
    fr, ft, fz = forcefield.reduced_force(q, z, pack_parameters(model))
    mu = dt / model.drag
    amp = np.sqrt(2.0 * model.diffusion * dt)
    return np.stack(
        [
            x + mu * (x * fr - y * ft) + amp * noise[..., 0],
            y + mu * (y * fr + x * ft) + amp * noise[..., 1],
            z + mu * fz + amp * noise[..., 2],
        ],
        axis=-1,
    )


@dataclass
class TrajectoryRecord:
    positions: np.ndarray  # (floor(n_steps / stride) + 1, 3), m
    times: np.ndarray
    index: int
    seed: int
    enantiomer: str
    plan: SimulationPlan


@dataclass
class EnantiomerEnsemble:
    """Tallies of the trajectories of one enantiomer, ordered by trajectory index."""

    enantiomer: str
    model: ForceModel
    indices: np.ndarray
    hist_z: np.ndarray  # (n, n_z_bins)
    hist_qz: np.ndarray  # (n_q_bins, n_z_bins)
    occupancy: np.ndarray  # (n, 2) samples on the A and C sides of z = 0
    events: list  # TrajectoryEvents per trajectory
    escapes: np.ndarray
    final: np.ndarray
    records: list
    overflowed: int = 0

    @property
    def axial_counts(self) -> np.ndarray:
        return self.hist_z.sum(axis=0)

    def population_ratio(self) -> tuple[float, float]:
        """n_C / n_A over all samples, with a standard error from the spread between trajectories."""
        a = self.occupancy[:, 0].astype(float)
        c = self.occupancy[:, 1].astype(float)
        ratio = c.sum() / a.sum()
        n = a.size
        if n < 2:
            return float(ratio), float("nan")
        resid = c - ratio * a
        err = np.sqrt(np.var(resid, ddof=1) / n) / a.mean()
        return float(ratio), float(err)


@dataclass
class AxialHistogram:
    edges: np.ndarray
    counts: np.ndarray
    probability: np.ndarray  # sums to 1

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.probability / np.diff(self.edges)


@dataclass
class EnsembleResult:
    plan: SimulationPlan
    grid: KernelGrid
    hysteresis: HysteresisConfig | None
    members: dict
    wall_time: float
    backend: str
    threads: int

    @property
    def z_edges(self) -> np.ndarray:
        return self.grid.z_edges

    @property
    def q_edges(self) -> np.ndarray:
        return self.grid.q_edges

    @property
    def total_steps(self) -> int:
        return self.plan.n_steps * self.plan.n_trajectories

    @property
    def steps_per_second(self) -> float:
        return self.total_steps / self.wall_time if self.wall_time > 0 else float("inf")

    @property
    def escapes(self) -> int:
        return int(sum(int(m.escapes.sum()) for m in self.members.values()))

    def member(self, enantiomer: str | None = None) -> EnantiomerEnsemble:
        if enantiomer is None:
            if len(self.members) != 1:
                raise ValueError("racemic result: name the enantiomer")
            return next(iter(self.members.values()))
        return self.members[enantiomer]

    def empirical_2d_density(self, enantiomer: str | None = None) -> np.ndarray:
        if enantiomer is None:
            return sum(m.hist_qz for m in self.members.values())
        return self.members[enantiomer].hist_qz

    def trajectories(self) -> list:
        return [r for m in self.members.values() for r in m.records]

    def metrics(self) -> dict:
        return {
            "wall_time_s": self.wall_time,
            "steps_per_second": self.steps_per_second,
            "total_steps": self.total_steps,
            "backend": self.backend,
            "threads": self.threads,
            "escapes": self.escapes,
        }


def empirical_axial_pdf(result: EnsembleResult, enantiomer: str | None = None) -> AxialHistogram:
    """Radially summed (q, z) histogram normalized to unit total probability."""
    qz = result.empirical_2d_density(enantiomer)
    counts = qz.sum(axis=0)
    total = counts.sum()
    prob = counts / total if total else counts.astype(float)
    return AxialHistogram(result.z_edges, counts, prob)


def _chunk_events(tallies, dt, n_samples, capacity):
    out = []
    overflow = 0
    for i in range(tallies.n_events.size):
        n = int(tallies.n_events[i])
        if n > capacity:
            overflow += 1
            n = capacity
        out.append(TrajectoryEvents(tallies.event_exit[i, :n].copy(), tallies.event_entry[i, :n].copy(), tallies.event_to[i, :n].copy(), dt, n_samples))
    return out, overflow


def run_ensemble(
    plan: SimulationPlan,
    model: ForceModel,
    domain: Domain | None = None,
    hysteresis: HysteresisConfig | None = None,
    backend: str | None = None,
    threads: int | None = None,
) -> EnsembleResult:
    """Integrate all trajectories of ``plan`` and merge their tallies.

    ``model`` gives the force field; the right-handed members use its mirror
    image. The histogram box defaults to the union of the quadrature domains
    and the hysteresis thresholds to +/- the barrier thermal width of the
    effective potential (or ``plan.hysteresis_sigma``). Refuses to run when
    the time step fails :func:`dt_stability_check`, unless the plan allows it.
    """
    try:
        if domain is None:
            domain = plan_domain(plan, model)
        if hysteresis is None:
            hysteresis = HysteresisConfig.from_model(model_for(model, next(iter(plan.groups()))), plan.regime, plan.hysteresis_sigma)
    except NotBistable:
        if domain is None:
            raise
    check = dt_stability_check(plan, model, domain)
    if not check.passed:
        message = f"time step {plan.time_step:.3e} s gives a stability ratio {check.max_ratio:.3f} > 1"
        if not plan.allow_unstable_dt:
            raise UnstableTimeStep(message)
        warnings.warn(message + " (allowed by the plan)", RuntimeWarning, stacklevel=2)
    lower, upper = (hysteresis.lower, hysteresis.upper) if hysteresis else (-np.inf, np.inf)
    grid = KernelGrid(domain.z_lo, domain.z_hi, domain.q_max, plan.n_z_bins, plan.n_q_bins, 0.0, lower, upper)
    if backend is None:
        backend = "numba" if use_numba() else "numpy"
    n_threads = threads or thread_count()
    set_threads(n_threads)
    start = time.perf_counter()
    members = {}
    for enantiomer, indices in plan.groups().items():
        m = model_for(model, enantiomer)
        params = pack_parameters(m)
        starts = initial_positions(plan, model, enantiomer, indices, domain if plan.initializer.kind == "model_pdf" else None)
        keys = rng.trajectory_keys(plan.master_seed, indices)
        hz, events, escapes, final, occ, records = [], [], [], [], [], []
        hqz = np.zeros((plan.n_q_bins, plan.n_z_bins), dtype=np.int64)
        overflow = 0
        stored = indices < plan.stored_trajectories
        for flag in (True, False):
            sel = np.nonzero(stored == flag)[0]
            for lo in range(0, sel.size, plan.chunk_size):
                part = sel[lo : lo + plan.chunk_size]
                t = integrate_chunk(params, starts[part], keys[part], plan.n_steps, plan.time_step, m.drag, m.kT, grid,
                                    plan.record_stride, flag, plan.event_capacity, backend)
                ev, over = _chunk_events(t, plan.time_step, plan.n_steps + 1, plan.event_capacity)
                overflow += over
                for j, i in enumerate(part):
                    hz.append((i, t.hist_z[j]))
                    events.append((i, ev[j]))
                    escapes.append((i, t.escapes[j]))
                    final.append((i, t.final[j]))
                    occ.append((i, t.occupancy[j]))
                    if flag:
                        times = np.arange(t.records.shape[1]) * plan.record_stride * plan.time_step
                        records.append(TrajectoryRecord(t.records[j], times, int(indices[i]), plan.master_seed, enantiomer, plan))
                hqz += t.hist_qz
        order = lambda pairs: [v for _, v in sorted(pairs, key=lambda p: p[0])]
        if overflow:
            warnings.warn(f"{overflow} {enantiomer} trajectories exceeded the event capacity {plan.event_capacity}", RuntimeWarning, stacklevel=2)
        members[enantiomer] = EnantiomerEnsemble(
            enantiomer=enantiomer,
            model=m,
            indices=indices,
            hist_z=np.array(order(hz)),
            hist_qz=hqz,
            occupancy=np.array(order(occ)),
            events=order(events),
            escapes=np.array(order(escapes)),
            final=np.array(order(final)),
            records=sorted(records, key=lambda r: r.index),
            overflowed=overflow,
        )
    wall = time.perf_counter() - start
    return EnsembleResult(plan, grid, hysteresis, members, wall, backend, n_threads)
