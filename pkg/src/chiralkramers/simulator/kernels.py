"""Euler-Maruyama integration kernels.

Both backends integrate a block of independent trajectories and return the
same set of per-trajectory tallies:

* axial histogram and (q, z) histogram of the visited positions,
* time spent on each side of the splitting plane,
* hysteresis jump events (exit index, entry index, destination well),
* the number of samples that left the histogram box,
* optionally the positions at every ``stride``-th step.

Sample 0 is the initial position; samples 1..n_steps follow each step. Only
samples 1..n_steps enter the histograms and occupancy counts, while the jump
state machine sees every sample including the initial one.

The compiled backend runs one trajectory per prange iteration. The numpy
backend advances the whole block one step at a time. They consume the same
random numbers, so they agree to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import forcefield
from .._accel import HAVE_NUMBA, jit_variant, njit, use_numba
from ..statistics import WELL_A, WELL_C
from . import rng

__all__ = ["KernelGrid", "ChunkTallies", "integrate_chunk", "WELL_A", "WELL_C"]

# grid vector layout shared by both backends
G_Z_LO, G_Z_HI, G_Q_MAX, G_SPLIT, G_LOWER, G_UPPER = range(6)


@dataclass(frozen=True)
class KernelGrid:
    """Histogram box and hysteresis thresholds.

    Samples with z outside [z_lo, z_hi] or q > q_max count as escapes and are
    not binned. ``split`` separates the A side (z < split) from the C side.
    A jump into A happens when z < lower, a jump into C when z > upper.
    """

    z_lo: float
    z_hi: float
    q_max: float
    n_z_bins: int
    n_q_bins: int
    split: float
    lower: float
    upper: float

    def vector(self) -> np.ndarray:
        return np.array([self.z_lo, self.z_hi, self.q_max, self.split, self.lower, self.upper])

    @property
    def z_edges(self) -> np.ndarray:
        return np.linspace(self.z_lo, self.z_hi, self.n_z_bins + 1)

    @property
    def q_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.q_max, self.n_q_bins + 1)


@dataclass
class ChunkTallies:
    hist_z: np.ndarray  # (n, n_z_bins) int64
    hist_qz: np.ndarray  # (n_q_bins, n_z_bins) int64, summed over the block
    occupancy: np.ndarray  # (n, 2) int64, samples with z < split and z >= split
    event_exit: np.ndarray  # (n, capacity) int64 sample index of the last sample in the old well, plus one
    event_entry: np.ndarray  # (n, capacity) int64 sample index of arrival in the new well
    event_to: np.ndarray  # (n, capacity) int8 destination well
    n_events: np.ndarray  # (n,) int64, may exceed capacity (overflowing events are dropped)
    escapes: np.ndarray  # (n,) int64
    final: np.ndarray  # (n, 3)
    records: np.ndarray | None  # (n, n_records, 3)


def _zone(z, lower, upper):
    if z < lower:
        return WELL_A
    if z > upper:
        return WELL_C
    return 0


def _trajectory(P, start, key, n_steps, dt, drag, noise_amp, grid, n_zb, n_qb, stride, store,
                rec, hz, hqz, occ, ev_exit, ev_entry, ev_to, n_ev, i):
    z_lo = grid[G_Z_LO]
    z_hi = grid[G_Z_HI]
    q_max = grid[G_Q_MAX]
    split = grid[G_SPLIT]
    lower = grid[G_LOWER]
    upper = grid[G_UPPER]
    z_scale = n_zb / (z_hi - z_lo)
    q_scale = n_qb / q_max
    capacity = ev_exit.shape[1]
    mu = dt / drag
    x = start[0]
    y = start[1]
    z = start[2]
    if store:
        rec[i, 0, 0] = x
        rec[i, 0, 1] = y
        rec[i, 0, 2] = z
    state = _zone(z, lower, upper)
    last_in_state = 0
    events = 0
    escaped = 0
    n_a = 0
    for s in range(n_steps):
        q = np.sqrt(x * x + y * y)
        fr, ft, fz = reduced_force(q, z, P)
        nx, ny, nz = rng.step_normals(key, np.uint64(s))
        # Cartesian projection of the cylindrical force; fr and ft are already divided by q
        x_new = x + mu * (x * fr - y * ft) + noise_amp * nx
        y_new = y + mu * (y * fr + x * ft) + noise_amp * ny
        z = z + mu * fz + noise_amp * nz
        x = x_new
        y = y_new
        sample = s + 1
        if store and sample % stride == 0:
            r = sample // stride
            rec[i, r, 0] = x
            rec[i, r, 1] = y
            rec[i, r, 2] = z
        if z < split:
            n_a += 1
        q = np.sqrt(x * x + y * y)
        if z_lo <= z < z_hi and q < q_max:
            bz = int((z - z_lo) * z_scale)
            if bz >= n_zb:
                bz = n_zb - 1
            bq = int(q * q_scale)
            if bq >= n_qb:
                bq = n_qb - 1
            hz[i, bz] += 1
            hqz[i, bq, bz] += 1
        else:
            escaped += 1
        zone = _zone(z, lower, upper)
        if zone != 0:
            if state != 0 and zone != state:
                if events < capacity:
                    ev_exit[i, events] = last_in_state + 1
                    ev_entry[i, events] = sample
                    ev_to[i, events] = zone
                events += 1
            state = zone
            last_in_state = sample
    occ[i, 0] = n_a
    occ[i, 1] = n_steps - n_a
    n_ev[i] = events
    return x, y, z, escaped


def _kernel(P, starts, keys, n_steps, dt, drag, noise_amp, grid, n_zb, n_qb, stride, store,
            rec, hz, hqz, occ, ev_exit, ev_entry, ev_to, n_ev, esc, final):
    for i in prange(starts.shape[0]):
        x, y, z, escaped = _trajectory(P, starts[i], keys[i], n_steps, dt, drag, noise_amp, grid, n_zb, n_qb,
                                       stride, store, rec, hz, hqz, occ, ev_exit, ev_entry, ev_to, n_ev, i)
        esc[i] = escaped
        final[i, 0] = x
        final[i, 1] = y
        final[i, 2] = z


if HAVE_NUMBA:
    import numba

    prange = numba.prange
    _field_terms_c = jit_variant(forcefield._field_terms, {"inline": "always"})
    reduced_force = jit_variant(forcefield.reduced_force, {"inline": "always"}, _field_terms=_field_terms_c)
    _zone_c = njit(inline="always")(_zone)
    _trajectory_c = jit_variant(_trajectory, {"cache": True}, reduced_force=reduced_force, _zone=_zone_c, rng=rng)
    _kernel_c = jit_variant(_kernel, {"parallel": True, "cache": True}, _trajectory=_trajectory_c, prange=numba.prange)
else:  # pragma: no cover
    prange = range
    reduced_force = forcefield.reduced_force
    _kernel_c = None


def _allocate(n, n_steps, grid: KernelGrid, stride, store, capacity):
    n_rec = n_steps // stride + 1 if store else 1
    return dict(
        rec=np.zeros((n if store else 1, n_rec, 3)),
        hz=np.zeros((n, grid.n_z_bins), dtype=np.int64),
        hqz=np.zeros((n, grid.n_q_bins, grid.n_z_bins), dtype=np.int64),
        occ=np.zeros((n, 2), dtype=np.int64),
        ev_exit=np.zeros((n, capacity), dtype=np.int64),
        ev_entry=np.zeros((n, capacity), dtype=np.int64),
        ev_to=np.zeros((n, capacity), dtype=np.int8),
        n_ev=np.zeros(n, dtype=np.int64),
        esc=np.zeros(n, dtype=np.int64),
        final=np.zeros((n, 3)),
    )


def _run_compiled(P, starts, keys, n_steps, dt, drag, noise_amp, grid: KernelGrid, stride, store, buf):
    _kernel_c(P, starts, keys, n_steps, dt, drag, noise_amp, grid.vector(), grid.n_z_bins, grid.n_q_bins, stride, store,
              buf["rec"], buf["hz"], buf["hqz"], buf["occ"], buf["ev_exit"], buf["ev_entry"], buf["ev_to"],
              buf["n_ev"], buf["esc"], buf["final"])


def _zones(z, lower, upper):
    return np.where(z < lower, WELL_A, np.where(z > upper, WELL_C, 0))


def _run_numpy(P, starts, keys, n_steps, dt, drag, noise_amp, grid: KernelGrid, stride, store, buf):
    n = starts.shape[0]
    rows = np.arange(n)
    capacity = buf["ev_exit"].shape[1]
    mu = dt / drag
    x, y, z = (starts[:, j].copy() for j in range(3))
    if store:
        buf["rec"][:, 0, :] = starts
    state = _zones(z, grid.lower, grid.upper)
    last_in_state = np.zeros(n, dtype=np.int64)
    events = np.zeros(n, dtype=np.int64)
    z_scale = grid.n_z_bins / (grid.z_hi - grid.z_lo)
    q_scale = grid.n_q_bins / grid.q_max
    hz = buf["hz"]
    hqz = buf["hqz"]
    n_a = np.zeros(n, dtype=np.int64)
    for s in range(n_steps):
        q = np.sqrt(x * x + y * y)
        fr, ft, fz = forcefield.reduced_force(q, z, P)
        nx, ny, nz = rng.step_normals_array(keys, s)
        x, y, z = (
            x + mu * (x * fr - y * ft) + noise_amp * nx,
            y + mu * (y * fr + x * ft) + noise_amp * ny,
            z + mu * fz + noise_amp * nz,
        )
        sample = s + 1
        if store and sample % stride == 0:
            buf["rec"][:, sample // stride, 0] = x
            buf["rec"][:, sample // stride, 1] = y
            buf["rec"][:, sample // stride, 2] = z
        n_a += z < grid.split
        q = np.sqrt(x * x + y * y)
        inside = (z >= grid.z_lo) & (z < grid.z_hi) & (q < grid.q_max)
        bz = np.minimum(((z[inside] - grid.z_lo) * z_scale).astype(np.int64), grid.n_z_bins - 1)
        bq = np.minimum((q[inside] * q_scale).astype(np.int64), grid.n_q_bins - 1)
        hz[rows[inside], bz] += 1
        hqz[rows[inside], bq, bz] += 1
        buf["esc"] += ~inside
        zone = _zones(z, grid.lower, grid.upper)
        jumped = np.nonzero((zone != 0) & (state != 0) & (zone != state))[0]
        for i in jumped:
            if events[i] < capacity:
                buf["ev_exit"][i, events[i]] = last_in_state[i] + 1
                buf["ev_entry"][i, events[i]] = sample
                buf["ev_to"][i, events[i]] = zone[i]
            events[i] += 1
        settled = zone != 0
        state[settled] = zone[settled]
        last_in_state[settled] = sample
    buf["occ"][:, 0] = n_a
    buf["occ"][:, 1] = n_steps - n_a
    buf["n_ev"][:] = events
    buf["final"][:] = np.stack([x, y, z], axis=1)


def integrate_chunk(
    params: np.ndarray,
    starts: np.ndarray,
    keys: np.ndarray,
    n_steps: int,
    dt: float,
    drag: float,
    kT: float,
    grid: KernelGrid,
    stride: int = 1,
    store: bool = False,
    event_capacity: int = 8192,
    backend: str | None = None,
) -> ChunkTallies:
    """Integrate one block of trajectories with the selected backend.

    ``backend`` is 'numba' or 'numpy'; by default the environment decides.
    Noise enters as sqrt(2 D dt) times a standard normal per component.
    """
    starts = np.ascontiguousarray(starts, dtype=float)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    params = np.ascontiguousarray(params, dtype=float)
    n = starts.shape[0]
    if stride < 1:
        raise ValueError("stride must be >= 1")
    buf = _allocate(n, n_steps, grid, stride, store, event_capacity)
    noise_amp = float(np.sqrt(2.0 * kT / drag * dt))
    if backend is None:
        backend = "numba" if use_numba() else "numpy"
    if backend == "numba" and _kernel_c is not None:
        _run_compiled(params, starts, keys, int(n_steps), float(dt), float(drag), noise_amp, grid, int(stride), bool(store), buf)
    elif backend in ("numba", "numpy"):
        _run_numpy(params, starts, keys, int(n_steps), float(dt), float(drag), noise_amp, grid, int(stride), bool(store), buf)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return ChunkTallies(
        hist_z=buf["hz"],
        hist_qz=buf["hqz"].sum(axis=0),
        occupancy=buf["occ"],
        event_exit=buf["ev_exit"],
        event_entry=buf["ev_entry"],
        event_to=buf["ev_to"],
        n_events=buf["n_ev"],
        escapes=buf["esc"],
        final=buf["final"],
        records=buf["rec"] if store else None,
    )
