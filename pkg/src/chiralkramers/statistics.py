"""Residency-time analysis of bistable trajectories.

Jumps are found with a two-threshold (hysteresis) state machine: the particle
is in well A once z drops below ``lower`` and in well C once z rises above
``upper``; excursions that turn back before reaching the opposite threshold
are ignored. The residency time in a well runs from one arrival to the next
departure-completing arrival, i.e. between successive entry times. The
interval before the first jump and after the last one are censored.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .forcefield import ForceModel
from .landscape import BistableLandscape, EffectivePotential

__all__ = [
    "WELL_A",
    "WELL_C",
    "HysteresisConfig",
    "JumpEvent",
    "TrajectoryEvents",
    "InsufficientEvents",
    "InconsistentWells",
    "ExponentialFit",
    "ResidencyStatistics",
    "ChiExtraction",
    "detect_jumps",
    "residency_samples",
    "fit_exponential",
    "residency_distribution",
    "absolute_chi_extraction",
    "events_csv",
    "residency_histogram_csv",
    "fit_report_jsonl",
]

WELL_A = -1
WELL_C = 1
_NAMES = {WELL_A: "A", WELL_C: "C"}


class InsufficientEvents(ValueError):
    """Too few uncensored residencies in a well to fit its exponential law."""

    def __init__(self, counts: dict, floor: int, reason: str | None = None):
        self.counts = counts
        self.floor = floor
        self.reason = reason
        message = f"need at least {floor} usable residencies per well, got {counts}"
        super().__init__(f"{reason} ({counts} residencies)" if reason else message)


class InconsistentWells(ValueError):
    """Estimates from the two wells disagree beyond their combined uncertainty."""


@dataclass(frozen=True)
class HysteresisConfig:
    """Jump thresholds at center -/+ sigma and per-well correlation times (s)."""

    exclusion_sigma: float
    correlation_time_a: float = 0.0
    correlation_time_c: float = 0.0
    center: float = 0.0

    def __post_init__(self):
        if not self.exclusion_sigma > 0:
            raise ValueError("exclusion_sigma must be > 0")
        if self.correlation_time_a < 0 or self.correlation_time_c < 0:
            raise ValueError("correlation times must be >= 0")

    @property
    def lower(self) -> float:
        return self.center - self.exclusion_sigma

    @property
    def upper(self) -> float:
        return self.center + self.exclusion_sigma

    @property
    def well_boundaries(self) -> tuple[float, float]:
        return self.lower, self.upper

    def correlation_time(self, well: int) -> float:
        return self.correlation_time_a if well == WELL_A else self.correlation_time_c

    @classmethod
    def from_landscape(cls, landscape: BistableLandscape, drag: float, sigma: float | None = None) -> "HysteresisConfig":
        """sigma from the barrier curvature (unless given), t_corr = 2 pi gamma / curvature of each well."""
        if sigma is None:
            sigma = landscape.sigma("b")
        return cls(
            exclusion_sigma=float(sigma),
            correlation_time_a=float(2.0 * np.pi * drag / landscape.curvature_a),
            correlation_time_c=float(2.0 * np.pi * drag / landscape.curvature_c),
        )

    @classmethod
    def from_model(cls, model: ForceModel, regime: str, sigma: float | None = None) -> "HysteresisConfig":
        """Derived from the effective potential of ``regime``."""
        phi = EffectivePotential(model, regime)
        return cls.from_landscape(phi.landscape, model.drag, sigma)


@dataclass(frozen=True)
class JumpEvent:
    from_well: str
    to_well: str
    exit_time: float
    entry_time: float


@dataclass
class TrajectoryEvents:
    """Jumps of one trajectory, as sample indices, with the sampling interval and total length."""

    exit_index: np.ndarray
    entry_index: np.ndarray
    destination: np.ndarray
    dt: float
    n_samples: int

    @property
    def count(self) -> int:
        return int(self.entry_index.size)

    def jump_events(self) -> list[JumpEvent]:
        return [
            JumpEvent(_NAMES[-int(d)], _NAMES[int(d)], float(e * self.dt), float(n * self.dt))
            for e, n, d in zip(self.exit_index, self.entry_index, self.destination)
        ]

    def rescaled(self, factor: float) -> "TrajectoryEvents":
        return TrajectoryEvents(self.exit_index, self.entry_index, self.destination, self.dt * factor, self.n_samples)


def _zones(z, lower, upper):
    return np.where(z < lower, WELL_A, np.where(z > upper, WELL_C, 0))


def detect_jumps(z_series, hysteresis: HysteresisConfig, dt: float = 1.0) -> TrajectoryEvents:
    """Hysteresis jump detection on a uniformly sampled axial trace.

    Returns the events with sample indices: ``entry_index`` is the first
    sample beyond the destination threshold and ``exit_index`` the first
    sample after the last one beyond the threshold of the well being left.
    """
    z = np.asarray(z_series, dtype=float)
    zones = _zones(z, hysteresis.lower, hysteresis.upper)
    settled = np.nonzero(zones)[0]
    labels = zones[settled]
    change = np.nonzero(labels[1:] != labels[:-1])[0]
    return TrajectoryEvents(
        exit_index=settled[change] + 1,
        entry_index=settled[change + 1],
        destination=labels[change + 1].astype(np.int8),
        dt=float(dt),
        n_samples=int(z.size),
    )


def residency_samples(events: TrajectoryEvents) -> dict:
    """Uncensored residency times (s) per well: intervals between successive entries.

    A trajectory with n jumps yields n - 1 complete residencies; the partial
    intervals before the first and after the last jump are dropped.
    """
    entries = events.entry_index.astype(np.float64) * events.dt
    taus = np.diff(entries)
    wells = events.destination[:-1]
    return {"A": taus[wells == WELL_A], "C": taus[wells == WELL_C]}


@dataclass(frozen=True)
class ExponentialFit:
    """Weighted straight-line fit of ln P(tau) against tau."""

    slope: float  # 1/s, positive for a decaying law
    slope_error: float
    intercept: float
    bin_width: float
    n_bins: int
    n_samples: int

    @property
    def mean_time(self) -> float:
        return 1.0 / self.slope

    @property
    def mean_time_error(self) -> float:
        return self.slope_error / self.slope**2


def fit_exponential(taus, offset: float = 0.0, min_bins: int = 8, min_count: int = 5, bins_per_mean: float = 10.0) -> ExponentialFit:
    """Fit P(tau) ~ exp(-tau / <tau>) for tau >= offset.

    Linear bins of width mean(tau - offset) / bins_per_mean start at ``offset``;
    the histogram is cut at the first bin holding fewer than ``min_count``
    samples, and ln P is fitted with weights sqrt(count), the inverse standard
    deviation of a Poisson log-count.
    """
    t = np.asarray(taus, dtype=float)
    t = t[t >= offset]
    if t.size == 0:
        raise ValueError("no samples above the offset")
    excess_mean = float(np.mean(t - offset))
    width = excess_mean / bins_per_mean
    if not width > 0:
        raise ValueError("degenerate residency samples")
    n_edges = int(np.ceil((t.max() - offset) / width)) + 2
    edges = offset + width * np.arange(n_edges)
    counts, _ = np.histogram(t, edges)
    low = np.nonzero(counts < min_count)[0]
    used = int(low[0]) if low.size else counts.size
    if used < min_bins:
        raise ValueError(f"only {used} bins hold at least {min_count} samples, need {min_bins}")
    counts = counts[:used]
    centers = 0.5 * (edges[:used] + edges[1 : used + 1])
    density = counts / (t.size * width)
    coef, cov = np.polyfit(centers - offset, np.log(density), 1, w=np.sqrt(counts), cov="unscaled")
    return ExponentialFit(
        slope=float(-coef[0]),
        slope_error=float(np.sqrt(cov[0, 0])),
        intercept=float(coef[1]),
        bin_width=float(width),
        n_bins=used,
        n_samples=int(t.size),
    )


@dataclass
class ResidencyStatistics:
    residency_samples_a: np.ndarray
    residency_samples_c: np.ndarray
    fit_a: ExponentialFit
    fit_c: ExponentialFit
    mean_tau_a: float
    mean_tau_c: float
    mean_tau_error_a: float
    mean_tau_error_c: float
    counts: dict = field(default_factory=dict)

    @property
    def fit_slope_a(self) -> float:
        return self.fit_a.slope

    @property
    def fit_slope_c(self) -> float:
        return self.fit_c.slope

    @property
    def fitted_tau_a(self) -> float:
        return self.fit_a.mean_time

    @property
    def fitted_tau_c(self) -> float:
        return self.fit_c.mean_time

    @property
    def ratio_c_over_a(self) -> float:
        """Headline ratio <tau_C> / <tau_A> from the fitted slopes."""
        return self.fit_a.slope / self.fit_c.slope

    @property
    def ratio_error(self) -> float:
        r = self.ratio_c_over_a
        return r * float(np.hypot(self.fit_a.slope_error / self.fit_a.slope, self.fit_c.slope_error / self.fit_c.slope))

    @property
    def mean_ratio_c_over_a(self) -> float:
        """Same ratio from the sample means of the excess residency times."""
        return self.mean_tau_c / self.mean_tau_a

    @property
    def mean_ratio_error(self) -> float:
        r = self.mean_ratio_c_over_a
        return r * float(np.hypot(self.mean_tau_error_a / self.mean_tau_a, self.mean_tau_error_c / self.mean_tau_c))

    def summary(self) -> dict:
        return {
            "fitted_tau_a_s": self.fitted_tau_a,
            "fitted_tau_a_error_s": self.fit_a.mean_time_error,
            "fitted_tau_c_s": self.fitted_tau_c,
            "fitted_tau_c_error_s": self.fit_c.mean_time_error,
            "fit_slope_a_per_s": self.fit_slope_a,
            "fit_slope_c_per_s": self.fit_slope_c,
            "ratio_c_over_a": self.ratio_c_over_a,
            "ratio_error": self.ratio_error,
            "mean_tau_a_s": self.mean_tau_a,
            "mean_tau_c_s": self.mean_tau_c,
            "mean_ratio_c_over_a": self.mean_ratio_c_over_a,
            "mean_ratio_error": self.mean_ratio_error,
            "counts": self.counts,
        }


def residency_distribution(
    events: TrajectoryEvents | Iterable[TrajectoryEvents],
    hysteresis: HysteresisConfig,
    min_events: int = 10,
    min_bins: int = 8,
) -> ResidencyStatistics:
    """Pool residencies over trajectories, drop those shorter than t_corr and fit each well.

    The sample mean is taken over the excess tau - t_corr, which is the
    maximum-likelihood mean of an exponential law observed above t_corr.
    """
    if isinstance(events, TrajectoryEvents):
        events = [events]
    pooled = {"A": [], "C": []}
    n_traj = 0
    n_jumps = 0
    censored = 0
    for ev in events:
        n_traj += 1
        n_jumps += ev.count
        # n jumps cut a trace into n + 1 intervals, the first and last of which are partial
        censored += 2 if ev.count else 1
        samples = residency_samples(ev)
        pooled["A"].append(samples["A"])
        pooled["C"].append(samples["C"])
    taus = {k: np.concatenate(v) if v else np.empty(0) for k, v in pooled.items()}
    t_corr = {"A": hysteresis.correlation_time(WELL_A), "C": hysteresis.correlation_time(WELL_C)}
    kept = {k: taus[k][taus[k] >= t_corr[k]] for k in taus}
    counts = {
        "trajectories": n_traj,
        "jumps": n_jumps,
        "complete_a": int(taus["A"].size),
        "complete_c": int(taus["C"].size),
        "kept_a": int(kept["A"].size),
        "kept_c": int(kept["C"].size),
        "censored": censored,
    }
    if kept["A"].size < min_events or kept["C"].size < min_events:
        raise InsufficientEvents({"A": int(kept["A"].size), "C": int(kept["C"].size)}, min_events)
    fits = {}
    means = {}
    for k in ("A", "C"):
        try:
            fits[k] = fit_exponential(kept[k], t_corr[k], min_bins=min_bins)
        except ValueError as exc:
            raise InsufficientEvents({"A": int(kept["A"].size), "C": int(kept["C"].size)}, min_events, f"well {k}: {exc}") from exc
        excess = kept[k] - t_corr[k]
        means[k] = (float(np.mean(excess)), float(np.mean(excess) / np.sqrt(excess.size)))
    return ResidencyStatistics(
        residency_samples_a=kept["A"],
        residency_samples_c=kept["C"],
        fit_a=fits["A"],
        fit_c=fits["C"],
        mean_tau_a=means["A"][0],
        mean_tau_c=means["C"][0],
        mean_tau_error_a=means["A"][1],
        mean_tau_error_c=means["C"][1],
        counts=counts,
    )


@dataclass(frozen=True)
class ChiExtraction:
    """Chiral polarizability recovered from residency times (m^3), per well and combined."""

    re_chi: float | None
    re_chi_error: float | None
    im_chi: float | None
    im_chi_error: float | None
    per_well: dict

    def as_dict(self) -> dict:
        return asdict(self)


def _combine(est_a, err_a, est_c, err_c, what):
    if abs(est_a - est_c) > 3.0 * np.hypot(err_a, err_c):
        raise InconsistentWells(f"{what}: well A gives {est_a:.4e}, well C gives {est_c:.4e} (errors {err_a:.2e}, {err_c:.2e})")
    w_a, w_c = 1.0 / err_a**2, 1.0 / err_c**2
    return (w_a * est_a + w_c * est_c) / (w_a + w_c), 1.0 / np.sqrt(w_a + w_c)


def _log_ratio(tau, tau_err, ref, ref_err):
    return float(np.log(tau / ref)), float(np.hypot(tau_err / tau, ref_err / ref))


def _chiral_log_ratios(kind, tau, reference, mirror):
    """Per-well ln(tau / tau_ref) of the chiral term alone, with its standard error.

    With a mirror-image (opposite enantiomer) measurement the chiral term
    enters both with opposite signs, so half of ln(tau / tau_mirror) isolates it.
    """
    if mirror is not None:
        return [(0.5 * lr, 0.5 * err) for lr, err in (_log_ratio(t[0], t[1], m[0], m[1]) for t, m in zip(tau, mirror))]
    if reference is None:
        raise ValueError(f"{kind} extraction needs an achiral reference or a mirror-image measurement")
    return [_log_ratio(t[0], t[1], r[0], r[1]) for t, r in zip(tau, reference)]


def absolute_chi_extraction(
    tau_achiral: Sequence[tuple[float, float]] | None,
    landscape: BistableLandscape,
    reactive_model: ForceModel | None = None,
    tau_reactive: Sequence[tuple[float, float]] | None = None,
    dissipative_model: ForceModel | None = None,
    tau_dissipative: Sequence[tuple[float, float]] | None = None,
    tau_dissipative_reference: Sequence[tuple[float, float]] | None = None,
    tau_reactive_mirror: Sequence[tuple[float, float]] | None = None,
    tau_dissipative_mirror: Sequence[tuple[float, float]] | None = None,
) -> ChiExtraction:
    """Re(chi) and Im(chi) from residency times measured on the same calibrated trap.

    Every ``tau_*`` argument is ((tau_A, error_A), (tau_C, error_C)) in seconds
    and refers to the enantiomer whose chi is extracted, except the
    ``*_mirror`` arguments, which hold the opposite enantiomer in the same
    field. ``landscape`` locates z_A, z_B, z_C of the optical potential. For
    each well i, with r_i = ln(tau_i / tau_i^ref):

    * Re(chi) = kT r_i / u_i, where u_i is the chiral potential difference
      U_chi(z_B) - U_chi(z_i) per unit Re(chi);
    * Im(chi) = -kT r_i / (f (z_B - z_i)), where f is the on-axis dissipative
      force at the focus per unit Im(chi).

    The reference is the achiral measurement, or for the dissipative term a
    separate reference run with the dissipative beam settings. Given a mirror
    measurement, r_i = ln(tau_i / tau_i^mirror) / 2 instead, which needs no
    achiral run. Well estimates are combined by inverse-variance weighting
    after checking that they agree within three combined standard errors.
    """
    kT = landscape.kT
    wells = {"A": landscape.z_a, "C": landscape.z_c}
    per_well: dict = {}
    re_chi = re_err = im_chi = im_err = None
    if tau_reactive is not None:
        if reactive_model is None:
            raise ValueError("reactive_model is required with tau_reactive")
        cfg = reactive_model.config
        zr = cfg.rayleigh_range
        g = lambda z: 1.0 / (1.0 + (z / zr) ** 2)
        est = {}
        ratios = _chiral_log_ratios("reactive", tau_reactive, tau_achiral, tau_reactive_mirror)
        for k, (lr, lr_err) in zip(wells, ratios):
            unit = cfg.polarization.helicity_difference * cfg.peak_trap_density * (g(landscape.z_b) - g(wells[k]))
            if unit == 0:
                raise ValueError("reactive settings carry no chiral potential difference")
            est[k] = (kT * lr / unit, abs(kT * lr_err / unit))
            per_well[f"re_chi_{k.lower()}"] = est[k]
        re_chi, re_err = _combine(*est["A"], *est["C"], "Re(chi)")
    if tau_dissipative is not None:
        if dissipative_model is None:
            raise ValueError("dissipative_model is required with tau_dissipative")
        reference = tau_dissipative_reference if tau_dissipative_reference is not None else tau_achiral
        cfg = dissipative_model.config
        force_unit = -2.0 * cfg.omega * cfg.sqrt_eps_mu * cfg.polarization.helicity_sum * cfg.peak_trap_density
        if force_unit == 0:
            raise ValueError("dissipative settings carry no chiral flux")
        est = {}
        ratios = _chiral_log_ratios("dissipative", tau_dissipative, reference, tau_dissipative_mirror)
        for k, (lr, lr_err) in zip(wells, ratios):
            unit = force_unit * (landscape.z_b - wells[k])
            est[k] = (-kT * lr / unit, abs(kT * lr_err / unit))
            per_well[f"im_chi_{k.lower()}"] = est[k]
        im_chi, im_err = _combine(*est["A"], *est["C"], "Im(chi)")
    return ChiExtraction(
        None if re_chi is None else float(re_chi),
        None if re_err is None else float(re_err),
        None if im_chi is None else float(im_chi),
        None if im_err is None else float(im_err),
        per_well,
    )


def events_csv(events: Iterable[tuple[int, TrajectoryEvents]]) -> str:
    """CSV of jumps: trajectory, from, to, exit and entry times (s)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trajectory", "from_well", "to_well", "exit_time_s", "entry_time_s"])
    for index, ev in events:
        for e in ev.jump_events():
            w.writerow([index, e.from_well, e.to_well, repr(e.exit_time), repr(e.entry_time)])
    return buf.getvalue()


def residency_histogram_csv(stats: ResidencyStatistics, hysteresis: HysteresisConfig) -> str:
    """Binned residency densities of both wells with the bin edges used by the fits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["well", "bin_lo_s", "bin_hi_s", "count", "density_per_s"])
    for well, samples, fit, t0 in (
        ("A", stats.residency_samples_a, stats.fit_a, hysteresis.correlation_time_a),
        ("C", stats.residency_samples_c, stats.fit_c, hysteresis.correlation_time_c),
    ):
        edges = t0 + fit.bin_width * np.arange(fit.n_bins + 1)
        counts, _ = np.histogram(samples, edges)
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            w.writerow([well, repr(float(lo)), repr(float(hi)), int(c), repr(float(c / (samples.size * fit.bin_width)))])
    return buf.getvalue()


def fit_report_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
