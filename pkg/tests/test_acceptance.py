"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed at the end of the run."""

import os
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from chiralkramers.cli import write_ensemble
from chiralkramers.forcefield import ForceModel, curl_diagnostic, decompose_forces, pack_parameters
from chiralkramers.landscape import (
    axial_marginal,
    calibrated,
    dissipative_force_on_axis,
    dissipative_rates,
    kramers_rates,
    locate_extrema,
    model_rate_ratio,
    population_ratio_3d,
    quadrature_rates,
    reactive_rates,
)
from chiralkramers.optics import (
    PolarizationSettings,
    TrapConfiguration,
    chiral_density,
    chiral_flux,
    densities_from_fields,
    energy_densities,
    poynting,
    superposed_fields,
)
from chiralkramers.simulator import SimulationPlan, model_for, rng, run_ensemble
from chiralkramers.simulator.kernels import KernelGrid, integrate_chunk
from chiralkramers.simulator.sampling import model_density_grid, sample_from_density
from chiralkramers.statistics import absolute_chi_extraction, residency_distribution

pytestmark = pytest.mark.acceptance

C_LIGHT = 299792458.0


def record(n: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def _random_polarizations(n, seed):
    r = np.random.default_rng(seed)
    out = []
    for k in range(n):
        hp, hm = r.uniform(-1.0, 1.0, 2)
        # every fourth setting sits on a selection-rule line
        if k % 4 == 1:
            hm = hp
        elif k % 4 == 2:
            hm = -hp
        out.append(PolarizationSettings(hp, hm, r.uniform(-np.pi, np.pi), r.uniform(-np.pi, np.pi)))
    return out


def test_criterion_01_field_identities(achiral_model):
    start = time.perf_counter()
    base = achiral_model.config
    worst_sum = worst_pi = 0.0
    rules = True
    for pol in _random_polarizations(20, 101):
        cfg = TrapConfiguration(base.fluid, base.beam, pol)
        q = np.linspace(0.0, 2.0 * cfg.waist_radius, 64)
        z = np.linspace(-cfg.rayleigh_range, cfg.rayleigh_range, 64)
        qq, zz = np.meshgrid(q, z, indexing="ij")
        d = energy_densities(cfg, qq, zz)
        worst_sum = max(worst_sum, float(np.max(np.abs(d.w_electric + d.w_magnetic - 2.0 * d.w_trap) / (2.0 * d.w_trap))))
        pv = np.linalg.norm(np.stack(poynting(cfg, qq, zz)), axis=0)
        worst_pi = max(worst_pi, float(np.max(pv / (C_LIGHT * d.w_trap))))
        if pol.helicity_plus == pol.helicity_minus:
            rules &= bool(np.all(chiral_density(cfg, qq, zz) == 0.0))
        if pol.helicity_plus == -pol.helicity_minus:
            rules &= bool(np.all(chiral_flux(cfg, qq, zz).chiral_flux[2] == 0.0))
    elapsed = time.perf_counter() - start
    passed = worst_sum <= 1e-12 and worst_pi <= 1e-10 and rules and elapsed < 10.0
    record(1, passed, f"energy sum {worst_sum:.1e} <= 1e-12, |Pi|/(c W) {worst_pi:.1e} <= 1e-10, "
                      f"selection rules exact {rules}, {elapsed:.1f} s < 10 s")
    assert passed


def test_criterion_02_force_correctness(left_particle, achiral_model):
    start = time.perf_counter()
    base = achiral_model.config
    r = np.random.default_rng(202)
    worst = 0.0
    worst_diss = 0.0
    conservative = True
    for pol in _random_polarizations(10, 203):
        cfg = TrapConfiguration(base.fluid, base.beam, pol)
        model = ForceModel(cfg, left_particle, include_magnetic=True)
        q = r.uniform(0.05, 2.0, 100) * cfg.waist_radius
        z = r.uniform(-1.0, 1.0, 100) * cfg.rayleigh_range
        unit = cfg.omega * cfg.sqrt_eps_mu
        p = left_particle

        def energy(qq, zz):
            e, h = superposed_fields(cfg, qq, np.zeros_like(qq), zz)
            s = densities_from_fields(cfg, e, h)
            return -(p.alpha.real * s["w_electric"] + p.beta.real * s["w_magnetic"] + p.chi.real * s["chiral_density"] / unit)

        step = 1e-11
        f_rho = -(energy(q + step, z) - energy(q - step, z)) / (2 * step)
        f_z = -(energy(q, z + step) - energy(q, z - step)) / (2 * step)
        d = decompose_forces(model, q, z)
        parts = (d.electric_reactive, d.magnetic_reactive, d.chiral_reactive)
        an_rho = sum(v.f_rho for v in parts)
        an_z = sum(v.f_z for v in parts)
        worst = max(worst, float(np.max(np.hypot(an_rho - f_rho, an_z - f_z) / np.hypot(an_rho, an_z))))
        e, h = superposed_fields(cfg, q, np.zeros_like(q), z)
        explicit = densities_from_fields(cfg, e, h)
        expected = 2.0 * cfg.sqrt_eps_mu * p.chi.imag * explicit["chiral_flux"][2]
        # the flux vanishes for opposite helicities, so compare against its natural size
        scale = 2.0 * cfg.sqrt_eps_mu * abs(p.chi.imag) * cfg.omega * np.max(explicit["w_electric"])
        worst_diss = max(worst_diss, float(np.max(np.abs(d.chiral_dissipative.f_z - expected)) / scale))
        report = curl_diagnostic(model)
        conservative &= report.reactive_is_conservative
    elapsed = time.perf_counter() - start
    passed = worst < 1e-6 and worst_diss < 1e-6 and conservative and elapsed < 30.0
    record(2, passed, f"reactive FD error {worst:.1e} < 1e-6 at 1000 points, dissipative vs flux {worst_diss:.1e}, "
                      f"curl below 1e-6 max|F|/w0 {conservative}, {elapsed:.1f} s < 30 s")
    assert passed


def test_criterion_03_kramers_oracle(achiral_model):
    start = time.perf_counter()
    deviation = {}
    for barrier in (1.0, 2.0, 4.0):
        model = calibrated(achiral_model, barrier * achiral_model.kT)
        land = locate_extrema(model)
        kr = kramers_rates(land, model.drag)
        qr = quadrature_rates(model, land)
        deviation[barrier] = max(abs(kr.rate_ac / qr.rate_ac - 1.0), abs(kr.rate_ca / qr.rate_ca - 1.0))
    elapsed = time.perf_counter() - start
    within = deviation[1.0] <= 0.15
    monotone = deviation[1.0] > deviation[2.0] > deviation[4.0]
    passed = within and monotone and elapsed < 60.0
    record(3, passed, f"deviation at 1 kT {deviation[1.0]:.4f} <= 0.15 ({within}); shrinks monotonically "
                      f"1/2/4 kT: {deviation[1.0]:.4f} > {deviation[2.0]:.4f} > {deviation[4.0]:.4f} ({monotone}); {elapsed:.1f} s")
    assert passed


def test_criterion_04_exact_ratio_identities(dissipative_model, reactive_model):
    start = time.perf_counter()
    land = locate_extrema(dissipative_model)
    rates, _ = dissipative_rates(land, dissipative_model)
    expected = np.exp(dissipative_force_on_axis(dissipative_model) * land.well_separation / dissipative_model.kT)
    err_d = abs(rates.ratio / expected - 1.0)
    rr, _ = reactive_rates(locate_extrema(reactive_model), reactive_model)
    err_r = abs(rr.ratio - 1.0)
    elapsed = time.perf_counter() - start
    passed = err_d <= 1e-12 and err_r <= 1e-12 and elapsed < 1.0
    record(4, passed, f"dissipative identity {err_d:.1e} <= 1e-12, reactive K-1 {err_r:.1e} <= 1e-12, {elapsed:.2f} s < 1 s")
    assert passed


def test_criterion_05_reference_numbers(dissipative_model):
    start = time.perf_counter()
    left = model_for(dissipative_model, "left")
    ratio_1d = model_rate_ratio(left)
    ratio_3d = population_ratio_3d(left)
    elapsed = time.perf_counter() - start
    ok_1d = abs(ratio_1d - 0.29) <= 0.02
    ok_3d = abs(ratio_3d - 0.36) <= 0.02
    quotient = ratio_1d / ratio_3d
    passed = ok_1d and ok_3d and elapsed < 60.0
    record(5, passed, f"1D model ratio {ratio_1d:.4f} in 0.29 +/- 0.02 ({ok_1d}); 3D population ratio {ratio_3d:.4f} "
                      f"in 0.36 +/- 0.02 ({ok_3d}); quotient {quotient:.4f} vs {0.29 / 0.36:.4f}; {elapsed:.1f} s")
    assert passed


def _free_model(model, stiffness=0.0):
    return model.with_config(model.config.with_field_amplitude(0.0)).replace(harmonic_stiffness=stiffness)


def test_criterion_06_langevin_physics(achiral_model):
    start = time.perf_counter()
    dt = 95.4e-12
    wide = 1e-3
    grid = KernelGrid(-wide, wide, wide, 8, 8, 0.0, -wide, wide)

    free = _free_model(achiral_model)
    t = integrate_chunk(pack_parameters(free), np.zeros((1, 3)), rng.trajectory_keys(606, [0]), 1_000_000, dt,
                        free.drag, free.kT, grid, 1, True)
    steps = np.diff(t.records[0], axis=0)
    sq = np.sum(steps**2, axis=1)
    msd, msd_se = sq.mean(), sq.std(ddof=1) / np.sqrt(sq.size)
    target = 6.0 * free.diffusion * dt
    ok_msd = abs(msd - target) <= 3.0 * msd_se

    stiffness = 1e-3 * achiral_model.drag / dt
    spring = _free_model(achiral_model, stiffness)
    n_traj, stride = 64, 5000
    t = integrate_chunk(pack_parameters(spring), np.zeros((n_traj, 3)), rng.trajectory_keys(607, np.arange(n_traj)),
                        1_000_000, dt, spring.drag, spring.kT, grid, stride, True)
    # drop the first relaxation times; samples 5000 steps apart are five relaxation times apart
    x = t.records[:, 2:, :].ravel()
    var = x.var()
    var_se = var * np.sqrt(2.0 / (x.size - 1))
    ok_var = abs(var - spring.kT / stiffness) <= 3.0 * var_se

    plan = SimulationPlan(dt, 100_000, 256, master_seed=608, regime="achiral", enantiomer="left")
    res = run_ensemble(plan, achiral_model)
    finals = res.member("left").final[:, 2]
    ks = stats.kstest(finals, axial_marginal(achiral_model, "achiral").cdf)
    ok_ks = ks.pvalue > 0.01
    elapsed = time.perf_counter() - start
    passed = ok_msd and ok_var and ok_ks and elapsed < 300.0
    record(6, passed, f"MSD/6Ddt {msd / target:.5f} ({abs(msd - target) / msd_se:.2f} SE); variance k/kT "
                      f"{var * stiffness / spring.kT:.4f} ({abs(var - spring.kT / stiffness) / var_se:.2f} SE); "
                      f"KS p {ks.pvalue:.3f} > 0.01; {elapsed:.0f} s < 300 s")
    assert passed


@pytest.fixture(scope="module")
def deracemization(dissipative_config):
    plan = dissipative_config.simulation_plan("residency", "desk")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        start = time.perf_counter()
        result = run_ensemble(plan, dissipative_config.force_model())
        elapsed = time.perf_counter() - start
    return plan, result, elapsed


@pytest.fixture(scope="module")
def reactive_racemic(reactive_config):
    plan = reactive_config.simulation_plan("residency", "desk")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        start = time.perf_counter()
        result = run_ensemble(plan, reactive_config.force_model())
        elapsed = time.perf_counter() - start
    return plan, result, elapsed


def test_criterion_07_desk_deracemization(deracemization, dissipative_model):
    plan, result, elapsed = deracemization
    reference = population_ratio_3d(model_for(dissipative_model, "left"))
    left = result.member("left")
    right = result.member("right")
    r_left, e_left = left.population_ratio()
    r_right, e_right = right.population_ratio()
    ok_left = abs(r_left - reference) <= 0.05
    # the mirror enantiomer is checked on the mirrored axis, where its ratio is 1 / (n_C / n_A)
    ok_right = abs(1.0 / r_right - reference) <= 0.05
    consistent = True
    parts = []
    for name, member, r_pop, e_pop in (("left", left, r_left, e_left), ("right", right, r_right, e_right)):
        st = residency_distribution(member.events, result.hysteresis)
        gap = abs(st.ratio_c_over_a - r_pop)
        combined = float(np.hypot(st.ratio_error, e_pop))
        consistent &= gap <= combined
        parts.append(f"{name} slope ratio {st.ratio_c_over_a:.3f}+/-{st.ratio_error:.3f} vs {r_pop:.3f}+/-{e_pop:.3f}")
    setup = plan.n_trajectories == 512 and plan.n_steps == 1_000_000 and plan.time_step == pytest.approx(0.95e-9)
    passed = ok_left and ok_right and consistent and setup and result.escapes == 0 and elapsed < 1800.0
    record(7, passed, f"left n_C/n_A {r_left:.4f} vs {reference:.4f} +/- 0.05 ({ok_left}); right reciprocal "
                      f"{1.0 / r_right:.4f} ({ok_right}); {'; '.join(parts)} ({consistent}); {elapsed:.0f} s")
    assert passed


def test_criterion_08_sampler(dissipative_model):
    start = time.perf_counter()
    u = rng.initial_uniforms(808, np.arange(100_000))
    q, theta, z = sample_from_density(model_density_grid(dissipative_model, "dissipative"), u)
    ks = stats.kstest(z, axial_marginal(dissipative_model, "dissipative").cdf)
    counts, _ = np.histogram(theta, np.linspace(0.0, 2.0 * np.pi, 37))
    chi2 = stats.chisquare(counts)
    elapsed = time.perf_counter() - start
    passed = ks.pvalue > 0.01 and chi2.pvalue > 0.01 and elapsed < 30.0
    record(8, passed, f"axial KS p {ks.pvalue:.3f} > 0.01, azimuth chi-square p {chi2.pvalue:.3f} > 0.01, {elapsed:.1f} s < 30 s")
    assert passed


def _mean_taus(result, enantiomer):
    st = residency_distribution(result.member(enantiomer).events, result.hysteresis)
    return (st.mean_tau_a, st.mean_tau_error_a), (st.mean_tau_c, st.mean_tau_error_c)


def test_criterion_09_chi_extraction(deracemization, reactive_racemic, reactive_model, dissipative_model):
    _, diss, _ = deracemization
    _, reac, _ = reactive_racemic
    re = absolute_chi_extraction(None, locate_extrema(reactive_model), reactive_model=reactive_model,
                                 tau_reactive=_mean_taus(reac, "left"), tau_reactive_mirror=_mean_taus(reac, "right"))
    im = absolute_chi_extraction(None, locate_extrema(dissipative_model), dissipative_model=dissipative_model,
                                 tau_dissipative=_mean_taus(diss, "left"), tau_dissipative_mirror=_mean_taus(diss, "right"))
    injected_re = reactive_model.particle.chi.real
    injected_im = dissipative_model.particle.chi.imag
    dev_re = re.re_chi / injected_re - 1.0
    dev_im = im.im_chi / injected_im - 1.0
    passed = abs(dev_re) <= 0.20 and abs(dev_im) <= 0.20
    record(9, passed, f"Re chi {re.re_chi:.4e} vs {injected_re:.4e} ({dev_re:+.2%}), Im chi {im.im_chi:.4e} vs "
                      f"{injected_im:.4e} ({dev_im:+.2%}), tolerance 20%")
    assert passed


def test_criterion_10_determinism(deracemization, dissipative_config, tmp_path):
    plan, result, _ = deracemization
    here = tmp_path / "in_process"
    write_ensemble(result, dissipative_config, here)
    there = tmp_path / "four_threads"
    env = dict(os.environ, NUMBA_NUM_THREADS="4", CHIRALKRAMERS_THREADS="4")
    chunk = max(1, plan.chunk_size // 16)
    proc = subprocess.run(
        [sys.executable, "-m", "chiralkramers.cli", "simulate", "paper-dissipative-left.cfg", "--kind", "residency",
         "--preset", "desk", "--threads", "4", "--chunk-size", str(chunk), "--out", str(there)],
        env=env, capture_output=True, text=True,
    )
    names = ("axial_histogram.csv", "radial_axial_histogram.csv", "occupancy.csv", "events.csv")
    same = proc.returncode == 0 and all((here / n).read_bytes() == (there / n).read_bytes() for n in names)
    threads = result.threads
    record(10, same, f"histograms, occupancies and events byte-identical between {threads} thread(s) with chunks of "
                     f"{plan.chunk_size} and 4 threads with chunks of {chunk} (exit {proc.returncode})")
    assert proc.returncode == 0, proc.stderr
    assert same
