import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from chiralkramers.forcefield import potential_offset, total_force
from chiralkramers.landscape import (
    AxialPotential,
    NotBistable,
    RegimeMismatch,
    axial_marginal,
    calibrated,
    check_regime,
    chiral_potential_shift,
    dissipative_force_on_axis,
    dissipative_rates,
    kramers_rates,
    locate_extrema,
    model_rate_ratio,
    polarization_sweep,
    population_integrals,
    pseudo_potential,
    rayleigh_range_from_envelope_drop,
    reactive_rates,
    regime_of,
    stationary_pdf_axis,
    tuned_phase_delay,
)
from chiralkramers.landscape.pseudo import envelope_series
from chiralkramers.optics import PolarizationSettings, energy_densities


def test_calibration_sets_barrier_exactly(achiral_model):
    land = locate_extrema(achiral_model)
    assert land.barrier_ab == pytest.approx(achiral_model.kT, rel=1e-9)
    again = calibrated(achiral_model, 2.0 * achiral_model.kT)
    assert locate_extrema(again).barrier_ab == pytest.approx(2.0 * achiral_model.kT, rel=1e-9)


def test_extrema_are_stationary_points(achiral_model):
    land = locate_extrema(achiral_model)
    axial = AxialPotential(achiral_model)
    scale = achiral_model.kT / land.sigma("b")
    for z in (land.z_a, land.z_b, land.z_c):
        assert abs(float(axial.slope(z))) < 1e-9 * scale
    assert land.z_a < land.z_b < land.z_c
    assert land.curvature_a > 0 and land.curvature_b > 0 and land.curvature_c > 0


def test_axial_potential_agrees_with_force_field(dissipative_model):
    model = dissipative_model
    axial = AxialPotential(model)
    z = np.linspace(-1.5e-7, 1.5e-7, 41)
    np.testing.assert_allclose(axial.value(z), potential_offset(model, 0.0, z), rtol=1e-12, atol=1e-12 * model.kT)
    # optical part of the axial force is minus the slope; the chiral dissipative term is added on top
    f_opt = total_force(model.replace(particle=model.particle.__class__(model.particle.alpha, model.particle.beta, 0j, model.particle.radius)), 0.0, z).f_z
    np.testing.assert_allclose(-axial.slope(z), f_opt, rtol=1e-9, atol=1e-9 * np.max(np.abs(f_opt)))
    h = 1e-12
    fd = (axial.slope(z + h) - axial.slope(z - h)) / (2 * h)
    np.testing.assert_allclose(axial.curvature(z), fd, rtol=1e-5, atol=1e-5 * np.max(np.abs(fd)))


def test_kramers_rates_follow_steepest_descent_formula(achiral_model):
    land = locate_extrema(achiral_model)
    gamma = achiral_model.drag
    kT = achiral_model.kT
    rates = kramers_rates(land, gamma)
    expected = np.sqrt(land.curvature_a * land.curvature_b) / (2.0 * np.pi * gamma) * np.exp(-land.barrier_ab / kT)
    assert rates.rate_ac == pytest.approx(expected, rel=1e-14)


def test_achiral_landscape_is_symmetric(achiral_model):
    land = locate_extrema(achiral_model)
    assert land.z_c == pytest.approx(-land.z_a, rel=1e-9)
    assert kramers_rates(land, achiral_model.drag).ratio == pytest.approx(1.0, rel=1e-9)


def test_reactive_equilibrium_constant_is_one(reactive_model):
    rates, thermo = reactive_rates(locate_extrema(reactive_model), reactive_model)
    assert abs(rates.ratio - 1.0) <= 1e-12
    assert thermo.free_energy_shift_a == pytest.approx(thermo.free_energy_shift_c, rel=1e-12)
    assert thermo.heat_transfer == 0.0


def test_reactive_shift_flips_with_enantiomer(reactive_model):
    land = locate_extrema(reactive_model)
    left = chiral_potential_shift(reactive_model, land.z_a, land.z_b)
    right = chiral_potential_shift(reactive_model.flipped(), land.z_a, land.z_b)
    assert left == -right and left != 0.0


def test_dissipative_ratio_identity(dissipative_model):
    land = locate_extrema(dissipative_model)
    rates, thermo = dissipative_rates(land, dissipative_model)
    f0 = dissipative_force_on_axis(dissipative_model)
    assert rates.ratio == pytest.approx(np.exp(f0 * land.well_separation / dissipative_model.kT), rel=1e-12)
    assert thermo.heat_transfer == pytest.approx(f0 * land.well_separation / dissipative_model.kT, rel=1e-14)
    assert model_rate_ratio(dissipative_model) == pytest.approx(0.29, abs=0.02)


def test_dissipative_force_on_axis_matches_force_field(dissipative_model):
    f_chi = total_force(dissipative_model, 0.0, 0.0).f_z - total_force(dissipative_model.replace(particle=dissipative_model.particle.__class__(
        dissipative_model.particle.alpha, dissipative_model.particle.beta, 0j, dissipative_model.particle.radius)), 0.0, 0.0).f_z
    assert dissipative_force_on_axis(dissipative_model) == pytest.approx(float(f_chi), rel=1e-12)


@given(st.floats(0.0, 3.0), st.integers(1, 4))
def test_envelope_series_matches_function(beta, n):
    coeffs = envelope_series(beta, 2 * n)
    s = 1e-3
    g = 1.0 / (1.0 + s)
    exact = g * np.exp(-beta * g)
    approx = np.polyval(coeffs[::-1], s)
    # truncation bound plus double-precision rounding of the polynomial sum
    assert abs(approx - exact) <= 10.0 * (1.0 + beta) ** (2 * n + 1) * s ** (2 * n + 1) + 4e-16


@pytest.mark.parametrize("order", [2, 4, 8])
def test_pseudo_potential_reproduces_axial_dissipative_force(dissipative_model, order):
    model = dissipative_model
    pseudo = pseudo_potential(model, 0.0, order)
    zr = model.config.rayleigh_range
    z = np.linspace(-0.1, 0.1, 21) * zr
    chiral_force = -2.0 * model.config.omega * model.config.sqrt_eps_mu * model.config.polarization.helicity_sum
    chiral_force *= model.particle.chi.imag * energy_densities(model.config, 0.0, z).w_trap
    # truncation error of the z^2 series at |z| <= 0.1 zR
    assert np.max(np.abs(pseudo.force(z) - chiral_force)) <= 1.1 * 0.01 ** (order // 2 + 1) * np.max(np.abs(chiral_force))
    h = 1e-12
    np.testing.assert_allclose(-(pseudo.value(z + h) - pseudo.value(z - h)) / (2 * h), pseudo.force(z), rtol=1e-6)


def test_regime_checks(reactive_model, dissipative_model, achiral_model):
    assert regime_of(reactive_model) == "reactive"
    assert regime_of(dissipative_model) == "dissipative"
    assert regime_of(achiral_model) == "achiral"
    with pytest.raises(RegimeMismatch):
        pseudo_potential(reactive_model)
    with pytest.raises(RegimeMismatch):
        check_regime(dissipative_model, "reactive")
    with pytest.raises(RegimeMismatch):
        reactive_rates(locate_extrema(dissipative_model), dissipative_model)


def test_single_well_is_not_bistable(achiral_model):
    cfg = achiral_model.config
    # linear polarizations at right angles do not interfere
    flat = achiral_model.with_config(cfg.with_polarization(PolarizationSettings(0.0, 0.0, -np.pi, 0.5 * np.pi)))
    with pytest.raises(NotBistable):
        locate_extrema(flat)


@pytest.mark.parametrize("regime_fixture", ["achiral_model", "reactive_model", "dissipative_model"])
def test_axial_densities_are_normalized(request, regime_fixture):
    model = request.getfixturevalue(regime_fixture)
    regime = regime_fixture.split("_")[0]
    pdf = stationary_pdf_axis(model, regime)
    total = integrate.simpson(pdf.density, x=pdf.z)
    assert total == pytest.approx(1.0, abs=1e-6)
    marginal = axial_marginal(model, regime)
    assert np.all(np.diff(marginal.cdf_values) >= 0)
    assert marginal.cdf_values[0] == 0.0 and marginal.cdf_values[-1] == pytest.approx(1.0, rel=1e-15)
    assert integrate.trapezoid(marginal.density, marginal.z) == pytest.approx(1.0, abs=1e-5)


def test_achiral_population_split_is_even(achiral_model):
    res = population_integrals(achiral_model, "achiral")
    assert res.ratio == pytest.approx(1.0, abs=1e-5)


def test_sweep_zero_helicity_row_has_no_chiral_force(achiral_model):
    res = polarization_sweep(achiral_model, [0.0, 0.5], [0.2, 0.7, 1.2], "reactive")
    assert np.all(res.ratio[0] == 0.0)
    assert np.all(res.ratio[1] > 0.0)
    res = polarization_sweep(achiral_model, [0.0, 0.5], [0.2, 0.7, 1.2], "dissipative")
    assert np.all(res.ratio[0] == 0.0)


@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-np.pi, np.pi))
def test_tuned_phase_delay_minimizes_focal_interference(hp, hm, theta):
    delta = tuned_phase_delay(hp, hm, theta)
    pol = PolarizationSettings(hp, hm, delta, theta)
    focal = pol.h2 * np.cos(theta) * np.cos(delta) + pol.h1 * np.sin(theta) * np.sin(delta)
    assert focal == pytest.approx(-pol.interference_amplitude_on_axis, abs=1e-12)
    assert -np.pi < delta <= np.pi


def test_envelope_drop_inverts_rayleigh_law():
    zr = rayleigh_range_from_envelope_drop(50e-9, 1e-3)
    assert (50e-9 / zr) ** 2 == pytest.approx(1e-3, rel=1e-14)
