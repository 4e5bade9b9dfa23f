import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiralkramers._accel import HAVE_NUMBA, jit_variant
from chiralkramers.forcefield import (
    ForceModel,
    curl_diagnostic,
    decompose_forces,
    pack_parameters,
    potential,
    potential_offset,
    reduced_force,
    total_force,
)
from chiralkramers.optics import densities_from_fields, superposed_fields

helicity = st.floats(-1.0, 1.0)
angle = st.floats(-np.pi, np.pi)


def _explicit_scalars(cfg, q, z):
    e, h = superposed_fields(cfg, q, np.zeros_like(q), z)
    return densities_from_fields(cfg, e, h)


def _central(fun, x, step):
    return (fun(x + step) - fun(x - step)) / (2.0 * step)


@given(helicity, helicity, angle, angle, st.integers(0, 2**32 - 1))
def test_reactive_forces_are_gradients_of_explicit_scalars(trap_factory, left_particle, hp, hm, delta, theta, seed):
    cfg = trap_factory(hp, hm, delta, theta)
    model = ForceModel(cfg, left_particle, include_magnetic=True)
    rng = np.random.default_rng(seed)
    q = rng.uniform(0.05, 2.0, 16) * cfg.waist_radius
    z = rng.uniform(-1.0, 1.0, 16) * cfg.rayleigh_range
    p = left_particle
    unit = cfg.omega * cfg.sqrt_eps_mu

    def energy(qq, zz):
        s = _explicit_scalars(cfg, qq, zz)
        return -(p.alpha.real * s["w_electric"] + p.beta.real * s["w_magnetic"] + p.chi.real * s["chiral_density"] / unit)

    step = 1e-11
    f_rho = -_central(lambda x: energy(x, z), q, step)
    f_z = -_central(lambda x: energy(q, x), z, step)
    d = decompose_forces(model, q, z)
    parts = (d.electric_reactive, d.magnetic_reactive, d.chiral_reactive)
    an_rho = sum(v.f_rho for v in parts)
    an_z = sum(v.f_z for v in parts)
    err = np.hypot(an_rho - f_rho, an_z - f_z) / np.hypot(an_rho, an_z)
    assert np.max(err) < 1e-6


@given(helicity, helicity, angle, angle)
def test_dissipative_forces_follow_explicit_fluxes(trap_factory, left_particle, hp, hm, delta, theta):
    cfg = trap_factory(hp, hm, delta, theta)
    model = ForceModel(cfg, left_particle)
    q = np.linspace(0.1, 2.0, 12) * cfg.waist_radius
    z = np.linspace(-1.0, 1.0, 12) * cfg.rayleigh_range
    d = decompose_forces(model, q, z)
    s = _explicit_scalars(cfg, q, z)
    expected_z = 2.0 * cfg.sqrt_eps_mu * left_particle.chi.imag * s["chiral_flux"][2]
    scale = 2.0 * cfg.sqrt_eps_mu * abs(left_particle.chi.imag) * cfg.omega * s["w_electric"].max()
    assert np.max(np.abs(d.chiral_dissipative.f_z - expected_z)) <= 1e-12 * scale
    step = 1e-11
    flux_q = _central(lambda x: _explicit_scalars(cfg, x, z)["flux_electric"][2], q, step)
    expected_theta = left_particle.alpha.imag * flux_q / cfg.omega
    natural = abs(left_particle.alpha.imag) * s["w_electric"].max() / cfg.waist_radius
    assert np.max(np.abs(d.electric_dissipative.f_theta - expected_theta)) <= 1e-6 * natural


def test_total_force_is_sum_of_switched_terms(achiral_model, left_particle):
    model = achiral_model.replace(include_magnetic=True)
    q = np.linspace(0.0, 1e-6, 7)
    z = np.linspace(-1e-6, 1e-6, 7)
    d = decompose_forces(model, q, z)
    total = total_force(model, q, z)
    expected = d.total(include_magnetic=True, include_azimuthal=True)
    np.testing.assert_allclose(total.f_z, expected.f_z, rtol=1e-13, atol=1e-30)
    np.testing.assert_allclose(total.f_theta, expected.f_theta, rtol=1e-13, atol=1e-30)
    off = total_force(model.replace(include_azimuthal=False), q, z)
    assert np.all(off.f_theta == 0.0)


def test_forces_vanish_on_axis_except_axial(dissipative_model):
    f = total_force(dissipative_model, 0.0, np.linspace(-1e-7, 1e-7, 5))
    assert np.all(f.f_rho == 0.0) and np.all(f.f_theta == 0.0)


def test_reactive_field_is_curl_free_and_chiral_flux_force_is_not(dissipative_model):
    report = curl_diagnostic(dissipative_model.replace(include_magnetic=True))
    assert report.reactive_is_conservative
    assert report.dissipative_has_curl


def test_potential_offset_matches_direct_difference(achiral_model):
    q = np.array([0.0, 1e-7, 3e-7])
    z = np.array([0.0, 2e-8, -5e-8])
    w0 = achiral_model.config.peak_trap_density
    direct = potential(achiral_model, q, z).u_opt + achiral_model.particle.alpha.real * w0
    offset = potential_offset(achiral_model, q, z)
    # direct difference loses about 1e-16 of a 1e5 kT deep trap
    np.testing.assert_allclose(offset, direct, rtol=0, atol=1e-10 * abs(achiral_model.particle.alpha.real * w0))


@given(st.floats(1e-9, 1e-6), st.floats(-2e-6, 2e-6))
def test_enantiomer_flip_reverses_only_chiral_terms(reactive_model, q, z):
    left = decompose_forces(reactive_model, q, z)
    right = decompose_forces(reactive_model.flipped(), q, z)
    assert right.electric_reactive == left.electric_reactive
    assert float(right.chiral_reactive.f_z) == -float(left.chiral_reactive.f_z)
    assert float(right.chiral_dissipative.f_z) == -float(left.chiral_dissipative.f_z)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_compiled_force_matches_numpy(dissipative_model):
    import chiralkramers.forcefield as ff

    field_terms = jit_variant(ff._field_terms, {"inline": "always"})
    compiled = jit_variant(reduced_force, None, _field_terms=field_terms)
    P = pack_parameters(dissipative_model)
    rng = np.random.default_rng(3)
    for q, z in rng.uniform([0.0, -2e-6], [1e-6, 2e-6], size=(50, 2)):
        a = compiled(q, z, P)
        b = reduced_force(q, z, P)
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)


def test_harmonic_term_restores(achiral_model):
    model = achiral_model.with_config(achiral_model.config.with_field_amplitude(0.0)).replace(harmonic_stiffness=1e-6)
    f = total_force(model, 2e-7, -3e-7)
    assert float(f.f_rho) == pytest.approx(-2e-13, rel=1e-14)
    assert float(f.f_z) == pytest.approx(3e-13, rel=1e-14)
    with pytest.raises(ValueError):
        achiral_model.replace(drag_factor=0.0)
