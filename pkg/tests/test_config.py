import pytest

from chiralkramers.config import (
    ParseError,
    ValidationError,
    load_config,
    parse_config,
    shipped_config,
    shipped_config_names,
)

BASE = shipped_config("paper-reactive.cfg").read_text()


def _edit(text, old, new):
    assert old in text
    return text.replace(old, new, 1)


@pytest.mark.parametrize("name", ["paper-achiral.cfg", "paper-reactive.cfg", "paper-dissipative-left.cfg", "paper-dissipative-right.cfg"])
def test_shipped_configs_load(name):
    cfg = load_config(name)
    assert name in shipped_config_names()
    assert cfg.regime == name.split("-")[1].split(".")[0]
    assert len(cfg.config_hash) == 64
    assert cfg.simulation_plan("ensemble", "desk").n_trajectories == 1250


def test_mirror_pair_differs_only_by_enantiomer():
    left = load_config("paper-dissipative-left.cfg")
    right = load_config("paper-dissipative-right.cfg")
    assert left.particle.chi == -right.particle.chi
    assert left.config_hash != right.config_hash


def test_hash_ignores_comments_and_layout_but_not_values():
    a = parse_config(BASE)
    b = parse_config("# leading comment\n" + BASE.replace("radius_nm = 20", "radius_nm   =   20"))
    assert a.config_hash == b.config_hash
    c = parse_config(_edit(BASE, "radius_nm = 20", "radius_nm = 21"))
    assert c.config_hash != a.config_hash


def test_included_material_enters_the_hash(tmp_path):
    (tmp_path / "gold-785nm.cfg").write_text("[material]\npermittivity = [-22.96, 1.5]\n")
    path = tmp_path / "run.cfg"
    path.write_text(BASE)
    local = load_config(path)
    assert local.config_hash != load_config("paper-reactive.cfg").config_hash
    assert local.material.permittivity_rel == complex(-22.96, 1.5)


def test_inline_permittivity_matches_the_material_file():
    inline = parse_config(_edit(BASE, "material_file = gold-785nm.cfg", "permittivity = [-22.96, 1.431]"))
    assert inline.particle.alpha == load_config("paper-reactive.cfg").particle.alpha


@pytest.mark.parametrize(
    "old,new,invariant",
    [
        ("helicity_minus = -0.05", "helicity_minus = 0.05", "regime"),
        ("radius_nm = 20", "radius_nm = -20", None),
        ("helicity_plus = 0.05", "helicity_plus = 1.5", None),
        ("viscosity_pa_s = 0.88e-3", "viscosity_pa_s = 0", None),
    ],
)
def test_invalid_values_raise_validation_error(old, new, invariant):
    with pytest.raises(ValidationError) as err:
        parse_config(_edit(BASE, old, new))
    if invariant:
        assert invariant in err.value.invariant


def test_parse_errors_carry_line_numbers():
    lines = BASE.splitlines()
    line = next(i for i, l in enumerate(lines, 1) if l.startswith("radius_nm"))
    with pytest.raises(ParseError) as err:
        parse_config(_edit(BASE, "radius_nm = 20", "radius_nm = twenty"), "x.cfg")
    assert err.value.line == line and err.value.path == "x.cfg"
    assert "radius_nm" in err.value.field
    with pytest.raises(ParseError):
        parse_config(_edit(BASE, "radius_nm = 20", "radius_nm = 20\ncolour = blue"))
    with pytest.raises(ParseError):
        parse_config(BASE + "\n[extras]\nfoo = 1\n")
    with pytest.raises(ParseError):
        parse_config("radius_nm = 20\n" + BASE)
    with pytest.raises(ParseError):
        parse_config(BASE.replace("[fluid]\n", ""))


def test_missing_file():
    with pytest.raises(ParseError):
        load_config("/nonexistent/run.cfg")


def test_plan_overrides_and_preset_inheritance():
    cfg = load_config("paper-reactive.cfg")
    plan = cfg.simulation_plan("residency", "desk", master_seed=5)
    assert plan.enantiomer == "racemic" and plan.master_seed == 5
    assert plan.n_trajectories == 512 and plan.time_step == pytest.approx(0.95e-9)
    own = cfg.simulation_plan("ensemble", "config")
    assert own.n_trajectories == 20000 and own.master_seed == 2002
    with pytest.raises(ValidationError):
        parse_config(BASE.split("[simulation]")[0]).simulation_plan("ensemble", "config")
