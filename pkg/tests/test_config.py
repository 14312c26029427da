import pytest
from hypothesis import given, strategies as st

from volgrow import config
from volgrow.errors import ConfigError

CAT_COMPARE = """\
[system]
kind = linear_toral
row1 = 2, 1
row2 = 1, 1

[experiment]
command = compare
"""


def _failures(text):
    with pytest.raises(ConfigError) as info:
        config.parse_config(text)
    return info.value.failures


def test_minimal_cat_compare_is_valid():
    cfg = config.parse_config(CAT_COMPARE)
    assert cfg.command == "compare"
    assert cfg.system.matrix == ((2, 1), (1, 1))
    assert cfg.seed == 0 and cfg.delta == 0.05 and cfg.resolution == 1024


def test_non_unimodular_named():
    bad = CAT_COMPARE.replace("row2 = 1, 1", "row2 = 0, 1")
    (f,) = _failures(bad)
    assert "unimodular" in f["message"] and f["line"] == 3


def test_delta_constraint_cited():
    (f,) = _failures(CAT_COMPARE + "delta = 0.6\n")
    assert "delta < 0.5" in f["message"] and f["line"] == 8


def test_all_failures_reported_with_lines():
    text = """\
[system]
kind = linear_toral
row1 = 2, 0
row2 = 0, 1
colour = blue

[experiment]
command = compare
delta = 0.6
mc_count = many
samples = 10
samples = 20
"""
    failures = _failures(text)
    lines = [f["line"] for f in failures]
    assert lines == sorted(lines)
    assert {3, 5, 9, 10, 12} <= set(lines)
    text_all = " ".join(f["message"] for f in failures)
    for word in ("unimodular", "unknown key 'colour'", "delta < 0.5", "integer", "duplicate"):
        assert word in text_all


def test_missing_required_keys():
    failures = _failures("[system]\nrow1 = 1\n[experiment]\nseed = 3\n")
    msgs = " ".join(f["message"] for f in failures)
    assert "missing required key 'kind'" in msgs
    assert "missing required key 'command'" in msgs


def test_syntax_errors():
    failures = _failures("kind = x\n[nowhere]\n[system]\njust words\n")
    msgs = [f["message"] for f in failures]
    assert any("before any section" in m for m in msgs)
    assert any("unknown section" in m for m in msgs)
    assert any("key = value" in m for m in msgs)


def test_skew_defaults_to_cat_base():
    cfg = config.parse_config("[system]\nkind = skew_product\nepsilon = 0.1\n"
                              "[experiment]\ncommand = ball-growth\n")
    assert cfg.system.dimension == 3 and cfg.system.matrix == ((2, 1), (1, 1))
    assert cfg.delta == 0.08 and cfg.resolution == 128


def test_command_dependent_defaults():
    lyap = config.parse_config(CAT_COMPARE.replace("compare", "lyapunov"))
    assert lyap.n == 10_000
    dom = config.parse_config(CAT_COMPARE.replace("compare", "domination"))
    assert dom.points == 32


def test_cross_field_constraints():
    msgs = " ".join(f["message"] for f in _failures(
        CAT_COMPARE + "resolution = 100\nn_list = 5, 3, 9\ncenter = 0.1\nbundle = fixed_F_i\n"))
    assert "resolution * delta >= 10" in msgs
    assert "strictly increasing" in msgs
    assert "needs 2 coordinates" in msgs
    assert "required when bundle = fixed_F_i" in msgs


def test_round_trip_canonical():
    cfg = config.parse_config(CAT_COMPARE)
    assert config.parse_config(config.serialize(cfg)) == cfg
    assert config.serialize(config.parse_config(config.serialize(cfg))) == config.serialize(cfg)


def test_overrides():
    cfg = config.parse_config(CAT_COMPARE).with_overrides(seed=9, out_dir="x")
    assert cfg.seed == 9 and cfg.out_dir == "x"
    with pytest.raises(ConfigError):
        cfg.with_overrides(seed=-1)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        config.load_config(tmp_path / "missing.ini")


settings_text = st.fixed_dictionaries({
    "kind": st.sampled_from(["linear_toral", "skew_product", "perturbed_cat"]),
    "command": st.sampled_from(config.COMMANDS),
    "seed": st.integers(0, 2**31),
    "delta": st.floats(0.02, 0.49),
    "n": st.integers(1, 500),
    "samples": st.integers(2, 10**6),
    "tolerance": st.floats(1e-6, 10),
    "epsilon": st.floats(0, 0.07),
    "n_list": st.lists(st.integers(1, 400), min_size=3, max_size=6, unique=True).map(sorted),
    "formats": st.sampled_from(["json", "json, csv", "csv"]),
})


@given(settings_text)
def test_round_trip_property(s):
    rows = "row1 = 2, 1\nrow2 = 1, 1\n" if s["kind"] != "skew_product" else ""
    eps = f"epsilon = {s['epsilon']!r}\n" if s["kind"] != "linear_toral" else ""
    text = (f"[system]\nkind = {s['kind']}\n{rows}{eps}"
            f"[experiment]\ncommand = {s['command']}\nseed = {s['seed']}\n"
            f"delta = {s['delta']!r}\nn = {s['n']}\nsamples = {s['samples']}\n"
            f"tolerance = {s['tolerance']!r}\nresolution = 2048\n"
            f"n_list = {', '.join(map(str, s['n_list']))}\n"
            f"[output]\nformats = {s['formats']}\n")
    cfg = config.parse_config(text)
    again = config.parse_config(config.serialize(cfg))
    assert again == cfg
    assert "json" in cfg.formats
