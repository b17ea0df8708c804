import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncwave.lax import ModelParams
from ncwave.scenario import (
    Grid,
    ScenarioFile,
    ScenarioFormatError,
    format_scenario,
    load_preset,
    load_scenario,
    parse_scenario,
    preset_names,
)

MINIMAL = """schema = 1
c1 = 0.5
Q = [2, -1, -1, 2]

[model]
alpha1 = 1.5
alpha2 = 1
gamma = 1

[[solitons]]
lambda_re = 0.1
lambda_im = 0.5

[grid]
xMin = -10
xMax = 10
nx = 41
tMin = -2
tMax = 2
nt = 21
"""


def test_minimal_file_parses_with_defaults():
    sf = parse_scenario(MINIMAL)
    assert sf.mode == "commutative" and sf.construction == "shifted"
    assert sf.lambdas == (0.1 + 0.5j,)
    assert sf.Q.shape == (2, 2) and sf.Q[0, 1] == -1
    assert sf.outputs == {"fields": True, "residuals": True, "mi": False}
    assert sf.params == ModelParams(1.5, 1, 1)


def test_round_trip_is_byte_identical():
    text = format_scenario(parse_scenario(MINIMAL))
    assert format_scenario(parse_scenario(text)) == text


@pytest.mark.parametrize("name", preset_names())
def test_presets_round_trip(name):
    sf = load_preset(name)
    text = format_scenario(sf)
    assert format_scenario(parse_scenario(text)) == text
    sf.soliton_scenario()


def test_required_presets_exist():
    names = set(preset_names())
    for required in ("fig2a", "fig2b", "fig3", "fig4", "fig7", "fig8", "fig9"):
        assert required in names
    assert "gamma" in load_preset("fig7").note


@pytest.mark.parametrize("edit, message", [
    (("schema = 1", "schema = 2"), "schema"),
    (("Q = [2, -1, -1, 2]", "Q = [2, -1, -1]"), "Q: expected 4"),
    (("nx = 41", "nx = 5"), "nx >= 9"),
    (("alpha1 = 1.5", "alpha1 = \"big\""), "model.alpha1"),
    (("lambda_im = 0.5", ""), "lambda_im"),
    (("c1 = 0.5", "c1 = 0.5\nextra = 1"), "unknown top-level"),
    (("nx = 41", "nx = 41.5"), "integer"),
])
def test_errors_name_the_field(edit, message):
    with pytest.raises(ScenarioFormatError, match=message):
        parse_scenario(MINIMAL.replace(*edit))


def test_syntax_errors_carry_line_and_column():
    with pytest.raises(ScenarioFormatError, match=r"line 3, column"):
        parse_scenario(MINIMAL.replace("Q = [2, -1, -1, 2]", "Q = [2, -1,, -1, 2]"))


def test_small_grid_allowed_without_residuals():
    text = MINIMAL.replace("nx = 41", "nx = 5") + "\n[outputs]\nresiduals = false\n"
    assert parse_scenario(text).grid.nx == 5


def test_exact_construction_requires_block_diagonal_q():
    text = MINIMAL.replace('c1 = 0.5', 'c1 = 0.5\nconstruction = "exact"')
    text = text.replace("[[solitons]]", "[[solitons]]\nlambda_re = 0.0\nlambda_im = 0.3\n\n[[solitons]]", 1)
    text = text.replace("Q = [2, -1, -1, 2]", "Q = [" + ", ".join(["1"] * 16) + "]")
    with pytest.raises(ScenarioFormatError, match="block-diagonal"):
        parse_scenario(text)


def test_complex_q_and_missing_files(tmp_path):
    text = MINIMAL + ""
    text = text.replace("Q = [2, -1, -1, 2]", "Q = [2, -1, -1, 2]\nQ_imag = [0, 0.5, -0.5, 0]")
    sf = parse_scenario(text)
    assert sf.Q[0, 1] == -1 + 0.5j
    again = parse_scenario(format_scenario(sf))
    assert np.array_equal(again.Q, sf.Q)
    with pytest.raises(ScenarioFormatError, match="cannot read"):
        load_scenario(tmp_path / "missing.toml")
    with pytest.raises(ScenarioFormatError, match="unknown preset"):
        load_preset("nope")


finite = st.floats(-50, 50, allow_nan=False).map(lambda v: round(v, 6))


@settings(max_examples=60, deadline=None)
@given(finite, finite, finite, finite, finite, st.integers(9, 500), st.text(max_size=20))
def test_format_parse_round_trip_property(a1, a2, g, lr, li, nx, note):
    sf = ScenarioFile(ModelParams(a1, a2, g), (complex(lr, li),), np.array([[1.0, a1], [a2, g]]),
                      c1=0.5, grid=Grid(-1, 1, nx, 0, 1, 9), note=note)
    text = format_scenario(sf)
    back = parse_scenario(text)
    assert back.params == sf.params and back.lambdas == sf.lambdas and back.note == note
    assert np.array_equal(back.Q, sf.Q)
    assert format_scenario(back) == text
