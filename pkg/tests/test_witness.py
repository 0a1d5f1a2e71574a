import json

import numpy as np
import pytest

from lnecone import corpus
from lnecone.variety import load_set_json
from lnecone.witness import (
    WitnessCurve,
    WitnessRow,
    eval_curve,
    on_set_residual,
    table_csv,
    witness_exponent,
    witness_table,
)


@pytest.fixture(scope="module")
def spheres():
    entry = corpus.get("double-spheres")
    pair = entry.witnesses[0]
    return pair, pair.germ(entry)


@pytest.fixture(scope="module")
def line():
    return load_set_json({"name": "line", "variables": ["x", "y"], "equations": ["y"]})


def test_alpha_at_one(spheres):
    pair, g = spheres
    x = eval_curve(pair.alpha, 1.0, g)
    np.testing.assert_array_equal(x, [1.0, 1.0, 0.0, 1.0])
    assert (x[0] - 1) ** 2 + x[1] ** 2 + x[2] ** 2 - 1 == 0


def test_outside_the_domain_is_an_error(spheres):
    pair, _ = spheres
    for s in (0.0, -0.1, 2.5):
        with pytest.raises(ValueError):
            eval_curve(pair.alpha, s)


def test_off_set_curves_are_rejected(line):
    c = WitnessCurve("s", ["s", "s"], (0, 1))
    with pytest.raises(ValueError):
        eval_curve(c, 0.5, line)
    assert on_set_residual(line, [0.5, 0.5]) == pytest.approx(0.5)


def test_fixed_parameters():
    c = WitnessCurve("t", ["t", "r*t"], (0, 1), {"r": 0.5})
    np.testing.assert_allclose(eval_curve(c, 0.4), [0.4, 0.2])


def test_curve_json_round_trip(tmp_path):
    c = WitnessCurve("t", ["t", "sqrt(t)"], (0, 2), {"r": 0.5})
    f = tmp_path / "c.json"
    f.write_text(json.dumps(c.to_json()))
    d = WitnessCurve.from_json(f)
    assert d.to_json() == c.to_json()


def test_short_double_spheres_table(spheres):
    pair, g = spheres
    rows = witness_table(g, pair.alpha, pair.beta, [0.5, 0.25, 0.1, 0.05], n=4000)
    top = rows[0]
    assert top.outer == 1.0
    assert top.inner_est >= 2 * np.sqrt(2 * 0.5 - 0.25) * 0.8
    assert all(r.outer == 2 * r.s for r in rows)


def test_straight_line_ratio_is_one(line):
    a = WitnessCurve("s", ["s", "0"], (0, 1))
    b = WitnessCurve("s", ["-s", "0"], (0, 1))
    rows = witness_table(line, a, b, [0.4, 0.2, 0.1, 0.04], n=500)
    for r in rows:
        assert r.ratio == pytest.approx(1.0, abs=1e-6)


def test_grid_requirements(line):
    a = WitnessCurve("s", ["s", "0"], (0, 1))
    b = WitnessCurve("s", ["-s", "0"], (0, 1))
    with pytest.raises(ValueError):
        witness_table(line, a, b, [0.4, 0.2, 0.1])
    with pytest.raises(ValueError):
        witness_table(line, a, b, [0.4, 0.3, 0.2, 0.1])


def test_disconnected_endpoints_give_infinite_ratio():
    # two parallel lines never meet near the base point
    g = load_set_json({"name": "two", "variables": ["x", "y"], "equations": ["y*(y-1)"]})
    a = WitnessCurve("s", ["s", "0"], (0, 1))
    b = WitnessCurve("s", ["s", "1"], (0, 1))
    rows = witness_table(g, a, b, [0.4, 0.2, 0.1, 0.04], n=300)
    assert all(r.ratio == float("inf") for r in rows)
    with pytest.raises(ValueError):
        witness_exponent(rows)


def test_exponent_and_csv():
    rows = [WitnessRow(s, 2 * s, 2 * s * s**-0.5, s**-0.5) for s in (0.5, 0.1, 0.05, 0.01)]
    assert witness_exponent(rows).slope == pytest.approx(-0.5)
    lines = table_csv(rows).splitlines()
    assert lines[0] == "s,outer,inner_est,ratio" and len(lines) == 5
