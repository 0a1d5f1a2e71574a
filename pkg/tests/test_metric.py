import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from conftest import circle_points
from lnecone import corpus
from lnecone.metric import (
    ExponentFit,
    build_graph,
    fit_exponent,
    inner_distance,
    lne_constant,
    lne_profile,
    midpoint_filter,
    parse_grid,
    shell_lambda,
    spacing,
    verdict_from,
)

SCALES4 = [0.2, 0.1, 0.05, 0.025]


def antipodal_circle(n=2000):
    pts = circle_points(n)
    return np.concatenate([[[1.0, 0.0], [-1.0, 0.0]], pts])


# --- graphs -------------------------------------------------------------------


def test_collinear_path_graph():
    g = build_graph([[0.0, 0], [1, 0], [2, 0]], 1.5)
    assert g.edges.tolist() == [[0, 1], [1, 2]]
    np.testing.assert_array_equal(g.weights, [1.0, 1.0])


def test_circle_graph_connected_at_three_mean_spacings():
    pts = circle_points(2000)
    mean_nn = cKDTree(pts).query(pts, k=2)[0][:, 1].mean()
    g = build_graph(pts, 3 * mean_nn)
    assert len(np.unique(g.components())) == 1


def test_separated_clusters_are_two_components():
    rng = np.random.default_rng(0)
    a = rng.uniform(0, 1, size=(50, 2))
    g = build_graph(np.concatenate([a, a + [11.5, 0]]), 1.0)
    assert len(np.unique(g.components())) == 2


def test_keep_callback_vetoes_edges():
    g = build_graph([[0.0, 0], [1, 0], [2, 0]], 2.5, keep=lambda a, b: np.linalg.norm(a - b, axis=1) < 1.5)
    assert len(g.edges) == 2


def test_nonpositive_radius_is_an_error():
    with pytest.raises(ValueError):
        build_graph([[0.0, 0]], 0.0)


def test_spacing_ignores_duplicates():
    assert spacing([[0.0], [0.0], [1.0], [3.0]]) == 1.5  # nn distances 1 and 2; the zero pair is skipped


# --- distances -----------------------------------------------------------------


def test_adjacent_vertices_are_one_chord_apart():
    g = build_graph([[0.0, 0], [0.3, 0.4]], 1.0)
    assert inner_distance(g, 0, 1) == pytest.approx(0.5)


def test_antipodal_circle_distance_is_pi():
    pts = antipodal_circle()
    g = build_graph(pts, 6 * spacing(pts))
    assert inner_distance(g, 0, 1) == pytest.approx(math.pi, rel=0.02)


def test_disconnected_pair_is_unreachable():
    g = build_graph([[0.0, 0], [5, 0]], 1.0)
    assert inner_distance(g, 0, 1) == math.inf


def test_segment_lambda_is_one():
    pts = np.column_stack([np.linspace(0, 1, 200), np.zeros(200)])
    est = lne_constant(build_graph(pts, 0.02))
    assert est.value == pytest.approx(1.0, abs=1e-9)


def test_circle_lambda_is_half_pi():
    pts = antipodal_circle()
    est = lne_constant(build_graph(pts, 6 * spacing(pts)), pair_budget=300)
    assert est.value == pytest.approx(math.pi / 2, rel=0.03)
    assert est.unreachable_pairs == 0


def test_fully_disconnected_graph_reports_infinity():
    pts = np.array([[0.0, 0], [5, 0], [10, 0]])
    est = lne_constant(build_graph(pts, 1.0), eta=0.0)
    assert est.value == math.inf
    assert est.disconnected


def test_argmax_pair_is_lexicographically_smallest():
    # a square: the two diagonals tie
    pts = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]])
    est = lne_constant(build_graph(pts, 1.01), eta=0.0)
    assert est.value == pytest.approx(2 / math.sqrt(2))
    assert est.pair == (0, 2)


def test_midpoint_filter_drops_chords_off_the_set():
    sets = corpus.get("cusp").set
    keep = midpoint_filter(sets)
    a = np.array([[0.01, 0.001], [0.01, 0.001]])
    b = np.array([[0.01, -0.001], [0.0101, 0.00101]])
    assert keep(a, b).tolist() == [False, True]


# --- profiles ------------------------------------------------------------------


def test_cusp_opposite_branches_at_small_scale():
    r = shell_lambda(list(corpus.get("cusp").set), 1e-3, 200)
    assert r.lam >= 5


def test_parabola_profile_is_flat():
    rep = lne_profile(list(corpus.get("parabola").set), SCALES4)
    assert -0.1 < rep.exponent_fit.slope < 0.1
    assert rep.verdict == "LNE-consistent"


def test_cusp_profile_diverges():
    rep = lne_profile(list(corpus.get("cusp").set), SCALES4)
    assert rep.exponent_fit.slope <= -0.35
    assert rep.verdict == "divergence-detected"


def test_circle_cone_profile_is_lne_consistent():
    e = corpus.get("circle-cone")
    rep = lne_profile(list(e.set), SCALES4, n=e.scale_window["n"])
    assert rep.verdict == "LNE-consistent"


def test_profile_rejects_bad_scales():
    sets = corpus.get("cusp").set
    with pytest.raises(ValueError):
        lne_profile(sets, [0.1, 0.2, 0.05, 0.01])
    with pytest.raises(ValueError):
        lne_profile(sets, [0.2, 0.1, 0.05])


def test_empty_shells_are_dropped():
    from lnecone.variety import load_set_json

    point = load_set_json({"name": "pt", "variables": ["x", "y"], "equations": ["x^2+y^2"]})
    rep = lne_profile(point, SCALES4, n=20)
    assert rep.dropped_scales == SCALES4
    assert rep.verdict == "inconclusive"


def test_report_serialises():
    rep = lne_profile(list(corpus.get("parabola").set), SCALES4, n=100)
    d = rep.to_dict()
    assert d["scales"] == SCALES4 and len(d["lambda_per_scale"]) == 4
    assert rep.to_csv().splitlines()[0] == "t,lambda,worst_inner,worst_outer"


# --- exponent fits ---------------------------------------------------------------


def test_exact_power_law():
    t = np.geomspace(0.2, 0.0125, 5)
    assert fit_exponent(t, t**-0.5).slope == pytest.approx(-0.5, abs=1e-12)


def test_constant_series():
    fit = fit_exponent([0.1, 0.01, 0.001], [2.0, 2.0, 2.0])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 1.0


def test_noisy_inverse_law():
    t = np.geomspace(1, 1e-3, 12)
    noise = 1 + 0.01 * np.random.default_rng(1).uniform(-1, 1, len(t))
    assert fit_exponent(t, noise / t).slope == pytest.approx(-1.0, abs=0.05)


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_exponent([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_exponent([1, 2, 3], [1, 0, 2])


def test_verdict_rules():
    assert verdict_from(ExponentFit(-0.5, 0, 0.95), 5) == "divergence-detected"
    assert verdict_from(ExponentFit(-0.5, 0, 0.5), 5) == "inconclusive"
    assert verdict_from(ExponentFit(0.0, 0, 1.0), 5) == "LNE-consistent"
    assert verdict_from(ExponentFit(-0.5, 0, 0.95), 2) == "inconclusive"


def test_grid_syntax():
    assert parse_grid("0.2:0.0125:log5") == pytest.approx([0.2, 0.1, 0.05, 0.025, 0.0125])
    assert parse_grid("0.3, 0.1") == [0.3, 0.1]
    for bad in ["0.1:0.2:log4", "1:0.1:lin4", "1:0.1", ""]:
        with pytest.raises(ValueError):
            parse_grid(bad)
