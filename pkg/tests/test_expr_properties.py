"""Randomised invariants of the polynomial layer (hypothesis)."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from lnecone import corpus
from lnecone.expr import BinOp, Polynomial, expand, initial_form, parse, realify

XY = ["x", "y"]
XYZ = ["x", "y", "z"]


def P(text, variables=XYZ):
    return Polynomial.from_string(text, variables)


def test_corpus_expressions_round_trip():
    # abs() is resolved into sign branches first; every branch polynomial must print and parse back
    for name in corpus.list_entries():
        for sset in corpus.get(name).set:
            polys = list(sset.equations) + [g for g, _ in sset.inequalities] + list(sset.complex_equations)
            for p in polys:
                assert P(str(p), p.variables) == p, (name, str(p))


coef = st.integers(-5, 5)
mono = st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
polys = st.dictionaries(mono, coef, min_size=1, max_size=6).map(lambda t: Polynomial(XYZ, t))
nonzero = polys.filter(lambda p: not p.is_zero())


@st.composite
def homogeneous(draw):
    k = draw(st.integers(1, 5))
    exps = draw(st.lists(st.integers(0, k).flatmap(lambda a: st.integers(0, k - a).map(lambda b: (a, b, k - a - b))),
                         min_size=1, max_size=6))
    terms = {e: draw(st.integers(1, 7)) for e in exps}
    return Polynomial(XYZ, terms)


@given(polys)
def test_print_parse_round_trip(p):
    assert P(str(p)) == p


@given(st.dictionaries(mono, st.fractions(max_denominator=12), min_size=1, max_size=5))
def test_round_trip_rational_coefficients(terms):
    p = Polynomial(XYZ, terms)
    assert P(str(p)) == p


@given(polys, polys)
def test_expand_is_multiplicative(p, q):
    tree = BinOp("*", parse(str(p), XYZ), parse(str(q), XYZ))
    assert expand(tree, XYZ) == p * q


@given(nonzero, nonzero)
def test_initial_form_multiplicative(p, q):
    assert initial_form(p * q) == initial_form(p) * initial_form(q)


@given(nonzero)
def test_initial_form_fixed_iff_homogeneous(p):
    assert (initial_form(p) == p) == p.is_homogeneous()


@settings(max_examples=50)
@given(homogeneous(), st.integers(0, 2**31))
def test_euler_identity(p, seed):
    pts = np.random.default_rng(seed).uniform(-1.5, 1.5, size=(100, 3))
    lhs = np.sum(pts * p.grad_many(pts), axis=1)
    rhs = p.degree() * p.eval_many(pts)
    scale = np.maximum(np.abs(rhs), np.sum(np.abs(pts * p.grad_many(pts)), axis=1)) + 1e-300
    assert np.all(np.abs(lhs - rhs) <= 1e-8 * scale)


@settings(max_examples=50)
@given(nonzero, st.integers(0, 2**31))
def test_grad_matches_finite_differences(p, seed):
    x = np.random.default_rng(seed).uniform(-1, 1, size=3)
    h = 1e-6
    fd = np.array([(p(x + h * e) - p(x - h * e)) / (2 * h) for e in np.eye(3)])
    g = p.grad(x)
    scale = max(np.max(np.abs(g)), 1.0)
    assert np.max(np.abs(fd - g)) <= 1e-6 * scale


@settings(max_examples=30)
@given(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coef, min_size=1, max_size=5),
       st.integers(0, 2**31))
def test_realify_modulus_property(terms, seed):
    f = Polynomial(XY, terms)
    u, v = realify([f])
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(10, 2)) + 1j * rng.normal(size=(10, 2))
    real = np.column_stack([z[:, 0].real, z[:, 0].imag, z[:, 1].real, z[:, 1].imag])
    lhs = u.eval_many(real) ** 2 + v.eval_many(real) ** 2
    rhs = np.abs(f.eval_many(z)) ** 2
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * max(rhs.max(), 1.0))
