"""Curve-pair certificates: exact outer distances, sampled inner distances, growth exponents."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .expr import evaluate, parse
from .metric import ExponentFit, GeodesicGraph, build_graph, fit_exponent, spacing
from .variety import Germ, branches_of, dedupe, sample_ball

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-7


@dataclass(frozen=True)
class WitnessCurve:
    """A parametrized arc; component strings may use ``sqrt()`` and the names in ``fixed``."""

    param: str
    components: tuple  # source strings
    domain: tuple
    fixed: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        lo, hi = (float(x) for x in self.domain)
        if not lo < hi:
            raise ValueError("empty curve domain")
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "fixed", dict(self.fixed))
        names = [self.param, *self.fixed]
        object.__setattr__(self, "_trees", tuple(parse(c, names, allow_sqrt=True) for c in self.components))

    @classmethod
    def from_json(cls, obj) -> "WitnessCurve":
        if isinstance(obj, (str, Path)) and Path(obj).exists():
            obj = json.loads(Path(obj).read_text())
        elif isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj.get("param", "s"), obj["components"], obj["domain"], obj.get("fixed", {}))

    def to_json(self) -> dict:
        return {"param": self.param, "fixed": dict(self.fixed), "components": list(self.components),
                "domain": list(self.domain)}


def on_set_residual(germ: Germ, x) -> float:
    """Smallest over branches of the max equation value, ``inf`` for branches whose inequalities fail."""
    x = np.asarray(x, dtype=float)[None, :]
    best = np.inf
    for sset in branches_of(germ):
        if sset.inequalities and not sset.satisfies_inequalities(x)[0]:
            continue
        vals = np.abs(sset.values(x)[0]) if sset.equations else np.zeros(1)
        best = min(best, float(np.max(vals)))
    return best


def eval_curve(c: WitnessCurve, s: float, germ: Germ | None = None, tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Point ``c(s)``; with ``germ`` given, also checks that the point lies on it."""
    lo, hi = c.domain
    if not lo < s < hi:
        raise ValueError(f"{c.param}={s} outside the domain ({lo}, {hi})")
    env = {c.param: float(s), **{k: float(v) for k, v in c.fixed.items()}}
    x = np.array([evaluate(t, env) for t in c._trees])
    if germ is not None:
        res = on_set_residual(germ, x)
        if res > tol:
            raise ValueError(f"curve point at {c.param}={s} is off the set (residual {res:.3g})")
    return x


@dataclass
class WitnessRow:
    s: float
    outer: float
    inner_est: float
    ratio: float
    radius: float = float("nan")
    points: int = 0

    def to_dict(self):
        return {"s": self.s, "outer": self.outer, "inner_est": self.inner_est, "ratio": self.ratio}


def piece_filtered_graph(sets, pts, r: float, tau: float = 0.1) -> GeodesicGraph:
    """Neighbourhood graph on a union of pieces.

    A vertex belongs to every piece within ``r**2`` of it, so tangent pieces
    meet over a strip of width about ``r``.  An edge survives only if its
    endpoints share a piece (on some branch whose inequalities both satisfy)
    and its midpoint stays within ``tau * length`` of the set.
    """
    g = build_graph(pts, r)
    if len(g.edges) == 0:
        return g
    i, j = g.edges[:, 0], g.edges[:, 1]
    thresh = max(r * r, 1e-12)
    ok = np.zeros(len(i), dtype=bool)
    for sset in sets:
        lab = sset.piece_distances(pts) <= thresh
        inside = sset.satisfies_inequalities(pts) if sset.inequalities else np.ones(len(pts), dtype=bool)
        share = np.any(lab[i] & lab[j], axis=1) & inside[i] & inside[j]
        cand = np.flatnonzero(share & ~ok)
        if len(cand):
            mid = 0.5 * (pts[i[cand]] + pts[j[cand]])
            near = sset.distance_estimate(mid) <= tau * g.weights[cand]
            ok[cand[near]] = True
    return GeodesicGraph(pts, g.edges[ok], g.weights[ok], g.connection_radius)


def inner_between(germ: Germ, a, b, n: int, seed: int, *, radius: float, conn_const: float = 6.0) -> tuple[float, int]:
    """Graph geodesic from ``a`` to ``b`` through a ball sample centred at their midpoint."""
    sets = branches_of(germ)
    center = 0.5 * (np.asarray(a) + np.asarray(b))
    ball = sample_ball(sets, radius, n, seed, center=center)
    pts = np.concatenate([np.asarray([a, b], dtype=float), ball])
    pts = np.concatenate([pts[:2], dedupe(pts, 1e-12 * max(radius, 1e-300))[2:]])
    pts = pts[np.r_[0, 1, 2 + np.flatnonzero(np.linalg.norm(pts[2:] - pts[0], axis=1) > 0)]]
    h = spacing(pts)
    if h == 0:
        return float("inf"), len(pts)
    g = piece_filtered_graph(sets, pts, conn_const * h)
    return float(g.distances_from([0])[0, 1]), len(pts)


def witness_table(
    germ: Germ,
    alpha: WitnessCurve,
    beta: WitnessCurve,
    grid: Sequence[float],
    n: int = 8000,
    seed: int = 42,
    *,
    conn_const: float | None = None,
) -> list[WitnessRow]:
    """Outer distance (exact), graph inner distance and their ratio along the grid.

    The graph lives in a ball around the midpoint of ``alpha(s)`` and
    ``beta(s)``.  Its radius starts at three outer distances and doubles
    until the two endpoints connect, never exceeding three times the larger
    distance of the endpoints from the base point; the final sample uses a
    radius equal to the first connected path length.  ``conn_const``
    defaults to 6 for curves and surfaces and 3 above that, where a radius
    of six spacings already links thousands of neighbours.
    """
    grid = [float(s) for s in grid]
    if len(grid) < 4:
        raise ValueError("grid needs at least 4 points")
    if max(grid) / min(grid) < 10 - 1e-9:
        raise ValueError("grid must span at least one decade")
    sets = branches_of(germ)
    base = sets[0].base
    if conn_const is None:
        conn_const = 6.0 if sets[0].local_dim <= 2 else 3.0
    rows = []
    for i, s in enumerate(grid):
        a = eval_curve(alpha, s, sets)
        b = eval_curve(beta, s, sets)
        outer = float(np.linalg.norm(a - b))
        cap = 3.0 * max(np.linalg.norm(a - base), np.linalg.norm(b - base))
        radius = min(3.0 * outer, cap)
        inner, used = float("inf"), 0
        while True:
            inner, used = inner_between(sets, a, b, n, seed + i, radius=radius, conn_const=conn_const)
            if np.isfinite(inner) or radius >= cap:
                break
            radius = min(2.0 * radius, cap)
        if np.isfinite(inner) and radius < cap:
            # resample at a radius tied to the path length, so every row has the same relative resolution
            radius = min(inner, cap)
            again, n_again = inner_between(sets, a, b, n, seed + i, radius=radius, conn_const=conn_const)
            if np.isfinite(again):
                inner, used = again, n_again
        if not np.isfinite(inner):
            log.info("witness endpoints disconnected at %s=%g", alpha.param, s)
        ratio = inner / outer if outer > 0 else float("inf")
        rows.append(WitnessRow(s, outer, inner, ratio, radius, used))
    return rows


def witness_exponent(rows: Sequence[WitnessRow]) -> ExponentFit:
    """Power-law fit of ratio against the curve parameter."""
    finite = [r for r in rows if np.isfinite(r.ratio) and r.ratio > 0]
    if len(finite) < 4:
        raise ValueError(f"need at least 4 finite rows, got {len(finite)}")
    return fit_exponent([r.s for r in finite], [r.ratio for r in finite])


def table_csv(rows: Sequence[WitnessRow]) -> str:
    lines = ["s,outer,inner_est,ratio"]
    lines += [f"{r.s!r},{r.outer!r},{r.inner_est!r},{r.ratio!r}" for r in rows]
    return "\n".join(lines) + "\n"
