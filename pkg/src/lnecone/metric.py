"""Inner-metric estimation on sampled sets.

The inner (path) distance is approximated by shortest paths in a
neighborhood graph whose edges carry Euclidean lengths.  Ratios of inner to
outer distance over probed pairs give per-scale Lipschitz constants, and
log-log regression of those constants against the scale quantifies whether
they blow up at the base point.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from .variety import Germ, branches_of, dedupe, sample_ball, sample_shell

log = logging.getLogger(__name__)

ETA = 4.0
PAIR_BUDGET = 2000
DIVERGENCE_SLOPE = -0.2
DIVERGENCE_R2 = 0.8


@dataclass
class GeodesicGraph:
    """Undirected neighborhood graph on ``points`` with Euclidean edge weights."""

    points: np.ndarray
    edges: np.ndarray  # (E, 2) with i < j
    weights: np.ndarray
    connection_radius: float

    @property
    def n(self) -> int:
        return len(self.points)

    def adjacency(self):
        n = self.n
        if len(self.edges) == 0:
            return coo_matrix((n, n)).tocsr()
        i, j = self.edges[:, 0], self.edges[:, 1]
        # explicit zero-length edges would vanish from the sparse matrix
        w = np.maximum(self.weights, 1e-300)
        return coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n)
        ).tocsr()

    def components(self) -> np.ndarray:
        return connected_components(self.adjacency(), directed=False)[1]

    def distances_from(self, sources) -> np.ndarray:
        """Shortest-path lengths from each source to every vertex (``inf`` if unreachable)."""
        return dijkstra(self.adjacency(), directed=False, indices=np.asarray(sources, dtype=int))


def build_graph(points, radius: float, keep: Callable | None = None) -> GeodesicGraph:
    """Connect every pair at Euclidean distance ``<= radius``.

    ``keep(a, b)`` may veto edges (given endpoint arrays, returns a mask); the
    sampled-set callers use it to drop chords whose midpoint leaves the set.
    """
    pts = np.asarray(points, dtype=float)
    if radius <= 0:
        raise ValueError("connection radius must be positive")
    if len(pts) < 2:
        return GeodesicGraph(pts, np.zeros((0, 2), dtype=int), np.zeros(0), float(radius))
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return GeodesicGraph(pts, np.zeros((0, 2), dtype=int), np.zeros(0), float(radius))
    pairs = np.sort(pairs, axis=1)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    if keep is not None:
        mask = np.asarray(keep(pts[pairs[:, 0]], pts[pairs[:, 1]]), dtype=bool)
        pairs = pairs[mask]
    w = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
    return GeodesicGraph(pts, pairs, w, float(radius))


def midpoint_filter(germ: Germ, tau: float = 0.1) -> Callable:
    """Edge veto: keep a chord only if its midpoint is within ``tau * length`` of the set."""
    sets = branches_of(germ)

    def keep(a, b):
        mid = 0.5 * (a + b)
        length = np.linalg.norm(a - b, axis=1)
        dist = np.min(np.stack([s.distance_estimate(mid) for s in sets]), axis=0)
        return dist <= tau * length

    return keep


def spacing(points) -> float:
    """Median nearest-neighbor distance among distinct points."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    d, _ = cKDTree(pts).query(pts, k=2)
    nn = d[:, 1]
    nn = nn[nn > 0]
    return float(np.median(nn)) if len(nn) else 0.0


def inner_distance(g: GeodesicGraph, i: int, j: int) -> float:
    """Graph geodesic between vertices ``i`` and ``j``; ``inf`` when unreachable."""
    return float(g.distances_from([i])[0, j])


@dataclass
class LneEstimate:
    value: float
    pair: tuple | None
    inner: float
    outer: float
    probed_pairs: int
    unreachable_pairs: int
    sources: int

    @property
    def disconnected(self) -> bool:
        return self.unreachable_pairs > 0


def _sources_targets(g, pair_budget, sources, targets, seed):
    src = np.arange(g.n) if sources is None else np.unique(np.asarray(sources, dtype=int))
    tgt = np.arange(g.n) if targets is None else np.unique(np.asarray(targets, dtype=int))
    if len(src) > pair_budget:
        rng = np.random.default_rng(seed)
        src = np.sort(rng.choice(src, size=pair_budget, replace=False))
    return src, tgt


def _best(g, src, tgt, dist, outer, lo, hi) -> LneEstimate:
    best = LneEstimate(1.0, None, float("nan"), float("nan"), 0, 0, len(src))
    mask = (outer >= lo) & (src[:, None] != tgt[None, :])
    if hi is not None:
        mask &= outer <= hi
    # each unordered pair once
    both = np.isin(tgt, src)
    mask &= ~(both[None, :] & (tgt[None, :] < src[:, None]))
    probed = int(mask.sum())
    unreachable = int((mask & ~np.isfinite(dist)).sum())
    best.probed_pairs, best.unreachable_pairs = probed, unreachable
    if probed == 0:
        return best
    reach = mask & np.isfinite(dist)
    if not reach.any():
        best.value = float("inf")
        return best
    ratio = np.where(reach, dist / np.where(outer > 0, outer, 1.0), -np.inf)
    top = ratio.max()
    cand = np.argwhere(ratio >= top)
    pairs = sorted((min(src[a], tgt[b]), max(src[a], tgt[b]), a, b) for a, b in cand)
    i, j, a, b = pairs[0]
    best.value = float(top)
    best.pair = (int(i), int(j))
    best.inner, best.outer = float(dist[a, b]), float(outer[a, b])
    return best


def lne_constant(
    g: GeodesicGraph,
    pair_budget: int = PAIR_BUDGET,
    *,
    sources=None,
    targets=None,
    eta: float = ETA,
    min_outer: float | None = None,
    max_outer: float | None = None,
    seed: int = 0,
) -> LneEstimate:
    """Max of inner/outer over probed pairs, with the lexicographically smallest argmax.

    Pairs closer than ``eta`` median spacings are skipped.  With more than
    ``pair_budget`` candidate sources a uniform subsample of sources is swept
    against all targets.
    """
    return lne_bands(g, [(min_outer, max_outer)], pair_budget, sources=sources, targets=targets,
                     eta=eta, seed=seed)[0]


def lne_bands(g: GeodesicGraph, bands, pair_budget: int = PAIR_BUDGET, *, sources=None, targets=None,
              eta: float = ETA, seed: int = 0) -> list[LneEstimate]:
    """``lne_constant`` for several ``(min_outer, max_outer)`` windows sharing one shortest-path sweep.

    A ``None`` lower bound means ``eta`` median spacings.
    """
    src, tgt = _sources_targets(g, pair_budget, sources, targets, seed)
    floor = None
    if any(lo is None for lo, _ in bands):
        floor = eta * spacing(g.points)
    if len(src) == 0 or len(tgt) == 0:
        return [LneEstimate(1.0, None, float("nan"), float("nan"), 0, 0, len(src)) for _ in bands]
    dist = g.distances_from(src)[:, tgt]
    outer = np.linalg.norm(g.points[src][:, None, :] - g.points[tgt][None, :, :], axis=2)
    return [_best(g, src, tgt, dist, outer, floor if lo is None else lo, hi) for lo, hi in bands]


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


def fit_exponent(t, values) -> ExponentFit:
    """Least-squares line through ``(log t, log value)``; r^2 is 1 for zero-variance data."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) != len(v) or len(t) < 3:
        raise ValueError("need at least 3 (t, value) pairs")
    if np.any(t <= 0) or np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("power-law fit needs positive finite values")
    x, y = np.log(t), np.log(v)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise ValueError("all scales are equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    r2 = 1.0 if ss_tot <= 1e-24 else 1.0 - ss_res / ss_tot
    return ExponentFit(slope, intercept, r2)


def verdict_from(fit: ExponentFit | None, finite_scales: int) -> str:
    if fit is None or finite_scales < 3:
        return "inconclusive"
    if fit.slope <= DIVERGENCE_SLOPE:
        return "divergence-detected" if fit.r_squared >= DIVERGENCE_R2 else "inconclusive"
    return "LNE-consistent"


@dataclass
class ScaleResult:
    t: float
    lam: float
    pair: tuple | None
    inner: float
    outer: float
    points: int
    probed_pairs: int
    unreachable_pairs: int
    connection_radius: float


@dataclass
class LneReport:
    """Per-scale LNE constants with the fitted divergence exponent."""

    scales: list
    lambda_per_scale: list
    worst_pairs: list
    exponent_fit: ExponentFit | None
    verdict: str
    dropped_scales: list = field(default_factory=list)
    details: list = field(default_factory=list)
    window: dict = field(default_factory=dict)

    @property
    def max_lambda(self) -> float:
        vals = [v for v in self.lambda_per_scale if np.isfinite(v)]
        return max(vals) if vals else float("inf")

    def to_dict(self) -> dict:
        return {
            "scales": [float(t) for t in self.scales],
            "lambda_per_scale": [_jsonable(v) for v in self.lambda_per_scale],
            "worst_pairs": [
                {"indices": list(p["indices"]) if p["indices"] else None,
                 "inner": _jsonable(p["inner"]), "outer": _jsonable(p["outer"])}
                for p in self.worst_pairs
            ],
            "exponent_fit": self.exponent_fit.to_dict() if self.exponent_fit else None,
            "verdict": self.verdict,
            "dropped_scales": [float(t) for t in self.dropped_scales],
            "probes": [
                {"t": d.t, "points": d.points, "probed_pairs": d.probed_pairs,
                 "unreachable_pairs": d.unreachable_pairs,
                 "connection_radius": d.connection_radius}
                for d in self.details
            ],
            "window": self.window,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "lambda", "worst_inner", "worst_outer"])
        for t, lam, p in zip(self.scales, self.lambda_per_scale, self.worst_pairs):
            w.writerow([repr(float(t)), repr(float(lam)), repr(float(p["inner"])), repr(float(p["outer"]))])
        return buf.getvalue()


def _jsonable(v):
    v = float(v)
    if np.isnan(v):
        return None
    if np.isinf(v):
        return "inf"
    return v


def report_from_scales(results: Sequence[ScaleResult], dropped=(), window=None) -> LneReport:
    finite = [r for r in results if np.isfinite(r.lam) and r.unreachable_pairs == 0 and r.pair is not None]
    fit = None
    if len(finite) >= 3:
        fit = fit_exponent([r.t for r in finite], [r.lam for r in finite])
    verdict = verdict_from(fit, len(finite))
    if verdict == "LNE-consistent" and len(finite) < len(results):
        verdict = "inconclusive"
    return LneReport(
        scales=[r.t for r in results],
        lambda_per_scale=[r.lam for r in results],
        worst_pairs=[{"indices": r.pair, "inner": r.inner, "outer": r.outer} for r in results],
        exponent_fit=fit,
        verdict=verdict,
        dropped_scales=list(dropped),
        details=list(results),
        window=window or {},
    )


def shell_lambda(
    germ: Germ,
    t: float,
    n: int,
    seed: int = 42,
    *,
    conn_const: float | None = None,
    ball_factor: float = 2.0,
    ball_points: int | None = None,
    tau: float = 0.1,
) -> ScaleResult | None:
    """LNE constant at scale ``t``: pairs on the ``t``-shell, paths through a ball sample.

    Returns ``None`` when the shell is empty.  ``conn_const`` defaults to 6
    up to dimension 2 and 3 above, where six spacings reach thousands of
    neighbours.
    """
    sets = branches_of(germ)
    d = sets[0].local_dim
    if conn_const is None:
        conn_const = 6.0 if d <= 2 else 3.0
    shell = sample_shell(sets, t, n, seed)
    if len(shell.points) == 0:
        return None
    if ball_points is None:
        ball_points = 16 * n
    ball = sample_ball(sets, ball_factor * t, ball_points, seed, dim=d)
    tol = 1e-9 * t
    shell_pts = dedupe(shell.points, tol)
    # the base point lies on the set and carries paths between branches
    pts = np.concatenate([shell_pts, ball, sets[0].base[None, :]])
    pts = np.concatenate([shell_pts, dedupe(pts, tol)[len(shell_pts):]])
    h = spacing(pts)
    radius = conn_const * h
    g = build_graph(pts, radius, keep=midpoint_filter(sets, tau))
    est = lne_constant(g, sources=np.arange(len(shell_pts)), targets=np.arange(len(shell_pts)),
                       min_outer=ETA * h, seed=seed)
    return ScaleResult(t, est.value, est.pair, est.inner, est.outer, len(pts),
                       est.probed_pairs, est.unreachable_pairs, radius)


def lne_profile(
    germ: Germ,
    scales: Sequence[float],
    n: int = 200,
    seed: int = 42,
    **kwargs,
) -> LneReport:
    """Per-scale LNE constants on shells around the base point and their log-log trend."""
    if len(scales) < 4:
        raise ValueError("need at least 4 scales")
    return lne_scales(germ, scales, n, seed, **kwargs)


def lne_scales(
    germ: Germ,
    scales: Sequence[float],
    n: int = 200,
    seed: int = 42,
    **kwargs,
) -> LneReport:
    """``lne_profile`` without the minimum scale count; short windows come out inconclusive."""
    scales = [float(t) for t in scales]
    if not scales:
        raise ValueError("need at least one scale")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly decreasing")
    results, dropped = [], []
    for t in scales:
        r = shell_lambda(germ, t, n, seed, **kwargs)
        if r is None:
            log.info("empty shell at t=%g; scale dropped", t)
            dropped.append(t)
            continue
        results.append(r)
    window = {"t_max": scales[0], "t_min": scales[-1], "n": n, "seed": seed}
    window.update({k: v for k, v in kwargs.items() if isinstance(v, (int, float))})
    return report_from_scales(results, dropped, window)


def parse_grid(text: str) -> list[float]:
    """``"t_max:t_min:logK"`` -> ``K`` log-spaced values from ``t_max`` down to ``t_min``.

    A plain comma-separated list is accepted as well.
    """
    text = text.strip()
    if ":" not in text:
        vals = [float(x) for x in text.split(",") if x.strip()]
        if not vals:
            raise ValueError("empty grid")
        return vals
    parts = text.split(":")
    if len(parts) != 3 or not parts[2].startswith("log"):
        raise ValueError(f"bad grid {text!r}; expected t_max:t_min:logK")
    hi, lo, k = float(parts[0]), float(parts[1]), int(parts[2][3:])
    if not (hi > lo > 0) or k < 2:
        raise ValueError(f"bad grid {text!r}")
    return [float(v) for v in np.geomspace(hi, lo, k)]
