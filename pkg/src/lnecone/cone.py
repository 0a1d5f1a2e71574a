"""Tangent cones: direction clouds from the spherical blow-up, initial forms, k_X.

Numerically, a point ``x`` of the germ near the base point ``p`` is mapped to
blow-up coordinates ``((x - p)/|x - p|, |x - p|)``; the direction cloud
collects the first coordinate over small shells.  Symbolically, the cone of
a hypersurface (or of each listed generator) is cut out by initial forms.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .expr import Polynomial, initial_form, is_squarefree
from .metric import (
    ETA,
    LneReport,
    ScaleResult,
    build_graph,
    lne_bands,
    midpoint_filter,
    report_from_scales,
    spacing,
)
from .variety import Germ, SemialgebraicSet, branches_of, dedupe, sample_shell, sample_window

log = logging.getLogger(__name__)

NUMERIC_FLOOR = 1e-6
RAY_CLUSTER_TOL = 0.25  # distinct tangent rays of a curve germ are assumed farther apart than this


@dataclass
class DirectionCloud:
    """Unit vectors ``(x - p)/t`` pooled from the smallest shells."""

    directions: np.ndarray
    source_scales: list
    dispersion: np.ndarray  # nearest-neighbor distance of each direction in the cloud
    blowup: np.ndarray = field(default=None)  # rows (w, s)
    dim: int = 2

    def __len__(self):
        return len(self.directions)


@dataclass
class ConeModel:
    numeric: DirectionCloud
    symbolic: list
    sampled_rays: np.ndarray
    ray_scales: list
    cone_set: Germ | None = None


def directions(germ: Germ, scales: Sequence[float], n: int = 2000, seed: int = 42) -> DirectionCloud:
    """Directions of the germ at its base point, pooled over the two smallest scales."""
    scales = [float(t) for t in scales]
    if not scales:
        raise ValueError("need at least one scale")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be decreasing")
    if scales[-1] < NUMERIC_FLOOR:
        raise ValueError(f"smallest scale below the numeric floor {NUMERIC_FLOOR}")
    sets = branches_of(germ)
    dirs, blow = [], []
    for t in scales[-2:]:
        shell = sample_shell(sets, t, n, seed, stratified=True)
        if len(shell.points):
            d = shell.directions
            d = d / np.linalg.norm(d, axis=1, keepdims=True)
            dirs.append(d)
            blow.append(np.column_stack([d, np.full(len(d), t)]))
    if not dirs:
        raise RuntimeError("all shells are empty")
    D = np.concatenate(dirs)
    disp = np.zeros(len(D))
    if len(D) > 1:
        disp = cKDTree(D).query(D, k=2)[0][:, 1]
    return DirectionCloud(D, scales[-2:], disp, np.concatenate(blow), dim=sets[0].local_dim)


def symbolic_cone(generators: Sequence[Polynomial]) -> list[Polynomial]:
    """Initial form of each generator.

    For a hypersurface this cuts out the tangent cone; for several generators
    the forms may generate less than the ideal of initial forms.
    """
    generators = list(generators)
    if not generators:
        raise ValueError("need at least one generator")
    if len(generators) > 1:
        warnings.warn(
            "initial forms are taken generator by generator; they may cut out more than the tangent cone",
            stacklevel=2,
        )
    return [initial_form(g) for g in generators]


def cone_set_from(germ: Germ, generators: Sequence[Polynomial] | None = None) -> list[SemialgebraicSet]:
    """Semialgebraic model of the tangent cone: initial forms of each branch's equations and inequalities."""
    out = []
    for sset in branches_of(germ):
        if sset.complex_equations:
            from .expr import realify

            cforms = [initial_form(f) for f in sset.complex_equations]
            out.append(SemialgebraicSet(
                sset.name + ":cone", sset.variables, realify(cforms), (), sset.basepoint,
                kind="complex", complex_equations=cforms, dim=sset.dim,
            ))
            continue
        gens = list(generators) if generators is not None else list(sset.equations)
        ineqs = [(initial_form(g), rel) for g, rel in sset.inequalities]
        out.append(SemialgebraicSet(
            sset.name + ":cone", sset.variables, [initial_form(g) for g in gens], ineqs,
            sset.basepoint, dim=sset.dim,
        ))
    return out


def _ray_clusters(cloud: DirectionCloud, tol: float = RAY_CLUSTER_TOL) -> np.ndarray:
    """One unit vector per tangent ray of a curve germ.

    Clusters are seeded greedily, then each is replaced by the normalised mean
    of its members from the finest scale, which cancels the symmetric spread
    of cusp-like branches.
    """
    D = cloud.directions
    t = cloud.blowup[:, -1] if cloud.blowup is not None and len(cloud.blowup) == len(D) else np.zeros(len(D))
    fine = D[t == t.min()]
    seeds = dedupe(fine, tol)
    label = np.argmin(np.linalg.norm(fine[:, None, :] - seeds[None, :, :], axis=2), axis=1)
    reps = np.array([fine[label == k].mean(axis=0) for k in range(len(seeds))])
    return reps / np.linalg.norm(reps, axis=1, keepdims=True)


def cone_from_directions(
    cloud: DirectionCloud,
    ray_scales: Sequence[float] | None = None,
    symbolic: Sequence[Polynomial] = (),
    cone_set: Germ | None = None,
) -> ConeModel:
    """Rays ``t * v`` over the cloud.

    By default the rays are cut at ``t = 1`` (the link) when the cloud is
    positive-dimensional, and at 40 evenly spaced radii in ``(0, 1.5]`` for a
    curve germ, whose link is a finite set of directions.
    """
    if len(cloud) == 0:
        raise ValueError("empty direction cloud")
    if ray_scales is None:
        ray_scales = [1.0] if cloud.dim > 1 else list(np.linspace(1.5 / 40, 1.5, 40))
    ray_scales = [float(t) for t in ray_scales]
    D = cloud.directions
    if cloud.dim == 1:
        D = _ray_clusters(cloud)
    rays = np.concatenate([t * D for t in ray_scales])
    return ConeModel(cloud, list(symbolic), rays, ray_scales, cone_set)


def cone_lne_profile(
    model: ConeModel,
    bands: Sequence[float] | None = None,
    *,
    conn_const: float = 6.0,
    pair_budget: int = 600,
    seed: int = 42,
    tau: float = 0.1,
) -> LneReport:
    """LNE constants of the sampled cone, resolved by pair separation.

    A cone looks the same at every distance from its vertex, so instead of
    shells the probe uses dyadic bands of outer distance: ``lambda(b)`` is the
    max inner/outer ratio over pairs with ``b/2 < |x - y| <= b``.  Growth of
    ``lambda(b)`` as ``b -> 0`` signals pairs whose inner distance shrinks
    more slowly than their outer distance.
    """
    pts = model.sampled_rays
    link_dim = model.numeric.dim - 1
    base = np.zeros(pts.shape[1])
    if model.cone_set is not None:
        base = branches_of(model.cone_set)[0].base
    pts = pts + base
    if len(model.ray_scales) > 1:
        pts = np.concatenate([pts, base[None, :]])
    if link_dim == 1 and len(model.ray_scales) == 1:
        # iid points on a curve leave gaps ~log(N) times the median spacing;
        # thinning to a minimum separation evens them out
        pts = dedupe(pts, 3 * spacing(pts))
    h = spacing(pts)
    radius = conn_const * h
    keep = midpoint_filter(model.cone_set, tau) if model.cone_set is not None else None
    g = build_graph(pts, radius, keep=keep)
    norms = np.linalg.norm(pts - base, axis=1)
    top = max(model.ray_scales)
    if len(model.ray_scales) > 1:
        sources = np.arange(len(pts))
    else:
        sources = np.flatnonzero(np.abs(norms - top) <= 1e-9 * max(top, 1.0))
    if bands is None:
        lo = max(2 * ETA * h, 1e-6)
        bands = list(np.geomspace(1.0, lo, 6)) if lo < 1.0 else [1.0]
    bands = [float(b) for b in bands]
    windows = [(max(b / 2, ETA * h), b) for b in bands]
    ests = lne_bands(g, windows, pair_budget, sources=sources, targets=sources, seed=seed)
    results = [
        ScaleResult(b, e.value, e.pair, e.inner, e.outer, g.n, e.probed_pairs, e.unreachable_pairs, radius)
        for b, e in zip(bands, ests)
    ]
    usable = [r for r in results if r.probed_pairs > 0]
    report = report_from_scales(usable, [r.t for r in results if r.probed_pairs == 0],
                                {"bands": bands, "ray_scales": model.ray_scales, "conn_const": conn_const})
    return report


# ---------------------------------------------------------------------------
# k_X


@dataclass
class KxWindow:
    direction: np.ndarray
    eps: float
    delta: float
    samples: np.ndarray  # rows (w, s)

    def __post_init__(self):
        if len(self.samples):
            w, s = self.samples[:, :-1], self.samples[:, -1]
            ok = (np.linalg.norm(w - self.direction, axis=1) < self.eps) & (s > 0) & (s < self.delta)
            if not ok.all():
                raise ValueError("window sample outside the window")


@dataclass
class KxResult:
    direction: list
    k: int
    stable: bool
    counts: dict
    eps: float
    delta: float
    samples: int

    def to_dict(self):
        return {"direction": [float(x) for x in self.direction], "k": int(self.k), "stable": bool(self.stable)}


def count_components(germ: Germ, window: KxWindow, conn_const: float = 6.0, min_fraction: float = 0.02) -> int:
    """Connected components of the window sample in rescaled blow-up coordinates.

    Coordinates are ``(w/eps, s/delta)``.  Components holding fewer than
    ``max(3, min_fraction * N)`` points are treated as sampling debris.
    """
    S = window.samples
    if len(S) == 0:
        return 0
    coords = np.column_stack([S[:, :-1] / window.eps, S[:, -1] / window.delta])
    h = spacing(coords)
    if h == 0:
        return 1
    sets = branches_of(germ)
    base = sets[0].base

    def keep(a, b):
        # blow-up midpoint mapped back to the ambient space; length in the same units
        mid = 0.5 * (a + b)
        w = mid[:, :-1] * window.eps
        w = w / np.linalg.norm(w, axis=1, keepdims=True)
        r = mid[:, -1] * window.delta
        amb = base + w * r[:, None]
        dist = np.min(np.stack([s.distance_estimate(amb) for s in sets]), axis=0)
        return dist <= 0.1 * np.linalg.norm(a - b, axis=1) * window.eps * r

    g = build_graph(coords, conn_const * h, keep=keep)
    labels = g.components()
    sizes = np.bincount(labels)
    floor = max(3, min_fraction * len(S))
    return int(np.sum(sizes >= floor))


def sample_kx_window(germ: Germ, direction, eps: float, delta: float, n: int, seed: int = 42) -> KxWindow:
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    pts = sample_window(germ, direction, eps, delta, n, seed)
    pts = dedupe(pts, 1e-9 * delta)
    base = branches_of(germ)[0].base
    rel = pts - base
    s = np.linalg.norm(rel, axis=1)
    w = rel / s[:, None]
    return KxWindow(direction, eps, delta, np.column_stack([w, s]))


def kx_estimate(
    germ: Germ,
    direction,
    eps: float = 0.3,
    delta: float = 0.05,
    n: int = 2000,
    seed: int = 42,
    *,
    conn_const: float = 6.0,
) -> KxResult:
    """Number of local sheets of the blown-up germ over ``direction``.

    Stable when the count survives doubling ``n`` and halving both ``eps`` and ``delta``.
    """
    direction = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(direction)
    if not np.isclose(nrm, 1.0, atol=1e-6):
        raise ValueError("direction must be a unit vector")
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    counts = {}
    base_window = sample_kx_window(germ, direction, eps, delta, n, seed)
    if len(base_window.samples) == 0:
        raise RuntimeError("empty window")
    counts["base"] = count_components(germ, base_window, conn_const)
    counts["double_n"] = count_components(germ, sample_kx_window(germ, direction, eps, delta, 2 * n, seed + 1), conn_const)
    counts["half_window"] = count_components(
        germ, sample_kx_window(germ, direction, eps / 2, delta / 2, n, seed + 2), conn_const
    )
    k = counts["base"]
    stable = len(set(counts.values())) == 1
    return KxResult(list(direction / nrm), k, stable, counts, eps, delta, len(base_window.samples))


def farthest_point_subsample(points: np.ndarray, count: int) -> np.ndarray:
    """Greedy farthest-point indices, starting from the first point."""
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return np.zeros(0, dtype=int)
    count = min(count, len(pts))
    chosen = [0]
    dist = np.linalg.norm(pts - pts[0], axis=1)
    while len(chosen) < count:
        i = int(np.argmax(dist))
        if dist[i] == 0:
            break
        chosen.append(i)
        dist = np.minimum(dist, np.linalg.norm(pts - pts[i], axis=1))
    return np.array(chosen, dtype=int)


@dataclass
class ReducednessReport:
    reduced_estimate: bool
    per_direction: list
    unstable: list

    def to_dict(self):
        return {
            "reduced_estimate": self.reduced_estimate,
            "per_direction": [r.to_dict() for r in self.per_direction],
            "unstable": [r.to_dict() for r in self.unstable],
        }


def reducedness_report(
    germ: Germ,
    direction_sample_count: int = 5,
    *,
    cloud: DirectionCloud | None = None,
    scales: Sequence[float] = (1e-2, 1e-3),
    eps: float = 0.3,
    delta: float = 0.05,
    n: int = 2000,
    seed: int = 42,
    avoid: Sequence | None = None,
    avoid_radius: float = 0.0,
) -> ReducednessReport:
    """``k_X`` at a spread of cone directions; reduced when every stable count is 1.

    ``avoid`` lists annotated non-simple directions; cloud points within
    ``avoid_radius`` of them are not probed.
    """
    if cloud is None:
        cloud = directions(germ, scales, n, seed)
    D = cloud.directions
    if avoid is not None and len(avoid) and avoid_radius > 0:
        A = np.asarray(avoid, dtype=float)
        A = A / np.linalg.norm(A, axis=1, keepdims=True)
        far = np.min(np.linalg.norm(D[:, None, :] - A[None, :, :], axis=2), axis=1) > avoid_radius
        D = D[far]
    idx = farthest_point_subsample(D, direction_sample_count)
    per, unstable = [], []
    for j, i in enumerate(idx):
        v = D[i] / np.linalg.norm(D[i])
        try:
            r = kx_estimate(germ, v, eps, delta, n, seed + 17 * j)
        except RuntimeError:
            log.info("empty window at direction %s", v)
            continue
        per.append(r)
        if not r.stable:
            unstable.append(r)
    stable = [r for r in per if r.stable]
    reduced = bool(stable) and all(r.k == 1 for r in stable)
    return ReducednessReport(reduced, per, unstable)


def is_reduced_hypersurface_cone(f: Polynomial) -> bool | None:
    """Squarefreeness of the initial form (reduced tangent cone of a hypersurface)."""
    return is_squarefree(initial_form(f))
