"""Semialgebraic germs and on-set sampling near a base point.

A germ is a :class:`SemialgebraicSet` or, when ``abs()`` had to be split, a
list of branch sets whose union is the germ.  Sampling projects seeded random
proposals onto the equations with a damped Gauss-Newton iteration; when a
radius is requested the sphere ``|x - p|^2 = t^2`` is appended to the system.
"""

from __future__ import annotations

import itertools
import json
import logging
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .expr import (
    Abs,
    BinOp,
    Neg,
    Num,
    Polynomial,
    Pow,
    Sqrt,
    Var,
    abs_variables,
    expand,
    parse,
    realify,
)

log = logging.getLogger(__name__)

RADIAL_TOL = 1e-6
EQ_TOL = 1e-8
MAX_ITER = 50
ACCEPTANCE_FLOOR = 0.02


class ProjectionError(RuntimeError):
    """Gauss-Newton did not reach the set (or left the admissible region)."""


@dataclass(frozen=True, eq=False)
class SemialgebraicSet:
    """Equations ``f = 0`` and inequalities ``g >= 0`` / ``g > 0`` around a base point.

    ``kind == "complex"`` means the equations are the real and imaginary parts of
    ``complex_equations`` (kept for fast evaluation in complex arithmetic).
    ``dim`` is the expected local real dimension; it sizes sampling and graphs.
    ``pieces`` optionally splits the zero set into a union: each entry is a
    tuple of polynomials whose common zeros form one piece (product factors).
    """

    name: str
    variables: tuple
    equations: tuple
    inequalities: tuple = ()
    basepoint: tuple | None = None
    kind: str = "real"
    complex_equations: tuple = ()
    dim: int | None = None
    pieces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "pieces", tuple(tuple(pc) for pc in self.pieces))
        object.__setattr__(self, "equations", tuple(self.equations))
        object.__setattr__(
            self, "inequalities", tuple((g, rel) for g, rel in self.inequalities)
        )
        object.__setattr__(self, "complex_equations", tuple(self.complex_equations))
        for p in self.equations:
            if p.variables != self.variables:
                raise ValueError(f"{self.name}: equation over {p.variables}, expected {self.variables}")
        for g, rel in self.inequalities:
            if g.variables != self.variables:
                raise ValueError(f"{self.name}: inequality over {g.variables}")
            if rel not in (">=0", ">0"):
                raise ValueError(f"unknown relation {rel!r}")
        if self.kind not in ("real", "complex"):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        bp = self.basepoint
        bp = (0.0,) * len(self.variables) if bp is None else tuple(float(x) for x in bp)
        if len(bp) != len(self.variables):
            raise ValueError("basepoint dimension mismatch")
        object.__setattr__(self, "basepoint", bp)
        for p in self.equations:
            if abs(p(bp)) > 1e-9:
                raise ValueError(f"{self.name}: basepoint is not on the set ({p} = {p(bp)})")
        for g, rel in self.inequalities:
            if rel == ">=0" and g(bp) < -1e-9:
                raise ValueError(f"{self.name}: basepoint violates {g} >= 0")

    @property
    def real_dim(self) -> int:
        return len(self.variables)

    @property
    def local_dim(self) -> int:
        if self.dim is not None:
            return int(self.dim)
        return max(self.real_dim - len(self.equations), 1)

    @property
    def base(self) -> np.ndarray:
        return np.array(self.basepoint, dtype=float)

    def equation_orders(self) -> list[int]:
        """Order of vanishing of each equation at the base point."""
        cached = self.__dict__.get("_orders")
        if cached is None:
            shift = [Fraction(x) for x in self.basepoint]
            cached = [p.substitute_linear(shift).order() if not p.is_zero() else 0 for p in self.equations]
            object.__setattr__(self, "_orders", cached)
        return cached

    # batched numerics -------------------------------------------------------

    def values(self, points) -> np.ndarray:
        """Equation values, shape ``(N, E)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.equations:
            return np.zeros((pts.shape[0], 0))
        if self.complex_equations:
            z = pts[:, 0::2] + 1j * pts[:, 1::2]
            cols = []
            for f in self.complex_equations:
                w = f.eval_many(z)
                cols.extend([w.real, w.imag])
            return np.stack(cols, axis=1)
        return np.stack([p.eval_many(pts) for p in self.equations], axis=1)

    def jacobian(self, points) -> np.ndarray:
        """Equation gradients, shape ``(N, E, m)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.equations:
            return np.zeros((pts.shape[0], 0, pts.shape[1]))
        if self.complex_equations:
            z = pts[:, 0::2] + 1j * pts[:, 1::2]
            rows = []
            for f in self.complex_equations:
                df = f.grad_many(z)  # (N, mc) holomorphic partials
                du = np.empty((pts.shape[0], pts.shape[1]))
                dv = np.empty_like(du)
                du[:, 0::2], du[:, 1::2] = df.real, -df.imag
                dv[:, 0::2], dv[:, 1::2] = df.imag, df.real
                rows.extend([du, dv])
            return np.stack(rows, axis=1)
        return np.stack([p.grad_many(pts) for p in self.equations], axis=1)

    def inequality_values(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.inequalities:
            return np.zeros((pts.shape[0], 0))
        return np.stack([g.eval_many(pts) for g, _ in self.inequalities], axis=1)

    def satisfies_inequalities(self, points) -> np.ndarray:
        vals = self.inequality_values(points)
        ok = np.ones(vals.shape[0], dtype=bool)
        for k, (_, rel) in enumerate(self.inequalities):
            ok &= vals[:, k] > 0 if rel == ">0" else vals[:, k] >= 0
        return ok

    def distance_estimate(self, points) -> np.ndarray:
        """First-order distance to the set: ``max_k |f_k| / |grad f_k|`` plus inequality violation."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        est = np.zeros(pts.shape[0])
        if self.equations:
            vals = np.abs(self.values(pts))
            norms = np.linalg.norm(self.jacobian(pts), axis=2)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.where(vals == 0, 0.0, vals / norms)
            est = np.max(np.nan_to_num(d, nan=np.inf), axis=1)
        if self.inequalities:
            gv = self.inequality_values(pts)
            gn = np.stack([g.grad_many(pts) for g, _ in self.inequalities], axis=1)
            gn = np.linalg.norm(gn, axis=2)
            with np.errstate(divide="ignore", invalid="ignore"):
                viol = np.where(gv >= 0, 0.0, -gv / gn)
            est = np.maximum(est, np.max(np.nan_to_num(viol, nan=np.inf), axis=1))
        return est

    def piece_distances(self, points) -> np.ndarray:
        """First-order distance of each point to each piece, shape ``(N, P)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        pieces = self.pieces or (self.equations,)
        out = np.zeros((len(pts), len(pieces)))
        for k, polys in enumerate(pieces):
            for p in polys:
                v = np.abs(p.eval_many(pts))
                gn = np.linalg.norm(p.grad_many(pts), axis=1)
                with np.errstate(divide="ignore", invalid="ignore"):
                    d = np.where(v == 0, 0.0, v / gn)
                out[:, k] = np.maximum(out[:, k], np.nan_to_num(d, nan=np.inf))
        return out


def product_factors(tree) -> list:
    """Top-level multiplicative factors of a parse tree (the tree itself if not a product)."""
    if isinstance(tree, BinOp) and tree.op == "*":
        return product_factors(tree.left) + product_factors(tree.right)
    return [tree]


Germ = Union[SemialgebraicSet, Sequence[SemialgebraicSet]]


def branches_of(germ: Germ) -> list[SemialgebraicSet]:
    if isinstance(germ, SemialgebraicSet):
        return [germ]
    return list(germ)


# ---------------------------------------------------------------------------
# abs() branch splitting


def _substitute_abs(node, signs: dict):
    if isinstance(node, Abs):
        v = Var(node.name)
        return v if signs[node.name] > 0 else Neg(v)
    if isinstance(node, Neg):
        return Neg(_substitute_abs(node.arg, signs))
    if isinstance(node, Sqrt):
        return Sqrt(_substitute_abs(node.arg, signs))
    if isinstance(node, BinOp):
        return BinOp(node.op, _substitute_abs(node.left, signs), _substitute_abs(node.right, signs))
    if isinstance(node, Pow):
        return Pow(_substitute_abs(node.base, signs), node.exponent)
    return node


def branch_split(
    name: str,
    variables: Sequence[str],
    equations: Sequence,
    inequalities: Sequence = (),
    basepoint=None,
    dim: int | None = None,
) -> list[SemialgebraicSet]:
    """Resolve ``abs(v)`` nodes into sign branches.

    ``equations`` are parse trees; ``inequalities`` are ``(tree, rel)`` pairs.
    Each branch replaces ``abs(v)`` by ``+v`` or ``-v`` and appends the
    matching sign condition, so the branches cover the original set.
    """
    variables = tuple(variables)
    trees = list(equations) + [t for t, _ in inequalities]
    abs_vars: list[str] = []
    for t in trees:
        for v in abs_variables(t):
            if v not in abs_vars:
                abs_vars.append(v)
    out = []
    for combo in itertools.product((1, -1), repeat=len(abs_vars)):
        signs = dict(zip(abs_vars, combo))
        eqs = [expand(_substitute_abs(t, signs), variables) for t in equations]
        ineqs = [(expand(_substitute_abs(t, signs), variables), rel) for t, rel in inequalities]
        for v, s in signs.items():
            ineqs.append((Polynomial.variable(variables, v) * s, ">=0"))
        pieces = tuple(
            tuple(expand(_substitute_abs(f, signs), variables) for f in combo)
            for combo in _factor_combos(equations)
        )
        label = name
        if abs_vars:
            label += "[" + ",".join(f"{v}{'>=0' if s > 0 else '<=0'}" for v, s in signs.items()) + "]"
        out.append(
            SemialgebraicSet(label, variables, eqs, ineqs, basepoint=basepoint, dim=dim, pieces=pieces)
        )
    return out


def _factor_combos(trees) -> list:
    """One factor per equation, over all choices; empty when no equation factors."""
    factor_lists = [product_factors(t) for t in trees]
    if all(len(f) <= 1 for f in factor_lists):
        return []
    return list(itertools.product(*factor_lists))


def load_set_json(obj) -> list[SemialgebraicSet]:
    """Build the branches of a set from its JSON definition (dict, path or string)."""
    if isinstance(obj, (str, Path)) and Path(obj).exists():
        obj = json.loads(Path(obj).read_text())
    elif isinstance(obj, str):
        obj = json.loads(obj)
    name = obj.get("name", "set")
    ambient = obj.get("ambient", {"kind": "real"})
    kind = ambient.get("kind", "real")
    variables = list(obj["variables"])
    eq_text = list(obj.get("equations", []))
    ineq_text = [(d["expr"], d.get("rel", ">=0")) for d in obj.get("inequalities", [])]
    dim = obj.get("local_dim")
    if "dim" in ambient and int(ambient["dim"]) != len(variables):
        raise ValueError("ambient dim does not match the variable count")
    if kind == "complex":
        if ineq_text:
            raise ValueError("complex sets cannot carry inequalities")
        trees = [parse(t, variables) for t in eq_text]
        cpolys = [expand(t, variables) for t in trees]
        rpolys = realify(cpolys)
        pieces = tuple(
            tuple(realify([expand(f, variables) for f in combo])) for combo in _factor_combos(trees)
        )
        rvars = rpolys[0].variables if rpolys else tuple(
            f"{v}{s}" for v in variables for s in ("_re", "_im")
        )
        bp = obj.get("basepoint")
        if bp is not None and len(bp) == len(variables):
            bp = [c for x in bp for c in (x, 0.0)]
        return [
            SemialgebraicSet(
                name, rvars, rpolys, (), basepoint=bp, kind="complex",
                complex_equations=cpolys, dim=dim, pieces=pieces,
            )
        ]
    if kind != "real":
        raise ValueError(f"unknown ambient kind {kind!r}")
    eqs = [parse(t, variables) for t in eq_text]
    ineqs = [(parse(t, variables), rel) for t, rel in ineq_text]
    return branch_split(name, variables, eqs, ineqs, basepoint=obj.get("basepoint"), dim=dim)


# ---------------------------------------------------------------------------
# Gauss-Newton projection


def _gn_batch(sset: SemialgebraicSet, x0, center=None, radii=None, maxiter=MAX_ITER):
    """Damped Gauss-Newton on ``f = 0`` (and ``|x - center| = radius`` when given).

    Minimum-norm Levenberg-Marquardt steps on row-normalized equations, with a
    three-point backtracking choice per iteration.  Returns the final points and
    the iteration count per point.
    """
    x = np.array(x0, dtype=float, copy=True)
    n, m = x.shape
    if center is not None:
        center = np.asarray(center, dtype=float)
        radii = np.asarray(radii, dtype=float).reshape(n)
    scale = np.maximum(radii, 1e-300) if radii is not None else np.maximum(np.linalg.norm(x - sset.base, axis=1), 1e-12)

    def system(pts, active_r):
        F = sset.values(pts)
        J = sset.jacobian(pts)
        if center is not None:
            d = pts - center
            F = np.concatenate([F, ((np.sum(d * d, axis=1) - active_r**2) / 2.0)[:, None]], axis=1)
            J = np.concatenate([J, d[:, None, :]], axis=1)
        norms = np.linalg.norm(J, axis=2)
        norms = np.where(norms > 0, norms, 1.0)
        return F / norms, J / norms[:, :, None]

    def merit(Fn):
        return np.max(np.abs(Fn), axis=1)

    iters = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)
    for _ in range(maxiter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        r = radii[idx] if radii is not None else None
        Fn, Jn = system(x[idx], r)
        res = merit(Fn)
        done = res <= 1e-15 * scale[idx]
        active[idx[done]] = False
        idx, Fn, Jn, res = idx[~done], Fn[~done], Jn[~done], res[~done]
        if idx.size == 0:
            break
        k = Fn.shape[1]
        A = Jn @ np.swapaxes(Jn, 1, 2) + 1e-12 * np.eye(k)
        y = np.linalg.solve(A, Fn[:, :, None])
        step = -(np.swapaxes(Jn, 1, 2) @ y)[:, :, 0]
        cap = 0.5 * scale[idx]
        sn = np.linalg.norm(step, axis=1)
        step *= np.minimum(1.0, cap / np.maximum(sn, 1e-300))[:, None]
        best = x[idx].copy()
        best_res = res.copy()
        r = radii[idx] if radii is not None else None
        for frac in (1.0, 0.5, 0.25):
            trial = x[idx] + frac * step
            tr = merit(system(trial, r)[0])
            better = tr < best_res
            best[better] = trial[better]
            best_res[better] = tr[better]
        stalled = best_res >= res
        x[idx] = best
        iters[idx] += 1
        active[idx[stalled]] = False
    return x, iters


def project(sset: SemialgebraicSet, start, tol: float = 1e-10) -> np.ndarray:
    """Project ``start`` onto the zero set by damped Gauss-Newton (at most 50 steps)."""
    start = np.asarray(start, dtype=float)
    if start.shape != (sset.real_dim,):
        raise ValueError("start point dimension mismatch")
    if np.max(np.abs(sset.values(start[None])), initial=0.0) <= tol:
        point = start
    else:
        pts, _ = _gn_batch(sset, start[None])
        point = pts[0]
        if np.max(np.abs(sset.values(point[None])), initial=0.0) > tol:
            raise ProjectionError(f"no convergence within {MAX_ITER} iterations")
    if not sset.satisfies_inequalities(point[None])[0]:
        raise ProjectionError("converged point violates an inequality")
    return point


# ---------------------------------------------------------------------------
# seeded proposals


def _key(seed: int, t: float, salt: int = 0) -> np.ndarray:
    tbits = struct.unpack("<Q", struct.pack("<d", float(t)))[0]
    return np.array([(int(seed) * 0x9E3779B97F4A7C15 + salt) % 2**64, tbits], dtype=np.uint64)


def uniforms(seed: int, t: float, n: int, width: int, salt: int = 0) -> np.ndarray:
    """Counter-based uniforms: row ``i`` depends only on ``(seed, t, salt, i)``."""
    gen = np.random.Generator(np.random.Philox(key=_key(seed, t, salt)))
    u = gen.random((n, width))
    return np.clip(u, 1e-300, 1.0)


def random_directions(seed: int, t: float, n: int, m: int, salt: int = 0) -> np.ndarray:
    """Uniform unit vectors in R^m (Box-Muller on counter-based uniforms)."""
    w = m + (m % 2)
    u = uniforms(seed, t, n, w, salt)
    r = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    ang = 2.0 * np.pi * u[:, 1::2]
    z = np.empty((n, w))
    z[:, 0::2] = r * np.cos(ang)
    z[:, 1::2] = r * np.sin(ang)
    z = z[:, :m]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def stratified_directions(seed: int, t: float, n: int, m: int, salt: int = 0) -> np.ndarray:
    """Low-discrepancy unit vectors: scrambled Halton points pushed through the normal quantile.

    Row ``i`` is still a function of ``(seed, t, salt, i)`` only, but rows are
    spread out, so projections onto curves leave no log-size gaps.
    """
    gen = np.random.Generator(np.random.Philox(key=_key(seed, t, salt)))
    u = qmc.Halton(d=m, scramble=True, seed=int(gen.integers(2**63))).random(n)
    z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    if m == 1:
        return np.sign(z)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# sampling


@dataclass
class ShellSample:
    """Accepted on-set points at distance ``radius`` from the base point."""

    radius: float
    points: np.ndarray
    residuals: np.ndarray
    basepoint: np.ndarray
    attempted: int = 0
    branch: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def acceptance(self) -> float:
        return len(self.points) / self.attempted if self.attempted else 0.0

    @property
    def thin(self) -> bool:
        return self.acceptance < ACCEPTANCE_FLOOR

    @property
    def directions(self) -> np.ndarray:
        return (self.points - self.basepoint) / self.radius


def _accept(sset: SemialgebraicSet, pts, center, radii):
    """Mask of points passing the radial, equation and inequality checks."""
    ok = np.all(np.isfinite(pts), axis=1)
    if center is not None:
        rad = np.linalg.norm(pts - center, axis=1)
        ok &= np.abs(rad - radii) <= RADIAL_TOL * radii
    res = np.abs(sset.values(pts))
    scale = np.maximum(np.linalg.norm(pts - sset.base, axis=1), 1e-300)
    orders = np.array(sset.equation_orders(), dtype=float)
    if res.shape[1]:
        # residuals scale like |x|^order near the base point; guard the order-0/1 case
        bound = EQ_TOL * scale[:, None] ** np.maximum(orders, 1.0)[None, :]
        ok &= np.all(res <= bound, axis=1)
    ok &= sset.satisfies_inequalities(pts)
    resid = res.max(axis=1) if res.shape[1] else np.zeros(len(pts))
    return ok, resid


def _sample_radii(germ: Germ, center, radii, seed, t_key, salt=0, cone_dir=None, cone_eps=None, stratified=False):
    """Project one seeded proposal per entry of ``radii`` onto every branch.

    Proposals for branch ``b`` use salt ``salt + b`` so that branches draw
    independent directions.  Returns points, residuals, branch ids and candidate ids.
    """
    sets = branches_of(germ)
    n = len(radii)
    out_pts, out_res, out_branch, out_idx = [], [], [], []
    for b, sset in enumerate(sets):
        m = sset.real_dim
        draw = stratified_directions if stratified else random_directions
        dirs = draw(seed, t_key, n, m, salt=salt + b)
        if cone_dir is not None:
            # proposals in the spherical cap of radius cone_eps around cone_dir
            u = uniforms(seed, t_key, n, 1, salt=salt + 1000 + b)[:, 0]
            tang = dirs - (dirs @ cone_dir)[:, None] * cone_dir[None, :]
            tn = np.linalg.norm(tang, axis=1, keepdims=True)
            tang = tang / np.maximum(tn, 1e-300)
            dim_cap = max(m - 1, 1)
            ang = 2 * np.arcsin(np.minimum(cone_eps / 2, 1.0)) * u ** (1.0 / dim_cap)
            dirs = np.cos(ang)[:, None] * cone_dir[None, :] + np.sin(ang)[:, None] * tang
        x0 = center[None, :] + radii[:, None] * dirs
        pts, _ = _gn_batch(sset, x0, center=center, radii=radii)
        ok, resid = _accept(sset, pts, center, radii)
        keep = np.flatnonzero(ok)
        out_pts.append(pts[keep])
        out_res.append(resid[keep])
        out_branch.append(np.full(len(keep), b))
        out_idx.append(keep)
    m = sets[0].real_dim
    if not out_pts:
        return np.zeros((0, m)), np.zeros(0), np.zeros(0, int), np.zeros(0, int)
    pts = np.concatenate(out_pts) if out_pts else np.zeros((0, m))
    return pts, np.concatenate(out_res), np.concatenate(out_branch), np.concatenate(out_idx)


def sample_shell(germ: Germ, t: float, n: int, seed: int = 42, *, stratified: bool = False) -> ShellSample:
    """Sample up to ``n`` points of the germ on the sphere of radius ``t`` about the base point.

    With several branches the ``n`` proposals are spread over them.
    ``stratified`` swaps iid proposal directions for a low-discrepancy set.
    """
    if t <= 0:
        raise ValueError("shell radius must be positive")
    if n < 1:
        raise ValueError("need at least one proposal")
    sets = branches_of(germ)
    base = sets[0].base
    per = int(np.ceil(n / len(sets)))
    pts, res, br, _ = _sample_radii(sets, base, np.full(per, float(t)), seed, t, stratified=stratified)
    pts, res, br = pts[:n], res[:n], br[:n]
    sample = ShellSample(float(t), pts, res, base, attempted=per * len(sets), branch=br)
    if sample.thin:
        log.info("thin shell at t=%g: %d of %d proposals accepted", t, len(pts), sample.attempted)
    return sample


def sample_ball(
    germ: Germ,
    radius: float,
    n: int,
    seed: int = 42,
    *,
    center=None,
    dim: int | None = None,
    inner: float = 0.0,
    log_radial: bool = False,
    repeats: int | None = None,
) -> np.ndarray:
    """On-set points with distance to ``center`` in ``(inner, radius]``.

    Radii are stratified: uniform in ``d``-volume (``d`` the local dimension)
    or log-uniform when ``log_radial``.  Each radius gets ``repeats``
    proposals (default 16 for curves, 1 otherwise) so thin branches are hit.
    """
    sets = branches_of(germ)
    center = sets[0].base if center is None else np.asarray(center, dtype=float)
    d = dim or sets[0].local_dim
    if repeats is None:
        repeats = 16 if d == 1 else 1
    k = max(int(np.ceil(n / (repeats * len(sets)))), 1)
    jitter = uniforms(seed, radius, k, 1, salt=7)[:, 0]
    q = (np.arange(k) + jitter) / k
    if log_radial:
        lo = max(inner, radius * 1e-6)
        radii = lo * (radius / lo) ** q
    else:
        radii = (inner**d + (radius**d - inner**d) * q) ** (1.0 / d)
    radii = np.repeat(radii, repeats)
    pts, _, _, _ = _sample_radii(sets, center, radii, seed, radius, salt=11)
    return pts


def sample_window(germ: Germ, direction, eps: float, delta: float, n: int, seed: int = 42, *, floor: float = 0.1):
    """Points of the germ with ``|x/|x| - direction| < eps`` and ``floor*delta < |x| < delta``."""
    sets = branches_of(germ)
    base = sets[0].base
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    d = sets[0].local_dim
    repeats = 16 if d == 1 else 1
    k = max(int(np.ceil(n / (repeats * len(sets)))), 1)
    jitter = uniforms(seed, delta + eps, k, 1, salt=5)[:, 0]
    q = (np.arange(k) + jitter) / k
    lo = floor * delta
    radii = np.repeat(lo + (delta - lo) * q, repeats)
    pts, _, _, _ = _sample_radii(sets, base, radii, seed, delta + eps, salt=13, cone_dir=direction, cone_eps=eps)
    rel = pts - base
    r = np.linalg.norm(rel, axis=1)
    w = rel / r[:, None]
    keep = (np.linalg.norm(w - direction, axis=1) < eps) & (r < delta) & (r > 0)
    return pts[keep]


def dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    """Drop points within ``tol`` of an earlier point (first occurrence kept)."""
    from scipy.spatial import cKDTree

    if len(points) == 0:
        return points
    tree = cKDTree(points)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    drop = np.zeros(len(points), dtype=bool)
    if len(pairs):
        # sequential rule: a point is dropped if it is within tol of a kept earlier point
        later = np.maximum(pairs[:, 0], pairs[:, 1])
        earlier = np.minimum(pairs[:, 0], pairs[:, 1])
        order = np.lexsort((earlier, later))
        for e, l in zip(earlier[order], later[order]):
            if not drop[e]:
                drop[l] = True
    return points[~drop]
