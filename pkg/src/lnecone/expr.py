"""Expression parsing and exact sparse polynomials.

Polynomials carry exact :class:`fractions.Fraction` coefficients; floats only
appear when a polynomial is evaluated at a point.  Terms are kept in graded
lexicographic order with respect to the declared variable order.
"""

from __future__ import annotations

import random
import re
import types
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ParseError",
    "Num",
    "Var",
    "Neg",
    "Abs",
    "Sqrt",
    "BinOp",
    "Pow",
    "Polynomial",
    "parse",
    "expand",
    "evaluate",
    "initial_form",
    "is_squarefree",
    "realify",
    "abs_variables",
]


class ParseError(ValueError):
    """Raised for malformed expressions; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


# ---------------------------------------------------------------------------
# parse trees


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Abs:
    name: str


@dataclass(frozen=True)
class Sqrt:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, variables, allow_sqrt):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = set(variables)
        self.allow_sqrt = allow_sqrt

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value or kind == "end":
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", off)

    def parse(self):
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            if self.take()[1] == "*":
                node = BinOp("*", node, self.factor())
                continue
            # division only by a literal, so printed rational coefficients parse back
            kind, text, off = self.take()
            if kind != "num":
                raise ParseError("can only divide by a number literal", off)
            if Fraction(text) == 0:
                raise ParseError("division by zero", off)
            node = BinOp("*", node, Num(1 / Fraction(text)))
        return node

    def factor(self):
        # unary minus binds looser than '^':  -x^2 == -(x^2)
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        node = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, text, off = self.take()
            if kind == "op" and text == "-":
                raise ParseError("negative exponent", off)
            if kind != "num":
                raise ParseError("exponent must be a non-negative integer literal", off)
            if not text.isdigit():
                raise ParseError(f"non-integer exponent {text!r}", off)
            node = Pow(node, int(text))
        return node

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Num(Fraction(text))
        if kind == "ident":
            if text in ("abs", "sqrt") and self.peek()[:2] == ("op", "("):
                self.take()
                if text == "abs":
                    k2, name, off2 = self.take()
                    if k2 != "ident" or self.peek()[:2] != ("op", ")"):
                        raise ParseError("abs() accepts a single variable", off2)
                    if name not in self.variables:
                        raise ParseError(f"unknown variable {name!r}", off2)
                    self.take()
                    return Abs(name)
                if not self.allow_sqrt:
                    raise ParseError("sqrt() is only allowed in curve expressions", off)
                inner = self.expr()
                self.expect(")")
                return Sqrt(inner)
            if text not in self.variables:
                raise ParseError(f"unknown variable {text!r}", off)
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "op" and text == "-":
            return Neg(self.atom())
        raise ParseError(f"unexpected {text or 'end of input'!r}", off)


def parse(text: str, variables: Sequence[str], *, allow_sqrt: bool = False):
    """Parse ``text`` into an expression tree over ``variables``."""
    return _Parser(text, variables, allow_sqrt).parse()


def abs_variables(node) -> list[str]:
    """Names wrapped in ``abs()`` anywhere in the tree, in first-seen order."""
    found: list[str] = []
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Abs):
            if n.name not in found:
                found.append(n.name)
        elif isinstance(n, (Neg, Sqrt)):
            stack.append(n.arg)
        elif isinstance(n, BinOp):
            stack.extend((n.right, n.left))
        elif isinstance(n, Pow):
            stack.append(n.base)
    return found


def evaluate(node, env: Mapping[str, float]) -> float:
    """Floating-point evaluation of a tree (``sqrt`` and ``abs`` included)."""
    if isinstance(node, Num):
        return float(node.value)
    if isinstance(node, Var):
        return float(env[node.name])
    if isinstance(node, Abs):
        return abs(float(env[node.name]))
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Sqrt):
        val = evaluate(node.arg, env)
        if val < 0:
            raise ValueError(f"negative radicand {val!r}")
        return float(np.sqrt(val))
    if isinstance(node, Pow):
        return evaluate(node.base, env) ** node.exponent
    if isinstance(node, BinOp):
        if node.op in "+-":
            head, rest = _sum_chain(node)
            total = evaluate(head, env)
            for op, arg in rest:
                total = total + evaluate(arg, env) if op == "+" else total - evaluate(arg, env)
            return total
        return evaluate(node.left, env) * evaluate(node.right, env)
    raise TypeError(f"not an expression node: {node!r}")


def expand(node, variables: Sequence[str]) -> "Polynomial":
    """Expand a tree into a canonical :class:`Polynomial`."""
    variables = tuple(variables)
    if isinstance(node, Num):
        return Polynomial.constant(variables, node.value)
    if isinstance(node, Var):
        return Polynomial.variable(variables, node.name)
    if isinstance(node, Abs):
        raise ValueError("abs() must be resolved by branch splitting before expansion")
    if isinstance(node, Sqrt):
        raise ValueError("sqrt() cannot be expanded into a polynomial")
    if isinstance(node, Neg):
        return -expand(node.arg, variables)
    if isinstance(node, Pow):
        return expand(node.base, variables) ** node.exponent
    if isinstance(node, BinOp):
        if node.op in "+-":
            # long sums parse into deep left spines; accumulate without recursing down them
            head, rest = _sum_chain(node)
            acc = dict(expand(head, variables).terms)
            for op, arg in rest:
                _add_into(acc, expand(arg, variables).terms, 1 if op == "+" else -1)
            return Polynomial(variables, acc)
        return expand(node.left, variables) * expand(node.right, variables)
    raise TypeError(f"not an expression node: {node!r}")


def _sum_chain(node):
    """Split ``((a op1 b) op2 c) ...`` into ``a`` and ``[(op1, b), (op2, c), ...]``."""
    rest = []
    while isinstance(node, BinOp) and node.op in "+-":
        rest.append((node.op, node.right))
        node = node.left
    return node, rest[::-1]


# ---------------------------------------------------------------------------
# polynomials


def _grlex_key(exps):
    return (sum(exps), exps)


def _mul_terms(a: Mapping, b: Mapping) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return out


def _add_into(acc: dict, terms: Mapping, scale=1) -> None:
    for e, c in terms.items():
        acc[e] = acc.get(e, 0) + scale * c


class Polynomial:
    """Sparse multivariate polynomial with rational coefficients.

    Instances are immutable; arithmetic returns new objects.  Two polynomials
    compare equal when they have the same variable list and the same terms.
    """

    def __init__(self, variables: Sequence[str], terms: Mapping[tuple, object] | None = None):
        variables = tuple(variables)
        nvar = len(variables)
        clean = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvar:
                raise ValueError(f"exponent vector {exps} does not match {nvar} variables")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            coef = Fraction(coef)
            if coef:
                clean[exps] = coef
        ordered = dict(sorted(clean.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True))
        self._variables = variables
        self._terms = ordered

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, variables: Sequence[str], value) -> "Polynomial":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> "Polynomial":
        variables = tuple(variables)
        exps = tuple(1 if v == name else 0 for v in variables)
        if sum(exps) != 1:
            raise ValueError(f"unknown variable {name!r}")
        return cls(variables, {exps: 1})

    @classmethod
    def from_string(cls, text: str, variables: Sequence[str]) -> "Polynomial":
        return expand(parse(text, variables), variables)

    # accessors ------------------------------------------------------------

    @property
    def variables(self) -> tuple:
        return self._variables

    @property
    def terms(self) -> Mapping[tuple, Fraction]:
        return types.MappingProxyType(self._terms)

    @property
    def nvars(self) -> int:
        return len(self._variables)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def order(self) -> int:
        """Lowest total degree of a term (the order of vanishing at the origin)."""
        if not self._terms:
            raise ValueError("zero polynomial has no order")
        return min(sum(e) for e in self._terms)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    def homogeneous_part(self, k: int) -> "Polynomial":
        return Polynomial(self._variables, {e: c for e, c in self._terms.items() if sum(e) == k})

    def occurring_variables(self) -> list[str]:
        return [v for i, v in enumerate(self._variables) if any(e[i] for e in self._terms)]

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other._variables != self._variables:
                raise ValueError("polynomials over different variable lists")
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self._variables, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        _add_into(acc, other._terms)
        return Polynomial(self._variables, acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self._variables, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(self._variables, _mul_terms(self._terms, other._terms))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(self._variables, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self._variables, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._variables == other._variables and self._terms == other._terms

    def __hash__(self):
        return hash((self._variables, frozenset(self._terms.items())))

    def derivative(self, var: str | int) -> "Polynomial":
        i = self._variables.index(var) if isinstance(var, str) else int(var)
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                out[ne] = c * e[i]
        return Polynomial(self._variables, out)

    def substitute_linear(self, shift: Sequence) -> "Polynomial":
        """Return ``p(x + shift)`` (exact)."""
        shift = [Fraction(s) for s in shift]
        if not any(shift):
            return self
        acc: dict = {}
        binoms = []
        for i, s in enumerate(shift):
            xi = Polynomial.variable(self._variables, self._variables[i]) + s
            binoms.append(xi)
        cache: dict = {}
        for e, c in self._terms.items():
            term = {(0,) * self.nvars: c}
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in cache:
                        cache[key] = (binoms[i] ** k)._terms
                    term = _mul_terms(term, cache[key])
            _add_into(acc, term)
        return Polynomial(self._variables, acc)

    # printing -------------------------------------------------------------

    def _format_terms(self, terms) -> str:
        if not terms:
            return "0"
        parts = []
        for e, c in terms:
            mono = "*".join(
                v if k == 1 else f"{v}^{k}" for v, k in zip(self._variables, e) if k
            )
            mag = abs(c)
            if mono:
                body = mono if mag == 1 else f"{_fmt_rational(mag)}*{mono}"
            else:
                body = _fmt_rational(mag)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += sign + body
        return out

    def __str__(self) -> str:
        return self._format_terms(list(self._terms.items()))

    def __repr__(self) -> str:
        return f"Polynomial({str(self)!r}, {list(self._variables)!r})"

    def factored_str(self) -> str:
        """Print with the monomial content pulled out, e.g. ``y*(x^2+y^2)``."""
        if len(self._terms) <= 1:
            return str(self)
        content = tuple(min(e[i] for e in self._terms) for i in range(self.nvars))
        if not any(content):
            return str(self)
        mono = "*".join(
            v if k == 1 else f"{v}^{k}" for v, k in zip(self._variables, content) if k
        )
        rest = [(tuple(a - b for a, b in zip(e, content)), c) for e, c in self._terms.items()]
        return f"{mono}*({self._format_terms(rest)})"

    # numerics -------------------------------------------------------------

    @cached_property
    def _compiled(self):
        exps = np.array(list(self._terms.keys()), dtype=np.int64).reshape(-1, self.nvars)
        coeffs = np.array([float(c) for c in self._terms.values()], dtype=float)
        return exps, coeffs

    @cached_property
    def _gradient_polys(self):
        return [self.derivative(i) for i in range(self.nvars)]

    def eval_many(self, points) -> np.ndarray:
        """Evaluate at each row of ``points`` (shape ``(N, nvars)``); complex input allowed."""
        pts = np.asarray(points)
        if pts.ndim != 2 or pts.shape[1] != self.nvars:
            raise ValueError(f"expected points of shape (N, {self.nvars}), got {pts.shape}")
        exps, coeffs = self._compiled
        if len(coeffs) == 0:
            return np.zeros(pts.shape[0], dtype=np.result_type(pts.dtype, float))
        maxdeg = int(exps.max()) if exps.size else 0
        vals = np.ones((pts.shape[0], len(coeffs)), dtype=np.result_type(pts.dtype, float))
        for i in range(self.nvars):
            col = exps[:, i]
            if not col.any():
                continue
            powers = pts[:, i : i + 1] ** np.arange(maxdeg + 1)
            vals *= powers[:, col]
        return vals @ coeffs

    def __call__(self, point) -> float:
        pt = np.asarray(point, dtype=float)
        if pt.shape != (self.nvars,):
            raise ValueError(f"expected a point with {self.nvars} coordinates, got shape {pt.shape}")
        return float(self.eval_many(pt[None, :])[0])

    def grad_many(self, points) -> np.ndarray:
        pts = np.asarray(points)
        return np.stack([g.eval_many(pts) for g in self._gradient_polys], axis=-1)

    def grad(self, point) -> np.ndarray:
        pt = np.asarray(point, dtype=float)
        if pt.shape != (self.nvars,):
            raise ValueError(f"expected a point with {self.nvars} coordinates, got shape {pt.shape}")
        return self.grad_many(pt[None, :])[0]


def _fmt_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def initial_form(p: Polynomial) -> Polynomial:
    """Sum of the terms of lowest total degree."""
    if p.is_zero():
        raise ValueError("the zero polynomial has no initial form")
    return p.homogeneous_part(p.order())


# ---------------------------------------------------------------------------
# squarefree test


def _upoly_trim(a: list) -> list:
    while a and a[-1] == 0:
        a.pop()
    return a


def _upoly_mul(a: list, b: list) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _upoly_rem(a: list, b: list) -> list:
    a = [Fraction(x) for x in a]
    lead = Fraction(b[-1])
    while len(a) >= len(b) and a:
        q = a[-1] / lead
        shift = len(a) - len(b)
        for i, y in enumerate(b):
            a[shift + i] -= q * y
        _upoly_trim(a)
    return a


def _upoly_gcd_degree(a: list, b: list) -> int:
    a, b = _upoly_trim(list(a)), _upoly_trim(list(b))
    while b:
        a, b = b, _upoly_rem(a, b)
    return len(a) - 1


def _restrict_to_line(p: Polynomial, base: Sequence[int], direction: Sequence[int]) -> list:
    """Coefficients (low to high) of ``T -> p(base + T*direction)``."""
    lines = [[b, d] for b, d in zip(base, direction)]
    cache: dict = {}
    out: list = []
    for e, c in p.terms.items():
        poly = [c]
        for i, k in enumerate(e):
            if k:
                if (i, k) not in cache:
                    acc = [1]
                    for _ in range(k):
                        acc = _upoly_mul(acc, lines[i])
                    cache[(i, k)] = acc
                poly = _upoly_mul(poly, cache[(i, k)])
        if len(poly) > len(out):
            out.extend([0] * (len(poly) - len(out)))
        for i, x in enumerate(poly):
            out[i] += x
    return _upoly_trim(out)


def is_squarefree(p: Polynomial, *, seed: int = 0, trials: int = 2) -> bool | None:
    """Decide whether ``p`` has no repeated factor (over the complex numbers).

    ``p`` is restricted to random affine lines with integer data; on a generic
    line a polynomial is squarefree iff its restriction has only simple roots,
    which is checked with an exact univariate gcd against the derivative.
    Returns ``None`` when independent lines disagree.
    """
    if p.is_zero():
        raise ValueError("squarefree test of the zero polynomial")
    deg = p.degree()
    if deg <= 1:
        return True
    rng = random.Random(seed)
    verdicts = []
    attempts = 0
    while len(verdicts) < trials and attempts < 20 * trials:
        attempts += 1
        base = [rng.randint(-97, 97) for _ in range(p.nvars)]
        direction = [rng.randint(-97, 97) for _ in range(p.nvars)]
        coeffs = _restrict_to_line(p, base, direction)
        if len(coeffs) - 1 != deg:
            continue  # line direction hits the leading form; degree dropped
        deriv = [i * c for i, c in enumerate(coeffs)][1:]
        verdicts.append(_upoly_gcd_degree(coeffs, deriv) == 0)
    if len(verdicts) < trials or len(set(verdicts)) != 1:
        return None
    return verdicts[0]


# ---------------------------------------------------------------------------
# realification


def realify(system: Iterable[Polynomial]) -> list[Polynomial]:
    """Split complex equations into real and imaginary parts.

    A polynomial in complex variables ``z_k = a_k + i b_k`` with real rational
    coefficients becomes the pair ``(u, v)`` with ``f(a + ib) = u + i v``.
    Real variables are ordered ``(z1_re, z1_im, z2_re, ...)``.
    """
    system = list(system)
    if not system:
        return []
    cvars = system[0].variables
    rvars = tuple(f"{v}{suffix}" for v in cvars for suffix in ("_re", "_im"))
    m = len(cvars)
    zero = (0,) * (2 * m)
    power_cache: dict = {}

    def zpow(k: int, e: int):
        # (a_k + i b_k)^e as a pair of term dicts
        key = (k, e)
        if key not in power_cache:
            re: dict = {}
            im: dict = {}
            # binomial expansion: sum C(e,j) a^(e-j) (i b)^j
            binom = 1
            for j in range(e + 1):
                exps = [0] * (2 * m)
                exps[2 * k] = e - j
                exps[2 * k + 1] = j
                sign = (1, 1, -1, -1)[j % 4]
                (re if j % 2 == 0 else im)[tuple(exps)] = sign * binom
                binom = binom * (e - j) // (j + 1)
            power_cache[key] = (re, im)
        return power_cache[key]

    out = []
    for f in system:
        if f.variables != cvars:
            raise ValueError("all equations must share the same variables")
        for c in f.terms.values():
            if not isinstance(c, Fraction):
                raise ValueError("realify requires real rational coefficients")
        u: dict = {}
        v: dict = {}
        for e, c in f.terms.items():
            re, im = {zero: Fraction(1)}, {}
            for k, ek in enumerate(e):
                if ek:
                    pr, pi = zpow(k, ek)
                    nre = _mul_terms(re, pr)
                    _add_into(nre, _mul_terms(im, pi), -1)
                    nim = _mul_terms(re, pi)
                    _add_into(nim, _mul_terms(im, pr))
                    re, im = nre, nim
            _add_into(u, re, c)
            _add_into(v, im, c)
        out.append(Polynomial(rvars, u))
        out.append(Polynomial(rvars, v))
    return out
