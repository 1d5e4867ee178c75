"""Truncated multivariate Taylor arithmetic.

A jet of order ``r`` at a point stores the Taylor coefficients of a scalar
function for every multi-index of total degree ``<= r``.  Coefficients are
laid out densely, graded by degree (degree 0 first, then degree 1, ...), so
the jet of order ``r - 1`` is a prefix of the jet of order ``r``.  That makes
truncation a slice and lets tensor fields be plain numpy arrays whose last
axis is the coefficient axis.

Two layers live here:

* :class:`JetSpace` -- vectorised kernels on coefficient arrays of shape
  ``(..., ncoef)`` (product, contraction, partial derivative, matrix inverse,
  composition).  The geometry engine uses this layer directly.
* :class:`Jet` -- an immutable scalar value with operator overloading, used by
  the expression evaluator and the public ``lift_variable`` / ``jet_apply``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

MACHINE_ZERO = 1e-300


class JetError(ArithmeticError):
    pass


class DivisionByZeroJet(JetError, ZeroDivisionError):
    pass


class DomainError(JetError, ValueError):
    pass


class MixedBasePoint(JetError, ValueError):
    pass


class InsufficientJetOrder(JetError):
    pass


@dataclass(frozen=True)
class JetConfig:
    dimension: int
    order: int = 4

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"jet dimension must be >= 1, got {self.dimension}")
        if self.order < 0:
            raise ValueError(f"jet order must be >= 0, got {self.order}")


class JetSpace:
    """Index tables for jets in ``dimension`` variables up to ``order``."""

    def __init__(self, dimension: int, order: int):
        self.dimension = dimension
        self.order = order
        multis = []
        self.size_at = []
        for degree in range(order + 1):
            for combo in combinations_with_replacement(range(dimension), degree):
                mi = [0] * dimension
                for c in combo:
                    mi[c] += 1
                multis.append(tuple(mi))
            self.size_at.append(len(multis))
        self.multis = multis
        self.multi = np.array(multis, dtype=np.int64).reshape(len(multis), dimension)
        self.index = {mi: i for i, mi in enumerate(multis)}
        self.degree = self.multi.sum(axis=1)
        self.factorial = np.array(
            [math.prod(math.factorial(a) for a in mi) for mi in multis], dtype=float
        )
        self._order_by_size = {n: r for r, n in enumerate(self.size_at)}

    @property
    def size(self) -> int:
        return self.size_at[-1]

    def order_of(self, a: np.ndarray) -> int:
        try:
            return self._order_by_size[a.shape[-1]]
        except KeyError:
            raise ValueError(f"array with {a.shape[-1]} coefficients is not a jet") from None

    def truncate(self, a: np.ndarray, order: int) -> np.ndarray:
        if order < 0:
            raise InsufficientJetOrder("requested a jet of negative order")
        if order > self.order_of(a):
            raise InsufficientJetOrder(
                f"jet has order {self.order_of(a)}, {order} requested"
            )
        return a[..., : self.size_at[order]]

    def constant(self, value, order: int | None = None) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        n = self.size_at[self.order if order is None else order]
        out = np.zeros(value.shape + (n,))
        out[..., 0] = value
        return out

    def variable(self, k: int, value: float, order: int | None = None) -> np.ndarray:
        out = self.constant(value, order)
        if out.shape[-1] > 1:
            out[..., 1 + k] = 1.0
        return out

    # -- products -----------------------------------------------------------

    @lru_cache(maxsize=None)
    def _product_table(self, order: int):
        n = self.size_at[order]
        rows, cols, outs = [], [], []
        for i in range(n):
            di = self.degree[i]
            for j in range(n):
                if di + self.degree[j] > order:
                    continue
                key = tuple(int(x) for x in self.multi[i] + self.multi[j])
                rows.append(i)
                cols.append(j)
                outs.append(self.index[key])
        scatter = np.zeros((len(rows), n))
        scatter[np.arange(len(rows)), outs] = 1.0
        return np.array(rows), np.array(cols), scatter

    def _common(self, *arrays):
        n = min(a.shape[-1] for a in arrays)
        return [a[..., :n] for a in arrays], self._order_by_size[n]

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        (a, b), order = self._common(a, b)
        rows, cols, scatter = self._product_table(order)
        return (a[..., rows] * b[..., cols]) @ scatter

    def einsum(self, subscripts: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Two-operand ``np.einsum`` over component axes with jet products.

        The letter ``z`` is reserved for the coefficient axis.
        """
        lhs, out = subscripts.replace(" ", "").split("->")
        sa, sb = lhs.split(",")
        (a, b), order = self._common(a, b)
        rows, cols, scatter = self._product_table(order)
        paired = np.einsum(f"{sa}z,{sb}z->{out}z", a[..., rows], b[..., cols])
        return paired @ scatter

    def add(self, *terms: np.ndarray) -> np.ndarray:
        terms, _ = self._common(*terms)
        out = terms[0].copy()
        for t in terms[1:]:
            out = out + t
        return out

    # -- calculus -----------------------------------------------------------

    @lru_cache(maxsize=None)
    def _deriv_table(self, k: int, order: int):
        n = self.size_at[order - 1]
        src = np.empty(n, dtype=np.int64)
        fac = np.empty(n)
        for i in range(n):
            mi = list(self.multis[i])
            fac[i] = mi[k] + 1
            mi[k] += 1
            src[i] = self.index[tuple(mi)]
        return src, fac

    def deriv(self, a: np.ndarray, k: int) -> np.ndarray:
        """Jet of the partial derivative along variable ``k`` (order drops by one)."""
        order = self.order_of(a)
        if order == 0:
            raise InsufficientJetOrder("cannot differentiate an order-0 jet")
        src, fac = self._deriv_table(k, order)
        return a[..., src] * fac

    def gradient(self, a: np.ndarray, directions: int) -> np.ndarray:
        """Stack of partial derivatives along the first ``directions`` variables,
        appended as a new last component axis."""
        return np.stack([self.deriv(a, k) for k in range(directions)], axis=-2)

    def derivative_value(self, a: np.ndarray, multi: Sequence[int]) -> np.ndarray:
        i = self.index[tuple(multi)]
        if i >= a.shape[-1]:
            raise InsufficientJetOrder(f"multi-index {tuple(multi)} beyond jet order")
        return a[..., i] * self.factorial[i]

    def compose_series(self, a: np.ndarray, series: Sequence[float]) -> np.ndarray:
        """Jet of ``F(a)`` given the Taylor coefficients of ``F`` at ``a``'s value."""
        order = self.order_of(a)
        shifted = a.copy()
        shifted[..., 0] = 0.0
        out = self.constant(np.full(a.shape[:-1], series[order]), order)
        for n in range(order - 1, -1, -1):
            out = self.mul(out, shifted)
            out[..., 0] += series[n]
        return out

    def inv_matrix(self, g: np.ndarray) -> np.ndarray:
        """Jet of the inverse of a matrix-valued jet of shape ``(m, m, ncoef)``."""
        order = self.order_of(g)
        g0 = g[..., 0]
        inv0 = np.linalg.inv(g0)
        nil = g.copy()
        nil[..., 0] = 0.0
        step = -np.einsum("ij,jkz->ikz", inv0, nil)
        inv0_jet = self.constant(inv0, order)
        out = inv0_jet
        for _ in range(order):
            out = inv0_jet + self.einsum("ij,jk->ik", step, out)
        return out

    def compose(self, outer: np.ndarray, outer_space: "JetSpace", inner: np.ndarray) -> np.ndarray:
        """Jet of ``F(u(x))`` where ``outer`` is the jet of ``F`` (in
        ``outer_space`` variables) taken at ``u(x0)`` and ``inner`` stacks the
        jets of the ``outer_space.dimension`` functions ``u``."""
        order = min(self.order_of(inner), outer_space.order_of(outer))
        inner = self.truncate(inner, order)
        shifted = inner.copy()
        shifted[..., 0] = 0.0
        count = outer_space.size_at[order]
        monos = [self.constant(1.0, order)]
        for beta in outer_space.multis[1:count]:
            b = next(i for i, e in enumerate(beta) if e > 0)
            prev = list(beta)
            prev[b] -= 1
            monos.append(self.mul(monos[outer_space.index[tuple(prev)]], shifted[b]))
        return np.einsum("...k,kz->...z", outer[..., :count], np.stack(monos))


@lru_cache(maxsize=None)
def jet_space(dimension: int, order: int) -> JetSpace:
    return JetSpace(dimension, order)


# -- univariate Taylor coefficients of the elementary functions -------------


def _series_exp(u0, n):
    e = math.exp(u0)
    return [e / math.factorial(k) for k in range(n + 1)]


def _series_sin(u0, n):
    s, c = math.sin(u0), math.cos(u0)
    cycle = (s, c, -s, -c)
    return [cycle[k % 4] / math.factorial(k) for k in range(n + 1)]


def _series_cos(u0, n):
    s, c = math.sin(u0), math.cos(u0)
    cycle = (c, -s, -c, s)
    return [cycle[k % 4] / math.factorial(k) for k in range(n + 1)]


def _series_log(u0, n):
    if not u0 > 0.0:
        raise DomainError(f"log of non-positive value {float(u0)!r}")
    return [math.log(u0)] + [(-1) ** (k + 1) / (k * u0**k) for k in range(1, n + 1)]


def _series_pow(u0, p, n):
    out = [u0**p]
    coef = 1.0
    for k in range(1, n + 1):
        coef *= (p - k + 1) / k
        out.append(coef * u0 ** (p - k))
    return out


def _series_sqrt(u0, n):
    if not u0 > 0.0:
        raise DomainError(f"sqrt of non-positive value {float(u0)!r}")
    return _series_pow(u0, 0.5, n)


def _series_recip(u0, n):
    if abs(u0) < MACHINE_ZERO:
        raise DivisionByZeroJet(f"denominator constant term {float(u0)!r} is zero")
    out = [1.0 / u0]
    for _ in range(n):
        out.append(-out[-1] / u0)
    if not all(math.isfinite(c) for c in out):
        raise DivisionByZeroJet(f"reciprocal of {float(u0)!r} overflows at jet order {n}")
    return out


def _series_atan(u0, n):
    # atan' = 1/q with q(t) = (1 + u0^2) + 2 u0 t + t^2; invert q then integrate
    q0, q1 = 1.0 + u0 * u0, 2.0 * u0
    r = []
    for k in range(n):
        v = 1.0 if k == 0 else 0.0
        if k >= 1:
            v -= q1 * r[k - 1]
        if k >= 2:
            v -= r[k - 2]
        r.append(v / q0)
    return [math.atan(u0)] + [r[k - 1] / k for k in range(1, n + 1)]


_UNARY_SERIES = {
    "exp": _series_exp,
    "sin": _series_sin,
    "cos": _series_cos,
    "log": _series_log,
    "sqrt": _series_sqrt,
    "atan": _series_atan,
}

UNARY_FUNCTIONS = frozenset(_UNARY_SERIES)


@dataclass(frozen=True, eq=False)
class Jet:
    """Truncated Taylor expansion of a scalar at ``base_point``."""

    base_point: tuple
    order: int
    coeffs: np.ndarray

    @cached_property
    def space(self) -> JetSpace:
        return jet_space(len(self.base_point), self.order)

    @property
    def dimension(self) -> int:
        return len(self.base_point)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coefficient(self, multi: Sequence[int]) -> float:
        return float(self.coeffs[self.space.index[tuple(multi)]])

    def derivative(self, multi: Sequence[int]) -> float:
        """Partial derivative (not the Taylor coefficient) for ``multi``."""
        return float(self.space.derivative_value(self.coeffs, multi))

    def as_dict(self) -> dict:
        return {mi: float(c) for mi, c in zip(self.space.multis, self.coeffs)}

    def is_constant(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs[1:]) <= tol))

    def _wrap(self, coeffs) -> "Jet":
        return Jet(self.base_point, self.order, coeffs)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            _check_compatible(self, other)
            return other
        return self._wrap(self.space.constant(float(other)))

    def __add__(self, other):
        return self._wrap(self.coeffs + self._coerce(other).coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.coeffs - self._coerce(other).coeffs)

    def __rsub__(self, other):
        return self._wrap(self._coerce(other).coeffs - self.coeffs)

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self._wrap(self.coeffs * float(other))
        return self._wrap(self.space.mul(self.coeffs, self._coerce(other).coeffs))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        return self._wrap(self.space.compose_series(self.coeffs, _series_recip(self.value, self.order)))

    def __truediv__(self, other):
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            if not exponent.is_constant():
                return (exponent * self.apply("log")).apply("exp")
            exponent = exponent.value
        p = float(exponent)
        if p.is_integer() and abs(p) <= 64:
            return self._int_pow(int(p))
        if not self.value > 0.0:
            raise DomainError(f"non-integer power {p!r} of non-positive base {self.value!r}")
        return self._wrap(self.space.compose_series(self.coeffs, _series_pow(self.value, p, self.order)))

    def _int_pow(self, p: int) -> "Jet":
        if p < 0:
            return self._int_pow(-p).reciprocal()
        result = self._wrap(self.space.constant(1.0))
        base = self
        while p:
            if p & 1:
                result = result * base
            p >>= 1
            if p:
                base = base * base
        return result

    def apply(self, name: str) -> "Jet":
        series = _UNARY_SERIES[name](self.value, self.order)
        return self._wrap(self.space.compose_series(self.coeffs, series))


def _check_compatible(a: Jet, b: Jet):
    if a.order != b.order or a.dimension != b.dimension:
        raise MixedBasePoint(
            f"jets of order/dimension {a.order}/{a.dimension} and {b.order}/{b.dimension}"
        )
    if a.base_point != b.base_point:
        raise MixedBasePoint(f"base points {a.base_point} and {b.base_point} differ")


def lift_variable(index: int, point: Sequence[float], cfg: JetConfig) -> Jet:
    """Jet of the coordinate function ``x_index`` at ``point``."""
    if len(point) != cfg.dimension:
        raise ValueError(f"point has {len(point)} coordinates, config expects {cfg.dimension}")
    if not 0 <= index < cfg.dimension:
        raise IndexError(f"coordinate index {index} out of range for dimension {cfg.dimension}")
    space = jet_space(cfg.dimension, cfg.order)
    point = tuple(float(x) for x in point)
    return Jet(point, cfg.order, space.variable(index, point[index]))


def constant_jet(value: float, point: Sequence[float], cfg: JetConfig) -> Jet:
    space = jet_space(cfg.dimension, cfg.order)
    return Jet(tuple(float(x) for x in point), cfg.order, space.constant(float(value)))


_BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "pow": lambda a, b: a**b,
}


def jet_apply(op: str, *args: Jet) -> Jet:
    """Apply a named elementary operation to jets sharing base point and order."""
    if not args or not all(isinstance(a, Jet) for a in args):
        raise TypeError("jet_apply expects Jet arguments")
    for other in args[1:]:
        _check_compatible(args[0], other)
    if op in _BINARY:
        if len(args) != 2:
            raise TypeError(f"{op} takes 2 arguments, got {len(args)}")
        return _BINARY[op](*args)
    if op in _UNARY_SERIES:
        if len(args) != 1:
            raise TypeError(f"{op} takes 1 argument, got {len(args)}")
        return args[0].apply(op)
    raise ValueError(f"unknown jet operation {op!r}")
