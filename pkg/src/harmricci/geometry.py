"""Levi-Civita geometry of a coordinate chart, evaluated pointwise through jets.

Conventions (all tensors are stored with every base-manifold slot covariant):

* ``christoffel[k, i, j]`` is Γ^k_ij, so ∇_{∂i}∂j = Γ^k_ij ∂k.
* ``riemann[i, j, k, l]`` is g(R(∂k, ∂l)∂j, ∂i) with
  R(X, Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y].  The unit sphere has
  R_ijkl = g_ik g_jl − g_il g_jk.
* ``ricci[i, j]`` = g^{kl} R_kilj, ``scalar`` = g^{ij} R_ij.
* A covariant derivative appends its new slot last, so ``cov(T)[..., l]`` is
  T_{...,l}.
* A tensor may carry one leading pullback slot ``a`` (a section of φ*TN);
  its covariant derivative uses the target connection pulled back by φ.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .expr import FieldEnv, Node, eval_array, parse
from .jet import JetSpace, jet_space

_LETTERS = "abcdefghijklmnopqrstuvwxy"  # 'z' is the coefficient axis


class GeometryError(ValueError):
    pass


class MetricNotPositiveDefinite(GeometryError):
    pass


class MetricNotSymmetric(GeometryError):
    pass


@dataclass(frozen=True)
class GeometryData:
    dimension: int
    metric: tuple[tuple[Node, ...], ...]
    env: FieldEnv
    tag: str | None = None

    @classmethod
    def from_strings(cls, rows: Sequence[Sequence[str]], env: FieldEnv | None = None,
                     tag: str | None = None) -> "GeometryData":
        m = len(rows)
        env = env or FieldEnv(m)
        metric = tuple(tuple(parse(str(e), env) for e in row) for row in rows)
        return cls(m, metric, env, tag)

    @property
    def parameter_count(self) -> int:
        return len(self.env.parameters)


@dataclass(frozen=True)
class PotentialData:
    f: Node | None = None
    vector_field: tuple[Node, ...] | None = None


@dataclass
class TensorValue:
    """Components of a tensor at a point.

    ``signature`` lists slot kinds in axis order: ``"co"``/``"contra"`` for the
    base manifold and ``"pull"`` for a pullback-bundle index.
    """

    signature: tuple[str, ...]
    components: np.ndarray
    point: tuple[float, ...] = ()

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)

    @property
    def shape(self):
        return self.components.shape


def _check_metric(g0: np.ndarray, point) -> None:
    if not np.all(np.isfinite(g0)):
        raise MetricNotPositiveDefinite(f"metric is not finite at {tuple(point)}")
    if np.max(np.abs(g0 - g0.T), initial=0.0) > 1e-14 * (1.0 + np.max(np.abs(g0))):
        raise MetricNotSymmetric(f"metric components not symmetric at {tuple(point)}")
    try:
        np.linalg.cholesky(g0)
    except np.linalg.LinAlgError:
        raise MetricNotPositiveDefinite(
            f"metric not positive definite at {tuple(float(x) for x in point)}"
        ) from None


def metric_jets(metric: Sequence[Sequence[Node]], space: JetSpace, point: np.ndarray,
                order: int) -> np.ndarray:
    m = len(metric)
    g = np.empty((m, m, space.size_at[order]))
    for i in range(m):
        for j in range(m):
            g[i, j] = eval_array(metric[i][j], space, point, order)
    return g


def christoffel_from_metric(space: JetSpace, g: np.ndarray, ginv: np.ndarray, m: int) -> np.ndarray:
    dg = space.gradient(g, m)  # dg[i, j, k] = ∂_k g_ij
    # Γ_lij (first kind) = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    first = 0.5 * (
        np.einsum("jliz->lijz", dg) + np.einsum("iljz->lijz", dg) - np.einsum("ijlz->lijz", dg)
    )
    return space.einsum("kl,lij->kij", ginv, first)


def riemann_up_from_christoffel(space: JetSpace, gam: np.ndarray, m: int) -> np.ndarray:
    """R^p_jkl = ∂_kΓ^p_lj − ∂_lΓ^p_kj + Γ^p_kqΓ^q_lj − Γ^p_lqΓ^q_kj."""
    dgam = space.gradient(gam, m)  # dgam[p, l, j, k] = ∂_k Γ^p_lj
    lin = np.einsum("pljkz->pjklz", dgam)
    lin = lin - lin.swapaxes(2, 3)
    quad = space.einsum("pkq,qlj->pjkl", gam, gam)
    quad = quad - quad.swapaxes(2, 3)
    return space.add(lin, quad)


class ChartJets:
    """All metric-derived jets at one point.

    ``point`` lists the chart coordinates followed by any free-parameter
    values; covariant derivatives run over the first ``dimension`` variables
    only.
    """

    def __init__(self, geo: GeometryData, point: Sequence[float], order: int = 4):
        self.geo = geo
        self.m = geo.dimension
        self.point = np.asarray(point, dtype=float)
        expected = self.m + geo.parameter_count
        if self.point.shape != (expected,):
            raise ValueError(f"point needs {expected} entries, got {self.point.shape}")
        self.order = order
        self.space = jet_space(expected, order)
        self.g = metric_jets(geo.metric, self.space, self.point, order)
        _check_metric(self.g[..., 0], self.point[: self.m])

    # -- basic geometry -----------------------------------------------------

    @cached_property
    def ginv(self) -> np.ndarray:
        return self.space.inv_matrix(self.g)

    @cached_property
    def christoffel(self) -> np.ndarray:
        return christoffel_from_metric(self.space, self.g, self.ginv, self.m)

    @cached_property
    def riemann_up(self) -> np.ndarray:
        return riemann_up_from_christoffel(self.space, self.christoffel, self.m)

    @cached_property
    def riemann(self) -> np.ndarray:
        return self.space.einsum("ip,pjkl->ijkl", self.g, self.riemann_up)

    @cached_property
    def ricci(self) -> np.ndarray:
        return self.space.einsum("kl,kilj->ij", self.ginv, self.riemann)

    @cached_property
    def scalar(self) -> np.ndarray:
        return self.trace(self.ricci)

    # -- helpers ------------------------------------------------------------

    def trace(self, t: np.ndarray, slots: tuple[int, int] = (-2, -1)) -> np.ndarray:
        """Metric trace of two base slots (axes exclude the coefficient axis)."""
        nd = t.ndim - 1
        i, j = (s % nd for s in slots)
        src = list(_LETTERS[:nd])
        out = "".join(c for k, c in enumerate(src) if k not in (i, j))
        return self.space.einsum(f"{src[i]}{src[j]},{''.join(src)}->{out}", self.ginv, t)

    def raise_slot(self, t: np.ndarray, slot: int) -> np.ndarray:
        nd = t.ndim - 1
        s = slot % nd
        src = _LETTERS[:nd]
        dst = src[:s] + "Y" + src[s + 1:]
        return self.space.einsum(f"Y{src[s]},{src}->{dst}", self.ginv, t)

    def inner(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Full metric contraction of two equally shaped covariant tensors."""
        nd = a.ndim - 1
        if nd == 0:
            return self.space.mul(a, b)
        for s in range(nd):
            a = self.raise_slot(a, s)
        src = _LETTERS[:nd]
        return self.space.einsum(f"{src},{src}->", a, b)

    def cov(self, t: np.ndarray, pull_connection: np.ndarray | None = None) -> np.ndarray:
        """Covariant derivative with the new slot appended last.

        Every axis except the coefficient axis is a covariant base slot,
        unless ``pull_connection`` is given: then axis 0 is a pullback index
        and ``pull_connection[a, b, l]`` = ᴺΓ^a_bc(φ) φ^c_l.
        """
        space, m = self.space, self.m
        out = space.gradient(t, m)
        nd = t.ndim - 1
        first = 1 if pull_connection is not None else 0
        src = _LETTERS[:nd]
        for s in range(first, nd):
            # −Γ^q_{l i_s} T_{.. q ..}
            t_sub = src[:s] + "Q" + src[s + 1:]
            term = space.einsum(f"QL{src[s]},{t_sub}->{src}L", self.christoffel, t)
            out = space.add(out, -term)
        if pull_connection is not None:
            t_sub = "Q" + src[1:]
            term = space.einsum(f"{src[0]}QL,{t_sub}->{src}L", pull_connection, t)
            out = space.add(out, term)
        return out

    def cov_times(self, t: np.ndarray, depth: int, pull_connection=None) -> np.ndarray:
        for _ in range(depth):
            t = self.cov(t, pull_connection)
        return t

    def gradient(self, f: np.ndarray) -> np.ndarray:
        return self.space.gradient(f, self.m)

    def hessian(self, f: np.ndarray) -> np.ndarray:
        return self.cov(self.gradient(f))

    def eval_scalar(self, node: Node) -> np.ndarray:
        return eval_array(node, self.space, self.point, self.order)

    def eval_many(self, nodes: Sequence[Node]) -> np.ndarray:
        return np.stack([self.eval_scalar(n) for n in nodes])


def value(a: np.ndarray) -> np.ndarray:
    """Point values of a jet array."""
    return np.asarray(a)[..., 0]


# -- public operations --------------------------------------------------------


def _chart(geo: GeometryData, p, order: int) -> ChartJets:
    return ChartJets(geo, p, order)


def christoffel(geo: GeometryData, p: Sequence[float], order: int = 2) -> TensorValue:
    cj = _chart(geo, p, max(order, 1))
    return TensorValue(("contra", "co", "co"), value(cj.christoffel), tuple(p))


def curvature(geo: GeometryData, p: Sequence[float], order: int = 2) -> dict:
    cj = _chart(geo, p, max(order, 2))
    return {
        "riemann": TensorValue(("co",) * 4, value(cj.riemann), tuple(p)),
        "ricci": TensorValue(("co", "co"), value(cj.ricci), tuple(p)),
        "scalar": float(value(cj.scalar)),
    }


def covariant_derivative(geo: GeometryData, field_name: str | Sequence[Node], p: Sequence[float],
                         depth: int = 1, order: int = 4) -> TensorValue:
    """Iterated covariant derivative of a named metric tensor or of a
    covariant tensor whose components are given as expressions.

    Named fields: ``metric``, ``riemann``, ``ricci``, ``scalar``.  An
    expression field is an array-like of expression nodes of any rank.
    """
    if not 1 <= depth <= 3:
        raise ValueError("depth must be 1, 2 or 3")
    cj = _chart(geo, p, order)
    if isinstance(field_name, str):
        named = {
            "metric": lambda: cj.g,
            "riemann": lambda: cj.riemann,
            "ricci": lambda: cj.ricci,
            "scalar": lambda: cj.scalar,
        }
        if field_name not in named:
            raise KeyError(f"unknown tensor field {field_name!r}")
        t = named[field_name]()
    else:
        nodes = np.asarray(field_name, dtype=object)
        t = np.stack([cj.eval_scalar(n) for n in nodes.ravel()]).reshape(
            nodes.shape + (cj.space.size_at[order],))
    base = t.ndim - 1
    t = cj.cov_times(t, depth)
    return TensorValue(("co",) * (base + depth), value(t), tuple(p))


def hessian_and_laplacians(geo: GeometryData, f: Node, p: Sequence[float], u: Node | None = None,
                           vector_field: Sequence[Node] | None = None, order: int = 2) -> dict:
    cj = _chart(geo, p, max(order, 2))
    fj = cj.eval_scalar(f)
    df = cj.gradient(fj)
    hess = cj.hessian(fj)
    out = {
        "hessian": TensorValue(("co", "co"), value(hess), tuple(p)),
        "laplacian": float(value(cj.trace(hess))),
    }
    uj = fj if u is None else cj.eval_scalar(u)
    du = cj.gradient(uj)
    lap_u = value(cj.trace(cj.hessian(uj)))
    grad_dot = value(cj.trace(cj.space.einsum("i,j->ij", df, du)))
    out["f_laplacian"] = float(lap_u - grad_dot)
    if vector_field is not None:
        x = cj.eval_many(vector_field)
        x_du = np.einsum("i,i->", value(x), value(du))
        out["x_laplacian"] = float(lap_u - x_du)
    return out


def lie_derivative_metric(geo: GeometryData, vector_field: Sequence[Node], p: Sequence[float],
                          order: int = 2) -> dict:
    cj = _chart(geo, p, max(order, 1))
    x_up = cj.eval_many(vector_field)
    x_low = cj.space.einsum("ij,j->i", cj.g, x_up)
    nabla = cj.cov(x_low)  # nabla[j, i] = X_{j,i}
    lie = nabla + nabla.swapaxes(0, 1)
    return {
        "lie": TensorValue(("co", "co"), value(lie), tuple(p)),
        "half_lie": TensorValue(("co", "co"), 0.5 * value(lie), tuple(p)),
    }


def kulkarni_nomizu(a, b) -> np.ndarray:
    """(A∧B)_ijkl = A_ik B_jl − A_il B_jk + A_jl B_ik − A_jk B_il (works on
    component arrays or on jet arrays with a trailing coefficient axis when
    given a JetSpace via :func:`kulkarni_nomizu_jets`)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"need two square matrices of equal shape, got {a.shape} and {b.shape}")
    ab = np.einsum("ik,jl->ijkl", a, b)
    return ab - ab.transpose(0, 1, 3, 2) + ab.transpose(1, 0, 3, 2) - ab.transpose(1, 0, 2, 3)


def kulkarni_nomizu_jets(space: JetSpace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = space.einsum("ik,jl->ijkl", a, b)
    return ab - ab.transpose(0, 1, 3, 2, 4) + ab.transpose(1, 0, 3, 2, 4) - ab.transpose(1, 0, 2, 3, 4)


def traceless_part(a, g) -> np.ndarray:
    """Å = A − (tr_g A / m) g for component arrays."""
    a = np.asarray(a, dtype=float)
    g = np.asarray(g, dtype=float)
    ginv = np.linalg.inv(g)
    return a - np.einsum("ij,ij->", ginv, a) / g.shape[0] * g
