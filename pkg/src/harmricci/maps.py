"""Differential of a map φ: M → N and its pullback-bundle derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .expr import Node, free_slots
from .geometry import (
    _LETTERS,
    ChartJets,
    GeometryData,
    GeometryError,
    TensorValue,
    _check_metric,
    christoffel_from_metric,
    metric_jets,
    riemann_up_from_christoffel,
    value,
)
from .jet import jet_space


class TargetChartExit(GeometryError):
    pass


@dataclass(frozen=True)
class MapData:
    """φ^a as expressions in the source coordinates, plus the target chart.

    ``flat`` declares the target metric constant, which skips the target
    connection entirely.  ``box`` bounds the target chart, one (lo, hi) pair
    per coordinate.
    """

    target: GeometryData
    components: tuple[Node, ...]
    flat: bool = False
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if len(self.components) != self.target.dimension:
            raise ValueError(
                f"map has {len(self.components)} components, target dimension {self.target.dimension}"
            )
        for row in self.target.metric:
            for e in row:
                if any(s >= self.target.dimension for s in free_slots(e)):
                    raise ValueError("target metric may only depend on target coordinates")

    @property
    def dimension(self) -> int:
        return self.target.dimension


class MapJets:
    """Jets of φ and its covariant derivatives at one source point."""

    def __init__(self, chart: ChartJets, data: MapData):
        self.chart = chart
        self.data = data
        self.n = data.dimension
        space = chart.space
        self.phi = chart.eval_many(data.components)
        y0 = value(self.phi)
        if data.box is not None:
            for a, (lo, hi) in enumerate(data.box):
                if not lo <= y0[a] <= hi:
                    raise TargetChartExit(
                        f"φ({tuple(float(x) for x in chart.point[:chart.m])}) has y{a + 1} = "
                        f"{y0[a]!r} outside the target box [{lo}, {hi}]"
                    )
        order = chart.order
        if data.flat:
            tspace = jet_space(self.n, 0)
            h0 = metric_jets(data.target.metric, tspace, y0, 0)[..., 0]
            _check_metric(h0, y0)
            self.h = space.constant(h0, order)
            self.target_christoffel = np.zeros((self.n, self.n, self.n, space.size_at[max(order - 1, 0)]))
            self.target_riemann_up = np.zeros((self.n,) * 4 + (space.size_at[max(order - 2, 0)],))
        else:
            tspace = jet_space(self.n, order)
            th = metric_jets(data.target.metric, tspace, y0, order)
            _check_metric(th[..., 0], y0)
            tginv = tspace.inv_matrix(th)
            tgam = christoffel_from_metric(tspace, th, tginv, self.n)
            triem = riemann_up_from_christoffel(tspace, tgam, self.n) if order >= 2 else None
            self.h = space.compose(th, tspace, self.phi)
            self.target_christoffel = space.compose(tgam, tspace, self.phi)
            if triem is not None:
                self.target_riemann_up = space.compose(triem, tspace, self.phi)

    @cached_property
    def dphi(self) -> np.ndarray:
        """φ^a_i, shape (n, m, ·)."""
        return self.chart.gradient(self.phi)

    @cached_property
    def connection(self) -> np.ndarray:
        """ᴺΓ^a_bc(φ) φ^c_l, the pullback connection coefficients."""
        return self.chart.space.einsum("abc,cl->abl", self.target_christoffel, self.dphi)

    def cov(self, section: np.ndarray) -> np.ndarray:
        """Covariant derivative of a tensor whose axis 0 is a pullback index."""
        return self.chart.cov(section, self.connection)

    @cached_property
    def second_fundamental(self) -> np.ndarray:
        """φ^a_ij = (∇dφ)^a_ij."""
        return self.cov(self.dphi)

    @cached_property
    def tension(self) -> np.ndarray:
        return self.chart.trace(self.second_fundamental)

    @cached_property
    def pullback_metric(self) -> np.ndarray:
        return self.chart.space.einsum("ai,aj->ij", self.chart.space.einsum("ab,bi->ai", self.h, self.dphi), self.dphi)

    @cached_property
    def energy_density(self) -> np.ndarray:
        """|dφ|² = g^{ij} h_ab φ^a_i φ^b_j."""
        return self.chart.trace(self.pullback_metric)

    def inner(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """h_ab u^a v^b contracted over the pullback slot only (remaining
        axes of ``u`` then ``v`` are kept, in that order)."""
        ru, rv = u.ndim - 2, v.ndim - 2
        su, sv = _LETTERS[1:1 + ru], _LETTERS[1 + ru:1 + ru + rv]
        hu = self.chart.space.einsum(f"AB,B{su}->A{su}", self.h, u)
        return self.chart.space.einsum(f"A{su},A{sv}->{su}{sv}", hu, v)

    @cached_property
    def stress_energy(self) -> np.ndarray:
        half_energy = 0.5 * self.chart.space.einsum(",ij->ij", self.energy_density, self.chart.g)
        return self.chart.space.add(self.pullback_metric, -half_energy)

    @cached_property
    def tension_norm_sq(self) -> np.ndarray:
        return self.inner(self.tension, self.tension)

    @cached_property
    def bitension(self) -> np.ndarray:
        """τ₂^a = φ^a_iijj − ᴺR^a_bcd φ^b_i φ^c_i τ^d (traces with g)."""
        space = self.chart.space
        lap = self.chart.trace(self.cov(self.cov(self.tension)))
        dd = self.chart.trace(space.einsum("bi,cj->bcij", self.dphi, self.dphi))
        curv = space.einsum("abcd,bc->ad", self.target_riemann_up, dd)
        curv = space.einsum("ad,d->a", curv, self.tension)
        return space.add(lap, -curv)


def _jets(geo: GeometryData, data: MapData, p: Sequence[float], order: int) -> MapJets:
    return MapJets(ChartJets(geo, p, order), data)


def map_first_order(data: MapData, geo: GeometryData, p: Sequence[float], order: int = 3) -> dict:
    mj = _jets(geo, data, p, max(order, 3))
    cj = mj.chart
    div_t = cj.trace(cj.cov(mj.stress_energy), (0, 2))
    formula = mj.inner(mj.tension, mj.dphi)
    pt = tuple(p)
    return {
        "dphi": TensorValue(("pull", "co"), value(mj.dphi), pt),
        "pullback_metric": TensorValue(("co", "co"), value(mj.pullback_metric), pt),
        "energy_density": float(value(mj.energy_density)),
        "stress_energy": TensorValue(("co", "co"), value(mj.stress_energy), pt),
        "div_stress_energy": TensorValue(("co",), value(div_t), pt),
        "tension_dphi": TensorValue(("co",), value(formula), pt),
    }


def tension(data: MapData, geo: GeometryData, p: Sequence[float], order: int = 2) -> TensorValue:
    mj = _jets(geo, data, p, max(order, 2))
    return TensorValue(("pull",), value(mj.tension), tuple(p))


def second_fundamental_form(data: MapData, geo: GeometryData, p: Sequence[float], order: int = 2) -> TensorValue:
    mj = _jets(geo, data, p, max(order, 2))
    return TensorValue(("pull", "co", "co"), value(mj.second_fundamental), tuple(p))


def bitension(data: MapData, geo: GeometryData, p: Sequence[float], order: int = 4) -> TensorValue:
    mj = _jets(geo, data, p, order)
    return TensorValue(("pull",), value(mj.bitension), tuple(p))
