"""φ-modified curvature tensors.

Index layout follows :mod:`harmricci.geometry`: base slots covariant, comma
slots appended last, every contraction through the metric (or the target
metric for pullback slots).
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np

from .expr import FieldEnv, Node, parse
from .geometry import ChartJets, GeometryData, GeometryError, TensorValue, kulkarni_nomizu_jets, value
from .maps import MapData, MapJets


class DimensionTooLow(GeometryError):
    pass


def constant_map(dimension: int) -> MapData:
    """The constant map to the real line, used when no map is declared."""
    line = GeometryData.from_strings([["1"]], FieldEnv(1, coordinate_prefix="y"))
    return MapData(line, (parse("0", FieldEnv(dimension, 1)),), flat=True)


class PhiCurvatures:
    """Lazily assembled φ-curvature jets at one point."""

    def __init__(self, chart: ChartJets, mapping: MapJets, alpha: float, potential: Node | None = None):
        self.chart = chart
        self.map = mapping
        self.alpha = float(alpha)
        self.m = chart.m
        self.space = chart.space
        self.potential = potential

    @classmethod
    def at(cls, geo: GeometryData, data: MapData | None, alpha: float, p: Sequence[float],
           order: int = 4, potential: Node | None = None) -> "PhiCurvatures":
        chart = ChartJets(geo, p, order)
        mapping = MapJets(chart, data if data is not None else constant_map(geo.dimension))
        return cls(chart, mapping, alpha, potential)

    def _require_weyl_dimension(self):
        if self.m < 3:
            raise DimensionTooLow(f"needs dimension >= 3, chart has {self.m}")

    def _einsum(self, spec, a, b):
        return self.space.einsum(spec, a, b)

    def _times_g(self, scalar: np.ndarray) -> np.ndarray:
        return self._einsum(",ij->ij", scalar, self.chart.g)

    # -- Ricci level --------------------------------------------------------

    @cached_property
    def ricci(self) -> np.ndarray:
        return self.space.add(self.chart.ricci, -self.alpha * self.map.pullback_metric)

    @cached_property
    def scalar(self) -> np.ndarray:
        return self.chart.trace(self.ricci)

    @cached_property
    def d_scalar(self) -> np.ndarray:
        return self.chart.gradient(self.scalar)

    @cached_property
    def d_ricci(self) -> np.ndarray:
        return self.chart.cov(self.ricci)

    @cached_property
    def ricci_up(self) -> np.ndarray:
        """R^φ with both slots raised."""
        return self.chart.raise_slot(self.chart.raise_slot(self.ricci, 0), 1)

    @cached_property
    def schouten(self) -> np.ndarray:
        return self.space.add(self.ricci, -self._times_g(self.scalar) / (2.0 * (self.m - 1)))

    @cached_property
    def cotton(self) -> np.ndarray:
        d = self.chart.cov(self.schouten)
        return d - d.swapaxes(1, 2)

    @cached_property
    def f_tensor(self) -> np.ndarray:
        """F^φ_ijk = R^φ_ij,k − R^φ_ik,j."""
        return self.d_ricci - self.d_ricci.swapaxes(1, 2)

    # -- Weyl level ---------------------------------------------------------

    @cached_property
    def weyl(self) -> np.ndarray:
        self._require_weyl_dimension()
        kn = kulkarni_nomizu_jets(self.space, self.schouten, self.chart.g)
        return self.space.add(self.chart.riemann, -kn / (self.m - 2))

    @cached_property
    def weyl_divergence(self) -> np.ndarray:
        """W^φ_tijk,t with result indexed [i, j, k]."""
        return self.chart.trace(self.chart.cov(self.weyl), (0, 4))

    @cached_property
    def weyl_divergence_formula(self) -> np.ndarray:
        self._require_weyl_dimension()
        m, a = self.m, self.alpha
        mp = self.map
        c_ikj = self.cotton.swapaxes(1, 2)
        hess_d = mp.inner(mp.second_fundamental, mp.dphi)  # [i, j, k] = φ^a_ij φ^a_k
        term2 = hess_d - hess_d.swapaxes(1, 2)
        tau_d = mp.inner(mp.tension, mp.dphi)  # [j] = τ^a φ^a_j
        gt = self._einsum("j,ik->ijk", tau_d, self.chart.g)
        term3 = gt - gt.swapaxes(1, 2)
        return self.space.add((m - 3) / (m - 2) * c_ikj, a * term2, a / (m - 2) * term3)

    # -- Bach and J ---------------------------------------------------------

    @cached_property
    def cotton_divergence(self) -> np.ndarray:
        """C^φ_ijk,k."""
        return self.chart.trace(self.chart.cov(self.cotton), (2, 3))

    @cached_property
    def bach_times(self) -> np.ndarray:
        """(m − 2) B^φ_ij, transcribed term by term."""
        self._require_weyl_dimension()
        m, a = self.m, self.alpha
        mp, space = self.map, self.space
        w_part = self._einsum("tk,tikj->ij", self.ricci_up, self.weyl)
        pull_part = self._einsum("tk,ti->ik", self.ricci_up, mp.pullback_metric)
        pull_part = self._einsum("ik,jk->ij", pull_part, self.chart.g)
        hess_tau = mp.inner(mp.second_fundamental, mp.tension)  # φ^a_ij τ^a
        dtau = mp.cov(mp.tension)
        dphi_dtau = mp.inner(mp.dphi, dtau)  # [i, j] = φ^a_i τ^a_,j
        tau_sq = self._times_g(mp.tension_norm_sq) / (m - 2)
        return space.add(
            self.cotton_divergence,
            w_part,
            -a * pull_part,
            a * hess_tau,
            -a * dphi_dtau,
            -a * tau_sq,
        )

    @cached_property
    def bach(self) -> np.ndarray:
        return self.bach_times / (self.m - 2)

    @cached_property
    def j_field(self) -> np.ndarray:
        self._require_weyl_dimension()
        m = self.m
        mp, chart, space = self.map, self.chart, self.space
        tau = mp.tension
        s = self.scalar
        t1 = m / ((m - 1) * (m - 2)) * self._einsum(",a->a", s, tau)
        grad_s_up = chart.raise_slot(self.d_scalar, 0)
        t2 = -(m - 2) / (2.0 * (m - 1)) * self._einsum("i,ai->a", grad_s_up, mp.dphi)
        t3 = -2.0 * self._einsum("ij,aij->a", self.ricci_up, mp.second_fundamental)
        tau_dphi = chart.raise_slot(mp.inner(tau, mp.dphi), 0)
        t4 = 2.0 * self._einsum("i,ai->a", tau_dphi, mp.dphi)
        return space.add(t1, t2, t3, t4, -mp.bitension)

    # -- potential-dependent ------------------------------------------------

    @cached_property
    def potential_jet(self) -> np.ndarray:
        if self.potential is None:
            raise ValueError("no potential function attached")
        return self.chart.eval_scalar(self.potential)

    @cached_property
    def df(self) -> np.ndarray:
        return self.chart.gradient(self.potential_jet)

    @cached_property
    def d_tensor(self) -> np.ndarray:
        self._require_weyl_dimension()
        m = self.m
        g, ric, df, s = self.chart.g, self.ricci, self.df, self.scalar
        e = self._einsum
        first = e("ij,k->ijk", ric, df)
        first = first - first.swapaxes(1, 2)
        f_ric = e("t,tk->k", self.chart.raise_slot(df, 0), ric)  # f_t R^φ_tk
        second = e("k,ij->ijk", f_ric, g)
        second = second - second.swapaxes(1, 2)
        third = e("k,ij->ijk", df, g)
        third = third - third.swapaxes(1, 2)
        third = e(",ijk->ijk", s, third)
        return self.space.add(first, second / (m - 1), -third / (m - 1)) / (m - 2)

    @cached_property
    def y_field(self) -> np.ndarray:
        """Y_k = D^φ_ijk f^i f^j (covariant)."""
        up = self.chart.raise_slot(self.df, 0)
        return self._einsum("j,jk->k", up, self._einsum("i,ijk->jk", up, self.d_tensor))


def _tv(sig, arr, p):
    return TensorValue(sig, value(arr), tuple(p))


def phi_ricci(geo: GeometryData, data: MapData | None, alpha: float, p: Sequence[float], order: int = 2) -> dict:
    pc = PhiCurvatures.at(geo, data, alpha, p, max(order, 2))
    ric, g = value(pc.ricci), value(pc.chart.g)
    s = float(value(pc.scalar))
    return {
        "phi_ricci": TensorValue(("co", "co"), ric, tuple(p)),
        "phi_scalar": s,
        "traceless_phi_ricci": TensorValue(("co", "co"), ric - s / pc.m * g, tuple(p)),
    }


def phi_schouten_cotton(geo, data, alpha, p, order: int = 3) -> dict:
    pc = PhiCurvatures.at(geo, data, alpha, p, max(order, 3))
    return {
        "phi_schouten": _tv(("co", "co"), pc.schouten, p),
        "phi_cotton": _tv(("co",) * 3, pc.cotton, p),
        "phi_f": _tv(("co",) * 3, pc.f_tensor, p),
    }


def phi_weyl(geo, data, alpha, p, order: int = 3) -> dict:
    pc = PhiCurvatures.at(geo, data, alpha, p, max(order, 3))
    return {
        "phi_weyl": _tv(("co",) * 4, pc.weyl, p),
        "phi_weyl_divergence": _tv(("co",) * 3, pc.weyl_divergence, p),
    }


def phi_bach(geo, data, alpha, p, order: int = 4) -> dict:
    pc = PhiCurvatures.at(geo, data, alpha, p, order)
    b = value(pc.bach)
    g = value(pc.chart.g)
    tr = float(np.einsum("ij,ij->", np.linalg.inv(g), b))
    return {
        "phi_bach": TensorValue(("co", "co"), b, tuple(p)),
        "trace": tr,
        "traceless": TensorValue(("co", "co"), b - tr / pc.m * g, tuple(p)),
    }


def j_field(geo, data, alpha, p, order: int = 4) -> TensorValue:
    pc = PhiCurvatures.at(geo, data, alpha, p, order)
    return _tv(("pull",), pc.j_field, p)


def d_phi_and_y(geo, data, alpha, f: Node, p, order: int = 3) -> dict:
    pc = PhiCurvatures.at(geo, data, alpha, p, max(order, 3), potential=f)
    d = pc.d_tensor
    norm_sq = float(value(pc.chart.inner(d, d)))
    ric_df = pc._einsum("ij,k->ijk", pc.ricci, pc.df)
    rel = 2.0 / (pc.m - 2) * float(value(pc.chart.inner(d, ric_df)))
    return {
        "phi_d": _tv(("co",) * 3, d, p),
        "y": _tv(("co",), pc.y_field, p),
        "d_norm_sq": norm_sq,
        "d_norm_sq_relation": rel,
    }
