"""Soliton residuals, rigid products, pointwise soliton identities, rigidity
classification and the harmonic-Einstein ansatz solver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .expr import Const, FieldEnv, Node, parse
from .geometry import _LETTERS, ChartJets, GeometryData, GeometryError, PotentialData, value
from .maps import MapData, MapJets
from .phicurv import PhiCurvatures, constant_map


class SolitonError(GeometryError):
    pass


class NotASoliton(SolitonError):
    pass


class NotHarmonicEinstein(SolitonError):
    pass


class MaxIterations(SolitonError):
    def __init__(self, message: str, result: "AnsatzResult | None" = None):
        super().__init__(message)
        self.result = result


class SingularNormalEquations(SolitonError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    order: int = 4
    tol_scale: float = 1.0


@dataclass(frozen=True)
class SolitonData:
    geo: GeometryData
    map: MapData | None
    alpha: float
    lam: float
    potential: PotentialData
    probes: tuple[tuple[float, ...], ...]
    name: str = ""
    rigid_base_dimension: int | None = None
    rigid_k: int | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        pot = self.potential
        if (pot.f is None) == (pot.vector_field is None):
            raise ValueError("exactly one of f or X must be given")

    @property
    def dimension(self) -> int:
        return self.geo.dimension

    @property
    def is_gradient(self) -> bool:
        return self.potential.f is not None

    @property
    def map_data(self) -> MapData:
        return self.map if self.map is not None else constant_map(self.geo.dimension)


@dataclass(frozen=True)
class RigidModelSpec:
    base: SolitonData
    k: int
    b: tuple[float, ...] = ()
    c: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.b and len(self.b) != self.k:
            raise ValueError(f"b has {len(self.b)} entries, k = {self.k}")


# -- reports ---------------------------------------------------------------


@dataclass
class CheckResult:
    check_id: str
    name: str
    anchor: str
    tolerance: float
    residuals: list[float] = field(default_factory=list)
    scales: list[float] = field(default_factory=list)
    status: str = "PASS"
    reason: str = ""

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def finish(self, tol_scale: float = 1.0) -> "CheckResult":
        ok = all(r <= self.tolerance * tol_scale * (1.0 + s) for r, s in zip(self.residuals, self.scales))
        ok = ok and all(math.isfinite(r) for r in self.residuals)
        self.status = "PASS" if ok else "FAIL"
        return self


@dataclass
class ResidualReport:
    checks: dict[str, CheckResult] = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values() if c.status != "N/A")

    def __getitem__(self, key: str) -> CheckResult:
        return self.checks[key]

    def add(self, check: CheckResult) -> None:
        self.checks[check.check_id] = check


def frob(a) -> float:
    return float(np.sqrt(np.sum(np.square(np.asarray(a, dtype=float)))))


def compare(lhs, rhs) -> tuple[float, float]:
    """Residual ‖lhs − rhs‖ and the scale max(‖lhs‖, ‖rhs‖) on point values."""
    lv, rv = value(lhs), value(rhs)
    return frob(lv - rv), max(frob(lv), frob(rv))


def residual_of(terms: Sequence) -> tuple[float, float]:
    """Residual of a sum of terms that should vanish, scaled by the largest term."""
    vals = [value(t) for t in terms]
    return frob(sum(vals)), max(frob(v) for v in vals)


# -- per-point structure -----------------------------------------------------


class SolitonPoint:
    """Curvatures and potential at one probe of a soliton candidate."""

    def __init__(self, data: SolitonData, p: Sequence[float], order: int = 4):
        self.data = data
        self.chart = ChartJets(data.geo, p, order)
        self.map = MapJets(self.chart, data.map_data)
        self.phi = PhiCurvatures(self.chart, self.map, data.alpha, data.potential.f)
        self.space = self.chart.space
        self.lam = data.lam

    @property
    def m(self) -> int:
        return self.chart.m

    def vector_field(self) -> np.ndarray:
        """X^i: ∇f in the gradient case."""
        if self.data.is_gradient:
            return self.chart.raise_slot(self.phi.df, 0)
        return self.chart.eval_many(self.data.potential.vector_field)

    def hess_f(self) -> np.ndarray:
        return self.chart.cov(self.phi.df)

    def half_lie(self) -> np.ndarray:
        x_low = self.space.einsum("ij,j->i", self.chart.g, self.vector_field())
        d = self.chart.cov(x_low)
        return 0.5 * (d + d.swapaxes(0, 1))

    def lam_g(self) -> np.ndarray:
        return self.lam * self.chart.g

    def f_laplacian(self, t: np.ndarray) -> np.ndarray:
        """Δ_X t = g^{kl} t_{,kl} − X^k t_{,k} for X = ∇f or the declared field."""
        d1 = self.chart.cov(t)
        lap = self.chart.trace(self.chart.cov(d1))
        nd = d1.ndim - 1
        src = _LETTERS[:nd]
        drift = self.space.einsum(f"{src[-1]},{src}->{src[:-1]}", self.vector_field(), d1)
        return self.space.add(lap, -drift)

    def structure_terms(self):
        """(first equation terms, second equation terms) for h₁/h₂ or b₁/b₂."""
        mp = self.map
        sym = self.hess_f() if self.data.is_gradient else self.half_lie()
        first = (self.phi.ricci, sym, -self.lam_g())
        x = self.vector_field()
        dphi_x = self.space.einsum("ai,i->a", mp.dphi, x)
        second = (mp.tension, -dphi_x)
        return first, second


# -- soliton residual --------------------------------------------------------


def _probe_points(data: SolitonData, order: int):
    if not data.probes:
        raise ValueError(f"{data.name or 'soliton data'} declares no probe points")
    for p in data.probes:
        yield SolitonPoint(data, p, order)


def soliton_residual(data: SolitonData, config: EngineConfig = EngineConfig(), tolerance: float = 1e-9) -> ResidualReport:
    order = 2
    grad = data.is_gradient
    ids = ("h1", "h2") if grad else ("b1", "b2")
    anchors = (
        ("Ric^φ + Hess f − λg", "τ(φ) − dφ(∇f)") if grad else ("Ric^φ + ½L_X g − λg", "τ(φ) − dφ(X)")
    )
    checks = [CheckResult(i, f"soliton equation {i}", a, tolerance) for i, a in zip(ids, anchors)]
    lam_hat = []
    for sp in _probe_points(data, order):
        first, second = sp.structure_terms()
        for chk, terms in zip(checks, (first, second)):
            r, s = residual_of(terms)
            chk.residuals.append(r)
            chk.scales.append(s)
        a = value(sp.space.add(first[0], first[1]))
        lam_hat.append(float(np.einsum("ij,ij->", np.linalg.inv(value(sp.chart.g)), a)) / sp.m)
    report = ResidualReport()
    for c in checks:
        report.add(c.finish(config.tol_scale))
    report.info["best_fit_lambda"] = lam_hat
    return report


def require_soliton(data: SolitonData, config: EngineConfig, tolerance: float = 1e-8) -> ResidualReport:
    rep = soliton_residual(data, config, tolerance)
    if not rep.passed:
        worst = max(rep.checks.values(), key=lambda c: c.max_residual)
        raise NotASoliton(
            f"{data.name or 'input'} is not a soliton: {worst.check_id} residual {worst.max_residual:.3e}"
        )
    return rep


# -- rigid models --------------------------------------------------------------


def harmonic_einstein_residual(data: SolitonData, config: EngineConfig = EngineConfig(),
                               tolerance: float = 1e-9) -> ResidualReport:
    ein = CheckResult("einstein", "harmonic-Einstein metric equation", "Ric^φ − λg", tolerance)
    harm = CheckResult("harmonic", "harmonic map equation", "τ(φ)", tolerance)
    for sp in _probe_points(data, 2):
        r, s = residual_of((sp.phi.ricci, -sp.lam_g()))
        ein.residuals.append(r)
        ein.scales.append(s)
        harm.residuals.append(frob(value(sp.map.tension)))
        harm.scales.append(frob(value(sp.map.dphi)))
    rep = ResidualReport()
    rep.add(ein.finish(config.tol_scale))
    rep.add(harm.finish(config.tol_scale))
    return rep


def _number(x: float) -> str:
    return repr(float(x)) if x >= 0 else f"(-{repr(-float(x))})"


def build_rigid_model(spec: RigidModelSpec, config: EngineConfig = EngineConfig()) -> SolitonData:
    base = spec.base
    he = harmonic_einstein_residual(base, config)
    if not he.passed:
        worst = max(he.checks.values(), key=lambda c: c.max_residual)
        raise NotHarmonicEinstein(f"base is not harmonic-Einstein: {worst.check_id} residual {worst.max_residual:.3e}")
    if base.geo.parameter_count:
        raise ValueError("rigid products need a base without free parameters")
    m, k, lam = base.dimension, spec.k, base.lam
    b = tuple(spec.b) if spec.b else (0.0,) * k
    n = base.map_data.dimension
    env = FieldEnv(m + k, n, dict(base.geo.env.constants))
    if k == 0:
        f = parse(_number(spec.c), env)
        return replace(base, potential=PotentialData(f=f), rigid_base_dimension=m, rigid_k=0)
    zero, one = Const(0.0), Const(1.0)
    rows = []
    for i in range(m + k):
        row = []
        for j in range(m + k):
            if i < m and j < m:
                row.append(base.geo.metric[i][j])
            else:
                row.append(one if i == j else zero)
        rows.append(tuple(row))
    geo = GeometryData(m + k, tuple(rows), env, tag=f"rigid:{base.name}x R^{k}")
    flat = [f"x{m + 1 + t}" for t in range(k)]
    terms = []
    if lam != 0.0:
        terms.append(f"{_number(lam / 2)}*(" + "+".join(f"{v}^2" for v in flat) + ")")
    terms += [f"{_number(bt)}*{v}" for bt, v in zip(b, flat) if bt != 0.0]
    terms.append(_number(spec.c))
    f = parse("+".join(terms), env)
    mp = None
    if base.map is not None:
        mp = MapData(base.map.target, base.map.components, base.map.flat, base.map.box)
    rng = np.random.default_rng(spec.seed)
    probes = tuple(tuple(p) + tuple(float(t) for t in rng.uniform(-1.0, 1.0, k)) for p in base.probes)
    return SolitonData(
        geo=geo,
        map=mp,
        alpha=base.alpha,
        lam=lam,
        potential=PotentialData(f=f),
        probes=probes,
        name=f"{base.name}xR{k}" if base.name else f"rigid_k{k}",
        rigid_base_dimension=m,
        rigid_k=k,
    )


def rigid_bach_closed_form(m: int, k: int, lam: float, g_base: np.ndarray) -> np.ndarray:
    """B̄ = (k−1)λ²/((m+k−1)(m+k−2)²) (k g_L ⊕ (−m) δ) on the product."""
    coef = (k - 1) * lam**2 / ((m + k - 1) * (m + k - 2) ** 2)
    out = np.zeros((m + k, m + k))
    out[:m, :m] = coef * k * g_base
    out[m:, m:] = -coef * m * np.eye(k)
    return out


# -- pointwise soliton formulas ---------------------------------------------------


SOLITON_FORMULAS: dict[str, tuple[str, str]] = {
    "f-commutation": ("F^φ in terms of ∇f", "F^φ_ijk = R_tikj f_t"),
    "half-grad-sphi": ("gradient of S^φ", "½ S^φ_i = R^φ_ij f_j"),
    "div-riemann": ("divergence of Riemann", "R_tikj,t = R_tikj f_t + α(φ^a_ik φ^a_j − φ^a_ij φ^a_k)"),
    "weighted-div-riemann": (
        "weighted divergence of Riemann",
        "(R_tikj e^{−f})_t = α(φ^a_ik φ^a_j − φ^a_ij φ^a_k) e^{−f}",
    ),
    "f-riemann-dricci": ("contracted Riemann against ∇Ric^φ", "f_t R_tikj R^φ_ij,k = ½|F^φ|²"),
    "f-laplacian-ricci-curvature": (
        "f-Laplacian of Ric^φ via curvature",
        "½Δ_f R^φ_ij = λR^φ_ij + R_tijk R^φ_tk + α/2 φ^a_k(R^φ_kj φ^a_i + φ^a_j R^φ_ik) − α τ^a φ^a_ij",
    ),
    "f-laplacian-ricci-hessian": (
        "f-Laplacian of Ric^φ via Hess f",
        "½Δ_f R^φ_ij = −R_tijk f_tk − α/2 φ^a_k(f_kj φ^a_i + φ^a_j f_ik) − α τ^a φ^a_ij",
    ),
    "f-laplacian-sphi": ("f-Laplacian of S^φ", "½Δ_f S^φ = λS^φ − |Ric^φ|² − α|τ(φ)|²"),
}


def soliton_formula_terms(sp: SolitonPoint) -> dict[str, tuple]:
    """(lhs, rhs) jet pairs for each pointwise gradient-soliton formula."""
    ch, pc, mp, space = sp.chart, sp.phi, sp.map, sp.space
    a, lam = pc.alpha, sp.lam
    e = space.einsum
    df_up = ch.raise_slot(pc.df, 0)
    riem = ch.riemann
    f_riem = e("t,tikj->ikj", df_up, riem)  # f_t R_tikj indexed [i, k, j]
    hess_d = mp.inner(mp.second_fundamental, mp.dphi)  # [i, j, k] = φ^a_ij φ^a_k
    map_term = hess_d - hess_d.swapaxes(1, 2)  # [i, k, j] = φ^a_ik φ^a_j − φ^a_ij φ^a_k
    out = {}
    out["f-commutation"] = (pc.f_tensor, f_riem.swapaxes(1, 2))
    out["half-grad-sphi"] = (0.5 * pc.d_scalar, e("ij,j->i", pc.ricci, df_up))
    div_r = ch.trace(ch.cov(riem), (0, 4))
    out["div-riemann"] = (div_r, space.add(f_riem, a * map_term))
    fj = pc.potential_jet
    weight = _exp_jet(space, -fj)
    wdiv = ch.trace(ch.cov(e(",tikj->tikj", weight, riem)), (0, 4))
    out["weighted-div-riemann"] = (wdiv, e(",ikj->ikj", weight, a * map_term))
    f_tensor = pc.f_tensor
    out["f-riemann-dricci"] = (
        ch.inner(f_riem.swapaxes(1, 2), pc.d_ricci),
        0.5 * ch.inner(f_tensor, f_tensor),
    )
    half_lap_ric = 0.5 * sp.f_laplacian(pc.ricci)
    tau_hess = mp.inner(mp.second_fundamental, mp.tension)  # τ^a φ^a_ij
    pull_up = ch.raise_slot(mp.pullback_metric, 0)  # [k, i] = φ^a^k φ^a_i
    ric = pc.ricci
    rm_ric = e("tk,tijk->ij", pc.ricci_up, riem)
    map_ric = e("ki,kj->ij", pull_up, ric)
    map_ric = map_ric + map_ric.swapaxes(0, 1)
    out["f-laplacian-ricci-curvature"] = (
        half_lap_ric,
        space.add(lam * ric, rm_ric, 0.5 * a * map_ric, -a * tau_hess),
    )
    hess_up = ch.raise_slot(ch.raise_slot(sp.hess_f(), 0), 1)
    rm_hess = e("tk,tijk->ij", hess_up, riem)
    map_hess = e("ki,kj->ij", pull_up, sp.hess_f())
    map_hess = map_hess + map_hess.swapaxes(0, 1)
    out["f-laplacian-ricci-hessian"] = (
        half_lap_ric,
        space.add(-rm_hess, -0.5 * a * map_hess, -a * tau_hess),
    )
    s = pc.scalar
    out["f-laplacian-sphi"] = (
        0.5 * sp.f_laplacian(s),
        space.add(lam * s, -ch.inner(ric, ric), -a * mp.tension_norm_sq),
    )
    return out


def _exp_jet(space, a: np.ndarray) -> np.ndarray:
    order = space.order_of(a)
    e0 = math.exp(a[..., 0])
    return space.compose_series(a, [e0 / math.factorial(n) for n in range(order + 1)])


def check_soliton_formulas(data: SolitonData, config: EngineConfig = EngineConfig(), tolerance: float = 1e-7,
                           require: bool = True) -> ResidualReport:
    if not data.is_gradient:
        raise NotASoliton("the pointwise formulas need a gradient soliton")
    if require:
        require_soliton(data, config)
    checks = {cid: CheckResult(cid, name, anchor, tolerance) for cid, (name, anchor) in SOLITON_FORMULAS.items()}
    for sp in _probe_points(data, max(config.order, 4)):
        for cid, (lhs, rhs) in soliton_formula_terms(sp).items():
            r, s = compare(lhs, rhs)
            checks[cid].residuals.append(r)
            checks[cid].scales.append(s)
    rep = ResidualReport()
    for c in checks.values():
        rep.add(c.finish(config.tol_scale))
    return rep


# -- scalar constancy checks ----------------------------------------------------


@dataclass
class ConstancyResult:
    values: list[float]
    spread: float
    tolerance: float
    passed: bool


def hamilton_value(sp: SolitonPoint) -> float:
    """S^φ + |∇f|² − 2λf at one probe."""
    pc = sp.phi
    return float(value(pc.scalar) + value(sp.chart.inner(pc.df, pc.df)) - 2.0 * sp.lam * value(pc.potential_jet))


def muller_perelman_value(sp: SolitonPoint) -> float:
    """S^φ + 2Δf − |∇f|² + 2λf at one probe."""
    pc = sp.phi
    lap = sp.chart.trace(sp.hess_f())
    return float(value(pc.scalar) + 2.0 * value(lap) - value(sp.chart.inner(pc.df, pc.df))
                 + 2.0 * sp.lam * value(pc.potential_jet))


def x_laplacian_terms(sp: SolitonPoint) -> tuple[float, ...]:
    """Terms whose sum vanishes for a soliton with constant λ."""
    pc, ch, m = sp.phi, sp.chart, sp.m
    s = float(value(pc.scalar))
    traceless_sq = float(value(ch.inner(pc.ricci, pc.ricci))) - s * s / m
    return (
        0.5 * float(value(sp.f_laplacian(pc.scalar))),
        pc.alpha * float(value(sp.map.tension_norm_sq)),
        traceless_sq,
        (s - m * sp.lam) * s / m,
    )


def _constancy(values: list[float], tolerance: float) -> ConstancyResult:
    spread = max(values) - min(values)
    scale = max(abs(v) for v in values)
    return ConstancyResult(values, spread, tolerance, spread <= tolerance * (1.0 + scale))


def hamilton_identity(data: SolitonData, config: EngineConfig = EngineConfig(), tolerance: float = 1e-8,
                      require: bool = True) -> ConstancyResult:
    """S^φ + |∇f|² − 2λf at each probe."""
    if not data.is_gradient:
        raise NotASoliton("needs a potential function")
    if require:
        require_soliton(data, config)
    return _constancy([hamilton_value(sp) for sp in _probe_points(data, 2)], tolerance)


def muller_perelman_check(data: SolitonData, f: Node | None = None, config: EngineConfig = EngineConfig(),
                          tolerance: float = 1e-8) -> ConstancyResult:
    """S^φ + 2Δf − |∇f|² + 2λf at each probe."""
    if not data.lam > 0:
        raise ValueError("needs a positive soliton constant")
    f = f if f is not None else data.potential.f
    if f is None:
        raise ValueError("no candidate function")
    probe_data = replace(data, potential=PotentialData(f=f))
    return _constancy([muller_perelman_value(sp) for sp in _probe_points(probe_data, 2)], tolerance)


def vertical_killing_check(geo: GeometryData, data: MapData | None, vector_field: Sequence[Node],
                           probes: Sequence[Sequence[float]], tolerance: float = 1e-9) -> ResidualReport:
    killing = CheckResult("killing", "Killing equation", "L_X g = 0", tolerance)
    vertical = CheckResult("vertical", "vertical field", "dφ(X) = 0", tolerance)
    data = data if data is not None else constant_map(geo.dimension)
    for p in probes:
        chart = ChartJets(geo, p, 2)
        mp = MapJets(chart, data)
        x = chart.eval_many(vector_field)
        x_low = chart.space.einsum("ij,j->i", chart.g, x)
        d = chart.cov(x_low)
        lie = value(d + d.swapaxes(0, 1))
        killing.residuals.append(frob(lie))
        killing.scales.append(0.0)
        vertical.residuals.append(frob(np.einsum("ai,i->a", value(mp.dphi), value(x))))
        vertical.scales.append(0.0)
    rep = ResidualReport()
    rep.add(killing.finish())
    rep.add(vertical.finish())
    return rep


def x_laplacian_sphi_check(data: SolitonData, config: EngineConfig = EngineConfig(), tolerance: float = 1e-7,
                           require: bool = True) -> CheckResult:
    """½Δ_X S^φ + α|τ|² + |Å(Ric^φ)|² + (S^φ − mλ)S^φ/m − (m−1)Δλ, λ constant."""
    if require:
        require_soliton(data, config)
    chk = CheckResult(
        "x-laplacian-sphi",
        "X-Laplacian of S^φ",
        "½Δ_X S^φ + α|τ(φ)|² + |Å(Ric^φ)|² + (S^φ − mλ)S^φ/m − (m−1)Δλ = 0",
        tolerance,
    )
    for sp in _probe_points(data, max(config.order, 4)):
        terms = x_laplacian_terms(sp)
        chk.residuals.append(abs(float(sum(terms))))
        chk.scales.append(max(abs(float(t)) for t in terms))
    return chk.finish(config.tol_scale)


# -- rigidity ---------------------------------------------------------------


@dataclass
class RigidityResult:
    status: str
    k: int | None
    eigenvalues: list[list[float]]
    nabla_ricci_norm: float
    lambda_match: bool
    steady: bool
    reason: str = ""

    @property
    def rigid_consistent(self) -> bool:
        return self.status == "RIGID-CONSISTENT"


def rigidity_classify(data: SolitonData, config: EngineConfig = EngineConfig(), strict: bool = True,
                      parallel_tol: float = 1e-9) -> RigidityResult:
    """Test the Hessian-eigenvalue split and parallel Ric^φ expected of rigid solitons.

    With ``strict`` a failed soliton residual raises :class:`NotASoliton`;
    otherwise it is reported as not rigid-consistent.
    """
    if not data.is_gradient:
        raise NotASoliton("rigidity needs a potential function")
    struct = soliton_residual(data, config, 1e-8)
    if strict and not struct.passed:
        require_soliton(data, config)
    lam = data.lam
    eig_tol = 1e-6 * (1.0 + abs(lam))
    eigs, nabla, scalars, grad_norms = [], 0.0, [], []
    for sp in _probe_points(data, 3):
        h = value(sp.hess_f())
        g = value(sp.chart.g)
        w = scipy.linalg.eigh(0.5 * (h + h.T), g, eigvals_only=True)
        eigs.append(sorted(float(x) for x in w))
        nabla = max(nabla, frob(value(sp.phi.d_ricci)))
        scalars.append(float(value(sp.phi.scalar)))
        grad_norms.append(math.sqrt(max(float(value(sp.chart.inner(sp.phi.df, sp.phi.df))), 0.0)))
    parallel = nabla <= parallel_tol
    reasons = []
    if not struct.passed:
        reasons.append("soliton residual fails")
    if lam != 0.0:
        counts = []
        match = True
        for w in eigs:
            near_l = sum(abs(x - lam) <= eig_tol for x in w)
            near_0 = sum(abs(x) <= eig_tol for x in w)
            if near_l + near_0 != len(w):
                match = False
            counts.append(near_l)
        if not match:
            reasons.append("Hess f eigenvalues outside {0, λ}")
        status_ok = match and parallel and struct.passed
        if match and len(set(counts)) > 1:
            return RigidityResult("INCONSISTENT-MULTIPLICITY", None, eigs, nabla, match, False,
                                  "eigenvalue split varies across probes")
        if not parallel:
            reasons.append(f"‖∇Ric^φ‖ = {nabla:.3e}")
        k = counts[0] if match else None
        status = "RIGID-CONSISTENT" if status_ok else "NOT-RIGID-CONSISTENT"
        return RigidityResult(status, k, eigs, nabla, match, False, "; ".join(reasons))
    spread = max(scalars) - min(scalars)
    hess_zero = all(max(abs(x) for x in w) <= eig_tol for w in eigs)
    grad_const = max(grad_norms) - min(grad_norms) <= eig_tol * (1.0 + max(grad_norms))
    s_const = spread <= 1e-10 * (1.0 + max(abs(s) for s in scalars))
    if not s_const:
        reasons.append(f"S^φ spread {spread:.3e}")
    if not hess_zero:
        reasons.append("Hess f does not vanish")
    if not grad_const:
        reasons.append("|∇f| not constant")
    ok = s_const and hess_zero and grad_const and struct.passed
    k = (1 if grad_norms[0] > eig_tol else 0) if hess_zero and grad_const else None
    return RigidityResult("RIGID-CONSISTENT" if ok else "NOT-RIGID-CONSISTENT", k, eigs, nabla,
                          hess_zero, True, "; ".join(reasons))


# -- ansatz solver ----------------------------------------------------------------


@dataclass(frozen=True)
class AnsatzFamily:
    """Harmonic-Einstein candidates depending on free parameters.

    ``geo.env.parameters`` names the parameters; they may appear in the
    metric and in the map components but not in the target metric.
    """

    geo: GeometryData
    map: MapData | None
    alpha: float
    boxes: tuple[tuple[float, float], ...]
    probes: tuple[tuple[float, ...], ...]
    lam: float | None = None
    weights: tuple[float, ...] | None = None

    @property
    def parameters(self) -> tuple[str, ...]:
        return self.geo.env.parameters


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 50
    tolerance: float = 1e-10
    initial_damping: float = 1e-3
    max_damping: float = 1e12


@dataclass
class AnsatzResult:
    parameters: dict[str, float]
    lam: float
    residual: float
    iterations: int
    converged: bool
    history: list[float]


def _ansatz_residuals(family: AnsatzFamily, theta: np.ndarray, lam: float, alpha: float,
                      lam_free: bool) -> tuple[np.ndarray, np.ndarray]:
    """Stacked residual vector and its Jacobian in (θ, λ if free)."""
    m = family.geo.dimension
    p = len(theta)
    weights = family.weights or (1.0,) * len(family.probes)
    data = family.map if family.map is not None else constant_map(m)
    rows, jac = [], []
    iu = np.triu_indices(m)
    for w, probe in zip(weights, family.probes):
        sw = math.sqrt(w)
        chart = ChartJets(family.geo, tuple(probe) + tuple(theta), 3)
        mp = MapJets(chart, data)
        space = chart.space
        ric = space.add(chart.ricci, -alpha * mp.pullback_metric)
        res = space.add(ric, -lam * chart.g)
        for block, extra in ((res[iu], -chart.g[iu]), (mp.tension, None)):
            rows.append(sw * block[..., 0])
            d = np.stack([block[..., 1 + m + j] for j in range(p)], axis=-1) if p else np.zeros(block.shape[:-1] + (0,))
            if lam_free:
                col = extra[..., 0] if extra is not None else np.zeros(block.shape[:-1])
                d = np.concatenate([d, col[..., None]], axis=-1)
            jac.append(sw * d)
    return np.concatenate(rows), np.concatenate(jac, axis=0)


def ansatz_solve(family: AnsatzFamily, targets: Mapping[str, float] | None = None,
                 config: SolverConfig = SolverConfig()) -> AnsatzResult:
    """Levenberg-damped Gauss–Newton from the centre of the parameter box."""
    targets = dict(targets or {})
    alpha = float(targets.pop("alpha", family.alpha))
    lam_target = targets.pop("lambda", family.lam)
    if targets:
        raise ValueError(f"unknown targets {sorted(targets)}")
    lam_free = lam_target is None
    names = family.parameters
    if len(family.boxes) != len(names):
        raise ValueError("one box per parameter is required")
    lo = np.array([b[0] for b in family.boxes], dtype=float)
    hi = np.array([b[1] for b in family.boxes], dtype=float)
    theta = 0.5 * (lo + hi)
    lam = 0.0 if lam_free else float(lam_target)

    def unpack(x):
        return (x[:-1], x[-1]) if lam_free else (x, lam)

    x = np.append(theta, lam) if lam_free else theta.copy()
    xlo = np.append(lo, -np.inf) if lam_free else lo
    xhi = np.append(hi, np.inf) if lam_free else hi
    r, jac = _ansatz_residuals(family, *unpack(x), alpha, lam_free)
    cost = float(r @ r)
    history = [math.sqrt(cost)]
    mu = config.initial_damping
    for it in range(1, config.max_iterations + 1):
        if math.sqrt(cost) <= config.tolerance:
            return _result(names, unpack(x), cost, it - 1, True, history)
        jtj = jac.T @ jac
        grad = jac.T @ r
        if not np.any(jtj):
            raise SingularNormalEquations("Jacobian vanishes; the residual does not depend on the parameters")
        while True:
            a = jtj + mu * np.diag(np.maximum(np.diag(jtj), 1e-300))
            try:
                step = np.linalg.solve(a, -grad)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                trial = np.clip(x + step, xlo, xhi)
                r_new, jac_new = _ansatz_residuals(family, *unpack(trial), alpha, lam_free)
                cost_new = float(r_new @ r_new)
                if cost_new < cost:
                    x, r, jac, cost = trial, r_new, jac_new, cost_new
                    mu = max(mu / 3.0, 1e-12)
                    break
                if np.max(np.abs(trial - x)) <= 1e-15 * (1.0 + np.max(np.abs(x))):
                    # no representable progress left
                    history.append(math.sqrt(cost))
                    if math.sqrt(cost) <= config.tolerance:
                        return _result(names, unpack(x), cost, it, True, history)
                    raise MaxIterations(f"stalled at residual {math.sqrt(cost):.3e}",
                                        _result(names, unpack(x), cost, it, False, history))
            mu *= 4.0
            if mu > config.max_damping:
                raise SingularNormalEquations(f"damping exceeded {config.max_damping:g} without progress")
        history.append(math.sqrt(cost))
    if math.sqrt(cost) <= config.tolerance:
        return _result(names, unpack(x), cost, config.max_iterations, True, history)
    res = _result(names, unpack(x), cost, config.max_iterations, False, history)
    raise MaxIterations(f"no convergence after {config.max_iterations} iterations (residual {res.residual:.3e})", res)


def _result(names, unpacked, cost, iterations, converged, history) -> AnsatzResult:
    theta, lam = unpacked
    return AnsatzResult(
        {n: float(v) for n, v in zip(names, theta)}, float(lam), math.sqrt(cost), iterations, converged, list(history)
    )
