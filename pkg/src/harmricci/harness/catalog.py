"""Identity catalog: every pointwise identity the engine can check.

Each entry names the structure it needs (its gates), a default tolerance and a
residual function.  A residual ``r`` with scale ``s`` passes when
``r <= tolerance * tol_scale * (1 + s)``; ``s`` is the norm of the largest
term entering the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from ..expr import parse
from ..geometry import GeometryError, PotentialData, value
from ..jet import JetError
from ..solitons import (
    EngineConfig,
    SOLITON_FORMULAS,
    CheckResult,
    ResidualReport,
    SolitonData,
    SolitonPoint,
    compare,
    frob,
    hamilton_value,
    harmonic_einstein_residual,
    muller_perelman_value,
    residual_of,
    rigid_bach_closed_form,
    rigidity_classify,
    soliton_formula_terms,
    soliton_residual,
    x_laplacian_terms,
)
from .manifest import Manifest


class UnknownIdentityId(KeyError):
    pass


GATE_DESCRIPTIONS = {
    "any": "always applies",
    "dim3": "chart dimension at least 3",
    "soliton": "soliton equations hold (gradient or vector-field form)",
    "gradient-soliton": "gradient soliton equations hold",
    "shrinking": "gradient soliton with λ > 0",
    "harmonic-einstein": "Ric^φ = λg and τ(φ) = 0",
    "rigid": "declared rigid product that is a gradient soliton",
    "parallel": "∇Ric^φ = 0",
    "codazzi": "C^φ = 0",
    "harmonic": "τ(φ) = 0",
}


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    name: str
    anchor: str
    gates: tuple[str, ...]
    tolerance: float
    residual: Callable  # (Context, SolitonPoint) -> (r, s), or Context -> [(r, s)] when global
    group: str = ""
    per_probe: bool = True


class Context:
    """Shared per-probe jets and lazily evaluated gates for one manifest."""

    def __init__(self, manifest: Manifest, config: EngineConfig):
        self.manifest = manifest
        self.config = config
        self.parameters: dict[str, float] = {}
        self.probes = manifest.probes
        if manifest.family is not None:
            # ansatz families are checked at the center of their parameter box
            center = tuple(0.5 * (lo + hi) for lo, hi in manifest.family.boxes)
            self.parameters = dict(zip(manifest.family.parameters, center))
            self.probes = tuple(tuple(p) + center for p in manifest.probes)
        if manifest.soliton is not None:
            self.data = manifest.soliton
        else:
            env = manifest.geo.env
            self.data = SolitonData(
                manifest.geo, manifest.map, manifest.alpha,
                manifest.lam if manifest.lam is not None else 0.0,
                PotentialData(f=parse("0", env)), self.probes, manifest.name,
            )
        self._points: dict[int, SolitonPoint] = {}
        self._gates: dict[str, tuple[bool, str]] = {}

    @property
    def m(self) -> int:
        return self.manifest.geo.dimension

    def point(self, idx: int) -> SolitonPoint:
        if idx not in self._points:
            self._points[idx] = SolitonPoint(self.data, self.probes[idx], self.config.order)
        return self._points[idx]

    def points(self):
        for i in range(len(self.probes)):
            yield self.point(i)

    @cached_property
    def test_function(self):
        """A fixed non-degenerate cubic used by the function commutation rule."""
        m = self.m
        text = " + ".join([f"x{i + 1}^2*x{(i + 1) % m + 1}" for i in range(m)] + ["0.5*x1^3"])
        return parse(text, self.manifest.geo.env)

    @cached_property
    def soliton_report(self) -> ResidualReport | None:
        if self.manifest.soliton is None:
            return None
        return soliton_residual(self.manifest.soliton, self.config, 1e-8)

    def gate(self, name: str) -> tuple[bool, str]:
        if name not in self._gates:
            self._gates[name] = self._eval_gate(name)
        return self._gates[name]

    def _eval_gate(self, name: str) -> tuple[bool, str]:
        man = self.manifest
        if name == "any":
            return True, ""
        if name == "dim3":
            return (self.m >= 3, f"dimension {self.m} < 3")
        if name in ("soliton", "gradient-soliton", "shrinking", "rigid"):
            rep = self.soliton_report
            if rep is None:
                return False, "no potential declared"
            if name != "soliton" and not man.soliton.is_gradient:
                return False, "vector-field soliton, a potential function is required"
            if not rep.passed:
                worst = max(rep.checks.values(), key=lambda c: c.max_residual)
                return False, f"not a soliton: {worst.check_id} residual {worst.max_residual:.3e}"
            if name == "shrinking" and not man.soliton.lam > 0:
                return False, "λ is not positive"
            if name == "rigid" and man.rigid_k is None:
                return False, "no [rigid] section"
            return True, ""
        if name == "harmonic-einstein":
            if man.lam is None:
                return False, "no λ declared"
            rep = harmonic_einstein_residual(self.data, self.config, 1e-9)
            if not rep.passed:
                worst = max(rep.checks.values(), key=lambda c: c.max_residual)
                return False, f"not harmonic-Einstein: {worst.check_id} residual {worst.max_residual:.3e}"
            return True, ""
        if name == "parallel":
            worst = max(frob(value(sp.phi.d_ricci)) for sp in self.points())
            return (worst <= 1e-9, f"‖∇Ric^φ‖ = {worst:.3e}")
        if name == "codazzi":
            worst = max(frob(value(sp.phi.cotton)) for sp in self.points())
            return (worst <= 1e-10, f"‖C^φ‖ = {worst:.3e}")
        if name == "harmonic":
            worst = max(frob(value(sp.map.tension)) for sp in self.points())
            return (worst <= 1e-10, f"‖τ(φ)‖ = {worst:.3e}")
        raise KeyError(name)


# -- residual functions --------------------------------------------------------


def _cmp(lhs, rhs) -> tuple[float, float]:
    """``compare`` on point values rather than jets."""
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    return frob(lhs - rhs), max(frob(lhs), frob(rhs))


def _riemann_symmetries(ctx, sp):
    r = value(sp.chart.riemann)
    terms = [r + r.transpose(1, 0, 2, 3), r + r.transpose(0, 1, 3, 2), r - r.transpose(2, 3, 0, 1)]
    return max(frob(t) for t in terms), frob(r)


def _first_bianchi(ctx, sp):
    r = value(sp.chart.riemann)
    return residual_of((r, r.transpose(0, 2, 3, 1), r.transpose(0, 3, 1, 2)))


def _second_bianchi(ctx, sp):
    d = value(sp.chart.cov(sp.chart.riemann))  # [i, j, k, t, l]
    return residual_of((d, d.transpose(0, 1, 3, 4, 2), d.transpose(0, 1, 4, 2, 3)))


def _metric_compat(ctx, sp):
    return frob(value(sp.chart.cov(sp.chart.g))), frob(value(sp.chart.g))


def _riemann_up(sp):
    return sp.space.einsum("tp,pijk->tijk", sp.chart.ginv, sp.chart.riemann)


def _commutation_function(ctx, sp):
    ch = sp.chart
    u = ch.eval_scalar(ctx.test_function)
    d3 = value(ch.cov(ch.hessian(u)))
    curv = value(sp.space.einsum("tijk,t->ijk", _riemann_up(sp), ch.gradient(u)))
    return residual_of((d3, -d3.swapaxes(1, 2), -curv))


def _commutation_tensor(ctx, sp):
    ch, t = sp.chart, sp.phi.ricci
    d2 = value(ch.cov(ch.cov(t)))  # [i, j, k, t]
    r_up = _riemann_up(sp)
    a = value(sp.space.einsum("likt,lj->ijkt", r_up, t))
    b = value(sp.space.einsum("ljkt,il->ijkt", r_up, t))
    return residual_of((d2, -d2.swapaxes(2, 3), -a, -b))


def _phi_scalar(ctx, sp):
    pc = sp.phi
    alt = value(sp.chart.scalar) - pc.alpha * value(sp.map.energy_density)
    return _cmp(value(pc.scalar), alt)


def _cotton_antisym(ctx, sp):
    c = value(sp.phi.cotton)
    return frob(c + c.swapaxes(1, 2)), frob(c)


def _second_fundamental_sym(ctx, sp):
    s = value(sp.map.second_fundamental)
    return frob(s - s.swapaxes(1, 2)), frob(s)


def _div_stress_energy(ctx, sp):
    ch, mp = sp.chart, sp.map
    div_t = ch.trace(ch.cov(mp.stress_energy), (0, 2))
    return compare(div_t, mp.inner(mp.tension, mp.dphi))


def _harmonic_conservative(ctx, sp):
    ch, mp = sp.chart, sp.map
    div_t = value(ch.trace(ch.cov(mp.stress_energy), (0, 2)))
    return frob(div_t), frob(value(mp.stress_energy))


def _schur(ctx, sp):
    pc, mp = sp.phi, sp.map
    lhs = value(sp.chart.trace(pc.d_ricci, (1, 2)))
    return residual_of((lhs, -0.5 * value(pc.d_scalar), pc.alpha * value(mp.inner(mp.tension, mp.dphi))))


def _cotton_trace(ctx, sp):
    pc, mp = sp.phi, sp.map
    return compare(sp.chart.trace(pc.cotton, (0, 1)), pc.alpha * mp.inner(mp.tension, mp.dphi))


def _f_norm(ctx, sp):
    pc, ch, mp = sp.phi, sp.chart, sp.map
    m, a = sp.m, pc.alpha
    div_t = ch.trace(ch.cov(mp.stress_energy), (0, 2))
    f2 = value(ch.inner(pc.f_tensor, pc.f_tensor))
    terms = (
        value(ch.inner(pc.cotton, pc.cotton)),
        2 * a / (m - 1) * value(ch.inner(div_t, pc.d_scalar)),
        value(ch.inner(pc.d_scalar, pc.d_scalar)) / (2 * (m - 1)),
    )
    return abs(float(f2 - sum(terms))), max(abs(float(f2)), *(abs(float(t)) for t in terms))


def _f_norm_codazzi(ctx, sp):
    pc, ch = sp.phi, sp.chart
    f2 = value(ch.inner(pc.f_tensor, pc.f_tensor))
    rhs = value(ch.inner(pc.d_scalar, pc.d_scalar)) / (2 * (sp.m - 1))
    return _cmp(f2, rhs)


def _weyl_trace(ctx, sp):
    pc = sp.phi
    return compare(sp.chart.trace(pc.weyl, (0, 2)), pc.alpha * sp.map.pullback_metric)


def _weyl_div(ctx, sp):
    return compare(sp.phi.weyl_divergence, sp.phi.weyl_divergence_formula)


def _bach_trace(ctx, sp):
    pc, m = sp.phi, sp.m
    lhs = (m - 2) * value(sp.chart.trace(pc.bach))
    rhs = pc.alpha * (m - 4) / (m - 2) * value(sp.map.tension_norm_sq)
    return abs(float(lhs - rhs)), max(abs(float(lhs)), abs(float(rhs)), frob(value(pc.bach_times)))


def _bach_sym(ctx, sp):
    b = value(sp.phi.bach)
    return frob(b - b.T), frob(b)


def _zero(getter):
    def fn(ctx, sp):
        t = value(getter(sp))
        return frob(t), 0.0
    return fn


def _traceless_ricci(ctx, sp):
    ric = value(sp.phi.ricci)
    g = value(sp.chart.g)
    s = float(value(sp.phi.scalar))
    return frob(ric - s / sp.m * g), frob(ric)


def _he_cotton_f(ctx, sp):
    return max(frob(value(sp.phi.cotton)), frob(value(sp.phi.f_tensor))), 0.0


def _rigid_bach(ctx, sp):
    man = ctx.manifest
    m, k = man.rigid_base_dimension, man.rigid_k
    g = value(sp.chart.g)
    expected = rigid_bach_closed_form(m, k, sp.lam, g[:m, :m])
    return _cmp(value(sp.phi.bach), expected)


def _rigid_bach_trace(ctx, sp):
    return abs(float(value(sp.chart.trace(sp.phi.bach)))), 0.0


def _j_parallel(ctx, sp):
    pc, mp = sp.phi, sp.map
    red = -2.0 * value(sp.space.einsum("ij,aij->a", pc.ricci_up, mp.second_fundamental))
    return compare(pc.j_field, red)


def _integrability_first(ctx, sp):
    pc = sp.phi
    f_w = sp.space.einsum("t,tijk->ijk", sp.chart.raise_slot(pc.df, 0), pc.weyl)
    return residual_of((value(pc.cotton), value(f_w), -value(pc.d_tensor)))


def _integrability_second(ctx, sp):
    pc, ch, mp = sp.phi, sp.chart, sp.map
    m = sp.m
    f_up = ch.raise_slot(pc.df, 0)
    c_jik_fk = value(sp.space.einsum("jik,k->ij", pc.cotton, f_up))
    div_d = value(ch.trace(ch.cov(pc.d_tensor), (2, 3)))
    tau_dphi = value(mp.inner(mp.tension, mp.dphi))
    last = np.einsum("i,j->ij", tau_dphi, value(pc.df))
    return residual_of((
        value(pc.bach_times),
        -(m - 3) / (m - 2) * c_jik_fk,
        -div_d,
        pc.alpha / (m - 2) * last,
    ))


def _d_norm(ctx, sp):
    pc, ch = sp.phi, sp.chart
    d = pc.d_tensor
    lhs = value(ch.inner(d, d))
    rhs = 2.0 / (sp.m - 2) * value(ch.inner(d, sp.space.einsum("ij,k->ijk", pc.ricci, pc.df)))
    return _cmp(lhs, rhs)


def _formula(cid):
    def fn(ctx, sp):
        lhs, rhs = soliton_formula_terms(sp)[cid]
        return compare(lhs, rhs)
    return fn


def _x_laplacian(ctx, sp):
    terms = x_laplacian_terms(sp)
    return abs(sum(terms)), max(abs(t) for t in terms)


def _constancy(values: Sequence[float]):
    ref = values[0]
    return [(abs(v - ref), max(abs(v), abs(ref))) for v in values]


def _hamilton(ctx):
    return _constancy([hamilton_value(sp) for sp in ctx.points()])


def _muller_perelman(ctx):
    return _constancy([muller_perelman_value(sp) for sp in ctx.points()])


def _rigidity(ctx):
    man = ctx.manifest
    res = rigidity_classify(man.soliton, ctx.config, strict=False)
    k = man.rigid_k
    lam = man.soliton.lam
    m = man.geo.dimension
    if res.steady:
        expected = [0.0] * m
    else:
        expected = [0.0] * (m - k) + [lam] * k
        expected.sort()
    penalty = 0.0 if (res.rigid_consistent and res.k == k) else 1.0
    out = []
    for eig in res.eigenvalues:
        out.append((max(abs(a - b) for a, b in zip(eig, expected)) + penalty, 0.0))
    return out


def _entries() -> list[CatalogEntry]:
    E = CatalogEntry
    any_ = ("any",)
    d3 = ("dim3",)
    grad = ("gradient-soliton",)
    entries = [
        E("riemann-symmetries", "Riemann symmetries", "R_ijkt = −R_jikt = −R_ijtk = R_ktij", any_, 1e-10, _riemann_symmetries),
        E("first-bianchi", "first Bianchi identity", "R_ijkt + R_iktj + R_itjk = 0", any_, 1e-10, _first_bianchi),
        E("second-bianchi", "second Bianchi identity", "R_ijkt,l + R_ijtl,k + R_ijlk,t = 0", any_, 1e-9, _second_bianchi),
        E("metric-compatibility", "metric compatibility", "∇g = 0", any_, 1e-10, _metric_compat),
        E("commutation-function", "commutation rule for a function", "u_ijk = u_ikj + R^t_ijk u_t", any_, 1e-9, _commutation_function),
        E("commutation-tensor", "commutation rule for a 2-tensor", "T_ij,kt = T_ij,tk + R^l_ikt T_lj + R^l_jkt T_il (T = Ric^φ)", any_, 1e-8, _commutation_tensor),
        E("phi-scalar-trace", "φ-scalar curvature as a trace", "S^φ = g^{ij}R^φ_ij = S − α|dφ|²", any_, 1e-10, _phi_scalar),
        E("phi-cotton-antisymmetry", "φ-Cotton antisymmetry", "C^φ_ijk = −C^φ_ikj", any_, 1e-10, _cotton_antisym),
        E("second-fundamental-symmetry", "symmetry of ∇dφ", "φ^a_ij = φ^a_ji", any_, 1e-10, _second_fundamental_sym),
        E("stress-energy-divergence", "divergence of the stress-energy tensor", "div(T)_j = τ^a φ^a_j, T = φ*h − ½|dφ|²g", any_, 1e-8, _div_stress_energy),
        E("harmonic-conservative", "harmonic maps are conservative", "τ(φ) = 0 ⇒ div(T) = 0", ("harmonic",), 1e-8, _harmonic_conservative),
        E("generalized-schur", "generalized Schur identity", "R^φ_ij,j = ½S^φ_i − α τ^a φ^a_i", any_, 1e-8, _schur),
        E("phi-cotton-trace", "trace of φ-Cotton", "C^φ_jji = α τ^a φ^a_i", any_, 1e-8, _cotton_trace),
        E("f-norm-relation", "norm of F^φ", "|F^φ|² = |C^φ|² + 2α/(m−1) div(T)(∇S^φ) + |∇S^φ|²/(2(m−1))", any_, 1e-8, _f_norm),
        E("f-norm-codazzi", "norm of F^φ for Codazzi Schouten", "C^φ = 0 ⇒ |F^φ|² = |∇S^φ|²/(2(m−1))", ("codazzi",), 1e-8, _f_norm_codazzi),
        E("phi-weyl-trace", "trace of φ-Weyl", "W^φ_kikj = α φ^a_i φ^a_j", d3, 1e-8, _weyl_trace),
        E("phi-weyl-divergence", "divergence of φ-Weyl",
          "W^φ_tijk,t = (m−3)/(m−2) C^φ_ikj + α(φ^a_ij φ^a_k − φ^a_ik φ^a_j) + α/(m−2) τ^a(φ^a_j g_ik − φ^a_k g_ij)", d3, 1e-8, _weyl_div),
        E("phi-bach-trace", "trace of φ-Bach", "(m−2) tr B^φ = α(m−4)/(m−2) |τ(φ)|²", d3, 1e-8, _bach_trace),
        E("phi-bach-symmetry", "symmetry of φ-Bach", "B^φ_ij = B^φ_ji", d3, 1e-8, _bach_sym),
        E("he-traceless-ricci", "harmonic-Einstein: traceless φ-Ricci", "Å(Ric^φ) = 0", ("harmonic-einstein",), 1e-9, _traceless_ricci),
        E("he-cotton-zero", "harmonic-Einstein: parallel φ-Ricci", "C^φ = 0, F^φ = 0", ("harmonic-einstein",), 1e-9, _he_cotton_f),
        E("he-bach-zero", "harmonic-Einstein: φ-Bach vanishes", "B^φ = 0", ("harmonic-einstein", "dim3"), 1e-8, _zero(lambda sp: sp.phi.bach)),
        E("he-j-zero", "harmonic-Einstein: J vanishes", "J = 0", ("harmonic-einstein", "dim3"), 1e-8, _zero(lambda sp: sp.phi.j_field)),
        E("j-parallel-reduction", "J for parallel φ-Ricci", "∇Ric^φ = 0 ⇒ J^a = −2 R^φ_jk φ^a_jk", ("parallel", "dim3"), 1e-8, _j_parallel),
        E("soliton-structure", "soliton equations", "Ric^φ + Hess f = λg, τ(φ) = dφ(∇f)", ("soliton",), 1e-8, None, per_probe=False),
    ]
    for cid, (name, anchor) in SOLITON_FORMULAS.items():
        entries.append(E(f"soliton-{cid}", name, anchor, grad, 1e-7, _formula(cid), group="soliton-formulas"))
    entries += [
        E("hamilton-identity", "Hamilton-type identity", "S^φ + |∇f|² − 2λf is constant", grad, 1e-8, _hamilton, per_probe=False),
        E("muller-perelman", "Müller–Perelman constancy", "S^φ + 2Δf − |∇f|² + 2λf is constant", ("shrinking",), 1e-8, _muller_perelman, per_probe=False),
        E("x-laplacian-sphi", "X-Laplacian of S^φ",
          "½Δ_X S^φ + α|τ(φ)|² + |Å(Ric^φ)|² + (S^φ − mλ)S^φ/m − (m−1)Δλ = 0", ("soliton",), 1e-7, _x_laplacian),
        E("integrability-first", "first integrability condition", "C^φ_ijk + f_t W^φ_tijk = D^φ_ijk", grad + d3, 1e-7, _integrability_first, group="integrability"),
        E("integrability-second", "second integrability condition",
          "(m−2)B^φ_ij − (m−3)/(m−2) C^φ_jik f_k = D^φ_ijk,k − α/(m−2) τ^a φ^a_i f_j", grad + d3, 1e-7, _integrability_second, group="integrability"),
        E("d-norm-relation", "norm of D^φ", "|D^φ|² = 2/(m−2) D^φ_ijk R^φ_ij f_k", grad + d3, 1e-8, _d_norm, group="integrability"),
        E("phi-bach-rigid-closed-form", "φ-Bach of a rigid product",
          "B̄ = (k−1)λ²/((m+k−1)(m+k−2)²)(k g_L − m g_ℝᵏ)", ("rigid", "dim3"), 1e-8, _rigid_bach, group="rigid"),
        E("rigid-bach-trace", "φ-Bach trace of a rigid product", "tr B̄ = 0", ("rigid", "dim3"), 1e-9, _rigid_bach_trace, group="rigid"),
        E("rigid-j-zero", "J of a rigid product", "J̄ = 0", ("rigid", "dim3"), 1e-9, _zero(lambda sp: sp.phi.j_field), group="rigid"),
        E("rigid-parallel-ricci", "parallel φ-Ricci of a rigid product", "∇Ric^φ̄ = 0", ("rigid",), 1e-9, _zero(lambda sp: sp.phi.d_ricci), group="rigid"),
        E("rigidity-classification", "Hess f eigenvalue split", "spec(Hess f) ⊂ {0, λ} with multiplicities (m, k)", ("rigid",), 1e-6, _rigidity, group="rigid", per_probe=False),
    ]
    return entries


CATALOG: dict[str, CatalogEntry] = {e.id: e for e in _entries()}
GROUPS: dict[str, list[str]] = {}
for _e in CATALOG.values():
    if _e.group:
        GROUPS.setdefault(_e.group, []).append(_e.id)


def select(selection: Sequence[str] | None) -> tuple[list[str], bool]:
    """Resolve ids and group names; returns (ids, explicit)."""
    if not selection or list(selection) == ["all"]:
        return sorted(CATALOG), False
    ids: list[str] = []
    for item in selection:
        if item in CATALOG:
            ids.append(item)
        elif item in GROUPS:
            ids.extend(GROUPS[item])
        else:
            raise UnknownIdentityId(item)
    return sorted(set(ids)), True


def _structure(ctx: Context) -> list[tuple[float, float]]:
    rep = ctx.soliton_report
    out = []
    for i in range(len(ctx.manifest.probes)):
        worst = max(rep.checks.values(), key=lambda c: c.residuals[i] / (1 + c.scales[i]))
        out.append((worst.residuals[i], worst.scales[i]))
    return out


def run_entry(ctx: Context, entry: CatalogEntry, explicit: bool) -> CheckResult:
    check = CheckResult(entry.id, entry.name, entry.anchor, entry.tolerance)
    for gate in entry.gates:
        ok, reason = ctx.gate(gate)
        if not ok:
            check.status = "SKIPPED" if explicit else "N/A"
            check.reason = f"gate {gate!r} not met: {reason}"
            return check
    try:
        if entry.id == "soliton-structure":
            pairs = _structure(ctx)
        elif entry.per_probe:
            pairs = [entry.residual(ctx, sp) for sp in ctx.points()]
        else:
            pairs = entry.residual(ctx)
    except (GeometryError, JetError, ValueError, ArithmeticError) as err:
        check.status = "ERROR"
        check.reason = f"{type(err).__name__}: {err}"
        return check
    for r, s in pairs:
        check.residuals.append(float(r))
        check.scales.append(float(s))
    return check.finish(ctx.config.tol_scale)


def verify(manifest: Manifest, selection: Sequence[str] | None = None,
           config: EngineConfig = EngineConfig()) -> ResidualReport:
    ids, explicit = select(selection)
    ctx = Context(manifest, config)
    report = ResidualReport()
    for cid in ids:
        report.add(run_entry(ctx, CATALOG[cid], explicit))
    report.info["explicit"] = explicit
    if ctx.parameters:
        report.info["parameters"] = ctx.parameters
    return report


def exit_code(report: ResidualReport) -> int:
    bad = [c for c in report.checks.values() if c.status in ("FAIL", "SKIPPED", "ERROR")]
    return 1 if bad else 0
