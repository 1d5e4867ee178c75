import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmricci.expr import FieldEnv, parse
from harmricci.geometry import GeometryData, curvature, kulkarni_nomizu, value
from harmricci.harness import load
from harmricci.phicurv import (
    DimensionTooLow,
    PhiCurvatures,
    d_phi_and_y,
    j_field,
    phi_bach,
    phi_ricci,
    phi_schouten_cotton,
    phi_weyl,
)
from harmricci.solitons import rigid_bach_closed_form

from helpers import random_expression
from oracles import flat_geometry, line_map, make_map, sphere_geometry, sphere_identity, sphere_metric
from symbolic import SymbolicPoint

P3 = (0.9, 1.2, 0.4)
SQUARE = line_map(3, "x1^2")


def _max(a):
    return float(np.max(np.abs(a)))


# -- Ricci level ---------------------------------------------------------------------


def test_constant_map_leaves_ricci_alone():
    geo = sphere_geometry(3)
    out = phi_ricci(geo, line_map(3, "4"), 1.0, P3)
    np.testing.assert_array_equal(out["phi_ricci"].components, curvature(geo, P3)["ricci"].components)


def test_sphere_identity_phi_ricci():
    out = phi_ricci(sphere_geometry(3), sphere_identity(3), 1.0, P3)
    np.testing.assert_allclose(out["phi_ricci"].components, sphere_metric(P3), atol=1e-13)
    assert out["phi_scalar"] == pytest.approx(3.0, abs=1e-13)
    assert _max(out["traceless_phi_ricci"].components) <= 1e-13


def test_linear_map_phi_ricci():
    c = 0.8
    out = phi_ricci(flat_geometry(2), line_map(2, f"{c}*x1"), 1.0, (0.4, 0.1))
    np.testing.assert_allclose(out["phi_ricci"].components, np.diag([-c * c, 0.0]), atol=1e-15)
    assert out["phi_scalar"] == pytest.approx(-c * c, abs=1e-15)


# -- Schouten, Cotton, F -----------------------------------------------------------------


@pytest.mark.parametrize("name", ["sphere_id", "euclidean_r3", "expanding_line", "rigid_s3xr2"])
def test_parallel_phi_ricci_has_vanishing_cotton_and_f(name):
    man = load(f"gallery/{name}.mf")
    for p in man.probes:
        out = phi_schouten_cotton(man.geo, man.map, man.alpha, p)
        assert _max(out["phi_cotton"].components) <= 1e-10
        assert _max(out["phi_f"].components) <= 1e-10


def test_cotton_trace_on_square():
    p = (0.5, 0.2, -0.3)
    pc = PhiCurvatures.at(flat_geometry(3), SQUARE, 1.0, p)
    lhs = value(pc.chart.trace(pc.cotton, (0, 1)))
    rhs = 1.0 * value(pc.map.inner(pc.map.tension, pc.map.dphi))
    assert lhs[0] == pytest.approx(2.0, abs=1e-14)
    assert rhs[0] == pytest.approx(2.0, abs=1e-14)
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


# -- Weyl ------------------------------------------------------------------------------------


def test_sphere_identity_weyl():
    g = sphere_metric(P3)
    out = phi_weyl(sphere_geometry(3), sphere_identity(3), 1.0, P3)
    w = out["phi_weyl"].components
    np.testing.assert_allclose(w, 0.25 * kulkarni_nomizu(g, g), atol=1e-13)
    np.testing.assert_allclose(np.einsum("kl,kilj->ij", np.linalg.inv(g), w), g, atol=1e-13)


def test_flat_constant_map_weyl_vanishes():
    out = phi_weyl(flat_geometry(3), line_map(3, "1"), 1.0, (0.1, 0.2, 0.3))
    assert _max(out["phi_weyl"].components) == 0.0


def test_weyl_divergence_on_square():
    for p in [(0.5, 0.2, -0.3), (-1.2, 0.7, 0.0)]:
        pc = PhiCurvatures.at(flat_geometry(3), SQUARE, 1.0, p)
        assert _max(value(pc.weyl_divergence) - value(pc.weyl_divergence_formula)) <= 1e-8


def test_weyl_needs_three_dimensions():
    with pytest.raises(DimensionTooLow):
        phi_weyl(flat_geometry(2), None, 1.0, (0.0, 0.0))
    with pytest.raises(DimensionTooLow):
        phi_bach(flat_geometry(2), None, 1.0, (0.0, 0.0))


# -- Bach and J ----------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["sphere_id", "euclidean_r3"])
def test_harmonic_einstein_bach_and_j_vanish(name):
    man = load(f"gallery/{name}.mf")
    for p in man.probes:
        assert _max(phi_bach(man.geo, man.map, man.alpha, p)["phi_bach"].components) <= 1e-9
        assert _max(j_field(man.geo, man.map, man.alpha, p).components) <= 1e-9


def test_bach_trace_on_square():
    for p in [(0.5, 0.2, -0.3), (1.7, -0.4, 2.2), (-0.9, 0.0, 0.0)]:
        out = phi_bach(flat_geometry(3), SQUARE, 1.0, p)
        assert out["trace"] == pytest.approx(-4.0, abs=1e-8)


def test_rigid_bach_closed_form_numbers():
    b = rigid_bach_closed_form(3, 2, 1.0, np.eye(3))
    np.testing.assert_allclose(np.diag(b), [1 / 18] * 3 + [-1 / 12] * 2, rtol=1e-15)
    assert np.trace(b) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("name,base", [("rigid_s3xr2", 3), ("expanding_line", 1)])
def test_rigid_model_bach_and_j(name, base):
    data = load(f"gallery/{name}.mf").soliton
    k = data.dimension - base
    for p in data.probes:
        out = phi_bach(data.geo, data.map, data.alpha, p)
        g_base = sphere_metric(p[:3]) if base == 3 else np.eye(1)
        want = rigid_bach_closed_form(base, k, data.lam, g_base)
        assert _max(out["phi_bach"].components - want) <= 1e-8
        assert abs(out["trace"]) <= 1e-9
        pc = PhiCurvatures.at(data.geo, data.map, data.alpha, p)
        assert _max(value(pc.j_field)) <= 1e-9
        reduction = pc.j_field + 2.0 * pc.space.einsum("jk,ajk->a", pc.ricci_up, pc.map.second_fundamental)
        assert _max(value(reduction)) <= 1e-8


# -- D^φ ---------------------------------------------------------------------------------------


def test_constant_potential_gives_no_d_tensor():
    f = parse("3", FieldEnv(3))
    out = d_phi_and_y(sphere_geometry(3), sphere_identity(3), 1.0, f, P3)
    assert _max(out["phi_d"].components) == 0.0
    assert _max(out["y"].components) == 0.0


def test_gaussian_d_tensor_vanishes():
    man = load("gallery/gaussian_r3.mf")
    for p in man.probes:
        out = d_phi_and_y(man.geo, None, 1.0, man.potential.f, p)
        assert _max(out["phi_d"].components) == 0.0


def test_first_integrability_on_rigid_model():
    data = load("gallery/rigid_s3xr2.mf").soliton
    for p in data.probes:
        pc = PhiCurvatures.at(data.geo, data.map, data.alpha, p, potential=data.potential.f)
        f_w = pc.space.einsum("t,tijk->ijk", pc.chart.raise_slot(pc.df, 0), pc.weyl)
        assert _max(value(pc.space.add(pc.d_tensor, -pc.cotton, -f_w))) <= 1e-8


# -- symbolic route --------------------------------------------------------------------------

SOURCE = [["1+0.1*x2^2", "0", "0"], ["0", "exp(0.2*x1)", "0"], ["0", "0", "1.3+0.1*x1*x2"]]
TARGET = [["1", "0"], ["0", "sin(y1)^2"]]
MAP = ["1+0.3*x1+0.1*x3^2", "x2+0.2*x1*x3"]
POTENTIAL = "0.5*x1^2 + x2*x3"


def test_phi_curvatures_match_symbolic_route():
    p, alpha = (0.3, -0.2, 0.5), 0.7
    sym = SymbolicPoint(SOURCE, p, TARGET, MAP, alpha=alpha, potential=POTENTIAL)
    env = FieldEnv(3, 2)
    geo = GeometryData.from_strings(SOURCE, env)
    pc = PhiCurvatures.at(geo, make_map(3, TARGET, MAP), alpha, p, potential=parse(POTENTIAL, env))
    pairs = [
        (pc.ricci, sym.phi_ricci),
        (pc.cotton, sym.cotton),
        (pc.weyl, sym.weyl),
        (pc.bach, sym.bach),
        (pc.j_field, sym.j_field),
        (pc.d_tensor, sym.d_tensor),
    ]
    for got, want in pairs:
        np.testing.assert_allclose(value(got), sym.num(want), rtol=0, atol=1e-12)


# -- identities on random maps -----------------------------------------------------------------

RTARGET = [["exp(0.3*y2)", "0.1*sin(y1*y2)"], ["0.1*sin(y1*y2)", "1 + y1^2"]]
RSOURCE = [["1 + 0.2*x2^2", "0.1*x1*x3", "0"], ["0.1*x1*x3", "exp(0.3*x1)", "0"], ["0", "0", "1.5"]]


@st.composite
def random_maps(draw):
    rng = random.Random(draw(st.integers(0, 2**32 - 1)))
    return make_map(3, RTARGET, [f"0.5*sin({random_expression(rng, 3, 3)})" for _ in range(2)])


points3 = st.tuples(*[st.floats(-0.6, 0.6)] * 3)
alphas = st.floats(0.1, 2.0)


def _curvatures(mp, p, alpha):
    return PhiCurvatures.at(GeometryData.from_strings(RSOURCE, FieldEnv(3, 2)), mp, alpha, p)


def _close(lhs, rhs, tol):
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    scale = max(_max(lhs), _max(rhs))
    assert _max(lhs - rhs) <= tol * (1.0 + scale)


@settings(max_examples=20, deadline=None)
@given(random_maps(), points3, alphas)
def test_generalized_schur(mp, p, alpha):
    pc = _curvatures(mp, p, alpha)
    div = value(pc.chart.trace(pc.d_ricci, (1, 2)))
    rhs = 0.5 * value(pc.d_scalar) - alpha * value(pc.map.inner(pc.map.tension, pc.map.dphi))
    _close(div, rhs, 1e-8)


@settings(max_examples=20, deadline=None)
@given(random_maps(), points3, alphas)
def test_cotton_antisymmetry_and_trace(mp, p, alpha):
    pc = _curvatures(mp, p, alpha)
    c = value(pc.cotton)
    assert _max(c + c.swapaxes(1, 2)) <= 1e-10 * (1 + _max(c))
    _close(value(pc.chart.trace(pc.cotton, (0, 1))), alpha * value(pc.map.inner(pc.map.tension, pc.map.dphi)), 1e-8)


@settings(max_examples=20, deadline=None)
@given(random_maps(), points3, alphas)
def test_weyl_trace_and_divergence(mp, p, alpha):
    pc = _curvatures(mp, p, alpha)
    _close(value(pc.chart.trace(pc.weyl, (0, 2))), alpha * value(pc.map.pullback_metric), 1e-8)
    _close(value(pc.weyl_divergence), value(pc.weyl_divergence_formula), 1e-8)


@settings(max_examples=15, deadline=None)
@given(random_maps(), points3, alphas)
def test_bach_symmetry_and_trace(mp, p, alpha):
    pc = _curvatures(mp, p, alpha)
    b = value(pc.bach)
    assert _max(b - b.T) <= 1e-8 * (1 + _max(b))
    m = pc.m
    tr = float(value(pc.chart.trace(pc.bach)))
    want = alpha * (m - 4) / (m - 2) * float(value(pc.map.tension_norm_sq)) / (m - 2)
    assert abs(tr - want) <= 1e-8 * (1 + abs(want) + _max(b))


@settings(max_examples=15, deadline=None)
@given(random_maps(), points3, alphas)
def test_f_norm_relation(mp, p, alpha):
    pc = _curvatures(mp, p, alpha)
    ch, m = pc.chart, pc.m
    f_sq = float(value(ch.inner(pc.f_tensor, pc.f_tensor)))
    c_sq = float(value(ch.inner(pc.cotton, pc.cotton)))
    div_t = pc.map.inner(pc.map.tension, pc.map.dphi)
    cross = float(value(ch.inner(div_t, pc.d_scalar)))
    grad_sq = float(value(ch.inner(pc.d_scalar, pc.d_scalar)))
    lhs = f_sq - c_sq - 2 * alpha / (m - 1) * cross - grad_sq / (2 * (m - 1))
    assert abs(lhs) <= 1e-8 * (1 + f_sq + c_sq + abs(cross) + grad_sq)
