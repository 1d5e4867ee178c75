from dataclasses import replace

import numpy as np
import pytest

from harmricci.expr import parse
from harmricci.geometry import PotentialData, value
from harmricci.harness import load, loads
from harmricci.solitons import (
    AnsatzFamily,
    MaxIterations,
    NotASoliton,
    NotHarmonicEinstein,
    RigidModelSpec,
    SingularNormalEquations,
    SolitonData,
    SolitonPoint,
    SolverConfig,
    ansatz_solve,
    build_rigid_model,
    check_soliton_formulas,
    hamilton_identity,
    muller_perelman_check,
    rigidity_classify,
    soliton_residual,
    vertical_killing_check,
    x_laplacian_sphi_check,
)

from oracles import flat_geometry, gaussian, line_map


def einstein_base(name, lam=None):
    """The manifold of a gallery file with potential f = 0."""
    man = load(f"gallery/{name}.mf")
    lam = man.lam if lam is None else lam
    return SolitonData(man.geo, man.map, man.alpha, lam, PotentialData(f=parse("0", man.geo.env)), man.probes, name)


@pytest.fixture(scope="module")
def rigid_s3():
    return build_rigid_model(RigidModelSpec(einstein_base("sphere_id"), 2, seed=3))


FLAT_R2 = """
[chart]
dimension = 2
[metric]
g11 = "1"
g22 = "1"
[potential]
f = "0"
[constants]
lambda = 0.0
[probes]
count = 6
seed = 2
"""


# -- structure equations ---------------------------------------------------------------


def test_gaussian_soliton_residuals():
    rep = soliton_residual(gaussian(), tolerance=1e-10)
    assert rep.passed
    assert max(c.max_residual for c in rep.checks.values()) <= 1e-10
    assert rep.info["best_fit_lambda"] == pytest.approx([1.0] * 8, abs=1e-12)


def test_rigid_sphere_product_residuals(rigid_s3):
    assert rigid_s3.dimension == 5
    rep = soliton_residual(rigid_s3, tolerance=1e-9)
    assert rep.passed


def test_perturbed_potential_fails_with_hessian_defect():
    data = gaussian("0.5*(x1^2 + x2^2 + x3^2) + 0.1*x1^3")
    rep = soliton_residual(data)
    assert not rep.passed
    for p, r in zip(data.probes, rep["h1"].residuals):
        assert r == pytest.approx(0.6 * abs(p[0]), rel=1e-12, abs=1e-15)
    assert rep["h2"].max_residual == 0.0


def test_vector_field_form():
    data = gaussian()
    env = data.geo.env
    xform = replace(data, potential=PotentialData(vector_field=tuple(parse(f"x{i}", env) for i in (1, 2, 3))))
    rep = soliton_residual(xform)
    assert set(rep.checks) == {"b1", "b2"}
    assert rep.passed


# -- rigid models -----------------------------------------------------------------------------


def test_rigid_model_is_parallel(rigid_s3):
    for p in rigid_s3.probes:
        assert np.max(np.abs(value(SolitonPoint(rigid_s3, p, 3).phi.d_ricci))) <= 1e-9


def test_rigid_model_with_k_zero_is_the_base():
    base = einstein_base("sphere_id")
    out = build_rigid_model(RigidModelSpec(base, 0, c=2.0))
    assert out.geo is base.geo
    assert out.rigid_k == 0
    assert soliton_residual(out).passed


def test_steady_rigid_model():
    base = loads(FLAT_R2).soliton
    data = build_rigid_model(RigidModelSpec(base, 1, b=(3.0,), c=1.0))
    for p in data.probes:
        assert SolitonPoint(data, p, 2).phi.potential_jet[..., 0] == pytest.approx(3 * p[2] + 1, abs=1e-14)
    rep = soliton_residual(data, tolerance=1e-10)
    assert rep.passed


def test_rigid_model_rejects_non_einstein_base():
    with pytest.raises(NotHarmonicEinstein):
        build_rigid_model(RigidModelSpec(einstein_base("x1sq_r3", lam=0.0), 1))


def test_rigid_spec_validation():
    base = einstein_base("sphere_id")
    with pytest.raises(ValueError):
        RigidModelSpec(base, -1)
    with pytest.raises(ValueError):
        RigidModelSpec(base, 2, b=(1.0,))


# -- pointwise soliton formulas ---------------------------------------------------------------


def test_gaussian_formulas():
    rep = check_soliton_formulas(gaussian(), tolerance=1e-9)
    assert len(rep.checks) == 8
    assert rep.passed


def test_rigid_model_formulas(rigid_s3):
    rep = check_soliton_formulas(rigid_s3)
    assert rep.passed, {k: c.max_residual for k, c in rep.checks.items()}
    # both sides of these two vanish identically
    assert rep["f-laplacian-sphi"].scales and max(rep["f-laplacian-sphi"].scales) <= 1e-9
    assert max(rep["half-grad-sphi"].scales) <= 1e-9


@pytest.mark.parametrize("name", ["steady_r2xr", "expanding_line", "cigar_r"])
def test_gallery_soliton_formulas(name):
    assert check_soliton_formulas(load(f"gallery/{name}.mf").soliton).passed


def test_formulas_need_a_soliton():
    with pytest.raises(NotASoliton):
        check_soliton_formulas(gaussian("x1^3"))


# -- scalar identities ------------------------------------------------------------------------


def test_hamilton_identity_values(rigid_s3):
    res = hamilton_identity(gaussian())
    assert res.passed and max(abs(v) for v in res.values) <= 1e-12
    shifted = hamilton_identity(gaussian("0.5*(x1^2 + x2^2 + x3^2) + 5"))
    assert shifted.values == pytest.approx([-10.0] * 8, abs=1e-12)
    assert shifted.spread <= 1e-12
    res = hamilton_identity(rigid_s3)
    assert res.values == pytest.approx([3.0] * len(res.values), abs=1e-9)


def test_muller_perelman():
    res = muller_perelman_check(gaussian())
    assert res.passed and res.values == pytest.approx([6.0] * 8, abs=1e-12)
    res = muller_perelman_check(einstein_base("sphere_id"))
    assert res.passed and res.values == pytest.approx([3.0] * 8, abs=1e-10)
    assert not muller_perelman_check(gaussian(), f=parse("x1^3", gaussian().geo.env)).passed


def test_vertical_killing_fields():
    geo = flat_geometry(2)
    env = geo.env
    probes = [(0.3, 0.4), (-1.0, 0.5), (2.0, -0.7)]
    rotation = (parse("-x2", env), parse("x1", env))
    assert vertical_killing_check(geo, line_map(2, "x1^2 + x2^2"), rotation, probes).passed
    translation = (parse("1", env), parse("0", env))
    rep = vertical_killing_check(geo, line_map(2, "x1"), translation, probes)
    assert not rep.passed
    assert rep["vertical"].residuals == [1.0] * 3
    assert rep["killing"].passed
    zero = (parse("0", env), parse("0", env))
    assert vertical_killing_check(geo, line_map(2, "x1"), zero, probes).passed


def test_x_laplacian_identity(rigid_s3):
    base = einstein_base("sphere_id")
    env = base.geo.env
    x_zero = replace(base, potential=PotentialData(vector_field=(parse("0", env),) * 3))
    assert x_laplacian_sphi_check(x_zero).passed
    assert x_laplacian_sphi_check(gaussian()).max_residual == 0.0
    assert x_laplacian_sphi_check(rigid_s3, tolerance=1e-8).passed
    env = rigid_s3.geo.env
    grad_f = tuple(parse(t, env) for t in ("0", "0", "0", "x4", "x5"))
    xform = replace(rigid_s3, potential=PotentialData(vector_field=grad_f))
    assert x_laplacian_sphi_check(xform, tolerance=1e-8).passed


# -- rigidity -------------------------------------------------------------------------------------


def test_rigidity_of_sphere_product(rigid_s3):
    res = rigidity_classify(rigid_s3)
    assert res.rigid_consistent and res.k == 2
    for w in res.eigenvalues:
        assert w == pytest.approx([0, 0, 0, 1, 1], abs=1e-6)
    assert res.nabla_ricci_norm <= 1e-9


def test_rigidity_of_gaussian():
    res = rigidity_classify(gaussian())
    assert res.rigid_consistent and res.k == 3


def test_rigidity_of_steady_product():
    res = rigidity_classify(load("gallery/steady_r2xr.mf").soliton)
    assert res.steady and res.rigid_consistent and res.k == 1


def test_perturbed_potential_is_not_rigid():
    data = gaussian("0.5*(x1^2 + x2^2 + x3^2) + 0.1*x1^3")
    res = rigidity_classify(data, strict=False)
    assert res.status == "NOT-RIGID-CONSISTENT"
    with pytest.raises(NotASoliton):
        rigidity_classify(data)


def test_cigar_is_not_rigid():
    res = rigidity_classify(load("gallery/cigar_r.mf").soliton)
    assert res.status == "NOT-RIGID-CONSISTENT"


@pytest.mark.parametrize("name", ["rigid_s3xr2", "steady_r2xr", "expanding_line", "gaussian_r3"])
def test_gallery_rigid_models_recover_k(name):
    data = load(f"gallery/{name}.mf").soliton
    assert soliton_residual(data).passed
    res = rigidity_classify(data)
    assert res.rigid_consistent
    assert res.k == data.rigid_k


# -- ansatz solver ---------------------------------------------------------------------------------


def sphere_family():
    return load("gallery/sphere_family.mf").family


def test_ansatz_recovers_radius():
    res = ansatz_solve(sphere_family(), {"lambda": 0.25})
    assert res.converged and res.iterations <= 25
    assert res.parameters["r"] == pytest.approx(2.0, abs=1e-6)


def test_ansatz_with_smaller_coupling():
    fam = sphere_family()
    res = ansatz_solve(fam, {"lambda": 1.5, "alpha": 0.5})
    assert res.parameters["r"] == pytest.approx(1.0, abs=1e-6)


def test_ansatz_fits_lambda_when_free():
    fam = replace(sphere_family(), boxes=((1.0, 1.0),))
    res = ansatz_solve(fam)
    assert res.lam == pytest.approx(1.0, abs=1e-9)


LINEAR_FAMILY = """
[chart]
dimension = 2
[metric]
g11 = "1"
g22 = "1"
[target]
dimension = 1
flat = true
h11 = "1"
[map]
phi1 = "c*x1"
[constants]
lambda = 0.0
[family]
parameters = ["c"]
boxes = [[-1.0, 3.0]]
[probes]
count = 4
seed = 1
"""


def test_ansatz_linear_map_family():
    res = ansatz_solve(loads(LINEAR_FAMILY).family, config=SolverConfig(max_iterations=200, tolerance=1e-10))
    assert abs(res.parameters["c"]) <= 1e-4


def test_ansatz_reports_max_iterations():
    with pytest.raises(MaxIterations) as info:
        ansatz_solve(sphere_family(), {"lambda": 0.25}, SolverConfig(max_iterations=1))
    assert info.value.result is not None and not info.value.result.converged


def test_ansatz_rejects_unknown_targets():
    with pytest.raises(ValueError):
        ansatz_solve(sphere_family(), {"radius": 2.0})


def test_ansatz_singular_when_parameters_do_nothing():
    text = LINEAR_FAMILY.replace('phi1 = "c*x1"', 'phi1 = "x1"').replace("lambda = 0.0", "lambda = 0.5")
    fam = loads(text).family
    with pytest.raises(SingularNormalEquations):
        ansatz_solve(fam)


def test_ansatz_is_deterministic():
    a = ansatz_solve(sphere_family(), {"lambda": 0.25})
    b = ansatz_solve(sphere_family(), {"lambda": 0.25})
    assert a == b


def test_family_constructor_checks_boxes():
    fam = sphere_family()
    with pytest.raises(ValueError):
        ansatz_solve(AnsatzFamily(fam.geo, fam.map, fam.alpha, (), fam.probes), {"lambda": 0.25})
