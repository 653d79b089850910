"""Charts, the catalog, and the curvature pipeline: closed-form values,
tensor symmetries, naturality under reparametrization, scaling, and the
cylinder operations."""

import math

import numpy as np
import pytest

from gbc import catalog, curvature_at, curvature_batch, cylinder_extend, restrict_equator
from gbc.catalog import gbc_expected_value, product, scaled, sign_flip
from gbc.errors import ConfigError, EvalError, SingularMetricError
from gbc.exprlang import ExprNode, const, substitute
from gbc.geometry import Chart, MetricField, signature_counts
from gbc.invariants import random_chart_points, raw_invariant
from gbc.quadrature import build_grid, check_signature
from gbc.tenalg import LOWER, PointTensor

CATALOG_SAMPLES = [
    "sphere2",
    "sphere3",
    "flat_torus(2)",
    "flat_torus(3)",
    "perturbed_torus(2)",
    "perturbed_torus(3)",
    "product(sphere2,sphere2)",
    "sign_flip(sphere2)",
    "cylinder(sphere2)",
]


def test_flat_torus_curvature_vanishes():
    m = catalog("flat_torus(3)")
    cb = curvature_at(m, (0.3, 1.0, 2.5))
    assert np.abs(cb.riem_low.components).max() == 0.0
    assert cb.scalar == 0.0
    assert cb.vol_density == 1.0


def test_unit_sphere_closed_forms():
    m = catalog("sphere2")
    cb = curvature_at(m, (math.pi / 3, 1.0))
    assert cb.scalar == pytest.approx(2.0, abs=1e-12)
    # R_theta.phi.theta.phi = sin^2(theta) = 3/4 at theta = pi/3
    assert cb.riem_low.components[0, 1, 0, 1] == pytest.approx(0.75, abs=1e-12)
    assert cb.vol_density == pytest.approx(math.sin(math.pi / 3), abs=1e-12)
    # Ricci = g on the unit 2-sphere
    assert np.abs(cb.ricci.components - cb.g.components).max() < 1e-12


def test_round_sphere3_closed_forms():
    cb = curvature_at(catalog("sphere3"), (1.0, 1.2, 2.0))
    assert cb.scalar == pytest.approx(6.0, abs=1e-10)
    assert np.abs(cb.ricci.components - 2.0 * cb.g.components).max() < 1e-10


def test_catalog_product_chi_and_signature():
    m = catalog("product(sphere2,sphere2)")
    assert m.dim == 4
    assert m.expected_chi == 4
    assert m.signature == (4, 0)


def test_catalog_sign_flip():
    m = catalog("sign_flip(sphere2)")
    assert m.signature == (0, 2)
    assert m.expected_chi == 2
    cb = curvature_at(m, (1.0, 1.0))
    assert cb.scalar == pytest.approx(-2.0, abs=1e-12)


def test_catalog_scaled_components():
    base = catalog("sphere2")
    big = catalog("scaled(sphere2, lam=2)")
    x = (1.1, 0.8)
    gb = curvature_at(base, x).g.components
    gs = curvature_at(big, x).g.components
    assert np.abs(gs - 4.0 * gb).max() < 1e-14


def test_catalog_parameter_override():
    m = catalog("perturbed_torus(2, amp=0.3)")
    assert dict(m.parameters)["amp"] == 0.3
    m2 = catalog("perturbed_torus(2)", {"amp": 0.1})
    assert dict(m2.parameters)["amp"] == 0.1
    with pytest.raises(ConfigError):
        catalog("perturbed_torus(2)", {"nope": 1.0})


def test_catalog_unknown_name():
    with pytest.raises(ConfigError):
        catalog("klein_bottle")
    with pytest.raises(ConfigError):
        catalog("sphere2(")


def test_expected_gbc_values():
    assert gbc_expected_value(catalog("sphere2"), 1) == 2.0
    assert gbc_expected_value(catalog("flat_torus(2)"), 1) == 0.0
    assert gbc_expected_value(catalog("product(sphere2,sphere2)"), 2) == 4.0
    assert gbc_expected_value(catalog("product(sphere2,sign_flip(sphere2))"), 2) == -4.0
    with pytest.raises(ConfigError):
        gbc_expected_value(catalog("sphere3"), 1)


@pytest.mark.parametrize("name", CATALOG_SAMPLES)
def test_curvature_symmetries_at_random_points(name):
    m = catalog(name)
    pts = random_chart_points(m, 100, seed=21)
    batch = curvature_batch(m, pts)
    r = batch.riem_low
    scale = max(np.abs(r).max(), 1e-12)
    assert np.abs(r + r.transpose(0, 2, 1, 3, 4)).max() / scale < 1e-9
    assert np.abs(r + r.transpose(0, 1, 2, 4, 3)).max() / scale < 1e-9
    assert np.abs(r - r.transpose(0, 3, 4, 1, 2)).max() / scale < 1e-9
    bianchi = (r + np.transpose(r, (0, 1, 3, 4, 2))
               + np.transpose(r, (0, 1, 4, 2, 3)))
    assert np.abs(bianchi).max() / scale < 1e-9
    ric = batch.ricci
    assert np.abs(ric - ric.transpose(0, 2, 1)).max() / max(np.abs(ric).max(), 1e-12) < 1e-10


@pytest.mark.parametrize("name", CATALOG_SAMPLES)
def test_signature_certified_on_default_grid(name):
    m = catalog(name)
    grid = build_grid(m)
    rep = check_signature(m, grid)
    assert rep["det_ok"] and rep["signature_ok"]


def test_scaling_weight_of_scalar_curvature():
    m = catalog("perturbed_torus(2)", {"amp": 0.3})
    lam = 1.7
    pts = random_chart_points(m, 20, seed=3)
    s_base = curvature_batch(m, pts).scalar
    s_scaled = curvature_batch(scaled(m, lam), pts).scalar
    assert np.abs(s_scaled - s_base / lam ** 2).max() < 1e-10 * max(1, np.abs(s_base).max())


def test_naturality_under_chart_reparametrization():
    """Torus coordinates shifted and rescaled by an explicit diffeomorphism:
    scalar invariants at corresponding points agree."""
    base = catalog("perturbed_torus(2)", {"amp": 0.3})
    a = (2.0, 0.5)
    b = (0.3, 1.1)
    # x_i = a_i y_i + b_i pulls the metric back to a_i a_j g_ij(x(y))
    ynames = ("y1", "y2")
    sub = {}
    for i, xname in enumerate(base.chart.coords):
        shift = ExprNode("binary", "+", (
            ExprNode("binary", "*", (const(a[i]), ExprNode("variable", ynames[i], ()))),
            const(b[i])))
        sub[xname] = shift
    rows = [[None, None], [None, None]]
    for i in range(2):
        for j in range(i, 2):
            node = substitute(base.components[i][j], sub)
            node = ExprNode("binary", "*", (const(a[i] * a[j]), node))
            rows[i][j] = node
            rows[j][i] = node
    chart = Chart("reparam", ynames,
                  tuple(((0.0, 2.0 * math.pi / ai)) for ai in a),
                  (True, True))
    reparam = MetricField("reparam_torus", chart,
                          tuple(tuple(r) for r in rows), (2, 0),
                          parameters=base.parameters)
    rng = np.random.default_rng(5)
    ys = np.column_stack([rng.uniform(0, 2 * math.pi / ai, 25) for ai in a])
    xs = ys * np.array(a) + np.array(b)
    cb_y = curvature_batch(reparam, ys)
    cb_x = curvature_batch(base, xs)
    assert np.abs(cb_y.scalar - cb_x.scalar).max() < 1e-9 * max(1, np.abs(cb_x.scalar).max())
    assert np.abs(raw_invariant(cb_y, 1) - raw_invariant(cb_x, 1)).max() < 1e-9


def test_cylinder_extension_block_structure():
    m = catalog("sphere2")
    ext = cylinder_extend(m)
    assert ext.dim == 3
    assert ext.expected_chi == 0
    assert ext.signature == (3, 0)
    cb = curvature_at(ext, (1.0, 0.7, 0.2))
    base = curvature_at(m, (1.0, 0.7))
    # circle direction is flat: scalar curvature and volume match the base
    assert cb.scalar == pytest.approx(base.scalar, abs=1e-10)
    assert cb.vol_density == pytest.approx(base.vol_density, abs=1e-12)
    assert np.abs(cb.g.components[:2, :2] - base.g.components).max() == 0.0
    assert cb.g.components[2, 2] == 1.0


def test_cylinder_of_flat_torus_is_flat_torus():
    ext = cylinder_extend(catalog("flat_torus(2)"))
    t3 = catalog("flat_torus(3)")
    x = (0.5, 1.5, 2.5)
    assert np.array_equal(curvature_at(ext, x).g.components,
                          curvature_at(t3, x).g.components)


def test_restrict_equator_of_metric_is_base_metric():
    m = catalog("sphere2")
    ext = cylinder_extend(m)
    x = (1.2, 0.4)
    cb_ext = curvature_at(ext, x + (0.0,))
    restricted = restrict_equator(cb_ext.g, m)
    base = curvature_at(m, x)
    assert np.abs(restricted.components - base.g.components).max() < 1e-15


def test_restrict_equator_scalar_passthrough():
    m = catalog("sphere2")
    t = PointTensor(3, (), np.array(7.5))
    out = restrict_equator(t, m)
    assert float(out.components) == 7.5
    assert restrict_equator(4.2, m) == 4.2


def test_restrict_equator_rejects_contravariant():
    m = catalog("sphere2")
    ext = cylinder_extend(m)
    cb = curvature_at(ext, (1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        restrict_equator(cb.g_inv, m)


def test_singular_metric_reports_point():
    # amplitude far past the positivity bound flips an eigenvalue sign
    m = catalog("perturbed_torus(2)", {"amp": 2.0})
    with pytest.raises(SingularMetricError) as err:
        curvature_at(m, (0.4, 2.8))
    assert err.value.point is not None


def test_near_pole_evaluation_is_not_degenerate():
    # tiny positive determinants near the chart boundary are legitimate;
    # cot(theta)^2 cancellation costs ~1e-16/theta^2 in relative accuracy
    cb = curvature_at(catalog("sphere2"), (1e-4, 1.0))
    assert cb.scalar == pytest.approx(2.0, rel=1e-6)


def test_expression_domain_error_reports_point():
    chart = Chart("halfline", ("u",), ((0.5, 2.0),), (False,))
    from gbc.exprlang import parse
    comp = parse("ln(u - 1)")
    m = MetricField("bad_log", chart, ((comp,),), (1, 0))
    with pytest.raises(EvalError) as err:
        curvature_at(m, (0.6,))
    assert err.value.point == (0.6,)


def test_signature_counts_pseudo_riemannian():
    m = catalog("product(sphere2,sign_flip(sphere2))")
    assert m.signature == (2, 2)
    pts = random_chart_points(m, 10, seed=2)
    plus, minus = signature_counts(m, pts)
    assert np.all(plus == 2) and np.all(minus == 2)


def test_metric_field_requires_shared_symmetric_asts():
    from gbc.exprlang import parse
    chart = Chart("c", ("u", "v"), ((0, 1), (0, 1)), (False, False))
    one, off1, off2 = parse("1"), parse("u"), parse("u")
    with pytest.raises(ValueError):
        MetricField("bad", chart, ((one, off1), (off2, one)), (2, 0))


def test_metric_field_rejects_unknown_names():
    from gbc.exprlang import ExprError, parse
    chart = Chart("c", ("u",), ((0, 1),), (False,))
    with pytest.raises(ExprError):
        MetricField("bad", chart, ((parse("w"),),), (1, 0))


def test_product_renames_collide_free():
    m = catalog("product(sphere2,sphere2)")
    assert m.chart.coords == ("theta_1", "phi_1", "theta_2", "phi_2")
    assert [p for p, _ in m.parameters] == ["t_1", "t_2"]
