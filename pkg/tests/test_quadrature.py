"""Quadrature grids and integration: weight sums, closed-form areas,
topological integrals, convergence order, deterministic reduction, and the
cylinder integral relation."""

import math

import numpy as np
import pytest

from gbc import catalog, build_grid, integrate_density
from gbc.errors import ConfigError
from gbc.invariants import pfaffian_density, scalar_curvature_density, unit_density
from gbc.quadrature import (build_grid, check_signature,
                            cylinder_integral_check, node_densities,
                            tree_sum)


def test_torus_grid_nodes_and_weights():
    m = catalog("flat_torus(2)")
    grid = build_grid(m, (16, 16))
    assert len(grid) == 256
    w = (2.0 * math.pi / 16) ** 2
    assert np.abs(grid.weights - w).max() < 1e-15


def test_weights_sum_to_interval_measure():
    m = catalog("sphere2")
    grid = build_grid(m, (32, 64))
    # chart rectangle (0,pi) x (0,2pi) has measure 2 pi^2
    assert tree_sum(grid.weights) == pytest.approx(2.0 * math.pi ** 2, rel=1e-12)


def test_product_grid_node_count_multiplies():
    m = catalog("product(sphere2,sphere2)")
    grid = build_grid(m, (8, 10, 6, 4))
    assert len(grid) == 8 * 10 * 6 * 4


def test_resolution_validation():
    m = catalog("sphere2")
    with pytest.raises(ConfigError):
        build_grid(m, (1, 64))
    with pytest.raises(ConfigError):
        build_grid(m, (8, 8, 8))


def test_sphere_area():
    m = catalog("sphere2")
    grid = build_grid(m, (32, 64))
    area = integrate_density(m, unit_density(), grid)
    assert area == pytest.approx(4.0 * math.pi, rel=1e-10)


def test_einstein_hilbert_action_of_sphere():
    m = catalog("sphere2")
    grid = build_grid(m, (32, 64))
    total = integrate_density(m, scalar_curvature_density(), grid)
    assert total == pytest.approx(8.0 * math.pi, rel=1e-10)


def test_gauss_bonnet_sphere():
    m = catalog("sphere2")
    grid = build_grid(m, (32, 64))
    val = integrate_density(m, pfaffian_density(1), grid)
    assert abs(val - 2.0) < 1e-8


def test_gauss_bonnet_perturbed_torus():
    m = catalog("perturbed_torus(2)", {"amp": 0.3})
    grid = build_grid(m, (32, 32))
    val = integrate_density(m, pfaffian_density(1), grid)
    assert abs(val) < 1e-8


def test_gauss_bonnet_sign_flipped_sphere():
    # signature (0,2): integral is (-1)^(2/2) chi = -2
    m = catalog("sign_flip(sphere2)")
    grid = build_grid(m, (32, 64))
    val = integrate_density(m, pfaffian_density(1), grid)
    assert abs(val + 2.0) < 1e-8


def test_convergence_order_on_conformal_sphere():
    # doubling the resolution must cut the error by >= 100 (the round
    # metric integrates exactly, so probe a conformal family member)
    m = catalog("sphere2")
    errs = []
    for res in ((16, 32), (32, 64)):
        grid = build_grid(m, res)
        val = integrate_density(m, pfaffian_density(1), grid, params={"t": 0.5})
        errs.append(abs(val - 2.0))
    assert errs[0] > 1e-9   # coarse error is measurable
    assert errs[1] <= errs[0] / 100.0


def test_per_point_callable_matches_batch():
    m = catalog("sphere2")
    grid = build_grid(m, (8, 8))
    dens = pfaffian_density(1)
    batch_vals = integrate_density(m, dens, grid)
    scalar_fn = lambda bundle: dens(bundle)   # strips the .batch fast path
    point_vals = integrate_density(m, scalar_fn, grid)
    assert batch_vals == pytest.approx(point_vals, rel=1e-13)


def test_reduction_deterministic_across_workers():
    m = catalog("perturbed_torus(2)", {"amp": 0.25})
    grid = build_grid(m, (24, 24))
    vals = [integrate_density(m, pfaffian_density(1), grid, threads=t, chunk=64)
            for t in (1, 2, 4, 8)]
    assert all(v == vals[0] for v in vals[1:])


def test_node_densities_order_is_stable():
    m = catalog("sphere2")
    grid = build_grid(m, (8, 16))
    a = node_densities(m, pfaffian_density(1), grid, chunk=16, threads=4)
    b = node_densities(m, pfaffian_density(1), grid, chunk=16, threads=1)
    assert np.array_equal(a, b)


def test_tree_sum_matches_fsum():
    rng = np.random.default_rng(33)
    vals = rng.uniform(-1, 1, 10001)
    assert tree_sum(vals) == pytest.approx(math.fsum(vals), abs=1e-12)


def test_cylinder_integral_relation_sphere():
    rep = cylinder_integral_check(catalog("sphere2"), 1, resolution=(32, 64))
    assert rep.rel_error < 1e-8
    assert rep.rhs == pytest.approx(4.0 * math.pi, rel=1e-10)


def test_cylinder_integral_relation_flat_torus():
    rep = cylinder_integral_check(catalog("flat_torus(2)"), 1, resolution=(8, 8))
    assert abs(rep.lhs) < 1e-12 and abs(rep.rhs) < 1e-12
    assert rep.passed


def test_cylinder_integral_relation_scaled_sphere():
    # topological invariance: scaling the sphere leaves both sides at 4 pi
    rep = cylinder_integral_check(catalog("scaled(sphere2, lam=2)"), 1,
                                  resolution=(32, 64))
    assert rep.passed
    assert rep.lhs == pytest.approx(4.0 * math.pi, rel=1e-8)


def test_check_signature_pseudo_riemannian():
    m = catalog("product(sphere2,sign_flip(sphere2))")
    rep = check_signature(m, build_grid(m, (8, 8, 8, 8)))
    assert rep["signature_ok"]
