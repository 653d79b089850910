"""Variational checks: the k = 0 calibration that pins the pairing
convention, the Lovelock identity for k = 1, the vanishing of derivatives
in dimension 2k, weight forcing, and family sweeps."""

import numpy as np
import pytest

from gbc import catalog, build_grid
from gbc.variational import (DEFAULT_EPS, ELReport, el_check, el_pairing,
                             family_sweep, gateaux_derivative,
                             perturbed_field, random_perturbation,
                             richardson_table, weight_forcing_check,
                             zero_perturbation)


@pytest.fixture(scope="module")
def torus2():
    return catalog("perturbed_torus(2)", {"amp": 0.3})


@pytest.fixture(scope="module")
def torus2_grid(torus2):
    return build_grid(torus2, (32, 32))


def test_richardson_recovers_quadratic_model():
    eps = (1e-2, 5e-3, 2.5e-3)
    d0, c = 1.234, 17.0
    values = [d0 + c * e ** 2 for e in eps]
    table = richardson_table(eps, values)
    assert table[-1][-1] == pytest.approx(d0, abs=1e-12)


def test_zero_perturbation_gives_exact_zero(torus2, torus2_grid):
    h = zero_perturbation(torus2)
    res = gateaux_derivative(torus2, h, 1, torus2_grid)
    assert res.value == 0.0
    assert all(c == 0.0 for c in res.central)


def test_volume_variation_matches_half_trace(torus2, torus2_grid):
    """k = 0 oracle: dVol(h) = (1/2) integral of g^{ab} h_ab vol, computed
    here by direct quadrature, independent of el_pairing."""
    from gbc.geometry import curvature_batch
    from gbc.quadrature import integrate_node_values
    from gbc.variational import _evaluate_perturbation

    h = random_perturbation(torus2, 5)
    fd = gateaux_derivative(torus2, h, 0, torus2_grid)
    batch = curvature_batch(torus2, torus2_grid.points)
    hv = _evaluate_perturbation(h, torus2, torus2_grid.points)
    dens = 0.5 * np.einsum("pab,pab->p", batch.g_inv, hv)
    direct = integrate_node_values(torus2_grid, dens, batch.vol_density)
    assert fd.value == pytest.approx(direct, rel=1e-9)
    assert el_pairing(torus2, h, 0, torus2_grid) == pytest.approx(direct, rel=1e-13)


def test_k0_calibration_ten_directions(torus2, torus2_grid):
    sphere = catalog("sphere2")
    sgrid = build_grid(sphere, (24, 48))
    for seed in range(10):
        rep = el_check(torus2, random_perturbation(torus2, seed), 0,
                       torus2_grid, tolerance=1e-8)
        assert rep.passed, rep
        rep = el_check(sphere, random_perturbation(sphere, seed + 50), 0,
                       sgrid, tolerance=1e-8)
        assert rep.passed, rep


@pytest.mark.parametrize("name,params,res", [
    ("perturbed_torus(3)", {"amp": 0.15}, (16, 16, 16)),
    ("perturbed_torus(4)", {"amp": 0.1}, (12, 12, 12, 12)),
])
def test_lovelock_identity_k1(name, params, res):
    m = catalog(name, params)
    grid = build_grid(m, res)
    for seed in (101, 102):
        h = random_perturbation(m, seed)
        rep = el_check(m, h, 1, grid, tolerance=1e-4)
        assert rep.passed, rep
        assert rep.ratio == pytest.approx(1.0, abs=1e-3)


def test_pairing_vanishes_identically_in_dim2(torus2, torus2_grid):
    h = random_perturbation(torus2, 7)
    assert el_pairing(torus2, h, 1, torus2_grid) == 0.0


def test_gateaux_vanishes_in_dim2(torus2, torus2_grid):
    sphere = catalog("sphere2")
    sgrid = build_grid(sphere, (32, 64))
    for seed in (201, 202, 203):
        fd_t = gateaux_derivative(torus2, random_perturbation(torus2, seed),
                                  1, torus2_grid)
        assert abs(fd_t.value) < 1e-6
        fd_s = gateaux_derivative(sphere, random_perturbation(sphere, seed + 10),
                                  1, sgrid)
        assert abs(fd_s.value) < 1e-6


def test_weight_forcing_cases():
    cases = [
        ("sphere2", 1, (32, 64), 0),
        ("cylinder(sphere2)", 1, (32, 64, 8), 1),
        ("product(sphere2,sphere2)", 2, (12, 24, 12, 24), 0),
    ]
    for name, k, res, exponent in cases:
        m = catalog(name)
        rep = weight_forcing_check(m, k, build_grid(m, res), lambdas=(0.5, 2.0),
                                   tolerance=1e-10)
        assert rep.expected_exponent == exponent
        assert rep.scale_invariant == (exponent == 0)
        assert rep.passed, rep


def test_weight_forcing_lambda_one_exact():
    m = catalog("sphere2")
    rep = weight_forcing_check(m, 1, build_grid(m, (16, 32)), lambdas=(1.0,))
    assert rep.max_deviation == 0.0


def test_family_sweep_conformal_sphere():
    m = catalog("sphere2")
    grid = build_grid(m, (32, 64))
    res = family_sweep(m, 1, grid, {"t": [0.0, 0.1, 0.2, 0.3]}, tolerance=1e-6)
    assert res.passed
    assert res.spread < 1e-6
    for row in res.rows:
        assert row.action == pytest.approx(2.0, abs=1e-6)


def test_family_sweep_perturbed_torus_expected_zero(torus2):
    grid = build_grid(torus2, (32, 32))
    res = family_sweep(torus2, 1, grid, {"amp": [0.06, 0.12, 0.18, 0.24, 0.3]},
                       tolerance=1e-7, expected=0.0, assert_mode="expected")
    assert res.passed
    assert res.max_abs_deviation < 1e-7


def test_family_sweep_flags_degenerate_members(torus2):
    grid = build_grid(torus2, (8, 8))
    res = family_sweep(torus2, 1, grid, {"amp": [0.1, 2.5]}, tolerance=1e-6)
    flags = [row.degenerate for row in res.rows]
    assert flags == [False, True]
    assert res.rows[1].action is None


def test_family_sweep_rejects_unknown_parameter(torus2):
    grid = build_grid(torus2, (8, 8))
    with pytest.raises(ValueError):
        family_sweep(torus2, 1, grid, {"zeta": [0.1]})


def test_perturbed_field_binds_amplitude(torus2):
    h = random_perturbation(torus2, 3)
    fam = perturbed_field(torus2, h)
    assert ("eps", 0.0) in fam.parameters
    from gbc.geometry import metric_values
    pts = np.array([[0.3, 1.2]])
    g0 = metric_values(fam, pts, {"eps": 0.0})
    gbase = metric_values(torus2, pts)
    assert np.abs(g0 - gbase).max() < 1e-15
    from gbc.variational import _evaluate_perturbation
    hv = _evaluate_perturbation(h, torus2, pts)
    g1 = metric_values(fam, pts, {"eps": 0.5})
    assert np.abs(g1 - (gbase + 0.5 * hv)).max() < 1e-14


def test_perturbation_name_collision_rejected(torus2):
    h = random_perturbation(torus2, 3, eps_name="amp")
    with pytest.raises(ValueError):
        perturbed_field(torus2, h)


def test_el_report_fields(torus2, torus2_grid):
    rep = el_check(torus2, random_perturbation(torus2, 9), 0, torus2_grid,
                   tolerance=1e-8)
    assert isinstance(rep, ELReport)
    assert rep.eps == DEFAULT_EPS
    assert len(rep.central) == len(DEFAULT_EPS)
