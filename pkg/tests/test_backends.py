"""Backend equivalence: the compiled kernel and the numpy fallback must
agree on curvature fields and delta contractions."""

import numpy as np
import pytest

from gbc import backend, catalog
from gbc.geometry import curvature_batch
from gbc.invariants import random_chart_points
from gbc.tenalg import lovelock_plan, raw_plan

BACKENDS = sorted(backend.available_backends())


def _random_inputs(rng, npts, n):
    a = rng.uniform(-0.2, 0.2, (npts, n, n))
    g = (a + a.transpose(0, 2, 1)) + 2.0 * np.eye(n)
    dg = rng.uniform(-0.5, 0.5, (npts, n, n, n))
    dg = dg + dg.transpose(0, 2, 1, 3)
    ddg = rng.uniform(-0.5, 0.5, (npts, n, n, n, n))
    ddg = ddg + ddg.transpose(0, 2, 1, 3, 4)
    ddg = 0.5 * (ddg + ddg.transpose(0, 1, 2, 4, 3))
    return (np.ascontiguousarray(g), np.ascontiguousarray(dg),
            np.ascontiguousarray(ddg), np.ascontiguousarray(np.linalg.inv(g)))


def test_at_least_numpy_available():
    assert "numpy" in BACKENDS


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_curvature_fields_agree(n):
    rng = np.random.default_rng(50 + n)
    args = _random_inputs(rng, 7, n)
    results = {name: backend.get_kernels(name).curvature_fields(*args)
               for name in BACKENDS}
    ref = results["numpy"]
    other = results["cython"]
    labels = ("gamma", "riem_low", "riem_mixed", "ricci", "scalar")
    for lab, a, b in zip(labels, ref, other):
        a, b = np.asarray(a), np.asarray(b)
        scale = max(np.abs(a).max(), 1.0)
        assert np.abs(a - b).max() / scale < 1e-12, lab


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (4, 2), (5, 2)])
def test_contraction_kernels_agree(n, k):
    rng = np.random.default_rng(60 + n + 10 * k)
    rm = np.ascontiguousarray(rng.uniform(-1, 1, (6, n, n, n, n)))
    g = rng.uniform(-0.2, 0.2, (6, n, n))
    g = np.ascontiguousarray(g + g.transpose(0, 2, 1) + 2.0 * np.eye(n))
    rp = raw_plan(n, k)
    lp = lovelock_plan(n, k)
    raws, loves = {}, {}
    for name in BACKENDS:
        kern = backend.get_kernels(name)
        raws[name] = np.asarray(kern.raw_sum(rm, rp.b, rp.c, rp.sign, k))
        loves[name] = np.asarray(kern.lovelock_sum(rm, g, lp.b, lp.c, lp.j,
                                                   lp.i1, lp.sign, k))
    scale_r = max(np.abs(raws["numpy"]).max(), 1.0)
    assert np.abs(raws["numpy"] - raws["cython"]).max() / scale_r < 1e-12
    scale_l = max(np.abs(loves["numpy"]).max(), 1.0)
    assert np.abs(loves["numpy"] - loves["cython"]).max() / scale_l < 1e-12


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
def test_full_pipeline_agrees_on_catalog_metric():
    m = catalog("perturbed_torus(3)", {"amp": 0.2})
    pts = random_chart_points(m, 40, seed=77)
    batches = {name: curvature_batch(m, pts, kernels=backend.get_kernels(name))
               for name in BACKENDS}
    a, b = batches["numpy"], batches["cython"]
    for field in ("gamma", "riem_low", "riem_mixed", "ricci", "scalar"):
        va, vb = getattr(a, field), getattr(b, field)
        scale = max(np.abs(va).max(), 1.0)
        assert np.abs(va - vb).max() / scale < 1e-12, field


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("GBC_THREADS", "3")
    assert backend.thread_count() == 3
    monkeypatch.setenv("GBC_THREADS", "")
    assert backend.thread_count() >= 1
    monkeypatch.setenv("GBC_THREADS", "zebra")
    with pytest.raises(RuntimeError):
        backend.thread_count()
