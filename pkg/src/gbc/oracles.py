"""Independent oracles for the two dual-route checks.

1. The delta-determinant contraction engine against the brute-force
   permutation-sum path (dense deltas, einsum) on random points of catalog
   metrics.
2. Jet derivatives against Richardson-extrapolated central finite
   differences of plain-value evaluation, over the catalog expression
   corpus.

Both routes share nothing but their inputs, so agreement certifies the
production path.
"""

import numpy as np

from . import exprlang
from .catalog import catalog
from .geometry import curvature_batch
from .invariants import (lovelock_bruteforce, lovelock_components,
                         random_chart_points, raw_invariant,
                         raw_invariant_bruteforce)
from .variational import random_perturbation

FD_STEPS = (1e-4, 1e-5)
# second differences divide roundoff by h^2, so the Hessian oracle needs
# larger steps to stay well under the 1e-6 agreement tolerance
FD_STEPS_HESS = (4e-3, 2e-3)


def fd_gradient(f, x, steps=FD_STEPS):
    """Richardson-extrapolated central-difference gradient of f at x."""
    x = np.asarray(x, dtype=float)
    n = len(x)

    def central(h):
        g = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
        return g

    h1, h2 = steps
    g1, g2 = central(h1), central(h2)
    return (h1 ** 2 * g2 - h2 ** 2 * g1) / (h1 ** 2 - h2 ** 2)


def fd_hessian(f, x, steps=FD_STEPS_HESS):
    """Richardson-extrapolated central-difference Hessian of f at x."""
    x = np.asarray(x, dtype=float)
    n = len(x)

    def second(h):
        hess = np.empty((n, n))
        f0 = f(x)
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = h
            hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h ** 2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = h
                hess[i, j] = (f(x + ei + ej) - f(x + ei - ej)
                              - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h ** 2)
                hess[j, i] = hess[i, j]
        return hess

    h1, h2 = steps
    m1, m2 = second(h1), second(h2)
    return (h1 ** 2 * m2 - h2 ** 2 * m1) / (h1 ** 2 - h2 ** 2)


_ORACLE_METRICS = ("sphere2", "sphere3", "perturbed_torus(4)", "perturbed_torus(5)")


def engine_vs_bruteforce(points=20, seed=0, ks=(1, 2), metrics=_ORACLE_METRICS):
    """Max relative deviation between the plan engine and the dense-delta
    brute force, per (metric, k), on seeded random points."""
    rows = []
    worst = 0.0
    for name in metrics:
        m = catalog(name)
        pts = random_chart_points(m, points, seed)
        cb = curvature_batch(m, pts)
        for k in ks:
            raw_eng = raw_invariant(cb, k)
            raw_brt = raw_invariant_bruteforce(cb.riem_mixed, k)
            scale_r = max(float(np.abs(raw_brt).max()), 1e-14)
            dev_r = float(np.abs(raw_eng - raw_brt).max()) / scale_r
            s_eng, _ = lovelock_components(cb.riem_mixed, cb.g, k)
            s_brt = lovelock_bruteforce(cb.riem_mixed, cb.g, k)
            scale_s = max(float(np.abs(s_brt).max()), 1e-14)
            dev_s = float(np.abs(s_eng - s_brt).max()) / scale_s
            worst = max(worst, dev_r, dev_s)
            rows.append({"metric": name, "k": k, "raw_deviation": dev_r,
                         "lovelock_deviation": dev_s})
    return {"cases": rows, "max_deviation": worst}


def expression_corpus(seed=0):
    """Non-constant component expressions from the catalog plus seeded
    perturbation directions, each with evaluation bindings metadata."""
    names = ["sphere2", "sphere3", "sphere4", "flat_torus(3)",
             "perturbed_torus(2)", "perturbed_torus(3)", "perturbed_torus(4)",
             "product(sphere2,sphere2)", "cylinder(sphere2)"]
    corpus = []
    for name in names:
        m = catalog(name)
        # nonzero family parameters exercise every term of the trees
        params = {p: (0.2 if d == 0.0 else d) for p, d in m.parameters}
        seen = set()
        for i in range(m.dim):
            for j in range(i, m.dim):
                node = m.components[i][j]
                if id(node) in seen or not node.variables():
                    continue
                seen.add(id(node))
                corpus.append((m, node, params))
        h = random_perturbation(m, seed + m.dim)
        for row in h.components:
            entry = next((e for e in row if e.variables()), None)
            if entry is not None:
                corpus.append((m, entry, params))
                break
    return corpus


def jets_vs_finite_differences(points=3, seed=0):
    """Max relative deviation of jet gradients/Hessians from central finite
    differences over the expression corpus."""
    worst = 0.0
    count = 0
    for m, node, params in expression_corpus(seed):
        pts = random_chart_points(m, points, seed + count, margin=0.2)
        coords = m.chart.coords

        def plain(x):
            bindings = dict(zip(coords, x))
            bindings.update(params)
            return float(exprlang.eval_expr(node, bindings))

        from .jets import jet_var
        for p in range(points):
            x = pts[p]
            bindings = {name: jet_var(i, float(x[i]), m.dim)
                        for i, name in enumerate(coords)}
            bindings.update(params)
            jet = exprlang.eval_expr(node, bindings)
            grad_fd = fd_gradient(plain, x)
            hess_fd = fd_hessian(plain, x)
            ref = max(1.0, float(np.abs(jet.grad).max()),
                      float(np.abs(jet.hess).max()))
            dev = max(float(np.abs(jet.grad - grad_fd).max()),
                      float(np.abs(jet.hess - hess_fd).max())) / ref
            worst = max(worst, dev)
        count += 1
    return {"expressions": count, "points_per_expression": points,
            "max_deviation": worst}
