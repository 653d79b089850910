"""Pure-numpy implementations of the hot kernels.

These are the fallback for the compiled extension: batched einsum over a
chunk of points.  Index conventions (shared with the compiled kernel):

    g[p, i, j]            metric components
    dg[p, i, j, k]        d_k g_ij
    ddg[p, i, j, k, l]    d_k d_l g_ij
    gamma[p, a, b, c]     Gamma^a_bc
    riem_up[p, a, b, c, d]    R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb
                              + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    riem_low[p, a, b, c, d]   g_ae R^e_bcd
    riem_mixed[p, a, b, c, d] R^{ab}_cd = g^{bf} R^a_fcd
"""

import numpy as np


def curvature_fields(g, dg, ddg, g_inv):
    """Per-point curvature data for a batch of points.

    Returns (gamma, riem_low, riem_mixed, ricci, scalar).
    """
    # Gamma_low[p,d,b,c] = (dg[p,d,c,b] + dg[p,b,d,c] - dg[p,b,c,d]) / 2
    # (einsum relabeling: the input subscript names the source axes)
    gam_low = 0.5 * (np.einsum("pdcb->pdbc", dg) + np.einsum("pbdc->pdbc", dg)
                     - np.einsum("pbcd->pdbc", dg))
    gamma = np.einsum("pad,pdbc->pabc", g_inv, gam_low)
    # d_c g^{ae} = -g^{af} g^{eh} d_c g_fh
    dginv = -np.einsum("paf,peh,pfhc->paec", g_inv, g_inv, dg, optimize=True)
    dgam_low = 0.5 * (np.einsum("pdcbe->pdbce", ddg)
                      + np.einsum("pbdce->pdbce", ddg)
                      - np.einsum("pbcde->pdbce", ddg))
    # d_e Gamma^a_bc
    dgamma = (np.einsum("pade,pdbc->pabce", dginv, gam_low)
              + np.einsum("pad,pdbce->pabce", g_inv, dgam_low))
    riem_up = (np.einsum("padbc->pabcd", dgamma)
               - np.einsum("pacbd->pabcd", dgamma)
               + np.einsum("pace,pedb->pabcd", gamma, gamma)
               - np.einsum("pade,pecb->pabcd", gamma, gamma))
    riem_low = np.einsum("pae,pebcd->pabcd", g, riem_up)
    riem_mixed = np.einsum("pbf,pafcd->pabcd", g_inv, riem_up)
    ricci = np.einsum("pabad->pbd", riem_up)
    scalar = np.einsum("pbd,pbd->p", g_inv, ricci)
    return gamma, riem_low, riem_mixed, ricci, scalar


def _plan_products(rm, b, c, sign, k):
    """sign_t * prod_j R^{b,b}_{c,c} for every plan row; shape (N, T)."""
    npts = rm.shape[0]
    if b.shape[0] == 0:
        return np.zeros((npts, 0))
    w = np.broadcast_to(sign, (npts, sign.shape[0])).copy()
    for j in range(k):
        w *= rm[:, b[:, 2 * j], b[:, 2 * j + 1], c[:, 2 * j], c[:, 2 * j + 1]]
    return w


def raw_sum(rm, b, c, sign, k):
    """Batched raw_k contraction from a precomputed delta plan."""
    return _plan_products(rm, b, c, sign, k).sum(axis=1)


def lovelock_sum(rm, g, b, c, j, i1, sign, k):
    """Batched unsymmetrized S_{2,k} contraction from a delta plan."""
    npts, n = g.shape[0], g.shape[1]
    if b.shape[0] == 0:
        return np.zeros((npts, n, n))
    w = _plan_products(rm, b, c, sign, k)
    v = np.zeros((npts, n, n))
    # V[p, j_t, i1_t] += w[p, t]
    np.add.at(v, (slice(None), j, i1), w)
    # S[p, i1, i2] = sum_j V[p, j, i1] g[p, j, i2]
    return np.einsum("pji,pjk->pik", v, g)
