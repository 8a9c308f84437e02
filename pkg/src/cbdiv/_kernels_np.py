"""Vectorized numpy fallbacks for the compiled kernels in ``_kernels_nb``.

Selected via the ``CBD_NUMBA=0`` env flag or ``backend.use("numpy")``. Same
contracts, same tie handling; only the execution strategy differs.
"""

from __future__ import annotations

import itertools

import numpy as np


def tie_group_ends(dist_sorted: np.ndarray) -> np.ndarray:
    """Index of the last position of each tie group, per row.

    Positions sharing a distance value map to the final position of their
    group, so prefix sums read there include every tied point (closed ball).
    """
    n = dist_sorted.shape[1]
    is_end = np.ones(dist_sorted.shape, dtype=bool)
    is_end[:, :-1] = dist_sorted[:, 1:] != dist_sorted[:, :-1]
    idx = np.where(is_end, np.arange(n)[None, :], n)
    return np.minimum.accumulate(idx[:, ::-1], axis=1)[:, ::-1]


def _brackets(order, ends, g):
    csum = np.cumsum(g[order], axis=1)
    return np.take_along_axis(csum, ends, axis=1)


def theta2_pq(dist_sorted, order, p, q, ends=None):
    if ends is None:
        ends = tie_group_ends(dist_sorted)
    b2 = _brackets(order, ends, p - q) ** 2
    sa = (b2 * p[order]).sum(axis=1)
    sb = (b2 * q[order]).sum(axis=1)
    return float(p @ sa + q @ sb)


def anchor_values(dist_sorted, order, alpha, beta, out):
    ends = tie_group_ends(dist_sorted)
    n = alpha.shape[0]
    for s in range(n):
        out[s] = theta2_pq(dist_sorted, order, alpha[s], beta[s], ends=ends)


def point_mass_gap_pq(dist_sorted, order, p, q, ends=None):
    if ends is None:
        ends = tie_group_ends(dist_sorted)
    q_sorted = q[order]
    p_sorted = p[order]
    cq0 = (q_sorted * (dist_sorted == 0.0)).sum(axis=1)
    term1 = float(p @ ((1.0 - cq0) ** 2))
    cp = np.take_along_axis(np.cumsum(p_sorted, axis=1), ends, axis=1)
    cq = np.take_along_axis(np.cumsum(q_sorted, axis=1), ends, axis=1)
    bracket = cp * (1.0 - cq) ** 2 + (1.0 - cp) * cq**2
    term2 = float(q @ (bracket * q_sorted).sum(axis=1))
    return term1 + term2


def point_mass_gap_values(dist_sorted, order, alpha, beta, out):
    ends = tie_group_ends(dist_sorted)
    n = alpha.shape[0]
    for s in range(n):
        out[s] = point_mass_gap_pq(dist_sorted, order, alpha[s], beta[s], ends=ends)


def _eta_arrays(dist, x, y, z1, z2):
    r = dist[x, y]
    return ((dist[x, z1] <= r) & (dist[x, z2] <= r)).astype(np.float64)


def _phi_arrays(dist, u1, u2, u3, u4, v1, v2, v3, v4):
    a = (
        _eta_arrays(dist, u1, u2, u3, u4)
        + _eta_arrays(dist, u1, u2, v3, v4)
        - _eta_arrays(dist, u1, u2, u3, v3)
        - _eta_arrays(dist, u1, u2, u4, v4)
    )
    c = (
        _eta_arrays(dist, v1, v2, v3, v4)
        + _eta_arrays(dist, v1, v2, u3, u4)
        - _eta_arrays(dist, v1, v2, v3, u3)
        - _eta_arrays(dist, v1, v2, v4, u4)
    )
    return a + c


def ustat_terms_incomplete(dist, wyz, wz, tuples, perms, prefactor, out):
    i1 = tuples[:, 0]
    w = wyz[i1, tuples[:, 1]]
    for ell in range(2, 5):
        w = w * wyz[i1, tuples[:, ell]]
    for ell in range(5, 9):
        w = w * wz[i1, tuples[:, ell]]
    uu = tuples[:, 1:5]
    vv = tuples[:, 5:9]
    phi_sum = np.zeros(tuples.shape[0])
    for tau in perms:
        u = [uu[:, tau[k]] for k in range(4)]
        for sigma in perms:
            v = [vv[:, sigma[k]] for k in range(4)]
            phi_sum += _phi_arrays(dist, u[0], u[1], u[2], u[3], v[0], v[1], v[2], v[3])
    out[:] = prefactor * w * (phi_sum / 576.0)


def ustat_exact_sum(dist, wyz, wz, prefactor, chunk=200_000):
    n = dist.shape[0]
    total = 0.0
    it = itertools.permutations(range(n), 9)
    while True:
        block = np.array(list(itertools.islice(it, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        i1 = block[:, 0]
        w = wyz[i1, block[:, 1]]
        for ell in range(2, 5):
            w = w * wyz[i1, block[:, ell]]
        for ell in range(5, 9):
            w = w * wz[i1, block[:, ell]]
        phi = _phi_arrays(
            dist,
            block[:, 1],
            block[:, 2],
            block[:, 3],
            block[:, 4],
            block[:, 5],
            block[:, 6],
            block[:, 7],
            block[:, 8],
        )
        total += float(np.sum(w * phi))
    return total * prefactor


def mh_swap_chain(logp, perm, pair_i, pair_j, log_u):
    steps = pair_i.shape[0]
    for t in range(steps):
        i = pair_i[t]
        j = pair_j[t]
        pi = perm[i]
        pj = perm[j]
        gain = logp[pj, i] + logp[pi, j] - logp[pi, i] - logp[pj, j]
        if gain >= 0.0 or log_u[t] <= gain:
            perm[i] = pj
            perm[j] = pi
