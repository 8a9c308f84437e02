"""Compiled (numba) implementations of the hot inner loops.

Every function here has a vectorized twin in ``_kernels_np``; the dispatch
lives in the modules that call them. Tie groups are always merged before a
prefix value is read, which is what makes the closed-ball semantics exact on
duplicated points.
"""

from __future__ import annotations

import numpy as np

from .backend import njit, prange


@njit(cache=True)
def theta2_pq(dist_sorted, order, p, q):
    """Ball divergence between two atomic measures p, q on a shared support.

    ``dist_sorted[u, k]`` is the distance from u to its k-th nearest support
    point, ``order[u, k]`` that point's index. One pass of prefix sums per
    center u; a bracket is read only at the end of its tie group.
    """
    n = p.shape[0]
    total = 0.0
    for u in range(n):
        pu = p[u]
        qu = q[u]
        if pu == 0.0 and qu == 0.0:
            continue
        csum = 0.0
        sa = 0.0
        sb = 0.0
        k = 0
        while k < n:
            d0 = dist_sorted[u, k]
            gp = 0.0
            gq = 0.0
            m = k
            while m < n and dist_sorted[u, m] == d0:
                idx = order[u, m]
                gp += p[idx]
                gq += q[idx]
                m += 1
            csum += gp - gq
            b2 = csum * csum
            sa += b2 * gp
            sb += b2 * gq
            k = m
        total += pu * sa + qu * sb
    return total


@njit(cache=True, parallel=True)
def anchor_values(dist_sorted, order, alpha, beta, out):
    """Per-anchor ball divergence between the rows of alpha and beta."""
    n = alpha.shape[0]
    for s in prange(n):
        out[s] = theta2_pq(dist_sorted, order, alpha[s], beta[s])


@njit(cache=True)
def point_mass_gap_pq(dist_sorted, order, p, q):
    """Integral over p of the ball divergence between a point mass and q.

    Computes sum_u p_u * Theta2(delta_u, q) without forming the n one-hot
    vectors: for a ball B(a, d(a,b)), sum_u p_u (1{u in B} - q(B))^2 =
    cp*(1-cq)^2 + (1-cp)*cq^2 with cp, cq the p- and q-masses of the ball.
    """
    n = p.shape[0]
    term1 = 0.0
    for u in range(n):
        pu = p[u]
        if pu == 0.0:
            continue
        cq0 = 0.0
        k = 0
        while k < n and dist_sorted[u, k] == 0.0:
            cq0 += q[order[u, k]]
            k += 1
        term1 += pu * (1.0 - cq0) * (1.0 - cq0)
    term2 = 0.0
    for a in range(n):
        qa = q[a]
        if qa == 0.0:
            continue
        cp = 0.0
        cq = 0.0
        acc = 0.0
        k = 0
        while k < n:
            d0 = dist_sorted[a, k]
            gp = 0.0
            gq = 0.0
            m = k
            while m < n and dist_sorted[a, m] == d0:
                idx = order[a, m]
                gp += p[idx]
                gq += q[idx]
                m += 1
            cp += gp
            cq += gq
            bracket = cp * (1.0 - cq) * (1.0 - cq) + (1.0 - cp) * cq * cq
            acc += bracket * gq
            k = m
        term2 += qa * acc
    return term1 + term2


@njit(cache=True, parallel=True)
def point_mass_gap_values(dist_sorted, order, alpha, beta, out):
    n = alpha.shape[0]
    for s in prange(n):
        out[s] = point_mass_gap_pq(dist_sorted, order, alpha[s], beta[s])


@njit(cache=True)
def _eta(dist, x, y, z1, z2):
    r = dist[x, y]
    if dist[x, z1] <= r and dist[x, z2] <= r:
        return 1.0
    return 0.0


@njit(cache=True)
def _phi(dist, u1, u2, u3, u4, v1, v2, v3, v4):
    a = (
        _eta(dist, u1, u2, u3, u4)
        + _eta(dist, u1, u2, v3, v4)
        - _eta(dist, u1, u2, u3, v3)
        - _eta(dist, u1, u2, u4, v4)
    )
    c = (
        _eta(dist, v1, v2, v3, v4)
        + _eta(dist, v1, v2, u3, u4)
        - _eta(dist, v1, v2, v3, u3)
        - _eta(dist, v1, v2, v4, u4)
    )
    return a + c


@njit(cache=True)
def _phi_sym(dist, uu, vv, perms):
    s = 0.0
    for i in range(24):
        u1 = uu[perms[i, 0]]
        u2 = uu[perms[i, 1]]
        u3 = uu[perms[i, 2]]
        u4 = uu[perms[i, 3]]
        for j in range(24):
            s += _phi(
                dist,
                u1,
                u2,
                u3,
                u4,
                vv[perms[j, 0]],
                vv[perms[j, 1]],
                vv[perms[j, 2]],
                vv[perms[j, 3]],
            )
    return s / 576.0


@njit(cache=True, parallel=True)
def ustat_terms_incomplete(dist, wyz, wz, tuples, perms, prefactor, out):
    """Weighted symmetrized core for each sampled 9-tuple of distinct indices.

    ``tuples[b] = (i1, a1..a4, b1..b4)``: i1 is the query point, the first
    block is weighted in (y, z), the second in z only.
    """
    nb = tuples.shape[0]
    for b in prange(nb):
        i1 = tuples[b, 0]
        w = 1.0
        for ell in range(1, 5):
            w *= wyz[i1, tuples[b, ell]]
        for ell in range(5, 9):
            w *= wz[i1, tuples[b, ell]]
        if w == 0.0:
            out[b] = 0.0
        else:
            out[b] = prefactor * w * _phi_sym(dist, tuples[b, 1:5], tuples[b, 5:9], perms)


@njit(cache=True)
def ustat_exact_sum(dist, wyz, wz, prefactor):
    """Sum of the weighted core over all ordered distinct 9-tuples.

    Summing the unsymmetrized core over all within-block orderings equals
    summing the symmetrized one, so the cheap core is used here.
    """
    n = dist.shape[0]
    used = np.zeros(n, np.bool_)
    total = 0.0
    for i1 in range(n):
        used[i1] = True
        for a1 in range(n):
            if used[a1]:
                continue
            used[a1] = True
            w1 = wyz[i1, a1]
            for a2 in range(n):
                if used[a2]:
                    continue
                used[a2] = True
                w2 = w1 * wyz[i1, a2]
                for a3 in range(n):
                    if used[a3]:
                        continue
                    used[a3] = True
                    w3 = w2 * wyz[i1, a3]
                    for a4 in range(n):
                        if used[a4]:
                            continue
                        used[a4] = True
                        w4 = w3 * wyz[i1, a4]
                        for b1 in range(n):
                            if used[b1]:
                                continue
                            used[b1] = True
                            w5 = w4 * wz[i1, b1]
                            for b2 in range(n):
                                if used[b2]:
                                    continue
                                used[b2] = True
                                w6 = w5 * wz[i1, b2]
                                for b3 in range(n):
                                    if used[b3]:
                                        continue
                                    used[b3] = True
                                    w7 = w6 * wz[i1, b3]
                                    for b4 in range(n):
                                        if used[b4]:
                                            continue
                                        w8 = w7 * wz[i1, b4]
                                        if w8 != 0.0:
                                            total += w8 * _phi(
                                                dist, a1, a2, a3, a4, b1, b2, b3, b4
                                            )
                                    used[b3] = False
                                used[b2] = False
                            used[b1] = False
                        used[a4] = False
                    used[a3] = False
                used[a2] = False
            used[a1] = False
        used[i1] = False
    return total * prefactor


@njit(cache=True)
def mh_swap_chain(logp, perm, pair_i, pair_j, log_u):
    """Metropolis pairwise-swap chain over permutations, run in place.

    ``logp[i, s]`` is the log conditional density of x_i at slot s. The
    proposal draws an unordered pair uniformly; all randomness comes in via
    the pre-drawn ``pair_i``, ``pair_j``, ``log_u`` arrays so the chain is
    backend-independent.
    """
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
