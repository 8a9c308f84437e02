"""Ball-divergence building blocks.

The closed-ball indicator, its paired product, the degree-(4,4) core and its
two-block symmetrization, the ball divergence between weighted empirical
measures on a shared support, and the per-anchor conditional statistic. Each
fast routine has a literal brute-force twin used as an oracle in the tests;
the brute-force code is deliberately naive and shares nothing with the fast
path.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import _kernels_nb, _kernels_np, backend
from .data import Dataset, DistanceOrder, rank_order
from .errors import InvalidInputError
from .kernels import Bandwidths, KernelSpec, weights_yz, weights_z

PERMS4 = np.array(list(itertools.permutations(range(4))), dtype=np.int64)


def _kern():
    return _kernels_nb if backend.using_numba() else _kernels_np


def delta(dist: np.ndarray, u: int, v: int, r: int) -> int:
    """Closed-ball indicator: is point r within distance d(u, v) of u?"""
    return int(dist[u, r] <= dist[u, v])


def eta(dist: np.ndarray, x: int, y: int, z1: int, z2: int) -> int:
    """Both z1 and z2 fall in the closed ball around x with radius d(x, y)."""
    return delta(dist, x, y, z1) * delta(dist, x, y, z2)


def phi_core(dist: np.ndarray, u_idx, v_idx) -> float:
    """Degree-(4,4) core whose mean over two iid samples is the ball divergence."""
    u1, u2, u3, u4 = u_idx
    v1, v2, v3, v4 = v_idx
    a = (
        eta(dist, u1, u2, u3, u4)
        + eta(dist, u1, u2, v3, v4)
        - eta(dist, u1, u2, u3, v3)
        - eta(dist, u1, u2, u4, v4)
    )
    c = (
        eta(dist, v1, v2, v3, v4)
        + eta(dist, v1, v2, u3, u4)
        - eta(dist, v1, v2, v3, u3)
        - eta(dist, v1, v2, v4, u4)
    )
    return float(a + c)


def phi_sym(dist: np.ndarray, u_idx, v_idx) -> float:
    """Average of ``phi_core`` over all 4! x 4! within-block orderings."""
    uu = np.asarray(u_idx, dtype=np.int64)
    vv = np.asarray(v_idx, dtype=np.int64)
    if uu.shape != (4,) or vv.shape != (4,):
        raise InvalidInputError("phi_sym expects two blocks of four indices")
    if backend.using_numba():
        return float(_kernels_nb._phi_sym(dist, uu, vv, PERMS4))
    total = 0.0
    for tau in PERMS4:
        for sigma in PERMS4:
            total += phi_core(dist, uu[tau], vv[sigma])
    return total / 576.0


def _check_prob(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidInputError(f"{name} must be a vector")
    if np.any(p < 0):
        raise InvalidInputError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > 1e-12:
        raise InvalidInputError(f"{name} must sum to 1 (got {p.sum()!r})")
    return p


def theta2_weighted(dist: np.ndarray, p, q, order: DistanceOrder | None = None) -> float:
    """Ball divergence between two weighted empirical measures.

    Both measures live on the shared support whose pairwise distances are
    ``dist``; zero iff p == q as measures.
    """
    p = _check_prob(p, "p")
    q = _check_prob(q, "q")
    if dist.shape[0] != p.shape[0] or p.shape != q.shape:
        raise InvalidInputError("p, q and dist must share one support")
    if order is None:
        order = rank_order(dist)
    dist_sorted = np.take_along_axis(dist, order.order, axis=1)
    return float(_kern().theta2_pq(dist_sorted, order.order, p, q))


def theta2_weighted_bruteforce(dist: np.ndarray, p, q) -> float:
    """Literal evaluation of the ball divergence over all (u, v, r) triples."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n = p.shape[0]
    total = 0.0
    for u in range(n):
        for v in range(n):
            bracket = 0.0
            for r in range(n):
                if dist[u, r] <= dist[u, v]:
                    bracket += p[r] - q[r]
            total += bracket * bracket * (p[u] * p[v] + q[u] * q[v])
    return total


def anchor_weights(ds: Dataset, s: int, h1: float, h2: float, spec: KernelSpec = KernelSpec()):
    """Normalized kernel weights (in (y,z) and in z) at anchor s."""
    wyz, tot_yz = weights_yz(ds, ds.yz[s], h1, spec)
    wz, tot_z = weights_z(ds, ds.z[s], h2, spec)
    if tot_yz <= 0.0 or tot_z <= 0.0:
        raise InvalidInputError(f"anchor {s} has zero total kernel weight")
    return wyz / tot_yz, wz / tot_z


def pointwise_cbd(
    ds: Dataset,
    dist: np.ndarray,
    order: DistanceOrder,
    s: int,
    h1: float,
    h2: float,
    spec: KernelSpec = KernelSpec(),
) -> float:
    """Conditional statistic at anchor s via the sorted prefix-sum path."""
    alpha, beta = anchor_weights(ds, s, h1, h2, spec)
    dist_sorted = np.take_along_axis(dist, order.order, axis=1)
    return float(_kern().theta2_pq(dist_sorted, order.order, alpha, beta))


def pointwise_cbd_bruteforce(
    ds: Dataset,
    dist: np.ndarray,
    s: int,
    h1: float,
    h2: float,
    spec: KernelSpec = KernelSpec(),
) -> float:
    """Triple-loop evaluation of the conditional statistic at anchor s."""
    alpha, beta = anchor_weights(ds, s, h1, h2, spec)
    return theta2_weighted_bruteforce(dist, alpha, beta)


def all_anchor_values(dist_sorted, order_arr, alpha, beta) -> np.ndarray:
    """Vector of per-anchor statistics; rows of alpha/beta are the measures."""
    out = np.empty(alpha.shape[0])
    _kern().anchor_values(dist_sorted, order_arr, alpha, beta, out)
    return out


def point_mass_gap(dist_sorted, order_arr, alpha, beta) -> np.ndarray:
    """Per-anchor alpha-average of the divergence between point masses and beta."""
    out = np.empty(alpha.shape[0])
    _kern().point_mass_gap_values(dist_sorted, order_arr, alpha, beta, out)
    return out


def point_mass_gap_bruteforce(dist: np.ndarray, alpha, beta) -> float:
    """Oracle for one anchor: sum_u alpha_u * Theta2(one_hot_u, beta)."""
    n = alpha.shape[0]
    total = 0.0
    for u in range(n):
        if alpha[u] == 0.0:
            continue
        one_hot = np.zeros(n)
        one_hot[u] = 1.0
        total += alpha[u] * theta2_weighted_bruteforce(dist, one_hot, beta)
    return total
