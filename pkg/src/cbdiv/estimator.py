"""Conditional ball divergence estimators.

The workhorse is the anchor-averaged statistic (a V-statistic): the mean over
anchors of the ball divergence between the two kernel-weighted conditional
laws, optionally multiplied by a density-based weight. Also here: the order-9
U-statistic (exact for tiny n, incomplete via sampled index tuples), the
linear-time disjoint-block variant of the same estimand, and the normalized
coefficient in [0, 1].
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels_nb, _kernels_np, backend, ballcore
from .data import Dataset, pairwise_distances, sorted_tables
from .errors import InsufficientSampleError, InvalidInputError
from .kernels import Bandwidths, KernelSpec, normalizing_constant, weight_matrices


class WeightFunction(enum.Enum):
    """Anchor weight a(y, z) applied to the per-anchor statistic."""

    ONE = "one"
    P2 = "p2"  # squared joint density of (y, z)
    P4P4 = "p4p4"  # fourth powers of the joint and the z-marginal densities

    @classmethod
    def parse(cls, token: str) -> "WeightFunction":
        try:
            return cls(token.lower())
        except ValueError:
            raise InvalidInputError(f"unknown weight function {token!r} (one|p2|p4p4)") from None


@dataclass(frozen=True)
class CbdStatistic:
    value: float
    weight: WeightFunction
    bandwidths: Bandwidths
    estimator_kind: str
    mc_se: float | None = None


class VStatEvaluator:
    """Prepared anchor-statistic evaluator for one (y, z) configuration.

    Everything that depends only on (y, z) — the two normalized weight
    matrices and the anchor weights a(y_s, z_s) — is computed once, so the
    statistic can be re-evaluated cheaply on many x-resamples of the same
    dataset.
    """

    def __init__(
        self,
        ds: Dataset,
        bw: Bandwidths,
        spec: KernelSpec = KernelSpec(),
        weight: WeightFunction = WeightFunction.ONE,
    ):
        self.n = ds.n
        self.bw = bw
        self.weight = weight
        wyz, wz = weight_matrices(ds, bw)
        tot_yz = wyz.sum(axis=1)
        tot_z = wz.sum(axis=1)
        if np.any(tot_yz <= 0) or np.any(tot_z <= 0):
            raise InvalidInputError("an anchor has zero total kernel weight")
        self.alpha = wyz / tot_yz[:, None]
        self.beta = wz / tot_z[:, None]
        if weight is WeightFunction.ONE:
            self.aweights = np.ones(ds.n)
        else:
            d_yz = ds.d_y + ds.d_z
            dens_yz = normalizing_constant(d_yz) * tot_yz / (ds.n * bw.h1**d_yz)
            if weight is WeightFunction.P2:
                self.aweights = dens_yz**2
            else:
                dens_z = normalizing_constant(ds.d_z) * tot_z / (ds.n * bw.h2**ds.d_z)
                self.aweights = dens_yz**4 * dens_z**4

    def anchor_values(self, x: np.ndarray) -> np.ndarray:
        order, dist_sorted = sorted_tables(pairwise_distances(x))
        return ballcore.all_anchor_values(dist_sorted, order, self.alpha, self.beta)

    def value(self, x: np.ndarray) -> float:
        return float(np.mean(self.anchor_values(x) * self.aweights))

    def normalized_value(self, x: np.ndarray) -> float:
        order, dist_sorted = sorted_tables(pairwise_distances(x))
        numer = np.mean(ballcore.all_anchor_values(dist_sorted, order, self.alpha, self.beta))
        denom = np.mean(ballcore.point_mass_gap(dist_sorted, order, self.alpha, self.beta))
        if denom <= 1e-12:
            # the gap to a point mass is O(1) unless all x rows coincide, in
            # which case both terms are roundoff dust: apply the 0/0 -> 0 rule
            return 0.0
        return float(numer / denom)


def cbd_vstat(
    ds: Dataset,
    bw: Bandwidths,
    spec: KernelSpec = KernelSpec(),
    a: WeightFunction = WeightFunction.ONE,
) -> CbdStatistic:
    """Anchor-averaged conditional ball divergence with weight ``a``."""
    ev = VStatEvaluator(ds, bw, spec, a)
    return CbdStatistic(value=ev.value(ds.x), weight=a, bandwidths=bw, estimator_kind="vstat")


def normalized_cbd(ds: Dataset, bw: Bandwidths, spec: KernelSpec = KernelSpec()) -> float:
    """Normalized coefficient: 0 iff conditional independence (population),
    1 iff x is a function of (y, z); plug-in ratio lies in [0, 1] for every
    sample, with 0/0 mapped to 0."""
    ev = VStatEvaluator(ds, bw, spec, WeightFunction.ONE)
    return ev.normalized_value(ds.x)


def _ustat_ingredients(ds: Dataset, bw: Bandwidths):
    wyz, wz = weight_matrices(ds, bw)
    d_yz = ds.d_y + ds.d_z
    prefactor = 1.0 / (bw.h1 ** (4 * d_yz) * bw.h2 ** (4 * ds.d_z))
    dist = pairwise_distances(ds.x)
    return dist, wyz, wz, prefactor


def _falling(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


def cbd_ustat(
    ds: Dataset,
    bw: Bandwidths,
    spec: KernelSpec = KernelSpec(),
    mode: str = "exact",
    tuples: int = 100_000,
    rng: np.random.Generator | None = None,
) -> CbdStatistic:
    """Order-9 U-statistic for the density-weighted measure.

    ``mode="exact"`` averages over every ordered 9-tuple of distinct indices
    and is limited to n <= 10; ``mode="incomplete"`` averages over ``tuples``
    uniformly sampled tuples and reports a Monte Carlo standard error.
    """
    if ds.n < 9:
        raise InsufficientSampleError(f"the order-9 estimator needs n >= 9, got {ds.n}")
    dist, wyz, wz, prefactor = _ustat_ingredients(ds, bw)
    kern = _kernels_nb if backend.using_numba() else _kernels_np
    if mode == "exact":
        if ds.n > 10:
            raise InvalidInputError(
                "exact enumeration is infeasible beyond n=10; use mode='incomplete'"
            )
        total = kern.ustat_exact_sum(dist, wyz, wz, prefactor)
        value = float(total) / _falling(ds.n, 9)
        return CbdStatistic(value, WeightFunction.P4P4, bw, "ustat_exact")
    if mode != "incomplete":
        raise InvalidInputError(f"unknown mode {mode!r} (exact|incomplete)")
    if tuples < 1:
        raise InvalidInputError("incomplete mode needs at least one sampled tuple")
    if rng is None:
        rng = np.random.default_rng()
    idx = np.argsort(rng.random((tuples, ds.n)), axis=1)[:, :9].astype(np.int64)
    idx = np.ascontiguousarray(idx)
    terms = np.empty(tuples)
    kern.ustat_terms_incomplete(dist, wyz, wz, idx, ballcore.PERMS4, prefactor, terms)
    value = float(terms.mean())
    se = float(terms.std(ddof=1) / math.sqrt(tuples)) if tuples > 1 else float("inf")
    return CbdStatistic(value, WeightFunction.P4P4, bw, "ustat_incomplete", mc_se=se)


def ustat_core_term(ds: Dataset, bw: Bandwidths, indices) -> float:
    """Weighted symmetrized core for one explicit 9-tuple of sample indices."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.shape != (9,):
        raise InvalidInputError("expected a 9-tuple of indices")
    dist, wyz, wz, prefactor = _ustat_ingredients(ds, bw)
    i1 = int(idx[0])
    w = 1.0
    for ell in range(1, 5):
        w *= wyz[i1, idx[ell]]
    for ell in range(5, 9):
        w *= wz[i1, idx[ell]]
    if w == 0.0:
        return 0.0
    return prefactor * w * ballcore.phi_sym(dist, idx[1:5], idx[5:9])


def cbd_linear(ds: Dataset, bw: Bandwidths, spec: KernelSpec = KernelSpec()) -> CbdStatistic:
    """Linear-time variant: the core averaged over consecutive disjoint 9-blocks."""
    if ds.n < 9:
        raise InsufficientSampleError(f"the order-9 estimator needs n >= 9, got {ds.n}")
    blocks = ds.n // 9
    terms = [
        ustat_core_term(ds, bw, range(9 * i, 9 * i + 9)) for i in range(blocks)
    ]
    return CbdStatistic(float(np.mean(terms)), WeightFunction.P4P4, bw, "linear")


def ustat_exact_bruteforce(ds: Dataset, bw: Bandwidths) -> float:
    """Literal enumeration oracle for the exact U-statistic (n <= 9 only).

    Walks every ordered distinct 9-tuple and sums the weighted symmetrized
    core; the 576-term core is memoized per unordered block pair, which does
    not change the sum.
    """
    dist, wyz, wz, prefactor = _ustat_ingredients(ds, bw)
    cache: dict = {}

    def core(uu, vv):
        key = (frozenset(uu), frozenset(vv))
        if key not in cache:
            total = 0.0
            for tau in itertools.permutations(uu):
                for sigma in itertools.permutations(vv):
                    total += ballcore.phi_core(dist, tau, sigma)
            cache[key] = total / 576.0
        return cache[key]

    total = 0.0
    count = 0
    for tup in itertools.permutations(range(ds.n), 9):
        i1 = tup[0]
        w = 1.0
        for ell in range(1, 5):
            w *= wyz[i1, tup[ell]]
        for ell in range(5, 9):
            w *= wz[i1, tup[ell]]
        if w != 0.0:
            total += w * core(tup[1:5], tup[5:9])
        count += 1
    return prefactor * total / count
