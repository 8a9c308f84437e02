"""Kernel profile, Nadaraya-Watson style weights, KDE, and bandwidth rules.

The Epanechnikov profile (1 - t^2) on [0, 1] is used throughout. Weight
vectors use the unnormalized profile: the dimension constant cancels in every
weight ratio, so the statistics are bit-identical either way and the hot loop
saves a multiplication. Density estimates require the normalized profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ContractViolationError, DegenerateScaleError, InvalidInputError


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and whether the d-dimensional normalizing constant is applied."""

    family: str = "epanechnikov"
    normalized: bool = False

    def __post_init__(self):
        if self.family != "epanechnikov":
            raise InvalidInputError(f"unsupported kernel family {self.family!r}")


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def normalizing_constant(d: int) -> float:
    """Constant c_d with integral of c_d * (1 - |u|^2) over the unit ball equal to 1."""
    return (d + 2.0) / (2.0 * unit_ball_volume(d))


def kernel_profile(spec: KernelSpec, t, d: int = 1):
    """Evaluate the kernel profile at radius t >= 0 (scalar or array)."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise InvalidInputError("kernel profile argument must be nonnegative")
    out = np.where(t <= 1.0, 1.0 - t * t, 0.0)
    if spec.normalized:
        out = out * normalizing_constant(d)
    if out.ndim == 0:
        return float(out)
    return out


def _profile_of_distances(dists: np.ndarray, h: float) -> np.ndarray:
    t = dists / h
    return np.where(t <= 1.0, 1.0 - t * t, 0.0)


def weights_yz(ds: Dataset, query, h1: float, spec: KernelSpec = KernelSpec()):
    """Kernel weights of every sample's (y_i, z_i) relative to a (y, z) query.

    Returns ``(weights, total)``.
    """
    if h1 <= 0:
        raise InvalidInputError("h1 must be positive")
    q = np.asarray(query, dtype=np.float64).ravel()
    if q.size != ds.d_y + ds.d_z:
        raise InvalidInputError(f"query must have {ds.d_y + ds.d_z} coordinates, got {q.size}")
    dists = np.linalg.norm(ds.yz - q[None, :], axis=1)
    w = _profile_of_distances(dists, h1)
    return w, float(w.sum())


def weights_z(ds: Dataset, query, h2: float, spec: KernelSpec = KernelSpec()):
    """Kernel weights of every sample's z_i relative to a z query."""
    if h2 <= 0:
        raise InvalidInputError("h2 must be positive")
    q = np.asarray(query, dtype=np.float64).ravel()
    if q.size != ds.d_z:
        raise InvalidInputError(f"query must have {ds.d_z} coordinates, got {q.size}")
    dists = np.linalg.norm(ds.z - q[None, :], axis=1)
    w = _profile_of_distances(dists, h2)
    return w, float(w.sum())


def kde_yz(ds: Dataset, query, h1: float, spec: KernelSpec) -> float:
    """Kernel density estimate of the joint (y, z) density at the query point."""
    if not spec.normalized:
        raise ContractViolationError("density estimation requires a normalized kernel")
    w, total = weights_yz(ds, query, h1)
    d = ds.d_y + ds.d_z
    return normalizing_constant(d) * total / (ds.n * h1**d)


def kde_z(ds: Dataset, query, h2: float, spec: KernelSpec) -> float:
    """Kernel density estimate of the z density at the query point."""
    if not spec.normalized:
        raise ContractViolationError("density estimation requires a normalized kernel")
    w, total = weights_z(ds, query, h2)
    return normalizing_constant(ds.d_z) * total / (ds.n * h2**ds.d_z)


@dataclass(frozen=True)
class Bandwidths:
    """The four smoothing scales plus the IQR constants they derive from.

    ``h2_prime = 0`` encodes point-mass localization for the local wild
    bootstrap (each sample is its own mixture center).
    """

    h1: float
    h2: float
    h0: float
    h2_prime: float = 0.0
    c1: float = float("nan")
    c2: float = float("nan")

    def __post_init__(self):
        if not (self.h1 > 0 and self.h2 > 0 and self.h0 > 0):
            raise InvalidInputError("h1, h2, h0 must all be positive")
        if self.h2_prime < 0:
            raise InvalidInputError("h2_prime must be nonnegative")

    def replace(self, **kw) -> "Bandwidths":
        current = dict(h1=self.h1, h2=self.h2, h0=self.h0, h2_prime=self.h2_prime, c1=self.c1, c2=self.c2)
        current.update(kw)
        return Bandwidths(**current)


def _quantile_sorted(col: np.ndarray, p: float) -> float:
    # linear interpolation between order statistics at position (n-1)p
    pos = (col.shape[0] - 1) * p
    lo = int(pos)
    frac = pos - lo
    if frac == 0.0:
        return float(col[lo])
    return float(col[lo] + frac * (col[lo + 1] - col[lo]))


def _mean_positive_iqr(columns: np.ndarray) -> float:
    srt = np.sort(columns, axis=0)
    total = 0.0
    count = 0
    for j in range(srt.shape[1]):
        iqr = _quantile_sorted(srt[:, j], 0.75) - _quantile_sorted(srt[:, j], 0.25)
        if iqr > 0:
            total += iqr
            count += 1
    if count == 0:
        raise DegenerateScaleError("every coordinate has zero interquartile range")
    # Coordinates with zero IQR carry no scale information; drop them from
    # the average rather than driving the bandwidth to zero.
    return total / count


def default_bandwidths(ds: Dataset) -> Bandwidths:
    """IQR-based bandwidth rule.

    h1 = c1 * n^(-1/(d_y+d_z+2)) and h2 = c2 * n^(-1/(d_z+2)) smooth the
    statistic; h0 = 20 * c2 * n^(-1/1.95) is the (much finer, since n*h0^2
    must vanish) noise scale for the local wild bootstrap.
    """
    if ds.n < 4:
        raise InvalidInputError("bandwidth rule needs at least 4 samples for quartiles")
    c1 = _mean_positive_iqr(ds.yz)
    c2 = _mean_positive_iqr(ds.z)
    n = float(ds.n)
    return Bandwidths(
        h1=c1 * n ** (-1.0 / (ds.d_y + ds.d_z + 2)),
        h2=c2 * n ** (-1.0 / (ds.d_z + 2)),
        h0=20.0 * c2 * n ** (-1.0 / 1.95),
        h2_prime=0.0,
        c1=c1,
        c2=c2,
    )


def weight_matrices(ds: Dataset, bw: Bandwidths):
    """All-pairs kernel weights used by the anchor statistics.

    Returns ``(wyz, wz)`` where ``wyz[s, i]`` weighs sample i at the (y, z)
    query of anchor s and ``wz[s, i]`` likewise in z only. Row normalization
    is left to the caller. Both matrices depend only on (y, z), so they can
    be computed once and shared across every x-resample of a dataset.
    """
    dyz = np.linalg.norm(ds.yz[:, None, :] - ds.yz[None, :, :], axis=2)
    dz = np.linalg.norm(ds.z[:, None, :] - ds.z[None, :, :], axis=2)
    return _profile_of_distances(dyz, bw.h1), _profile_of_distances(dz, bw.h2)
