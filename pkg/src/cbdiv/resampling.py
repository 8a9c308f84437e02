"""Resampling schemes that calibrate the statistic.

Four ways to produce surrogate x-columns with y and z untouched: resampling
from a known conditional law (CRT), non-uniform permutation preserving the
x-z coupling (CPT), Gaussian jitter of each x at a fine scale (local wild
bootstrap), and redrawing x atoms with kernel weights in z-distance (discrete
local bootstrap).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels_nb, _kernels_np, backend
from .data import Dataset
from .errors import InvalidInputError, InvalidModelError
from .kernels import KernelSpec, _profile_of_distances


class ConditionalSampler:
    """A conditional law of x given z: vectorized draws plus log density."""

    def draw(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def log_density(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianAffineSampler(ConditionalSampler):
    """x | z ~ Normal(z @ beta.T + mu, sigma^2 I)."""

    beta: np.ndarray
    mu: np.ndarray
    sigma: float

    def __post_init__(self):
        beta = np.atleast_2d(np.asarray(self.beta, dtype=np.float64))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        if beta.shape[0] != mu.shape[0]:
            raise InvalidInputError("beta rows must match mu length")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be nonnegative")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "mu", mu)

    @property
    def d_x(self) -> int:
        return self.beta.shape[0]

    def mean(self, z: np.ndarray) -> np.ndarray:
        return z @ self.beta.T + self.mu[None, :]

    def draw(self, z, rng):
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        noise = rng.standard_normal((z.shape[0], self.d_x))
        return self.mean(z) + self.sigma * noise

    def log_density(self, x, z):
        if self.sigma == 0:
            raise InvalidModelError("degenerate sampler (sigma=0) has no density")
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        resid = x - self.mean(z)
        d = self.d_x
        return -0.5 * (resid**2).sum(axis=1) / self.sigma**2 - d * np.log(
            self.sigma * np.sqrt(2 * np.pi)
        )


@dataclass(frozen=True)
class UniformAbsSampler(ConditionalSampler):
    """x | z ~ Uniform(-|z|, |z|), degenerate at zero when z = 0."""

    def draw(self, z, rng):
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        radius = np.linalg.norm(z, axis=1)
        return ((2.0 * rng.random(z.shape[0]) - 1.0) * radius)[:, None]

    def log_density(self, x, z):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        radius = np.linalg.norm(z, axis=1)
        inside = (np.abs(x[:, 0]) <= radius) & (radius > 0)
        with np.errstate(divide="ignore"):
            out = np.where(inside, -np.log(2.0 * np.where(radius > 0, radius, 1.0)), -np.inf)
        return out


@dataclass(frozen=True)
class TableSampler(ConditionalSampler):
    """Plugin point for scenario-specific conditional laws.

    ``draw_fn(z, rng)`` returns an (n, d_x) array; ``log_density_fn`` may be
    None for samplers used only with the CRT.
    """

    draw_fn: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    log_density_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def draw(self, z, rng):
        return self.draw_fn(np.atleast_2d(np.asarray(z, dtype=np.float64)), rng)

    def log_density(self, x, z):
        if self.log_density_fn is None:
            raise InvalidModelError("this sampler does not provide a density")
        return self.log_density_fn(np.atleast_2d(x), np.atleast_2d(z))


@dataclass(frozen=True)
class ResamplePlan:
    method: str  # crt | cpt | lwb | dlb
    M: int = 200
    seed: int = 0
    sampler: ConditionalSampler | None = None
    mh_steps: int | None = None  # default 50 * n
    h0: float | None = None  # lwb noise scale (default from bandwidth rule)
    h2_prime: float = 0.0
    h: float | None = None  # dlb localization scale (default h2)

    def __post_init__(self):
        if self.method not in ("crt", "cpt", "lwb", "dlb"):
            raise InvalidInputError(f"unknown resampling method {self.method!r}")
        if self.M < 1:
            raise InvalidInputError("M must be at least 1")
        if self.mh_steps is not None and self.mh_steps < 1:
            raise InvalidInputError("mh_steps must be at least 1")
        if self.method in ("crt", "cpt") and self.sampler is None:
            raise InvalidInputError(f"{self.method} requires a conditional sampler")


def crt_resample(ds: Dataset, sampler: ConditionalSampler, rng: np.random.Generator) -> Dataset:
    """Redraw every x independently from the sampler at its own z."""
    x_new = sampler.draw(ds.z, rng)
    if x_new.shape[0] != ds.n:
        raise InvalidModelError("sampler returned a wrong number of rows")
    return ds.with_x(x_new)


def cpt_permutation(
    ds: Dataset,
    sampler: ConditionalSampler,
    rng: np.random.Generator,
    mh_steps: int | None = None,
) -> np.ndarray:
    """Metropolis pairwise-swap draw from the non-uniform permutation law.

    The target weights each permutation by the product over slots of the
    conditional density of the x it receives; swaps are proposed uniformly
    over unordered pairs. The returned permutation is approximate for finite
    chain length (default 50n sweeps-worth of single swaps).
    """
    n = ds.n
    logp = np.empty((n, n))
    for slot in range(n):
        z_rep = np.repeat(ds.z[slot][None, :], n, axis=0)
        logp[:, slot] = sampler.log_density(ds.x, z_rep)
    if not np.all(np.isfinite(logp[np.arange(n), np.arange(n)])):
        raise InvalidModelError("log density is not finite on an observed (x, z) pair")
    steps = 50 * n if mh_steps is None else int(mh_steps)
    pair_i = rng.integers(0, n, size=steps)
    pair_j = (pair_i + 1 + rng.integers(0, n - 1, size=steps)) % n
    with np.errstate(divide="ignore"):
        log_u = np.log(rng.random(steps))
    perm = np.arange(n, dtype=np.int64)
    kern = _kernels_nb if backend.using_numba() else _kernels_np
    kern.mh_swap_chain(logp, perm, pair_i.astype(np.int64), pair_j.astype(np.int64), log_u)
    return perm


def cpt_resample(
    ds: Dataset,
    sampler: ConditionalSampler,
    rng: np.random.Generator,
    mh_steps: int | None = None,
) -> Dataset:
    perm = cpt_permutation(ds, sampler, rng, mh_steps)
    return ds.with_x(ds.x[perm])


def lwb_resample(
    ds: Dataset,
    h0: float,
    h2_prime: float = 0.0,
    spec: KernelSpec = KernelSpec(),
    rng: np.random.Generator | None = None,
) -> Dataset:
    """Local wild bootstrap: Gaussian noise of scale h0 around a local center.

    With ``h2_prime = 0`` each sample is its own center (point-mass
    localization, the choice used by all power studies here); a positive
    ``h2_prime`` samples the center index by kernel weights in z-distance
    before adding noise.
    """
    if h0 <= 0:
        raise InvalidInputError("h0 must be positive")
    if rng is None:
        raise InvalidInputError("an rng is required")
    n = ds.n
    if h2_prime == 0.0:
        centers = ds.x
    else:
        dz = np.linalg.norm(ds.z[:, None, :] - ds.z[None, :, :], axis=2)
        kappa = _profile_of_distances(dz, h2_prime)
        kappa = kappa / kappa.sum(axis=1, keepdims=True)
        cum = np.cumsum(kappa, axis=1)
        u = rng.random(n)
        idx = (u[:, None] < cum).argmax(axis=1)
        centers = ds.x[idx]
    noise = rng.standard_normal((n, ds.d_x))
    return ds.with_x(centers + h0 * noise)


def dlb_resample(
    ds: Dataset,
    h: float,
    spec: KernelSpec = KernelSpec(),
    rng: np.random.Generator | None = None,
) -> Dataset:
    """Discrete local bootstrap: redraw each x from the observed atoms,
    weighted by kernel proximity of the z's."""
    if h <= 0:
        raise InvalidInputError("h must be positive")
    if rng is None:
        raise InvalidInputError("an rng is required")
    dz = np.linalg.norm(ds.z[:, None, :] - ds.z[None, :, :], axis=2)
    w = _profile_of_distances(dz, h)
    w = w / w.sum(axis=1, keepdims=True)
    cum = np.cumsum(w, axis=1)
    u = rng.random(ds.n)
    idx = (u[:, None] < cum).argmax(axis=1)
    return ds.with_x(ds.x[idx])


def resample_rngs(seed: int, M: int) -> list[np.random.Generator]:
    """Independent per-resample streams, deterministic in (seed, index)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(M)]


def make_resampler(ds: Dataset, plan: ResamplePlan, default_h0: float, default_h: float):
    """Bind a plan to a dataset: returns ``draw(index) -> Dataset``."""
    rngs = resample_rngs(plan.seed, plan.M)
    if plan.method == "crt":
        return lambda j: crt_resample(ds, plan.sampler, rngs[j])
    if plan.method == "cpt":
        return lambda j: cpt_resample(ds, plan.sampler, rngs[j], plan.mh_steps)
    if plan.method == "lwb":
        h0 = default_h0 if plan.h0 is None else plan.h0
        return lambda j: lwb_resample(ds, h0, plan.h2_prime, rng=rngs[j])
    h = default_h if plan.h is None else plan.h
    return lambda j: dlb_resample(ds, h, rng=rngs[j])
