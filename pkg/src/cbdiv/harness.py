"""Batch experiment drivers: power curves and KS distribution-closeness studies.

Every trial draws its own RNG stream from a stable hash of (master seed,
scenario, grid value, trial index), so single trials can be replayed in
isolation and reruns of a manifest are bit-identical regardless of worker
count. Trials are embarrassingly parallel; with ``workers > 1`` they run in
a process pool and are reduced in trial order.
"""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__ as _version
from . import backend
from .data import Dataset
from .datagen import ScenarioSpec, gen_scenario, misspecified_sampler, true_sampler
from .errors import CbdError, InvalidInputError
from .estimator import VStatEvaluator, WeightFunction
from .inference import ks_two_sample, resampling_pvalue, run_test
from .kernels import Bandwidths, KernelSpec, default_bandwidths
from .resampling import (
    ResamplePlan,
    crt_resample,
    dlb_resample,
    lwb_resample,
    make_resampler,
    resample_rngs,
)


def seed_sequence(master_seed: int, *parts) -> np.random.SeedSequence:
    """Stable, collision-resistant stream id from heterogeneous key parts."""
    digest = hashlib.sha256(repr((master_seed,) + tuple(parts)).encode()).digest()
    words = np.frombuffer(digest[:16], dtype=np.uint32)
    return np.random.SeedSequence(entropy=[int(w) for w in words])


def derive_rng(master_seed: int, *parts) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master_seed, *parts))


def derive_seed(master_seed: int, *parts) -> int:
    return int(seed_sequence(master_seed, *parts).generate_state(1, np.uint64)[0])


def resolve_sampler(sampler_id: str | None, scenario_id: str, r: float):
    """Map a sampler id to a ConditionalSampler.

    ``true`` is the model's own conditional law; ``affine_shift`` and
    ``uniform_abs`` are the deliberately misspecified families.
    """
    if sampler_id is None:
        return None
    if sampler_id == "true":
        return true_sampler(scenario_id, r)
    return misspecified_sampler(sampler_id, r)


def _pool_init():
    # one numba thread per worker; the pool supplies the parallelism
    backend.set_threads(1)


def _map_tasks(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    # spawn keeps the pool safe regardless of the numba threading layer
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, initializer=_pool_init, mp_context=ctx) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * workers))))


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    method: str  # crt | cpt | lwb | dlb
    grid_name: str  # "r" or "n"
    grid: tuple
    n: int = 50
    r: float = 0.0
    trials: int = 500
    M: int = 200
    alpha: float = 0.05
    weight: WeightFunction = WeightFunction.ONE
    sampler_id: str | None = None
    mh_steps: int | None = None
    master_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if self.grid_name not in ("r", "n"):
            raise InvalidInputError("grid_name must be 'r' or 'n'")


@dataclass(frozen=True)
class PowerPoint:
    grid_value: float
    rejections: int
    trials: int

    @property
    def power(self) -> float:
        return self.rejections / self.trials

    @property
    def se(self) -> float:
        p = self.power
        return math.sqrt(p * (1.0 - p) / self.trials)


def run_single_trial(spec: ExperimentSpec, grid_value, trial: int) -> bool:
    """One generate -> test -> decide step; returns the rejection flag."""
    n = int(grid_value) if spec.grid_name == "n" else spec.n
    r = float(grid_value) if spec.grid_name == "r" else spec.r
    scen = ScenarioSpec(id=spec.scenario, n=n, r=r)
    rng = derive_rng(spec.master_seed, spec.scenario, repr(float(grid_value)), trial, "data")
    ds = gen_scenario(scen, rng)
    plan = ResamplePlan(
        method=spec.method,
        M=spec.M,
        seed=derive_seed(spec.master_seed, spec.scenario, repr(float(grid_value)), trial, "resample"),
        sampler=resolve_sampler(spec.sampler_id, spec.scenario, r),
        mh_steps=spec.mh_steps,
    )
    result = run_test(ds, plan, weight=spec.weight, alpha=spec.alpha)
    return result.reject


def _power_task(args) -> bool:
    spec, grid_value, trial = args
    try:
        return run_single_trial(spec, grid_value, trial)
    except CbdError as exc:
        raise CbdError(
            f"trial failed (scenario={spec.scenario}, grid={grid_value}, trial={trial}, "
            f"seed={derive_seed(spec.master_seed, spec.scenario, repr(float(grid_value)), trial, 'data')}): {exc}"
        ) from exc


def run_power(spec: ExperimentSpec, workers: int = 1) -> list[PowerPoint]:
    """Empirical power at each grid value over ``spec.trials`` fresh trials."""
    points = []
    for g in spec.grid:
        flags = _map_tasks(_power_task, [(spec, g, t) for t in range(spec.trials)], workers)
        points.append(
            PowerPoint(grid_value=float(g), rejections=int(sum(flags)), trials=spec.trials)
        )
    return points


@dataclass(frozen=True)
class KsStudySpec:
    """Distribution-closeness study comparing two sources of statistics.

    ``resampler_pair`` (the design behind the reported closeness figures):
    each replication draws one dataset, computes M statistics under each of
    two resampling schemes, and makes one KS decision; the rejection
    frequency across replications is reported. ``observed_vs_resample``:
    each replication instead collects, across ``trials`` fresh datasets, the
    observed statistic and the statistic of a single resample, and applies
    one KS test to the two across-trial collections.
    """

    scenario: str
    method_a: str  # crt | cpt | lwb | dlb
    method_b: str = "crt"
    sampler_a: str | None = None
    sampler_b: str | None = None
    variant: str = "resampler_pair"
    r: float = 0.0
    trials: int = 500  # inner draws per KS decision (observed_vs_resample only)
    replications: int = 500
    M: int = 200  # per-side resample count (resampler_pair only)
    alpha: float = 0.05
    weight: WeightFunction = WeightFunction.ONE
    dlb_scale: str = "h0"  # bandwidth rule for dlb sides: h0 | h2
    master_seed: int = 0

    def __post_init__(self):
        if self.variant not in ("observed_vs_resample", "resampler_pair"):
            raise InvalidInputError(f"unknown KS study variant {self.variant!r}")
        if self.dlb_scale not in ("h0", "h2"):
            raise InvalidInputError("dlb_scale must be 'h0' or 'h2'")


def _side_plan(study: KsStudySpec, method: str, sampler_id: str | None, seed: int, M: int) -> ResamplePlan:
    return ResamplePlan(
        method=method,
        M=M,
        seed=seed,
        sampler=resolve_sampler(sampler_id, study.scenario, study.r),
    )


def _ks_one_replication(study: KsStudySpec, n: int, rep: int) -> bool:
    spec = KernelSpec()
    if study.variant == "observed_vs_resample":
        obs = np.empty(study.trials)
        res = np.empty(study.trials)
        for t in range(study.trials):
            rng = derive_rng(study.master_seed, "ks", study.scenario, n, rep, t, "data")
            ds = gen_scenario(ScenarioSpec(id=study.scenario, n=n, r=study.r), rng)
            bw = default_bandwidths(ds)
            ev = VStatEvaluator(ds, bw, spec, study.weight)
            obs[t] = ev.value(ds.x)
            plan = _side_plan(
                study, study.method_a, study.sampler_a,
                derive_seed(study.master_seed, "ks", study.scenario, n, rep, t, "res"), 1,
            )
            draw = make_resampler(ds, plan, default_h0=bw.h0, default_h=_dlb_h(study, bw))
            res[t] = ev.value(draw(0).x)
        return ks_two_sample(obs, res).p_value <= study.alpha
    rng = derive_rng(study.master_seed, "ks", study.scenario, n, rep, "data")
    ds = gen_scenario(ScenarioSpec(id=study.scenario, n=n, r=study.r), rng)
    bw = default_bandwidths(ds)
    ev = VStatEvaluator(ds, bw, spec, study.weight)
    sides = []
    for tag, method, sampler_id in (
        ("a", study.method_a, study.sampler_a),
        ("b", study.method_b, study.sampler_b),
    ):
        plan = _side_plan(
            study, method, sampler_id,
            derive_seed(study.master_seed, "ks", study.scenario, n, rep, tag), study.M,
        )
        draw = make_resampler(ds, plan, default_h0=bw.h0, default_h=_dlb_h(study, bw))
        sides.append(np.array([ev.value(draw(j).x) for j in range(plan.M)]))
    return ks_two_sample(sides[0], sides[1]).p_value <= study.alpha


def _dlb_h(study: KsStudySpec, bw: Bandwidths) -> float:
    return bw.h0 if study.dlb_scale == "h0" else bw.h2


def _ks_task(args) -> bool:
    study, n, rep = args
    return _ks_one_replication(study, n, rep)


def run_ks_study(study: KsStudySpec, n_grid, workers: int = 1) -> list[PowerPoint]:
    """KS rejection frequency at each sample size."""
    points = []
    for n in n_grid:
        flags = _map_tasks(
            _ks_task, [(study, int(n), rep) for rep in range(study.replications)], workers
        )
        points.append(
            PowerPoint(grid_value=float(n), rejections=int(sum(flags)), trials=study.replications)
        )
    return points


def power_table_rows(points: list[PowerPoint], spec: ExperimentSpec) -> list[dict]:
    return [
        {
            "grid": p.grid_value,
            "power": p.power,
            "se": p.se,
            "T": p.trials,
            "M": spec.M,
            "alpha": spec.alpha,
        }
        for p in points
    ]


def manifest(spec, master_seed: int) -> dict:
    """Reproduction manifest embedding the full spec and package version."""
    if hasattr(spec, "__dataclass_fields__"):
        body = asdict(spec)
        if isinstance(body.get("weight"), WeightFunction):
            body["weight"] = body["weight"].value
    else:
        body = dict(spec)
    return {
        "version": f"cbdiv-{_version}",
        "created_unix": int(time.time()),
        "master_seed": master_seed,
        "spec": body,
    }
