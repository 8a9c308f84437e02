"""Simulation designs, misspecified model samplers, and the marks benchmark.

Scenario naming: ``ex1``/``ex3``/``ex4a`` share one regression skeleton with
normal noise, ``ex4b`` swaps in Cauchy noise, ``ex5:<shape>`` uses one of six
bivariate error shapes with geometric dependence, ``ex6a``/``ex6b`` are
normal-mixture errors, ``ex7a``/``ex7b`` the bivariate regression analogue,
``ex8:<shape>`` the unit-cube design, and ``ex1null:<r>`` the matched
conditionally-independent twin of ex1 used by the calibration studies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InvalidInputError, InvalidScenarioError, SchemaError
from .resampling import ConditionalSampler, GaussianAffineSampler, TableSampler, UniformAbsSampler

SHAPES = ("four_clouds", "w", "diamond", "parabola", "two_parabolas", "circle")

SCENARIOS = (
    "ex1",
    "ex3",
    "ex4a",
    "ex4b",
    "ex6a",
    "ex6b",
    "ex7a",
    "ex7b",
    "ex1null",
) + tuple(f"ex5:{s}" for s in SHAPES) + tuple(f"ex8:{s}" for s in ("circle", "parabola", "two_parabolas"))


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    n: int
    r: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.id not in SCENARIOS:
            raise InvalidScenarioError(f"unknown scenario {self.id!r}")
        if self.n < 2:
            raise InvalidInputError("scenario needs n >= 2")


def _cauchy(rng: np.random.Generator, size) -> np.ndarray:
    # inverse-CDF draw keeps the generator exactly reproducible from uniforms
    return np.tan(np.pi * (rng.random(size) - 0.5))


def shape_errors(shape: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n rows of the named bivariate error shape, centered componentwise.

    Parameterizations are fixed package constants chosen to match the
    qualitative scatter geometry; each shape has zero Pearson correlation.
    """
    if shape == "four_clouds":
        signs = rng.integers(0, 2, size=(n, 2)) * 2 - 1
        return signs + math.sqrt(0.05) * rng.standard_normal((n, 2))
    if shape == "w":
        e1 = rng.random(n) * 2 - 1
        e2 = np.abs(e1 + 0.5 * np.sign(e1)) - 0.75 + (rng.random(n) * 0.2 - 0.1)
        return np.column_stack([e1, e2 - 0.25])
    if shape == "diamond":
        u = rng.random(n) * 2 - 1
        v = rng.random(n) * 2 - 1
        inv = 1.0 / math.sqrt(2.0)
        return np.column_stack([(u - v) * inv, (u + v) * inv])
    if shape == "parabola":
        e1 = rng.random(n) * 2 - 1
        e2 = e1**2 + (rng.random(n) * 0.2 - 0.1)
        return np.column_stack([e1, e2 - 1.0 / 3.0])
    if shape == "two_parabolas":
        e1 = rng.random(n) * 2 - 1
        sign = rng.integers(0, 2, size=n) * 2 - 1
        e2 = sign * (e1**2 + (rng.random(n) * 0.2 - 0.1))
        return np.column_stack([e1, e2])
    if shape == "circle":
        theta = rng.random(n) * 2 * np.pi
        return np.column_stack([np.cos(theta), np.sin(theta)]) + 0.05 * rng.standard_normal((n, 2))
    raise InvalidScenarioError(f"unknown shape {shape!r}")


EX6_COVS = {
    "ex6a": (np.eye(2), 10.0 * np.eye(2)),
    "ex6b": (np.diag([1.0, 10.0]), np.diag([10.0, 1.0])),
}


def gen_scenario(spec: ScenarioSpec, rng: np.random.Generator) -> Dataset:
    """Generate one dataset from a registered scenario."""
    n, r = spec.n, spec.r
    sid = spec.id
    if sid in ("ex1", "ex3", "ex4a", "ex4b"):
        noise = _cauchy if sid == "ex4b" else (lambda g, size: g.standard_normal(size))
        z = noise(rng, n)
        e1 = noise(rng, n)
        e2 = noise(rng, n)
        y = z + e1
        x = z + r * y + e2
        return Dataset(x=x, y=y, z=z)
    if sid == "ex1null":
        # conditionally independent twin: x | z follows the same law as in
        # ex1 at this r, but is drawn without looking at y
        z = rng.standard_normal(n)
        y = z + rng.standard_normal(n)
        x = (1.0 + r) * z + math.sqrt(1.0 + r * r) * rng.standard_normal(n)
        return Dataset(x=x, y=y, z=z)
    if sid.startswith("ex5:"):
        eps = shape_errors(sid.split(":", 1)[1], n, rng)
        z = rng.random(n)
        return Dataset(x=z + eps[:, 0], y=z + eps[:, 1], z=z)
    if sid in EX6_COVS:
        s1, s2 = EX6_COVS[sid]
        pick = rng.integers(0, 2, size=n)
        scales = np.where(pick[:, None] == 0, np.sqrt(np.diag(s1))[None, :], np.sqrt(np.diag(s2))[None, :])
        eta = scales * rng.standard_normal((n, 2))
        z = rng.random(n)
        return Dataset(x=z + eta[:, 0], y=z + eta[:, 1], z=z)
    if sid in ("ex7a", "ex7b"):
        noise = _cauchy if sid == "ex7b" else (lambda g, size: g.standard_normal(size))
        z = noise(rng, (n, 2))
        e1 = noise(rng, (n, 2))
        e2 = noise(rng, (n, 2))
        y = z + e1
        x = z + r * y + e2
        return Dataset(x=x, y=y, z=z)
    if sid.startswith("ex8:"):
        eps = shape_errors(sid.split(":", 1)[1], n, rng)
        z = rng.random((n, 3))
        m = z.max(axis=1)
        return Dataset(x=m + eps[:, 0], y=m + eps[:, 1], z=z)
    raise InvalidScenarioError(f"unknown scenario {sid!r}")


def true_sampler(scenario_id: str, r: float = 0.0) -> ConditionalSampler:
    """The correct conditional law of x given z where the model admits one.

    For the regression skeletons x = z + r*y + e with y = z + e', the
    conditional of x given z is Normal((1+r) z, (1+r^2) I).
    """
    sd = math.sqrt(1.0 + r * r)
    if scenario_id in ("ex1", "ex3", "ex4a", "ex1null"):
        return GaussianAffineSampler(beta=[[1.0 + r]], mu=[0.0], sigma=sd)
    if scenario_id == "ex7a":
        return GaussianAffineSampler(beta=(1.0 + r) * np.eye(2), mu=np.zeros(2), sigma=sd)
    raise InvalidScenarioError(f"no closed-form conditional sampler for {scenario_id!r}")


def misspecified_sampler(kind: str, r: float = 0.0) -> ConditionalSampler:
    """The two deliberately wrong model-x samplers used in the robustness studies.

    ``affine_shift``: 5z + Normal(10, 25/(r+1)) — a location/scale isometry of
    the true law, so it should calibrate correctly. ``uniform_abs``:
    Uniform(-|z|, |z|) — a genuinely different shape.
    """
    if kind == "affine_shift":
        if r <= -1:
            raise InvalidInputError("affine_shift requires r > -1")
        return GaussianAffineSampler(beta=[[5.0]], mu=[10.0], sigma=5.0 / math.sqrt(r + 1.0))
    if kind == "uniform_abs":
        return UniformAbsSampler()
    raise InvalidScenarioError(f"unknown misspecified sampler {kind!r}")


MARKS_COLUMNS = ("MECH", "VECT", "ALG", "ANL", "STAT")
_MARKS_ALIASES = {
    "MECH": ("MECH", "MECHANICS", "M"),
    "VECT": ("VECT", "VECTORS", "V"),
    "ALG": ("ALG", "ALGEBRA", "AL"),
    "ANL": ("ANL", "ANALYSIS", "AN"),
    "STAT": ("STAT", "STATISTICS", "S"),
}


@dataclass(frozen=True)
class MarksTable:
    """Five subject-score columns: mechanics, vectors, algebra, analysis, statistics."""

    scores: np.ndarray  # (n, 5) in MARKS_COLUMNS order

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def load_marks(path: str) -> MarksTable:
    """Read the five-subject marks CSV (see README for where to obtain it)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().upper() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    cols = []
    for canonical in MARKS_COLUMNS:
        for alias in _MARKS_ALIASES[canonical]:
            if alias in header:
                cols.append(header.index(alias))
                break
        else:
            raise SchemaError(f"{path}: missing column {canonical} (aliases {_MARKS_ALIASES[canonical]})")
    scores = np.empty((len(rows), 5))
    for i, row in enumerate(rows):
        for j, c in enumerate(cols):
            try:
                scores[i, j] = float(row[c])
            except (ValueError, IndexError):
                raise SchemaError(f"{path}: bad value in row {i + 2}") from None
    if not np.all(np.isfinite(scores)):
        raise SchemaError(f"{path}: non-finite score")
    return MarksTable(scores=scores)


def marks_dataset(table: MarksTable, which: str) -> Dataset:
    """Case (a): x=statistics, y=analysis, z=(mechanics, vectors, algebra).
    Case (b): x=mechanics, y=vectors, z=(statistics, analysis, algebra)."""
    s = table.scores
    mech, vect, alg, anl, stat = (s[:, i] for i in range(5))
    if which == "a":
        return Dataset(x=stat, y=anl, z=np.column_stack([mech, vect, alg]))
    if which == "b":
        return Dataset(x=mech, y=vect, z=np.column_stack([stat, anl, alg]))
    raise InvalidInputError(f"marks case must be 'a' or 'b', got {which!r}")


def subsample(ds: Dataset, m: int, rng: np.random.Generator) -> Dataset:
    """m rows drawn uniformly without replacement."""
    if not (2 <= m <= ds.n):
        raise InvalidInputError(f"subsample size must be in [2, {ds.n}], got {m}")
    idx = rng.choice(ds.n, size=m, replace=False)
    return Dataset(x=ds.x[idx], y=ds.y[idx], z=ds.z[idx])
