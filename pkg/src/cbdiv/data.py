"""Sample container, pairwise Euclidean distances, and distance-rank tables.

Everything downstream (statistics, resampling, tests) consumes these three
structures. Distances are stored densely; at the sample sizes this package
targets (n up to a few thousand) the n x n matrix is cheap and cache-friendly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError, SchemaError


def _as_matrix(a, name: str) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64)
    if out.ndim == 1:
        out = out[:, None]
    if out.ndim != 2:
        raise InvalidInputError(f"{name} must be a 1-D or 2-D array, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return out


@dataclass(frozen=True)
class Dataset:
    """An n-sample of (x, y, z) rows with fixed dimensions.

    Immutable after construction; safe for concurrent reads.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_matrix(self.x, "x"))
        object.__setattr__(self, "y", _as_matrix(self.y, "y"))
        object.__setattr__(self, "z", _as_matrix(self.z, "z"))
        n = self.x.shape[0]
        if self.y.shape[0] != n or self.z.shape[0] != n:
            raise InvalidInputError(
                f"row counts differ: x has {n}, y has {self.y.shape[0]}, z has {self.z.shape[0]}"
            )
        if n < 2:
            raise InvalidInputError(f"need at least 2 samples, got {n}")
        if min(self.d_x, self.d_y, self.d_z) < 1:
            raise InvalidInputError("all of x, y, z must have at least one column")
        self.x.setflags(write=False)
        self.y.setflags(write=False)
        self.z.setflags(write=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d_x(self) -> int:
        return self.x.shape[1]

    @property
    def d_y(self) -> int:
        return self.y.shape[1]

    @property
    def d_z(self) -> int:
        return self.z.shape[1]

    @property
    def yz(self) -> np.ndarray:
        """Rows of the concatenated (y, z) sample."""
        return np.hstack([self.y, self.z])

    def with_x(self, x_new: np.ndarray) -> "Dataset":
        """Copy of the dataset with x replaced (y, z shared unchanged)."""
        return Dataset(x=np.array(x_new, dtype=np.float64), y=self.y, z=self.z)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Dense matrix of Euclidean distances between rows of ``points``.

    The result is exactly symmetric with a zero diagonal.
    """
    pts = _as_matrix(points, "points")
    if pts.shape[0] < 1:
        raise InvalidInputError("need at least one point")
    d = cdist(pts, pts)
    # cdist evaluates (i, j) and (j, i) independently; enforce bitwise symmetry
    # so downstream rank tables never depend on traversal order.
    d = np.triu(d, 1)
    d = d + d.T
    return d


@dataclass(frozen=True)
class DistanceOrder:
    """Per-anchor sorted index table over a distance matrix.

    ``order[u]`` lists all indices sorted by (distance from u, index);
    ``ranks`` is the inverse permutation per anchor. Ties are broken by
    ascending original index, so the table is deterministic.
    """

    order: np.ndarray
    ranks: np.ndarray = field(repr=False)


def sorted_tables(dist: np.ndarray):
    """(order, dist_sorted) pair for the prefix-sum kernels; no inverse table."""
    order = np.argsort(dist, axis=1, kind="stable").astype(np.int64)
    return order, np.take_along_axis(dist, order, axis=1)


def rank_order(dist: np.ndarray) -> DistanceOrder:
    """Build the sorted-index table for a distance matrix."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise InvalidInputError("distance matrix must be square")
    if not np.all(np.isfinite(dist)):
        raise InvalidInputError("distance matrix contains non-finite entries")
    order = np.argsort(dist, axis=1, kind="stable").astype(np.int64)
    ranks = np.empty_like(order)
    n = dist.shape[0]
    rows = np.arange(n)[:, None]
    ranks[rows, order] = np.arange(n)[None, :]
    order.setflags(write=False)
    ranks.setflags(write=False)
    return DistanceOrder(order=order, ranks=ranks)


def parse_roles(spec: str) -> dict[str, list[str]]:
    """Parse a column-role map like ``"x=1,y=2,z=3,z=4"``.

    Each item assigns one column (by header name, or 1-based position for
    purely numeric tokens) to a role; repeating a role appends columns.
    """
    roles: dict[str, list[str]] = {"x": [], "y": [], "z": []}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise SchemaError(f"role item {item!r} is not of the form role=column")
        role, col = item.split("=", 1)
        role = role.strip().lower()
        if role not in roles:
            raise SchemaError(f"unknown role {role!r} (expected x, y, or z)")
        for token in col.replace("+", " ").split():
            roles[role].append(token.strip())
    for role in ("x", "y", "z"):
        if not roles[role]:
            raise SchemaError(f"role {role!r} was assigned no columns")
    return roles


def load_csv(path: str, roles: dict[str, list[str]]) -> Dataset:
    """Read a headered CSV and split its columns into a Dataset by role map."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    def column_index(token: str) -> int:
        if token in header:
            return header.index(token)
        if token.isdigit():
            idx = int(token) - 1
            if 0 <= idx < len(header):
                return idx
        raise SchemaError(f"{path}: no column named or numbered {token!r}")

    table = np.empty((len(rows), len(header)), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {i + 2} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                table[i, j] = float(cell)
            except ValueError:
                raise SchemaError(f"{path}: row {i + 2}, column {header[j]!r}: {cell!r} is not numeric") from None

    parts = {}
    for role in ("x", "y", "z"):
        cols = [column_index(tok) for tok in roles[role]]
        parts[role] = table[:, cols]
    try:
        return Dataset(x=parts["x"], y=parts["y"], z=parts["z"])
    except InvalidInputError as exc:
        raise SchemaError(f"{path}: {exc}") from None
