"""Simplex geometry: points, prefix-sum order, majorization, sampling.

All indices in public interfaces are 1-based; arrays are 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

EPS_SIMPLEX = 1e-12
EPS_ORDER = 1e-12


class SimplexError(ValueError):
    """Input does not describe a valid probability vector."""


class DimensionMismatch(ValueError):
    """Operands live on simplices of different dimension."""


@dataclass(frozen=True)
class SimplexPoint:
    """A probability vector on the simplex of dimension n-1."""

    coords: tuple

    @property
    def n(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> float:
        return self.coords[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class OrderVerdict:
    """Outcome of a prefix-sum order comparison.

    ``first_violating_index`` is the smallest 1-based k where the prefix sum
    of the left argument exceeds that of the right; ``gap`` is the (negative)
    difference right-minus-left at that k.
    """

    holds: bool
    first_violating_index: Optional[int] = None
    gap: float = 0.0

    def __bool__(self) -> bool:
        return self.holds


def make_point(coords: Sequence[float], eps: float = EPS_SIMPLEX) -> SimplexPoint:
    """Validate, clamp tiny negatives, and renormalize to sum exactly 1."""
    arr = np.asarray(coords, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise SimplexError(f"need at least 2 coordinates, got shape {arr.shape}")
    for idx, v in enumerate(arr):
        if v < -eps:
            raise SimplexError(f"coordinate {idx + 1} is {v}, below -{eps}")
    total = float(arr.sum())
    if abs(total - 1.0) > eps:
        raise SimplexError(f"coordinates sum to {total}, deviation exceeds {eps}")
    arr = np.clip(arr, 0.0, None)
    arr = arr / arr.sum()
    return SimplexPoint(tuple(float(v) for v in arr))


def vertex(n: int, i: int) -> SimplexPoint:
    """The i-th (1-based) vertex of the simplex on n states."""
    coords = [0.0] * n
    coords[i - 1] = 1.0
    return SimplexPoint(tuple(coords))


def terminal_vertex(n: int) -> SimplexPoint:
    """(0, ..., 0, 1): minimal element of the prefix-sum order."""
    return vertex(n, n)


def partial_sum(x: SimplexPoint, k: int) -> float:
    """Sum of the first k coordinates, 1 <= k <= n-1."""
    if not 1 <= k <= x.n - 1:
        raise ValueError(f"k={k} out of range 1..{x.n - 1}")
    return float(sum(x.coords[:k]))


def _check_same_dim(x: SimplexPoint, y: SimplexPoint) -> None:
    if x.n != y.n:
        raise DimensionMismatch(f"dimensions differ: {x.n} vs {y.n}")


def b_leq(x: SimplexPoint, y: SimplexPoint, eps: float = EPS_ORDER) -> OrderVerdict:
    """Prefix-sum (b-)order: holds iff every prefix sum of x is <= that of y."""
    _check_same_dim(x, y)
    cx = np.cumsum(x.coords)[:-1]
    cy = np.cumsum(y.coords)[:-1]
    for k0, (a, b) in enumerate(zip(cx, cy)):
        if a > b + eps:
            return OrderVerdict(False, first_violating_index=k0 + 1, gap=float(b - a))
    return OrderVerdict(True)


def rearrange_desc(x: SimplexPoint) -> SimplexPoint:
    """Coordinates sorted non-increasing; ties keep their original order."""
    arr = x.as_array()
    order = np.argsort(-arr, kind="stable")
    return SimplexPoint(tuple(float(arr[i]) for i in order))


def majorizes(x: SimplexPoint, y: SimplexPoint, eps: float = EPS_ORDER) -> OrderVerdict:
    """Classical majorization x ≺ y: b_leq after sorting both non-increasing."""
    _check_same_dim(x, y)
    return b_leq(rearrange_desc(x), rearrange_desc(y), eps=eps)


def l1_distance(x: SimplexPoint, y: SimplexPoint) -> float:
    _check_same_dim(x, y)
    return float(np.abs(x.as_array() - y.as_array()).sum())


def support(x: SimplexPoint, eps: float = EPS_SIMPLEX) -> set:
    """1-based indices of nonzero coordinates."""
    return {i + 1 for i, v in enumerate(x.coords) if v > eps}


def in_relative_interior(x: SimplexPoint, eps: float = EPS_SIMPLEX) -> bool:
    return all(v > eps for v in x.coords)


def sample_simplex(n: int, count: int, seed: int) -> list:
    """Uniform points via exponential normalization, driven by PCG64(seed)."""
    if n < 2 or count < 1:
        raise ValueError("need n >= 2 and count >= 1")
    rng = np.random.default_rng(seed)
    draws = rng.exponential(size=(count, n))
    draws /= draws.sum(axis=1, keepdims=True)
    return [make_point(row) for row in draws]


def grid_simplex(n: int, resolution: int) -> list:
    """All lattice points (k_1/r, ..., k_n/r) with sum k_i = r, lexicographic."""
    if n < 2 or resolution < 1:
        raise ValueError("need n >= 2 and resolution >= 1")
    r = resolution
    points = []
    # stars-and-bars: cut positions determine the composition of r into n parts
    for cuts in combinations(range(r + n - 1), n - 1):
        parts = []
        prev = -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(r + n - 2 - prev)
        points.append(make_point([p / r for p in parts]))
    return points


def points_as_array(points: Iterable[SimplexPoint]) -> np.ndarray:
    """Stack points into a (count, n) array for vectorized evaluation."""
    return np.asarray([p.coords for p in points], dtype=float)
