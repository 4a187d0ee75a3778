"""Finite covering nets on the unit sphere of R^n.

Distances are Euclidean chords in the ambient space.  For n = 1 the net is
exact, for n = 2 it is an equiangular construction with a closed-form covering
radius, and for n >= 3 a greedy farthest-point pass over a quasi-uniform
candidate pool is used, certified statistically by ``verify_covering``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoverageUnverifiableError

__all__ = ["DirectionNet", "build_sigma_net", "verify_covering"]

# the greedy pass covers the pool to sigma * (1 - margin); the margin absorbs
# the pool's own discreteness
GREEDY_MARGIN = 0.05
DEFAULT_POOL_CAP = 500_000
_MIN_POOL = 20_000


@dataclass(frozen=True, eq=False)
class DirectionNet:
    dim: int
    sigma: float
    points: np.ndarray  # (c, n), unit rows
    construction: str  # exact-1d | angular-2d | greedy-cover | explicit

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        norms = np.linalg.norm(pts, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise ValueError("net points must be unit vectors")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def nearest(self, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Indices and chord distances of the nearest net point per row.

        Ties resolve to the lowest index (argmin semantics).
        """
        d = np.atleast_2d(directions)
        d2 = (
            np.sum(d * d, axis=1)[:, None]
            - 2.0 * d @ self.points.T
            + np.sum(self.points * self.points, axis=1)[None, :]
        )
        idx = np.argmin(d2, axis=1)
        dist = np.sqrt(np.maximum(d2[np.arange(d.shape[0]), idx], 0.0))
        return idx, dist


def _unit_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def build_sigma_net(
    n: int,
    sigma: float,
    seed: int = 0,
    pool_cap: int = DEFAULT_POOL_CAP,
) -> DirectionNet:
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    sigma = min(float(sigma), 2.0)

    if n == 1:
        pts = np.array([[1.0], [-1.0]])
        return DirectionNet(dim=1, sigma=sigma, points=pts, construction="exact-1d")

    if n == 2:
        m = math.ceil(math.pi / math.asin(sigma / 2.0))
        ang = 2.0 * math.pi * np.arange(m) / m
        pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return DirectionNet(dim=2, sigma=sigma, points=pts, construction="angular-2d")

    # greedy farthest-point over a random quasi-uniform pool
    # the pool must resolve the sphere to the margin share of sigma; the
    # oversampling factor 40 absorbs the log overhead of random pools
    gap = GREEDY_MARGIN * sigma
    required = math.ceil(40.0 * (2.0 / gap) ** (n - 1))
    pool_size = max(_MIN_POOL, required)
    if pool_size > pool_cap:
        raise CoverageUnverifiableError(sigma, pool_size, pool_cap)

    rng = np.random.default_rng(seed)
    pool = _unit_rows(rng.standard_normal((pool_size, n)))

    first = np.zeros(n)
    first[0] = 1.0
    net = [first]
    dist = np.linalg.norm(pool - first, axis=1)
    threshold = sigma * (1.0 - GREEDY_MARGIN)
    while True:
        i = int(np.argmax(dist))
        if dist[i] <= threshold:
            break
        net.append(pool[i])
        dist = np.minimum(dist, np.linalg.norm(pool - pool[i], axis=1))

    return DirectionNet(
        dim=n, sigma=sigma, points=np.array(net), construction="greedy-cover"
    )


def verify_covering(net: DirectionNet, samples: int, rng_seed: int = 0) -> float:
    """Max chord distance from `samples` uniform random unit vectors to the net.

    A statistical lower estimate of the covering radius; deterministic for a
    fixed seed.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(rng_seed)
    max_gap = 0.0
    remaining = samples
    while remaining > 0:
        chunk = min(remaining, 50_000)
        dirs = _unit_rows(rng.standard_normal((chunk, net.dim)))
        _, dist = net.nearest(dirs)
        max_gap = max(max_gap, float(dist.max()))
        remaining -= chunk
    return max_gap
