"""Discrete representations of vector-valued functions on a partition.

``SampledFn`` stores values at the partition's quadrature nodes; integrals of
such functions are always the weighted node sums.  ``PiecewiseConstFn`` stores
one value per cell, optionally with magnitude/direction indices when the
function is a member of the finite input family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Partition

__all__ = ["SampledFn", "PiecewiseConstFn", "lp_norm"]


@dataclass(frozen=True, eq=False)
class SampledFn:
    partition: Partition
    values: np.ndarray  # (P, d)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "values", v)
        if v.shape[0] != self.partition.points.shape[0]:
            raise ValueError(
                f"expected {self.partition.points.shape[0]} node values, "
                f"got {v.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class PiecewiseConstFn:
    partition: Partition
    values: np.ndarray  # (N, n), one vector per cell
    mag_idx: np.ndarray | None = None  # indices into a MagnitudeGrid
    dir_idx: np.ndarray | None = None  # indices into a DirectionNet

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "values", v)
        if v.shape[0] != self.partition.num_cells:
            raise ValueError(
                f"expected {self.partition.num_cells} cell values, got {v.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def to_sampled(self) -> SampledFn:
        return SampledFn(self.partition, self.values[self.partition.node_cell])

    def cell_norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)


def lp_norm(f: SampledFn | PiecewiseConstFn, p: float) -> float:
    """Quadrature L_p norm; exact closed form for piecewise-constant inputs."""
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if isinstance(f, PiecewiseConstFn):
        norms = f.cell_norms()
        return float(np.sum(f.partition.measures * norms**p) ** (1.0 / p))
    norms = np.linalg.norm(f.values, axis=1)
    return float(np.sum(f.partition.weights * norms**p) ** (1.0 / p))
