"""Quadrature realization of the integral operator x -> ∫ K(., s) x(s) ds.

``DiscretizedOperator`` evaluates the kernel once on the partition's node
grid and caches both the weighted node matrix (for sampled inputs) and the
per-cell integral matrices (for piecewise-constant inputs), so applying the
operator across a whole family reuses a single kernel evaluation pass.
"""

from __future__ import annotations

import numpy as np

from .functions import PiecewiseConstFn, SampledFn, lp_norm
from .geometry import Partition
from .kernels import Kernel

__all__ = ["DiscretizedOperator", "apply", "image_of_family", "lq_norm"]


def lq_norm(y: SampledFn, q: float) -> float:
    return lp_norm(y, q)


class DiscretizedOperator:
    """Operator discretized on one partition; outputs live at the same nodes."""

    def __init__(self, kernel: Kernel, partition: Partition):
        self.kernel = kernel
        self.partition = partition
        pts = partition.points
        kmat = kernel.evaluate(pts[:, None, :], pts[None, :, :])  # (P, P, m, n)
        if kmat.shape[-2:] != (kernel.m, kernel.n):
            raise ValueError("kernel evaluator returned wrong matrix shape")
        self._weighted = kmat * partition.weights[None, :, None, None]
        p_nodes = pts.shape[0]
        qpc = partition.nodes_per_cell
        self._cell_int = self._weighted.reshape(
            p_nodes, partition.num_cells, qpc, kernel.m, kernel.n
        ).sum(axis=2)  # (P, N, m, n): integral of K over each cell

    def apply(self, x: SampledFn | PiecewiseConstFn) -> SampledFn:
        if isinstance(x, PiecewiseConstFn):
            if x.dim != self.kernel.n:
                raise ValueError(
                    f"input dim {x.dim} != kernel input dim {self.kernel.n}"
                )
            y = np.einsum("pnij,nj->pi", self._cell_int, x.values)
        else:
            if x.dim != self.kernel.n:
                raise ValueError(
                    f"input dim {x.dim} != kernel input dim {self.kernel.n}"
                )
            y = np.einsum("pqij,qj->pi", self._weighted, x.values)
        return SampledFn(self.partition, y)

    def image_of_family(self, family) -> list[SampledFn]:
        """Apply to every member; output order matches input order."""
        return [self.apply(f) for f in family]


def apply(kernel: Kernel, x: SampledFn | PiecewiseConstFn,
          partition: Partition) -> SampledFn:
    """One-shot application without keeping the cache."""
    return DiscretizedOperator(kernel, partition).apply(x)


def image_of_family(kernel: Kernel, family, partition: Partition) -> list[SampledFn]:
    return DiscretizedOperator(kernel, partition).image_of_family(family)
