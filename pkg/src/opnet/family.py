"""The finite input family and the projection pipeline onto it.

Family members are piecewise-constant functions: on each cell, a magnitude
from a uniform grid on [0, gamma] times a direction from a sphere net, subject
to the power budget sum_i mu_i * z_i^p <= r^p.  The projection pipeline
(clip -> cell average -> magnitude floor -> direction snap) maps any ball
element onto the family with tracked per-step displacement.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FamilyTooLargeError
from .functions import PiecewiseConstFn, SampledFn, lp_norm
from .geometry import Partition
from .sphere import DirectionNet

__all__ = [
    "MagnitudeGrid",
    "ProjectionReport",
    "build_magnitude_grid",
    "budget_limit",
    "budget_used",
    "count_family",
    "enumerate_family",
    "sample_family",
    "sample_ball",
    "clip_to_gamma",
    "cell_average",
    "round_magnitude",
    "snap_direction",
    "project_to_net",
]

# absolute slack for the floating budget comparison; reported, never silent
BUDGET_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class MagnitudeGrid:
    """Uniform grid {0 = z_0 < z_1 < ... < z_a = gamma}."""

    gamma: float
    a: int
    values: np.ndarray
    delta_step: float


def build_magnitude_grid(gamma: float, a: int) -> MagnitudeGrid:
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if a < 1:
        raise ValueError(f"subinterval count must be >= 1, got {a}")
    values = np.linspace(0.0, gamma, a + 1)
    return MagnitudeGrid(gamma=float(gamma), a=int(a), values=values,
                         delta_step=float(gamma) / a)


# --------------------------------------------------------------------------
# budget arithmetic


def budget_limit(p: float, r: float) -> float:
    return r**p + BUDGET_SLACK * max(1.0, r**p)


def budget_used(measures, magnitudes, p: float) -> float:
    """Compensated sum of mu_i * z_i^p (math.fsum is order-independent)."""
    return math.fsum(float(m) * float(z) ** p for m, z in zip(measures, magnitudes))


def _cost_table(partition: Partition, grid: MagnitudeGrid, p: float) -> np.ndarray:
    """costs[i, j] = mu_i * z_j^p."""
    return partition.measures[:, None] * grid.values[None, :] ** p


# --------------------------------------------------------------------------
# counting / enumeration / sampling


def count_family(
    partition: Partition,
    grid: MagnitudeGrid,
    net: DirectionNet,
    p: float,
    r: float,
) -> int:
    """Exact cardinality of the finite family.

    Zero magnitudes contribute no direction factor (the zero function on a
    cell is direction-free).  Grid partitions have equal cell measures, so the
    count collapses to a sum over magnitude multisets; the general case falls
    back to a pruned recursion over cells.
    """
    # the budget only needs p >= 1; the p > 1 restriction is for norms
    if p < 1 or r <= 0:
        raise ValueError("need p >= 1 and r > 0")
    n_cells = partition.num_cells
    c = net.size
    limit = budget_limit(p, r)
    costs = _cost_table(partition, grid, p)

    measures = partition.measures
    if np.all(measures == measures[0]):
        cell_costs = costs[0]
        total = 0
        fact = math.factorial(n_cells)
        for combo in itertools.combinations_with_replacement(
            range(grid.a + 1), n_cells
        ):
            if math.fsum(cell_costs[j] for j in combo) > limit:
                continue
            perms = fact
            for j in set(combo):
                perms //= math.factorial(combo.count(j))
            nonzero = sum(1 for j in combo if j > 0)
            total += perms * c**nonzero
        return total

    # unequal measures: pruned depth-first count over cells
    def rec(i: int, chosen: list[int]) -> int:
        if i == n_cells:
            return 1
        total = 0
        for j in range(grid.a + 1):
            chosen.append(j)
            used = math.fsum(costs[t, jj] for t, jj in enumerate(chosen))
            if used > limit:
                chosen.pop()
                break  # costs increase with j
            sub = rec(i + 1, chosen)
            total += sub * (c if j > 0 else 1)
            chosen.pop()
        return total

    return rec(0, [])


def enumerate_family(
    partition: Partition,
    grid: MagnitudeGrid,
    net: DirectionNet,
    p: float,
    r: float,
    cap: int = 10_000_000,
):
    """Yield every family member once, lexicographic in (cell, magnitude, direction).

    Zero-magnitude cells carry the canonical direction index 0.
    """
    total = count_family(partition, grid, net, p, r)
    if total > cap:
        raise FamilyTooLargeError(total, cap)

    n_cells = partition.num_cells
    limit = budget_limit(p, r)
    costs = _cost_table(partition, grid, p)

    mag = [0] * n_cells
    dirs = [0] * n_cells

    def rec(i: int):
        if i == n_cells:
            yield _family_member(partition, grid, net, mag, dirs)
            return
        for j in range(grid.a + 1):
            mag[i] = j
            if math.fsum(costs[t, mag[t]] for t in range(i + 1)) > limit:
                break
            if j == 0:
                dirs[i] = 0
                yield from rec(i + 1)
            else:
                for l in range(net.size):
                    dirs[i] = l
                    yield from rec(i + 1)
        mag[i] = 0
        dirs[i] = 0

    yield from rec(0)


def _family_member(partition, grid, net, mag, dirs) -> PiecewiseConstFn:
    mag_idx = np.array(mag, dtype=int)
    dir_idx = np.array(dirs, dtype=int)
    values = grid.values[mag_idx][:, None] * net.points[dir_idx]
    return PiecewiseConstFn(partition, values, mag_idx=mag_idx, dir_idx=dir_idx)


def sample_family(
    partition: Partition,
    grid: MagnitudeGrid,
    net: DirectionNet,
    p: float,
    r: float,
    count: int,
    seed: int = 0,
) -> list[PiecewiseConstFn]:
    """Draw members with uniform magnitude profiles via the completion table.

    Magnitude profiles are sampled uniformly over the feasible set (counts of
    feasible completions drive the per-cell choice); directions are uniform
    per nonzero cell.  Deterministic for a fixed seed.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng(seed)
    n_cells = partition.num_cells
    limit = budget_limit(p, r)
    costs = _cost_table(partition, grid, p)
    memo: dict[tuple[int, float], int] = {}

    def completions(i: int, budget: float) -> int:
        if i == n_cells:
            return 1
        key = (i, budget)
        if key in memo:
            return memo[key]
        total = 0
        for j in range(grid.a + 1):
            cj = costs[i, j]
            if cj > budget:
                break
            total += completions(i + 1, budget - cj)
        memo[key] = total
        return total

    out = []
    while len(out) < count:
        mag = []
        budget = limit
        for i in range(n_cells):
            weights = []
            for j in range(grid.a + 1):
                cj = costs[i, j]
                weights.append(completions(i + 1, budget - cj) if cj <= budget else 0)
            w = np.array(weights, dtype=float)
            j = int(rng.choice(grid.a + 1, p=w / w.sum()))
            mag.append(j)
            budget -= costs[i, j]
        if budget_used(partition.measures, grid.values[mag], p) > limit:
            continue  # boundary drift between the table and fsum; redraw
        dirs = [int(rng.integers(net.size)) if j > 0 else 0 for j in mag]
        out.append(_family_member(partition, grid, net, mag, dirs))
    return out


def sample_ball(
    partition: Partition,
    n: int,
    p: float,
    r: float,
    count: int,
    seed: int = 0,
    smoothness: str = "rough",
    exact_fraction: float = 0.5,
) -> list[SampledFn]:
    """Random elements of the closed L_p ball of radius r.

    Rough mode draws a random vector per cell; smooth mode a short random
    cosine series.  Each draw is rescaled so its quadrature L_p norm is
    exactly r for the first `exact_fraction` of draws and uniformly in (0, r]
    for the rest.
    """
    if smoothness not in ("rough", "smooth"):
        raise ValueError(f"unknown smoothness mode {smoothness!r}")
    rng = np.random.default_rng(seed)
    dom = partition.domain
    pts = partition.points
    out = []
    n_exact = int(round(exact_fraction * count))
    for idx in range(count):
        if smoothness == "rough":
            cell_vals = rng.standard_normal((partition.num_cells, n))
            vals = cell_vals[partition.node_cell]
        else:
            u = (pts - dom.lower) / dom.lengths  # (P, k) in [0,1]
            vals = np.zeros((pts.shape[0], n))
            for _ in range(3):
                freq = rng.integers(0, 3, size=dom.dim)
                phase = rng.uniform(0.0, 2.0 * math.pi, size=dom.dim)
                direction = rng.standard_normal(n)
                direction /= np.linalg.norm(direction)
                profile = np.prod(np.cos(math.pi * freq * u + phase), axis=1)
                vals += rng.standard_normal() * profile[:, None] * direction
        f = SampledFn(partition, vals)
        norm = lp_norm(f, p)
        target = r if idx < n_exact else r * rng.uniform(0.0, 1.0)
        if norm > 0:
            f = SampledFn(partition, vals * (target / norm))
        out.append(f)
    return out


# --------------------------------------------------------------------------
# projection pipeline (clip -> average -> round -> snap)


def clip_to_gamma(x: SampledFn, gamma: float) -> SampledFn:
    """Radially clip node values to norm <= gamma."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    norms = np.linalg.norm(x.values, axis=1)
    # the relative tolerance makes clipping exactly idempotent in floats
    over = norms > gamma * (1.0 + 1e-12)
    scale = np.where(over, gamma / np.where(norms > 0, norms, 1.0), 1.0)
    return SampledFn(x.partition, x.values * scale[:, None])


def cell_average(x: SampledFn, partition: Partition) -> PiecewiseConstFn:
    """Per-cell quadrature mean; preserves cell integrals exactly."""
    if x.partition is not partition and x.values.shape[0] != partition.points.shape[0]:
        raise ValueError("sampled function is not aligned with the partition")
    qpc = partition.nodes_per_cell
    w = partition.weights.reshape(partition.num_cells, qpc, 1)
    v = x.values.reshape(partition.num_cells, qpc, -1)
    means = (w * v).sum(axis=1) / partition.measures[:, None]
    return PiecewiseConstFn(partition, means)


def round_magnitude(f: PiecewiseConstFn, grid: MagnitudeGrid) -> PiecewiseConstFn:
    """Floor each cell magnitude to the grid; 0 and gamma are kept exactly."""
    norms = f.cell_norms()
    if np.any(norms > grid.gamma * (1.0 + 1e-12)):
        raise ValueError("cell magnitude exceeds gamma; clip first")
    # nudge norms up by a few ulps so a magnitude that already sits on a grid
    # point (up to rounding noise) is not floored a whole step down
    j = np.searchsorted(grid.values, norms * (1.0 + 1e-13), side="right") - 1
    j = np.clip(j, 0, grid.a)
    j[norms >= grid.gamma] = grid.a
    z = grid.values[j]
    scale = np.where(norms > 0, z / np.where(norms > 0, norms, 1.0), 0.0)
    return PiecewiseConstFn(f.partition, f.values * scale[:, None], mag_idx=j)


def snap_direction(f: PiecewiseConstFn, net: DirectionNet) -> PiecewiseConstFn:
    """Replace each nonzero cell direction with its nearest net point."""
    if f.mag_idx is None:
        raise ValueError("snap_direction needs grid magnitudes (run round_magnitude)")
    norms = f.cell_norms()
    dir_idx = np.zeros(f.partition.num_cells, dtype=int)
    values = np.zeros_like(f.values)
    nz = norms > 0
    if np.any(nz):
        dirs = f.values[nz] / norms[nz, None]
        idx, _ = net.nearest(dirs)
        dir_idx[nz] = idx
        values[nz] = norms[nz, None] * net.points[idx]
    return PiecewiseConstFn(f.partition, values, mag_idx=f.mag_idx, dir_idx=dir_idx)


@dataclass
class ProjectionReport:
    """Input-space displacement of each pipeline stage."""

    steps: dict[str, dict[str, float]] = field(default_factory=dict)
    tchebyshev_measure: float = 0.0
    budget_used: float = 0.0
    budget_limit: float = 0.0


def _sup_l1(partition: Partition, a: np.ndarray, b: np.ndarray) -> dict[str, float]:
    d = np.linalg.norm(a - b, axis=1)
    return {
        "sup": float(d.max()) if d.size else 0.0,
        "l1": float(np.sum(partition.weights * d)),
    }


def project_to_net(
    x: SampledFn,
    gamma: float,
    partition: Partition,
    grid: MagnitudeGrid,
    net: DirectionNet,
    p: float,
    r: float,
) -> tuple[PiecewiseConstFn, ProjectionReport]:
    """Run the full pipeline and verify the result is a family member."""
    if lp_norm(x, p) > r * (1.0 + 1e-9):
        raise ValueError("input lies outside the L_p ball of radius r")
    report = ProjectionReport()

    clipped = clip_to_gamma(x, gamma)
    report.steps["clip"] = _sup_l1(partition, x.values, clipped.values)
    norms = np.linalg.norm(x.values, axis=1)
    report.tchebyshev_measure = float(np.sum(partition.weights[norms > gamma]))

    averaged = cell_average(clipped, partition)
    report.steps["average"] = _sup_l1(
        partition, clipped.values, averaged.to_sampled().values
    )

    rounded = round_magnitude(averaged, grid)
    report.steps["round"] = _sup_l1(
        partition, averaged.to_sampled().values, rounded.to_sampled().values
    )

    snapped = snap_direction(rounded, net)
    report.steps["snap"] = _sup_l1(
        partition, rounded.to_sampled().values, snapped.to_sampled().values
    )

    report.budget_used = budget_used(
        partition.measures, grid.values[snapped.mag_idx], p
    )
    report.budget_limit = budget_limit(p, r)
    if report.budget_used > report.budget_limit:
        raise AssertionError("projected function violates the power budget")
    return snapped, report
