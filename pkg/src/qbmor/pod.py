"""Proper orthogonal decomposition baselines.

Snapshots come from a unit step response so the training input is
uncorrelated with the Gaussian-process test inputs.  The trajectory length
is matched to the workload of the interpolation methods through an explicit
cost model: one implicit time step counts as one real factorization-and-
solve of size n, and one complex factorization or solve column counts four
times that (complex arithmetic costs roughly four real multiplies).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationFailure
from .interpolation import BasisCost, InterpolationPointSet, ReductionBasis
from .linalg import truncated_svd_basis
from .simulate import simulate
from .system import StructuredQBSystem


@dataclass
class SnapshotSet:
    """States collected along a training simulation.

    For second-order systems the columns hold the configuration states and
    then the velocity states (twice as many columns as time samples), so a
    single left basis covers both.
    """

    states: np.ndarray  # (n, n_snapshots)
    times: np.ndarray
    input_descriptor: str = "unit_step"


def collect_snapshots(sys: StructuredQBSystem, t_final: float, step: float,
                      stride: int = 1) -> SnapshotSet:
    """Every ``stride``-th state of the unit step response."""
    traj = simulate(sys, "unit_step", t_final, step, store_states=True)
    if traj.unstable:
        raise IntegrationFailure("training simulation became unstable")
    states = traj.states[:, ::stride]
    times = traj.times[::stride]
    if sys.kind == "second_order":
        n = sys.n
        states = np.hstack([states[:n, :], states[n:, :]])
    return SnapshotSet(states=states, times=times)


def pod_basis(snapshots: SnapshotSet, r: int,
              method_tag: str = "POD") -> ReductionBasis:
    """Orthogonal basis of the r leading left singular vectors (V = W)."""
    v = truncated_svd_basis(snapshots.states, r)
    return ReductionBasis(
        V=v, W=v, method_tag=method_tag,
        points_used=InterpolationPointSet(()),
        guaranteed_conditions=[],
    )


def matched_step_budget(cost: BasisCost) -> int:
    """Time steps whose cost compares to an interpolation basis construction:
    four real steps per complex factorization plus one per solve column."""
    return 4 * cost.factorizations + cost.solve_columns


def pod_from_budget(sys: StructuredQBSystem, r: int, step: float,
                    cost: BasisCost, method_tag: str = "POD",
                    stride: int = 1) -> ReductionBasis:
    """POD basis trained on a unit-step trajectory of budget-matched length."""
    steps = max(matched_step_budget(cost), 1)
    snaps = collect_snapshots(sys, t_final=steps * step, step=step,
                              stride=stride)
    return pod_basis(snaps, r, method_tag=method_tag)
