"""Structure-preserving projection of structured quadratic-bilinear systems.

Every frequency-affine term matrix is replaced by its projected counterpart
(W^H K_j V and friends); the scalar frequency functions are untouched, so a
reduced second-order system is again a second-order system, a reduced delay
system keeps its delays, and so on.  The quadratic term is compressed
slice-wise without forming V (x) V.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, RankDeficientBasis, SingularMatrix
from .interpolation import Condition, InterpolationPointSet, ReductionBasis
from .linalg import orthonormalize
from .system import BivariateMatrixFunction, MatrixFunction, StructuredQBSystem
from .transfer import TransferFunctions


@dataclass(eq=False)
class ReducedModel:
    """A projected system of order r together with its provenance."""

    system: StructuredQBSystem
    basis: ReductionBasis
    parent_label: str = ""
    condition_checks: list = field(default_factory=list)

    @property
    def r(self) -> int:
        return self.system.n

    @property
    def method_tag(self) -> str:
        return self.basis.method_tag


def _maybe_real(mat: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(mat) and not np.any(mat.imag):
        return mat.real.copy()
    return mat


def project(sys: StructuredQBSystem, basis: ReductionBasis) -> ReducedModel:
    """Petrov-Galerkin projection of every affine term through (V, W)."""
    v = np.asarray(basis.V)
    w = np.asarray(basis.W)
    if v.shape[0] != sys.n or w.shape[0] != sys.n:
        raise DimensionMismatch(
            f"basis rows {v.shape[0]} do not match system order {sys.n}")
    r = v.shape[1]
    for name, mat in (("V", v), ("W", w)):
        if np.linalg.matrix_rank(mat, tol=1e-10 * max(1.0, np.abs(mat).max())) < r:
            raise RankDeficientBasis(f"{name} does not have full column rank")
    w_adj = w.conj().T

    def right(mat):
        return _maybe_real(np.asarray(mat @ v))

    def both(mat):
        return _maybe_real(np.asarray(w_adj @ (mat @ v)))

    def left(mat):
        return _maybe_real(np.asarray(w_adj @ mat))

    def reduce_mf(mf, op, rows, cols):
        return MatrixFunction(rows, cols, tuple((f, op(m)) for f, m in mf.terms))

    h_terms = tuple((g, h, op.compress(w_adj, v)) for g, h, op in sys.H.terms)
    reduced = StructuredQBSystem(
        n=r, m=sys.m, p=sys.p,
        C=reduce_mf(sys.C, right, sys.p, r),
        K=reduce_mf(sys.K, both, r, r),
        B=reduce_mf(sys.B, left, r, sys.m),
        N=[reduce_mf(nf, both, r, r) for nf in sys.N],
        H=BivariateMatrixFunction(r, h_terms),
        kind=sys.kind,
        label=f"{sys.label} [r={r}, {basis.method_tag}]".strip(),
    )
    return ReducedModel(system=reduced, basis=basis, parent_label=sys.label)


def split_congruence(basis: ReductionBasis, split_row: int) -> ReductionBasis:
    """Block-diagonal enlargement of a basis along a state partition.

    V = [V1; V2] becomes blockdiag(V1, V2) (likewise W), so the span of the
    original basis is contained in the enlarged one and any interpolation
    conditions survive.  Rank-deficient blocks shed columns; both sides are
    trimmed to a common width.
    """
    def enlarge(mat):
        top = orthonormalize(mat[:split_row, :])
        bottom = orthonormalize(mat[split_row:, :])
        n1, n2 = split_row, mat.shape[0] - split_row
        out = np.zeros((mat.shape[0], top.shape[1] + bottom.shape[1]),
                       dtype=np.result_type(top, bottom))
        out[:n1, :top.shape[1]] = top
        out[n1:, top.shape[1]:] = bottom
        return out

    if not 0 < split_row < basis.V.shape[0]:
        raise DimensionMismatch(
            f"split row {split_row} outside the state of size {basis.V.shape[0]}")
    v = enlarge(basis.V)
    if basis.one_sided:
        w = v
    else:
        w = enlarge(basis.W)
        width = min(v.shape[1], w.shape[1])
        v, w = v[:, :width], w[:, :width]
    return ReductionBasis(
        V=v, W=w,
        method_tag=basis.method_tag + "+split",
        points_used=basis.points_used,
        guaranteed_conditions=list(basis.guaranteed_conditions),
    )


@dataclass
class ConditionCheck:
    condition: Condition
    relative_error: float
    passed: bool


def verify_interpolation(sys: StructuredQBSystem, model: ReducedModel,
                         tol: float = 1e-8) -> list:
    """Re-evaluate every guaranteed condition of the model's basis on both
    the full and the reduced system and stamp the model with the outcome."""
    full = TransferFunctions(sys)
    red = TransferFunctions(model.system)
    checks = []
    for cond in model.basis.guaranteed_conditions:
        try:
            g = full.evaluate(cond.kind, cond.points)
            gh = red.evaluate(cond.kind, cond.points)
            denom = np.linalg.norm(g)
            err = np.linalg.norm(g - gh) / denom if denom > 0 else \
                float(np.linalg.norm(gh) > 0)
        except SingularMatrix:
            err = np.inf
        checks.append(ConditionCheck(cond, float(err), bool(err <= tol)))
    model.condition_checks = checks
    return checks
