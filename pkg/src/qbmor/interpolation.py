"""Construction of projection bases that interpolate structured transfer
functions.

Single-point and point-pair constructors return bases whose projected
reduced models match selected symmetric or generalized transfer function
values exactly; each basis records which conditions its construction
guarantees, so downstream code can re-verify them.

Two point-selection strategies wrap the constructors for end-to-end use:

* ``equi`` -- logarithmically equidistant points on the imaginary axis, one
  theorem block per point, conjugate-closed and real-ified, exact
  interpolation.
* ``avg``  -- an oversampled point set whose stacked blocks are compressed
  to the target order (pivoted QR by default, optionally SVD); approximate,
  so no conditions are guaranteed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import SingularMatrix, TargetOrderUnreachable
from .linalg import orthonormalize
from .system import StructuredQBSystem
from .transfer import TransferFunctions

SCHEMES = ("sym", "gen")
SIDEDNESS = ("V", "VW")


@dataclass(frozen=True)
class Condition:
    """One guaranteed interpolation condition: a transfer function variant
    and the frequency tuple at which full and reduced values agree."""

    kind: str  # "sym1" | "sym2" | "sym3" | "B" | "NB" | "NNB" | "HBB"
    points: tuple

    def conjugate(self) -> "Condition":
        return Condition(self.kind, tuple(np.conj(s) for s in self.points))


@dataclass(frozen=True)
class InterpolationPointSet:
    points: tuple
    closure_policy: str = "as_given"  # or "conjugate_closed"

    def __post_init__(self):
        if self.closure_policy not in ("as_given", "conjugate_closed"):
            raise ValueError(f"unknown closure policy {self.closure_policy!r}")


@dataclass(eq=False)
class ReductionBasis:
    """Right/left projection bases with provenance metadata."""

    V: np.ndarray
    W: np.ndarray
    method_tag: str
    points_used: InterpolationPointSet
    guaranteed_conditions: list = field(default_factory=list)

    def __post_init__(self):
        self.V = np.atleast_2d(np.asarray(self.V))
        self.W = np.atleast_2d(np.asarray(self.W))
        if self.V.shape != self.W.shape:
            raise TargetOrderUnreachable(
                f"basis sides have different shapes {self.V.shape} vs {self.W.shape}"
            )

    @property
    def r(self) -> int:
        return self.V.shape[1]

    @property
    def one_sided(self) -> bool:
        return self.V is self.W or np.array_equal(self.V, self.W)


# ---------------------------------------------------------------------------
# single/pair-point constructors
# ---------------------------------------------------------------------------

def _output_solve(ev: TransferFunctions, s: complex) -> np.ndarray:
    """K(s)^(-H) C(s)^H, the left-side (output Krylov) block."""
    c_adj = ev.sys.eval_C(s).astype(complex).conj().T
    return ev.factorization(s).solve(c_adj, adjoint=True)


def _onesided(blocks, conditions, tag, points) -> ReductionBasis:
    v = orthonormalize(np.hstack(blocks))
    return ReductionBasis(
        V=v, W=v, method_tag=tag,
        points_used=InterpolationPointSet(tuple(points)),
        guaranteed_conditions=list(conditions),
    )


def symmetric_pair_basis(sys: StructuredQBSystem, s1: complex,
                         s2: complex) -> ReductionBasis:
    """One-sided basis matching the first symmetric transfer function at two
    points and the second one at the pair."""
    ev = TransferFunctions(sys)
    blocks = [ev.psi1(s1), ev.psi1(s2), ev.psi2(s1, s2)]
    conds = [Condition("sym1", (s1,)), Condition("sym1", (s2,)),
             Condition("sym2", (s1, s2))]
    return _onesided(blocks, conds, "sym-pair(V)", (s1, s2))


def symmetric_pair_basis_twosided(sys: StructuredQBSystem, s1: complex,
                                  s2: complex) -> ReductionBasis:
    """Two-sided basis matching the first symmetric transfer function at two
    points and their sum, plus the second one at the pair."""
    ev = TransferFunctions(sys)
    v = orthonormalize(np.hstack([ev.psi1(s1), ev.psi1(s2)]))
    w = orthonormalize(_output_solve(ev, s1 + s2))
    v, w = _match_dimensions(ev, v, w, (s1, s2))
    conds = [Condition("sym1", (s1,)), Condition("sym1", (s2,)),
             Condition("sym1", (s1 + s2,)), Condition("sym2", (s1, s2))]
    return ReductionBasis(
        V=v, W=w, method_tag="sym-pair(VW)",
        points_used=InterpolationPointSet((s1, s2)),
        guaranteed_conditions=conds,
    )


def symmetric_coincident_basis(sys: StructuredQBSystem, sigma: complex,
                               kind: str = "onesided") -> ReductionBasis:
    """Bases built from a single interpolation point sigma (all symmetric
    levels evaluated at coincident arguments).

    ``kind`` selects the construction:

    * ``"onesided"``        -- V spans psi_1, psi_2, psi_3; matches levels
      1-3 at sigma with W = V.
    * ``"twosided_level2"`` -- V spans psi_1, W the output solve at 2 sigma;
      matches level 1 at sigma and 2 sigma and level 2 at (sigma, sigma).
    * ``"twosided_level3"`` -- V spans psi_1 and psi_2, W the output solve at
      3 sigma; additionally matches level 3 at (sigma, sigma, sigma).
    """
    ev = TransferFunctions(sys)
    s = complex(sigma)
    if kind == "onesided":
        blocks = [ev.psi1(s), ev.psi2(s, s), ev.psi3(s, s, s)]
        conds = [Condition("sym1", (s,)), Condition("sym2", (s, s)),
                 Condition("sym3", (s, s, s))]
        return _onesided(blocks, conds, "sym-coincident(V)", (s,))
    if kind == "twosided_level2":
        v = orthonormalize(ev.psi1(s))
        w = orthonormalize(_output_solve(ev, 2 * s))
        conds = [Condition("sym1", (s,)), Condition("sym1", (2 * s,)),
                 Condition("sym2", (s, s))]
    elif kind == "twosided_level3":
        v = orthonormalize(np.hstack([ev.psi1(s), ev.psi2(s, s)]))
        w = orthonormalize(_output_solve(ev, 3 * s))
        conds = [Condition("sym1", (s,)), Condition("sym1", (3 * s,)),
                 Condition("sym2", (s, s)), Condition("sym3", (s, s, s))]
    else:
        raise ValueError(f"unknown construction {kind!r}")
    v, w = _match_dimensions(ev, v, w, (s,))
    return ReductionBasis(
        V=v, W=w, method_tag=f"sym-coincident({kind})",
        points_used=InterpolationPointSet((s,)),
        guaranteed_conditions=conds,
    )


def generalized_triple_basis(sys: StructuredQBSystem, s1: complex, s2: complex,
                             s3: complex,
                             include_double_bilinear: bool = True
                             ) -> ReductionBasis:
    """One-sided basis matching the generalized transfer functions at the
    point triple.

    With ``include_double_bilinear`` the twice-chained bilinear value at
    (s1, s2, s3) is matched as well; dropping it shrinks the basis by one
    block and removes only that condition.
    """
    ev = TransferFunctions(sys)
    v11, v12 = ev.psi1(s1), ev.psi1(s2)
    v2 = ev.factorization(s2).solve(ev._bilinear_sample(s1))
    v32 = ev.factorization(s3).solve(sys.H.apply_block(s2, s1, v12, v11))
    blocks = [v11, v12, v2, v32]
    conds = [Condition("B", (s1,)), Condition("B", (s2,)),
             Condition("NB", (s1, s2)), Condition("HBB", (s1, s2, s3))]
    if include_double_bilinear:
        v31 = ev.factorization(s3).solve(sys.apply_N(s2, v2))
        blocks.insert(3, v31)
        conds.append(Condition("NNB", (s1, s2, s3)))
    return _onesided(blocks, conds, "gen-triple(V)", (s1, s2, s3))


def generalized_pair_basis_twosided(sys: StructuredQBSystem, s1: complex,
                                    s2: complex) -> ReductionBasis:
    """Two-sided basis matching the generalized transfer functions with a
    single input solve at s1 and a single output solve at s2."""
    ev = TransferFunctions(sys)
    v = orthonormalize(ev.psi1(s1))
    w = orthonormalize(_output_solve(ev, s2))
    v, w = _match_dimensions(ev, v, w, (s1, s2))
    conds = [Condition("B", (s1,)), Condition("B", (s2,)),
             Condition("NB", (s1, s2)), Condition("HBB", (s1, s1, s2))]
    return ReductionBasis(
        V=v, W=w, method_tag="gen-pair(VW)",
        points_used=InterpolationPointSet((s1, s2)),
        guaranteed_conditions=conds,
    )


# ---------------------------------------------------------------------------
# span extension and dimension matching
# ---------------------------------------------------------------------------

def _extend(q: np.ndarray, candidates: np.ndarray, max_new: int) -> np.ndarray:
    """Append up to ``max_new`` orthonormal columns from ``candidates`` after
    deflating the span of ``q`` (pivoted QR; trailing pivots dropped first)."""
    if max_new <= 0 or candidates.shape[1] == 0:
        return q
    if q.shape[1]:
        c = candidates - q @ (q.conj().T @ candidates)
        c = c - q @ (q.conj().T @ c)
    else:
        c = candidates
    qq, rr, _ = sla.qr(c, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rr))
    if diag.size == 0 or diag[0] == 0.0:
        return q
    scale = max(np.max(np.abs(candidates)), np.max(np.abs(q)) if q.size else 0.0)
    rank = int(np.count_nonzero(diag > 1e-10 * max(diag[0], scale)))
    take = min(rank, max_new)
    if take == 0:
        return q
    if q.shape[1] == 0:
        return qq[:, :take]
    return np.hstack([q, qq[:, :take]])


def _spans(q: np.ndarray, block: np.ndarray, rtol: float = 1e-8) -> bool:
    """Whether every column of ``block`` lies in the span of ``q``."""
    scale = np.linalg.norm(block)
    if scale == 0.0:
        return True
    res = block - q @ (q.conj().T @ block)
    return np.linalg.norm(res) <= rtol * scale


def _match_dimensions(ev: TransferFunctions, v: np.ndarray, w: np.ndarray,
                      base_points: tuple) -> tuple:
    """Grow the thinner of V and W to the width of the other.

    Padding columns come from structured solves at multiples of the base
    points (input solves for V, output solves for W), which keeps the
    required spans intact; a seeded random complement is the last resort for
    degenerate systems.
    """
    target = max(v.shape[1], w.shape[1])

    def candidates(side: str):
        for k in range(2, 8):
            for s in base_points:
                sk = k * complex(s)
                try:
                    yield ev.psi1(sk) if side == "v" else _output_solve(ev, sk)
                except SingularMatrix:
                    continue
        rng = np.random.default_rng(ev.sys.n * 7919 + target)
        yield rng.standard_normal((ev.sys.n, target)) \
            + 1j * rng.standard_normal((ev.sys.n, target))

    out = {}
    for side, mat in (("v", v), ("w", w)):
        if mat.shape[1] < target:
            for extra in candidates(side):
                mat = _extend(mat, np.asarray(extra, dtype=complex),
                              target - mat.shape[1])
                if mat.shape[1] == target:
                    break
        out[side] = mat
    v, w = out["v"], out["w"]
    if v.shape[1] != w.shape[1]:
        raise TargetOrderUnreachable("could not match the two basis dimensions")
    return v, w


# ---------------------------------------------------------------------------
# point grids
# ---------------------------------------------------------------------------

def log_imaginary_points(omega_min: float, omega_max: float,
                         count: int) -> np.ndarray:
    """Logarithmically equidistant frequencies in [omega_min, omega_max]
    (the geometric midpoint when a single point is requested)."""
    if count < 1:
        raise ValueError("need at least one point")
    if count == 1:
        return np.array([np.sqrt(omega_min * omega_max)])
    return np.logspace(np.log10(omega_min), np.log10(omega_max), count)


def _extra_omegas(omega_min: float, omega_max: float, base):
    """Generate refinement frequencies: log-midpoints of the current grid,
    ordered from the interior of the range outward, refining indefinitely."""
    current = sorted(set(float(b) for b in base) | {omega_min, omega_max})
    seen = set(current)
    while True:
        logs = np.log10(np.asarray(current))
        mids = 10.0 ** ((logs[:-1] + logs[1:]) / 2.0)
        order = np.argsort(np.abs(np.arange(mids.size) - (mids.size - 1) / 2.0))
        emitted = False
        for idx in order:
            w = float(mids[idx])
            if w not in seen:
                seen.add(w)
                emitted = True
                yield w
        if not emitted:
            return
        current = sorted(seen)


def _realify(block: np.ndarray) -> np.ndarray:
    return np.hstack([block.real, block.imag])


# ---------------------------------------------------------------------------
# per-point blocks for the strategies
# ---------------------------------------------------------------------------

def _point_blocks(ev: TransferFunctions, scheme: str, side: str, s: complex,
                  alt_index: int, mode: str):
    """Blocks contributed by one interpolation point, with the conditions
    they buy and (factorization, solve-column) cost counters."""
    sys = ev.sys
    m, p = sys.m, sys.p
    if side == "W":
        target = 2 * s if scheme == "sym" else s
        return [_output_solve(ev, target)], [], 1, p
    if scheme == "sym":
        blocks = [ev.psi1(s), ev.psi2(s, s)]
        conds = [Condition("sym1", (s,)), Condition("sym2", (s, s))]
        return blocks, conds, 2, m + m * m
    blocks = [ev.psi1(s)]
    conds = [Condition("B", (s,))]

    def nb_block():
        return ev.factorization(s).solve(ev._bilinear_sample(s))

    def hbb_block():
        p1 = ev.psi1(s)
        return ev.factorization(s).solve(sys.H.apply_block(s, s, p1, p1))

    if mode == "all":
        blocks += [nb_block(), hbb_block()]
        conds += [Condition("NB", (s, s)), Condition("HBB", (s, s, s))]
        return blocks, conds, 1, m + 2 * m * m
    if alt_index % 2 == 0:
        blocks.append(nb_block())
        conds.append(Condition("NB", (s, s)))
    else:
        blocks.append(hbb_block())
        conds.append(Condition("HBB", (s, s, s)))
    return blocks, conds, 1, m + m * m


def _twosided_point_conditions(scheme: str, s: complex) -> list:
    if scheme == "sym":
        return [Condition("sym1", (s,)), Condition("sym1", (2 * s,)),
                Condition("sym2", (s, s))]
    return [Condition("B", (s,)), Condition("NB", (s, s)),
            Condition("HBB", (s, s, s))]


def _point_width(scheme: str, side: str, m: int, p: int, mode: str) -> int:
    if side == "W":
        return p
    if side == "V+":  # input solve only (the V side of two-sided bases)
        return m
    if scheme == "gen" and mode == "all":
        return m + 2 * m * m
    return m + m * m


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

@dataclass
class BasisCost:
    """Solve counters used to match baseline workloads."""

    factorizations: int = 0
    solve_columns: int = 0

    def add(self, facts: int, cols: int):
        self.factorizations += facts
        self.solve_columns += cols


def _assemble_side(ev: TransferFunctions, scheme: str, side: str, r: int,
                   freq_range: tuple, realify: bool, cost: BasisCost,
                   base_points=None, max_extra: int = 64):
    """Assemble one side of an exact-interpolation basis to exactly r
    columns.

    ``side`` is "V" (full per-point blocks), "V+" (input solves only, for
    two-sided bases) or "W" (output solves).  Points are either the
    logarithmic grid sized from the per-point block width, or the supplied
    ``base_points`` followed by interior-outward refinement frequencies.
    Returns (matrix, per-point conditions, fully spanned frequencies).
    """
    sys = ev.sys
    width_c = _point_width(scheme, side, sys.m, sys.p, "alternating")
    width = 2 * width_c if realify else width_c
    if base_points is None:
        npts = r // width
        if npts == 0:
            raise TargetOrderUnreachable(
                f"one interpolation block has {width} columns, more than r = {r}")
        primary = [float(w) for w in log_imaginary_points(*freq_range, npts)]
    else:
        primary = [float(w) for w in base_points]
    q = np.zeros((sys.n, 0))
    conditions: list = []
    complete_freqs: list = []
    alt = 0

    def add_point(w: float) -> bool:
        nonlocal q, alt
        s = 1j * w
        if side == "V+":
            blocks, conds, nf, nc = [ev.psi1(s)], [], 1, sys.m
        else:
            blocks, conds, nf, nc = _point_blocks(ev, scheme, side, s, alt,
                                                  mode="alternating")
        alt += 1
        cost.add(nf, nc)
        stacked = np.hstack(blocks)
        if realify:
            stacked = _realify(stacked)
        q = _extend(q, stacked, r - q.shape[1])
        if _spans(q, stacked):
            complete_freqs.append(w)
            conditions.extend(conds)
            if realify:
                conditions.extend(c.conjugate() for c in conds)
        return q.shape[1] >= r

    done = False
    for w in primary:
        if add_point(w):
            done = True
            break
    if not done:
        for count, w in enumerate(_extra_omegas(freq_range[0], freq_range[1],
                                                primary)):
            if add_point(w) or count >= max_extra:
                break
    if q.shape[1] != r:
        raise TargetOrderUnreachable(
            f"could only assemble {q.shape[1]} of {r} columns")
    return q, conditions, complete_freqs


def interpolation_basis(sys: StructuredQBSystem, scheme: str, sidedness: str,
                        r: int, freq_range: tuple,
                        tag: str | None = None) -> ReductionBasis:
    """Exact-interpolation basis on a logarithmically equidistant imaginary
    point grid, conjugate-closed and real-ified for real systems.

    ``scheme`` selects symmetric ("sym") or generalized ("gen") transfer
    functions; ``sidedness`` one-sided ("V", W = V) or two-sided ("VW").
    Both sides come out with exactly ``r`` columns.  When r is not a multiple
    of the per-point block width, refinement points fill the remainder;
    points whose blocks were truncated contribute no guaranteed conditions.
    For the generalized one-sided scheme the bilinear and quadratic samples
    alternate across points, each preceded by the input solve.
    """
    if scheme not in SCHEMES or sidedness not in SIDEDNESS:
        raise ValueError(f"unknown method {scheme}/{sidedness}")
    ev = TransferFunctions(sys)
    realify = sys.is_real()
    cost = BasisCost()
    if sidedness == "V":
        v, conds, pts = _assemble_side(ev, scheme, "V", r, freq_range,
                                       realify, cost)
        w = v
        all_pts = pts
    else:
        v, _, vpts = _assemble_side(ev, scheme, "V+", r, freq_range,
                                    realify, cost)
        w, _, wpts = _assemble_side(ev, scheme, "W", r, freq_range,
                                    realify, cost, base_points=vpts)
        shared = [p for p in vpts if p in set(wpts)]
        conds = []
        for wfreq in shared:
            cs = _twosided_point_conditions(scheme, 1j * wfreq)
            conds.extend(cs)
            if realify:
                conds.extend(c.conjugate() for c in cs)
        all_pts = sorted(set(vpts) | set(wpts))
    tag = tag or f"{'Sym' if scheme == 'sym' else 'Gen'}Int({sidedness},equi)"
    basis = ReductionBasis(
        V=v, W=w, method_tag=tag,
        points_used=InterpolationPointSet(
            tuple(1j * np.asarray(all_pts)),
            closure_policy="conjugate_closed" if realify else "as_given"),
        guaranteed_conditions=conds,
    )
    basis.cost = cost
    return basis


def _compress(x: np.ndarray, r: int, how: str) -> np.ndarray:
    if x.shape[1] < r:
        raise TargetOrderUnreachable(
            f"{x.shape[1]} sampled columns cannot span an order-{r} basis")
    if how == "svd":
        u, s, _ = np.linalg.svd(x, full_matrices=False)
        if s[0] == 0 or s[r - 1] <= 1e-13 * s[0]:
            raise TargetOrderUnreachable("sampled columns are rank deficient")
        return u[:, :r]
    q, rr, _ = sla.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rr))
    if diag[0] == 0 or diag[r - 1] <= 1e-13 * diag[0]:
        raise TargetOrderUnreachable("sampled columns are rank deficient")
    return q[:, :r]


def oversampled_basis(sys: StructuredQBSystem, scheme: str, sidedness: str,
                      r: int, freq_range: tuple, oversample: int,
                      compression: str = "qr",
                      tag: str | None = None) -> ReductionBasis:
    """Approximate basis from an oversampled point grid compressed to order
    ``r`` (pivoted QR by default, truncated SVD on request).

    All transfer function levels of the chosen scheme are sampled at every
    point.  Interpolation is only approximate, so no conditions are
    guaranteed.  The left side of a two-sided basis uses as many points as
    needed to spend a comparable number of solve columns.
    """
    if scheme not in SCHEMES or sidedness not in SIDEDNESS:
        raise ValueError(f"unknown method {scheme}/{sidedness}")
    ev = TransferFunctions(sys)
    realify = sys.is_real()
    cost = BasisCost()
    omegas = log_imaginary_points(*freq_range, oversample)

    def collect(side, pts):
        columns = []
        for w in pts:
            bl, _, nf, nc = _point_blocks(ev, scheme, side, 1j * float(w),
                                          0, mode="all")
            cost.add(nf, nc)
            stacked = np.hstack(bl)
            columns.append(_realify(stacked) if realify else stacked)
        return np.hstack(columns)

    v = _compress(collect("V", omegas), r, compression)
    if sidedness == "V":
        w = v
    else:
        m, p = sys.m, sys.p
        v_cols = _point_width(scheme, "V", m, p, "all")
        n_w = max(int(np.ceil(oversample * v_cols / p)), oversample)
        factor = 2 if realify else 1
        n_w = max(n_w, int(np.ceil(r / (factor * p))))
        wpts = log_imaginary_points(*freq_range, n_w)
        w = _compress(collect("W", wpts), r, compression)
    tag = tag or f"{'Sym' if scheme == 'sym' else 'Gen'}Int({sidedness},avg)"
    basis = ReductionBasis(
        V=v, W=w, method_tag=tag,
        points_used=InterpolationPointSet(
            tuple(1j * np.asarray(omegas)),
            closure_policy="conjugate_closed" if realify else "as_given"),
        guaranteed_conditions=[],
    )
    basis.cost = cost
    return basis


def build_method_basis(sys: StructuredQBSystem, scheme: str, sidedness: str,
                       selection: str, r: int, freq_range: tuple,
                       oversample: int | None = None) -> ReductionBasis:
    """Dispatch on the (scheme, sidedness, selection) method roster."""
    if selection == "equi":
        return interpolation_basis(sys, scheme, sidedness, r, freq_range)
    if selection == "avg":
        if oversample is None:
            oversample = default_oversample(sys, scheme, r)
        return oversampled_basis(sys, scheme, sidedness, r, freq_range,
                                 oversample)
    raise ValueError(f"unknown point selection {selection!r}")


def default_oversample(sys: StructuredQBSystem, scheme: str, r: int) -> int:
    """Default sampling points for the oversampled strategy: four times what
    the exact strategy would use, at least four."""
    factor = 2 if sys.is_real() else 1
    width = factor * _point_width(scheme, "V", sys.m, sys.p, "alternating")
    return max(4, 4 * max(r // width, 1))
