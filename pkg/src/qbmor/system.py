"""Structured quadratic-bilinear systems in frequency-affine form.

A system is described by five matrix-valued functions of the complex
frequency: an output map C(s), the linear dynamics K(s), an input map B(s),
m bilinear blocks N_j(s), and a bivariate quadratic term H(s1, s2).  Each is
stored as a sum of constant matrices weighted by scalar frequency functions,
which is exactly the form preserved by projection.

Three concrete families are provided as presets: plain first-order systems,
second-order (mass/damping/stiffness) systems, and systems with constant
time delays in the linear part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, NegativeDelay
from .linalg import QuadraticOperator


# ---------------------------------------------------------------------------
# scalar frequency functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrequencyFunction:
    """A scalar function of the complex frequency: 1, s^k, e^(-tau*s), or a
    product of those."""

    kind: str  # "constant" | "monomial" | "exp_decay" | "product"
    power: int = 0
    delay: float = 0.0
    factors: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "monomial", "exp_decay", "product"):
            raise ValueError(f"unknown frequency function kind {self.kind!r}")
        if self.kind == "monomial" and self.power < 1:
            raise ValueError("monomial power must be >= 1")
        if self.kind == "exp_decay" and self.delay < 0:
            raise NegativeDelay(f"delay {self.delay} is negative")

    def __call__(self, s):
        if self.kind == "constant":
            return 1.0 + 0.0j if isinstance(s, complex) else 1.0
        if self.kind == "monomial":
            return s ** self.power
        if self.kind == "exp_decay":
            return np.exp(-self.delay * s)
        out = 1.0
        for f in self.factors:
            out = out * f(s)
        return out

    # named constructors keep call sites readable
    @staticmethod
    def constant() -> "FrequencyFunction":
        return FrequencyFunction("constant")

    @staticmethod
    def monomial(power: int = 1) -> "FrequencyFunction":
        return FrequencyFunction("monomial", power=power)

    @staticmethod
    def exp_decay(delay: float) -> "FrequencyFunction":
        return FrequencyFunction("exp_decay", delay=float(delay))

    @staticmethod
    def product(*factors: "FrequencyFunction") -> "FrequencyFunction":
        return FrequencyFunction("product", factors=tuple(factors))

    def to_tag(self) -> dict:
        if self.kind == "product":
            return {"kind": "product", "factors": [f.to_tag() for f in self.factors]}
        tag = {"kind": self.kind}
        if self.kind == "monomial":
            tag["power"] = self.power
        if self.kind == "exp_decay":
            tag["delay"] = self.delay
        return tag

    @staticmethod
    def from_tag(tag: dict) -> "FrequencyFunction":
        kind = tag["kind"]
        if kind == "constant":
            return FrequencyFunction.constant()
        if kind == "monomial":
            return FrequencyFunction.monomial(int(tag["power"]))
        if kind == "exp_decay":
            return FrequencyFunction.exp_decay(float(tag["delay"]))
        if kind == "product":
            return FrequencyFunction.product(
                *(FrequencyFunction.from_tag(t) for t in tag["factors"])
            )
        raise ValueError(f"unknown frequency function tag {tag!r}")


ONE = FrequencyFunction.constant()
S = FrequencyFunction.monomial(1)
S2 = FrequencyFunction.monomial(2)


# ---------------------------------------------------------------------------
# matrix-valued functions
# ---------------------------------------------------------------------------

def _dense(m) -> np.ndarray:
    return np.asarray(m.todense()) if sp.issparse(m) else np.asarray(m)


@dataclass(eq=False)
class MatrixFunction:
    """Sum of constant matrices weighted by scalar frequency functions."""

    rows: int
    cols: int
    terms: tuple  # of (FrequencyFunction, matrix) pairs

    def __post_init__(self):
        self.terms = tuple(self.terms)
        for _, mat in self.terms:
            if mat.shape != (self.rows, self.cols):
                raise DimensionMismatch(
                    f"term of shape {mat.shape} in a {self.rows}x{self.cols} function"
                )

    def __call__(self, s) -> np.ndarray:
        out = None
        for f, mat in self.terms:
            piece = f(s) * _dense(mat)
            out = piece if out is None else out + piece
        if out is None:
            dtype = complex if isinstance(s, complex) else float
            return np.zeros((self.rows, self.cols), dtype=dtype)
        return out

    def tags(self) -> tuple:
        return tuple(f for f, _ in self.terms)

    def term_for(self, func: FrequencyFunction):
        """The constant matrix attached to ``func``, or None."""
        for f, mat in self.terms:
            if f == func:
                return mat
        return None

    def map_terms(self, op) -> "MatrixFunction":
        """A new function with every term matrix replaced by ``op(matrix)``."""
        new_terms = tuple((f, op(mat)) for f, mat in self.terms)
        if new_terms:
            rows, cols = new_terms[0][1].shape
        else:
            rows, cols = self.rows, self.cols
        return MatrixFunction(rows, cols, new_terms)


@dataclass(eq=False)
class BivariateMatrixFunction:
    """Separable bivariate quadratic term: sum of g_j(s1) h_j(s2) H_j."""

    n: int
    terms: tuple  # of (FrequencyFunction, FrequencyFunction, QuadraticOperator)

    def __post_init__(self):
        self.terms = tuple(self.terms)
        for _, _, op in self.terms:
            if op.n != self.n:
                raise DimensionMismatch(
                    f"operator of size {op.n} in a size-{self.n} quadratic term"
                )

    @property
    def is_zero(self) -> bool:
        return all(op.is_zero for _, _, op in self.terms)

    def __call__(self, s1, s2) -> QuadraticOperator:
        """The evaluated operator H(s1, s2) (materializes combined slices)."""
        if not self.terms:
            return QuadraticOperator.zeros(self.n)
        coeffs = [g(s1) * h(s2) for g, h, _ in self.terms]
        return QuadraticOperator.linear_combination(coeffs, [op for _, _, op in self.terms])

    def apply_block(self, s1, s2, x_block, y_block) -> np.ndarray:
        """``H(s1, s2) (X (x) Y)`` without materializing the combined slices."""
        x_block = np.atleast_2d(np.asarray(x_block))
        y_block = np.atleast_2d(np.asarray(y_block))
        a, b = x_block.shape[1], y_block.shape[1]
        out = np.zeros((self.n, a * b), dtype=complex)
        for g, h, op in self.terms:
            if op.is_zero:
                continue
            out += (g(s1) * h(s2)) * op.apply_block(x_block, y_block)
        return out

    def map_operators(self, op_map) -> "BivariateMatrixFunction":
        new_terms = tuple((g, h, op_map(op)) for g, h, op in self.terms)
        n = new_terms[0][2].n if new_terms else self.n
        return BivariateMatrixFunction(n, new_terms)


# ---------------------------------------------------------------------------
# the structured system
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class StructuredQBSystem:
    """A quadratic-bilinear system in frequency-affine structured form."""

    n: int
    m: int
    p: int
    C: MatrixFunction
    K: MatrixFunction
    B: MatrixFunction
    N: list  # m MatrixFunction blocks, each n x n
    H: BivariateMatrixFunction
    kind: str = "generic"  # "first_order" | "second_order" | "time_delay" | "generic"
    label: str = ""

    def __post_init__(self):
        if self.C.rows != self.p or self.C.cols != self.n:
            raise DimensionMismatch("output map has wrong shape")
        if self.K.rows != self.n or self.K.cols != self.n:
            raise DimensionMismatch("linear dynamics have wrong shape")
        if self.B.rows != self.n or self.B.cols != self.m:
            raise DimensionMismatch("input map has wrong shape")
        if len(self.N) != self.m:
            raise DimensionMismatch(
                f"{len(self.N)} bilinear blocks for {self.m} inputs"
            )
        for nf in self.N:
            if nf.rows != self.n or nf.cols != self.n:
                raise DimensionMismatch("bilinear block has wrong shape")
        if self.H.n != self.n:
            raise DimensionMismatch("quadratic term has wrong size")

    # -- evaluation ---------------------------------------------------------

    def eval_C(self, s) -> np.ndarray:
        return self.C(s)

    def eval_K(self, s) -> np.ndarray:
        return self.K(s)

    def eval_B(self, s) -> np.ndarray:
        return self.B(s)

    def eval_N(self, s) -> list:
        return [nf(s) for nf in self.N]

    def eval_H(self, s1, s2) -> QuadraticOperator:
        return self.H(s1, s2)

    def apply_N(self, s, x_block) -> np.ndarray:
        """``N(s) (I_m (x) X)`` = the blocks ``N_j(s) X`` side by side."""
        x_block = np.atleast_2d(np.asarray(x_block))
        if not self.N:
            return np.zeros((self.n, 0), dtype=complex)
        return np.hstack([nf(s) @ x_block for nf in self.N])

    @property
    def has_bilinear(self) -> bool:
        return any(nf.terms for nf in self.N)

    def is_real(self) -> bool:
        mats = [mat for f, mat in self.C.terms + self.K.terms + self.B.terms]
        for nf in self.N:
            mats.extend(mat for _, mat in nf.terms)
        for term in self.H.terms:
            op = term[2]
            if not op.is_zero:
                if op.is_sparse:
                    mats.extend(op.slices())
                else:
                    mats.append(op._tensor)
        for m in mats:
            data = m.data if sp.issparse(m) else np.asarray(m)
            if np.iscomplexobj(data) and np.abs(np.imag(data)).max() > 0:
                return False
        return True


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _zero_quadratic(n):
    return BivariateMatrixFunction(n, ())


def _const_quadratic(n, h_op):
    if h_op is None:
        return _zero_quadratic(n)
    op = QuadraticOperator.coerce(h_op, n)
    if op.is_zero:
        return _zero_quadratic(n)
    return BivariateMatrixFunction(n, ((ONE, ONE, op),))


def preset_first_order(e, a, h=None, n_list=(), b=None, c=None,
                       label: str = "") -> StructuredQBSystem:
    """First-order system: K(s) = s E - A with constant B, C, N_j, H."""
    e = np.asarray(e) if not sp.issparse(e) else e
    a = np.asarray(a) if not sp.issparse(a) else a
    n = e.shape[0]
    b = np.atleast_2d(np.asarray(b, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    m = b.shape[1]
    p = c.shape[0]
    n_list = list(n_list)
    if len(n_list) not in (0, m):
        raise DimensionMismatch(f"{len(n_list)} bilinear blocks for {m} inputs")
    if not n_list:
        n_list = [np.zeros((n, n)) for _ in range(m)]
    return StructuredQBSystem(
        n=n, m=m, p=p,
        C=MatrixFunction(p, n, ((ONE, c),)),
        K=MatrixFunction(n, n, ((S, e), (ONE, -a))),
        B=MatrixFunction(n, m, ((ONE, b),)),
        N=[MatrixFunction(n, n, ((ONE, nj),)) for nj in n_list],
        H=_const_quadratic(n, h),
        kind="first_order",
        label=label or "first-order system",
    )


def preset_second_order(mass, damping, stiffness,
                        h_pp=None, h_pv=None, h_vp=None, h_vv=None,
                        n_p_list=(), n_v_list=(), b_u=None, c_p=None, c_v=None,
                        label: str = "") -> StructuredQBSystem:
    """Second-order system with K(s) = s^2 M + s D + K, C(s) = C_p + s C_v,
    N_j(s) = N_pj + s N_vj and the quadratic term assembled from position /
    velocity blocks.

    The stored bivariate term is -(H_pp + s2 H_pv + s1 H_vp + s1 s2 H_vv),
    matching the sign convention of the time-domain equations
    ``0 = M q'' + D q' + K q + H_pp (q (x) q) + ... - N u - B u``.
    """
    mass = np.asarray(mass)
    n = mass.shape[0]
    damping = np.asarray(damping)
    stiffness = np.asarray(stiffness)
    if damping.shape != (n, n) or stiffness.shape != (n, n):
        raise DimensionMismatch("mass, damping and stiffness must share shape")
    b_u = np.atleast_2d(np.asarray(b_u, dtype=float))
    m = b_u.shape[1]
    if c_p is None and c_v is None:
        raise DimensionMismatch("at least one of the output maps is required")
    c_p = np.zeros((np.atleast_2d(c_v).shape[0], n)) if c_p is None else np.atleast_2d(c_p)
    c_v = np.zeros((c_p.shape[0], n)) if c_v is None else np.atleast_2d(c_v)
    p = c_p.shape[0]

    n_p_list = list(n_p_list) or [np.zeros((n, n)) for _ in range(m)]
    n_v_list = list(n_v_list) or [np.zeros((n, n)) for _ in range(m)]
    if len(n_p_list) != m or len(n_v_list) != m:
        raise DimensionMismatch("one bilinear block pair per input required")

    ops = [QuadraticOperator.coerce(h, n).scaled(-1.0)
           for h in (h_pp, h_pv, h_vp, h_vv)]
    h_terms = tuple(
        (g, f, op)
        for (g, f), op in zip(((ONE, ONE), (ONE, S), (S, ONE), (S, S)), ops)
    )
    return StructuredQBSystem(
        n=n, m=m, p=p,
        C=MatrixFunction(p, n, ((ONE, c_p), (S, c_v))),
        K=MatrixFunction(n, n, ((S2, mass), (S, damping), (ONE, stiffness))),
        B=MatrixFunction(n, m, ((ONE, b_u),)),
        N=[MatrixFunction(n, n, ((ONE, np_j), (S, nv_j)))
           for np_j, nv_j in zip(n_p_list, n_v_list)],
        H=BivariateMatrixFunction(n, h_terms),
        kind="second_order",
        label=label or "second-order system",
    )


def preset_time_delay(e, a_list, tau_list, h=None, n_list=(), b=None, c=None,
                      label: str = "") -> StructuredQBSystem:
    """Time-delay system: K(s) = s E - sum_k A_k e^(-tau_k s)."""
    a_list = list(a_list)
    tau_list = [float(t) for t in tau_list]
    if len(a_list) != len(tau_list):
        raise DimensionMismatch("one delay per matrix required")
    for tau in tau_list:
        if tau < 0:
            raise NegativeDelay(f"delay {tau} is negative")
    e = np.asarray(e) if not sp.issparse(e) else e
    n = e.shape[0]
    b = np.atleast_2d(np.asarray(b, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    m = b.shape[1]
    p = c.shape[0]
    n_list = list(n_list) or [np.zeros((n, n)) for _ in range(m)]
    k_terms = [(S, e)]
    k_terms += [(FrequencyFunction.exp_decay(tau), -(a if sp.issparse(a) else np.asarray(a)))
                for a, tau in zip(a_list, tau_list)]
    return StructuredQBSystem(
        n=n, m=m, p=p,
        C=MatrixFunction(p, n, ((ONE, c),)),
        K=MatrixFunction(n, n, tuple(k_terms)),
        B=MatrixFunction(n, m, ((ONE, b),)),
        N=[MatrixFunction(n, n, ((ONE, nj),)) for nj in n_list],
        H=_const_quadratic(n, h),
        kind="time_delay",
        label=label or "time-delay system",
    )


# ---------------------------------------------------------------------------
# preset introspection (used by simulation, embedding and serialization)
# ---------------------------------------------------------------------------

@dataclass
class FirstOrderParts:
    e: np.ndarray
    a: np.ndarray
    h: QuadraticOperator
    n_list: list
    b: np.ndarray
    c: np.ndarray


@dataclass
class SecondOrderParts:
    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    # sign convention of the time-domain equations (positive physical blocks)
    h_pp: QuadraticOperator
    h_pv: QuadraticOperator
    h_vp: QuadraticOperator
    h_vv: QuadraticOperator
    n_p_list: list
    n_v_list: list
    b_u: np.ndarray
    c_p: np.ndarray
    c_v: np.ndarray


@dataclass
class TimeDelayParts:
    e: np.ndarray
    delayed: list  # (tau_k, A_k) pairs, tau_k >= 0
    h: QuadraticOperator
    n_list: list
    b: np.ndarray
    c: np.ndarray


def _require_kind(sys: StructuredQBSystem, kind: str):
    if sys.kind != kind:
        raise ValueError(f"expected a {kind} system, got {sys.kind!r}")


def first_order_parts(sys: StructuredQBSystem) -> FirstOrderParts:
    _require_kind(sys, "first_order")
    e = sys.K.term_for(S)
    neg_a = sys.K.term_for(ONE)
    h_terms = [op for _, _, op in sys.H.terms]
    return FirstOrderParts(
        e=_dense(e),
        a=-_dense(neg_a),
        h=h_terms[0] if h_terms else QuadraticOperator.zeros(sys.n),
        n_list=[_dense(nf.term_for(ONE)) for nf in sys.N],
        b=_dense(sys.B.term_for(ONE)),
        c=_dense(sys.C.term_for(ONE)),
    )


def second_order_parts(sys: StructuredQBSystem) -> SecondOrderParts:
    _require_kind(sys, "second_order")
    blocks = {}
    for g, h, op in sys.H.terms:
        blocks[(g, h)] = op.scaled(-1.0)
    zero = QuadraticOperator.zeros(sys.n)
    return SecondOrderParts(
        mass=_dense(sys.K.term_for(S2)),
        damping=_dense(sys.K.term_for(S)),
        stiffness=_dense(sys.K.term_for(ONE)),
        h_pp=blocks.get((ONE, ONE), zero),
        h_pv=blocks.get((ONE, S), zero),
        h_vp=blocks.get((S, ONE), zero),
        h_vv=blocks.get((S, S), zero),
        n_p_list=[_dense(nf.term_for(ONE)) for nf in sys.N],
        n_v_list=[_dense(nf.term_for(S)) for nf in sys.N],
        b_u=_dense(sys.B.term_for(ONE)),
        c_p=_dense(sys.C.term_for(ONE)),
        c_v=_dense(sys.C.term_for(S)),
    )


def time_delay_parts(sys: StructuredQBSystem) -> TimeDelayParts:
    _require_kind(sys, "time_delay")
    e = None
    delayed = []
    for f, mat in sys.K.terms:
        if f == S:
            e = mat
        elif f.kind == "exp_decay":
            delayed.append((f.delay, -_dense(mat)))
        else:
            raise ValueError("unexpected term in the delayed linear dynamics")
    h_terms = [op for _, _, op in sys.H.terms]
    return TimeDelayParts(
        e=_dense(e),
        delayed=delayed,
        h=h_terms[0] if h_terms else QuadraticOperator.zeros(sys.n),
        n_list=[_dense(nf.term_for(ONE)) for nf in sys.N],
        b=_dense(sys.B.term_for(ONE)),
        c=_dense(sys.C.term_for(ONE)),
    )


# ---------------------------------------------------------------------------
# companion (first-order) embedding of a second-order system
# ---------------------------------------------------------------------------

def companion_embedding(sys: StructuredQBSystem) -> StructuredQBSystem:
    """Rewrite a second-order system as an equivalent first-order system of
    twice the order, acting on the stacked state [q; q'].

    The quadratic slices are interleaved so that slice j (j < n) carries the
    position blocks (-H_pp,j, -H_pv,j) in its lower half and slice n + j the
    velocity blocks (-H_vp,j, -H_vv,j); this reproduces the second-order
    quadratic terms exactly.
    """
    parts = second_order_parts(sys)
    n = sys.n
    eye = np.eye(n)
    zero = np.zeros((n, n))

    e = np.block([[eye, zero], [zero, parts.mass]])
    a = np.block([[zero, eye], [-parts.stiffness, -parts.damping]])
    b = np.vstack([np.zeros((n, sys.m)), parts.b_u])
    c = np.hstack([parts.c_p, parts.c_v])
    n_list = [np.block([[zero, zero], [np_j, nv_j]])
              for np_j, nv_j in zip(parts.n_p_list, parts.n_v_list)]

    neg = {name: getattr(parts, name).scaled(-1.0)
           for name in ("h_pp", "h_pv", "h_vp", "h_vv")}
    all_zero = all(op.is_zero for op in neg.values())
    if all_zero:
        h_op = None
    else:
        use_sparse = any(op.is_sparse for op in neg.values() if not op.is_zero)
        pp, pv = neg["h_pp"].slices(), neg["h_pv"].slices()
        vp, vv = neg["h_vp"].slices(), neg["h_vv"].slices()
        slices = []
        for left, right in [(pp, pv), (vp, vv)]:
            for j in range(n):
                if use_sparse:
                    bottom = sp.hstack(
                        [sp.csr_matrix(left[j]), sp.csr_matrix(right[j])])
                    slices.append(sp.vstack(
                        [sp.csr_matrix((n, 2 * n)), bottom], format="csr"))
                else:
                    top = np.zeros((n, 2 * n))
                    bottom = np.hstack([_dense(left[j]), _dense(right[j])])
                    slices.append(np.vstack([top, bottom]))
        h_op = QuadraticOperator(slices=slices)

    return preset_first_order(
        e, a, h=h_op, n_list=n_list, b=b, c=c,
        label=f"companion of {sys.label}".strip(),
    )
