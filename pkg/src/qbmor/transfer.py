"""Evaluation of structured multivariate transfer functions.

Implements the first three symmetric transfer functions (recursions through
the input-to-state transitions psi_1, psi_2, psi_3) and the four generalized
transfer functions built from resolvent-type products.  An evaluator object
caches factorizations of K(s) keyed by the exact complex argument, plus the
small per-point blocks that sweeps reuse heavily.

Symmetric evaluations canonicalize their argument order internally (the
values are invariant under argument permutations), so permuted calls return
bitwise-identical results and coincident-point sweeps reuse every solve.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrix
from .linalg import LuFactorization
from .system import StructuredQBSystem

_SYM = "symmetric"
GENERALIZED_VARIANTS = ("B", "NB", "NNB", "HBB")


@dataclass
class TFValue:
    """A transfer function sample: p x (input directions) matrix."""

    level: int
    variant: str  # "symmetric" | "B" | "NB" | "NNB" | "HBB"
    matrix: np.ndarray


def _sort_key(s: complex):
    return (s.real, s.imag)


class TransferFunctions:
    """Transfer function evaluator for one structured system.

    Factorizations of K(.) are cached in a bounded LRU keyed by the exact
    complex argument; input-to-state blocks psi_1 and the bilinear samples
    N(s)(I_m (x) psi_1(s)) are memoized unboundedly (they are n x m-ish and
    dominate sweep reuse).  All caches are lock-protected, so concurrent
    sweeps see the same values as a serial run.
    """

    def __init__(self, sys: StructuredQBSystem, cache_size: int = 128):
        self.sys = sys
        self._cache_size = cache_size
        self._facts: OrderedDict = OrderedDict()
        self._psi1: dict = {}
        self._nb: dict = {}
        self._psi2: OrderedDict = OrderedDict()
        self._lock = threading.RLock()

    # -- cached primitives ---------------------------------------------------

    def factorization(self, s: complex) -> LuFactorization:
        s = complex(s)
        with self._lock:
            hit = self._facts.get(s)
            if hit is not None:
                self._facts.move_to_end(s)
                return hit
        try:
            fact = LuFactorization(self.sys.eval_K(s))
        except SingularMatrix as exc:
            raise SingularMatrix(f"K(s) not invertible at s = {s}: {exc}") from exc
        with self._lock:
            self._facts[s] = fact
            if len(self._facts) > self._cache_size:
                self._facts.popitem(last=False)
        return fact

    def psi1(self, s: complex) -> np.ndarray:
        """Input-to-state transition K(s)^(-1) B(s)."""
        s = complex(s)
        with self._lock:
            hit = self._psi1.get(s)
        if hit is not None:
            return hit
        val = self.factorization(s).solve(self.sys.eval_B(s).astype(complex))
        with self._lock:
            self._psi1[s] = val
        return val

    def _bilinear_sample(self, s: complex) -> np.ndarray:
        """N(s) (I_m (x) psi_1(s)), an n x m^2 block."""
        s = complex(s)
        with self._lock:
            hit = self._nb.get(s)
        if hit is not None:
            return hit
        val = self.sys.apply_N(s, self.psi1(s))
        with self._lock:
            self._nb[s] = val
        return val

    # -- symmetric transfer functions -----------------------------------------

    def psi2(self, s1: complex, s2: complex) -> np.ndarray:
        """Second symmetric input-to-state transition (argument order free)."""
        a, b = sorted((complex(s1), complex(s2)), key=_sort_key)
        key = (a, b)
        with self._lock:
            hit = self._psi2.get(key)
            if hit is not None:
                self._psi2.move_to_end(key)
                return hit
        sys = self.sys
        p1a, p1b = self.psi1(a), self.psi1(b)
        kernel = sys.H.apply_block(a, b, p1a, p1b)
        kernel = kernel + sys.H.apply_block(b, a, p1b, p1a)
        if sys.has_bilinear:
            kernel = kernel + self._bilinear_sample(a) + self._bilinear_sample(b)
        val = 0.5 * self.factorization(a + b).solve(kernel)
        with self._lock:
            self._psi2[key] = val
            if len(self._psi2) > self._cache_size:
                self._psi2.popitem(last=False)
        return val

    def psi3(self, s1: complex, s2: complex, s3: complex) -> np.ndarray:
        """Third symmetric input-to-state transition (argument order free)."""
        a, b, c = sorted((complex(s1), complex(s2), complex(s3)), key=_sort_key)
        sys = self.sys
        p1 = {s: self.psi1(s) for s in (a, b, c)}
        p2 = {
            (a, b): self.psi2(a, b),
            (a, c): self.psi2(a, c),
            (b, c): self.psi2(b, c),
        }
        kernel = sys.H.apply_block(a + b, c, p2[(a, b)], p1[c])
        kernel = kernel + sys.H.apply_block(a + c, b, p2[(a, c)], p1[b])
        kernel = kernel + sys.H.apply_block(b + c, a, p2[(b, c)], p1[a])
        kernel = kernel + sys.H.apply_block(a, b + c, p1[a], p2[(b, c)])
        kernel = kernel + sys.H.apply_block(b, a + c, p1[b], p2[(a, c)])
        kernel = kernel + sys.H.apply_block(c, a + b, p1[c], p2[(a, b)])
        if sys.has_bilinear:
            kernel = kernel + sys.apply_N(a + b, p2[(a, b)])
            kernel = kernel + sys.apply_N(a + c, p2[(a, c)])
            kernel = kernel + sys.apply_N(b + c, p2[(b, c)])
        return self.factorization(a + b + c).solve(kernel) / 6.0

    def state(self, level: int, *points: complex) -> np.ndarray:
        if level == 1:
            (s1,) = points
            return self.psi1(s1)
        if level == 2:
            return self.psi2(*points)
        if level == 3:
            return self.psi3(*points)
        raise ValueError(f"unsupported level {level}")

    def symmetric(self, level: int, *points: complex) -> TFValue:
        points = tuple(complex(s) for s in points)
        if len(points) != level:
            raise ValueError(f"level {level} needs {level} frequency arguments")
        total = sum(sorted(points, key=_sort_key))
        value = self.sys.eval_C(total).astype(complex) @ self.state(level, *points)
        return TFValue(level=level, variant=_SYM, matrix=value)

    # -- generalized transfer functions ----------------------------------------

    def generalized(self, variant: str, *points: complex) -> TFValue:
        sys = self.sys
        points = tuple(complex(s) for s in points)
        if variant == "B":
            (s1,) = points
            value = sys.eval_C(s1).astype(complex) @ self.psi1(s1)
            return TFValue(level=1, variant="B", matrix=value)
        if variant == "NB":
            s1, s2 = points
            inner = self._bilinear_sample(s1)
            value = sys.eval_C(s2).astype(complex) @ self.factorization(s2).solve(inner)
            return TFValue(level=2, variant="NB", matrix=value)
        if variant == "NNB":
            s1, s2, s3 = points
            inner1 = self.factorization(s2).solve(self._bilinear_sample(s1))
            inner2 = sys.apply_N(s2, inner1)
            value = sys.eval_C(s3).astype(complex) @ self.factorization(s3).solve(inner2)
            return TFValue(level=3, variant="NNB", matrix=value)
        if variant == "HBB":
            s1, s2, s3 = points
            inner = sys.H.apply_block(s2, s1, self.psi1(s2), self.psi1(s1))
            value = sys.eval_C(s3).astype(complex) @ self.factorization(s3).solve(inner)
            return TFValue(level=3, variant="HBB", matrix=value)
        raise ValueError(f"unknown generalized variant {variant!r}")

    def evaluate(self, kind: str, points) -> np.ndarray:
        """Uniform entry point for interpolation-condition checks."""
        points = tuple(points)
        if kind.startswith("sym"):
            return self.symmetric(int(kind[3:]), *points).matrix
        return self.generalized(kind, *points).matrix


# ---------------------------------------------------------------------------
# module-level wrappers
# ---------------------------------------------------------------------------

def _evaluator(sys_or_eval) -> TransferFunctions:
    if isinstance(sys_or_eval, TransferFunctions):
        return sys_or_eval
    return TransferFunctions(sys_or_eval)


def symtf_state(level: int, sys_or_eval, points) -> np.ndarray:
    """Symmetric input-to-state transition of the requested level."""
    return _evaluator(sys_or_eval).state(level, *np.atleast_1d(points))


def sym_tf(level: int, sys_or_eval, points) -> TFValue:
    """Symmetric transfer function of the requested level."""
    return _evaluator(sys_or_eval).symmetric(level, *np.atleast_1d(points))


def gen_tf(variant: str, sys_or_eval, points) -> TFValue:
    """Generalized transfer function: variant in {"B", "NB", "NNB", "HBB"}."""
    return _evaluator(sys_or_eval).generalized(variant, *np.atleast_1d(points))


def tf1_grid(sys_or_eval, omegas) -> tuple:
    """First symmetric transfer function along the imaginary axis.

    Returns ``(values, ok)`` where ``values`` has shape (n_omega, p, m) and
    ``ok`` flags points where K(i omega) was invertible; failed points hold
    NaN.
    """
    ev = _evaluator(sys_or_eval)
    omegas = np.asarray(omegas, dtype=float)
    p, m = ev.sys.p, ev.sys.m
    values = np.full((omegas.size, p, m), np.nan, dtype=complex)
    ok = np.zeros(omegas.size, dtype=bool)
    for i, w in enumerate(omegas):
        try:
            values[i] = ev.symmetric(1, 1j * w).matrix
            ok[i] = True
        except SingularMatrix:
            pass
    return values, ok


def sweep_level1(sys_or_eval, omegas) -> tuple:
    """Spectral norms of G_1(i omega) over a frequency grid.

    Returns ``(norms, skipped)``; skipped points (singular K) hold NaN and
    their indices are listed in ``skipped``.
    """
    values, ok = tf1_grid(sys_or_eval, omegas)
    norms = np.full(values.shape[0], np.nan)
    for i in range(values.shape[0]):
        if ok[i]:
            norms[i] = np.linalg.norm(values[i], 2)
    return norms, [int(i) for i in np.nonzero(~ok)[0]]


def tf2_grid(sys_or_eval, omegas1, omegas2) -> tuple:
    """Second symmetric transfer function over a product grid.

    Returns ``(values, ok)`` with ``values`` of shape (n1, n2, p, m^2).  When
    both grids are identical only the upper triangle is evaluated and the
    result is mirrored (G_2 is symmetric in its arguments).
    """
    ev = _evaluator(sys_or_eval)
    omegas1 = np.asarray(omegas1, dtype=float)
    omegas2 = np.asarray(omegas2, dtype=float)
    p, m = ev.sys.p, ev.sys.m
    values = np.full((omegas1.size, omegas2.size, p, m * m), np.nan, dtype=complex)
    ok = np.zeros((omegas1.size, omegas2.size), dtype=bool)
    mirror = omegas1.size == omegas2.size and np.array_equal(omegas1, omegas2)
    for i, w1 in enumerate(omegas1):
        for j, w2 in enumerate(omegas2):
            if mirror and j < i:
                continue
            try:
                values[i, j] = ev.symmetric(2, 1j * w1, 1j * w2).matrix
                ok[i, j] = True
            except SingularMatrix:
                pass
            if mirror and j > i:
                values[j, i] = values[i, j]
                ok[j, i] = ok[i, j]
    return values, ok


def sweep_level2(sys_or_eval, omegas1, omegas2) -> tuple:
    """Spectral norms of G_2(i omega_1, i omega_2) over a product grid.

    Returns ``(norms, skipped)`` with NaN at skipped (singular) pairs.
    """
    values, ok = tf2_grid(sys_or_eval, omegas1, omegas2)
    norms = np.full(ok.shape, np.nan)
    for i in range(ok.shape[0]):
        for j in range(ok.shape[1]):
            if ok[i, j]:
                norms[i, j] = np.linalg.norm(values[i, j], 2)
    skipped = [(int(i), int(j)) for i, j in zip(*np.nonzero(~ok))]
    return norms, skipped
