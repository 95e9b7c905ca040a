"""Direct transfer function formulas for unstructured first-order
quadratic-bilinear systems.

These routines take plain matrices (E, A, H, N, B, C) with the quadratic
term as a flat n x n^2 array and the bilinear terms concatenated as
N = [N_1 ... N_m] (n x nm).  They build every Kronecker product explicitly
with ``np.kron`` and solve with ``np.linalg.solve``, sharing no code with the
structured evaluator, so they serve as an independent cross-check for it.
Only small dense systems are meant to pass through here.
"""

from __future__ import annotations

import numpy as np


def _psi1(e, a, b, s):
    return np.linalg.solve(s * e - a, b)


def _psi2(e, a, h, n_cat, b, s1, s2):
    p1 = _psi1(e, a, b, s1)
    p2 = _psi1(e, a, b, s2)
    m = b.shape[1]
    kernel = h @ (np.kron(p1, p2) + np.kron(p2, p1))
    kernel = kernel + n_cat @ np.kron(np.eye(m), p1 + p2)
    return 0.5 * np.linalg.solve((s1 + s2) * e - a, kernel)


def sym1(e, a, b, c, s1):
    """C (s1 E - A)^(-1) B."""
    return c @ _psi1(e, a, b, s1)


def sym2(e, a, h, n_cat, b, c, s1, s2):
    """Second symmetric transfer function of the first-order system."""
    return c @ _psi2(e, a, h, n_cat, b, s1, s2)


def sym3(e, a, h, n_cat, b, c, s1, s2, s3):
    """Third symmetric transfer function of the first-order system."""
    m = b.shape[1]
    p1 = {s: _psi1(e, a, b, s) for s in (s1, s2, s3)}
    p2_12 = _psi2(e, a, h, n_cat, b, s1, s2)
    p2_13 = _psi2(e, a, h, n_cat, b, s1, s3)
    p2_23 = _psi2(e, a, h, n_cat, b, s2, s3)
    kernel = h @ (
        np.kron(p1[s1], p2_23) + np.kron(p1[s2], p2_13) + np.kron(p1[s3], p2_12)
        + np.kron(p2_12, p1[s3]) + np.kron(p2_13, p1[s2]) + np.kron(p2_23, p1[s1])
    )
    kernel = kernel + n_cat @ np.kron(np.eye(m), p2_12 + p2_13 + p2_23)
    psi3 = np.linalg.solve((s1 + s2 + s3) * e - a, kernel) / 6.0
    return c @ psi3


def gen_b(e, a, b, c, s1):
    """First generalized transfer function (identical to ``sym1``)."""
    return c @ _psi1(e, a, b, s1)


def gen_nb(e, a, n_cat, b, c, s1, s2):
    """Generalized transfer function with one bilinear factor."""
    m = b.shape[1]
    inner = n_cat @ np.kron(np.eye(m), _psi1(e, a, b, s1))
    return c @ np.linalg.solve(s2 * e - a, inner)


def gen_nnb(e, a, n_cat, b, c, s1, s2, s3):
    """Generalized transfer function with two chained bilinear factors."""
    m = b.shape[1]
    inner1 = np.linalg.solve(s2 * e - a,
                             n_cat @ np.kron(np.eye(m), _psi1(e, a, b, s1)))
    inner2 = n_cat @ np.kron(np.eye(m), inner1)
    return c @ np.linalg.solve(s3 * e - a, inner2)


def gen_hbb(e, a, h, b, c, s1, s2, s3):
    """Generalized transfer function with the quadratic term and two input
    resolvents."""
    inner = h @ np.kron(_psi1(e, a, b, s2), _psi1(e, a, b, s1))
    return c @ np.linalg.solve(s3 * e - a, inner)
