"""The two benchmark families: a time-delayed reaction-diffusion rod with
bilinear actuation and a quadratic reaction term, and the quadratic-bilinear
form of a damped particle chain with exponential spring forces.

Both builders accept a size parameter so the experiments run anywhere from
desk scale to the full published sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch
from .linalg import QuadraticOperator
from .system import StructuredQBSystem, preset_second_order, preset_time_delay


@dataclass
class HeatedRodConfig:
    """Discretization of the heated rod on (0, pi) with Dirichlet ends."""

    n: int = 200
    tau: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise DimensionMismatch("need at least three grid nodes")
        if self.tau < 0:
            raise ValueError("delay must be nonnegative")


def build_heated_rod(cfg: HeatedRodConfig) -> StructuredQBSystem:
    """Central finite differences for the controlled heat equation with a
    sine-shaped reaction whose feedback enters undelayed (negative), delayed
    (positive) and quadratically (negative), plus bilinear heaters.

    The first input drives the first third of the rod and the second the
    rest; the first output averages the temperature over the first half of
    the rod and the second over the other half.
    """
    n = cfg.n
    h = np.pi / (n + 1)
    zeta = h * np.arange(1, n + 1)
    reaction = 2.0 * np.sin(zeta)

    lap = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1)
           + np.diag(np.ones(n - 1), -1)) / h ** 2
    a = lap - np.diag(reaction)
    a_d = np.diag(reaction)

    slices = []
    for i in range(n):
        s = sp.lil_matrix((n, n))
        s[i, i] = -reaction[i]
        slices.append(s.tocsr())
    quad = QuadraticOperator(slices=slices)

    b1 = (zeta < np.pi / 3).astype(float)
    b2 = 1.0 - b1
    b = np.column_stack([b1, b2])
    n_list = [np.diag(b1), np.diag(b2)]

    first_half = zeta < np.pi / 2
    c = np.zeros((2, n))
    c[0, first_half] = 1.0 / first_half.sum()
    c[1, ~first_half] = 1.0 / (~first_half).sum()

    sys = preset_time_delay(
        np.eye(n), [a, a_d], [0.0, cfg.tau], h=quad, n_list=n_list,
        b=b, c=c, label=f"heated rod (n={n}, tau={cfg.tau})")
    sys.split_row = None
    return sys


@dataclass
class TodaConfig:
    """A chain of ``ell`` unit masses with exponential springs.

    Stiffness and damping may be scalars or per-particle arrays; the input
    forces the first particle and the output reads its velocity.  These
    actuation defaults are configuration choices, not fixed by the model.
    """

    ell: int = 100
    stiffness: float | np.ndarray = 1.0
    damping: float | np.ndarray = 0.1

    def coefficient_arrays(self):
        k = np.broadcast_to(np.asarray(self.stiffness, dtype=float),
                            (self.ell,)).copy()
        d = np.broadcast_to(np.asarray(self.damping, dtype=float),
                            (self.ell,)).copy()
        if np.any(k <= 0):
            raise ValueError("stiffness coefficients must be positive")
        if np.any(d < 0):
            raise ValueError("damping coefficients must be nonnegative")
        return k, d


def build_toda(cfg: TodaConfig) -> StructuredQBSystem:
    """Quadratic-bilinear second-order form of the exponential particle
    chain, obtained by stacking one auxiliary variable per particle.

    The auxiliary variable z_j = exp(k_j (q_j - q_{j+1})) - 1 (last particle:
    exp(k_l q_l) - 1) turns the exponential forces into the linear map
    Gamma z; differentiating it twice and substituting the q dynamics yields
    a second-order system in w = [q; z] whose quadratic terms touch only the
    velocity-velocity, position-velocity and position-position blocks (no
    velocity-position block) and whose bilinear term acts on positions only.
    """
    ell = cfg.ell
    k, d = cfg.coefficient_arrays()
    n = 2 * ell

    # difference operator: (P qdot)_j = qdot_j - qdot_{j+1}, last row qdot_l
    p_op = np.eye(ell) - np.diag(np.ones(ell - 1), 1)
    gamma = p_op.T  # forces: f = Gamma z
    b_tilde = np.zeros(ell)
    b_tilde[0] = 1.0
    c_tilde = np.zeros(ell)
    c_tilde[0] = 1.0

    kp = k[:, None] * p_op              # diag(k) P
    kp_d = kp * d[None, :]              # diag(k) P diag(d)
    kp_gamma = kp @ gamma
    kp_b = kp @ b_tilde

    mass = np.eye(n)
    damping = np.zeros((n, n))
    damping[:ell, :ell] = np.diag(d)
    damping[ell:, :ell] = kp_d
    stiffness = np.zeros((n, n))
    stiffness[:ell, ell:] = gamma
    stiffness[ell:, ell:] = kp_gamma

    b_u = np.concatenate([b_tilde, kp_b])[:, None]
    c_v = np.concatenate([c_tilde, np.zeros(ell)])[None, :]

    n_p = sp.lil_matrix((n, n))
    for j in range(ell):
        n_p[ell + j, ell + j] = kp_b[j]
    n_p = np.asarray(n_p.todense())

    def z_row_slices(rows):
        """Quadratic slices whose (l+j)-th slice holds ``rows[j]`` in the
        (l+j)-th row; the first l slices vanish."""
        out = [sp.csr_matrix((n, n)) for _ in range(ell)]
        for j in range(ell):
            s = sp.lil_matrix((n, n))
            s[ell + j, :] = rows[j]
            out.append(s.tocsr())
        return out

    # z'' = k_j [ (P q'')_j (z_j + 1) + (P q')_j z'_j ] with q'' substituted
    h_pp = QuadraticOperator(slices=z_row_slices(
        [np.concatenate([np.zeros(ell), kp_gamma[j]]) for j in range(ell)]))
    h_pv = QuadraticOperator(slices=z_row_slices(
        [np.concatenate([kp_d[j], np.zeros(ell)]) for j in range(ell)]))
    vv_slices = []
    for i in range(ell):
        s = sp.lil_matrix((n, n))
        for j in range(ell):
            if p_op[j, i] != 0.0:
                s[ell + j, ell + j] = -k[j] * p_op[j, i]
        vv_slices.append(s.tocsr())
    vv_slices.extend(sp.csr_matrix((n, n)) for _ in range(ell))
    h_vv = QuadraticOperator(slices=vv_slices)

    sys = preset_second_order(
        mass, damping, stiffness,
        h_pp=h_pp, h_pv=h_pv, h_vp=None, h_vv=h_vv,
        n_p_list=[n_p], n_v_list=[np.zeros((n, n))],
        b_u=b_u, c_p=np.zeros((1, n)), c_v=c_v,
        label=f"particle chain (l={ell}, n={n})")
    sys.split_row = ell
    return sys
