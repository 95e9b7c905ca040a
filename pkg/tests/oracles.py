"""Independent reference computations used only by the test suite.

Everything here is written against explicit dense formulas (np.kron, direct
solves, textbook integrators) so the library paths are checked against code
that shares none of their machinery.
"""

import numpy as np
from scipy.integrate import solve_ivp


# -- Kronecker-product references -------------------------------------------

def dense_quadratic_apply(h_flat, x, y):
    """H (x (x) y) with the explicit Kronecker vector."""
    return h_flat @ np.kron(x, y)


def dense_quadratic_compress(h_flat, w_adj, v):
    """W^H H (V (x) V) as a flat r x r^2 matrix."""
    return w_adj @ h_flat @ np.kron(v, v)


def flat_from_slices(slices):
    return np.hstack([np.asarray(s) for s in slices])


# -- direct second-order transfer function formulas --------------------------

def so_resolvent(mass, damping, stiffness, s):
    return np.linalg.inv((s ** 2) * mass + s * damping + stiffness)


def so_sym1(parts, s1):
    r1 = so_resolvent(parts.mass, parts.damping, parts.stiffness, s1)
    return (parts.c_p + s1 * parts.c_v) @ r1 @ parts.b_u


def so_sym2(parts, s1, s2):
    """Second symmetric transfer function of a second-order system, written
    out with the explicit position/velocity blocks."""
    m_, d_, k_ = parts.mass, parts.damping, parts.stiffness
    h_pp = parts.h_pp.to_flat()
    h_pv = parts.h_pv.to_flat()
    h_vp = parts.h_vp.to_flat()
    h_vv = parts.h_vv.to_flat()
    n_p = flat_from_slices(parts.n_p_list)
    n_v = flat_from_slices(parts.n_v_list)
    m_in = parts.b_u.shape[1]
    psi = lambda s: so_resolvent(m_, d_, k_, s) @ parts.b_u
    p1, p2 = psi(s1), psi(s2)
    kernel = -(h_pp + s2 * h_pv + s1 * h_vp + s1 * s2 * h_vv) @ np.kron(p1, p2)
    kernel = kernel - (h_pp + s1 * h_pv + s2 * h_vp + s1 * s2 * h_vv) @ np.kron(p2, p1)
    kernel = kernel + (n_p + s1 * n_v) @ np.kron(np.eye(m_in), p1)
    kernel = kernel + (n_p + s2 * n_v) @ np.kron(np.eye(m_in), p2)
    out_map = parts.c_p + (s1 + s2) * parts.c_v
    return 0.5 * out_map @ so_resolvent(m_, d_, k_, s1 + s2) @ kernel


def so_gen_nb(parts, s1, s2):
    m_, d_, k_ = parts.mass, parts.damping, parts.stiffness
    n_p = flat_from_slices(parts.n_p_list)
    n_v = flat_from_slices(parts.n_v_list)
    m_in = parts.b_u.shape[1]
    p1 = so_resolvent(m_, d_, k_, s1) @ parts.b_u
    inner = (n_p + s1 * n_v) @ np.kron(np.eye(m_in), p1)
    return (parts.c_p + s2 * parts.c_v) @ so_resolvent(m_, d_, k_, s2) @ inner


def so_gen_nnb(parts, s1, s2, s3):
    m_, d_, k_ = parts.mass, parts.damping, parts.stiffness
    n_p = flat_from_slices(parts.n_p_list)
    n_v = flat_from_slices(parts.n_v_list)
    m_in = parts.b_u.shape[1]
    p1 = so_resolvent(m_, d_, k_, s1) @ parts.b_u
    inner1 = so_resolvent(m_, d_, k_, s2) @ (
        (n_p + s1 * n_v) @ np.kron(np.eye(m_in), p1))
    inner2 = (n_p + s2 * n_v) @ np.kron(np.eye(m_in), inner1)
    return (parts.c_p + s3 * parts.c_v) @ so_resolvent(m_, d_, k_, s3) @ inner2


def so_gen_hbb(parts, s1, s2, s3):
    m_, d_, k_ = parts.mass, parts.damping, parts.stiffness
    h_pp = parts.h_pp.to_flat()
    h_pv = parts.h_pv.to_flat()
    h_vp = parts.h_vp.to_flat()
    h_vv = parts.h_vv.to_flat()
    psi = lambda s: so_resolvent(m_, d_, k_, s) @ parts.b_u
    block = -(h_pp + s1 * h_pv + s2 * h_vp + s1 * s2 * h_vv)
    inner = block @ np.kron(psi(s2), psi(s1))
    return (parts.c_p + s3 * parts.c_v) @ so_resolvent(m_, d_, k_, s3) @ inner


# -- time-domain references ---------------------------------------------------

def delay_scalar_reference(a0, a_tau, tau, u_fun, t_final, n_eval=2001):
    """Method-of-steps solution of x'(t) = a0 x(t) + a_tau x(t - tau) + u(t)
    with zero history, solved segment by segment with a stiff integrator."""
    times = np.linspace(0.0, t_final, n_eval)
    past_t = [0.0]
    past_x = [0.0]

    def history(t):
        return 0.0 if t <= 0 else np.interp(t, past_t, past_x)

    n_seg = int(np.ceil(t_final / tau))
    x0 = 0.0
    for k in range(n_seg):
        t0 = k * tau
        t1 = min((k + 1) * tau, t_final)
        sol = solve_ivp(
            lambda t, x: a0 * x + a_tau * history(t - tau) + u_fun(t),
            (t0, t1), [x0], rtol=1e-10, atol=1e-12, dense_output=True,
            method="Radau",
        )
        seg_t = np.linspace(t0, t1, 201)[1:]
        past_t.extend(seg_t)
        past_x.extend(sol.sol(seg_t)[0])
        x0 = sol.y[0, -1]
    return times, np.interp(times, past_t, past_x)


def toda_exponential_reference(ell, k_coeffs, d_coeffs, b_vec, c_vec, u_fun,
                               t_final, n_eval):
    """Reference simulation of the particle-chain model with exponential
    spring forces, the y output reading velocities through ``c_vec``."""
    k = np.asarray(k_coeffs, dtype=float)
    d = np.asarray(d_coeffs, dtype=float)

    def force(q):
        expo = np.empty(ell)
        expo[:-1] = np.exp(k[:-1] * (q[:-1] - q[1:]))
        expo[-1] = np.exp(k[-1] * q[-1])
        f = np.empty(ell)
        f[0] = expo[0] - 1.0
        f[1:] = expo[1:] - expo[:-1]
        return f

    def rhs(t, state):
        q, qd = state[:ell], state[ell:]
        qdd = -d * qd - force(q) + b_vec * u_fun(t)
        return np.concatenate([qd, qdd])

    times = np.linspace(0.0, t_final, n_eval)
    sol = solve_ivp(rhs, (0.0, t_final), np.zeros(2 * ell), t_eval=times,
                    rtol=1e-10, atol=1e-12, method="DOP853", max_step=t_final / 200)
    y = c_vec @ sol.y[ell:, :]
    return times, y
