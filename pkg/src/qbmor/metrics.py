"""Error measures for comparing full and reduced models, and their CSV
emission.

Time-domain errors are relative vectorized l2 / sup norms of the discretized
outputs; frequency-domain errors are pointwise relative spectral norms of
the first two symmetric transfer functions over frequency grids, with
sup-norm estimates taken as the ratio of the grid maxima (numerator and
denominator maximized independently).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ZeroReference
from .transfer import tf1_grid, tf2_grid

#: reference entries below this times max|y| are excluded from pointwise
#: relative errors
POINTWISE_GUARD_RTOL = 1e-14


@dataclass
class ErrorReport:
    """One table row: a method and its four error measures."""

    method_tag: str
    relerr_l2: float
    relerr_linf: float
    relerr_hinf_1: float
    relerr_hinf_2: float
    stable: bool = True


def _outputs(y):
    return np.atleast_2d(y.outputs if hasattr(y, "outputs") else np.asarray(y))


def pointwise_relerr(y, y_hat, times=None):
    """Maximum (over outputs) pointwise relative error at each time.

    Times where any reference output falls below the guard threshold are
    excluded and returned separately rather than dividing by (near) zero.
    Returns ``(times_kept, values, times_excluded)``.
    """
    y_mat = _outputs(y)
    yh_mat = _outputs(y_hat)
    if y_mat.shape != yh_mat.shape:
        raise ValueError("trajectories have different shapes")
    if times is None:
        times = y.times if hasattr(y, "times") else np.arange(y_mat.shape[1])
    times = np.asarray(times, dtype=float)
    guard = POINTWISE_GUARD_RTOL * np.max(np.abs(y_mat)) if y_mat.size else 0.0
    ok = np.all(np.abs(y_mat) >= max(guard, 1e-300), axis=0)
    vals = np.max(np.abs((y_mat[:, ok] - yh_mat[:, ok]) / y_mat[:, ok]), axis=0) \
        if ok.any() else np.zeros(0)
    return times[ok], vals, times[~ok]


def relerr_l2(y, y_hat) -> float:
    """Relative l2 error of the vectorized discrete outputs."""
    y_mat = _outputs(y)
    yh_mat = _outputs(y_hat)
    denom = np.linalg.norm(y_mat.ravel())
    if denom == 0.0:
        raise ZeroReference("reference output is identically zero")
    return float(np.linalg.norm((y_mat - yh_mat).ravel()) / denom)


def relerr_linf(y, y_hat) -> float:
    """Relative sup-norm error of the vectorized discrete outputs."""
    y_mat = _outputs(y)
    yh_mat = _outputs(y_hat)
    denom = np.max(np.abs(y_mat)) if y_mat.size else 0.0
    if denom == 0.0:
        raise ZeroReference("reference output is identically zero")
    return float(np.max(np.abs(y_mat - yh_mat)) / denom)


# ---------------------------------------------------------------------------
# frequency-domain errors
# ---------------------------------------------------------------------------

def _norms(values, ok):
    out = np.full(ok.shape, np.nan)
    it = np.ndindex(*ok.shape)
    for idx in it:
        if ok[idx]:
            out[idx] = np.linalg.norm(values[idx], 2)
    return out


def relerr_curve_from_values(full_vals, full_ok, red_vals, red_ok):
    """Pointwise relative spectral-norm errors; NaN where either evaluation
    failed or the reference vanished (those points are flagged skipped)."""
    ok = full_ok & red_ok
    errs = np.full(ok.shape, np.nan)
    for idx in np.ndindex(*ok.shape):
        if not ok[idx]:
            continue
        denom = np.linalg.norm(full_vals[idx], 2)
        if denom == 0.0:
            ok[idx] = False
            continue
        errs[idx] = np.linalg.norm(full_vals[idx] - red_vals[idx], 2) / denom
    return errs, ok


def hinf_from_values(full_vals, full_ok, red_vals, red_ok) -> float:
    """Sup-norm estimate: grid maximum of the error over the grid maximum of
    the reference (maxima taken independently)."""
    ok = full_ok & red_ok
    if not ok.any():
        return np.inf
    num = 0.0
    den = 0.0
    for idx in np.ndindex(*ok.shape):
        if ok[idx]:
            num = max(num, np.linalg.norm(full_vals[idx] - red_vals[idx], 2))
            den = max(den, np.linalg.norm(full_vals[idx], 2))
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return float(num / den)


def relerr_sweep_1(full_sys, reduced_sys, omegas):
    """Pointwise level-1 errors over a frequency grid: ``(errors, ok)``."""
    fv, fok = tf1_grid(full_sys, omegas)
    rv, rok = tf1_grid(reduced_sys, omegas)
    return relerr_curve_from_values(fv, fok, rv, rok)


def relerr_hinf_1(full_sys, reduced_sys, omegas) -> float:
    fv, fok = tf1_grid(full_sys, omegas)
    rv, rok = tf1_grid(reduced_sys, omegas)
    return hinf_from_values(fv, fok, rv, rok)


def relerr_sweep_2(full_sys, reduced_sys, omegas1, omegas2):
    """Pointwise level-2 errors over a product grid: ``(errors, ok)``."""
    fv, fok = tf2_grid(full_sys, omegas1, omegas2)
    rv, rok = tf2_grid(reduced_sys, omegas1, omegas2)
    return relerr_curve_from_values(fv, fok, rv, rok)


def relerr_hinf_2(full_sys, reduced_sys, omegas1, omegas2) -> float:
    fv, fok = tf2_grid(full_sys, omegas1, omegas2)
    rv, rok = tf2_grid(reduced_sys, omegas1, omegas2)
    return hinf_from_values(fv, fok, rv, rok)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_table(reports, path) -> None:
    """Method-by-error table with the header
    ``method,relerr_L2,relerr_Linf,relerr_Hinf1,relerr_Hinf2``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "relerr_L2", "relerr_Linf",
                         "relerr_Hinf1", "relerr_Hinf2"])
        for rep in reports:
            writer.writerow([rep.method_tag, _fmt(rep.relerr_l2),
                             _fmt(rep.relerr_linf), _fmt(rep.relerr_hinf_1),
                             _fmt(rep.relerr_hinf_2)])


def write_curve_csv(path, x, columns: dict, x_name: str = "omega") -> None:
    """Wide-format curves: one x column plus one column per named series."""
    names = list(columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([x_name] + names)
        for i, xi in enumerate(np.asarray(x)):
            writer.writerow([_fmt(xi)] + [_fmt(columns[n][i]) for n in names])


def write_surface_csv(path, omegas1, omegas2, values) -> None:
    """Long-format surface dump: ``omega1,omega2,value`` per line."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["omega1", "omega2", "value"])
        for i, w1 in enumerate(np.asarray(omegas1)):
            for j, w2 in enumerate(np.asarray(omegas2)):
                writer.writerow([_fmt(w1), _fmt(w2), _fmt(values[i, j])])


def trajectory_csv(path, traj) -> None:
    """Time column plus one column per output channel."""
    outputs = np.atleast_2d(traj.outputs)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time"] + [f"y{j + 1}" for j in range(outputs.shape[0])])
        for i, t in enumerate(traj.times):
            writer.writerow([_fmt(t)] + [_fmt(outputs[j, i])
                                         for j in range(outputs.shape[0])])
