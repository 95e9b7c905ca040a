"""Shared fixtures: random structured test systems and acceptance reporting."""

import numpy as np
import pytest

from qbmor.system import (
    preset_first_order,
    preset_second_order,
    preset_time_delay,
)

# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def record_acceptance(name: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] {name}" + (f" -- {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# random structured systems
# ---------------------------------------------------------------------------

def stable_matrix(rng, n, margin=0.5):
    a = rng.standard_normal((n, n)) / np.sqrt(n)
    shift = max(np.linalg.eigvals(a).real.max(), 0.0) + margin
    return a - shift * np.eye(n)


def spd_matrix(rng, n, scale=1.0):
    g = rng.standard_normal((n, n)) / np.sqrt(n)
    return np.eye(n) + scale * (g @ g.T)


def random_first_order(rng, n=8, m=2, p=2, quad=0.4, bilin=0.4):
    e = np.eye(n) + 0.2 * rng.standard_normal((n, n)) / np.sqrt(n)
    a = stable_matrix(rng, n)
    h = quad * rng.standard_normal((n, n, n)) / n
    n_list = [bilin * rng.standard_normal((n, n)) / np.sqrt(n) for _ in range(m)]
    b = rng.standard_normal((n, m))
    c = rng.standard_normal((p, n))
    return preset_first_order(e, a, h=h, n_list=n_list, b=b, c=c)


def random_second_order(rng, n=6, m=2, p=2, quad=0.4, bilin=0.4):
    mass = spd_matrix(rng, n, 0.5)
    stiffness = spd_matrix(rng, n, 1.0)
    damping = 0.4 * mass + 0.4 * stiffness
    hs = [quad * rng.standard_normal((n, n, n)) / n for _ in range(4)]
    n_p = [bilin * rng.standard_normal((n, n)) / np.sqrt(n) for _ in range(m)]
    n_v = [bilin * rng.standard_normal((n, n)) / np.sqrt(n) for _ in range(m)]
    return preset_second_order(
        mass, damping, stiffness,
        h_pp=hs[0], h_pv=hs[1], h_vp=hs[2], h_vv=hs[3],
        n_p_list=n_p, n_v_list=n_v,
        b_u=rng.standard_normal((n, m)),
        c_p=rng.standard_normal((p, n)),
        c_v=rng.standard_normal((p, n)),
    )


def random_time_delay(rng, n=8, m=2, p=2, quad=0.4, bilin=0.4, n_delays=2,
                      tau_grid=None):
    e = np.eye(n) + 0.2 * rng.standard_normal((n, n)) / np.sqrt(n)
    a_list = [stable_matrix(rng, n)]
    tau_list = [0.0]
    for _ in range(n_delays - 1):
        a_list.append(0.3 * rng.standard_normal((n, n)) / np.sqrt(n))
        tau = float(rng.uniform(0.3, 1.5))
        if tau_grid is not None:
            tau = max(round(tau / tau_grid), 1) * tau_grid
        tau_list.append(tau)
    h = quad * rng.standard_normal((n, n, n)) / n
    n_list = [bilin * rng.standard_normal((n, n)) / np.sqrt(n) for _ in range(m)]
    b = rng.standard_normal((n, m))
    c = rng.standard_normal((p, n))
    return preset_time_delay(e, a_list, tau_list, h=h, n_list=n_list, b=b, c=c)


def random_structured(rng, kind, **kw):
    factory = {
        "first_order": random_first_order,
        "second_order": random_second_order,
        "time_delay": random_time_delay,
    }[kind]
    return factory(rng, **kw)


def random_points(rng, count, real_range=(0.2, 1.2), imag_range=(-2.0, 2.0)):
    return [complex(rng.uniform(*real_range), rng.uniform(*imag_range))
            for _ in range(count)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
