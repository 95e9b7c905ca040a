"""Tests for the error measures and CSV emission."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbmor.errors import ZeroReference
from qbmor.interpolation import InterpolationPointSet, ReductionBasis
from qbmor.metrics import (
    ErrorReport,
    emit_table,
    hinf_from_values,
    pointwise_relerr,
    relerr_curve_from_values,
    relerr_hinf_1,
    relerr_l2,
    relerr_linf,
    relerr_sweep_1,
    relerr_sweep_2,
    trajectory_csv,
    write_curve_csv,
    write_surface_csv,
)
from qbmor.projection import project
from qbmor.simulate import Trajectory

import conftest


def traj(outputs, times=None):
    outputs = np.atleast_2d(np.asarray(outputs, dtype=float))
    if times is None:
        times = np.arange(outputs.shape[1], dtype=float)
    return Trajectory(times=times, outputs=outputs)


class TestPointwise:
    def test_identical(self):
        y = traj([[1.0, 2.0, 3.0]])
        kept, vals, excluded = pointwise_relerr(y, y)
        assert np.allclose(vals, 0.0)
        assert excluded.size == 0

    def test_simple_ratio(self):
        kept, vals, _ = pointwise_relerr(traj([[2.0]]), traj([[1.0]]))
        assert np.allclose(vals, [0.5])

    def test_max_over_outputs(self):
        y = traj([[2.0], [10.0]])
        y_hat = traj([[1.0], [9.0]])
        _, vals, _ = pointwise_relerr(y, y_hat)
        assert np.allclose(vals, [0.5])

    def test_zero_reference_times_excluded(self):
        y = traj([[1.0, 0.0, 2.0]])
        y_hat = traj([[1.0, 5.0, 2.0]])
        kept, vals, excluded = pointwise_relerr(y, y_hat)
        assert list(excluded) == [1.0]
        assert kept.size == 2
        assert np.allclose(vals, 0.0)


class TestNorms:
    def test_zero_approximation(self):
        y = traj([[1.0, 2.0]])
        z = traj([[0.0, 0.0]])
        assert relerr_l2(y, z) == 1.0
        assert relerr_linf(y, z) == 1.0

    def test_identical(self):
        y = traj([[1.0, 2.0]])
        assert relerr_l2(y, y) == 0.0
        assert relerr_linf(y, y) == 0.0

    def test_unit_example(self):
        y = traj([[1.0, 0.0]])
        z = traj([[0.0, 0.0]])
        assert relerr_l2(y, z) == 1.0
        assert relerr_linf(y, z) == 1.0

    def test_zero_reference_raises(self):
        z = traj([[0.0, 0.0]])
        with pytest.raises(ZeroReference):
            relerr_l2(z, z)
        with pytest.raises(ZeroReference):
            relerr_linf(z, z)

    @given(st.floats(min_value=0.1, max_value=100.0))
    @settings(max_examples=20, deadline=None)
    def test_scale_invariance(self, alpha):
        y = traj([[1.0, -2.0, 0.5]])
        z = traj([[0.9, -2.2, 0.4]])
        ya = traj(alpha * y.outputs)
        za = traj(alpha * z.outputs)
        assert np.isclose(relerr_l2(y, z), relerr_l2(ya, za))
        assert np.isclose(relerr_linf(y, z), relerr_linf(ya, za))


def identity_model(sys):
    basis = ReductionBasis(V=np.eye(sys.n), W=np.eye(sys.n),
                           method_tag="identity",
                           points_used=InterpolationPointSet(()))
    return project(sys, basis)


class TestSweepErrors:
    def test_identity_projection_errors_tiny(self, rng):
        sys = conftest.random_first_order(rng, n=6, m=2, p=2)
        red = identity_model(sys).system
        grid = np.logspace(-1, 1, 12)
        errs, ok = relerr_sweep_1(sys, red, grid)
        assert ok.all()
        assert np.nanmax(errs) <= 1e-12
        errs2, ok2 = relerr_sweep_2(sys, red, grid[:4], grid[:4])
        assert np.nanmax(errs2) <= 1e-11

    def test_single_point_hinf(self, rng):
        sys = conftest.random_first_order(rng, n=5)
        red = identity_model(sys).system
        assert relerr_hinf_1(sys, red, [1.0]) <= 1e-12

    def test_hinf_monotone_under_refinement(self, rng):
        sys = conftest.random_first_order(rng, n=6, m=1, p=1)
        v = np.linalg.qr(rng.standard_normal((6, 2)))[0]
        basis = ReductionBasis(V=v, W=v, method_tag="crude",
                               points_used=InterpolationPointSet(()))
        red = project(sys, basis).system
        coarse = np.logspace(-1, 1, 5)
        fine = np.logspace(-1, 1, 25)
        assert relerr_hinf_1(sys, red, fine) >= relerr_hinf_1(sys, red, coarse) - 1e-15

    def test_zero_quadratic_guard(self, rng):
        sys = conftest.random_first_order(rng, n=4, quad=0.0, bilin=0.0)
        red = identity_model(sys).system
        errs, ok = relerr_sweep_2(sys, red, [0.5, 1.0], [0.5, 1.0])
        assert not ok.any()          # flagged, not NaN-contaminated stats
        assert np.all(np.isnan(errs))
        fv = np.zeros((2, 1, 1), dtype=complex)
        assert hinf_from_values(fv, np.ones(2, bool), fv, np.ones(2, bool)) == 0.0

    def test_error_dips_at_interpolation_points(self, rng):
        from qbmor.interpolation import interpolation_basis
        sys = conftest.random_first_order(rng, n=40, m=1, p=1)
        basis = interpolation_basis(sys, "sym", "V", 8, (0.1, 10.0))
        red = project(sys, basis).system
        grid = np.logspace(-2, 2, 161)
        errs, ok = relerr_sweep_1(sys, red, grid)
        interp_freqs = [abs(s.imag) for s in basis.points_used.points]
        for f in interp_freqs:
            at_point = errs[np.argmin(np.abs(grid - f))]
            assert at_point <= 1e-2 * np.nanmedian(errs)


class TestCsv:
    def test_empty_table(self, tmp_path):
        path = tmp_path / "table.csv"
        emit_table([], path)
        assert path.read_text() == \
            "method,relerr_L2,relerr_Linf,relerr_Hinf1,relerr_Hinf2\n"

    def test_inf_rendering(self, tmp_path):
        path = tmp_path / "table.csv"
        emit_table([ErrorReport("POD", np.inf, np.inf, 0.5, 0.25,
                                stable=False)], path)
        body = path.read_text().splitlines()[1]
        assert body == "POD,inf,inf,0.5,0.25"
        assert "nan" not in path.read_text()

    def test_rows_in_order(self, tmp_path):
        path = tmp_path / "table.csv"
        reports = [ErrorReport(f"m{i}", i, i, i, i) for i in range(10)]
        emit_table(reports, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 11
        assert [ln.split(",")[0] for ln in lines[1:]] == \
            [f"m{i}" for i in range(10)]

    def test_curve_and_surface_roundtrip(self, tmp_path):
        write_curve_csv(tmp_path / "c.csv", [1.0, 2.0],
                        {"a": [0.1, 0.2], "b": [1.0, 2.0]})
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0] == "omega,a,b"
        write_surface_csv(tmp_path / "s.csv", [1.0], [2.0, 3.0],
                          np.array([[0.5, 0.25]]))
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "omega1,omega2,value"
        assert len(lines) == 3

    def test_trajectory_csv(self, tmp_path):
        trajectory_csv(tmp_path / "t.csv", traj([[1.0, 2.0], [3.0, 4.0]]))
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "time,y1,y2"
        assert len(lines) == 3

    def test_full_precision(self, tmp_path):
        x = 0.1234567890123456789
        write_curve_csv(tmp_path / "c.csv", [x], {"v": [x]})
        text = (tmp_path / "c.csv").read_text()
        assert format(x, ".17g") in text
