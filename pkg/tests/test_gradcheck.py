import numpy as np
import pytest

from dagrid import OracleError, check, finite_difference


class TestFiniteDifference:
    def test_linear(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 4))
        grad = finite_difference(lambda t: float(t.sum()), x)
        np.testing.assert_allclose(grad, np.ones((3, 4)), rtol=0, atol=1e-10)

    def test_quadratic(self):
        x = np.array([1.0, 2.0])
        grad = finite_difference(lambda t: float(np.sum(t**2)), x)
        np.testing.assert_allclose(grad, [2.0, 4.0], rtol=0, atol=1e-8)

    def test_product(self):
        x = np.array([3.0, 5.0])
        grad = finite_difference(lambda t: float(t[0] * t[1]), x)
        np.testing.assert_allclose(grad, [5.0, 3.0], rtol=0, atol=1e-8)

    def test_restores_input(self):
        x = np.array([1.0, 2.0, 3.0])
        finite_difference(lambda t: float(t.sum()), x)
        np.testing.assert_array_equal(x, [1.0, 2.0, 3.0])

    def test_non_finite_evaluation_raises(self):
        x = np.array([0.5])
        with np.errstate(invalid="ignore"), pytest.raises(OracleError):
            finite_difference(lambda t: float(np.log(-abs(t[0]))), x)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            finite_difference(lambda t: 0.0, np.zeros(2), h=0.0)


class TestCheck:
    def test_identical_tensors(self):
        x = np.arange(6.0).reshape(2, 3)
        report = check("same", x, x.copy())
        assert report.passed
        assert report.max_rel_err == 0.0
        assert report.max_abs_err == 0.0

    def test_below_tolerance(self):
        report = check("close", np.array([1.0]), np.array([1.0 + 1e-7]), tol=1e-6)
        assert report.passed

    def test_above_tolerance(self):
        report = check("far", np.array([1.0]), np.array([1.1]), tol=1e-6)
        assert not report.passed
        assert report.worst_index == (0,)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            check("shapes", np.zeros(2), np.zeros(3))

    def test_report_renders(self):
        report = check("demo", np.array([1.0]), np.array([2.0]))
        text = str(report)
        assert "demo" in text and "FAIL" in text
