"""Tests for the Lax-Wendroff integrators."""
import unittest

import numpy as np

from ecdg.errors import NumericalError, ValidationError
from ecdg.mesh import make_uniform_1d
from ecdg.operator import DenseOperator
from ecdg.systems import acoustics1d, advection1d
from ecdg.timestep import (IntegratorKind, IntegratorSpec, TimeHistory, advance, cfl_dt, startup,
                           step_conserving_lw, step_hybrid, step_rk_lw)

ROTATION = DenseOperator([[0.0, 1.0], [-1.0, 0.0]])


class TestIntegratorSpec(unittest.TestCase):
    """Tests for integrator flags."""

    def test_parse(self):
        """Test orders, stage counts and labels."""
        lw4 = IntegratorSpec.parse("lw4")
        self.assertEqual((lw4.kind, lw4.r, lw4.order, lw4.applications), (IntegratorKind.CONSERVING_LW, 1, 4, 3))
        self.assertTrue(lw4.two_level)
        self.assertEqual(lw4.label, "lw4")
        rk6 = IntegratorSpec.parse("RK6", dt=0.1)
        self.assertEqual((rk6.r, rk6.order, rk6.dt, rk6.two_level), (6, 6, 0.1, False))
        hybrid = IntegratorSpec.parse("hybrid1")
        self.assertEqual((hybrid.order, hybrid.label), (4, "hybrid1"))
        self.assertEqual(IntegratorSpec.parse("lw2").r, 0)

    def test_invalid(self):
        """Test that malformed flags are rejected."""
        for flag in ("lw3", "lw0", "rk0", "rk", "euler1", "lw-2"):
            with self.assertRaises(ValidationError, msg=flag):
                IntegratorSpec.parse(flag)


class TestSteps(unittest.TestCase):
    """Tests for single steps."""

    def test_leapfrog(self):
        """Test that conserving_lw(0) is the leapfrog scheme."""
        history = TimeHistory(np.array([1.0, 2.0]), np.array([0.5, 0.5]), 0.1)
        new = step_conserving_lw(ROTATION, history, 0, 0.1)
        np.testing.assert_allclose(new, [0.5 + 0.2 * 2.0, 0.5 - 0.2 * 1.0])

    def test_needs_previous(self):
        """Test that two-level steps need u^{n-1}."""
        history = TimeHistory(np.ones(2), None, 0.0)
        with self.assertRaises(ValidationError):
            step_conserving_lw(ROTATION, history, 1, 0.1)
        with self.assertRaises(ValidationError):
            step_hybrid(ROTATION, history, 1, 0.1, [])

    def test_rk_lw_is_taylor(self):
        """Test rk_lw against the truncated exponential."""
        op = DenseOperator([[-2.0]])
        new = step_rk_lw(op, np.array([1.0]), 3, 0.1)
        self.assertAlmostEqual(new[0], 1 - 0.2 + 0.02 - 0.008 / 6)
        with self.assertRaises(ValidationError):
            step_rk_lw(op, np.array([1.0]), 0, 0.1)

    def test_zero_state(self):
        """Test that the zero state stays zero."""
        zero = np.zeros(2)
        self.assertFalse(np.any(step_rk_lw(ROTATION, zero, 4, 0.3)))
        self.assertFalse(np.any(step_conserving_lw(ROTATION, TimeHistory(zero, zero, 0.0), 2, 0.3)))

    def test_startup_zero_dt(self):
        """Test that a zero step leaves the state unchanged."""
        np.testing.assert_array_equal(startup(ROTATION, np.array([1.0, -1.0]), 1, 0.0), [1.0, -1.0])

    def test_hybrid_rows(self):
        """Test that hybrid rows match the conserving and Taylor updates."""
        op = DenseOperator(np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 2.0], [0.0, -2.0, -0.5]]))
        history = TimeHistory(np.array([1.0, 0.5, -0.2]), np.array([0.9, 0.6, -0.1]), 0.0)
        conserving = step_conserving_lw(op, history, 1, 0.05)
        taylor = step_rk_lw(op, history.current, 3, 0.05)
        np.testing.assert_allclose(step_hybrid(op, history, 1, 0.05, []), conserving)
        mixed = step_hybrid(op, history, 1, 0.05, np.array([False, False, True]))
        np.testing.assert_allclose(mixed, [conserving[0], conserving[1], taylor[2]])

    def test_hybrid_needs_boundary(self):
        """Test that the default hybrid boundary set must be non-empty."""
        history = TimeHistory(np.ones(2), np.ones(2), 0.0)
        with self.assertRaises(ValidationError):
            step_hybrid(ROTATION, history, 1, 0.1)


class TestAdvance(unittest.TestCase):
    """Tests for the time loop."""

    def test_step_count_and_time(self):
        """Test that dt shrinks to land on the final time."""
        times = []
        history = advance(ROTATION, [1.0, 0.0], IntegratorSpec.parse("rk4"), 1.0, 0.3,
                          callback=lambda h: times.append(h.time))
        self.assertEqual(history.step, 4)
        np.testing.assert_allclose(times, [0.25, 0.5, 0.75, 1.0])
        self.assertAlmostEqual(history.time, 1.0)

    def test_zero_length(self):
        """Test that t_final = t0 returns the initial state."""
        history = advance(ROTATION, [1.0, 0.0], IntegratorSpec.parse("lw4"), 0.0, 0.1)
        self.assertEqual(history.step, 0)
        with self.assertRaises(ValidationError):
            advance(ROTATION, [1.0, 0.0], IntegratorSpec.parse("lw4"), -1.0, 0.1)

    def test_rotation_accuracy(self):
        """Test every family against the exact rotation."""
        exact = np.array([np.cos(1.0), -np.sin(1.0)])
        for flag, tol in (("rk6", 1e-9), ("lw4", 1e-5), ("lw6", 1e-8), ("rk3", 1e-4)):
            history = advance(ROTATION, [1.0, 0.0], IntegratorSpec.parse(flag), 1.0, 0.05)
            self.assertLess(np.linalg.norm(history.current - exact), tol, msg=flag)

    def test_conserved_bilinear(self):
        """Test that conserving_lw keeps (M u^{n+1}) . u^n constant."""
        op = DenseOperator([[0.0, 3.0], [-3.0, 0.0]], mass=np.diag([2.0, 0.5]))
        values = []

        def record(history):
            if history.previous is not None:
                values.append(op.bilinear(history.current, history.previous))
        advance(op, [1.0, 1.0], IntegratorSpec.parse("lw4"), 5.0, 0.05, callback=record)
        self.assertEqual(len(values), 100)
        np.testing.assert_allclose(values, values[0], rtol=1e-12)

    def test_blowup_detected(self):
        """Test that non-finite states raise NumericalError."""
        with np.errstate(over="ignore", invalid="ignore"):
            with self.assertRaises(NumericalError):
                advance(DenseOperator([[100.0]]), [1.0], IntegratorSpec.parse("rk1"), 400.0, 1.0, check_every=10)


class TestCflDt(unittest.TestCase):
    """Tests for the CFL step size."""

    def test_advection(self):
        """Test dt = CFL h / c for unit-speed advection."""
        mesh = make_uniform_1d(0.0, 1.0, 10)
        self.assertAlmostEqual(cfl_dt(advection1d(), mesh, 0.1), 0.01)

    def test_acoustics(self):
        """Test that the moving background sets the speed to c0 + |u0|."""
        mesh = make_uniform_1d(0.0, 1.0, 10)
        self.assertAlmostEqual(cfl_dt(acoustics1d(0.5), mesh, 0.1), 0.01 / 1.5)

    def test_invalid(self):
        """Test that non-positive CFL numbers are rejected."""
        with self.assertRaises(ValidationError):
            cfl_dt(advection1d(), make_uniform_1d(0.0, 1.0, 4), 0.0)


if __name__ == '__main__':
    unittest.main()
