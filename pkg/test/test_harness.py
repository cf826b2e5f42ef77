"""Tests for the experiment harness."""
import os
import unittest
from unittest import mock

import numpy as np

from ecdg.errors import ValidationError
from ecdg.flux import FluxKind
from ecdg.harness import (SCENARIOS, ConvergenceTable, CutLine, EnergySeries, WaveMetrics, build_mesh,
                          describe_catalog, orders, resolve_method, run_convergence, run_energy,
                          run_longtime, run_temporal_order, scenario, simulate, worker_count)
from ecdg.systems import AugmentedSystem
from ecdg.timestep import IntegratorSpec


class TestOrders(unittest.TestCase):
    """Tests for observed orders and convergence tables."""

    def test_synthetic_orders(self):
        """Test that C h^p gives order p with a blank first row."""
        scales = [0.1, 0.05, 0.025]
        result = orders(scales, [3.0 * h ** 2.5 for h in scales])
        self.assertTrue(np.isnan(result[0]))
        np.testing.assert_allclose(result[1:], 2.5)

    def test_table_csv(self):
        """Test the CSV layout of a convergence table."""
        table = ConvergenceTable("N", [10, 20], [0.1, 0.05], {"u": [1e-2, 2.5e-3]}, {"example": "4.1"})
        lines = table.to_csv().splitlines()
        self.assertEqual(lines[0], "N,error_u,order_u")
        self.assertEqual(lines[1], "10,1.000000e-02,")
        self.assertEqual(lines[2], "20,2.500000e-03,2.000000e+00")
        self.assertAlmostEqual(table.final_order("u"), 2.0)
        self.assertIn("example=4.1", str(table))


class TestTemporalOrder(unittest.TestCase):
    """Tests for the rotation benchmark."""

    def test_orders(self):
        """Test the observed order of every integrator family."""
        for flag, expected in (("rk4", 4), ("lw4", 4), ("lw2", 2), ("rk3", 3)):
            table = run_temporal_order(flag, dts=(0.2, 0.1, 0.05))
            self.assertAlmostEqual(table.final_order("u"), expected, delta=0.3, msg=flag)


class TestScenarios(unittest.TestCase):
    """Tests for the example suite and method mapping."""

    def test_suite(self):
        """Test that every example is registered with its exact solution."""
        self.assertEqual(list(SCENARIOS), [f"4.{i}" for i in range(1, 13)])
        for sc in SCENARIOS.values():
            self.assertEqual(sc.exact().dim, sc.dim, msg=sc.example_id)
        with self.assertRaises(ValidationError):
            scenario("4.13")

    def test_method_mapping(self):
        """Test what A, A-Double, U and C discretize."""
        system, kind = resolve_method(scenario("4.1"), "A")
        self.assertIsInstance(system, AugmentedSystem)
        self.assertIs(kind, FluxKind.ENERGY_CONSERVING)
        system, kind = resolve_method(scenario("4.3"), "A")
        self.assertEqual((system.name, kind), ("acoustics1d", FluxKind.ALTERNATING))
        system, kind = resolve_method(scenario("4.8"), "A")
        self.assertEqual((system.name, kind), ("acoustics2d_paired", FluxKind.ENERGY_CONSERVING))
        self.assertIs(resolve_method(scenario("4.10"), "A")[1], FluxKind.ALTERNATING)
        self.assertIs(resolve_method(scenario("4.7"), "A-Double")[1], FluxKind.DOUBLING)
        self.assertIs(resolve_method(scenario("4.7"), "U")[1], FluxKind.UPWIND)
        self.assertIs(resolve_method(scenario("4.9"), "C")[1], FluxKind.CENTRAL)
        with self.assertRaises(ValidationError):
            resolve_method(scenario("4.1"), "B")

    def test_build_mesh(self):
        """Test mesh kinds per example."""
        self.assertEqual(build_mesh(scenario("4.6"), 25).b, 450.0)
        self.assertEqual(build_mesh(scenario("4.7"), 3, "triangle").n_cells, 18)
        with self.assertRaises(ValidationError):
            build_mesh(scenario("4.7"), 3, "interval")
        with self.assertRaises(ValidationError):
            build_mesh(scenario("4.1"), 3, "quad")
        with self.assertRaises(ValidationError):
            build_mesh(scenario("4.1"), 3, mesh_file="unused.tri")

    def test_worker_count(self):
        """Test the thread count from arguments and the environment."""
        self.assertEqual(worker_count(3), 3)
        with mock.patch.dict(os.environ, {"ECDG_THREADS": "2"}):
            self.assertEqual(worker_count(), 2)
        with mock.patch.dict(os.environ, {"ECDG_THREADS": "many"}):
            with self.assertRaises(ValidationError):
                worker_count()
        with self.assertRaises(ValidationError):
            worker_count(0)

    def test_describe_catalog(self):
        """Test the listing used by the CLI."""
        listing = describe_catalog()
        self.assertEqual(len(listing["examples"]), 12)
        self.assertIn("A-Double", listing["methods"])
        self.assertIn("maxwell_tm", listing["systems"])


class TestRuns(unittest.TestCase):
    """Tests for short simulations."""

    def test_simulate_errors(self):
        """Test that a short run reports per-component and combined errors."""
        sc = scenario("4.1")
        result = simulate(sc, "A", 2, build_mesh(sc, 10), IntegratorSpec.parse("rk6"), t_final=0.1)
        errors = result.errors()
        self.assertEqual(set(errors), {"u", "phi_u", "combined"})
        self.assertAlmostEqual(errors["combined"], errors["u"])
        self.assertLess(errors["u"], 5e-3)
        self.assertAlmostEqual(result.history.time, 0.1)

    def test_energy_conserving_lw(self):
        """Test the conserved bilinear of conserving_lw with an energy-conserving flux."""
        _, series = run_energy("4.3", "A", 2, 10, "lw4", t_final=0.2)
        self.assertGreater(len(series.bilinears), 10)
        self.assertLess(series.bilinear_drift, 1e-11)
        self.assertLess(series.energy_drift, 1e-4)
        self.assertEqual(series.to_csv().splitlines()[0], "t,E_h")

    def test_upwind_dissipates(self):
        """Test that the upwind flux loses energy."""
        _, series = run_energy("4.1", "U", 1, 10, "rk3", t_final=0.2)
        self.assertLess(series.energies[-1], series.energies[0])
        self.assertEqual(series.bilinear_drift, 0.0)

    def test_longtime_metrics(self):
        """Test wave metrics of a short plane-wave run."""
        result = run_longtime("4.4", "A", "rk6", t_final=0.5, samples=100)
        self.assertAlmostEqual(result.metrics.amplitude_ratio, 1.0, delta=0.1)
        self.assertLess(abs(result.metrics.phase_shift), 0.02)
        self.assertEqual(result.cut.to_csv().splitlines()[0], "x,u_h,u_exact")

    def test_longtime_options(self):
        """Test that mesh perturbation and an explicit step reach the long-time run."""
        result = run_longtime("4.4", "A", "rk6", t_final=0.1, samples=50, perturb=0.1, seed=3, dt=0.01)
        self.assertAlmostEqual(result.run.dt, 0.01)
        self.assertGreater(np.ptp(result.run.mesh.lengths), 0.0)

    def test_convergence_step_options(self):
        """Test the explicit step and the example's CFL in convergence studies."""
        with mock.patch("ecdg.harness.simulate", wraps=simulate) as run:
            table = run_convergence("4.1", "U", 0, (4, 8), t_final=0.02, dt=0.01)
        self.assertEqual([c.args[4].dt for c in run.call_args_list], [0.01, 0.01])
        self.assertEqual(table.metadata["cfl"], 0.1)
        table = run_convergence("4.11", "U", 0, (2,), t_final=0.01)
        self.assertEqual(table.metadata["cfl"], scenario("4.11").cfl)


class TestWaveMetrics(unittest.TestCase):
    """Tests for amplitude and phase measurements."""

    def setUp(self):
        self.x = np.linspace(0.0, 1.0, 400, endpoint=False)

    def test_identical(self):
        """Test that identical profiles give ratio 1 and no shift."""
        profile = np.sin(2 * np.pi * self.x)
        metrics = WaveMetrics.compare(CutLine(self.x, profile, profile), periodic=True)
        self.assertAlmostEqual(metrics.amplitude_ratio, 1.0)
        self.assertAlmostEqual(metrics.phase_shift, 0.0)

    def test_lagging_and_damped(self):
        """Test a damped profile sitting left of the exact one."""
        exact = np.exp(-200 * (self.x - 0.5) ** 2)
        numerical = 0.8 * np.exp(-200 * (self.x + 0.01 - 0.5) ** 2)
        metrics = WaveMetrics.compare(CutLine(self.x, numerical, exact), periodic=False, energy_drift=0.1)
        self.assertAlmostEqual(metrics.amplitude_ratio, 0.8, places=3)
        self.assertAlmostEqual(metrics.phase_shift, 0.01, delta=5e-4)
        self.assertEqual(metrics.energy_drift, 0.1)

    def test_constant_exact(self):
        """Test that a flat exact profile is rejected."""
        with self.assertRaises(ValidationError):
            WaveMetrics.compare(CutLine(self.x, self.x, np.ones_like(self.x)), periodic=True)

    def test_empty_series(self):
        """Test drifts of an empty series."""
        self.assertEqual(EnergySeries().energy_drift, 0.0)


if __name__ == '__main__':
    unittest.main()
