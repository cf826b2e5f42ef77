"""Tests for the semi-discrete DG operator."""
import unittest

import numpy as np

from ecdg.algebra import is_antisymmetric
from ecdg.basis import make_basis
from ecdg.errors import NumericalError, ValidationError
from ecdg.mesh import make_cartesian_2d, make_triangular_2d, make_uniform_1d, perturb_1d
from ecdg.operator import (DenseOperator, Discretization, assemble, check_finite, pad_auxiliary,
                           project_initial)
from ecdg.systems import acoustics1d, advection1d, augment, catalog


def constant(value, m=1):
    """A callable returning {value} in every one of {m} components."""
    return lambda points, t: np.full((len(points), m), float(value))


class TestDiscretization(unittest.TestCase):
    """Tests for projections, evaluation and norms."""

    def test_projection_exact_for_polynomials(self):
        """Test that degree-k polynomials are projected exactly."""
        mesh = perturb_1d(make_uniform_1d(0.0, 1.0, 5), 0.2, seed=1)
        disc = Discretization(advection1d(), mesh, make_basis("interval", 2))

        def quadratic(points, t):
            return (1.0 + points[:, :1] - 3.0 * points[:, :1] ** 2) * (1.0 + t)

        state = project_initial(disc, quadratic, 0.5)
        self.assertLess(state.l2_errors(quadratic, 0.5)[0], 1e-13)
        np.testing.assert_allclose(state.evaluate([0.3, 0.95])[:, 0],
                                   1.5 * (1.0 + np.array([0.3, 0.95]) - 3.0 * np.array([0.09, 0.9025])))

    def test_auxiliary_components_zero(self):
        """Test that augmented states start with zero auxiliary components."""
        disc = Discretization(augment(acoustics1d(0.5), "full_double"), make_uniform_1d(0.0, 1.0, 4, True),
                              make_basis("interval", 1))
        state = project_initial(disc, constant(2.0, m=2))
        np.testing.assert_allclose(state.component_norms(), [2.0, 2.0, 0.0, 0.0], atol=1e-14)

    def test_mismatch(self):
        """Test that mismatched system, mesh and basis are rejected."""
        with self.assertRaises(ValidationError):
            Discretization(advection1d(), make_cartesian_2d(2, 2), make_basis("quad", 1))
        with self.assertRaises(ValidationError):
            Discretization(advection1d(), make_uniform_1d(0.0, 1.0, 2), make_basis("quad", 1))
        disc = Discretization(advection1d(), make_uniform_1d(0.0, 1.0, 2), make_basis("interval", 1))
        with self.assertRaises(ValidationError):
            disc.state(np.zeros(3))

    def test_pad_auxiliary(self):
        """Test padding of base values."""
        np.testing.assert_array_equal(pad_auxiliary(np.ones((2, 1)), 3), [[1.0, 0.0, 0.0]] * 2)
        values = np.ones((2, 3))
        self.assertIs(pad_auxiliary(values, 3), values)


class TestSemiDiscreteOperator(unittest.TestCase):
    """Tests for the transport operator and its energy identities."""

    def test_central_p0_by_hand(self):
        """Test the piecewise-constant central scheme against hand assembly."""
        op = assemble(advection1d(), make_uniform_1d(0.0, 1.0, 3, True), 0, "central")
        expected = 0.5 * np.array([[0, -1, 1], [1, 0, -1], [-1, 1, 0]])
        np.testing.assert_allclose(op.dense_A(), expected, atol=1e-14)
        op = assemble(advection1d(), make_uniform_1d(0.0, 1.0, 2, True), 0, "central")
        np.testing.assert_allclose(op.dense_A(), 0.0, atol=1e-14)

    def test_matrix_free_matches_dense(self):
        """Test linearity and agreement with the materialized matrix."""
        mesh = make_triangular_2d(2, 0.1, seed=9, periodic=True)
        op = assemble(catalog("acoustics2d", u0=0.2), mesh, 1, "upwind")
        a = op.dense_A()
        rng = np.random.default_rng(10)
        x, y = rng.standard_normal((2, op.discretization.size))
        np.testing.assert_allclose(op.apply_A(x).ravel(), a @ x, atol=1e-12)
        np.testing.assert_allclose(op.apply_A(2.0 * x - y), 2.0 * op.apply_A(x) - op.apply_A(y), atol=1e-12)
        self.assertFalse(np.any(op.apply_A(np.zeros_like(x))))
        self.assertFalse(is_antisymmetric(a + np.eye(len(a))).is_antisymmetric)

    def test_energy_of_constant(self):
        """Test that E_h integrates (B0 u) . u."""
        op = assemble(advection1d(2.0), make_uniform_1d(0.0, 1.0, 3, True), 1, "upwind")
        u = project_initial(op.discretization, constant(1.0))
        self.assertAlmostEqual(op.energy(u), 0.5)
        np.testing.assert_allclose(op.solve_mass(op.mass(u)), u.coeffs)

    def test_conserving_fluxes_antisymmetric(self):
        """Test that energy-conserving fluxes give an anti-symmetric A on periodic meshes."""
        mesh_1d = perturb_1d(make_uniform_1d(0.0, 1.0, 6, True), 0.2, seed=2)
        cases = [
            (augment(advection1d(), "full_double"), mesh_1d, 2, "ec"),
            (augment(advection1d(), "full_double"), mesh_1d, 2, "double"),
            (acoustics1d(0.5), mesh_1d, 2, "alt"),
            (acoustics1d(0.5), mesh_1d, 1, "central"),
            (catalog("maxwell_tm"), make_triangular_2d(2, 0.1, seed=3, periodic=True), 1, "alt"),
            (catalog("acoustics2d_paired", u0=0.5), make_cartesian_2d(2, 3, 0.1, periodic=True), 1, "ec"),
            (catalog("elastodynamics"), make_cartesian_2d(2, 2, periodic=True), 1, "alt"),
        ]
        for system, mesh, k, kind in cases:
            op = assemble(system, mesh, k, kind)
            check = is_antisymmetric(op.dense_A(), tol=1e-11)
            self.assertTrue(check.is_antisymmetric, msg=f"{kind} on {mesh}: violation {check.violation}")

    def test_upwind_dissipative(self):
        """Test that the upwind operator has a negative semi-definite symmetric part."""
        op = assemble(acoustics1d(0.5), make_uniform_1d(0.0, 1.0, 5, True), 2, "upwind")
        a = op.dense_A()
        eigenvalues = np.linalg.eigvalsh(a + a.T)
        self.assertLessEqual(eigenvalues.max(), 1e-11)
        self.assertLess(eigenvalues.min(), -1e-3)

    def test_constant_is_stationary(self):
        """Test that constants are steady states on periodic meshes."""
        for mesh, kind in ((make_uniform_1d(0.0, 1.0, 4, True), "interval"),
                           (make_triangular_2d(3, 0.1, seed=4, periodic=True), "triangle")):
            system = acoustics1d(0.5) if kind == "interval" else catalog("acoustics2d", u0=0.3, v0=0.2)
            op = assemble(system, mesh, 2, "upwind")
            u = project_initial(op.discretization, constant(1.0, system.m))
            np.testing.assert_allclose(op.apply(u), 0.0, atol=1e-12)

    def test_inflow_source(self):
        """Test that constant inflow data keeps a constant state steady."""
        mesh = make_uniform_1d(0.0, 1.0, 4)
        op = assemble(advection1d(), mesh, 1, "upwind", {"*": ("inflow", constant(1.0))})
        self.assertTrue(op.has_source)
        u = project_initial(op.discretization, constant(1.0))
        np.testing.assert_allclose(op.apply(u) + op.source(0.0), 0.0, atol=1e-12)
        np.testing.assert_allclose(op.source(0.0, order=1), 0.0, atol=1e-8)

    def test_missing_boundary(self):
        """Test that a bounded mesh needs boundary conditions."""
        with self.assertRaises(ValidationError):
            assemble(advection1d(), make_uniform_1d(0.0, 1.0, 4), 1, "upwind")

    def test_reaction(self):
        """Test the reaction term -u/r against its quadrature."""
        mesh = make_uniform_1d(5.0, 7.0, 2)
        op = assemble(catalog("radial_advection1d"), mesh, 0, "upwind",
                      {"left": ("inflow", constant(0.0)), "right": ("outflow", None)})
        u = project_initial(op.discretization, constant(1.0))
        reaction = op.apply_reaction(u)[:, 0, 0]
        np.testing.assert_allclose(reaction, -np.log([6.0 / 5.0, 7.0 / 6.0]), rtol=1e-6)

    def test_derivative_chain(self):
        """Test that the chain repeats M^-1 A."""
        op = assemble(acoustics1d(), make_uniform_1d(0.0, 1.0, 3, True), 1, "alt")
        rng = np.random.default_rng(5)
        u = rng.standard_normal(op.discretization.size)
        first, second = op.derivative_chain(u, 0.0, 2)
        np.testing.assert_allclose(first, op.solve_mass(op.apply(u)))
        np.testing.assert_allclose(second, op.solve_mass(op.apply(first)))
        np.testing.assert_array_equal(op.boundary_cell_mask(), [False] * 3)


class TestDenseOperator(unittest.TestCase):
    """Tests for explicit small operators."""

    def test_chain_with_source(self):
        """Test the derivative chain of u' = a u + f(t)."""
        op = DenseOperator([[2.0]], source=lambda t, order: np.array([1.0 if order == 0 else 0.0]))
        first, second = op.derivative_chain(np.array([1.0]), 0.0, 2)
        np.testing.assert_allclose(first, [3.0])
        np.testing.assert_allclose(second, [6.0])
        self.assertIsNone(op.boundary_cell_mask())

    def test_check_finite(self):
        """Test the non-finite guard."""
        check_finite(np.zeros(3))
        with self.assertRaises(NumericalError):
            check_finite(np.array([0.0, np.nan]))


if __name__ == '__main__':
    unittest.main()
