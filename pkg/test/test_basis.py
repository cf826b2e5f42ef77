"""Tests for reference bases and quadrature."""
import unittest

import numpy as np

from ecdg.basis import ElementKind, make_basis, volume_quadrature
from ecdg.errors import ValidationError


class TestQuadrature(unittest.TestCase):
    """Tests for volume quadrature rules."""

    def test_interval_exactness(self):
        """Test that the interval rule integrates x^5 exactly."""
        rule = volume_quadrature("interval", 5)
        self.assertAlmostEqual(rule.integrate(rule.points[:, 0] ** 5), 1 / 6)

    def test_triangle_measure(self):
        """Test that the triangle rule integrates 1 and x*y exactly."""
        rule = volume_quadrature("triangle", 4)
        self.assertAlmostEqual(rule.integrate(np.ones(len(rule.weights))), 0.5)
        self.assertAlmostEqual(rule.integrate(rule.points[:, 0] * rule.points[:, 1]), 1 / 24)
        self.assertTrue(np.all(rule.weights > 0))

    def test_quad_exactness(self):
        """Test that the quad rule integrates x^3 y^2 exactly."""
        rule = volume_quadrature("quad", 6)
        values = rule.points[:, 0] ** 3 * rule.points[:, 1] ** 2
        self.assertAlmostEqual(rule.integrate(values), 1 / 12)

    def test_unknown_kind(self):
        """Test that an unknown element kind is rejected."""
        with self.assertRaises(ValidationError):
            volume_quadrature("hexagon", 2)


class TestReferenceBasis(unittest.TestCase):
    """Tests for orthonormal reference bases."""

    def test_orthonormal(self):
        """Test that every basis has an identity mass matrix."""
        for kind in ElementKind:
            for k in (0, 1, 3):
                basis = make_basis(kind, k)
                np.testing.assert_allclose(basis.mass_matrix(), np.eye(basis.n_modes), atol=1e-12,
                                           err_msg=f"{kind.value} k={k}")

    def test_mode_counts(self):
        """Test the number of modes per element kind."""
        self.assertEqual(make_basis("interval", 3).n_modes, 4)
        self.assertEqual(make_basis("quad", 2).n_modes, 9)
        self.assertEqual(make_basis("triangle", 2).n_modes, 6)

    def test_interval_end_values(self):
        """Test Legendre end values sqrt(2i+1) (+-1)^i."""
        basis = make_basis("interval", 4)
        left = basis.evaluate([[0.0]])[0]
        right = basis.evaluate([[1.0]])[0]
        scale = np.sqrt(2 * np.arange(5) + 1)
        np.testing.assert_allclose(right, scale)
        np.testing.assert_allclose(left, scale * (-1.0) ** np.arange(5))

    def test_stiffness_integrates_by_parts(self):
        """Test that S + S^T equals the boundary term on the interval."""
        basis = make_basis("interval", 3)
        stiffness = basis.stiffness()[0]
        left = basis.evaluate([[0.0]])[0]
        right = basis.evaluate([[1.0]])[0]
        boundary = np.outer(right, right) - np.outer(left, left)
        np.testing.assert_allclose(stiffness + stiffness.T, boundary, atol=1e-12)

    def test_face_map(self):
        """Test the counterclockwise face parametrization."""
        np.testing.assert_allclose(ElementKind.QUAD.face_map(1, 0.5), [[1.0, 0.5]])
        np.testing.assert_allclose(ElementKind.TRIANGLE.face_map(1, 0.25), [[0.75, 0.25]])
        with self.assertRaises(ValidationError):
            ElementKind.TRIANGLE.face_map(3, 0.0)

    def test_invalid_degree(self):
        """Test that degrees outside 0..6 are rejected."""
        with self.assertRaises(ValidationError):
            make_basis("interval", 7)


if __name__ == '__main__':
    unittest.main()
