"""Tests for interior and boundary fluxes."""
import unittest

import numpy as np

from ecdg.errors import ValidationError
from ecdg.flux import (BoundaryKind, FluxBuilder, FluxKind, build_boundary_flux, build_face_flux,
                       default_alpha)
from ecdg.systems import acoustics1d, advection1d, augment, catalog, exact_solutions

DIAGONAL = np.array([0.6, 0.8])


class TestFluxKind(unittest.TestCase):
    """Tests for flux flags."""

    def test_flags(self):
        """Test short flags and full names."""
        self.assertIs(FluxKind.from_flag("lf"), FluxKind.LAX_FRIEDRICHS)
        self.assertIs(FluxKind.from_flag("alternating_acoustics"), FluxKind.ALTERNATING_ACOUSTICS)
        with self.assertRaises(ValidationError):
            FluxKind.from_flag("roe")

    def test_conserves_energy(self):
        """Test which kinds are dissipative."""
        self.assertFalse(FluxKind.UPWIND.conserves_energy())
        self.assertTrue(FluxKind.DOUBLING.conserves_energy())


class TestInteriorFlux(unittest.TestCase):
    """Tests for interior face fluxes."""

    def cases(self):
        """(system, normal, kind) combinations that must be consistent."""
        return [
            (augment(advection1d(), "full_double"), [1.0], "ec"),
            (augment(advection1d(), "full_double"), [1.0], "double"),
            (acoustics1d(0.5), [1.0], "ec"),
            (acoustics1d(0.5), [-1.0], "alt"),
            (acoustics1d(0.5), [1.0], "upwind"),
            (catalog("acoustics2d"), DIAGONAL, "alt"),
            (catalog("acoustics2d_paired", u0=0.5), DIAGONAL, "ec"),
            (catalog("maxwell_tm"), DIAGONAL, "alt"),
            (catalog("elastodynamics"), DIAGONAL, "alt"),
            (augment(catalog("euler2d", Mx=0.5), "full_double"), DIAGONAL, "double"),
            (catalog("euler2d", Mx=0.5), DIAGONAL, "lf"),
            (catalog("advection2d"), DIAGONAL, "central"),
        ]

    def test_consistency(self):
        """Test that flux(u, u) = B_n u."""
        rng = np.random.default_rng(1)
        for system, normal, kind in self.cases():
            spec = build_face_flux(system, normal, kind)
            u = rng.standard_normal(spec.f_mean.shape[0])
            np.testing.assert_allclose(spec(u, u), spec.f_mean @ u, atol=1e-12, err_msg=f"{kind}")

    def test_jump_antisymmetric(self):
        """Test that energy-conserving kinds have anti-symmetric jump matrices."""
        for system, normal, kind in self.cases():
            spec = build_face_flux(system, normal, kind)
            if spec.kind.conserves_energy():
                np.testing.assert_allclose(spec.f_jump, -spec.f_jump.T, atol=1e-12, err_msg=f"{kind}")

    def test_upwind_advection(self):
        """Test that upwinding picks the K- value for positive speed."""
        spec = build_face_flux(advection1d(), [1.0], "upwind")
        self.assertAlmostEqual(spec([2.0], [5.0])[0], 2.0)
        self.assertAlmostEqual(spec.seen_from_plus([2.0], [5.0])[0], -2.0)

    def test_ec_needs_pairing(self):
        """Test that the coupler flux rejects unpaired spectra."""
        with self.assertRaises(ValidationError):
            build_face_flux(advection1d(), [1.0], "ec")

    def test_doubling_needs_doubled(self):
        """Test that the doubling flux requires doubled unknowns."""
        with self.assertRaises(ValidationError):
            build_face_flux(acoustics1d(0.5), [1.0], "double")
        with self.assertRaises(ValidationError):
            build_face_flux(augment(advection1d(), "partial_1d"), [1.0], "double")

    def test_alternating_needs_zero_background(self):
        """Test that the 2D alternating flux rejects a moving background."""
        with self.assertRaises(ValidationError):
            build_face_flux(catalog("acoustics2d", u0=0.5), DIAGONAL, "alt")
        with self.assertRaises(ValidationError):
            build_face_flux(catalog("advection2d"), DIAGONAL, "alt")

    def test_unit_normal(self):
        """Test that non-unit normals are rejected."""
        with self.assertRaises(ValidationError):
            build_face_flux(catalog("advection2d"), [1.0, 1.0], "central")

    def test_alternating_acoustics(self):
        """Test the classic alternating flux and the default stabilization."""
        spec = build_face_flux(acoustics1d(), [1.0], "alt")
        np.testing.assert_allclose(spec.f_jump, [[0.0, 0.5], [-0.5, 0.0]])
        # [p, u] = [1, 0] | [0, 1]: pressure flux u+ = 1, velocity flux p- = 1
        np.testing.assert_allclose(spec([1.0, 0.0], [0.0, 1.0]), [1.0, 1.0])
        self.assertAlmostEqual(default_alpha(acoustics1d(0.5)), 0.5 * np.sqrt(0.75))

    def test_supersonic_flag(self):
        """Test the supersonic flag against the background speed."""
        with self.assertRaises(ValidationError):
            default_alpha(acoustics1d(1.5))
        self.assertAlmostEqual(default_alpha(acoustics1d(1.5), supersonic=True), 0.5 * np.sqrt(1.25))
        with self.assertRaises(ValidationError):
            default_alpha(acoustics1d(0.5), supersonic=True)

    def test_builder_cache(self):
        """Test that the builder computes each normal once."""
        builder = FluxBuilder(catalog("maxwell_tm"), "alt")
        first = builder.get([1.0, 0.0])
        self.assertIs(builder.get(np.array([1.0, 0.0])), first)
        builder.get([0.0, 1.0])
        self.assertEqual(len(builder), 2)


class TestBoundaryFlux(unittest.TestCase):
    """Tests for boundary fluxes."""

    def test_inflow_outflow(self):
        """Test that advection takes data at the inflow end and the trace at the outflow end."""
        exact = exact_solutions("4.2")
        left = build_boundary_flux(advection1d(), [-1.0], "inflow", exact)
        self.assertAlmostEqual(left([3.0], [2.0])[0], -2.0)
        right = build_boundary_flux(advection1d(), [1.0], BoundaryKind.OUTFLOW)
        self.assertAlmostEqual(right([3.0])[0], 3.0)

    def test_inflow_needs_data(self):
        """Test that inflow boundaries need data."""
        with self.assertRaises(ValidationError):
            build_boundary_flux(advection1d(), [-1.0], "inflow")

    def test_wall(self):
        """Test that the wall flux only carries the pressure into the momentum rows."""
        spec = build_boundary_flux(catalog("acoustics2d"), [0.0, -1.0], "wall")
        np.testing.assert_allclose(spec([2.0, 5.0, 7.0]), [0.0, 0.0, -2.0])
        with self.assertRaises(ValidationError):
            build_boundary_flux(advection1d(), [1.0], "wall")

    def test_unknown_tag(self):
        """Test that unknown boundary kinds are rejected."""
        with self.assertRaises(ValidationError):
            build_boundary_flux(advection1d(), [1.0], "absorbing")


if __name__ == '__main__':
    unittest.main()
