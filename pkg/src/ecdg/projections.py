"""
Local projections on 1D meshes used as oracles for the error analysis.

P+ keeps the moments against P^{k-1} and matches u at the left end of every
cell (the + trace of the face there); P- matches u at the right end. The coupled
projections are built from P+ and P- and then checked against their defining
face conditions, with jumps taken as [w] = w+ - w-.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import eig_decompose
from .basis import ElementKind, ReferenceBasis, volume_quadrature
from .errors import NumericalError, ValidationError
from .mesh import Mesh1D

CONDITION_TOL = 1e-11

SIDES = {"+": 0.0, "-": 1.0, "plus": 0.0, "minus": 1.0}


@dataclass
class ProjectionResult:
    """Modal coefficients (cells, components, modes) of a projection and its residuals."""
    coeffs: np.ndarray
    mesh: Mesh1D
    basis: ReferenceBasis
    moment_residual: np.ndarray
    condition_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def max_residual(self):
        """Largest violation of any defining condition."""
        values = [np.max(np.abs(r)) for r in (self.moment_residual, self.condition_residual) if np.size(r)]
        return float(max(values)) if values else 0.0

    def component(self, index) -> "ProjectionResult":
        """The projection restricted to one component."""
        return ProjectionResult(self.coeffs[:, index:index + 1], self.mesh, self.basis,
                                self.moment_residual, self.condition_residual)

    def evaluate(self, points) -> np.ndarray:
        """Values at physical {points}, shape (P, components)."""
        cells, ref = self.mesh.locate(points)
        return np.einsum("pai,pi->pa", self.coeffs[cells], self.basis.evaluate(ref))

    def traces(self) -> np.ndarray:
        """Left and right end values of every cell, shape (cells, 2, components)."""
        ends = self.basis.evaluate(np.array([[0.0], [1.0]]))
        return np.einsum("kai,ei->kea", self.coeffs, ends)

    def errors(self, func: Callable) -> np.ndarray:
        """L2 norm of (projection - func) per component."""
        rule, points = _rule_points(self.mesh, self.basis)
        values = _sample(func, points)
        approx = np.einsum("kai,qi->kqa", self.coeffs, self.basis.evaluate(rule.points))
        squared = np.einsum("q,kqa->a", rule.weights, (approx - values) ** 2 * self.mesh.lengths[:, None, None])
        return np.sqrt(squared)

    def __add__(self, other):
        return ProjectionResult(self.coeffs + other.coeffs, self.mesh, self.basis,
                                self.moment_residual + other.moment_residual)

    def __sub__(self, other):
        return ProjectionResult(self.coeffs - other.coeffs, self.mesh, self.basis,
                                self.moment_residual + other.moment_residual)

    def scaled(self, factor) -> "ProjectionResult":
        """The projection times a scalar or per-component factor."""
        return ProjectionResult(self.coeffs * np.reshape(factor, (1, -1, 1)), self.mesh, self.basis,
                                self.moment_residual * float(np.max(np.abs(factor))))


def _check_inputs(mesh, basis):
    if not isinstance(mesh, Mesh1D):
        raise ValidationError("Gauss-Radau projections are defined on 1D meshes")
    if basis.kind is not ElementKind.INTERVAL:
        raise ValidationError(f"Expected an interval basis, got {basis.kind.value}")


def _rule_points(mesh: Mesh1D, basis: ReferenceBasis):
    rule = volume_quadrature(ElementKind.INTERVAL, 2 * basis.degree + 6)
    points = mesh.map_to_physical(np.arange(mesh.n), rule.points)
    return rule, points


def _sample(func, points):
    """func at points of shape (..., 1), returned with a trailing component axis."""
    shape = points.shape[:-1]
    values = np.asarray(func(points.reshape(-1, 1)), dtype=float)
    return values.reshape(shape + (-1,))


def _moments(func, mesh, basis):
    rule, points = _rule_points(mesh, basis)
    values = _sample(func, points)
    return np.einsum("q,kqa,qi->kai", rule.weights, values, basis.evaluate(rule.points))


def _moment_residual(coeffs, func, mesh, basis):
    k = basis.degree
    rule, points = _rule_points(mesh, basis)
    phi = basis.evaluate(rule.points)
    approx = np.einsum("kai,qi->kqa", coeffs, phi)
    residual = np.einsum("q,kqa,qi->kai", rule.weights, approx - _sample(func, points), phi[:, :k])
    return np.max(np.abs(residual), axis=(1, 2), initial=0.0)


def moment_residual(result: ProjectionResult, func: Callable) -> np.ndarray:
    """Per-cell max |(Pu - u, phi_i)| over the modes i < k, in reference measure."""
    return _moment_residual(result.coeffs, func, result.mesh, result.basis)


def gauss_radau(func: Callable, mesh: Mesh1D, basis: ReferenceBasis, side: str) -> ProjectionResult:
    """
    P+ ({side} '+') or P- ({side} '-') of {func}, which maps points (P, 1) to (P,) or (P, m).

    The first k modal coefficients are the moments; the last one is fixed by the
    endpoint value, using phi_k(0) = sqrt(2k+1) (-1)^k and phi_k(1) = sqrt(2k+1).
    """
    _check_inputs(mesh, basis)
    if side not in SIDES:
        raise ValidationError(f"Side must be '+' or '-', got {side!r}")
    end = SIDES[side]
    k = basis.degree
    coeffs = _moments(func, mesh, basis)
    end_points = (mesh.nodes[:-1] if end == 0.0 else mesh.nodes[1:])[:, None]
    target = _sample(func, end_points)
    phi_end = basis.evaluate(np.array([[end]]))[0]
    coeffs[:, :, k] = (target - np.einsum("kai,i->ka", coeffs[:, :, :k], phi_end[:k])) / phi_end[k]

    endpoint_residual = np.max(np.abs(np.einsum("kai,i->ka", coeffs, phi_end) - target), axis=1)
    return ProjectionResult(coeffs, mesh, basis, _moment_residual(coeffs, func, mesh, basis), endpoint_residual)


def coupled_advection_projection(u: Callable, phi: Callable, mesh: Mesh1D, basis: ReferenceBasis):
    """
    (P1 u, P2 phi) with the moments of u and phi and, on every interior face,
    {P1 u} + [P2 phi]/2 = u and {P2 phi} + [P1 u]/2 = phi.

    Built as P1 u = (P+(u+phi) + P-(u-phi))/2, P2 phi = (P+(u+phi) - P-(u-phi))/2.
    """
    plus = gauss_radau(lambda x: _sample(u, x) + _sample(phi, x), mesh, basis, "+")
    minus = gauss_radau(lambda x: _sample(u, x) - _sample(phi, x), mesh, basis, "-")
    first = (plus + minus).scaled(0.5)
    second = (plus - minus).scaled(0.5)
    residual = _advection_conditions(first, second, u, phi)
    _assert_conditions(residual, "coupled advection projection")
    first.condition_residual = second.condition_residual = residual
    first.moment_residual = moment_residual(first, u)
    second.moment_residual = moment_residual(second, phi)
    return first, second


def coupled_advection_direct(u: Callable, phi: Callable, mesh: Mesh1D, basis: ReferenceBasis):
    """The coupled advection projection from one global solve of its defining conditions (periodic meshes)."""
    _check_inputs(mesh, basis)
    if not mesh.periodic:
        raise ValidationError("The global coupled system is square on periodic meshes only")
    k, n = basis.degree, mesh.n
    modes = k + 1
    size = 2 * n * modes

    def index(cell, comp, mode):
        return (cell * 2 + comp) * modes + mode

    matrix = np.zeros((size, size))
    rhs = np.zeros(size)
    moments = np.concatenate([_moments(u, mesh, basis), _moments(phi, mesh, basis)], axis=1)
    row = 0
    for cell in range(n):
        for comp in range(2):
            for mode in range(k):
                matrix[row, index(cell, comp, mode)] = 1.0
                rhs[row] = moments[cell, comp, mode]
                row += 1
    ends = basis.evaluate(np.array([[0.0], [1.0]]))
    faces = mesh.faces
    node = faces.endpoints[:, 0, 0]
    u_face = _sample(u, node[:, None])[:, 0]
    phi_face = _sample(phi, node[:, None])[:, 0]
    for f in range(len(faces)):
        left, right = faces.minus[f], faces.plus[f]
        for comp, other, target in ((0, 1, u_face[f]), (1, 0, phi_face[f])):
            for mode in range(modes):
                matrix[row, index(left, comp, mode)] += 0.5 * ends[1, mode]
                matrix[row, index(right, comp, mode)] += 0.5 * ends[0, mode]
                matrix[row, index(right, other, mode)] += 0.5 * ends[0, mode]
                matrix[row, index(left, other, mode)] -= 0.5 * ends[1, mode]
            rhs[row] = target
            row += 1
    try:
        solution = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as e:
        raise NumericalError("Singular coupled projection system") from e
    coeffs = solution.reshape(n, 2, modes)
    first, second = coeffs[:, :1].copy(), coeffs[:, 1:].copy()
    return (ProjectionResult(first, mesh, basis, _moment_residual(first, u, mesh, basis)),
            ProjectionResult(second, mesh, basis, _moment_residual(second, phi, mesh, basis)))


def _face_values(result: ProjectionResult):
    """(minus trace, plus trace) on the interior faces, shape (faces, components)."""
    traces = result.traces()
    faces = result.mesh.faces
    f = faces.interior
    return traces[faces.minus[f], 1], traces[faces.plus[f], 0], faces.endpoints[f, 0]


def _advection_conditions(first, second, u, phi):
    u_minus, u_plus, nodes = _face_values(first)
    p_minus, p_plus, _ = _face_values(second)
    if not len(nodes):
        return np.zeros(0)
    r1 = 0.5 * (u_minus + u_plus) + 0.5 * (p_plus - p_minus) - _sample(u, nodes)
    r2 = 0.5 * (p_minus + p_plus) + 0.5 * (u_plus - u_minus) - _sample(phi, nodes)
    return np.maximum(np.abs(r1), np.abs(r2)).max(axis=1)


def _assert_conditions(residual, label, scale=1.0):
    if residual.size and np.max(residual) > CONDITION_TOL * max(scale, 1.0):
        raise NumericalError(f"{label} violates its face conditions by {np.max(residual):.3e}")


def coupled_acoustics_projection(func: Callable, system, mesh: Mesh1D, basis: ReferenceBasis,
                                 alpha=None) -> ProjectionResult:
    """
    Projection of acoustics data [p, u] with the moments of the data and, on every
    interior face, B1 {Pu} + alpha [[0, 1], [-1, 0]] [Pu] = B1 u with alpha = sqrt(-l+ l-) / 2
    (the default flux stabilization when K0 = rho0 = 1).

    In characteristic variables w = S^-1 u (B1 = S diag(l+, l-) S^T) with
    a = sqrt(-l- / l+):
        P w1 = (P+(w1 + a w2) + P-(w1 - a w2)) / 2
        P w2 = (P+(w2 + w1 / a) + P-(w2 - w1 / a)) / 2
    """
    if system.name != "acoustics1d":
        raise ValidationError(f"Expected acoustics1d, got {system.name}")
    pairing = eig_decompose(system.b1)
    l_plus, l_minus = pairing.lambdas
    if not l_plus > 0 > l_minus:
        raise ValidationError("The local projection is not defined for supersonic background flow")
    expected_alpha = 0.5 * np.sqrt(-l_plus * l_minus)
    if alpha is None:
        alpha = expected_alpha
    elif abs(alpha - expected_alpha) > 1e-14:
        raise ValidationError(f"The projection needs alpha = {expected_alpha}, got {alpha}")
    s = pairing.S
    a = np.sqrt(-l_minus / l_plus)

    def characteristic(x):
        return _sample(func, x) @ s

    def combo(c1, c2):
        return lambda x: characteristic(x) @ np.array([c1, c2])

    w1 = (gauss_radau(combo(1.0, a), mesh, basis, "+") + gauss_radau(combo(1.0, -a), mesh, basis, "-")).scaled(0.5)
    w2 = (gauss_radau(combo(1.0 / a, 1.0), mesh, basis, "+")
          + gauss_radau(combo(-1.0 / a, 1.0), mesh, basis, "-")).scaled(0.5)
    coeffs = np.einsum("ab,kbi->kai", s, np.concatenate([w1.coeffs, w2.coeffs], axis=1))
    result = ProjectionResult(coeffs, mesh, basis, _moment_residual(coeffs, func, mesh, basis))

    u_minus, u_plus, nodes = _face_values(result)
    rotation = np.array([[0.0, 1.0], [-1.0, 0.0]])
    if len(nodes):
        lhs = 0.5 * (u_minus + u_plus) @ system.b1.T + alpha * (u_plus - u_minus) @ rotation.T
        residual = np.max(np.abs(lhs - _sample(func, nodes) @ system.b1.T), axis=1)
    else:
        residual = np.zeros(0)
    scale = float(np.max(np.abs(system.b1)))
    _assert_conditions(residual, "coupled acoustics projection", scale)
    result.condition_residual = residual
    logging.debug("Acoustics projection: a=%.6f, max face residual %.3e", a, result.max_residual)
    return result
