"""Orthonormal modal bases and quadrature on the reference elements.

Reference elements:
  interval  [0, 1],           faces 0: x=0, 1: x=1
  quad      [0, 1]^2,         faces 0: y=0, 1: x=1, 2: y=1, 3: x=0
  triangle  (0,0),(1,0),(0,1) faces 0: (0,0)-(1,0), 1: (1,0)-(0,1), 2: (0,1)-(0,0)
Quad and triangle faces are parametrized counterclockwise by s in [0, 1].
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from .errors import ValidationError

MAX_DEGREE = 6


class ElementKind(Enum):
    """Reference element shapes."""
    INTERVAL = "interval"
    QUAD = "quad"
    TRIANGLE = "triangle"

    @property
    def dim(self):
        """Spatial dimension of the element."""
        return 1 if self is ElementKind.INTERVAL else 2

    @property
    def measure(self):
        """Measure of the reference element."""
        return 0.5 if self is ElementKind.TRIANGLE else 1.0

    @property
    def n_faces(self):
        """Number of faces of the reference element."""
        return {ElementKind.INTERVAL: 2, ElementKind.QUAD: 4, ElementKind.TRIANGLE: 3}[self]

    def face_map(self, face, s):
        """Maps face parameters {s} in [0, 1] to reference points on face {face}."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if not 0 <= face < self.n_faces:
            raise ValidationError(f"Invalid face index {face} for {self.value}")
        if self is ElementKind.INTERVAL:
            return np.full((len(s), 1), float(face))
        corners = {
            ElementKind.QUAD: ((0, 0), (1, 0), (1, 1), (0, 1)),
            ElementKind.TRIANGLE: ((0, 0), (1, 0), (0, 1)),
        }[self]
        start = np.array(corners[face], dtype=float)
        stop = np.array(corners[(face + 1) % len(corners)], dtype=float)
        return start + np.outer(s, stop - start)


def element_kind(kind) -> ElementKind:
    """Normalizes a string or ElementKind."""
    try:
        return kind if isinstance(kind, ElementKind) else ElementKind(kind)
    except ValueError as e:
        raise ValidationError(f"Unknown element kind {kind!r}") from e


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points and positive weights on a reference element."""
    points: np.ndarray
    weights: np.ndarray
    exactness: int
    kind: ElementKind

    def integrate(self, values):
        """Integrates point values (first axis = points) against the weights."""
        return np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=None)
def gauss_interval(n_points: int):
    """Gauss-Legendre points and weights mapped to [0, 1]."""
    x, w = legendre.leggauss(n_points)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def volume_quadrature(kind, exactness: int) -> QuadratureRule:
    """Returns a rule integrating polynomials of total degree <= {exactness} exactly."""
    kind = element_kind(kind)
    if exactness < 0:
        raise ValidationError(f"Quadrature exactness must be >= 0, got {exactness}")
    if kind is ElementKind.INTERVAL:
        x, w = gauss_interval(exactness // 2 + 1)
        points, weights = x[:, None], w
    elif kind is ElementKind.QUAD:
        x, w = gauss_interval(exactness // 2 + 1)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        points = np.column_stack([xx.ravel(), yy.ravel()])
        weights = np.outer(w, w).ravel()
    else:
        # Collapsed (Duffy) tensor rule; the (1 - t) Jacobian raises the t-degree by one.
        x, w = gauss_interval((exactness + 3) // 2)
        ss, tt = np.meshgrid(x, x, indexing="ij")
        ss, tt = ss.ravel(), tt.ravel()
        points = np.column_stack([ss * (1.0 - tt), tt])
        weights = np.outer(w, w).ravel() * (1.0 - tt)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, exactness, kind)


def face_quadrature(exactness: int):
    """Gauss rule on the face parameter interval [0, 1]."""
    return gauss_interval(max(exactness, 0) // 2 + 1)


def _legendre_1d(x, k):
    """Values and derivatives of sqrt(2i+1) P_i(2x-1), i = 0..k. Shapes (len(x), k+1)."""
    xi = 2.0 * np.asarray(x, dtype=float) - 1.0
    values = np.empty((len(xi), k + 1))
    derivs = np.empty((len(xi), k + 1))
    for i in range(k + 1):
        coef = np.zeros(i + 1)
        coef[i] = np.sqrt(2 * i + 1)
        values[:, i] = legendre.legval(xi, coef)
        derivs[:, i] = 2.0 * legendre.legval(xi, legendre.legder(coef)) if i else 0.0
    return values, derivs


def _monomial_exponents(k):
    return [(d - b, b) for d in range(k + 1) for b in range(d + 1)]


def _monomials(points, exponents):
    """Centered monomials (x-1/3)^a (y-1/3)^b and their gradients."""
    x = points[:, 0] - 1.0 / 3.0
    y = points[:, 1] - 1.0 / 3.0
    values = np.empty((len(points), len(exponents)))
    grads = np.zeros((len(points), len(exponents), 2))
    for m, (a, b) in enumerate(exponents):
        values[:, m] = x ** a * y ** b
        if a:
            grads[:, m, 0] = a * x ** (a - 1) * y ** b
        if b:
            grads[:, m, 1] = b * x ** a * y ** (b - 1)
    return values, grads


@lru_cache(maxsize=None)
def _triangle_coefficients(k):
    """Modified Gram-Schmidt (two passes) of centered monomials on the reference triangle."""
    exponents = _monomial_exponents(k)
    rule = volume_quadrature(ElementKind.TRIANGLE, 2 * k + 2)
    mono, _ = _monomials(rule.points, exponents)
    coefs = np.eye(len(exponents))
    for i in range(len(exponents)):
        for _ in range(2):
            for j in range(i):
                proj = rule.integrate(mono @ coefs[i] * (mono @ coefs[j]))
                coefs[i] -= proj * coefs[j]
        norm = np.sqrt(rule.integrate((mono @ coefs[i]) ** 2))
        coefs[i] /= norm
    coefs.setflags(write=False)
    return coefs


class ReferenceBasis:
    """
    Orthonormal modal basis of degree {degree} on a reference element.

    Interval: scaled Legendre polynomials. Quad: tensor products, mode index
    i*(k+1)+j for phi_i(x) phi_j(y). Triangle: orthonormalized monomials of
    total degree <= k.
    """

    def __init__(self, kind, degree: int):
        self.kind = element_kind(kind)
        if not isinstance(degree, (int, np.integer)) or not 0 <= degree <= MAX_DEGREE:
            raise ValidationError(f"Polynomial degree must be in 0..{MAX_DEGREE}, got {degree}")
        self.degree = int(degree)
        k = self.degree
        self.n_modes = {ElementKind.INTERVAL: k + 1,
                        ElementKind.QUAD: (k + 1) ** 2,
                        ElementKind.TRIANGLE: (k + 1) * (k + 2) // 2}[self.kind]
        self.quadrature = volume_quadrature(self.kind, 2 * k + 2)
        self.values = self.evaluate(self.quadrature.points)
        self.gradients = self.gradient(self.quadrature.points)
        self.face_traces = [face_trace(self, f) for f in range(self.kind.n_faces)]

    @property
    def dim(self):
        """Spatial dimension."""
        return self.kind.dim

    def evaluate(self, points) -> np.ndarray:
        """Mode values at reference {points}, shape (n_points, n_modes)."""
        return self._tabulate(points)[0]

    def gradient(self, points) -> np.ndarray:
        """Mode gradients at reference {points}, shape (n_points, n_modes, dim)."""
        return self._tabulate(points)[1]

    def _tabulate(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        k = self.degree
        if self.kind is ElementKind.INTERVAL:
            values, derivs = _legendre_1d(points[:, 0], k)
            return values, derivs[:, :, None]
        if self.kind is ElementKind.QUAD:
            vx, dx = _legendre_1d(points[:, 0], k)
            vy, dy = _legendre_1d(points[:, 1], k)
            values = np.einsum("pi,pj->pij", vx, vy).reshape(len(points), -1)
            grads = np.stack([np.einsum("pi,pj->pij", dx, vy).reshape(len(points), -1),
                              np.einsum("pi,pj->pij", vx, dy).reshape(len(points), -1)], axis=-1)
            return values, grads
        coefs = _triangle_coefficients(k)
        mono, mono_grads = _monomials(points, _monomial_exponents(k))
        return mono @ coefs.T, np.einsum("pmd,im->pid", mono_grads, coefs)

    def mass_matrix(self):
        """Reference mass matrix (identity up to round-off)."""
        w = self.quadrature.weights
        return np.einsum("q,qi,qj->ij", w, self.values, self.values)

    def stiffness(self):
        """Reference stiffness S[e, i, j] = integral of phi_j * d(phi_i)/d(xi_e)."""
        w = self.quadrature.weights
        return np.einsum("q,qj,qie->eij", w, self.values, self.gradients)

    def __str__(self):
        return f"{{ReferenceBasis {self.kind.value} k={self.degree} modes={self.n_modes}}}"


@dataclass(frozen=True, eq=False)
class FaceTrace:
    """Mode values on one reference face."""
    face: int
    parameters: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    values: np.ndarray


def face_trace(basis: ReferenceBasis, face: int, exactness: int = None) -> FaceTrace:
    """Values of all modes at the quadrature points of reference face {face}."""
    if not 0 <= face < basis.kind.n_faces:
        raise ValidationError(f"Invalid face index {face} for {basis.kind.value}")
    if basis.kind is ElementKind.INTERVAL:
        s, w = np.zeros(1), np.ones(1)
    else:
        s, w = face_quadrature(2 * basis.degree + 2 if exactness is None else exactness)
    points = basis.kind.face_map(face, s)
    return FaceTrace(face, s, w, points, basis.evaluate(points))


@lru_cache(maxsize=None)
def make_basis(kind, k: int) -> ReferenceBasis:
    """Returns the (cached) orthonormal basis of degree {k} on {kind}."""
    return ReferenceBasis(kind, k)

