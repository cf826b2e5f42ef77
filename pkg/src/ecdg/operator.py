"""
Semi-discrete DG operator M u_t = A u + R u + f(t).

M is the block mass matrix (B0-weighted, per cell), A the transport operator
(volume term plus face fluxes), R the optional reaction term and f(t) the
inflow source. Coefficients are stored as arrays of shape (cells, components, modes)
on orthonormal reference bases, so M is block diagonal with blocks det(J) B0 (x) I.
"""
import logging
from math import comb
from typing import Callable, Dict, Optional, Union

import numpy as np

from .algebra import materialize
from .basis import ReferenceBasis, face_quadrature, make_basis, volume_quadrature
from .errors import NumericalError, ValidationError
from .flux import BoundaryKind, FluxBuilder, build_boundary_flux
from .mesh import Mesh
from .systems import effective

DENSE_LIMIT = 20000
FD_SPACING = 1e-4


class Discretization:
    """Geometry and basis tables of a system on a mesh."""

    def __init__(self, system, mesh: Mesh, basis: ReferenceBasis):
        self.system = system
        self.sys = effective(system)
        self.mesh = mesh
        self.basis = basis
        if mesh.kind is not basis.kind:
            raise ValidationError(f"Basis on {basis.kind.value} does not fit a {mesh.kind.value} mesh")
        if self.sys.dim != mesh.dim:
            raise ValidationError(f"{self.sys.dim}D system on a {mesh.dim}D mesh")
        if self.sys.n_regions == 1:
            self.b0 = np.broadcast_to(self.sys.b0[0], (mesh.n_cells, self.m, self.m))
        elif mesh.n_regions <= self.sys.n_regions:
            self.b0 = self.sys.b0[mesh.regions]
        else:
            raise ValidationError(f"Mesh has {mesh.n_regions} regions, system defines {self.sys.n_regions}")
        self.b0_inv = np.linalg.inv(self.b0)
        self.dets = mesh.dets
        self.stiffness = basis.stiffness()
        self.b_stack = np.stack([self.sys.b1] + ([self.sys.b2] if self.sys.dim == 2 else []))

        faces = mesh.faces
        if mesh.dim == 1:
            s, w = np.zeros(1), np.ones(1)
        else:
            s, w = face_quadrature(2 * basis.degree + 2)
        self.face_points = faces.points(s)
        self.face_weights = w[None, :] * faces.measure[:, None]
        self.trace_minus = self._traces(faces.minus, self.face_points)
        interior = faces.interior
        self.trace_plus = np.zeros_like(self.trace_minus)
        self.trace_plus[interior] = self._traces(
            faces.plus[interior], self.face_points[interior] + faces.shift[interior][:, None, :])

    @property
    def m(self):
        """Number of (possibly augmented) components."""
        return self.sys.m

    @property
    def shape(self):
        """Coefficient array shape (cells, components, modes)."""
        return (self.mesh.n_cells, self.m, self.basis.n_modes)

    @property
    def size(self):
        """Total number of unknowns."""
        return int(np.prod(self.shape))

    def _traces(self, cells, points):
        ref = self.mesh.map_to_reference(cells, points)
        n_faces, n_points = points.shape[:2]
        return self.basis.evaluate(ref.reshape(-1, self.mesh.dim)).reshape(n_faces, n_points, -1)

    def elevated_rule(self):
        """Quadrature of exactness 2k+6 used for projections and error norms."""
        return volume_quadrature(self.basis.kind, 2 * self.basis.degree + 6)

    def sample(self, func, t: float, rule=None):
        """Values of {func}(points, t) at physical quadrature points, shape (cells, Q, m)."""
        rule = rule or self.elevated_rule()
        cells = np.arange(self.mesh.n_cells)
        points = self.mesh.map_to_physical(cells, rule.points)
        values = np.asarray(func(points.reshape(-1, self.mesh.dim), t), dtype=float)
        values = values.reshape(len(cells), len(rule.points), -1)
        values = pad_auxiliary(values, self.m)
        if values.shape[-1] != self.m:
            raise ValidationError(f"Function returned {values.shape[-1]} components, expected {self.m}")
        return values

    def state(self, coeffs=None) -> "DGState":
        """Wraps {coeffs} (zeros by default) as a DGState."""
        return DGState(np.zeros(self.shape) if coeffs is None else coeffs, self)


class DGState:
    """Modal coefficients (cells, components, modes) of a DG function."""

    def __init__(self, coeffs, discretization: Discretization):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.size != discretization.size:
            raise ValidationError(f"State has {coeffs.size} entries, expected {discretization.size}")
        self.coeffs = coeffs.reshape(discretization.shape)
        self.discretization = discretization

    @property
    def vector(self):
        """Flat coefficient vector."""
        return self.coeffs.ravel()

    def evaluate(self, points) -> np.ndarray:
        """Values at physical {points}, shape (P, m)."""
        disc = self.discretization
        cells, ref = disc.mesh.locate(points)
        phi = disc.basis.evaluate(ref)
        return np.einsum("pai,pi->pa", self.coeffs[cells], phi)

    def component_norms(self) -> np.ndarray:
        """Unweighted L2 norm of every component."""
        return np.sqrt(np.sum(self.coeffs ** 2 * self.discretization.dets[:, None, None], axis=(0, 2)))

    def l2_errors(self, exact, t: float) -> np.ndarray:
        """L2 norm of (u_h - u) per component, using the elevated rule."""
        disc = self.discretization
        rule = disc.elevated_rule()
        reference = disc.sample(exact, t, rule)
        approx = np.einsum("kai,qi->kqa", self.coeffs, disc.basis.evaluate(rule.points))
        squared = np.einsum("q,kqa->ka", rule.weights, (approx - reference) ** 2) * disc.dets[:, None]
        return np.sqrt(np.sum(squared, axis=0))

    def __str__(self):
        return f"{{DGState shape={self.coeffs.shape}}}"


def project_initial(discretization: Discretization, func, t: float = 0.0) -> DGState:
    """L2 projection of {func}(points, t) (auxiliary components set to zero)."""
    rule = discretization.elevated_rule()
    values = discretization.sample(func, t, rule)
    phi = discretization.basis.evaluate(rule.points)
    return DGState(np.einsum("q,kqa,qi->kai", rule.weights, values, phi), discretization)


class SemiDiscreteOperator:
    """
    Matrix-free transport operator with its mass matrix, reaction and source.

    {boundary} maps boundary tags ('left', 'right', 'bottom', 'top', 'boundary')
    to (BoundaryKind or name, data) pairs; the key '*' matches any tag.
    """

    def __init__(self, discretization: Discretization, flux, boundary: Optional[Dict] = None,
                 alpha: Optional[float] = None, supersonic: bool = False):
        self.discretization = disc = discretization
        self.flux = FluxBuilder(disc.system, flux, alpha, supersonic)
        faces = disc.mesh.faces
        self.interior = faces.interior
        specs = [self.flux.get(n) for n in faces.normal[self.interior]]
        self.f_mean = np.array([s.f_mean for s in specs]).reshape(-1, disc.m, disc.m)
        self.f_jump = np.array([s.f_jump for s in specs]).reshape(-1, disc.m, disc.m)

        self.boundary = faces.boundary
        boundary = boundary or {}
        self.boundary_specs = []
        for f in self.boundary:
            tag = faces.tags[f]
            if tag in boundary:
                side, data = boundary[tag]
            elif "*" in boundary:
                side, data = boundary["*"]
            else:
                raise ValidationError(f"No boundary condition for boundary tag {tag!r}")
            self.boundary_specs.append(build_boundary_flux(disc.system, faces.normal[f], side, data))
        self.b_interior = np.array([s.interior_matrix for s in self.boundary_specs]).reshape(-1, disc.m, disc.m)
        self.source_faces = [i for i, s in enumerate(self.boundary_specs) if s.kind is BoundaryKind.INFLOW]
        self.has_source = bool(self.source_faces)

        self.reaction = disc.sys.reaction
        if self.reaction is not None:
            rule = disc.elevated_rule()
            cells = np.arange(disc.mesh.n_cells)
            points = disc.mesh.map_to_physical(cells, rule.points).reshape(-1, disc.mesh.dim)
            coef = self.reaction.coefficient(points).reshape(len(cells), -1)
            phi = disc.basis.evaluate(rule.points)
            self.reaction_blocks = np.einsum("q,kq,qi,qj->kij", rule.weights, coef, phi, phi) * disc.dets[:, None, None]
        logging.debug("Assembled operator: %d interior faces, %d boundary faces, %d unknowns",
                      len(self.interior), len(self.boundary), disc.size)

    @property
    def shape(self):
        """Coefficient array shape."""
        return self.discretization.shape

    def _as_array(self, state):
        if isinstance(state, DGState):
            return state.coeffs
        state = np.asarray(state, dtype=float)
        if state.size != self.discretization.size:
            raise ValidationError(f"State has {state.size} entries, expected {self.discretization.size}")
        return state.reshape(self.shape)

    def apply_A(self, state) -> np.ndarray:
        """A u: volume term minus face fluxes, scattered to both cells of every face."""
        disc = self.discretization
        u = self._as_array(state)
        weighted = np.einsum("eij,kbj->kbie", disc.stiffness, u)
        grads = np.einsum("ked,kbie->kbid", disc.mesh.inverse_jacobians, weighted) * disc.dets[:, None, None, None]
        out = np.einsum("dab,kbid->kai", disc.b_stack, grads)

        faces = disc.mesh.faces
        if len(self.interior):
            f = self.interior
            minus, plus = faces.minus[f], faces.plus[f]
            t_minus, t_plus = disc.trace_minus[f], disc.trace_plus[f]
            u_minus = np.einsum("fqj,fbj->fbq", t_minus, u[minus])
            u_plus = np.einsum("fqj,fbj->fbq", t_plus, u[plus])
            flux = (np.einsum("fab,fbq->faq", self.f_mean, 0.5 * (u_minus + u_plus))
                    + np.einsum("fab,fbq->faq", self.f_jump, u_plus - u_minus))
            flux *= disc.face_weights[f][:, None, :]
            np.add.at(out, minus, -np.einsum("faq,fqi->fai", flux, t_minus))
            np.add.at(out, plus, np.einsum("faq,fqi->fai", flux, t_plus))
        if len(self.boundary):
            f = self.boundary
            t_minus = disc.trace_minus[f]
            u_minus = np.einsum("fqj,fbj->fbq", t_minus, u[faces.minus[f]])
            flux = np.einsum("fab,fbq->faq", self.b_interior, u_minus) * disc.face_weights[f][:, None, :]
            np.add.at(out, faces.minus[f], -np.einsum("faq,fqi->fai", flux, t_minus))
        return out

    def apply_reaction(self, state) -> np.ndarray:
        """R u, the reaction term c(x) C u tested against the basis (zero without reaction)."""
        u = self._as_array(state)
        if self.reaction is None:
            return np.zeros_like(u)
        return np.einsum("ab,kij,kbj->kai", self.reaction.components, self.reaction_blocks, u)

    def apply(self, state) -> np.ndarray:
        """(A + R) u."""
        out = self.apply_A(state)
        if self.reaction is not None:
            out += self.apply_reaction(state)
        return out

    def source(self, t: float, order: int = 0, fd_spacing: Optional[float] = None) -> np.ndarray:
        """d^order f / dt^order at time {t}; inflow data enters here only."""
        disc = self.discretization
        out = np.zeros(self.shape)
        if not self.has_source:
            return out
        faces = disc.mesh.faces
        for i in self.source_faces:
            spec = self.boundary_specs[i]
            f = self.boundary[i]
            points = disc.face_points[f]
            values = boundary_data_derivative(spec.data, points, t, order, fd_spacing)
            values = pad_auxiliary(values, disc.m)
            flux = (values @ spec.data_matrix.T) * disc.face_weights[f][:, None]
            out[faces.minus[f]] -= flux.T @ disc.trace_minus[f]
        return out

    def mass(self, state) -> np.ndarray:
        """M u."""
        disc = self.discretization
        return np.einsum("kab,kbi->kai", disc.b0, self._as_array(state)) * disc.dets[:, None, None]

    def solve_mass(self, state) -> np.ndarray:
        """M^-1 u (exact per-cell solve)."""
        disc = self.discretization
        return np.einsum("kab,kbi->kai", disc.b0_inv, self._as_array(state)) / disc.dets[:, None, None]

    def energy(self, state) -> float:
        """E_h = u . M u = integral of (B0 u_h) . u_h."""
        u = self._as_array(state)
        return float(np.sum(u * self.mass(u)))

    def bilinear(self, first, second) -> float:
        """(M first) . second."""
        return float(np.sum(self.mass(first) * self._as_array(second)))

    def derivative_chain(self, state, t: float, count: int, fd_spacing: Optional[float] = None):
        """[d^1 u, ..., d^count u] with d^s u = M^-1 (A d^{s-1} u + R d^{s-1} u + f^(s-1)(t))."""
        d = self._as_array(state)
        chain = []
        for s in range(1, count + 1):
            rhs = self.apply(d)
            if self.has_source:
                rhs += self.source(t, s - 1, fd_spacing)
            d = self.solve_mass(rhs)
            chain.append(d)
        return chain

    def dense_A(self) -> np.ndarray:
        """Materialized A for small problems."""
        size = self.discretization.size
        if size > DENSE_LIMIT:
            logging.warning("Refusing to materialize A with %d unknowns", size)
            raise ValidationError(f"Dense A needs at most {DENSE_LIMIT} unknowns, got {size}")
        return materialize(lambda v: self.apply_A(v).ravel(), size)

    def dense_M(self) -> np.ndarray:
        """Materialized M for small problems."""
        size = self.discretization.size
        if size > DENSE_LIMIT:
            raise ValidationError(f"Dense M needs at most {DENSE_LIMIT} unknowns, got {size}")
        return materialize(lambda v: self.mass(v).ravel(), size)

    def boundary_cell_mask(self) -> np.ndarray:
        """Boolean mask of cells owning a boundary face."""
        mask = np.zeros(self.discretization.mesh.n_cells, dtype=bool)
        mask[self.discretization.mesh.boundary_cells()] = True
        return mask


def boundary_data_derivative(data, points, t, order, fd_spacing=None) -> np.ndarray:
    """
    Time derivative of boundary data at {points}.

    Data with a time_derivative method supplies exact derivatives; plain callables
    fall back to forward differences, which caps the temporal order.
    """
    if hasattr(data, "time_derivative"):
        return data.time_derivative(points, t, order)
    if order == 0:
        return np.asarray(data(points, t), dtype=float)
    h = fd_spacing or FD_SPACING
    logging.warning("Finite-difference boundary derivative of order %d with spacing %g", order, h)
    total = 0.0
    for j in range(order + 1):
        total = total + (-1) ** (order - j) * comb(order, j) * np.asarray(data(points, t + j * h), dtype=float)
    return total / h ** order


def assemble(system, mesh: Mesh, basis: Union[ReferenceBasis, int], flux, boundary: Optional[Dict] = None,
             alpha: Optional[float] = None, supersonic: bool = False) -> SemiDiscreteOperator:
    """Builds the semi-discrete operator of {system} on {mesh} (basis given or as a degree)."""
    if not isinstance(basis, ReferenceBasis):
        basis = make_basis(mesh.kind, basis)
    return SemiDiscreteOperator(Discretization(system, mesh, basis), flux, boundary, alpha, supersonic)


class DenseOperator:
    """M u_t = A u + f(t) with explicit small matrices; f is given with its time derivatives."""

    def __init__(self, a, mass=None, source: Optional[Callable[[float, int], np.ndarray]] = None):
        self.a = np.asarray(a, dtype=float)
        n = self.a.shape[0]
        self.m_matrix = np.eye(n) if mass is None else np.asarray(mass, dtype=float)
        self.m_inv = np.linalg.inv(self.m_matrix)
        self.source_fn = source
        self.has_source = source is not None
        self.shape = (n,)

    def apply(self, state):
        """A u."""
        return self.a @ state

    def source(self, t, order=0, fd_spacing=None):
        """f^(order)(t)."""
        return self.source_fn(t, order) if self.has_source else np.zeros(self.shape)

    def solve_mass(self, state):
        """M^-1 u."""
        return self.m_inv @ state

    def mass(self, state):
        """M u."""
        return self.m_matrix @ state

    def energy(self, state):
        """u . M u."""
        return float(state @ self.m_matrix @ state)

    def bilinear(self, first, second):
        """(M first) . second."""
        return float((self.m_matrix @ first) @ second)

    def derivative_chain(self, state, t, count, fd_spacing=None):
        """[d^1 u, ..., d^count u]."""
        d = np.asarray(state, dtype=float)
        chain = []
        for s in range(1, count + 1):
            rhs = self.apply(d)
            if self.has_source:
                rhs = rhs + self.source(t, s - 1)
            d = self.solve_mass(rhs)
            chain.append(d)
        return chain

    def boundary_cell_mask(self):
        """No cells; every row is interior."""
        return None


def check_finite(state, label="state"):
    """Raises NumericalError when {state} contains NaN or infinity."""
    if not np.all(np.isfinite(state)):
        raise NumericalError(f"Non-finite values in {label}")


def pad_auxiliary(values, m):
    """Pads values of the base components (last axis) with zero auxiliary components up to {m}."""
    missing = m - values.shape[-1]
    if missing <= 0:
        return values
    return np.pad(values, [(0, 0)] * (values.ndim - 1) + [(0, missing)])
