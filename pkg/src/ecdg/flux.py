"""
Numerical fluxes on faces.

Every interior flux is linear: flux = F_mean {u} + F_jump [u], with
{u} = (u- + u+)/2 and [u] = u+ - u-, evaluated for the normal n- of the face.
The flux seen from K+ is the negation. All matrices act on the symmetric form.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .algebra import eig_decompose, pairing_coupler
from .errors import ValidationError
from .systems import AugmentedSystem, ExactSolution, effective

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


class FluxKind(Enum):
    """Supported interior flux families."""
    ENERGY_CONSERVING = "energy_conserving"
    DOUBLING = "doubling"
    UPWIND = "upwind"
    LAX_FRIEDRICHS = "lax_friedrichs"
    CENTRAL = "central"
    ALTERNATING_ACOUSTICS = "alternating_acoustics"
    ALTERNATING = "alternating"

    @classmethod
    def from_flag(cls, flag: str) -> "FluxKind":
        """Maps a CLI flag (ec, double, upwind, lf, central, alt) or full name to a kind."""
        if isinstance(flag, cls):
            return flag
        short = {"ec": cls.ENERGY_CONSERVING, "double": cls.DOUBLING, "upwind": cls.UPWIND,
                 "lf": cls.LAX_FRIEDRICHS, "central": cls.CENTRAL, "alt": cls.ALTERNATING}
        if flag in short:
            return short[flag]
        try:
            return cls(flag)
        except ValueError as e:
            raise ValidationError(f"Unknown flux kind {flag!r}") from e

    def conserves_energy(self):
        """True for kinds whose jump matrix is anti-symmetric."""
        return self not in (FluxKind.UPWIND, FluxKind.LAX_FRIEDRICHS)


@dataclass(frozen=True, eq=False)
class FluxSpec:
    """Precomputed flux matrices for one normal."""
    kind: FluxKind
    normal: np.ndarray
    f_mean: np.ndarray
    f_jump: np.ndarray

    def __call__(self, u_minus, u_plus):
        """Flux for traces with components on the last axis."""
        u_minus, u_plus = np.asarray(u_minus, dtype=float), np.asarray(u_plus, dtype=float)
        return 0.5 * (u_minus + u_plus) @ self.f_mean.T + (u_plus - u_minus) @ self.f_jump.T

    def seen_from_plus(self, u_minus, u_plus):
        """Flux for the normal n+ = -n-, i.e. the negation."""
        return -self(u_minus, u_plus)


def _unit_normal(normal, dim):
    normal = np.atleast_1d(np.asarray(normal, dtype=float))
    if len(normal) != dim:
        raise ValidationError(f"Expected a {dim}D normal, got {normal}")
    if abs(np.linalg.norm(normal) - 1.0) > 1e-12:
        raise ValidationError(f"Normal {normal} is not a unit vector")
    return normal


def build_face_flux(system, normal, kind, alpha: Optional[float] = None,
                    supersonic: bool = False) -> FluxSpec:
    """Flux matrices of {kind} for {system} (plain or augmented) across a face with normal n-."""
    kind = FluxKind.from_flag(kind)
    sys = effective(system)
    normal = _unit_normal(normal, sys.dim)
    if kind is FluxKind.ALTERNATING and sys.dim == 1:
        kind = FluxKind.ALTERNATING_ACOUSTICS
    if kind is FluxKind.ALTERNATING_ACOUSTICS:
        return build_alternating_acoustics_1d(system, alpha, supersonic, normal)
    if kind is FluxKind.ALTERNATING:
        return build_alternating_zero_background_2d(system, normal)

    b_n = sys.b_n(normal)
    if kind is FluxKind.CENTRAL:
        f_jump = np.zeros_like(b_n)
    elif kind is FluxKind.UPWIND:
        f_jump = -0.5 * eig_decompose(b_n).absolute()
    elif kind is FluxKind.LAX_FRIEDRICHS:
        lambdas = eig_decompose(b_n).lambdas
        f_jump = -0.5 * max(abs(lambdas[0]), abs(lambdas[-1])) * np.eye(sys.m)
    elif kind is FluxKind.ENERGY_CONSERVING:
        f_jump = pairing_coupler(eig_decompose(b_n))
    else:
        if not (isinstance(system, AugmentedSystem) and system.full_double):
            raise ValidationError("The doubling flux needs a fully doubled system")
        m = system.base.m
        abs_b = eig_decompose(system.base.b_n(normal)).absolute()
        f_jump = np.zeros_like(b_n)
        f_jump[:m, m:] = 0.5 * abs_b
        f_jump[m:, :m] = -0.5 * abs_b
    return FluxSpec(kind, normal, b_n, f_jump)


def default_alpha(system, supersonic: bool = False) -> float:
    """Stabilization 1/2 sqrt|1 - u0^2/c0^2| of the 1D acoustics flux."""
    params = effective(system).params
    ratio = params["u0"] ** 2 * params["rho0"] / params["K0"]
    if ratio > 1.0 and not supersonic:
        raise ValidationError("Supersonic acoustics needs the doubled system or the supersonic flag")
    if ratio < 1.0 and supersonic:
        raise ValidationError("The supersonic flag needs u0 > c0")
    return 0.5 * np.sqrt(abs(1.0 - ratio))


def build_alternating_acoustics_1d(system, alpha: Optional[float] = None, supersonic: bool = False,
                                   normal=(1.0,)) -> FluxSpec:
    """
    Acoustics flux B1 {u} + alpha [[0, 1], [-1, 0]] [u].

    alpha = 1/2 and u0 = 0 is the classic alternating flux; alpha = 0 is central.
    """
    sys = effective(system)
    if isinstance(system, AugmentedSystem) or sys.name != "acoustics1d":
        raise ValidationError(f"The alternating acoustics flux needs acoustics1d, got {sys.name}")
    normal = _unit_normal(normal, 1)
    if alpha is None:
        alpha = default_alpha(sys, supersonic)
    return FluxSpec(FluxKind.ALTERNATING_ACOUSTICS, normal, sys.b_n(normal), alpha * ROTATION)


def build_alternating_zero_background_2d(system, normal) -> FluxSpec:
    """
    Alternating flux for systems with two decoupled component groups.

    Rows of the first group take the second group's values from K+, rows of the
    second group take the first group's values from K-.
    """
    sys = effective(system)
    if isinstance(system, AugmentedSystem) or sys.alternating is None:
        raise ValidationError(f"No alternating flux for {sys.name} (needs a zero background)")
    normal = _unit_normal(normal, sys.dim)
    first, second = (list(g) for g in sys.alternating)
    for b in (sys.b1, sys.b2):
        if np.any(b[np.ix_(first, first)]) or np.any(b[np.ix_(second, second)]):
            raise ValidationError("The alternating flux needs a zero background")
    b_n = sys.b_n(normal)
    f_jump = np.zeros_like(b_n)
    f_jump[np.ix_(first, second)] = 0.5 * b_n[np.ix_(first, second)]
    f_jump[np.ix_(second, first)] = -0.5 * b_n[np.ix_(second, first)]
    return FluxSpec(FluxKind.ALTERNATING, normal, b_n, f_jump)


class FluxBuilder:
    """Builds flux matrices for one (system, kind) and caches them by rounded normal."""

    def __init__(self, system, kind, alpha: Optional[float] = None, supersonic: bool = False):
        self.system = system
        self.kind = FluxKind.from_flag(kind)
        self.alpha = alpha
        self.supersonic = supersonic
        self._cache = {}

    def get(self, normal) -> FluxSpec:
        """FluxSpec for {normal}, computed once per distinct normal."""
        key = tuple(np.round(np.atleast_1d(normal), 12) + 0.0)
        spec = self._cache.get(key)
        if spec is None:
            logging.debug("Flux cache miss for %s normal %s", self.kind.value, key)
            spec = build_face_flux(self.system, normal, self.kind, self.alpha, self.supersonic)
            self._cache.setdefault(key, spec)
        return spec

    def __len__(self):
        return len(self._cache)


class BoundaryKind(Enum):
    """Supported boundary conditions."""
    INFLOW = "inflow"
    OUTFLOW = "outflow"
    WALL = "wall"


@dataclass(frozen=True, eq=False)
class BoundaryFluxSpec:
    """
    Boundary flux for the outward normal n of a boundary face.

    Outgoing characteristics (positive eigenvalues of B_n) take the interior trace
    and incoming ones the data: flux = B_n+ u_h + B_n- u_data. A wall uses the
    fixed interior matrix [0, p n_x, p n_y] instead.
    """
    kind: BoundaryKind
    normal: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray
    interior_matrix: np.ndarray
    data_matrix: Optional[np.ndarray]
    data: Optional[ExactSolution]

    def __call__(self, u_interior, u_data=None):
        """Flux from interior traces and (optional) data, components on the last axis."""
        flux = np.asarray(u_interior, dtype=float) @ self.interior_matrix.T
        if self.data_matrix is not None and u_data is not None:
            flux = flux + np.asarray(u_data, dtype=float) @ self.data_matrix.T
        return flux


def build_boundary_flux(system, normal, side, data: Optional[ExactSolution] = None) -> BoundaryFluxSpec:
    """Boundary flux for a face with outward {normal} and boundary kind {side}."""
    try:
        kind = side if isinstance(side, BoundaryKind) else BoundaryKind(side)
    except ValueError as e:
        raise ValidationError(f"Unsupported boundary tag {side!r}") from e
    sys = effective(system)
    normal = _unit_normal(normal, sys.dim)
    pairing = eig_decompose(sys.b_n(normal))
    b_plus, b_minus = pairing.positive_part(), pairing.negative_part()
    if kind is BoundaryKind.WALL:
        base = system.base if isinstance(system, AugmentedSystem) else system
        if not base.name.startswith("acoustics"):
            raise ValidationError(f"Wall boundaries are defined for acoustics only, got {base.name}")
        wall = np.zeros((sys.m, sys.m))
        wall[1:1 + sys.dim, 0] = normal
        return BoundaryFluxSpec(kind, normal, b_plus, b_minus, wall, None, None)
    if kind is BoundaryKind.INFLOW:
        if data is None:
            raise ValidationError("Inflow boundaries need boundary data")
        return BoundaryFluxSpec(kind, normal, b_plus, b_minus, b_plus, b_minus, data)
    return BoundaryFluxSpec(kind, normal, b_plus, b_minus, b_plus, None, None)
