"""
Catalog of linear symmetric hyperbolic systems B0 u_t + B1 u_x + B2 u_y = c(x) C u,
their augmentations, and closed-form exact solutions of the example suite.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import sympy

from .algebra import as_sym, eig_decompose
from .errors import ValidationError

X, Y, T = sympy.symbols("x y t", real=True)


@dataclass(frozen=True, eq=False)
class Reaction:
    """Linear term c(x) C u on the right-hand side; {coefficient} maps points (P, dim) to (P,)."""
    coefficient: Callable[[np.ndarray], np.ndarray]
    components: np.ndarray

    def extended(self, m: int):
        """Returns the same reaction acting on the first components of an m-component system."""
        components = np.zeros((m, m))
        n = self.components.shape[0]
        components[:n, :n] = self.components
        return Reaction(self.coefficient, components)


class SymmetricSystem:
    """
    Coefficients of a linear symmetric hyperbolic system.

    B0 is symmetric positive definite per mesh region (diagonal for all systems
    except elastodynamics); B1, B2 are symmetric; B2 is None in 1D.
    {alternating} optionally names the two component groups of an alternating
    flux: rows of the first group take the second group's values from K+, rows
    of the second group take the first group's values from K-.
    """

    def __init__(self, name: str, b0, b1, b2=None, components: Sequence[str] = None,
                 reaction: Optional[Reaction] = None, params: Dict[str, float] = None,
                 alternating: Tuple[Tuple[int, ...], Tuple[int, ...]] = None):
        self.name = name
        self.b1 = as_sym(b1).entries
        self.b2 = None if b2 is None else as_sym(b2).entries
        m = self.b1.shape[0]
        if self.b2 is not None and self.b2.shape != (m, m):
            raise ValidationError(f"B2 has shape {self.b2.shape}, expected {(m, m)}")
        b0 = np.array(b0, dtype=float)
        if b0.ndim == 2:
            b0 = b0[None]
        if b0.ndim != 3 or b0.shape[1:] != (m, m):
            raise ValidationError(f"B0 must be (regions, {m}, {m}), got {b0.shape}")
        for region, block in enumerate(b0):
            as_sym(block)
            try:
                np.linalg.cholesky(block)
            except np.linalg.LinAlgError as e:
                raise ValidationError(f"B0 of region {region} is not positive definite") from e
        b0.setflags(write=False)
        self.b0 = b0
        self.components = tuple(components) if components else tuple(f"u{i}" for i in range(m))
        if len(self.components) != m:
            raise ValidationError(f"{len(self.components)} component names for {m} components")
        self.reaction = reaction
        self.params = dict(params or {})
        self.alternating = alternating

    @property
    def m(self):
        """Number of components."""
        return self.b1.shape[0]

    @property
    def dim(self):
        """Spatial dimension."""
        return 1 if self.b2 is None else 2

    @property
    def n_regions(self):
        """Number of coefficient regions."""
        return self.b0.shape[0]

    def b_n(self, normal) -> np.ndarray:
        """Normal matrix n_x B1 + n_y B2 (1D: n B1)."""
        normal = np.atleast_1d(np.asarray(normal, dtype=float))
        if len(normal) != self.dim:
            raise ValidationError(f"Expected a {self.dim}D normal, got {normal}")
        if self.dim == 1:
            return normal[0] * self.b1
        return normal[0] * self.b1 + normal[1] * self.b2

    def wave_speed(self, normal) -> float:
        """Largest |eigenvalue| of B0^-1/2 B_n B0^-1/2 over all regions."""
        b_n = self.b_n(normal)
        speed = 0.0
        for block in self.b0:
            inv_chol = np.linalg.inv(np.linalg.cholesky(block))
            speed = max(speed, float(np.max(np.abs(np.linalg.eigvalsh(inv_chol @ b_n @ inv_chol.T)))))
        return speed

    def primitive(self, region: int = 0):
        """Primitive-form matrices (B0^-1 B1, B0^-1 B2) of one region."""
        inv = np.linalg.inv(self.b0[region])
        return inv @ self.b1, None if self.b2 is None else inv @ self.b2

    def is_paired(self, normal, zero_tol=1e-12) -> bool:
        """True when B_n has as many positive as negative eigenvalues."""
        return eig_decompose(self.b_n(normal), zero_tol).r == 0

    def __str__(self):
        return f"{{SymmetricSystem {self.name} m={self.m} dim={self.dim}}}"


def _positive(**values):
    for key, value in values.items():
        if not value > 0:
            raise ValidationError(f"Parameter {key} must be positive, got {value}")


def advection1d(c: float = 1.0) -> SymmetricSystem:
    """u_t + c u_x = 0 recast as c^-1 u_t + u_x = 0."""
    _positive(c=c)
    return SymmetricSystem("advection1d", [[1.0 / c]], [[1.0]], components=["u"], params={"c": c})


def radial_advection1d() -> SymmetricSystem:
    """u_t + u_r = -u / r, the radially symmetric outgoing wave."""
    reaction = Reaction(lambda points: -1.0 / points[:, 0], np.eye(1))
    return SymmetricSystem("radial_advection1d", [[1.0]], [[1.0]], components=["u"], reaction=reaction)


def acoustics1d(u0: float = 0.0, K0: float = 1.0, rho0: float = 1.0) -> SymmetricSystem:
    """Linearized acoustics [p, u] with background velocity u0."""
    _positive(K0=K0, rho0=rho0)
    return SymmetricSystem("acoustics1d", np.diag([1.0 / K0, rho0]),
                           [[u0 / K0, 1.0], [1.0, u0 * rho0]], components=["p", "u"],
                           params={"u0": u0, "K0": K0, "rho0": rho0})


def advection2d(b0: float = 1.0, b1: float = 1.0) -> SymmetricSystem:
    """u_t + b0 u_x + b1 u_y = 0."""
    return SymmetricSystem("advection2d", [[1.0]], [[b0]], [[b1]], components=["u"],
                           params={"b0": b0, "b1": b1})


def acoustics2d(u0: float = 0.0, v0: float = 0.0, K0: float = 1.0, rho0: float = 1.0) -> SymmetricSystem:
    """Linearized acoustics [p, u, v] with background velocity (u0, v0)."""
    _positive(K0=K0, rho0=rho0)
    b1 = [[u0 / K0, 1.0, 0.0], [1.0, u0 * rho0, 0.0], [0.0, 0.0, u0 * rho0]]
    b2 = [[v0 / K0, 0.0, 1.0], [0.0, v0 * rho0, 0.0], [1.0, 0.0, v0 * rho0]]
    alternating = ((0,), (1, 2)) if u0 == 0.0 and v0 == 0.0 else None
    return SymmetricSystem("acoustics2d", np.diag([1.0 / K0, rho0, rho0]), b1, b2,
                           components=["p", "u", "v"], alternating=alternating,
                           params={"u0": u0, "v0": v0, "K0": K0, "rho0": rho0})


def acoustics2d_paired(u0: float = 0.0, v0: float = 0.0, K0: float = 1.0, rho0: float = 1.0) -> SymmetricSystem:
    """Subsonic acoustics with a zero function phi solving rho0 phi_t - rho0 (u0, v0) . grad phi = 0."""
    _positive(K0=K0, rho0=rho0)
    if u0 ** 2 + v0 ** 2 >= K0 / rho0:
        raise ValidationError("The paired acoustics system needs a subsonic background flow")
    base = acoustics2d(u0, v0, K0, rho0)
    b0, b1, b2 = np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4))
    b0[:3, :3], b1[:3, :3], b2[:3, :3] = base.b0[0], base.b1, base.b2
    b0[3, 3], b1[3, 3], b2[3, 3] = rho0, -u0 * rho0, -v0 * rho0
    return SymmetricSystem("acoustics2d_paired", b0, b1, b2, components=["p", "u", "v", "phi"],
                           params=dict(base.params))


def euler2d(Mx: float = 0.0, My: float = 0.0) -> SymmetricSystem:
    """Linearized Euler equations for [rho - p, u, v, p] with mean flow Mach numbers (Mx, My)."""
    if Mx < 0 or My < 0:
        raise ValidationError(f"Mach numbers must be non-negative, got ({Mx}, {My})")
    b1 = Mx * np.eye(4)
    b1[1, 3] = b1[3, 1] = 1.0
    b2 = My * np.eye(4)
    b2[2, 3] = b2[3, 2] = 1.0
    return SymmetricSystem("euler2d", np.eye(4), b1, b2, components=["rho-p", "u", "v", "p"],
                           params={"Mx": Mx, "My": My})


def maxwell_tm(mu: float = 1.0, eps: float = 1.0) -> SymmetricSystem:
    """Transverse magnetic Maxwell equations for [Hx, Hy, Ez]."""
    _positive(mu=mu, eps=eps)
    b1 = [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 0.0]]
    b2 = [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
    return SymmetricSystem("maxwell_tm", np.diag([mu, mu, eps]), b1, b2, components=["Hx", "Hy", "Ez"],
                           alternating=((0, 1), (2,)), params={"mu": mu, "eps": eps})


def elastodynamics(lam: float = 2.0, mu: float = 1.0, rho: float = 1.0) -> SymmetricSystem:
    """Isotropic elastodynamics in stress-velocity form [sxx, syy, sxy, v, w]."""
    _positive(mu=mu, rho=rho, lam_plus_mu=lam + mu)
    scale = 4.0 * mu * (mu + lam)
    b0 = np.zeros((5, 5))
    b0[0, 0] = b0[1, 1] = (lam + 2.0 * mu) / scale
    b0[0, 1] = b0[1, 0] = -lam / scale
    b0[2, 2] = 1.0 / mu
    b0[3, 3] = b0[4, 4] = rho
    b1, b2 = np.zeros((5, 5)), np.zeros((5, 5))
    b1[0, 3] = b1[3, 0] = b1[2, 4] = b1[4, 2] = -1.0
    b2[1, 4] = b2[4, 1] = b2[2, 3] = b2[3, 2] = -1.0
    system = SymmetricSystem("elastodynamics", b0, b1, b2, components=["sxx", "syy", "sxy", "v", "w"],
                             alternating=((0, 1, 2), (3, 4)), params={"lam": lam, "mu": mu, "rho": rho})
    system.params["cp"] = float(np.sqrt((lam + 2.0 * mu) / rho))
    system.params["cs"] = float(np.sqrt(mu / rho))
    return system


CATALOG = {
    "advection1d": advection1d,
    "radial_advection1d": radial_advection1d,
    "acoustics1d": acoustics1d,
    "advection2d": advection2d,
    "acoustics2d": acoustics2d,
    "acoustics2d_paired": acoustics2d_paired,
    "euler2d": euler2d,
    "maxwell_tm": maxwell_tm,
    "elastodynamics": elastodynamics,
}


def catalog(name: str, **params) -> SymmetricSystem:
    """Builds the catalog system {name} with the given parameters."""
    if name not in CATALOG:
        raise ValidationError(f"Unknown system {name!r}; expected one of {', '.join(CATALOG)}")
    try:
        return CATALOG[name](**params)
    except TypeError as e:
        raise ValidationError(f"Invalid parameters for {name}: {e}") from e


class AugmentedSystem:
    """
    A system extended by auxiliary zero components.

    full_double: B0 duplicated, B1 -> blockdiag(B1, -B1), B2 likewise.
    partial_1d: one auxiliary per unpaired eigenvalue lambda of B1, with unit
    B0 entry and coefficient -lambda, so every eigenvalue gets a partner.
    """

    def __init__(self, base: SymmetricSystem, mode: str):
        self.base = base
        self.mode = mode
        if mode == "full_double":
            self.system = self._double(base)
        elif mode == "partial_1d":
            if base.dim != 1:
                raise ValidationError("partial_1d augmentation is only defined in 1D")
            self.system = self._partial(base)
        else:
            raise ValidationError(f"Unknown augmentation mode {mode!r}")
        self.aug_count = self.system.m - base.m
        self.mapping = tuple(range(base.m)) + (-1,) * self.aug_count

    @property
    def full_double(self):
        """True for the full doubling of unknowns."""
        return self.mode == "full_double"

    @staticmethod
    def _double(base):
        m = base.m
        b0 = np.zeros((base.n_regions, 2 * m, 2 * m))
        b0[:, :m, :m] = b0[:, m:, m:] = base.b0

        def block(b):
            if b is None:
                return None
            out = np.zeros((2 * m, 2 * m))
            out[:m, :m], out[m:, m:] = b, -b
            return out

        reaction = base.reaction.extended(2 * m) if base.reaction else None
        names = list(base.components) + [f"phi_{c}" for c in base.components]
        return SymmetricSystem(f"{base.name}+double", b0, block(base.b1), block(base.b2), names,
                               reaction=reaction, params=base.params)

    @staticmethod
    def _partial(base):
        pairing = eig_decompose(base.b1)
        unpaired = pairing.unpaired()
        if not unpaired:
            return base
        m, r = base.m, len(unpaired)
        b0 = np.zeros((base.n_regions, m + r, m + r))
        b0[:, :m, :m] = base.b0
        b0[:, m:, m:] = np.eye(r)
        b1 = np.zeros((m + r, m + r))
        b1[:m, :m] = base.b1
        b1[m:, m:] = np.diag(-pairing.lambdas[unpaired])
        reaction = base.reaction.extended(m + r) if base.reaction else None
        names = list(base.components) + [f"phi{i}" for i in range(r)]
        logging.debug("Augmented %s with %d auxiliary components", base.name, r)
        return SymmetricSystem(f"{base.name}+aux{r}", b0, b1, None, names, reaction=reaction,
                               params=base.params)

    def extend(self, values: np.ndarray) -> np.ndarray:
        """Pads base-component values (last axis) with zero auxiliary values."""
        pad = [(0, 0)] * (values.ndim - 1) + [(0, self.aug_count)]
        return np.pad(values, pad)

    def __str__(self):
        return f"{{AugmentedSystem {self.mode} of {self.base.name}, +{self.aug_count}}}"


def augment(system: SymmetricSystem, mode: str) -> AugmentedSystem:
    """Augments {system} by full doubling or by 1D partial pairing."""
    return AugmentedSystem(system, mode)


def effective(system) -> SymmetricSystem:
    """The SymmetricSystem actually discretized (the augmented one for AugmentedSystem)."""
    return system.system if isinstance(system, AugmentedSystem) else system


class ExactSolution:
    """
    Closed-form solution given as sympy expressions in x, y, t, one per component.

    Time derivatives of any order are derived symbolically, so inflow data can
    feed the Lax-Wendroff source chain exactly.
    """

    def __init__(self, expressions, description: str, dim: int, smooth: bool = True, window=None):
        self.expressions = tuple(sympy.sympify(e) for e in expressions)
        self.description = description
        self.dim = dim
        self.smooth = smooth
        self.window = window
        self._functions = {}

    @property
    def m(self):
        """Number of components."""
        return len(self.expressions)

    def _function(self, order):
        if order not in self._functions:
            exprs = [sympy.diff(e, T, order) if order else e for e in self.expressions]
            self._functions[order] = sympy.lambdify((X, Y, T), exprs, modules="numpy")
        return self._functions[order]

    def time_derivative(self, points, t: float, order: int) -> np.ndarray:
        """d^order u / dt^order at {points} (shape (P, dim)); returns (P, m)."""
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        x = points[:, 0]
        y = points[:, 1] if self.dim == 2 else np.zeros_like(x)
        values = self._function(order)(x, y, float(t))
        return np.column_stack([np.broadcast_to(np.asarray(v, dtype=float), x.shape) for v in values])

    def __call__(self, points, t: float) -> np.ndarray:
        return self.time_derivative(points, t, 0)

    def __str__(self):
        return f"{{ExactSolution {self.description}}}"


def pde_residual(system: SymmetricSystem, exact: ExactSolution, points, t: float, step: float = 1e-5):
    """Central-difference residual of B0 u_t + B1 u_x + B2 u_y - c(x) C u at {points}, shape (P, m)."""
    points = np.asarray(points, dtype=float).reshape(-1, exact.dim)
    u_t = (exact(points, t + step) - exact(points, t - step)) / (2 * step)
    residual = u_t @ system.b0[0].T
    for axis, b in enumerate((system.b1, system.b2)[:exact.dim]):
        offset = np.zeros(exact.dim)
        offset[axis] = step
        residual += (exact(points + offset, t) - exact(points - offset, t)) / (2 * step) @ b.T
    if system.reaction:
        residual -= system.reaction.coefficient(points)[:, None] * (exact(points, t) @ system.reaction.components.T)
    return residual


def _plane_waves_2d(speed_minus, speed_plus):
    first = sympy.sin(2 * sympy.pi * (X + Y - speed_minus * T))
    second = sympy.sin(2 * sympy.pi * (X + Y + speed_plus * T))
    return first, second


def _elastic_plane_waves(lam=2, mu=1, rho=1):
    cp = sympy.sqrt(sympy.Rational(lam + 2 * mu, rho))
    cs = sympy.sqrt(sympy.Rational(mu, rho))
    s_wave = sympy.sin(2 * sympy.pi * (X + Y + sympy.sqrt(2) * cs * T))
    p_wave = sympy.sin(2 * sympy.pi * (X + Y - sympy.sqrt(2) * cp * T))
    half = sympy.sqrt(2) / 2
    return [-mu * s_wave + (lam + mu) * p_wave,
            mu * s_wave + (lam + mu) * p_wave,
            mu * p_wave,
            -half * cs * s_wave - half * cp * p_wave,
            half * cs * s_wave - half * cp * p_wave]


@lru_cache(maxsize=None)
def exact_solutions(example_id: str) -> ExactSolution:
    """Closed-form solution of an example of the suite."""
    two_pi = 2 * sympy.pi
    if example_id in ("4.1", "4.2"):
        return ExactSolution([sympy.sin(two_pi * (X - T))], "sin(2 pi (x - t))", 1)
    if example_id == "4.3":
        first, second = sympy.sin(two_pi * (X - sympy.Rational(3, 2) * T)), sympy.sin(two_pi * (X + T / 2))
        return ExactSolution([(first + second) / 2, (first - second) / 2],
                             "acoustics u0=0.5: counter-propagating sines", 1)
    if example_id == "4.4":
        return ExactSolution([sympy.sin(3 * two_pi * (X - T))], "sin(6 pi (x - t))", 1)
    if example_id == "4.5":
        return ExactSolution([sympy.exp(-200 * (sympy.Mod(X - T, 1) - sympy.Rational(1, 2)) ** 2)],
                             "periodic Gaussian pulse", 1)
    if example_id == "4.6":
        omega = sympy.pi / 3
        wave = sympy.Piecewise((5 / X * sympy.sin(omega * (T - X + 5)), X <= T + 5), (0, True))
        return ExactSolution([wave], "outgoing radial wave from r = 5", 1, smooth=False,
                             window=lambda x, t: np.abs(x - t - 5.0) > 1e-2)
    if example_id == "4.7":
        return ExactSolution([sympy.sin(two_pi * (X + Y - 2 * T))], "sin(2 pi (x + y - 2t))", 2)
    if example_id == "4.8":
        first, second = _plane_waves_2d(sympy.sqrt(2) + sympy.Rational(1, 2), sympy.sqrt(2) - sympy.Rational(1, 2))
        vel = sympy.sqrt(2) / 4 * (first - second)
        return ExactSolution([(first + second) / 2, vel, vel], "acoustics u0=0.5 plane waves", 2)
    if example_id == "4.9":
        first, second = _plane_waves_2d(sympy.sqrt(2), sympy.sqrt(2))
        vel = sympy.sqrt(2) / 4 * (first - second)
        return ExactSolution([(first + second) / 2, vel, vel], "acoustics zero background plane waves", 2)
    if example_id == "4.10":
        return ExactSolution(_elastic_plane_waves(), "elastic P and S plane waves", 2)
    if example_id == "4.11":
        return ExactSolution([sympy.sin(2 * two_pi * (X + Y - 2 * T))], "sin(4 pi (x + y - 2t))", 2)
    if example_id == "4.12":
        half = sympy.Rational(1, 2)
        return ExactSolution([sympy.exp(-200 * ((sympy.Mod(X - T, 1) - half) ** 2
                                                + (sympy.Mod(Y - T, 1) - half) ** 2))],
                             "periodic 2D Gaussian pulse", 2)
    raise ValidationError(f"Unknown example {example_id!r}")
