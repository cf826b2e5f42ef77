"""
Lax-Wendroff time integrators for M u_t = A u + f(t).

conserving_lw(r): u^{n+1} = u^{n-1} + sum_{i=0..r} 2 dt^{2i+1}/(2i+1)! d^{2i+1} u^n
rk_lw(r):         u^{n+1} = u^n + sum_{i=1..r} dt^i/i! d^i u^n
hybrid(r):        conserving_lw(r) on interior cells, rk_lw(2r+1) on boundary cells
with d^s u = M^-1 (A d^{s-1} u + f^(s-1)(t_n)). Two-level methods start with one
rk_lw(2r+2) step.
"""
import logging
import re
from dataclasses import dataclass
from enum import Enum
from math import ceil, factorial
from typing import Callable, Optional

import numpy as np

from .errors import NumericalError, ValidationError
from .mesh import Mesh


class IntegratorKind(Enum):
    """Time integrator families."""
    CONSERVING_LW = "conserving_lw"
    RK_LW = "rk_lw"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class IntegratorSpec:
    """An integrator with its stage parameter r and an explicit dt or a CFL number."""
    kind: IntegratorKind
    r: int
    dt: Optional[float] = None
    cfl: float = 0.1

    def __post_init__(self):
        minimum = 1 if self.kind is IntegratorKind.RK_LW else 0
        if self.r < minimum:
            raise ValidationError(f"{self.kind.value} needs r >= {minimum}, got {self.r}")

    @classmethod
    def parse(cls, flag: str, dt: Optional[float] = None, cfl: float = 0.1) -> "IntegratorSpec":
        """Parses 'lw<order>' (even order 2r+2), 'rk<r>' or 'hybrid<r>'."""
        match = re.fullmatch(r"(lw|rk|hybrid)(\d+)", flag.strip().lower())
        if not match:
            raise ValidationError(f"Invalid integrator {flag!r}; expected lw<order>, rk<r> or hybrid<r>")
        name, number = match.group(1), int(match.group(2))
        if name == "lw":
            if number < 2 or number % 2:
                raise ValidationError(f"Conserving Lax-Wendroff order must be even and >= 2, got {number}")
            return cls(IntegratorKind.CONSERVING_LW, (number - 2) // 2, dt, cfl)
        kind = IntegratorKind.RK_LW if name == "rk" else IntegratorKind.HYBRID
        return cls(kind, number, dt, cfl)

    @property
    def order(self):
        """Formal temporal order."""
        return self.r if self.kind is IntegratorKind.RK_LW else 2 * self.r + 2

    @property
    def applications(self):
        """Operator applications per step."""
        return self.r if self.kind is IntegratorKind.RK_LW else 2 * self.r + 1

    @property
    def two_level(self):
        """True for methods that need u^{n-1}."""
        return self.kind is not IntegratorKind.RK_LW

    @property
    def label(self):
        """CLI spelling of this integrator."""
        if self.kind is IntegratorKind.CONSERVING_LW:
            return f"lw{self.order}"
        return f"{'rk' if self.kind is IntegratorKind.RK_LW else 'hybrid'}{self.r}"


@dataclass
class TimeHistory:
    """Current and previous levels of a two-level method."""
    current: np.ndarray
    previous: Optional[np.ndarray]
    time: float
    step: int = 0

    def advanced(self, new_state, dt) -> "TimeHistory":
        """The history after one step producing {new_state}."""
        return TimeHistory(new_state, self.current, self.time + dt, self.step + 1)


def _conserving_update(previous, chain, r, dt):
    update = np.array(previous, dtype=float, copy=True)
    for i in range(r + 1):
        update = update + 2.0 * dt ** (2 * i + 1) / factorial(2 * i + 1) * chain[2 * i]
    return update


def _taylor_update(state, chain, order, dt):
    update = np.array(state, dtype=float, copy=True)
    for i in range(1, order + 1):
        update = update + dt ** i / factorial(i) * chain[i - 1]
    return update


def step_conserving_lw(op, history: TimeHistory, r: int, dt: float) -> np.ndarray:
    """One step of the energy-conserving two-level Lax-Wendroff scheme."""
    if history.previous is None:
        raise ValidationError("conserving Lax-Wendroff needs the startup level u^1")
    chain = op.derivative_chain(history.current, history.time, 2 * r + 1, dt / 16.0)
    return _conserving_update(history.previous, chain, r, dt)


def step_rk_lw(op, state, r: int, dt: float, t: float = 0.0) -> np.ndarray:
    """One step of the r-stage Runge-Kutta type Lax-Wendroff scheme."""
    if r < 1:
        raise ValidationError(f"rk_lw needs r >= 1, got {r}")
    chain = op.derivative_chain(state, t, r, dt / 16.0)
    return _taylor_update(state, chain, r, dt)


def step_hybrid(op, history: TimeHistory, r: int, dt: float, boundary_cells=None) -> np.ndarray:
    """
    conserving_lw(r) on interior rows, rk_lw(2r+1) on boundary-cell rows.

    {boundary_cells} is a boolean mask or index array over the first state axis;
    by default the cells owning a boundary face.
    """
    if history.previous is None:
        raise ValidationError("hybrid Lax-Wendroff needs the startup level u^1")
    if boundary_cells is None:
        boundary_cells = op.boundary_cell_mask()
        if boundary_cells is None or not np.any(boundary_cells):
            raise ValidationError("The hybrid scheme needs a mesh with boundary cells")
    chain = op.derivative_chain(history.current, history.time, 2 * r + 1, dt / 16.0)
    result = _conserving_update(history.previous, chain, r, dt)
    rows = np.asarray(boundary_cells)
    if rows.size and (rows.dtype != bool or rows.any()):
        result[rows] = _taylor_update(history.current, chain, 2 * r + 1, dt)[rows]
    return result


def startup(op, state, r: int, dt: float, t: float = 0.0) -> np.ndarray:
    """u^1 from u^0 by one rk_lw(2r+2) step."""
    return step_rk_lw(op, state, 2 * r + 2, dt, t)


def max_wave_speed(system, mesh: Mesh) -> float:
    """Largest characteristic speed over all face normals of {mesh}."""
    if mesh.dim == 1:
        return system.wave_speed([1.0])
    normals = np.unique(np.round(mesh.faces.normal, 12), axis=0)
    return max(system.wave_speed(n) for n in normals)


def cfl_dt(system, mesh: Mesh, cfl: float) -> float:
    """dt = CFL * rho / lambda_max (rho: min cell length in 1D, min in-radius in 2D)."""
    if not cfl > 0:
        raise ValidationError(f"CFL number must be positive, got {cfl}")
    speed = max_wave_speed(system, mesh)
    if speed == 0.0:
        raise ValidationError("System has zero wave speed; set dt explicitly")
    return cfl * mesh.rho / speed


def advance(op, u0, spec: IntegratorSpec, t_final: float, dt: float, t0: float = 0.0,
            callback: Optional[Callable[[TimeHistory], None]] = None,
            check_every: int = 100) -> TimeHistory:
    """
    Integrates from {t0} to {t_final} with a step no larger than {dt}.

    {callback} receives the history after every step (including the startup step).
    """
    if t_final < t0:
        raise ValidationError(f"Final time {t_final} precedes start time {t0}")
    n_steps = max(int(ceil((t_final - t0) / dt - 1e-9)), 0)
    history = TimeHistory(np.array(u0, dtype=float, copy=True), None, t0)
    if n_steps == 0:
        return history
    dt = (t_final - t0) / n_steps
    logging.info("Integrating with %s: %d steps of dt=%.3e to t=%g", spec.label, n_steps, dt, t_final)
    for n in range(n_steps):
        if spec.kind is IntegratorKind.RK_LW:
            new_state = step_rk_lw(op, history.current, spec.r, dt, history.time)
        elif history.previous is None:
            new_state = startup(op, history.current, spec.r, dt, history.time)
        elif spec.kind is IntegratorKind.CONSERVING_LW:
            new_state = step_conserving_lw(op, history, spec.r, dt)
        else:
            new_state = step_hybrid(op, history, spec.r, dt)
        history = history.advanced(new_state, dt)
        if callback is not None:
            callback(history)
        if (n + 1) % check_every == 0 or n + 1 == n_steps:
            if not np.all(np.isfinite(new_state)):
                raise NumericalError(f"Solution became non-finite at step {n + 1} (t={history.time:.4g})")
    return history
