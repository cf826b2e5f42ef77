"""
Experiment engine: the example suite, convergence tables, energy series and
long-time wave metrics.

Methods are named as in the result tables: U (upwind), C (central), A (the
energy-conserving method of each example: doubled unknowns, the paired
system or the alternating flux) and A-Double (doubled unknowns with the
characteristic-wise doubling flux).
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import ValidationError
from .flux import FluxKind
from .mesh import (Mesh, load_triangular_2d, make_cartesian_2d, make_triangular_2d,
                   make_uniform_1d, perturb_1d)
from .operator import DenseOperator, DGState, assemble, check_finite, project_initial
from .systems import AugmentedSystem, augment, catalog, effective, exact_solutions
from .timestep import IntegratorSpec, TimeHistory, advance, cfl_dt

THREADS_ENV = "ECDG_THREADS"
CUT_SAMPLES = 400


@dataclass(frozen=True)
class Scenario:
    """One example of the suite: system, domain, final time and method (A)."""
    example_id: str
    description: str
    system: str
    params: Dict[str, float]
    t_final: float
    periodic: bool = True
    domain: Tuple[float, float] = (0.0, 1.0)
    mesh_kind: str = "interval"
    method_a: Tuple[Optional[str], str] = ("full_double", "ec")
    paired_system: Optional[str] = None
    sizes: Tuple[int, ...] = (10, 20, 40, 80, 160)
    degree: int = 2
    perturb: float = 0.1
    cfl: float = 0.1
    cut: Tuple[float, float] = (0.0, 1.0)
    cut_y: float = 0.5
    long_time: bool = False

    @property
    def dim(self):
        """Spatial dimension."""
        return 1 if self.mesh_kind == "interval" else 2

    def base_system(self):
        """The catalog system of this example."""
        return catalog(self.system, **self.params)

    def exact(self):
        """Closed-form solution."""
        return exact_solutions(self.example_id)


_2D_SIZES = (4, 8, 16)

SCENARIOS = {s.example_id: s for s in [
    Scenario("4.1", "1D advection, periodic", "advection1d", {"c": 1.0}, 0.5),
    Scenario("4.2", "1D advection, inflow at x = 0", "advection1d", {"c": 1.0}, 0.5, periodic=False),
    Scenario("4.3", "1D acoustics, u0 = 0.5, periodic", "acoustics1d", {"u0": 0.5, "K0": 1.0, "rho0": 1.0},
             0.5, method_a=(None, "alt")),
    Scenario("4.4", "1D plane wave, long time", "advection1d", {"c": 1.0}, 10.0, sizes=(10,),
             perturb=0.0, long_time=True),
    Scenario("4.5", "1D Gaussian pulse, long time", "advection1d", {"c": 1.0}, 40.0, sizes=(20,),
             perturb=0.0, long_time=True),
    Scenario("4.6", "1D spherical wave from r = 5", "radial_advection1d", {}, 400.0, periodic=False,
             domain=(5.0, 450.0), sizes=(250,), perturb=0.0, cut=(350.0, 430.0), long_time=True),
    Scenario("4.7", "2D advection, periodic", "advection2d", {"b0": 1.0, "b1": 1.0}, 0.1,
             mesh_kind="quad", sizes=_2D_SIZES),
    Scenario("4.8", "2D acoustics, u0 = 0.5, periodic", "acoustics2d", {"u0": 0.5, "v0": 0.0}, 0.1,
             mesh_kind="quad", method_a=(None, "ec"), paired_system="acoustics2d_paired", sizes=_2D_SIZES),
    Scenario("4.9", "2D acoustics, zero background", "acoustics2d", {"u0": 0.0, "v0": 0.0}, 0.1,
             mesh_kind="quad", method_a=(None, "alt"), sizes=_2D_SIZES),
    Scenario("4.10", "2D elastodynamics, periodic", "elastodynamics", {"lam": 2.0, "mu": 1.0, "rho": 1.0},
             0.1, mesh_kind="quad", method_a=(None, "alt"), sizes=_2D_SIZES),
    Scenario("4.11", "2D plane wave, long time", "advection2d", {"b0": 1.0, "b1": 1.0}, 40.0,
             mesh_kind="quad", sizes=(10,), perturb=0.0, cfl=0.05, long_time=True),
    Scenario("4.12", "2D Gaussian pulse, long time", "advection2d", {"b0": 1.0, "b1": 1.0}, 10.0,
             mesh_kind="quad", sizes=(20,), perturb=0.0, cfl=0.05, long_time=True),
]}

METHOD_FLAGS = ("A", "A-Double", "U", "C", "ec", "double", "upwind", "lf", "central", "alt")


def scenario(example_id: str) -> Scenario:
    """Looks up an example of the suite."""
    if example_id not in SCENARIOS:
        raise ValidationError(f"Unknown example {example_id!r}; expected one of {', '.join(SCENARIOS)}")
    return SCENARIOS[example_id]


def _is_paired(system):
    if system.dim == 1:
        return system.is_paired([1.0])
    diagonal = np.sqrt(0.5)
    return all(system.is_paired(n) for n in ([1.0, 0.0], [0.0, 1.0], [diagonal, diagonal], [diagonal, -diagonal]))


def resolve_method(sc: Scenario, method: str):
    """(system to discretize, flux kind) for a method letter or flux flag."""
    base = sc.base_system()
    aliases = {"U": "upwind", "C": "central", "A-Double": "double"}
    method = aliases.get(method, method)
    if method == "A":
        mode, flag = sc.method_a
        if flag == "ec" and mode is None:
            return _ec_system(sc, base), FluxKind.ENERGY_CONSERVING
        return (augment(base, mode) if mode else base), FluxKind.from_flag(flag)
    if method == "double":
        return augment(base, "full_double"), FluxKind.DOUBLING
    if method == "ec":
        return _ec_system(sc, base), FluxKind.ENERGY_CONSERVING
    if method not in ("upwind", "lf", "central", "alt"):
        raise ValidationError(f"Unknown method {method!r}; expected one of {', '.join(METHOD_FLAGS)}")
    return base, FluxKind.from_flag(method)


def _ec_system(sc, base):
    if _is_paired(base):
        return base
    if sc.paired_system:
        return catalog(sc.paired_system, **sc.params)
    return augment(base, "full_double")


def build_mesh(sc: Scenario, n: int, kind: Optional[str] = None, perturb: Optional[float] = None,
               seed: int = 0, mesh_file: Optional[str] = None) -> Mesh:
    """Mesh of the example domain with {n} cells per direction."""
    kind = kind or sc.mesh_kind
    perturb = sc.perturb if perturb is None else perturb
    if mesh_file:
        if sc.dim != 2:
            raise ValidationError(f"Example {sc.example_id} is one-dimensional; mesh files hold triangles")
        return load_triangular_2d(mesh_file, periodic=sc.periodic)
    if kind == "interval":
        if sc.dim != 1:
            raise ValidationError(f"Example {sc.example_id} is two-dimensional")
        mesh = make_uniform_1d(sc.domain[0], sc.domain[1], n, periodic=sc.periodic)
        return perturb_1d(mesh, perturb, seed) if perturb > 0.0 else mesh
    if sc.dim != 2:
        raise ValidationError(f"Example {sc.example_id} is one-dimensional")
    if kind == "quad":
        return make_cartesian_2d(n, n, perturb, seed, periodic=sc.periodic)
    if kind == "triangle":
        return make_triangular_2d(n, min(perturb, 0.2), seed, periodic=sc.periodic)
    raise ValidationError(f"Unknown mesh kind {kind!r}")


def worker_count(threads: Optional[int] = None) -> int:
    """Worker threads for independent runs: {threads}, else ECDG_THREADS, else 1."""
    if threads is None:
        value = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(value)
        except ValueError as e:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {value!r}") from e
    if threads < 1:
        raise ValidationError(f"Worker count must be >= 1, got {threads}")
    return threads


@dataclass
class RunResult:
    """Final state of one simulation with its operator and step size."""
    scenario: Scenario
    method: str
    state: DGState
    op: object
    history: TimeHistory
    dt: float

    @property
    def mesh(self):
        """The mesh of the run."""
        return self.state.discretization.mesh

    def errors(self) -> Dict[str, float]:
        """L2 errors against the exact solution at the final time."""
        return l2_error(self.state, self.scenario.exact(), self.history.time)


def prepare(sc: Scenario, method: str, degree: int, mesh: Mesh, alpha: Optional[float] = None,
            supersonic: bool = False):
    """Operator of the example (inflow data on every boundary tag) and its projected initial state."""
    system, kind = resolve_method(sc, method)
    exact = sc.exact()
    boundary = None if sc.periodic else {"*": ("inflow", exact)}
    op = assemble(system, mesh, degree, kind, boundary, alpha, supersonic)
    return op, project_initial(op.discretization, exact, 0.0)


def simulate(sc: Scenario, method: str, degree: int, mesh: Mesh, integrator: IntegratorSpec,
             t_final: Optional[float] = None, alpha: Optional[float] = None, supersonic: bool = False,
             callback=None) -> RunResult:
    """Projects the exact initial data and integrates the example to {t_final}."""
    op, u0 = prepare(sc, method, degree, mesh, alpha, supersonic)
    system = op.discretization.system
    dt = integrator.dt or cfl_dt(effective(system), mesh, integrator.cfl)
    t_final = sc.t_final if t_final is None else t_final
    logging.info("Running example %s with %s (%s), k=%d, %d cells, dt=%.3e", sc.example_id, method,
                 op.flux.kind.value, degree, mesh.n_cells, dt)
    step_callback = None
    if callback is not None:
        callback(op, TimeHistory(u0.coeffs, None, 0.0))

        def step_callback(history):
            callback(op, history)
    history = advance(op, u0.coeffs, integrator, t_final, dt, callback=step_callback)
    check_finite(history.current, f"example {sc.example_id} at t={history.time:g}")
    return RunResult(sc, method, DGState(history.current, op.discretization), op, history, dt)


def l2_error(state: DGState, exact, t: float) -> Dict[str, float]:
    """
    L2 error per component and the combined root-sum-square over base components.

    Auxiliary components are compared against zero, so their entry is the norm
    of the computed auxiliary function.
    """
    disc = state.discretization
    errors = state.l2_errors(exact, t)
    names = effective(disc.system).components
    result = {name: float(e) for name, e in zip(names, errors)}
    base_m = disc.system.base.m if isinstance(disc.system, AugmentedSystem) else exact.m
    result["combined"] = float(np.sqrt(np.sum(errors[:base_m] ** 2)))
    return result


def orders(scales: Sequence[float], errors: Sequence[float]) -> np.ndarray:
    """Observed orders log(e_{i-1}/e_i) / log(s_{i-1}/s_i); the first entry is NaN."""
    scales, errors = np.asarray(scales, dtype=float), np.asarray(errors, dtype=float)
    result = np.full(len(errors), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        result[1:] = np.log(errors[:-1] / errors[1:]) / np.log(scales[:-1] / scales[1:])
    return result


@dataclass
class ConvergenceTable:
    """Errors of one configuration over a sequence of resolutions."""
    key: str
    values: List[float]
    scales: List[float]
    errors: Dict[str, List[float]]
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def quantities(self):
        """Names of the error columns."""
        return list(self.errors)

    def orders(self, quantity: str) -> np.ndarray:
        """Observed orders of one quantity (NaN on the first row)."""
        return orders(self.scales, self.errors[quantity])

    def final_order(self, quantity: str) -> float:
        """Order measured on the finest pair."""
        return float(self.orders(quantity)[-1])

    def to_frame(self) -> pd.DataFrame:
        """Columns key, error_<q>, order_<q> per quantity."""
        columns = {self.key: self.values}
        for q in self.quantities:
            columns[f"error_{q}"] = self.errors[q]
            columns[f"order_{q}"] = self.orders(q)
        return pd.DataFrame(columns)

    def to_csv(self, filename: Optional[str] = None) -> str:
        """Writes the table (first-row orders blank); returns the CSV text."""
        text = self.to_frame().to_csv(index=False, na_rep="", float_format="%.6e")
        if filename:
            with open(filename, "w") as f:
                f.write(text)
            logging.info("Wrote convergence table to file %s", filename)
        return text

    def __str__(self):
        header = ", ".join(f"{k}={v}" for k, v in self.metadata.items())
        return f"{header}\n{self.to_frame().to_string(index=False, float_format=lambda v: f'{v:.3e}')}"


def reference_dt(system, mesh: Mesh, degree: int, integrator: IntegratorSpec) -> float:
    """Step size with dt^order <= 0.01 h^(k+1), capped by the CFL step."""
    dt = cfl_dt(effective(system), mesh, integrator.cfl)
    return min(dt, (0.01 * mesh.h ** (degree + 1)) ** (1.0 / integrator.order))


def run_convergence(example_id: str, method: str, degree: int, sizes: Optional[Sequence[int]] = None,
                    integrator: str = "rk6", seed: int = 0, perturb: Optional[float] = None,
                    mesh_kind: Optional[str] = None, cfl: Optional[float] = None,
                    t_final: Optional[float] = None, threads: Optional[int] = None, dt: Optional[float] = None,
                    alpha: Optional[float] = None, supersonic: bool = False) -> ConvergenceTable:
    """
    Spatial convergence study; every mesh size is an independent deterministic run.

    Without {dt} each size uses reference_dt; {cfl} defaults to the example's own.
    """
    sc = scenario(example_id)
    sizes = list(sizes or sc.sizes)
    cfl = sc.cfl if cfl is None else cfl
    system, _ = resolve_method(sc, method)

    def one(n):
        mesh = build_mesh(sc, n, mesh_kind, perturb, seed)
        spec = IntegratorSpec.parse(integrator, dt=dt, cfl=cfl)
        if dt is None:
            spec = IntegratorSpec(spec.kind, spec.r, reference_dt(system, mesh, degree, spec), cfl)
        return simulate(sc, method, degree, mesh, spec, t_final, alpha, supersonic).errors()

    workers = min(worker_count(threads), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, sizes))
    else:
        rows = [one(n) for n in sizes]
    errors = {q: [row[q] for row in rows] for q in rows[0]}
    metadata = {"example": sc.example_id, "method": method, "k": degree, "integrator": integrator,
                "mesh": mesh_kind or sc.mesh_kind, "seed": seed, "cfl": cfl}
    return ConvergenceTable("N", sizes, [1.0 / n for n in sizes], errors, metadata)


def rotation_operator(omega: float = 1.0) -> DenseOperator:
    """u' = [[0, omega], [-omega, 0]] u with identity mass."""
    return DenseOperator(np.array([[0.0, omega], [-omega, 0.0]]))


def run_temporal_order(integrator: str, dts: Sequence[float] = (0.2, 0.1, 0.05), t_final: float = 1.0,
                       omega: float = 1.0) -> ConvergenceTable:
    """Errors of {integrator} on the rotation benchmark against its exact solution."""
    op = rotation_operator(omega)
    u0 = np.array([1.0, 0.0])
    c, s = np.cos(omega * t_final), np.sin(omega * t_final)
    exact = np.array([[c, s], [-s, c]]) @ u0
    errors = []
    for dt in dts:
        spec = IntegratorSpec.parse(integrator, dt=dt)
        history = advance(op, u0, spec, t_final, dt)
        errors.append(float(np.linalg.norm(history.current - exact)))
    return ConvergenceTable("dt", list(dts), list(dts), {"u": errors},
                            {"integrator": integrator, "omega": omega, "T": t_final})


@dataclass
class EnergySeries:
    """E_h(t^n) and, for two-level methods, the bilinear (M u^{n+1}) . u^n."""
    times: List[float] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    bilinears: List[float] = field(default_factory=list)
    two_level: bool = True

    def record(self, op, history: TimeHistory):
        """Appends the values after one step."""
        self.times.append(history.time)
        self.energies.append(op.energy(history.current))
        if self.two_level and history.previous is not None:
            self.bilinears.append(op.bilinear(history.current, history.previous))
        logging.debug("t=%.6f E_h=%.15e", history.time, self.energies[-1])

    @property
    def energy_drift(self):
        """max |E_h(t) - E_h(0)| / E_h(0)."""
        e = np.asarray(self.energies)
        return float(np.max(np.abs(e - e[0])) / e[0]) if len(e) else 0.0

    @property
    def bilinear_drift(self):
        """max |B^n - B^1| / E_h(0) over the recorded bilinears."""
        if not self.bilinears:
            return 0.0
        b = np.asarray(self.bilinears)
        return float(np.max(np.abs(b - b[0])) / self.energies[0])

    def to_csv(self, filename: Optional[str] = None) -> str:
        """Writes the t,E_h series; returns the CSV text."""
        text = pd.DataFrame({"t": self.times, "E_h": self.energies}).to_csv(index=False, float_format="%.15e")
        if filename:
            with open(filename, "w") as f:
                f.write(text)
            logging.info("Wrote energy series to file %s", filename)
        return text


def run_energy(example_id: str, method: str, degree: Optional[int] = None, n: Optional[int] = None,
               integrator: str = "lw4", cfl: Optional[float] = None, dt: Optional[float] = None,
               t_final: Optional[float] = None, seed: int = 0, perturb: Optional[float] = None,
               mesh_kind: Optional[str] = None, alpha: Optional[float] = None,
               supersonic: bool = False, mesh_file: Optional[str] = None) -> Tuple[RunResult, EnergySeries]:
    """
    Runs an example and records the energy (and conserved bilinear) after every step.

    {mesh_file} replaces the generated mesh; {cfl} defaults to the example's own.
    """
    sc = scenario(example_id)
    degree = sc.degree if degree is None else degree
    mesh = build_mesh(sc, n or sc.sizes[0], mesh_kind, perturb, seed, mesh_file)
    spec = IntegratorSpec.parse(integrator, dt=dt, cfl=sc.cfl if cfl is None else cfl)
    series = EnergySeries(two_level=spec.two_level)
    result = simulate(sc, method, degree, mesh, spec, t_final, alpha, supersonic, callback=series.record)
    logging.info("Energy drift %.3e, bilinear drift %.3e", series.energy_drift, series.bilinear_drift)
    return result, series


@dataclass
class CutLine:
    """Numerical and exact values along a sampling line."""
    x: np.ndarray
    numerical: np.ndarray
    exact: np.ndarray

    def to_csv(self, filename: Optional[str] = None) -> str:
        """Writes x,u_h,u_exact; returns the CSV text."""
        text = pd.DataFrame({"x": self.x, "u_h": self.numerical, "u_exact": self.exact}).to_csv(
            index=False, float_format="%.10e")
        if filename:
            with open(filename, "w") as f:
                f.write(text)
            logging.info("Wrote cut line to file %s", filename)
        return text


def _correlation_lag(numerical, exact, periodic):
    """Sub-sample lag l maximizing sum_i numerical[i + l] exact[i]."""
    a = numerical - numerical.mean()
    b = exact - exact.mean()
    n = len(a)
    if periodic:
        corr = np.real(np.fft.ifft(np.fft.fft(a) * np.conj(np.fft.fft(b))))
        lags = np.arange(n)
        lags[lags > n // 2] -= n
    else:
        corr = np.correlate(a, b, mode="full")
        lags = np.arange(-n + 1, n)
    peak = int(np.argmax(corr))
    left, right = corr[peak - 1], corr[(peak + 1) % len(corr)]
    if not periodic and (peak == 0 or peak == len(corr) - 1):
        return float(lags[peak])
    denominator = left - 2 * corr[peak] + right
    offset = 0.5 * (left - right) / denominator if denominator != 0 else 0.0
    return float(lags[peak] + offset)


@dataclass(frozen=True)
class WaveMetrics:
    """Dissipation and phase error of a final-time cut, and the energy drift of the run."""
    amplitude_ratio: float
    phase_shift: float
    energy_drift: float

    @classmethod
    def compare(cls, cut: CutLine, periodic: bool, energy_drift: float = 0.0) -> "WaveMetrics":
        """
        Peak-to-peak ratio and cross-correlation shift in x units, positive when
        the computed profile sits left of the exact one.
        """
        exact_range = np.ptp(cut.exact)
        if exact_range == 0.0:
            raise ValidationError("Exact cut is constant; amplitude ratio undefined")
        ratio = float(np.ptp(cut.numerical) / exact_range)
        spacing = cut.x[1] - cut.x[0]
        shift = _correlation_lag(cut.numerical, cut.exact, periodic) * spacing
        return cls(ratio, float(-shift), energy_drift)


def sample_cut(state: DGState, sc: Scenario, t: float, samples: int = CUT_SAMPLES) -> CutLine:
    """First component of the solution along the example's cut line."""
    lo, hi = sc.cut
    x = np.linspace(lo, hi, samples, endpoint=not sc.periodic)
    points = x[:, None] if sc.dim == 1 else np.column_stack([x, np.full_like(x, sc.cut_y)])
    return CutLine(x, state.evaluate(points)[:, 0], sc.exact()(points, t)[:, 0])


@dataclass
class LongTimeResult:
    """Wave metrics, final cut and energy series of a long-time run."""
    metrics: WaveMetrics
    cut: CutLine
    series: EnergySeries
    run: RunResult


def run_longtime(example_id: str, method: str, integrator: str = "rk3", t_final: Optional[float] = None,
                 degree: Optional[int] = None, n: Optional[int] = None, cfl: Optional[float] = None,
                 mesh_kind: Optional[str] = None, samples: int = CUT_SAMPLES, seed: int = 0,
                 perturb: Optional[float] = None, dt: Optional[float] = None, alpha: Optional[float] = None,
                 supersonic: bool = False, mesh_file: Optional[str] = None) -> LongTimeResult:
    """Long-time run of an example, measured against its exact solution on the cut line."""
    sc = scenario(example_id)
    if cfl is None:
        cfl = 0.02 if mesh_kind == "triangle" and sc.dim == 2 else sc.cfl
    run, series = run_energy(example_id, method, degree, n, integrator, cfl=cfl, dt=dt, t_final=t_final,
                             seed=seed, perturb=perturb, mesh_kind=mesh_kind, alpha=alpha,
                             supersonic=supersonic, mesh_file=mesh_file)
    cut = sample_cut(run.state, sc, run.history.time, samples)
    metrics = WaveMetrics.compare(cut, sc.periodic, series.energy_drift)
    logging.info("Example %s %s: amplitude ratio %.4f, phase shift %.4e", sc.example_id, method,
                 metrics.amplitude_ratio, metrics.phase_shift)
    return LongTimeResult(metrics, cut, series, run)


def describe_catalog() -> Dict[str, List[str]]:
    """Examples, systems and flux flags known to the harness."""
    from .systems import CATALOG
    return {
        "examples": [f"{s.example_id}: {s.description} (T={s.t_final:g})" for s in SCENARIOS.values()],
        "systems": list(CATALOG),
        "methods": list(METHOD_FLAGS),
        "fluxes": [k.value for k in FluxKind],
    }
