"""Small dense symmetric-matrix utilities.

Eigendecomposition by cyclic Jacobi rotations with a deterministic eigenvector
orientation, anti-symmetry checks, and the bookkeeping that pairs positive
with negative eigenvalues for the energy-conserving flux.
"""
import logging
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from .errors import NumericalError, ValidationError

MAX_SWEEPS = 30
JACOBI_TOL = 1e-14
SYMMETRY_TOL = 1e-14
CLUSTER_TOL = 1e-10


class SymMatrix:
    """A small real symmetric matrix (n <= 10 in every catalog system)."""

    def __init__(self, entries):
        entries = np.array(entries, dtype=float)
        if entries.ndim == 0:
            entries = entries.reshape(1, 1)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError(f"Expected a square matrix, got shape {entries.shape}")
        scale = np.max(np.abs(entries)) if entries.size else 0.0
        asym = np.max(np.abs(entries - entries.T)) if entries.size else 0.0
        if asym > SYMMETRY_TOL * scale:
            raise ValidationError(f"Matrix is not symmetric (max |a_ij - a_ji| = {asym:.3e})")
        entries.setflags(write=False)
        self.entries = entries

    @property
    def n(self):
        """Dimension of the matrix."""
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __eq__(self, other):
        if type(other) is type(self):
            return np.array_equal(self.entries, other.entries)
        return False

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __str__(self):
        return f"{{SymMatrix n={self.n}}}"


def as_sym(m: Union[SymMatrix, np.ndarray, list]) -> SymMatrix:
    """Returns {m} as a validated SymMatrix."""
    return m if isinstance(m, SymMatrix) else SymMatrix(m)


class EigenPairing:
    """
    Sorted spectrum of a symmetric matrix with its orientation-fixed eigenbasis.

    Eigenvalues are sorted descending. Index i (i < s) is paired with index
    n-1-i, so the largest positive eigenvalues couple to the most negative ones.
    The r eigenvalues of the majority sign left over are unpaired.
    """

    def __init__(self, lambdas, s_matrix, zero_tol):
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.S = np.asarray(s_matrix, dtype=float)
        self.lambdas.setflags(write=False)
        self.S.setflags(write=False)
        scale = np.max(np.abs(self.lambdas)) if self.lambdas.size else 0.0
        self.tol = zero_tol * scale
        self.n_positive = int(np.sum(self.lambdas > self.tol))
        self.n_negative = int(np.sum(self.lambdas < -self.tol))
        self.zero_count = len(self.lambdas) - self.n_positive - self.n_negative
        self.s = min(self.n_positive, self.n_negative)
        self.r = abs(self.n_positive - self.n_negative)

    @property
    def n(self):
        """Dimension of the decomposed matrix."""
        return len(self.lambdas)

    def pairs(self) -> List[Tuple[int, int]]:
        """Returns the (positive index, negative index) pairs."""
        return [(i, self.n - 1 - i) for i in range(self.s)]

    def unpaired(self) -> List[int]:
        """Returns the indices of the unpaired nonzero eigenvalues."""
        if self.n_positive >= self.n_negative:
            return list(range(self.s, self.n_positive))
        return list(range(self.n - self.n_negative, self.n - self.s))

    def reconstruct(self):
        """Returns S diag(lambdas) S^T."""
        return (self.S * self.lambdas) @ self.S.T

    def positive_part(self):
        """Returns B+ = S diag(max(lambda, 0)) S^T."""
        return (self.S * np.maximum(self.lambdas, 0.0)) @ self.S.T

    def negative_part(self):
        """Returns B- = S diag(min(lambda, 0)) S^T."""
        return (self.S * np.minimum(self.lambdas, 0.0)) @ self.S.T

    def absolute(self):
        """Returns |B| = S diag(|lambda|) S^T."""
        return (self.S * np.abs(self.lambdas)) @ self.S.T

    def spectral_radius(self):
        """Returns max |lambda|."""
        return float(np.max(np.abs(self.lambdas))) if self.n else 0.0

    def __str__(self):
        return f"{{EigenPairing n={self.n} r={self.r} s={self.s} zeros={self.zero_count}}}"


def _jacobi(a: np.ndarray):
    """Cyclic Jacobi eigenvalue iteration. Returns (eigenvalues, eigenvectors, sweeps)."""
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v, 0
    for sweep in range(MAX_SWEEPS + 1):
        off = np.sqrt(np.sum(a ** 2) - np.sum(np.diag(a) ** 2))
        if off < JACOBI_TOL * scale:
            return np.diag(a).copy(), v, sweep
        if sweep == MAX_SWEEPS:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    raise NumericalError(f"Jacobi iteration did not converge after {MAX_SWEEPS} sweeps")


def _orient_cluster(vectors: np.ndarray) -> np.ndarray:
    """Rebuilds a degenerate eigenspace basis by Gram-Schmidt of ascending canonical axes."""
    n, count = vectors.shape
    projector = vectors @ vectors.T
    chosen = []
    for axis in range(n):
        w = projector[:, axis].copy()
        for u in chosen:
            w -= (u @ w) * u
        norm = np.linalg.norm(w)
        if norm > 1e-6:
            chosen.append(w / norm)
        if len(chosen) == count:
            break
    return np.column_stack(chosen)


def _fix_sign(vector: np.ndarray) -> np.ndarray:
    mags = np.abs(vector)
    lead = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    return -vector if vector[lead] < 0 else vector


def eig_decompose(m, zero_tol: float = 1e-12) -> EigenPairing:
    """
    Orthogonal eigendecomposition of a symmetric matrix.

    Eigenvalues are sorted descending. Within a cluster of equal eigenvalues the
    eigenvectors are rebuilt from the canonical axes, every eigenvector has its
    largest-magnitude entry positive (ties: lowest index), and the last column is
    negated when needed so that det(S) = +1.
    """
    sym = as_sym(m)
    values, vectors, sweeps = _jacobi(sym.entries)
    logging.debug("Jacobi converged in %d sweeps for n=%d", sweeps, sym.n)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    scale = max(1.0, float(np.max(np.abs(values)))) if len(values) else 1.0
    start = 0
    while start < len(values):
        stop = start + 1
        while stop < len(values) and abs(values[start] - values[stop]) <= CLUSTER_TOL * scale:
            stop += 1
        if stop - start > 1:
            vectors[:, start:stop] = _orient_cluster(vectors[:, start:stop])
        start = stop
    for j in range(vectors.shape[1]):
        vectors[:, j] = _fix_sign(vectors[:, j])
    if vectors.size and np.linalg.det(vectors) < 0:
        vectors[:, -1] = -vectors[:, -1]
    return EigenPairing(values, vectors, zero_tol)


class AntisymmetryCheck(NamedTuple):
    """Result of an anti-symmetry test."""
    is_antisymmetric: bool
    violation: float


def materialize(apply: Callable[[np.ndarray], np.ndarray], size: int) -> np.ndarray:
    """Builds the dense matrix of a linear map by probing it with unit vectors."""
    columns = []
    for j in range(size):
        unit = np.zeros(size)
        unit[j] = 1.0
        columns.append(np.ravel(apply(unit)))
    return np.column_stack(columns) if columns else np.zeros((0, 0))


def is_antisymmetric(a, tol: float = 1e-12, size: Optional[int] = None) -> AntisymmetryCheck:
    """
    Tests max |a_ij + a_ji| <= tol * max |a_ij|.

    {a} is a square matrix, or a callable linear map applied to {size} basis vectors.
    """
    if callable(a):
        if size is None:
            raise ValidationError("A matrix-free operator needs an explicit size")
        a = materialize(a, size)
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"Expected a square matrix, got shape {a.shape}")
    if a.size == 0:
        return AntisymmetryCheck(True, 0.0)
    violation = float(np.max(np.abs(a + a.T)))
    return AntisymmetryCheck(violation <= tol * float(np.max(np.abs(a))), violation)


def pairing_coupler(p: EigenPairing) -> np.ndarray:
    """
    Anti-symmetric coupling matrix C = 1/2 sum_mu sqrt(|l+ l-|) (e+ e-^T - e- e+^T).

    Raises ValidationError when the spectrum has unpaired eigenvalues.
    """
    if p.r > 0:
        raise ValidationError("unpaired eigenvalues; augment first")
    coupler = np.zeros((p.n, p.n))
    for i, j in p.pairs():
        weight = 0.5 * np.sqrt(abs(p.lambdas[i] * p.lambdas[j]))
        e_plus, e_minus = p.S[:, i], p.S[:, j]
        coupler += weight * (np.outer(e_plus, e_minus) - np.outer(e_minus, e_plus))
    return coupler
