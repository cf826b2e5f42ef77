"""1D interval meshes, 2D Cartesian meshes and 2D conforming triangular meshes.

Every mesh exposes the same affine cell maps x = origin + J xi and a FaceTable.
Interior faces are oriented so that the normal n- (outward from the K- cell)
satisfies v_ref . n- >= 0 with v_ref = (1, 1), ties broken by n-_x > 0.
Boundary faces carry the interior cell as K- and the outward normal.
The jump across a face is (value from K+) - (value from K-).
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .basis import ElementKind
from .errors import (DegenerateCellError, MeshError, MeshFileError,
                     NonConformingMeshError, ValidationError)

V_REF = np.array([1.0, 1.0])
TIE_TOL = 1e-13
MATCH_TOL = 1e-10
# cells x points entries tested at once by locate
LOCATE_BLOCK = 1 << 20


@dataclass(frozen=True, eq=False)
class FaceTable:
    """
    Oriented faces of a mesh.

    minus/plus: cell indices (plus = -1 on boundary faces); normal: unit n-;
    endpoints: face end points in the K- frame, shape (F, 2, dim) (1D: both
    entries equal the node); shift: translation from the K- frame to the K+
    frame (nonzero only for periodic faces); tags: boundary tag or None.
    """
    minus: np.ndarray
    plus: np.ndarray
    normal: np.ndarray
    measure: np.ndarray
    endpoints: np.ndarray
    shift: np.ndarray
    tags: tuple

    def __len__(self):
        return len(self.minus)

    @property
    def interior(self):
        """Indices of faces shared by two cells (periodic faces included)."""
        return np.flatnonzero(self.plus >= 0)

    @property
    def boundary(self):
        """Indices of boundary faces."""
        return np.flatnonzero(self.plus < 0)

    def points(self, s):
        """Physical points at face parameters {s} in the K- frame, shape (F, len(s), dim)."""
        s = np.asarray(s, dtype=float)
        start, stop = self.endpoints[:, 0, :], self.endpoints[:, 1, :]
        return start[:, None, :] + s[None, :, None] * (stop - start)[:, None, :]


class Mesh:
    """Common interface for all meshes: affine cell maps, regions and oriented faces."""

    kind: ElementKind
    periodic: bool

    def __init__(self, origins, jacobians, faces: FaceTable, regions=None):
        self.origins = np.asarray(origins, dtype=float)
        self.jacobians = np.asarray(jacobians, dtype=float)
        self.dets = np.abs(np.linalg.det(self.jacobians))
        if np.any(self.dets <= 0.0):
            raise DegenerateCellError(f"Cell {int(np.argmin(self.dets))} has zero measure")
        self.inverse_jacobians = np.linalg.inv(self.jacobians)
        self.faces = faces
        n = len(self.origins)
        self.regions = np.zeros(n, dtype=int) if regions is None else np.asarray(regions, dtype=int)
        if self.regions.shape != (n,):
            raise ValidationError(f"Expected {n} region ids, got {self.regions.shape}")

    @property
    def dim(self):
        """Spatial dimension."""
        return self.kind.dim

    @property
    def n_cells(self):
        """Number of cells."""
        return len(self.origins)

    @property
    def n_regions(self):
        """Number of coefficient regions."""
        return int(self.regions.max()) + 1

    def map_to_physical(self, cells, ref_points):
        """Physical coordinates of reference points in the given cells, shape (len(cells), P, dim)."""
        cells = np.asarray(cells)
        return self.origins[cells][:, None, :] + np.einsum("kde,pe->kpd", self.jacobians[cells], ref_points)

    def map_to_reference(self, cells, points):
        """Reference coordinates of physical {points} (shape (len(cells), P, dim)) in the given cells."""
        cells = np.asarray(cells)
        return np.einsum("kde,kpe->kpd", self.inverse_jacobians[cells], points - self.origins[cells][:, None, :])

    def boundary_cells(self) -> np.ndarray:
        """Cells owning at least one boundary face."""
        return np.unique(self.faces.minus[self.faces.boundary])

    def cell_normal_sums(self) -> np.ndarray:
        """Per-cell sum of measure * outward normal over its faces (zero for closed cells)."""
        sums = np.zeros((self.n_cells, self.dim))
        weighted = self.faces.measure[:, None] * self.faces.normal
        np.add.at(sums, self.faces.minus, weighted)
        interior = self.faces.interior
        np.add.at(sums, self.faces.plus[interior], -weighted[interior])
        return sums

    def locate(self, points, tol=1e-12):
        """Returns (cells, reference points) containing each physical point."""
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        block = max(1, LOCATE_BLOCK // max(self.n_cells, 1))
        blocks = [self._locate_block(points[i:i + block], tol) for i in range(0, len(points), block)]
        if not blocks:
            return np.zeros(0, dtype=int), np.zeros((0, self.dim))
        return np.concatenate([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])

    def _locate_block(self, points, tol):
        all_cells = np.arange(self.n_cells)
        ref = self.map_to_reference(all_cells, np.broadcast_to(points, (self.n_cells,) + points.shape))
        if self.kind is ElementKind.TRIANGLE:
            inside = (ref[..., 0] >= -tol) & (ref[..., 1] >= -tol) & (ref.sum(axis=-1) <= 1 + tol)
        else:
            inside = np.all((ref >= -tol) & (ref <= 1 + tol), axis=-1)
        found = inside.any(axis=0)
        if not found.all():
            raise ValidationError(f"Point {points[np.argmin(found)]} lies outside the mesh")
        cells = np.argmax(inside, axis=0)
        return cells, ref[cells, np.arange(len(points))]


class Mesh1D(Mesh):
    """Interval mesh given by ascending nodes on [a, b]."""

    kind = ElementKind.INTERVAL

    def __init__(self, nodes, periodic=False, regions=None):
        self.nodes = np.asarray(nodes, dtype=float)
        if self.nodes.ndim != 1 or len(self.nodes) < 2:
            raise ValidationError("A 1D mesh needs at least two nodes")
        lengths = np.diff(self.nodes)
        if np.any(lengths <= 0.0):
            raise DegenerateCellError("Mesh nodes must be strictly ascending")
        self.periodic = bool(periodic)
        self.lengths = lengths
        self.h = float(lengths.max())
        self.rho = float(lengths.min())
        self.gamma = self.rho / self.h
        super().__init__(self.nodes[:-1, None], lengths[:, None, None], self._build_faces(), regions)

    @property
    def a(self):
        """Left end of the domain."""
        return float(self.nodes[0])

    @property
    def b(self):
        """Right end of the domain."""
        return float(self.nodes[-1])

    @property
    def n(self):
        """Number of cells."""
        return len(self.lengths)

    def _build_faces(self):
        n = len(self.lengths)
        minus, plus, normal, node, shift, tags = [], [], [], [], [], []
        if self.periodic:
            for j in range(n):
                minus.append((j - 1) % n)
                plus.append(j)
                normal.append(1.0)
                node.append(self.nodes[j] if j else self.nodes[-1])
                shift.append(0.0 if j else self.nodes[0] - self.nodes[-1])
                tags.append(None)
        else:
            minus.append(0)
            plus.append(-1)
            normal.append(-1.0)
            node.append(self.nodes[0])
            shift.append(0.0)
            tags.append("left")
            for j in range(1, n):
                minus.append(j - 1)
                plus.append(j)
                normal.append(1.0)
                node.append(self.nodes[j])
                shift.append(0.0)
                tags.append(None)
            minus.append(n - 1)
            plus.append(-1)
            normal.append(1.0)
            node.append(self.nodes[-1])
            shift.append(0.0)
            tags.append("right")
        node = np.asarray(node)
        return FaceTable(np.asarray(minus), np.asarray(plus), np.asarray(normal)[:, None],
                         np.ones(len(minus)), np.repeat(node[:, None, None], 2, axis=1),
                         np.asarray(shift)[:, None], tuple(tags))

    def locate(self, points, tol=1e-12):
        x = np.asarray(points, dtype=float).ravel()
        if np.any(x < self.a - tol) or np.any(x > self.b + tol):
            raise ValidationError("Point lies outside the mesh")
        cells = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.n - 1)
        return cells, ((x - self.nodes[cells]) / self.lengths[cells])[:, None]

    def __str__(self):
        return f"{{Mesh1D N={self.n} [{self.a}, {self.b}] periodic={self.periodic}}}"


def make_uniform_1d(a: float, b: float, n: int, periodic: bool = False) -> Mesh1D:
    """Uniform mesh of {n} cells on [a, b]."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"Number of cells must be >= 1, got {n}")
    if not a < b:
        raise ValidationError(f"Expected a < b, got a={a}, b={b}")
    return Mesh1D(np.linspace(a, b, n + 1), periodic=periodic)


def perturb_1d(mesh: Mesh1D, fraction: float, seed: int = 0) -> Mesh1D:
    """Shifts each interior node by an independent uniform sample in [-fraction*h, fraction*h]."""
    if not 0.0 <= fraction < 0.5:
        raise ValidationError(f"Perturbation fraction must be in [0, 0.5), got {fraction}")
    nodes = mesh.nodes.copy()
    if fraction > 0.0:
        h = (mesh.b - mesh.a) / mesh.n
        rng = np.random.default_rng(seed)
        nodes[1:-1] += rng.uniform(-fraction * h, fraction * h, mesh.n - 1)
    return Mesh1D(nodes, periodic=mesh.periodic, regions=mesh.regions)


class Mesh2D(Mesh):
    """
    Conforming 2D mesh of counterclockwise quads (axis-aligned rectangles) or triangles.

    {periodic} identifies opposite sides of the bounding box by matching the
    coordinates of boundary faces.
    """

    def __init__(self, vertices, cells, kind, periodic=False, regions=None):
        self.kind = ElementKind(kind) if not isinstance(kind, ElementKind) else kind
        if self.kind is ElementKind.INTERVAL:
            raise ValidationError("Mesh2D holds quads or triangles")
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        self.cells = np.array(cells, dtype=int).reshape(-1, self.kind.n_faces)
        self.periodic = bool(periodic)
        if self.cells.size == 0:
            raise MeshError("A mesh needs at least one cell")
        if self.cells.min() < 0 or self.cells.max() >= len(self.vertices):
            raise MeshError("Cell refers to a vertex index out of range")
        self.bounds = (*self.vertices.min(axis=0), *self.vertices.max(axis=0))
        origins, jacobians = self._cell_maps()
        super().__init__(origins, jacobians, self._build_faces(), regions)
        edges = self.vertices[np.roll(self.cells, -1, axis=1)] - self.vertices[self.cells]
        edge_lengths = np.linalg.norm(edges, axis=-1)
        if self.kind is ElementKind.TRIANGLE:
            self.inradii = self.dets / edge_lengths.sum(axis=1)
            self.diameters = edge_lengths.max(axis=1)
        else:
            widths, heights = self.jacobians[:, 0, 0], self.jacobians[:, 1, 1]
            self.inradii = 0.5 * np.minimum(widths, heights)
            self.diameters = np.hypot(widths, heights)
        self.h = float(self.diameters.max())
        self.rho = float(self.inradii.min())

    def _cell_maps(self):
        corners = self.vertices[self.cells]
        if self.kind is ElementKind.TRIANGLE:
            jacobians = np.stack([corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]], axis=-1)
            if np.any(np.linalg.det(jacobians) < 0.0):
                raise ValidationError("Triangles must be counterclockwise")
            return corners[:, 0], jacobians
        span = corners - corners[:, :1]
        width, height = span[:, 1, 0], span[:, 3, 1]
        rect = (np.abs(span[:, 1, 1]) + np.abs(span[:, 3, 0])
                + np.abs(span[:, 2, 0] - width) + np.abs(span[:, 2, 1] - height))
        if np.any(rect > MATCH_TOL):
            raise ValidationError("Quad cells must be counterclockwise axis-aligned rectangles")
        jacobians = np.zeros((len(corners), 2, 2))
        jacobians[:, 0, 0], jacobians[:, 1, 1] = width, height
        return corners[:, 0], jacobians

    def _side_tag(self, midpoint):
        x_min, y_min, x_max, y_max = self.bounds
        for tag, value, axis in (("left", x_min, 0), ("right", x_max, 0),
                                 ("bottom", y_min, 1), ("top", y_max, 1)):
            if abs(midpoint[axis] - value) <= MATCH_TOL:
                return tag
        return "boundary"

    def _build_faces(self):
        owners = {}
        order = []
        n_local = self.kind.n_faces
        for c, cell in enumerate(self.cells):
            for e in range(n_local):
                a, b = int(cell[e]), int(cell[(e + 1) % n_local])
                key = (min(a, b), max(a, b))
                if key not in owners:
                    owners[key] = []
                    order.append(key)
                owners[key].append((c, a, b))

        pairs, boundary = [], []
        for key in order:
            sides = owners[key]
            if len(sides) > 2:
                raise NonConformingMeshError(f"Edge {key} is shared by {len(sides)} cells")
            if len(sides) == 2:
                if sides[0][1] == sides[1][1]:
                    raise NonConformingMeshError(f"Cells sharing edge {key} have inconsistent orientation")
                pairs.append((sides[0], sides[1], np.zeros(2)))
            else:
                boundary.append(sides[0])

        degree = np.zeros(len(self.vertices), dtype=int)
        for _, a, b in boundary:
            degree[a] += 1
            degree[b] += 1
        dangling = np.flatnonzero((degree != 0) & (degree != 2))
        if len(dangling):
            raise NonConformingMeshError(f"Dangling edge or hanging node at vertex {int(dangling[0])}")

        if self.periodic:
            pairs.extend(self._match_periodic(boundary))
            boundary = []

        minus, plus, normal, measure, endpoints, shift, tags = [], [], [], [], [], [], []
        for side_a, side_b, offset in pairs:
            n_a = self._outward(side_a)
            dot = n_a @ V_REF
            a_is_minus = dot > TIE_TOL or (abs(dot) <= TIE_TOL and n_a[0] > 0)
            first, second = (side_a, side_b) if a_is_minus else (side_b, side_a)
            minus.append(first[0])
            plus.append(second[0])
            normal.append(self._outward(first))
            ends = self.vertices[[first[1], first[2]]]
            endpoints.append(ends)
            measure.append(np.linalg.norm(ends[1] - ends[0]))
            shift.append(offset if a_is_minus else -offset)
            tags.append(None)
        for side in boundary:
            ends = self.vertices[[side[1], side[2]]]
            minus.append(side[0])
            plus.append(-1)
            normal.append(self._outward(side))
            endpoints.append(ends)
            measure.append(np.linalg.norm(ends[1] - ends[0]))
            shift.append(np.zeros(2))
            tags.append(self._side_tag(ends.mean(axis=0)))
        return FaceTable(np.asarray(minus), np.asarray(plus), np.asarray(normal), np.asarray(measure),
                         np.asarray(endpoints), np.asarray(shift), tuple(tags))

    def _outward(self, side):
        _, a, b = side
        d = self.vertices[b] - self.vertices[a]
        return np.array([d[1], -d[0]]) / np.linalg.norm(d)

    def _match_periodic(self, boundary):
        """Pairs boundary faces on opposite sides of the bounding box; offset maps the first into the second."""
        x_min, y_min, x_max, y_max = self.bounds
        sides = {"left": [], "right": [], "bottom": [], "top": []}
        for side in boundary:
            tag = self._side_tag(self.vertices[[side[1], side[2]]].mean(axis=0))
            if tag not in sides:
                raise MeshError(f"Boundary face {side[1:]} is not on the bounding box of a periodic mesh")
            sides[tag].append(side)
        matched = []
        for low, high, axis, offset in (("left", "right", 1, np.array([x_max - x_min, 0.0])),
                                        ("bottom", "top", 0, np.array([0.0, y_max - y_min]))):
            candidates = list(sides[high])
            for side in sides[low]:
                span = np.sort(self.vertices[[side[1], side[2]], axis])
                for i, other in enumerate(candidates):
                    if np.allclose(np.sort(self.vertices[[other[1], other[2]], axis]), span, atol=MATCH_TOL):
                        matched.append((side, other, offset))
                        del candidates[i]
                        break
                else:
                    raise MeshError(f"No periodic partner for the {low} face {side[1:]}")
            if candidates:
                raise MeshError(f"Unmatched {high} faces on a periodic mesh")
        return matched

    def __str__(self):
        return (f"{{Mesh2D {self.kind.value} cells={self.n_cells} faces={len(self.faces)} "
                f"periodic={self.periodic}}}")


def _perturbed_lines(n, low, high, fraction, rng):
    lines = np.linspace(low, high, n + 1)
    if fraction > 0.0:
        lines[1:-1] += rng.uniform(-fraction, fraction, n - 1) * (high - low) / n
    return lines


def make_cartesian_2d(nx: int, ny: int, perturb_fraction: float = 0.0, seed: int = 0,
                      periodic: bool = False, bounds=(0.0, 1.0, 0.0, 1.0)) -> Mesh2D:
    """Rectangular nx-by-ny mesh; interior grid lines are perturbed independently per axis."""
    if min(nx, ny) < 1:
        raise ValidationError(f"Cartesian mesh needs nx, ny >= 1, got {nx}x{ny}")
    if not 0.0 <= perturb_fraction < 0.5:
        raise ValidationError(f"Perturbation fraction must be in [0, 0.5), got {perturb_fraction}")
    rng = np.random.default_rng(seed)
    xs = _perturbed_lines(nx, bounds[0], bounds[1], perturb_fraction, rng)
    ys = _perturbed_lines(ny, bounds[2], bounds[3], perturb_fraction, rng)
    xx, yy = np.meshgrid(xs, ys)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    cells = [(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
             for j in range(ny) for i in range(nx)]
    return Mesh2D(vertices, cells, ElementKind.QUAD, periodic=periodic)


def make_triangular_2d(n: int, perturb_fraction: float = 0.0, seed: int = 0,
                       periodic: bool = False) -> Mesh2D:
    """
    Unstructured-style triangulation of the unit square.

    An n-by-n grid whose interior vertices are randomly moved, with each square
    split along alternating diagonals.
    """
    if n < 1:
        raise ValidationError(f"Triangular mesh needs n >= 1, got {n}")
    if not 0.0 <= perturb_fraction < 0.25:
        raise ValidationError(f"Triangle perturbation fraction must be in [0, 0.25), got {perturb_fraction}")
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(grid, grid)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])
    if perturb_fraction > 0.0 and n > 1:
        interior = np.flatnonzero((vertices > 0.0).all(axis=1) & (vertices < 1.0).all(axis=1))
        vertices[interior] += rng.uniform(-perturb_fraction, perturb_fraction, (len(interior), 2)) / n

    def vid(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            ll, lr, ur, ul = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                cells.extend([(ll, lr, ur), (ll, ur, ul)])
            else:
                cells.extend([(ll, lr, ul), (lr, ur, ul)])
    return Mesh2D(vertices, cells, ElementKind.TRIANGLE, periodic=periodic)


class TriMeshHandler:
    """
    Reads and writes triangle meshes in the plain node/element format:

        V nv
        x y          (nv lines)
        T nt
        i j k        (nt lines, 0-based vertex indices, counterclockwise)

    Blank lines and lines starting with '#' are ignored.
    """

    @staticmethod
    def read(filename, periodic=False) -> Mesh2D:
        """Reads a triangle mesh from {filename}."""
        try:
            with open(filename, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise MeshFileError(f"Cannot read mesh file {filename}: {e}") from e
        return TriMeshHandler.parse(text, periodic=periodic)

    @staticmethod
    def parse(text: str, periodic=False) -> Mesh2D:
        """Parses mesh {text}; clockwise triangles are reoriented, zero-area ones rejected."""
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            vertices, pos = TriMeshHandler._section(lines, 0, "V", 2, float)
            triangles, pos = TriMeshHandler._section(lines, pos, "T", 3, int)
        except (ValueError, IndexError) as e:
            raise MeshFileError(f"Malformed mesh file: {e}") from e
        if pos != len(lines):
            raise MeshFileError(f"Unexpected content after the triangle section: {' '.join(lines[pos])}")
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        triangles = np.asarray(triangles, dtype=int).reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise MeshFileError("Triangle refers to a vertex index out of range")
        corners = vertices[triangles]
        d1, d2 = corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]
        areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        scale = max(1.0, float(np.abs(vertices).max())) if len(vertices) else 1.0
        degenerate = np.flatnonzero(np.abs(areas) <= 1e-14 * scale ** 2)
        if len(degenerate):
            raise DegenerateCellError(f"Triangle {int(degenerate[0])} has zero area")
        clockwise = np.flatnonzero(areas < 0)
        if len(clockwise):
            logging.warning("Reoriented %d clockwise triangles", len(clockwise))
            triangles[clockwise] = triangles[clockwise][:, [0, 2, 1]]
        return Mesh2D(vertices, triangles, ElementKind.TRIANGLE, periodic=periodic)

    @staticmethod
    def _section(lines, pos, marker, width, cast):
        header = lines[pos]
        if len(header) != 2 or header[0] != marker:
            raise ValueError(f"expected '{marker} <count>', got '{' '.join(header)}'")
        count = int(header[1])
        rows = []
        for row in lines[pos + 1: pos + 1 + count]:
            if len(row) != width:
                raise ValueError(f"expected {width} values per {marker} row, got '{' '.join(row)}'")
            rows.append([cast(v) for v in row])
        if len(rows) != count:
            raise ValueError(f"section {marker} declares {count} rows, found {len(rows)}")
        return rows, pos + 1 + count

    @staticmethod
    def write(mesh: Mesh2D, filename: Optional[str] = None) -> str:
        """Serializes a triangle mesh, writing it to {filename} if given."""
        if mesh.kind is not ElementKind.TRIANGLE:
            raise ValidationError("Only triangle meshes can be written in this format")
        out: List[str] = [f"V {len(mesh.vertices)}"]
        out.extend(f"{x!r} {y!r}" for x, y in mesh.vertices.tolist())
        out.append(f"T {len(mesh.cells)}")
        out.extend(" ".join(str(i) for i in tri) for tri in mesh.cells.tolist())
        text = "\n".join(out) + "\n"
        if filename:
            with open(filename, "w", encoding="utf-8") as f:
                f.write(text)
            logging.info("Wrote mesh to file %s", filename)
        return text


def load_triangular_2d(filename, periodic=False) -> Mesh2D:
    """Loads a conforming triangle mesh from a node/element file."""
    return TriMeshHandler.read(filename, periodic=periodic)
