"""Structured quadrilateral meshes of the unit square."""

from dataclasses import dataclass, field

import numpy as np

_BOUNDARY_EPS = 1e-14


@dataclass(frozen=True)
class StructuredQuadMesh:
    """Uniform ``n x n`` subdivision of ``(0, 1)^2`` into square cells.

    Vertices are numbered lexicographically with x running fastest, so
    vertex ``(i, j)`` (column ``i``, row ``j``) has index ``j * (n + 1) + i``.
    Cells list their vertices counterclockwise starting at the lower-left
    corner.
    """

    n_cells_per_side: int
    vertices: np.ndarray = field(repr=False)
    cells: np.ndarray = field(repr=False)
    boundary_vertex_flags: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.n_cells_per_side

    @property
    def h(self) -> float:
        """Cell diameter (diagonal of a square cell)."""
        return np.sqrt(2.0) / self.n

    @property
    def cell_width(self) -> float:
        return 1.0 / self.n

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    def cell_origins(self) -> np.ndarray:
        """Lower-left corner of every cell, shape ``(n_cells, 2)``."""
        return self.vertices[self.cells[:, 0]]

    def cell_areas(self) -> np.ndarray:
        """Mapped cell areas computed from the vertex coordinates (shoelace)."""
        x = self.vertices[self.cells, 0]
        y = self.vertices[self.cells, 1]
        return 0.5 * np.abs(
            np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)
        )

    def locate(self, point) -> tuple[int, np.ndarray]:
        """Return the cell index containing ``point`` and its reference coordinates.

        Points on a shared edge are assigned to the cell with the larger index,
        except on the right and top boundary where the last cell is used.
        """
        x, y = float(point[0]), float(point[1])
        if not (-_BOUNDARY_EPS <= x <= 1 + _BOUNDARY_EPS and -_BOUNDARY_EPS <= y <= 1 + _BOUNDARY_EPS):
            raise ValueError(f"point {point!r} lies outside the unit square")
        n = self.n
        i = min(max(int(np.floor(x * n)), 0), n - 1)
        j = min(max(int(np.floor(y * n)), 0), n - 1)
        ref = np.array([x * n - i, y * n - j])
        return j * n + i, np.clip(ref, 0.0, 1.0)


def build_unit_square(n: int) -> StructuredQuadMesh:
    """Build the uniform ``n x n`` quadrilateral mesh of the unit square."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    jj, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ll = (jj * (n + 1) + ii).ravel()
    cells = np.column_stack([ll, ll + 1, ll + n + 2, ll + n + 1])

    on_edge = (np.abs(vertices) <= _BOUNDARY_EPS) | (np.abs(vertices - 1.0) <= _BOUNDARY_EPS)
    flags = on_edge.any(axis=1)
    for arr in (vertices, cells, flags):
        arr.setflags(write=False)
    return StructuredQuadMesh(n, vertices, cells, flags)


def refine(mesh: StructuredQuadMesh) -> StructuredQuadMesh:
    """Uniform refinement: every cell is split into four, so ``h`` halves."""
    return build_unit_square(2 * mesh.n)
