"""Uniform triangular, square, and rectangular partitions of the unit square
and of the L-shaped domain, with per-element and per-edge geometry.

Elements are stored as generic counter-clockwise polygon loops so that all
downstream quadrature and assembly code is independent of the cell shape.
Every edge carries a canonical direction (lexicographically smaller endpoint
first) shared by both incident elements; element loops record the edge index
and whether their traversal agrees with that direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MeshError

UNIT_SQUARE = "unit_square"
L_SHAPED = "l_shaped"

#: Exact areas of the supported domains, used as a construction check.
DOMAIN_AREAS = {UNIT_SQUARE: 1.0, L_SHAPED: 3.0}


@dataclass(frozen=True)
class Mesh:
    """Immutable polygonal mesh.

    Attributes:
        vertices: (nv, 2) float array of vertex coordinates.
        elements: tuple of integer index arrays, one CCW loop per element.
        edges: (ne, 2) integer array; each row is the canonical (lex-ordered)
            vertex pair of an edge.
        edge_elements: (ne, 2) integer array; first incident element, then the
            second one or -1 for boundary edges.
        element_edges: per element, edge indices in traversal order.
        element_edge_signs: per element, +1 where the CCW traversal follows
            the canonical edge direction, -1 otherwise.
        domain_tag: one of ``unit_square`` or ``l_shaped``.
    """

    vertices: np.ndarray
    elements: tuple
    edges: np.ndarray
    edge_elements: np.ndarray
    element_edges: tuple
    element_edge_signs: tuple
    domain_tag: str

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_edges(self):
        return self.edges.shape[0]

    def boundary_edge_mask(self):
        return self.edge_elements[:, 1] < 0

    def boundary_edges(self):
        return np.flatnonzero(self.boundary_edge_mask())

    def interior_edges(self):
        return np.flatnonzero(~self.boundary_edge_mask())

    def to_json_dict(self):
        return {
            "vertices": self.vertices.tolist(),
            "elements": [el.tolist() for el in self.elements],
            "edges": self.edges.tolist(),
        }

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)


@dataclass(frozen=True)
class ElementGeometry:
    """Per-element geometry: diameter, area, centroid, and per-edge frames.

    ``edge_normals`` are unit outward normals (one per edge, traversal
    order); ``edge_tangents`` follow each edge's canonical direction, so the
    pair (n, tau) is orthonormal but not necessarily right-handed.
    """

    diameter: float
    area: float
    centroid: np.ndarray
    edge_lengths: np.ndarray
    edge_midpoints: np.ndarray
    edge_normals: np.ndarray
    edge_tangents: np.ndarray


def _polygon_area_centroid(pts):
    x = pts[:, 0]
    y = pts[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


def element_geometry(mesh: Mesh, t: int) -> ElementGeometry:
    """Compute the geometry record for element ``t``."""
    loop = mesh.elements[t]
    pts = mesh.vertices[loop]
    area, centroid = _polygon_area_centroid(pts)
    if area <= 0.0:
        raise MeshError(f"element {t} is not counter-clockwise (area {area})")
    diff = pts[:, None, :] - pts[None, :, :]
    diameter = float(np.sqrt((diff**2).sum(-1)).max())

    nxt = np.roll(pts, -1, axis=0)
    d = nxt - pts
    lengths = np.sqrt((d**2).sum(-1))
    midpoints = 0.5 * (pts + nxt)
    # Outward normal of a CCW loop: rotate the traversal direction by -90 deg.
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    signs = mesh.element_edge_signs[t]
    tangents = (d / lengths[:, None]) * signs[:, None]
    return ElementGeometry(diameter, float(area), centroid, lengths,
                           midpoints, normals, tangents)


def _lex_le(p, q):
    return (p[0], p[1]) <= (q[0], q[1])


def _build(vertices, loops, domain_tag):
    vertices = np.asarray(vertices, dtype=float)
    edge_index = {}
    edges = []
    edge_elements = []
    element_edges = []
    element_edge_signs = []
    elements = []

    for t, loop in enumerate(loops):
        loop = np.asarray(loop, dtype=np.int64)
        elements.append(loop)
        eids = np.empty(len(loop), dtype=np.int64)
        esigns = np.empty(len(loop), dtype=np.int64)
        for i in range(len(loop)):
            a = int(loop[i])
            b = int(loop[(i + 1) % len(loop)])
            key = (min(a, b), max(a, b))
            if key not in edge_index:
                if _lex_le(vertices[a], vertices[b]):
                    canon = (a, b)
                else:
                    canon = (b, a)
                edge_index[key] = len(edges)
                edges.append(canon)
                edge_elements.append([t, -1])
            else:
                eid = edge_index[key]
                if edge_elements[eid][1] != -1:
                    raise MeshError(f"edge {key} has more than two elements")
                edge_elements[eid][1] = t
                canon = edges[edge_index[key]]
            eid = edge_index[key]
            eids[i] = eid
            esigns[i] = 1 if canon == (a, b) else -1
        element_edges.append(eids)
        element_edge_signs.append(esigns)

    mesh = Mesh(
        vertices=vertices,
        elements=tuple(elements),
        edges=np.asarray(edges, dtype=np.int64),
        edge_elements=np.asarray(edge_elements, dtype=np.int64),
        element_edges=tuple(element_edges),
        element_edge_signs=tuple(element_edge_signs),
        domain_tag=domain_tag,
    )
    for arr in (mesh.vertices, mesh.edges, mesh.edge_elements):
        arr.flags.writeable = False

    total = sum(element_geometry(mesh, t).area for t in range(mesh.n_elements))
    expected = DOMAIN_AREAS[domain_tag]
    if abs(total - expected) > 1e-12 * expected:
        raise MeshError(f"mesh area {total} != domain area {expected}")
    return mesh


def _check_domain(domain):
    if domain not in DOMAIN_AREAS:
        raise ConfigError(f"unknown domain {domain!r}")


def _grid_cells(domain, n):
    """Cell index ranges and vertex grid for a uniform n-per-unit grid."""
    if domain == UNIT_SQUARE:
        xs = np.arange(n + 1) / n
        ys = xs
        keep = np.ones((n, n), dtype=bool)
    else:
        xs = np.arange(-n, n + 1) / n
        ys = xs
        keep = np.ones((2 * n, 2 * n), dtype=bool)
        # Remove the quadrant x > 0, y < 0 to leave the L-shape.
        for j in range(2 * n):
            for i in range(2 * n):
                cx = 0.5 * (xs[i] + xs[i + 1])
                cy = 0.5 * (ys[j] + ys[j + 1])
                if cx > 0.0 and cy < 0.0:
                    keep[j, i] = False
    return xs, ys, keep


def _compact(vertices, loops):
    used = np.unique(np.concatenate([np.asarray(l) for l in loops]))
    remap = -np.ones(len(vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return vertices[used], [remap[np.asarray(l)] for l in loops]


def _validate_n(domain, n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigError(f"n_per_side must be a positive integer, got {n!r}")
    if domain == L_SHAPED and n % 2 != 0:
        raise ConfigError("l_shaped meshes require an even n_per_side")


def generate_uniform_triangular(domain: str, n_per_side: int) -> Mesh:
    """Uniform triangulation with 1/h = n_per_side cells per unit length.

    Each grid square is split along its lower-left to upper-right diagonal,
    giving the uniform family produced by repeated midpoint refinement.
    """
    _check_domain(domain)
    _validate_n(domain, n_per_side)
    xs, ys, keep = _grid_cells(domain, n_per_side)
    nx = len(xs) - 1
    stride = nx + 1
    verts = np.array([[x, y] for y in ys for x in xs])
    loops = []
    for j in range(keep.shape[0]):
        for i in range(keep.shape[1]):
            if not keep[j, i]:
                continue
            a = j * stride + i
            b = a + 1
            c = a + 1 + stride
            d = a + stride
            loops.append([a, b, c])
            loops.append([a, c, d])
    verts, loops = _compact(verts, loops)
    return _build(verts, loops, domain)


def generate_uniform_square(domain: str, n_per_side: int) -> Mesh:
    """Uniform square partition with 1/h = n_per_side cells per unit length."""
    _check_domain(domain)
    _validate_n(domain, n_per_side)
    xs, ys, keep = _grid_cells(domain, n_per_side)
    nx = len(xs) - 1
    stride = nx + 1
    verts = np.array([[x, y] for y in ys for x in xs])
    loops = []
    for j in range(keep.shape[0]):
        for i in range(keep.shape[1]):
            if not keep[j, i]:
                continue
            a = j * stride + i
            loops.append([a, a + 1, a + 1 + stride, a + stride])
    verts, loops = _compact(verts, loops)
    return _build(verts, loops, domain)


def generate_uniform_rectangular(level: int) -> Mesh:
    """Rectangular partition of the unit square from a 3x2 coarse grid.

    Level ``L`` has 3*2^L x 2*2^L cells, obtained by quartering every cell of
    the previous level.
    """
    if not isinstance(level, (int, np.integer)) or level < 0:
        raise ConfigError(f"level must be a nonnegative integer, got {level!r}")
    nx = 3 * 2**level
    ny = 2 * 2**level
    xs = np.arange(nx + 1) / nx
    ys = np.arange(ny + 1) / ny
    stride = nx + 1
    verts = np.array([[x, y] for y in ys for x in xs])
    loops = []
    for j in range(ny):
        for i in range(nx):
            a = j * stride + i
            loops.append([a, a + 1, a + 1 + stride, a + stride])
    return _build(verts, loops, UNIT_SQUARE)


def mesh_size(mesh: Mesh) -> float:
    """Maximum element diameter over the mesh."""
    if mesh.n_elements == 0:
        raise MeshError("empty mesh")
    return max(element_geometry(mesh, t).diameter for t in range(mesh.n_elements))
