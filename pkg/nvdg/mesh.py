#
# nvdg - A discontinuous Galerkin solver for nonvariational elliptic problems
# Copyright (C) 2026  nvdg contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#

"""
Criss-cross triangulations of the unit square and their skeleton.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

logging.basicConfig()
logger = logging.getLogger('nvdg.mesh')

INTERIOR = "interior"
BOUNDARY = "boundary"

# local edge l of a triangle is the one opposite to local vertex l
_LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Face:
    vertices: tuple
    elements: tuple
    normal: tuple
    length: float
    kind: str

    @property
    def is_interior(self):
        return self.kind == INTERIOR


class Mesh:
    """A conforming triangulation of [0,1]^2.

    The face arrays are the vectorised form of the skeleton. For boundary
    faces `face_elements[f, 1]` is -1. Normals are unit length and point
    out of the first adjacent element.
    """

    def __init__(self, vertices, elements, level=0):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.elements = np.ascontiguousarray(elements, dtype=np.int64)
        self.level = int(level)

        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError(f"vertices must be an (n, 2) array, got {self.vertices.shape}")
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:
            raise MeshError(f"elements must be an (n, 3) array, got {self.elements.shape}")

        areas = self.signed_areas
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise MeshError(f"element {bad} is degenerate or negatively oriented "
                            f"(signed area {areas[bad]:.3e})")

        (self.face_vertices, self.face_elements, self.face_local,
         self.element_faces) = _build_skeleton(self.vertices, self.elements)

        tangent = (self.vertices[self.face_vertices[:, 1]]
                   - self.vertices[self.face_vertices[:, 0]])
        self.face_lengths = np.hypot(tangent[:, 0], tangent[:, 1])
        self.face_normals = np.column_stack((tangent[:, 1], -tangent[:, 0]))
        self.face_normals /= self.face_lengths[:, None]

        for arr in (self.vertices, self.elements, self.face_vertices,
                    self.face_elements, self.face_local, self.element_faces,
                    self.face_lengths, self.face_normals):
            arr.setflags(write=False)

        logger.debug(f"({self.n_elements=}, {self.n_faces=}, {self.level=})")

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def n_faces(self):
        return self.face_vertices.shape[0]

    @cached_property
    def signed_areas(self):
        p = self.vertices[self.elements]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def element_diameters(self):
        p = self.vertices[self.elements]
        lengths = np.linalg.norm(p[:, _LOCAL_EDGES[:, 1]] - p[:, _LOCAL_EDGES[:, 0]], axis=2)
        return lengths.max(axis=1)

    @cached_property
    def inradii(self):
        p = self.vertices[self.elements]
        lengths = np.linalg.norm(p[:, _LOCAL_EDGES[:, 1]] - p[:, _LOCAL_EDGES[:, 0]], axis=2)
        return 2.0 * self.signed_areas / lengths.sum(axis=1)

    @property
    def h(self):
        return float(self.element_diameters.max())

    @property
    def interior_faces(self):
        return np.flatnonzero(self.face_elements[:, 1] >= 0)

    @property
    def boundary_faces(self):
        return np.flatnonzero(self.face_elements[:, 1] < 0)

    @cached_property
    def faces(self):
        faces = []
        for f in range(self.n_faces):
            e0, e1 = (int(e) for e in self.face_elements[f])
            elems = (e0,) if e1 < 0 else (e0, e1)
            faces.append(Face(
                vertices=tuple(int(v) for v in self.face_vertices[f]),
                elements=elems,
                normal=tuple(float(c) for c in self.face_normals[f]),
                length=float(self.face_lengths[f]),
                kind=BOUNDARY if e1 < 0 else INTERIOR,
            ))
        return faces

    def __repr__(self):
        return f"<Mesh level={self.level} elements={self.n_elements} vertices={self.n_vertices}>"


def _on_unit_square_boundary(points, tol=1e-12):
    x, y = points[..., 0], points[..., 1]
    return (np.abs(x) < tol) | (np.abs(x - 1) < tol) | (np.abs(y) < tol) | (np.abs(y - 1) < tol)


def _build_skeleton(vertices, elements):
    """Return face vertices, face elements, local edge numbers and the
    element -> face map. Faces are numbered in order of first appearance.
    """
    n_el = elements.shape[0]
    edges = elements[:, _LOCAL_EDGES].reshape(-1, 2)
    keys = np.sort(edges, axis=1)

    _, first, inverse, counts = np.unique(keys, axis=0, return_index=True,
                                          return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        raise MeshError(f"nonconforming mesh: {int(np.sum(counts > 2))} edges "
                        "are shared by more than two elements")

    # renumber faces by first appearance so numbering follows element order
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    face_of_edge = rank[inverse]
    n_faces = order.size

    face_vertices = edges[first[order]].copy()
    face_elements = np.full((n_faces, 2), -1, dtype=np.int64)
    face_local = np.full((n_faces, 2), -1, dtype=np.int64)

    edge_element = np.repeat(np.arange(n_el), 3)
    edge_local = np.tile(np.arange(3), n_el)
    is_first = np.zeros(edges.shape[0], dtype=bool)
    is_first[first[order]] = True

    face_elements[face_of_edge[is_first], 0] = edge_element[is_first]
    face_local[face_of_edge[is_first], 0] = edge_local[is_first]
    face_elements[face_of_edge[~is_first], 1] = edge_element[~is_first]
    face_local[face_of_edge[~is_first], 1] = edge_local[~is_first]

    boundary = face_elements[:, 1] < 0
    mid = 0.5 * (vertices[face_vertices[:, 0]] + vertices[face_vertices[:, 1]])
    hanging = boundary & ~_on_unit_square_boundary(mid)
    if np.any(hanging):
        raise MeshError(f"nonconforming mesh: {int(hanging.sum())} unmatched "
                        "edges lie inside the domain")

    element_faces = face_of_edge.reshape(n_el, 3)
    return face_vertices, face_elements, face_local, element_faces


def build_criss_cross(n):
    """Split an n x n grid of the unit square along the (0,0)-(1,1) diagonal
    of every cell, giving 2 n^2 positively oriented triangles.
    """
    logger.debug(f"({n=})")
    if int(n) != n or n < 1:
        raise MeshError(f"cells per side must be a positive integer, got {n}")
    n = int(n)

    ticks = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(ticks, ticks)
    vertices = np.column_stack((xx.ravel(), yy.ravel()))

    j, i = np.divmod(np.arange(n * n), n)
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack((v00, v10, v11))
    upper = np.column_stack((v00, v11, v01))
    elements = np.stack((lower, upper), axis=1).reshape(-1, 3)

    level = int(np.log2(n / 8)) if n >= 8 and (n & (n - 1)) == 0 else 0
    return Mesh(vertices, elements, level=level)


def refine(m):
    """Uniform red refinement: every triangle is split into four through its
    edge midpoints. The criss-cross family is closed under this split.
    """
    logger.debug(f"({m=})")
    midpoints = 0.5 * (m.vertices[m.face_vertices[:, 0]] + m.vertices[m.face_vertices[:, 1]])
    vertices = np.vstack((m.vertices, midpoints))

    v0, v1, v2 = m.elements[:, 0], m.elements[:, 1], m.elements[:, 2]
    # midpoint of the edge opposite local vertex l
    m12, m20, m01 = (m.n_vertices + m.element_faces[:, l] for l in range(3))
    children = np.stack((
        np.column_stack((v0, m01, m20)),
        np.column_stack((m01, v1, m12)),
        np.column_stack((m20, m12, v2)),
        np.column_stack((m01, m12, m20)),
    ), axis=1).reshape(-1, 3)
    return Mesh(vertices, children, level=m.level + 1)


def skeleton(m):
    """Faces of the triangulation, each interior and boundary face once."""
    return m.faces


def write_off(m, path):
    """Dump the mesh as an OFF listing (vertices, then element triples)."""
    logger.debug(f"({m=}, {path=})")
    with open(path, "w") as fp:
        fp.write("OFF\n")
        fp.write(f"{m.n_vertices} {m.n_elements} {m.n_faces}\n")
        for x, y in m.vertices:
            fp.write(f"{float(x)!r} {float(y)!r} 0.0\n")
        for a, b, c in m.elements:
            fp.write(f"3 {a} {b} {c}\n")
