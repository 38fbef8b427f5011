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
Discontinuous P_k spaces on triangles: Lagrange reference basis, affine
push-forward, element and face tables.
"""

import logging
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .linalg import dense_solve, DimensionError
from .mesh import MeshError
from .quadrature import segment_rule, triangle_rule

logging.basicConfig()
logger = logging.getLogger('nvdg.femspace')

SUPPORTED_DEGREES = (0, 1, 2)


class DegreeError(ValueError):
    pass


class DegenerateElementError(MeshError):
    pass


def _check_degree(k):
    if k not in SUPPORTED_DEGREES:
        raise DegreeError(f"unsupported polynomial degree {k}, "
                          f"expected one of {SUPPORTED_DEGREES}")


def n_local(k):
    return (k + 1) * (k + 2) // 2


@lru_cache(maxsize=None)
def lagrange_nodes(k):
    """Nodes on the reference triangle: vertices, then edge nodes
    (edges v0v1, v1v2, v2v0), then interior lattice points.
    """
    _check_degree(k)
    if k == 0:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]])

    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nodes = [v for v in verts]
    for a, b in ((0, 1), (1, 2), (2, 0)):
        for i in range(1, k):
            t = i / k
            nodes.append((1 - t) * verts[a] + t * verts[b])
    for j in range(1, k):
        for i in range(1, k - j):
            nodes.append(np.array([i / k, j / k]))
    nodes = np.array(nodes)
    nodes.setflags(write=False)
    return nodes


def _exponents(k):
    return [(p, d - p) for d in range(k + 1) for p in range(d, -1, -1)]


def _monomials(k, points, deriv_order):
    """Monomial values, gradients and Hessians at `points`."""
    x = points[:, 0][:, None]
    y = points[:, 1][:, None]
    exps = _exponents(k)
    px = np.array([e[0] for e in exps])[None, :]
    py = np.array([e[1] for e in exps])[None, :]

    def power(base, e):
        ok = e >= 0
        return np.where(ok, base ** np.where(ok, e, 0), 0.0)

    val = power(x, px) * power(y, py)
    grad = hess = None
    if deriv_order >= 1:
        grad = np.stack((px * power(x, px - 1) * power(y, py),
                         py * power(x, px) * power(y, py - 1)), axis=-1)
    if deriv_order >= 2:
        dxx = px * (px - 1) * power(x, px - 2) * power(y, py)
        dxy = px * py * power(x, px - 1) * power(y, py - 1)
        dyy = py * (py - 1) * power(x, px) * power(y, py - 2)
        hess = np.stack((np.stack((dxx, dxy), axis=-1),
                         np.stack((dxy, dyy), axis=-1)), axis=-2)
    return val, grad, hess


@lru_cache(maxsize=None)
def _lagrange_coefficients(k):
    """Monomial coefficients of the nodal basis (one column per function)."""
    nodes = lagrange_nodes(k)
    vander, _, _ = _monomials(k, nodes, 0)
    coeffs = dense_solve(vander, np.eye(vander.shape[0]))
    coeffs.setflags(write=False)
    return coeffs


@dataclass(frozen=True)
class ReferenceBasis:
    """Tables of the nodal P_k basis at a set of reference points.

    values[q, i], gradients[q, i, a], hessians[q, i, a, b]
    """
    degree: int
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray = None
    hessians: np.ndarray = None

    @property
    def n_loc(self):
        return self.values.shape[-1]


def eval_basis(k, points, deriv_order=2):
    logger.debug(f"({k=}, {deriv_order=})")
    _check_degree(k)
    if deriv_order not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {deriv_order}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(points < -1e-12) or np.any(points.sum(axis=1) > 1 + 1e-12):
        raise ValueError("evaluation points must lie in the closed reference triangle")

    coeffs = _lagrange_coefficients(k)
    val, grad, hess = _monomials(k, points, deriv_order)
    values = val @ coeffs
    gradients = np.einsum('qma,mi->qia', grad, coeffs) if grad is not None else None
    hessians = np.einsum('qmab,mi->qiab', hess, coeffs) if hess is not None else None
    return ReferenceBasis(k, points, values, gradients, hessians)


def affine_maps(coords):
    """Jacobians, determinants and inverses of x = x0 + J xi.

    `coords` has shape (..., 3, 2); J's columns are v1 - v0 and v2 - v0.
    """
    coords = np.asarray(coords, dtype=float)
    jac = np.stack((coords[..., 1, :] - coords[..., 0, :],
                    coords[..., 2, :] - coords[..., 0, :]), axis=-1)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if np.any(np.abs(det) <= 1e-300):
        raise DegenerateElementError("zero Jacobian determinant")
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1] / det
    inv[..., 1, 1] = jac[..., 0, 0] / det
    inv[..., 0, 1] = -jac[..., 0, 1] / det
    inv[..., 1, 0] = -jac[..., 1, 0] / det
    return coords[..., 0, :], jac, det, inv


def push_forward(coords, basis):
    """Map reference tables onto the element(s) with vertex coordinates
    `coords` ((3, 2) or (n, 3, 2)).

    Gradients use J^{-T}, Hessians J^{-T} H J^{-1}; the map is affine so
    there are no curvature terms.
    """
    x0, jac, det, inv = affine_maps(coords)
    points = x0[..., None, :] + np.einsum('...ab,qb->...qa', jac, basis.points)
    grads = hessians = None
    if basis.gradients is not None:
        grads = np.einsum('...ba,qib->...qia', inv, basis.gradients)
    if basis.hessians is not None:
        hessians = np.einsum('...ca,qicd,...db->...qiab', inv, basis.hessians, inv)
    values = np.broadcast_to(basis.values, points.shape[:-1] + basis.values.shape[-1:])
    return PhysicalTables(points, values, grads, hessians, det)


@dataclass(frozen=True)
class PhysicalTables:
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    hessians: np.ndarray
    det: np.ndarray


@dataclass(frozen=True)
class DofMap:
    """Element-major block layout of the discontinuous space."""
    n_elements: int
    n_loc: int

    @property
    def n_dofs(self):
        return self.n_elements * self.n_loc

    def global_index(self, element, local):
        return np.asarray(element) * self.n_loc + np.asarray(local)

    def element_dofs(self, element):
        return element * self.n_loc + np.arange(self.n_loc)

    def blocks(self, v):
        v = np.asarray(v)
        if v.shape[-1] != self.n_dofs:
            raise DimensionError(f"vector of length {v.shape[-1]} does not match "
                                 f"{self.n_dofs} dofs")
        return v.reshape(v.shape[:-1] + (self.n_elements, self.n_loc))


@dataclass(frozen=True)
class ElementTables:
    """Basis data at the element quadrature points of every element.

    points (ne, nq, 2), weights (ne, nq) include |det J|, values (nq, nloc),
    gradients (ne, nq, nloc, 2). Hessians (ne, nq, nloc, 2, 2) are mapped
    on request only.
    """
    degree: int
    points: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    reference_hessians: np.ndarray
    inv_jacobians: np.ndarray

    @property
    def hessians(self):
        return np.einsum('eca,qicd,edb->eqiab', self.inv_jacobians, self.reference_hessians,
                         self.inv_jacobians)


@dataclass(frozen=True)
class FaceTables:
    """Traces of the basis on both sides of every face.

    Side 0 is the face's first element, side 1 the second one. Boundary
    faces reuse side 0 as a dummy side 1 whose `jump` and `avg` factors
    are zero, so that

        [[v]] = sum_s jump[f, s] v_s n_f      {w} = sum_s avg[f, s] w_s

    hold on every face with the boundary conventions [[v]] = v n, {w} = w.
    """
    degree: int
    elements: np.ndarray      # (nf, 2)
    normals: np.ndarray       # (nf, 2)
    lengths: np.ndarray       # (nf,)
    interior: np.ndarray      # (nf,) bool
    points: np.ndarray        # (nf, nqf, 2)
    weights: np.ndarray       # (nf, nqf) include |e|
    values: np.ndarray        # (nf, 2, nqf, nloc)
    gradients: np.ndarray     # (nf, 2, nqf, nloc, 2)
    jump: np.ndarray          # (nf, 2)
    avg: np.ndarray           # (nf, 2)

    @property
    def n_faces(self):
        return self.elements.shape[0]


class DGSpace:
    """Elementwise P_k functions on a mesh, no inter-element constraints."""

    def __init__(self, mesh, degree, quad_degree=None):
        _check_degree(degree)
        self.mesh = mesh
        self.degree = int(degree)
        self.quad_degree = int(quad_degree) if quad_degree else 2 * self.degree + 2
        self.dofmap = DofMap(mesh.n_elements, n_local(self.degree))

        coords = mesh.vertices[mesh.elements]
        self.origins, self.jacobians, self.det, self.inv_jacobians = affine_maps(coords)

        self._element_tables = dict()
        self._face_tables = dict()
        logger.debug(f"({mesh=}, {degree=}) -> {self.n_dofs} dofs")

    @property
    def n_loc(self):
        return self.dofmap.n_loc

    @property
    def n_dofs(self):
        return self.dofmap.n_dofs

    @property
    def n_elements(self):
        return self.dofmap.n_elements

    def reference_mass(self):
        rule = triangle_rule(2 * self.degree)
        phi = eval_basis(self.degree, rule.points, 0).values
        return np.einsum('q,qi,qj->ij', rule.weights, phi, phi)

    def element_tables(self, degree=None):
        degree = int(degree or self.quad_degree)
        if degree not in self._element_tables:
            rule = triangle_rule(degree)
            ref = eval_basis(self.degree, rule.points, 2)
            phys = push_forward(self.mesh.vertices[self.mesh.elements],
                                replace(ref, hessians=None))
            weights = np.abs(self.det)[:, None] * rule.weights[None, :]
            self._element_tables[degree] = ElementTables(
                degree, phys.points, weights, ref.values, phys.gradients, ref.hessians,
                self.inv_jacobians)
        return self._element_tables[degree]

    def to_reference(self, elements, points):
        """Reference coordinates of physical `points` (..., nq, 2) in `elements` (...)."""
        return np.einsum('...ab,...qb->...qa', self.inv_jacobians[elements],
                         points - self.origins[elements][..., None, :])

    def face_tables(self, degree=None):
        degree = int(degree or self.quad_degree)
        if degree not in self._face_tables:
            self._face_tables[degree] = self._build_face_tables(degree)
        return self._face_tables[degree]

    def _build_face_tables(self, degree):
        mesh = self.mesh
        rule = segment_rule(degree)
        interior = mesh.face_elements[:, 1] >= 0
        elements = np.where(interior[:, None], mesh.face_elements,
                            mesh.face_elements[:, [0, 0]])

        a = mesh.vertices[mesh.face_vertices[:, 0]]
        b = mesh.vertices[mesh.face_vertices[:, 1]]
        points = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
        weights = mesh.face_lengths[:, None] * rule.weights[None, :]

        nf, nq = points.shape[:2]
        values = np.empty((nf, 2, nq, self.n_loc))
        grads = np.empty((nf, 2, nq, self.n_loc, 2))
        for side in (0, 1):
            ref = self.to_reference(elements[:, side], points)
            ref = np.clip(ref, 0.0, 1.0)
            flat = eval_basis(self.degree, _clip_to_triangle(ref.reshape(-1, 2)), 1)
            values[:, side] = flat.values.reshape(nf, nq, self.n_loc)
            g = flat.gradients.reshape(nf, nq, self.n_loc, 2)
            grads[:, side] = np.einsum('fba,fqib->fqia', self.inv_jacobians[elements[:, side]], g)

        jump = np.where(interior[:, None], [1.0, -1.0], [1.0, 0.0])
        avg = np.where(interior[:, None], [0.5, 0.5], [1.0, 0.0])
        return FaceTables(degree, elements, mesh.face_normals, mesh.face_lengths,
                          interior, points, weights, values, grads, jump, avg)

    def interpolate(self, func):
        """Nodal interpolant of `func(points) -> values` (points (..., 2))."""
        nodes = lagrange_nodes(self.degree)
        phys = self.origins[:, None, :] + np.einsum('eab,nb->ena', self.jacobians, nodes)
        return np.asarray(func(phys), dtype=float).reshape(-1)

    def evaluate(self, coeffs, tables):
        """Values of a DG function at the points of element `tables`."""
        c = self.dofmap.blocks(coeffs)
        return np.einsum('...ei,qi->...eq', c, tables.values)

    def evaluate_gradient(self, coeffs, tables):
        c = self.dofmap.blocks(coeffs)
        return np.einsum('...ei,eqia->...eqa', c, tables.gradients)

    def evaluate_hessian(self, coeffs, tables):
        c = self.dofmap.blocks(coeffs)
        return np.einsum('...ei,eqiab->...eqab', c, tables.hessians)

    def face_traces(self, coeffs, tables):
        """Traces (nf, 2, nqf) of a DG function from both sides of each face."""
        c = self.dofmap.blocks(coeffs)
        return np.einsum('fsqi,fsi->fsq', tables.values, c[tables.elements])

    def face_gradient_traces(self, coeffs, tables):
        c = self.dofmap.blocks(coeffs)
        return np.einsum('fsqia,fsi->fsqa', tables.gradients, c[tables.elements])

    def l2_inner(self, u, v):
        """Exact L2 inner product of two DG functions through the mass matrix."""
        mref = self.reference_mass()
        cu = self.dofmap.blocks(u)
        cv = self.dofmap.blocks(v)
        return float(np.einsum('e,ei,ij,ej->', np.abs(self.det), cu, mref, cv))

    def l2_norm(self, v):
        return np.sqrt(max(self.l2_inner(v, v), 0.0))

    def scatter(self, rows_el, cols_el, blocks):
        """COO triplets of local blocks[f, i, j] placed at element pair
        (rows_el[f], cols_el[f]).
        """
        n_loc = self.n_loc
        local = np.arange(n_loc)
        rows = (rows_el[:, None, None] * n_loc + local[None, :, None]).repeat(n_loc, axis=2)
        cols = (cols_el[:, None, None] * n_loc + local[None, None, :]).repeat(n_loc, axis=1)
        return rows.ravel(), cols.ravel(), blocks.ravel()


def _clip_to_triangle(points):
    s = points.sum(axis=1)
    over = s > 1.0
    if np.any(over):
        points = points.copy()
        points[over] /= s[over][:, None]
    return points


def face_quadrature(space, face, degree=None):
    """Quadrature on one face, in physical and in each neighbour's
    reference coordinates.

    Returns (weights, points, [reference points per adjacent element]).
    """
    f = face if isinstance(face, (int, np.integer)) else _face_index(space.mesh, face)
    mesh = space.mesh
    rule = segment_rule(degree or space.quad_degree)
    a = mesh.vertices[mesh.face_vertices[f, 0]]
    b = mesh.vertices[mesh.face_vertices[f, 1]]
    points = a[None, :] + rule.points[:, None] * (b - a)[None, :]
    weights = mesh.face_lengths[f] * rule.weights
    refs = [_clip_to_triangle(np.clip(space.to_reference(e, points), 0.0, 1.0))
            for e in mesh.face_elements[f] if e >= 0]
    return weights, points, refs


def _face_index(mesh, face):
    key = tuple(sorted(face.vertices))
    for f, verts in enumerate(mesh.face_vertices):
        if tuple(sorted(int(v) for v in verts)) == key:
            return f
    raise MeshError(f"face {face} is not part of the mesh")
