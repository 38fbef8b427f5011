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
The finite element Hessian H[v] of a discontinuous function v: the V_h
matrix field with

    int H_ab Phi = - int d_a v d_b Phi
                   + int_{E + dOmega} theta [[v - g]]_a {d_b Phi}
                   + int_{E + dOmega} {d_a v} [[Phi]]_b

for all Phi in V_h. Index a is the derivative taken first. Boundary data g
defaults to zero.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .femspace import DGSpace
from .linalg import DimensionError
from .projection import LocalProjector, project_function

logging.basicConfig()
logger = logging.getLogger('nvdg.hessian')


@dataclass(frozen=True)
class FluxChoice:
    """Numerical traces for the Hessian.

    Interior-penalty fluxes: U = theta {v} on interior faces, U = g on the
    boundary, p = {grad v} everywhere. With `exact_value`/`exact_gradient`
    set both traces come from a given smooth function instead.
    """
    theta: float = 1.0
    boundary: Optional[Callable] = None
    exact_value: Optional[Callable] = None
    exact_gradient: Optional[Callable] = None

    def __post_init__(self):
        if self.theta not in (-1, 1):
            raise ValueError(f"theta must be -1 or 1, got {self.theta}")

    @classmethod
    def exact(cls, value, gradient):
        return cls(1.0, boundary=value, exact_value=value, exact_gradient=gradient)

    @property
    def is_exact(self):
        return self.exact_value is not None

    def boundary_values(self, points):
        if self.boundary is None:
            return np.zeros(points.shape[:-1])
        return np.asarray(self.boundary(points), dtype=float)


@dataclass(frozen=True)
class DiscreteHessian:
    """components[a, b] is the V_h coefficient vector of H_ab."""
    space: DGSpace
    components: np.ndarray
    source: np.ndarray

    def entry(self, a, b):
        return self.components[a, b]

    def evaluate(self, tables):
        """Values (ne, nq, 2, 2) at element quadrature points."""
        c = self.space.dofmap.blocks(self.components)
        return np.einsum('abei,qi->eqab', c, tables.values)

    def __add__(self, other):
        return DiscreteHessian(self.space, self.components + other.components,
                               self.source + other.source)

    def __mul__(self, alpha):
        return DiscreteHessian(self.space, alpha * self.components, alpha * self.source)

    __rmul__ = __mul__

    def l2_norm(self):
        return np.sqrt(sum(self.space.l2_inner(self.components[a, b], self.components[a, b])
                           for a in range(2) for b in range(2)))

    def distance(self, other_components):
        diff = self.components - other_components
        return np.sqrt(sum(self.space.l2_inner(diff[a, b], diff[a, b])
                           for a in range(2) for b in range(2)))


def _check_vector(space, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (space.n_dofs,):
        raise DimensionError(f"vector of shape {v.shape} does not match {space.n_dofs} dofs")
    return v


def lifting_matrices(space, theta=1.0):
    """Sparse G_ab with (M H_ab)[i] = (G_ab v)[i] + boundary data terms.

    Returned as a 2 x 2 nested list of scipy CSR matrices.
    """
    logger.debug(f"({space=}, {theta=})")
    et = space.element_tables()
    ft = space.face_tables()
    n = space.n_dofs
    elems = np.arange(space.n_elements)

    # -int d_a phi_j d_b phi_l
    vol = -np.einsum('eq,eqlb,eqja->abelj', et.weights, et.gradients, et.gradients)

    mats = [[None, None], [None, None]]
    for a in range(2):
        for b in range(2):
            rows, cols, vals = [], [], []
            r, c, d = space.scatter(elems, elems, vol[a, b])
            rows.append(r), cols.append(c), vals.append(d)
            for s in (0, 1):
                for t in (0, 1):
                    # theta [[v]]_a {d_b Phi} + {d_a v} [[Phi]]_b
                    w1 = theta * ft.avg[:, s] * ft.jump[:, t] * ft.normals[:, a]
                    w2 = ft.jump[:, s] * ft.avg[:, t] * ft.normals[:, b]
                    blk = (np.einsum('f,fq,fql,fqj->flj', w1, ft.weights,
                                     ft.gradients[:, s, :, :, b], ft.values[:, t])
                           + np.einsum('f,fq,fql,fqj->flj', w2, ft.weights,
                                       ft.values[:, s], ft.gradients[:, t, :, :, a]))
                    r, c, d = space.scatter(ft.elements[:, s], ft.elements[:, t], blk)
                    rows.append(r), cols.append(c), vals.append(d)
            mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                shape=(n, n)).tocsr()
            mat.sum_duplicates()
            mats[a][b] = mat
    return mats


def boundary_lifting(space, flux):
    """Data part -theta int_{dOmega} g n_a {d_b Phi}, shape (2, 2, n_dofs)."""
    out = np.zeros((2, 2, space.n_dofs))
    if flux.boundary is None:
        return out
    ft = space.face_tables()
    bnd = ~ft.interior
    g = flux.boundary_values(ft.points[bnd])
    contrib = -flux.theta * np.einsum('fq,fq,fa,fqlb->abfl', ft.weights[bnd], g,
                                      ft.normals[bnd], ft.gradients[bnd, 0])
    idx = ft.elements[bnd, 0][:, None] * space.n_loc + np.arange(space.n_loc)[None, :]
    for a in range(2):
        for b in range(2):
            np.add.at(out[a, b], idx, contrib[a, b])
    return out


def apply_inverse_mass(space, rhs):
    """Block-diagonal mass solve on (..., n_dofs) data."""
    proj = LocalProjector(space, 2 * space.degree)
    blocks = space.dofmap.blocks(rhs)
    sol = np.einsum('ij,...ej->...ei', proj.inverse_reference_mass, blocks) / proj.abs_det[:, None]
    return sol.reshape(rhs.shape)


def assemble_hessian(space, v, flux=None, lifting=None):
    """H[v] in the primal form: one skeleton pass, then elementwise mass solves."""
    logger.debug(f"({space=}, {flux=})")
    flux = flux or FluxChoice()
    v = _check_vector(space, v)
    if flux.is_exact:
        return assemble_hessian_flux(space, v, flux)
    lifting = lifting or lifting_matrices(space, flux.theta)
    rhs = np.array([[lifting[a][b] @ v for b in range(2)] for a in range(2)])
    rhs += boundary_lifting(space, flux)
    return DiscreteHessian(space, apply_inverse_mass(space, rhs), v)


def assemble_hessian_flux(space, v, flux=None):
    """H[v] through the two-stage flux system: first a discrete gradient p
    with trace U, then the derivative of p with trace p-hat.

    Agrees with the primal form for theta = 1.
    """
    logger.debug(f"({space=}, {flux=})")
    flux = flux or FluxChoice()
    v = _check_vector(space, v)
    et = space.element_tables()
    ft = space.face_tables()
    c = space.dofmap.blocks(v)
    n_loc = space.n_loc

    # U on faces
    traces = space.face_traces(v, ft)
    if flux.is_exact:
        u_hat = np.asarray(flux.exact_value(ft.points), dtype=float)
    else:
        u_hat = flux.theta * np.einsum('fs,fsq->fq', ft.avg, traces)
        bnd = ~ft.interior
        u_hat[bnd] = flux.boundary_values(ft.points[bnd])

    idx = ft.elements[:, :, None] * n_loc + np.arange(n_loc)[None, None, :]

    # M p_a = -int v d_a phi + int U [[phi]]_a
    vals = np.einsum('qj,ej->eq', et.values, c)
    rhs_p = -np.einsum('eq,eq,eqia->aei', et.weights, vals, et.gradients).reshape(2, -1)
    face_p = np.einsum('fq,fq,fs,fa,fsqi->afsi', ft.weights, u_hat, ft.jump, ft.normals, ft.values)
    for a in range(2):
        np.add.at(rhs_p[a], idx, face_p[a])
    p = apply_inverse_mass(space, rhs_p)

    # p-hat on faces
    if flux.is_exact:
        p_hat = np.asarray(flux.exact_gradient(ft.points), dtype=float)
    else:
        p_hat = np.einsum('fs,fsqa->fqa', ft.avg, space.face_gradient_traces(v, ft))

    # M H_ab = -int p_a d_b phi + int p-hat_a [[phi]]_b
    pvals = np.einsum('qj,aej->aeq', et.values, space.dofmap.blocks(p))
    rhs_h = -np.einsum('eq,aeq,eqib->abei', et.weights, pvals, et.gradients).reshape(2, 2, -1)
    face_h = np.einsum('fq,fqa,fs,fb,fsqi->abfsi', ft.weights, p_hat, ft.jump, ft.normals, ft.values)
    for a in range(2):
        for b in range(2):
            np.add.at(rhs_h[a, b], idx, face_h[a, b])
    return DiscreteHessian(space, apply_inverse_mass(space, rhs_h), v)


def broken_hessian(space, v, tables=None):
    """Elementwise D^2 v at element quadrature points, (ne, nq, 2, 2)."""
    tables = tables or space.element_tables()
    return space.evaluate_hessian(v, tables)


def hessian_consistency_residual(solution, k, mesh, quad_degree=None):
    """|| H[Pi u] - Pi(D^2 u) || with exact traces of u on the skeleton."""
    logger.debug(f"({k=}, {mesh=})")
    space = DGSpace(mesh, k, quad_degree)
    v = project_function(space, solution.value)
    h = assemble_hessian_flux(space, v, FluxChoice.exact(solution.value, solution.gradient))
    target = LocalProjector(space).project(solution.hessian)
    target = np.moveaxis(target.reshape(space.n_dofs, 2, 2), 0, -1)
    return float(h.distance(target))


ROUNDOFF = 1e-20


@dataclass(frozen=True)
class StabilityBound:
    """Both sides of the Hessian stability estimate.

    `scale` is ||D_h^2 v||^2 + ||H[v]||^2, the size lhs is measured against:
    an lhs below ROUNDOFF * scale is cancellation noise and the ratio is 0.
    """
    lhs: float
    rhs: float
    scale: float = 0.0

    @property
    def negligible(self):
        return self.lhs <= ROUNDOFF * max(self.scale, np.finfo(float).tiny)

    @property
    def ratio(self):
        if self.negligible:
            return 0.0
        return self.lhs / self.rhs if self.rhs > 0 else np.inf


def stability_bound_check(space, v, flux=None, include_boundary=True):
    """lhs = ||D_h^2 v - H[v]||^2,
    rhs = sum_E h^-1 ||[[grad v]]||^2 + h^-3 ||[[v]]||^2 (+ h^-3 ||v - g||^2 on dOmega).
    """
    logger.debug(f"({space=}, {include_boundary=})")
    flux = flux or FluxChoice()
    v = _check_vector(space, v)
    et = space.element_tables()
    ft = space.face_tables()

    broken = broken_hessian(space, v, et)
    discrete = assemble_hessian(space, v, flux).evaluate(et)
    diff = broken - discrete
    lhs = float(np.einsum('eq,eqab,eqab->', et.weights, diff, diff))
    scale = float(np.einsum('eq,eqab,eqab->', et.weights, broken, broken)
                  + np.einsum('eq,eqab,eqab->', et.weights, discrete, discrete))

    traces = space.face_traces(v, ft)
    grads = space.face_gradient_traces(v, ft)
    jump_v = np.einsum('fs,fsq->fq', ft.jump, traces)
    jump_g = np.einsum('fs,fsqa->fqa', ft.jump, grads)

    inner = ft.interior
    h = ft.lengths
    rhs = float(np.sum(np.einsum('fq,fqa->f', ft.weights, jump_g ** 2)[inner] / h[inner])
                + np.sum(np.einsum('fq,fq->f', ft.weights, jump_v ** 2)[inner] / h[inner] ** 3))
    if include_boundary:
        bnd = ~inner
        gap = jump_v[bnd] - flux.boundary_values(ft.points[bnd])
        rhs += float(np.sum(np.einsum('fq,fq->f', ft.weights[bnd], gap ** 2) / h[bnd] ** 3))
    return StabilityBound(lhs, rhs, scale)
