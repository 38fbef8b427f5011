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
Global systems for

    B_h(u, Psi) = - int A : H[u] Psi + int_{E + dOmega} sigma / h [[u]] . [[Psi]]
    l(Psi)      = int f Psi

either with H eliminated through Pi(Psi A) (compact stencil) or as the
block system in (u, H_11, H_12, H_21, H_22).
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .hessian import DiscreteHessian, FluxChoice, apply_inverse_mass, lifting_matrices
from .linalg import CsrMatrix, DimensionError, bicgstab
from .projection import LocalProjector, matrix_basis_coefficients

logging.basicConfig()
logger = logging.getLogger('nvdg.assembly')

ELIMINATED = "eliminated"
MIXED = "mixed"
FORMS = (ELIMINATED, MIXED)


@dataclass(frozen=True)
class BilinearFormConfig:
    sigma: float = 20.0
    theta: float = 1.0
    quad_degree: Optional[int] = None
    form: str = ELIMINATED

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.theta not in (-1, 1):
            raise ValueError(f"theta must be -1 or 1, got {self.theta}")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")


@dataclass
class AssembledSystem:
    """`matrix`/`rhs` are what gets solved: K for the eliminated form, the
    full block system for the mixed one. Mixed systems also keep the pieces
    needed to condense and to recover H.
    """
    space: object
    matrix: CsrMatrix
    rhs: np.ndarray
    form: str
    config: BilinearFormConfig
    n_u: int
    n_h: int = 0
    parts: dict = field(default_factory=dict)

    @property
    def stats(self):
        return self.matrix.block_stats(self.space.n_loc)

    @property
    def n_dofs(self):
        return self.n_u + self.n_h


def _check_space(mesh, space):
    if space.mesh is not mesh:
        raise ValueError("the space is not built on the given mesh")


def _load_vector(space, forcing):
    et = space.element_tables()
    fvals = np.asarray(forcing(et.points), dtype=float)
    return np.einsum('eq,eq,qi->ei', et.weights, fvals, et.values).reshape(space.n_dofs)


def _penalty_blocks(space, sigma, s, t):
    ft = space.face_tables()
    w = sigma / ft.lengths * ft.jump[:, s] * ft.jump[:, t]
    return np.einsum('f,fq,fqi,fqj->fij', w, ft.weights, ft.values[:, s], ft.values[:, t])


def assemble_eliminated(mesh, space, coefficient, forcing, cfg=None):
    """K[i, j] = B_h(phi_j, phi_i) with H[phi_j] tested against Pi(phi_i A)."""
    logger.debug(f"({mesh=}, {space=}, {cfg=})")
    cfg = cfg or BilinearFormConfig()
    _check_space(mesh, space)
    et = space.element_tables()
    ft = space.face_tables()
    theta, sigma = cfg.theta, cfg.sigma

    # C[e, i, a, b, l]: coefficients of Pi(phi_i A_ab)
    coeffs = matrix_basis_coefficients(space, coefficient, cfg.quad_degree)

    # volume: int sum_ab d_b Pi(phi_i A_ab) d_a phi_j
    dphi = np.einsum('eiabl,eqlb->eqia', coeffs, et.gradients)
    vol = np.einsum('eq,eqia,eqja->eij', et.weights, dphi, et.gradients)
    elems = np.arange(space.n_elements)
    r, c, d = space.scatter(elems, elems, vol)
    rows, cols, vals = [r], [c], [d]

    for s in (0, 1):
        c_s = coeffs[ft.elements[:, s]]
        # sum_b d_b Phi_ab and sum_b Phi_ab n_b on side s
        dphi_s = np.einsum('fiabl,fqlb->fqia', c_s, ft.gradients[:, s])
        phin_s = np.einsum('fiabl,fql,fb->fqia', c_s, ft.values[:, s], ft.normals)
        for t in (0, 1):
            w1 = -theta * ft.jump[:, t] * ft.avg[:, s]
            w2 = -ft.jump[:, s] * ft.avg[:, t]
            blk = (np.einsum('f,fq,fqia,fa,fqj->fij', w1, ft.weights, dphi_s, ft.normals,
                             ft.values[:, t])
                   + np.einsum('f,fq,fqia,fqja->fij', w2, ft.weights, phin_s,
                               ft.gradients[:, t])
                   + _penalty_blocks(space, sigma, s, t))
            r, c, d = space.scatter(ft.elements[:, s], ft.elements[:, t], blk)
            rows.append(r), cols.append(c), vals.append(d)

    k = CsrMatrix.from_triplets(np.concatenate(rows), np.concatenate(cols),
                                np.concatenate(vals), space.n_dofs)
    rhs = _load_vector(space, forcing)
    system = AssembledSystem(space, k, rhs, ELIMINATED, cfg, space.n_dofs)
    logger.info(f"eliminated system: {k.n} dofs, {k.nnz} nonzeros")
    return system


def _block_diagonal(space, blocks):
    elems = np.arange(space.n_elements)
    r, c, d = space.scatter(elems, elems, blocks)
    return sp.coo_matrix((d, (r, c)), shape=(space.n_dofs, space.n_dofs)).tocsr()


def _penalty_matrix(space, sigma):
    ft = space.face_tables()
    rows, cols, vals = [], [], []
    for s in (0, 1):
        for t in (0, 1):
            r, c, d = space.scatter(ft.elements[:, s], ft.elements[:, t],
                               _penalty_blocks(space, sigma, s, t))
            rows.append(r), cols.append(c), vals.append(d)
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(space.n_dofs, space.n_dofs)).tocsr()


def assemble_mixed(mesh, space, coefficient, forcing, cfg=None):
    """Block system

        [ S      -N_11 -N_12 -N_21 -N_22 ] [ u    ]   [ l ]
        [ -G_ab   M  (block diagonal)     ] [ H_ab ] = [ 0 ]

    with N_ab[i, l] = int A_ab phi_i phi_l and M H_ab = G_ab u the Hessian's
    defining identity.
    """
    logger.debug(f"({mesh=}, {space=}, {cfg=})")
    cfg = cfg or BilinearFormConfig(form=MIXED)
    _check_space(mesh, space)
    proj = LocalProjector(space, cfg.quad_degree)

    a = coefficient.matrix(proj.points)
    n_blocks = proj.abs_det[None, None, :, None, None] * np.einsum(
        'q,qi,ql,eqab->abeil', proj.rule.weights, proj.phi, proj.phi, a)
    mass_blocks = proj.abs_det[:, None, None] * proj.reference_mass[None, :, :]
    inv_blocks = proj.inverse_reference_mass[None, :, :] / proj.abs_det[:, None, None]

    lifting = lifting_matrices(space, cfg.theta)
    n_mats = [[_block_diagonal(space, n_blocks[i, j]) for j in range(2)] for i in range(2)]
    mass = _block_diagonal(space, mass_blocks)
    penalty = _penalty_matrix(space, cfg.sigma)

    comps = [(0, 0), (0, 1), (1, 0), (1, 1)]
    top = [penalty] + [-n_mats[i][j] for i, j in comps]
    rows = [top]
    for r, (i, j) in enumerate(comps):
        row = [-lifting[i][j]] + [None] * 4
        row[1 + r] = mass
        rows.append(row)
    block = sp.bmat(rows, format="csr")

    rhs = np.concatenate((_load_vector(space, forcing), np.zeros(4 * space.n_dofs)))
    parts = dict(penalty=penalty, coupling=n_mats, lifting=lifting,
                 inverse_mass=_block_diagonal(space, inv_blocks))
    system = AssembledSystem(space, CsrMatrix.from_scipy(block), rhs, MIXED, cfg,
                             space.n_dofs, 4 * space.n_dofs, parts)
    logger.info(f"mixed system: {system.n_u} + {system.n_h} dofs, {system.matrix.nnz} nonzeros")
    return system


def condense(system):
    """Eliminate H: K = S - sum_ab N_ab M^-1 G_ab, elementwise mass inverse."""
    logger.debug(f"({system.form=})")
    if system.form != MIXED:
        return system
    p = system.parts
    k = p["penalty"].copy()
    for i in range(2):
        for j in range(2):
            k = k - p["coupling"][i][j] @ (p["inverse_mass"] @ p["lifting"][i][j])
    return AssembledSystem(system.space, CsrMatrix.from_scipy(k.tocsr()),
                           system.rhs[:system.n_u].copy(), ELIMINATED, system.config,
                           system.n_u)


def recover_hessian(system, u):
    """H[u] from the block rows M H_ab = G_ab u."""
    space = system.space
    if u.shape != (space.n_dofs,):
        raise DimensionError(f"vector of shape {u.shape} does not match {space.n_dofs} dofs")
    lifting = system.parts.get("lifting") or lifting_matrices(space, system.config.theta)
    rhs = np.array([[lifting[a][b] @ u for b in range(2)] for a in range(2)])
    return DiscreteHessian(space, apply_inverse_mass(space, rhs), u)


def assemble(mesh, space, coefficient, forcing, cfg):
    if cfg.form == MIXED:
        return assemble_mixed(mesh, space, coefficient, forcing, cfg)
    return assemble_eliminated(mesh, space, coefficient, forcing, cfg)


def solve(system, solver_cfg):
    """Solve for u_h; mixed systems are condensed first. Returns (u, report)."""
    logger.debug(f"({system.form=}, {solver_cfg=})")
    reduced = condense(system)
    return bicgstab(reduced.matrix, reduced.rhs, precond=solver_cfg.precond,
                    tol=solver_cfg.tol, max_iter=solver_cfg.max_iter)


def bilinear_form(system, v, w):
    """B_h(v, w) = w^T K v."""
    reduced = condense(system)
    return float(np.asarray(w) @ reduced.matrix.matvec(v))


def galerkin_orthogonality_residual(system, u_h):
    """max_i |B_h(u_h, phi_i) - l(phi_i)|."""
    reduced = condense(system)
    return float(np.max(np.abs(reduced.matrix.matvec(u_h) - reduced.rhs)))


def error_functional(space, problem, quad_degree=None):
    """J(phi_i) = int (D^2 u - Pi D^2 u) : A phi_i, which vanishes when A is
    elementwise constant.
    """
    logger.debug(f"({space=}, {problem.id=})")
    degree = int(quad_degree or 2 * space.degree + 4)
    et = space.element_tables(degree)
    hess = problem.solution.hessian(et.points)
    proj = LocalProjector(space, degree)
    ph = np.einsum('eiab,qi->eqab', proj.project_values(hess), et.values)
    a = problem.coefficient.matrix(et.points)
    return np.einsum('eq,eqab,eqab,qi->ei', et.weights, hess - ph, a,
                     et.values).reshape(space.n_dofs)


def default_flux(cfg):
    return FluxChoice(theta=cfg.theta)
