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
Elementwise L2 projection onto P_k. Every element mass matrix is
|det J| times the reference one, so a single factorisation serves the
whole mesh.
"""

import logging
from functools import cached_property, lru_cache

import numpy as np

from .femspace import eval_basis
from .linalg import dense_solve
from .quadrature import triangle_rule

logging.basicConfig()
logger = logging.getLogger('nvdg.projection')


@lru_cache(maxsize=None)
def _reference_mass(degree, quad_degree):
    rule = triangle_rule(quad_degree)
    phi = eval_basis(degree, rule.points, 0).values
    mass = np.einsum('q,qi,qj->ij', rule.weights, phi, phi)
    inverse = dense_solve(mass, np.eye(mass.shape[0]))
    for a in (phi, mass, inverse):
        a.setflags(write=False)
    return rule, phi, mass, inverse


class LocalProjector:
    """Reference tables are shared between projectors of equal degrees; the
    physical points are only mapped when a whole-mesh projection asks for them.
    """

    def __init__(self, space, quad_degree=None):
        logger.debug(f"({space=}, {quad_degree=})")
        self.space = space
        (self.rule, self.phi, self.reference_mass,
         self.inverse_reference_mass) = _reference_mass(space.degree,
                                                        int(quad_degree or space.quad_degree))
        self.abs_det = np.abs(space.det)

    @cached_property
    def points(self):
        x0, jac = self.space.origins, self.space.jacobians
        return x0[:, None, :] + np.einsum('eab,qb->eqa', jac, self.rule.points)

    def element_points(self, element):
        x0, jac = self.space.origins[element], self.space.jacobians[element]
        return x0 + self.rule.points @ jac.T

    def mass(self, element):
        return self.abs_det[element] * self.reference_mass

    def inverse_mass(self, element):
        return self.inverse_reference_mass / self.abs_det[element]

    def moments(self, values):
        """Reference-scaled moments sum_q w_q phi_i(x_q) v(x_q).

        `values` has shape (ne, nq, ...); the result (ne, nloc, ...).
        """
        return np.einsum('q,qi,eq...->ei...', self.rule.weights, self.phi, values)

    def project_values(self, values):
        """Coefficients (ne, nloc, ...) of the projection of sampled data."""
        return np.einsum('il,el...->ei...', self.inverse_reference_mass, self.moments(values))

    def project(self, field):
        return self.project_values(np.asarray(field(self.points), dtype=float))


def project_scalar(space, element, field, quad_degree=None):
    """P_k coefficients on one element of the projection of `field`."""
    logger.debug(f"({element=})")
    proj = LocalProjector(space, quad_degree)
    values = np.asarray(field(proj.element_points(element)), dtype=float)
    rhs = proj.abs_det[element] * np.einsum('q,qi,q->i', proj.rule.weights, proj.phi, values)
    return dense_solve(proj.mass(element), rhs)


def project_matrix_times_basis(space, element, coefficient, j, quad_degree=None):
    """Coefficients (2, 2, nloc) of Pi(phi_j A) on one element."""
    logger.debug(f"({element=}, {j=})")
    proj = LocalProjector(space, quad_degree)
    a = coefficient.matrix(proj.element_points(element))
    values = proj.phi[:, j, None, None] * a
    rhs = proj.abs_det[element] * np.einsum('q,qi,qab->abi', proj.rule.weights, proj.phi, values)
    return np.moveaxis(dense_solve(proj.mass(element), np.moveaxis(rhs, -1, 0).reshape(space.n_loc, -1))
                       .reshape(space.n_loc, 2, 2), 0, -1)


def matrix_basis_coefficients(space, coefficient, quad_degree=None):
    """C[e, i, a, b, l]: coefficient l of Pi(phi_i A_ab) on element e, for all
    elements and basis functions at once.
    """
    logger.debug(f"({space=})")
    proj = LocalProjector(space, quad_degree)
    a = coefficient.matrix(proj.points)
    moments = np.einsum('q,qm,qi,eqab->eiabm', proj.rule.weights, proj.phi, proj.phi, a)
    return np.einsum('lm,eiabm->eiabl', proj.inverse_reference_mass, moments)


def project_function(space, field, quad_degree=None):
    """Global coefficient vector of the elementwise projection of `field`."""
    logger.debug(f"({space=})")
    coeffs = LocalProjector(space, quad_degree).project(field)
    return coeffs.reshape(space.n_dofs)


def project_coefficient(space0, coefficient):
    """Elementwise mean A_h of the coefficient matrix, shape (ne, 2, 2)."""
    if space0.degree != 0:
        raise ValueError(f"A_h lives in the degree 0 space, got degree {space0.degree}")
    proj = LocalProjector(space0, 4)
    return proj.project(coefficient.matrix)[:, 0]
