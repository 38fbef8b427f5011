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

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

logging.basicConfig()
logger = logging.getLogger('nvdg.quadrature')


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference cell.

    The reference triangle is {(x, y): x, y >= 0, x + y <= 1} (measure 1/2),
    the reference segment is [0, 1].
    """
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def n_points(self):
        return self.weights.shape[0]

    @property
    def measure(self):
        return float(self.weights.sum())


def _points_per_axis(degree):
    return max(1, (int(degree) + 2) // 2)


@lru_cache(maxsize=None)
def segment_rule(degree):
    """Gauss-Legendre rule on [0, 1], exact for polynomials of `degree`."""
    if degree < 0:
        raise ValueError(f"Need positive degree, not {degree}")
    x, w = leggauss(_points_per_axis(degree))
    points = 0.5 * (x + 1.0)
    rule = QuadratureRule(points, 0.5 * w, int(degree))
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def _symmetric_orbit(bary, weight):
    """Distinct cyclic rotations of one barycentric point."""
    l0, l1, l2 = bary
    orbit = {(l0, l1, l2), (l1, l2, l0), (l2, l0, l1)}
    return [(l1, l2, weight) for l0, l1, l2 in sorted(orbit)]


def _closed_form_rule(degree):
    """Centroid, 3-point and Radon 7-point rules (exactness 1, 2 and 5)."""
    if degree <= 1:
        groups = [((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), 1.0)]
    elif degree == 2:
        groups = [((2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0), 1.0 / 3.0)]
    else:
        r = np.sqrt(15.0)
        a1, a2 = (6.0 - r) / 21.0, (6.0 + r) / 21.0
        groups = [((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), 9.0 / 40.0),
                  ((1.0 - 2.0 * a1, a1, a1), (155.0 - r) / 1200.0),
                  ((1.0 - 2.0 * a2, a2, a2), (155.0 + r) / 1200.0)]
    table = [p for bary, w in groups for p in _symmetric_orbit(bary, 0.5 * w)]
    table = np.array(table)
    return table[:, :2], table[:, 2]


def _collapsed_rule(degree):
    """Collapsed Gauss scheme: [0,1]^2 onto the triangle with x = u,
    y = v (1 - u), the Jacobian (1 - u) absorbed into a Gauss-Jacobi rule
    in u. The result is rotated through the three vertex labellings.
    """
    n = _points_per_axis(degree)

    xu, wu = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (xu + 1.0)
    wu = 0.25 * wu

    xv, wv = leggauss(n)
    v = 0.5 * (xv + 1.0)
    wv = 0.5 * wv

    uu, vv = np.meshgrid(u, v, indexing="ij")
    x = uu.ravel()
    y = (vv * (1.0 - uu)).ravel()
    weights = np.outer(wu, wv).ravel()

    # (x, y) -> (1 - x - y, x) -> (y, 1 - x - y) permute the vertices cyclically
    points = np.concatenate((np.column_stack((x, y)),
                             np.column_stack((1.0 - x - y, x)),
                             np.column_stack((y, 1.0 - x - y))))
    return points, np.tile(weights, 3) / 3.0


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Quadrature on the reference triangle exact for polynomials of `degree`.

    Low degrees use the classical symmetric rules, higher ones a collapsed
    Gauss scheme. Every rule maps onto itself under a cyclic relabelling of
    the vertices, so congruent elements are sampled at the same physical
    points whatever their local numbering. All points are strictly interior.
    """
    if degree < 0:
        raise ValueError(f"Need positive degree, not {degree}")
    if degree <= 5:
        points, weights = _closed_form_rule(degree)
    else:
        points, weights = _collapsed_rule(degree)

    rule = QuadratureRule(np.ascontiguousarray(points), np.ascontiguousarray(weights),
                          int(degree))
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    logger.debug(f"({degree=}) -> {rule.n_points} points")
    return rule
