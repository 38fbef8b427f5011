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

import numpy as np

from nvdg.problems import (BenchmarkProblem, CoefficientField, NONDIFFERENTIABLE,
                           sine_solution, _xy)

logging.basicConfig()
logger = logging.getLogger('nvdg.problems.nondifferentiable')


def off_diagonal(x, y):
    return np.cbrt(x ** 2 * y ** 2)


def divergence(points):
    # unbounded on the axes
    x, y = _xy(points)
    with np.errstate(divide="ignore"):
        return (2.0 / 3.0) * np.stack((np.cbrt(x ** 2) / np.cbrt(y),
                                       np.cbrt(y ** 2) / np.cbrt(x)), axis=-1)


def register(config):
    return [{'problem': 'test2',
             'alias': ['2'],
             'help': 'TEST2: a = 2, b = (x^2 y^2)^(1/3), u = sin(pi x) sin(pi y)'
             }]


def build(problem_id):
    logger.debug(f"({problem_id=})")
    coefficient = CoefficientField(a=lambda x, y: np.full_like(x, 2.0), b=off_diagonal,
                                   name="cube-root", smoothness=NONDIFFERENTIABLE,
                                   divergence=divergence)
    solution = sine_solution()

    def forcing(points):
        x, y = _xy(points)
        ss = np.sin(np.pi * x) * np.sin(np.pi * y)
        cc = np.cos(np.pi * x) * np.cos(np.pi * y)
        return np.pi ** 2 * (3.0 * ss - 2.0 * off_diagonal(x, y) * cc)

    return BenchmarkProblem('test2', coefficient, solution, forcing,
                            regularity="smooth u, A continuous but not differentiable",
                            help=register(None)[0]['help'])
