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
Benchmarks whose exact solutions lack the smoothness the error bounds ask
for: a cosine bump in H^2 but not H^3, and a corner singularity in H^1 but
not H^2.
"""

import logging

import numpy as np

from nvdg.problems import (BenchmarkProblem, EvaluationError, ExactSolution,
                           bump_solution, log_field, nondivergence_forcing, _xy)

logging.basicConfig()
logger = logging.getLogger('nvdg.problems.irregular')


def corner_solution():
    """u = 100 x (1 - x) y (1 - y) / |x|, singular at the origin."""

    def parts(points):
        x, y = _xy(points)
        r = np.hypot(x, y)
        if np.any(r == 0.0):
            raise EvaluationError("the corner solution is not defined at the origin")
        p = 100.0 * x * (1 - x) * y * (1 - y)
        px = 100.0 * (1 - 2 * x) * y * (1 - y)
        py = 100.0 * x * (1 - x) * (1 - 2 * y)
        return x, y, r, p, px, py

    def value(points):
        x, y, r, p, px, py = parts(points)
        return p / r

    def gradient(points):
        x, y, r, p, px, py = parts(points)
        r3 = r ** 3
        return np.stack((px / r - x * p / r3, py / r - y * p / r3), axis=-1)

    def hessian(points):
        x, y, r, p, px, py = parts(points)
        pxx = -200.0 * y * (1 - y)
        pyy = -200.0 * x * (1 - x)
        pxy = 100.0 * (1 - 2 * x) * (1 - 2 * y)
        r3, r5 = r ** 3, r ** 5
        hxx = pxx / r - 2 * x * px / r3 - p / r3 + 3 * x ** 2 * p / r5
        hyy = pyy / r - 2 * y * py / r3 - p / r3 + 3 * y ** 2 * p / r5
        hxy = pxy / r - (y * px + x * py) / r3 + 3 * x * y * p / r5
        return np.stack((np.stack((hxx, hxy), axis=-1),
                         np.stack((hxy, hyy), axis=-1)), axis=-2)

    return ExactSolution(value, gradient, hessian)


def register(config):
    return [{'problem': 'test3a',
             'alias': ['3a'],
             'help': 'TEST3A: coefficient of TEST1, cosine bump u in H^2 but not H^3'
             },
            {'problem': 'test3b',
             'alias': ['3b'],
             'help': 'TEST3B: coefficient of TEST1, u = 100 x(1-x) y(1-y) / |x| in H^1 but not H^2'
             }]


def build(problem_id):
    logger.debug(f"({problem_id=})")
    coefficient = log_field()
    if problem_id == 'test3a':
        solution = bump_solution()
        regularity = "u in H^2 but not H^3"
    elif problem_id == 'test3b':
        solution = corner_solution()
        regularity = "u in H^1 but not H^2, singular at the origin"
    else:
        raise KeyError(f"{problem_id!r} is not provided by {__name__}")

    helps = {info['problem']: info['help'] for info in register(None)}
    return BenchmarkProblem(problem_id, coefficient, solution,
                            nondivergence_forcing(coefficient, solution),
                            regularity=regularity, help=helps[problem_id])
