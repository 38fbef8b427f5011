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

from nvdg.problems import BenchmarkProblem, log_field, sine_solution, _xy

logging.basicConfig()
logger = logging.getLogger('nvdg.problems.coercive')


def register(config):
    return [{'problem': 'test1',
             'alias': ['1'],
             'help': 'TEST1: a = 1 - ln((x-1/2)^2 + 1e-10), b = 0, u = sin(pi x) sin(pi y)'
             }]


def build(problem_id):
    logger.debug(f"({problem_id=})")
    coefficient = log_field()
    solution = sine_solution()

    def forcing(points):
        x, y = _xy(points)
        return (np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y)
                * (1.0 + coefficient.a(x, y)))

    return BenchmarkProblem('test1', coefficient, solution, forcing,
                            regularity="smooth u, coercive operator",
                            help=register(None)[0]['help'])
