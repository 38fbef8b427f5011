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

from nvdg.problems import (BenchmarkProblem, bump_solution, diagonal_field, identity_field,
                           nondivergence_forcing, sine_solution)

logging.basicConfig()
logger = logging.getLogger('nvdg.problems.constant')


def register(config):
    return [{'problem': 'laplace',
             'alias': ['poisson'],
             'help': 'LAPLACE: A = I, u = sin(pi x) sin(pi y)'
             },
            {'problem': 'constant',
             'alias': ['diag'],
             'help': 'CONSTANT: A = diag(1, 2), u = sin(pi x) sin(pi y)'
             },
            {'problem': 'test3a-laplace',
             'alias': ['3a-laplace'],
             'help': 'TEST3A-LAPLACE: A = I with the cosine bump solution of TEST3A'
             }]


def build(problem_id):
    logger.debug(f"({problem_id=})")
    if problem_id == 'laplace':
        coefficient, solution = identity_field(), sine_solution()
    elif problem_id == 'constant':
        coefficient, solution = diagonal_field(2.0), sine_solution()
    elif problem_id == 'test3a-laplace':
        coefficient, solution = identity_field(), bump_solution()
    else:
        raise KeyError(f"{problem_id!r} is not provided by {__name__}")

    helps = {info['problem']: info['help'] for info in register(None)}
    return BenchmarkProblem(problem_id, coefficient, solution,
                            nondivergence_forcing(coefficient, solution),
                            regularity="constant coefficient", help=helps[problem_id])
