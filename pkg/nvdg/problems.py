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
import os
import sys
from dataclasses import dataclass
from glob import glob
from importlib import import_module
from typing import Callable, Optional

import numpy as np

logging.basicConfig()
logger = logging.getLogger('nvdg.problems')

PROBLEM_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "problems")

COERCIVE = "coercive"
NONDIFFERENTIABLE = "nondifferentiable"


class EvaluationError(ValueError):
    pass


def _xy(points):
    points = np.asarray(points, dtype=float)
    return points[..., 0], points[..., 1]


@dataclass(frozen=True)
class CoefficientField:
    """A(x) = [[1, b], [b, a]] given through the closures a(x, y), b(x, y).

    `divergence` optionally returns the row divergence DA as (..., 2).
    `constant` marks elementwise constant fields.
    """
    a: Callable
    b: Callable
    name: str = ""
    smoothness: str = COERCIVE
    divergence: Optional[Callable] = None
    constant: bool = False

    def matrix(self, points):
        x, y = _xy(points)
        a = np.broadcast_to(self.a(x, y), x.shape)
        b = np.broadcast_to(self.b(x, y), x.shape)
        one = np.ones_like(x)
        return np.stack((np.stack((one, b), axis=-1),
                         np.stack((b, a), axis=-1)), axis=-2)

    def __call__(self, points):
        return self.matrix(points)

    def min_eigenvalue(self, points):
        x, y = _xy(points)
        a = self.a(x, y)
        b = self.b(x, y)
        return 0.5 * (1.0 + a) - np.sqrt((0.5 * (a - 1.0)) ** 2 + b ** 2)

    def gamma(self, samples=101):
        """Ellipticity estimate: smallest eigenvalue of A over a grid."""
        ticks = np.linspace(0.0, 1.0, samples)
        xx, yy = np.meshgrid(ticks, ticks)
        return float(np.min(self.min_eigenvalue(np.stack((xx, yy), axis=-1))))

    @property
    def is_identity(self):
        return self.name == "identity"


@dataclass(frozen=True)
class ExactSolution:
    value: Callable
    gradient: Callable
    hessian: Callable

    def __call__(self, points):
        return self.value(points)


@dataclass(frozen=True)
class BenchmarkProblem:
    id: str
    coefficient: CoefficientField
    solution: ExactSolution
    forcing: Callable
    regularity: str = ""
    help: str = ""

    def u(self, points):
        return self.solution.value(points)

    def f(self, points):
        return self.forcing(points)

    def pde_residual(self, points):
        """f + A : D^2 u, zero wherever u is a strong solution."""
        a = self.coefficient.matrix(points)
        h = self.solution.hessian(points)
        return self.f(points) + np.einsum('...ab,...ab->...', a, h)


# shared building blocks for the problem plugins

def identity_field():
    return CoefficientField(a=lambda x, y: np.ones_like(x), b=lambda x, y: np.zeros_like(x),
                            name="identity", divergence=lambda p: np.zeros(np.shape(p)),
                            constant=True)


def diagonal_field(a_value):
    return CoefficientField(a=lambda x, y: np.full_like(x, a_value),
                            b=lambda x, y: np.zeros_like(x),
                            name=f"diag(1,{a_value:g})",
                            divergence=lambda p: np.zeros(np.shape(p)), constant=True)


def log_field():
    """a = 1 - ln((x - 1/2)^2 + 1e-10), b = 0. Singular-looking ridge at x = 1/2."""
    return CoefficientField(a=lambda x, y: 1.0 - np.log((x - 0.5) ** 2 + 1e-10),
                            b=lambda x, y: np.zeros_like(x),
                            name="log-ridge", smoothness=COERCIVE,
                            divergence=lambda p: np.zeros(np.shape(p)))


def sine_solution():
    """u = sin(pi x) sin(pi y)."""
    pi = np.pi

    def value(points):
        x, y = _xy(points)
        return np.sin(pi * x) * np.sin(pi * y)

    def gradient(points):
        x, y = _xy(points)
        return pi * np.stack((np.cos(pi * x) * np.sin(pi * y),
                              np.sin(pi * x) * np.cos(pi * y)), axis=-1)

    def hessian(points):
        x, y = _xy(points)
        ss = np.sin(pi * x) * np.sin(pi * y)
        cc = np.cos(pi * x) * np.cos(pi * y)
        return pi ** 2 * np.stack((np.stack((-ss, cc), axis=-1),
                                   np.stack((cc, -ss), axis=-1)), axis=-2)

    return ExactSolution(value, gradient, hessian)


BUMP_RADIUS2 = 1.0 / 8.0


def bump_solution():
    """u = (cos(8 pi s) + 1) / 4 for s = |x - 1/2|^2 <= 1/8, zero outside."""
    w = 8.0 * np.pi

    def parts(points):
        x, y = _xy(points)
        dx, dy = x - 0.5, y - 0.5
        s = dx ** 2 + dy ** 2
        return dx, dy, s, s <= BUMP_RADIUS2

    def value(points):
        dx, dy, s, inside = parts(points)
        return np.where(inside, 0.25 * (np.cos(w * s) + 1.0), 0.0)

    def gradient(points):
        dx, dy, s, inside = parts(points)
        g = -4.0 * np.pi * np.sin(w * s)
        return np.where(inside[..., None], np.stack((g * dx, g * dy), axis=-1), 0.0)

    def hessian(points):
        dx, dy, s, inside = parts(points)
        sn = np.sin(w * s)
        cs = np.cos(w * s)
        c = 64.0 * np.pi ** 2
        hxx = -4.0 * np.pi * sn - c * dx ** 2 * cs
        hyy = -4.0 * np.pi * sn - c * dy ** 2 * cs
        hxy = -c * dx * dy * cs
        h = np.stack((np.stack((hxx, hxy), axis=-1),
                      np.stack((hxy, hyy), axis=-1)), axis=-2)
        return np.where(inside[..., None, None], h, 0.0)

    return ExactSolution(value, gradient, hessian)


def nondivergence_forcing(coefficient, solution):
    """f = -A : D^2 u with both factors given analytically."""
    def forcing(points):
        return -np.einsum('...ab,...ab->...', coefficient.matrix(points),
                          solution.hessian(points))
    return forcing


class ProblemRegistry:
    """Benchmark catalogue filled from the plugin modules in a directory.

    Each module exposes register(config) -> list of dicts with `problem`,
    `alias` and `help` keys, and build(problem_id) -> BenchmarkProblem.
    """

    def __init__(self, config=None, problem_dir=None):
        self.config = config
        self._problems = dict()
        self.register_problems(problem_dir or PROBLEM_DIR)

    def register_problems(self, problem_dir: str):
        logger.debug(f"({problem_dir=})")
        if problem_dir not in sys.path:
            sys.path.append(problem_dir)

        logger.info(f"Registering problems from {problem_dir}")
        for problem_file in sorted(glob(f"{problem_dir}/*.py")):
            base_file = os.path.basename(os.path.splitext(problem_file)[0])
            try:
                logger.debug(f'Registering {base_file}')
                mod = import_module(base_file)
                if hasattr(mod, 'logger'):
                    mod.logger.setLevel(logger.getEffectiveLevel())
                infos = mod.register(self.config)

                for info in infos:
                    logger.info(f"Registered problem: {info['problem']}")
                    info['module'] = mod
                    self._problems[info['problem']] = info
                    for also in info.get('alias', []):
                        self._problems[also] = info

            except Exception as e:
                logger.error(e)
                if logger.getEffectiveLevel() == logging.DEBUG:
                    raise e

    def ids(self):
        return sorted({info['problem'] for info in self._problems.values()})

    def aliases(self):
        return sorted(self._problems)

    def info(self, problem_id):
        try:
            return self._problems[str(problem_id)]
        except KeyError:
            raise KeyError(f"unknown problem {problem_id!r}, expected one of {self.aliases()}") from None

    def build(self, problem_id):
        logger.debug(f"({problem_id=})")
        info = self.info(problem_id)
        return info['module'].build(info['problem'])


_default_registry = None


def default_registry():
    global _default_registry
    if _default_registry is None:
        _default_registry = ProblemRegistry()
    return _default_registry


def get_problem(problem_id):
    return default_registry().build(problem_id)


def test1():
    return get_problem("test1")


def test2():
    return get_problem("test2")


def test3a():
    return get_problem("test3a")


def test3b():
    return get_problem("test3b")


# keep pytest from collecting the catalogue entries above
test1.__test__ = test2.__test__ = test3a.__test__ = test3b.__test__ = False
