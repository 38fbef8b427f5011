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

import configparser
import logging
import os
from dataclasses import dataclass, fields
from typing import Optional

from .assembly import FORMS, BilinearFormConfig
from .linalg import PRECONDITIONERS, SolverConfig

logging.basicConfig()
logger = logging.getLogger('nvdg.config')

FORMATS = ("csv", "markdown")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
MAX_LEVELS = 8


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    test: Optional[str] = None
    degree: int = 1
    levels: int = 5
    sigma: float = 20.0
    theta: int = 1
    form: str = "eliminated"
    quad_degree: Optional[int] = None
    tol: float = 1e-12
    precond: str = "ilu0"
    max_iter: Optional[int] = None
    format: str = "csv"
    out: Optional[str] = None
    dump_matrix: bool = False
    dump_mesh: bool = False
    dump_dir: str = "."
    threads: Optional[int] = None
    log_level: str = "WARNING"
    sentry_dsn: Optional[str] = None
    problem_dir: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.degree not in (1, 2):
            raise ConfigError(f"degree must be 1 or 2, got {self.degree}")
        if not 1 <= self.levels <= MAX_LEVELS:
            raise ConfigError(f"levels must be between 1 and {MAX_LEVELS}, got {self.levels}")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if self.theta not in (-1, 1):
            raise ConfigError(f"theta must be -1 or 1, got {self.theta}")
        if self.form not in FORMS:
            raise ConfigError(f"form must be one of {', '.join(FORMS)}, got {self.form!r}")
        if self.quad_degree is not None and self.quad_degree < 2 * self.degree + 2:
            raise ConfigError(f"quad_degree must be at least {2 * self.degree + 2}, "
                              f"got {self.quad_degree}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.precond not in PRECONDITIONERS:
            raise ConfigError(f"precond must be one of {', '.join(PRECONDITIONERS)}, "
                              f"got {self.precond!r}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigError(f"max_iter must be positive, got {self.max_iter}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}, got {self.format!r}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")
        if self.log_level.upper() not in LOG_LEVELS:
            raise ConfigError(f"log level must be one of {', '.join(LOG_LEVELS)}, "
                              f"got {self.log_level!r}")

    def form_config(self):
        return BilinearFormConfig(sigma=self.sigma, theta=self.theta,
                                  quad_degree=self.quad_degree, form=self.form)

    def solver_config(self):
        return SolverConfig(tol=self.tol, precond=self.precond, max_iter=self.max_iter)


# INI section/option -> (RunConfig field, type)
INI_OPTIONS = {
    ("study", "test"): ("test", str),
    ("study", "degree"): ("degree", int),
    ("study", "levels"): ("levels", int),
    ("study", "problem_dir"): ("problem_dir", str),
    ("method", "sigma"): ("sigma", float),
    ("method", "theta"): ("theta", int),
    ("method", "form"): ("form", str),
    ("method", "quad_degree"): ("quad_degree", int),
    ("solver", "tol"): ("tol", float),
    ("solver", "precond"): ("precond", str),
    ("solver", "max_iter"): ("max_iter", int),
    ("output", "format"): ("format", str),
    ("output", "out"): ("out", str),
    ("output", "dump_matrix"): ("dump_matrix", bool),
    ("output", "dump_mesh"): ("dump_mesh", bool),
    ("output", "dump_dir"): ("dump_dir", str),
    ("runtime", "threads"): ("threads", int),
    ("logging", "level"): ("log_level", str),
    ("sentry", "dsn"): ("sentry_dsn", str),
}


def load_config(path):
    logger.debug(f"({path=})")
    config = configparser.ConfigParser()
    config.optionxform = str # config values are case sensitive
    if not os.path.isfile(path):
        raise ConfigError(f"cannot read configuration file {path}")
    try:
        config.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config


def values_from_config(config):
    """RunConfig overrides found in a parsed INI file."""
    values = dict()
    for (section, option), (name, kind) in INI_OPTIONS.items():
        if not config.has_option(section, option):
            continue
        raw = config.get(section, option)
        if raw.strip() == "":
            continue
        try:
            if kind is bool:
                values[name] = config.getboolean(section, option)
            else:
                values[name] = kind(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {option} = {raw!r} is not a valid "
                              f"{kind.__name__}") from None
    return values


def run_config_fields():
    return [f.name for f in fields(RunConfig)]
