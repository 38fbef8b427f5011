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

import argparse
import logging
import os
import sys

from . import utils
from .analysis import run_study
from .config import (FORMATS, ConfigError, RunConfig, load_config, values_from_config)
from .linalg import PRECONDITIONERS, write_matrix_market
from .mesh import write_off
from .problems import ProblemRegistry

logging.basicConfig()
logger = logging.getLogger('nvdg.cli')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

EPILOG = """\
exit codes:
  0  study finished, table written
  1  solver failure (partial table written) or output error
  2  invalid command line or configuration

Precedence: built-in defaults < --config INI file < NVDG_THREADS < flags.
"""


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nvdg",
        description="Convergence studies for the discontinuous Galerkin method for "
                    "nonvariational elliptic problems -A : D^2 u = f.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--test", help="benchmark id: 1, 2, 3a, 3b (or a registered problem name)")
    parser.add_argument("--degree", type=int, choices=(1, 2), help="polynomial degree k (default 1)")
    parser.add_argument("--levels", type=int, help="refinement levels, 1-8 (default 5)")
    parser.add_argument("--sigma", type=float, help="penalty parameter (default 20)")
    parser.add_argument("--theta", type=int, choices=(-1, 1), help="flux symmetry parameter (default 1)")
    parser.add_argument("--form", choices=("eliminated", "mixed"), help="system form (default eliminated)")
    parser.add_argument("--quad-degree", type=int, help="quadrature exactness (default 2k+2)")
    parser.add_argument("--tol", type=float, help="relative residual tolerance (default 1e-12)")
    parser.add_argument("--max-iter", type=int, help="BiCGSTAB iteration cap (default 10 n)")
    parser.add_argument("--precond", choices=PRECONDITIONERS, help="preconditioner (default ilu0)")
    parser.add_argument("--format", choices=FORMATS, help="report format (default csv)")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--dump-matrix", action="store_true", default=None,
                        help="write the level 0 system matrix in MatrixMarket format")
    parser.add_argument("--dump-mesh", action="store_true", default=None,
                        help="write the level 0 mesh as an OFF listing")
    parser.add_argument("--dump-dir", help="directory for dumps (default .)")
    parser.add_argument("--threads", type=int, help="cap on worker threads (env NVDG_THREADS)")
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--log-level", type=str.upper, help="logging level (default WARNING)")
    parser.add_argument("--sentry-dsn", help="report errors to this Sentry DSN")
    return parser


def parse_args(argv=None, environ=None):
    """Layer defaults, INI file, environment and flags into a RunConfig.

    Exits with status 2 on any usage error.
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        parser.exit(EXIT_USAGE, "nvdg: error: no arguments given, see --help\n")
    args = parser.parse_args(argv)

    values = dict()
    try:
        if args.config:
            values.update(values_from_config(load_config(args.config)))
        if args.threads is None:
            env_threads = utils.threads_from_env(environ)
            if env_threads is not None:
                values["threads"] = env_threads
        for name, value in vars(args).items():
            if name != "config" and value is not None:
                values[name] = value
        cfg = RunConfig(**values)
    except (ConfigError, ValueError) as exc:
        parser.error(str(exc))

    if cfg.test is None:
        parser.error("--test is required")
    registry = ProblemRegistry(problem_dir=cfg.problem_dir)
    if cfg.test not in registry.aliases():
        parser.error(f"unknown test {cfg.test!r}, expected one of {', '.join(registry.aliases())}")
    return cfg


def _dump_name(cfg, problem_id, ext):
    return os.path.join(cfg.dump_dir, f"{problem_id}-k{cfg.degree}-level0.{ext}")


def main(cfg):
    """Run the study described by `cfg`; returns the process exit code."""
    logging.getLogger('nvdg').setLevel(cfg.log_level.upper())
    logger.debug(f"({cfg=})")

    # enable Sentry error capturing if DSN is specified
    if cfg.sentry_dsn:
        import sentry_sdk
        sentry_sdk.init(dsn=cfg.sentry_dsn)

    threads = utils.set_threads(cfg.threads)
    logger.info(f"running with {threads} threads")

    try:
        problem = ProblemRegistry(problem_dir=cfg.problem_dir).build(cfg.test)
    except KeyError as exc:
        logger.error(exc)
        return EXIT_USAGE

    def dump(level, mesh, space, system):
        if level != 0:
            return
        if cfg.dump_matrix or cfg.dump_mesh:
            os.makedirs(cfg.dump_dir, exist_ok=True)
        if cfg.dump_matrix:
            path = _dump_name(cfg, problem.id, "mtx")
            write_matrix_market(system.matrix, path)
            logger.info(f"matrix written to {path}")
        if cfg.dump_mesh:
            path = _dump_name(cfg, problem.id, "off")
            write_off(mesh, path)
            logger.info(f"mesh written to {path}")

    try:
        report = run_study(problem, cfg.degree, cfg.levels, cfg.form_config(),
                           cfg.solver_config(), on_level=dump)
    except OSError as exc:
        logger.error(f"cannot write dump to {exc.filename}: {exc.strerror}")
        return EXIT_FAILURE

    text = report.render(cfg.format)
    if cfg.out:
        try:
            with open(cfg.out, "w") as fp:
                fp.write(text)
        except OSError as exc:
            logger.error(f"cannot write report to {cfg.out}: {exc.strerror}")
            return EXIT_FAILURE
    else:
        sys.stdout.write(text)

    if report.aborted:
        logger.error(f"solver failure: {report.failure}")
        return EXIT_FAILURE
    return EXIT_OK


def run(argv=None):
    return main(parse_args(argv))
