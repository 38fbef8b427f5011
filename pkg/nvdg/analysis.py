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
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.sparse as sp

from . import utils
from .assembly import BilinearFormConfig, assemble, bilinear_form, condense, solve
from .femspace import DGSpace
from .hessian import FluxChoice, assemble_hessian, lifting_matrices
from .linalg import SolverConfig
from .mesh import build_criss_cross, refine

logging.basicConfig()
logger = logging.getLogger('nvdg.analysis')

COARSE_CELLS = 8

CSV_COLUMNS = ["elements", "l2_error", "l2_eoc", "energy_error", "energy_eoc", "iterations"]


def _error_degree(space):
    return 2 * space.degree + 4


def l2_error(u_h, solution, mesh, space, quad_degree=None):
    """||u - u_h||_{L2}, integrated above the assembly order."""
    logger.debug(f"({mesh=}, {space=})")
    et = space.element_tables(quad_degree or _error_degree(space))
    diff = np.asarray(solution(et.points), dtype=float) - space.evaluate(u_h, et)
    return float(np.sqrt(np.einsum('eq,eq->', et.weights, diff ** 2)))


def _jump_terms(space, v, degree, boundary_data=None):
    """Per-face integrals of |[[v]]|^2 and |[[grad v]]|^2, boundary data
    subtracted on dOmega when given.
    """
    ft = space.face_tables(degree)
    jump_v = np.einsum('fs,fsq->fq', ft.jump, space.face_traces(v, ft))
    jump_g = np.einsum('fs,fsqa->fqa', ft.jump, space.face_gradient_traces(v, ft))
    if boundary_data is not None:
        bnd = ~ft.interior
        jump_v[bnd] -= boundary_data(ft.points[bnd])
    return (ft, np.einsum('fq,fq->f', ft.weights, jump_v ** 2),
            np.einsum('fq,fqa->f', ft.weights, jump_g ** 2))


def energy_norm_1(v, mesh, space, include_boundary=False):
    """|||v|||_1^2 = ||grad_h v||^2 + sum_E h^-1 ||[[v]]||^2."""
    logger.debug(f"({mesh=}, {space=}, {include_boundary=})")
    degree = _error_degree(space)
    et = space.element_tables(degree)
    grad = space.evaluate_gradient(v, et)
    total = np.einsum('eq,eqa,eqa->', et.weights, grad, grad)
    ft, jv, _ = _jump_terms(space, v, degree)
    faces = ft.interior | include_boundary
    total += np.sum(jv[faces] / ft.lengths[faces])
    return float(np.sqrt(total))


def energy_error(u_h, solution, mesh, space, include_boundary=False):
    """|||u - u_h|||_1 with u continuous, so only u_h jumps inside."""
    logger.debug(f"({mesh=}, {space=}, {include_boundary=})")
    degree = _error_degree(space)
    et = space.element_tables(degree)
    diff = np.asarray(solution.gradient(et.points)) - space.evaluate_gradient(u_h, et)
    total = np.einsum('eq,eqa,eqa->', et.weights, diff, diff)
    ft, jv, _ = _jump_terms(space, u_h, degree, boundary_data=solution.value)
    faces = ft.interior | include_boundary
    total += np.sum(jv[faces] / ft.lengths[faces])
    return float(np.sqrt(total))


def energy_norm_2(v, mesh, space, include_boundary=False):
    """|||v|||_2^2 = ||D_h^2 v||^2 + h^-1 ||[[grad v]]||^2 + h^-3 ||[[v]]||^2."""
    logger.debug(f"({mesh=}, {space=}, {include_boundary=})")
    degree = _error_degree(space)
    et = space.element_tables(degree)
    hess = space.evaluate_hessian(v, et)
    total = np.einsum('eq,eqab,eqab->', et.weights, hess, hess)
    ft, jv, jg = _jump_terms(space, v, degree)
    inner = ft.interior
    total += np.sum(jg[inner] / ft.lengths[inner]) + np.sum(jv[inner] / ft.lengths[inner] ** 3)
    if include_boundary:
        total += np.sum(jv[~inner] / ft.lengths[~inner] ** 3)
    return float(np.sqrt(total))


def energy_matrix_1(space, include_boundary=False):
    """Sparse E with v^T E v = |||v|||_1^2."""
    logger.debug(f"({space=}, {include_boundary=})")
    et = space.element_tables()
    ft = space.face_tables()
    n_loc = space.n_loc
    local = np.arange(n_loc)

    blocks = [np.einsum('eq,eqia,eqja->eij', et.weights, et.gradients, et.gradients)]
    rows_el = [np.arange(space.n_elements)]
    cols_el = [np.arange(space.n_elements)]
    faces = ft.interior | include_boundary
    for s in (0, 1):
        for t in (0, 1):
            w = ft.jump[faces, s] * ft.jump[faces, t] / ft.lengths[faces]
            blocks.append(np.einsum('f,fq,fqi,fqj->fij', w, ft.weights[faces],
                                    ft.values[faces, s], ft.values[faces, t]))
            rows_el.append(ft.elements[faces, s])
            cols_el.append(ft.elements[faces, t])

    blocks = np.concatenate(blocks)
    rows_el = np.concatenate(rows_el)
    cols_el = np.concatenate(cols_el)
    rows = np.broadcast_to(rows_el[:, None, None] * n_loc + local[:, None], blocks.shape)
    cols = np.broadcast_to(cols_el[:, None, None] * n_loc + local[None, :], blocks.shape)
    return sp.coo_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(space.n_dofs, space.n_dofs)).tocsr()


def coercivity_samples(system, n_samples=100, seed=0):
    """B_h(v, v) / |||v|||_1^2 for random v (boundary jumps included)."""
    logger.debug(f"({n_samples=}, {seed=})")
    rng = np.random.default_rng(seed)
    energy = energy_matrix_1(system.space, include_boundary=True)
    k = condense(system).matrix
    out = np.empty(n_samples)
    for i in range(n_samples):
        v = rng.standard_normal(system.space.n_dofs)
        out[i] = (v @ k.matvec(v)) / (v @ (energy @ v))
    return out


def coercivity_constant(system):
    """Smallest generalised eigenvalue of sym(K) against the |||.|||_1 Gram
    matrix, i.e. min_v B_h(v, v) / |||v|||_1^2. Dense, small meshes only.
    """
    logger.debug(f"({system.space=})")
    k = condense(system).matrix.to_dense()
    energy = energy_matrix_1(system.space, include_boundary=True).toarray()
    lowest = scipy.linalg.eigh(0.5 * (k + k.T), energy, eigvals_only=True,
                               subset_by_index=[0, 0])
    return float(lowest[0])


def continuity_constant(system, n_pairs=50, seed=0):
    """max |B_h(v, w)| / (|||v|||_1 |||w|||_1) over random pairs."""
    logger.debug(f"({n_pairs=}, {seed=})")
    rng = np.random.default_rng(seed)
    energy = energy_matrix_1(system.space, include_boundary=True)
    worst = 0.0
    for _ in range(n_pairs):
        v = rng.standard_normal(system.space.n_dofs)
        w = rng.standard_normal(system.space.n_dofs)
        nv = np.sqrt(v @ (energy @ v))
        nw = np.sqrt(w @ (energy @ w))
        worst = max(worst, abs(bilinear_form(system, v, w)) / (nv * nw))
    return float(worst)


def stability_constant(space, n_samples=20, seed=0, theta=1.0):
    """max ||H[v]|| / |||v|||_2 over random v."""
    logger.debug(f"({space=}, {n_samples=}, {seed=})")
    rng = np.random.default_rng(seed)
    flux = FluxChoice(theta=theta)
    lifting = lifting_matrices(space, theta)
    worst = 0.0
    for _ in range(n_samples):
        v = rng.standard_normal(space.n_dofs)
        h = assemble_hessian(space, v, flux, lifting)
        worst = max(worst, h.l2_norm() / energy_norm_2(v, space.mesh, space, include_boundary=True))
    return float(worst)


def eoc(errors):
    """log2 of consecutive error ratios; the first entry has none."""
    errors = list(errors)
    rates = [None] if errors else []
    for prev, cur in zip(errors, errors[1:]):
        rates.append(float(np.log2(prev / cur)) if prev > 0 and cur > 0 else None)
    return rates


@dataclass
class LevelResult:
    level: int
    n_elements: int
    n_dofs: int
    h: float
    l2_error: float
    energy_error: float
    energy_error_boundary: float
    iterations: int
    residual: float
    seconds: float


@dataclass
class ConvergenceReport:
    problem: str
    degree: int
    sigma: float
    theta: float
    form: str = "eliminated"
    rows: List[LevelResult] = field(default_factory=list)
    aborted: bool = False
    failure: Optional[str] = None

    @property
    def l2_eocs(self):
        return eoc(r.l2_error for r in self.rows)

    @property
    def energy_eocs(self):
        return eoc(r.energy_error for r in self.rows)

    def to_frame(self):
        return pd.DataFrame({
            "elements": [r.n_elements for r in self.rows],
            "l2_error": [r.l2_error for r in self.rows],
            "l2_eoc": [np.nan if e is None else e for e in self.l2_eocs],
            "energy_error": [r.energy_error for r in self.rows],
            "energy_eoc": [np.nan if e is None else e for e in self.energy_eocs],
            "iterations": [r.iterations for r in self.rows],
        }, columns=CSV_COLUMNS)

    def to_csv(self):
        return self.to_frame().to_csv(index=False, float_format="%.12g", na_rep="",
                                      lineterminator="\n")

    def to_markdown(self):
        header = (f"{self.problem}, k={self.degree}, sigma={self.sigma:g}, "
                  f"theta={self.theta:g}, {self.form} form")
        frame = self.to_frame()
        cells = [CSV_COLUMNS]
        for rec in frame.itertuples(index=False):
            cells.append([_md_cell(v) for v in rec])
        widths = [max(len(row[i]) for row in cells) for i in range(len(CSV_COLUMNS))]
        lines = [f"**{header}**", ""]
        lines.append("| " + " | ".join(c.rjust(w) for c, w in zip(cells[0], widths)) + " |")
        lines.append("|" + "|".join("-" * (w + 1) + ":" for w in widths) + "|")
        for row in cells[1:]:
            lines.append("| " + " | ".join(c.rjust(w) for c, w in zip(row, widths)) + " |")
        if self.aborted:
            lines += ["", f"aborted: {self.failure}"]
        return "\n".join(lines) + "\n"

    def render(self, fmt):
        if fmt == "csv":
            return self.to_csv()
        if fmt == "markdown":
            return self.to_markdown()
        raise ValueError(f"unknown report format {fmt!r}")


def _md_cell(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ""
    return "%.6g" % value


def run_study(problem, k, levels, cfg=None, solver_cfg=None, on_level: Callable = None):
    """Solve on n = 8 * 2^l cells per side for l < levels and tabulate errors.

    `on_level(level, mesh, space, system)` is called after each assembly.
    A solver failure ends the study with a partial, `aborted` report.
    """
    logger.debug(f"({problem.id=}, {k=}, {levels=}, {cfg=}, {solver_cfg=})")
    cfg = cfg or BilinearFormConfig()
    solver_cfg = solver_cfg or SolverConfig()
    if levels < 1:
        raise ValueError(f"need at least one level, got {levels}")

    report = ConvergenceReport(problem.id, k, cfg.sigma, cfg.theta, cfg.form)
    mesh = build_criss_cross(COARSE_CELLS)
    for level in range(levels):
        if level > 0:
            mesh = refine(mesh)
        started = time.monotonic()
        space = DGSpace(mesh, k, cfg.quad_degree)
        system = assemble(mesh, space, problem.coefficient, problem.f, cfg)
        if on_level is not None:
            on_level(level, mesh, space, system)
        u_h, solver_report = solve(system, solver_cfg)
        if not solver_report.converged:
            report.aborted = True
            report.failure = (f"level {level} ({mesh.n_elements} elements): {solver_report.reason}, "
                              f"residual {solver_report.residual:.3e} after "
                              f"{solver_report.iterations} iterations")
            logger.error(f"study aborted at {report.failure}")
            break

        row = LevelResult(
            level=level, n_elements=mesh.n_elements, n_dofs=space.n_dofs, h=mesh.h,
            l2_error=l2_error(u_h, problem.solution, mesh, space),
            energy_error=energy_error(u_h, problem.solution, mesh, space),
            energy_error_boundary=energy_error(u_h, problem.solution, mesh, space,
                                               include_boundary=True),
            iterations=solver_report.iterations, residual=solver_report.residual,
            seconds=time.monotonic() - started)
        report.rows.append(row)
        logger.info(f"{problem.id} k={k} level {level}: {row.n_elements} elements, "
                    f"L2 {row.l2_error:.6e}, energy {row.energy_error:.6e}, "
                    f"{row.iterations} iterations in {utils.human_time_interval(row.seconds)}")
    return report
