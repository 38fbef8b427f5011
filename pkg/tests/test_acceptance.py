"""Full convergence studies on the benchmark problems.

These run five or six refinement levels (up to 131072 elements) and are
deselected by default; run them with `pytest -m slow`.
"""

import numpy as np
import pytest

from nvdg.analysis import run_study
from nvdg.assembly import BilinearFormConfig
from nvdg.femspace import DGSpace
from nvdg.hessian import stability_bound_check
from nvdg.mesh import build_criss_cross, refine
from nvdg.problems import get_problem

pytestmark = pytest.mark.slow


def study(name, k, levels, **kwargs):
    report = run_study(get_problem(name), k, levels, BilinearFormConfig(**kwargs))
    assert not report.aborted, report.failure
    assert len(report.rows) == levels
    return report


@pytest.mark.parametrize("name, k, l2_rate, energy_rate", [
    ("test1", 1, 1.99578, 0.999456),
    ("test1", 2, 2.99893, 1.99916),
    ("test2", 1, 1.99832, 0.999507),
    ("test2", 2, 2.99841, 1.99904),
])
def test_optimal_rates(name, k, l2_rate, energy_rate):
    report = study(name, k, 5)
    assert report.l2_eocs[-1] == pytest.approx(l2_rate, abs=0.05)
    assert report.energy_eocs[-1] == pytest.approx(energy_rate, abs=0.05)
    assert report.energy_eocs[-1] >= k - 0.1


def test_error_magnitudes_on_the_finest_mesh():
    report = study("test1", 1, 5)
    finest = report.rows[-1]
    assert finest.n_elements == 32768
    assert 8.07e-05 / 2 < finest.l2_error < 8.07e-05 * 2
    assert 0.0263 / 2 < finest.energy_error < 0.0263 * 2
    assert 0.0196 / 10 < report.rows[0].l2_error < 0.0196 * 10


def test_printed_rates_recompute_from_errors():
    report = study("test2", 1, 3)
    for prev, cur, rate in zip(report.rows, report.rows[1:], report.l2_eocs[1:]):
        assert rate == pytest.approx(np.log2(prev.l2_error / cur.l2_error), abs=1e-6)


def test_bump_solution_energy_rate():
    report = study("test3a", 1, 5)
    assert report.energy_eocs[-1] == pytest.approx(1.0, abs=0.2)


def test_corner_singularity_energy_rate():
    report = study("test3b", 1, 6)
    assert report.energy_eocs[-1] == pytest.approx(0.924, abs=0.05)


@pytest.mark.parametrize("form", ["eliminated", "mixed"])
def test_forms_give_the_same_table(form):
    reference = study("test1", 2, 3)
    report = study("test1", 2, 3, form=form)
    for a, b in zip(reference.rows, report.rows):
        assert b.energy_error == pytest.approx(a.energy_error, rel=1e-6)


def test_stability_constant_settles():
    mesh = build_criss_cross(4)
    constants = []
    for _ in range(4):
        space = DGSpace(mesh, 1)
        rng = np.random.default_rng(mesh.n_elements)
        constants.append(max(stability_bound_check(space, rng.standard_normal(space.n_dofs)).ratio
                             for _ in range(20)))
        mesh = refine(mesh)
    assert max(constants) < 2 * min(constants)
    assert abs(constants[-1] - constants[-2]) < 0.1 * constants[-2]
