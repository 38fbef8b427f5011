import numpy as np
import pytest
import scipy.linalg
import scipy.sparse.linalg as spla

from nvdg.analysis import energy_error, energy_matrix_1, l2_error
from nvdg.assembly import (MIXED, BilinearFormConfig, assemble, assemble_eliminated,
                           assemble_mixed, bilinear_form, condense, error_functional,
                           galerkin_orthogonality_residual, recover_hessian, solve)
from nvdg.femspace import DGSpace
from nvdg.hessian import FluxChoice, assemble_hessian
from nvdg.linalg import SolverConfig
from nvdg.mesh import Mesh, build_criss_cross, refine
from nvdg.problems import get_problem, identity_field

GAUSS = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


def sipg_laplacian(mesh, sigma, theta=1.0):
    """Piecewise linear interior penalty Laplacian built face by face from
    barycentric coordinates.
    """
    n = 3 * mesh.n_elements
    k = np.zeros((n, n))

    def barycentric(e):
        p = mesh.vertices[mesh.elements[e]]
        coeffs = np.linalg.solve(np.column_stack((np.ones(3), p)), np.eye(3))
        return coeffs[0], coeffs[1:].T        # values at the origin, gradients (3, 2)

    def values(e, x):
        c0, grads = barycentric(e)
        return c0 + grads @ x

    for e in range(mesh.n_elements):
        _, grads = barycentric(e)
        area = mesh.signed_areas[e]
        dofs = slice(3 * e, 3 * e + 3)
        k[dofs, dofs] += area * grads @ grads.T

    for face in mesh.faces:
        a, b = mesh.vertices[list(face.vertices)]
        normal = np.array(face.normal)
        elems = face.elements
        signs = (1.0, -1.0) if face.is_interior else (1.0,)
        weights = (0.5, 0.5) if face.is_interior else (1.0,)
        for t in GAUSS:
            x = a + t * (b - a)
            w = 0.5 * face.length
            for es, sgn_s, avg_s in zip(elems, signs, weights):
                for et, sgn_t, avg_t in zip(elems, signs, weights):
                    phi_s = values(es, x)
                    phi_t = values(et, x)
                    dn_s = barycentric(es)[1] @ normal
                    dn_t = barycentric(et)[1] @ normal
                    # rows test with es, columns trial with et
                    block = (-np.outer(sgn_s * phi_s, avg_t * dn_t)
                             - theta * np.outer(avg_s * dn_s, sgn_t * phi_t)
                             + sigma / face.length * np.outer(sgn_s * phi_s, sgn_t * phi_t))
                    k[3 * es:3 * es + 3, 3 * et:3 * et + 3] += w * block
    return k


def laplace_system(n, k, **kwargs):
    mesh = build_criss_cross(n)
    space = DGSpace(mesh, k)
    problem = get_problem("laplace")
    return assemble_eliminated(mesh, space, identity_field(), problem.f,
                               BilinearFormConfig(**kwargs))


def test_laplacian_reduces_to_interior_penalty():
    system = laplace_system(2, 1, sigma=20.0, theta=1)
    expected = sipg_laplacian(system.space.mesh, 20.0)
    assert np.max(np.abs(system.matrix.to_dense() - expected)) < 1e-12


def test_nonsymmetric_laplacian_variant():
    system = laplace_system(2, 1, sigma=20.0, theta=-1)
    expected = sipg_laplacian(system.space.mesh, 20.0, theta=-1.0)
    assert np.max(np.abs(system.matrix.to_dense() - expected)) < 1e-12


@pytest.mark.parametrize("k", [1, 2])
def test_laplacian_is_symmetric(k):
    dense = laplace_system(4, k).matrix.to_dense()
    assert np.max(np.abs(dense - dense.T)) < 1e-11 * np.max(np.abs(dense))


def test_variable_coefficient_is_not_symmetric():
    mesh = build_criss_cross(4)
    space = DGSpace(mesh, 1)
    problem = get_problem("test1")
    dense = assemble_eliminated(mesh, space, problem.coefficient, problem.f).matrix.to_dense()
    assert np.max(np.abs(dense - dense.T)) > 1e-6


@pytest.mark.parametrize("name", ["test1", "test2", "test3a", "test3b"])
@pytest.mark.parametrize("k", [1, 2])
def test_compact_stencil(name, k):
    mesh = build_criss_cross(8)
    space = DGSpace(mesh, k)
    problem = get_problem(name)
    stats = assemble_eliminated(mesh, space, problem.coefficient, problem.f).stats
    assert stats.max_blocks_per_row <= 4
    assert stats.n_block_rows == 128


def test_mixed_dof_bookkeeping():
    mesh = build_criss_cross(8)
    space = DGSpace(mesh, 1)
    problem = get_problem("test1")
    system = assemble_mixed(mesh, space, problem.coefficient, problem.f,
                            BilinearFormConfig(form=MIXED))
    assert system.n_u == 384
    assert system.n_h == 1536
    assert system.matrix.n == 1920
    assert system.rhs.shape == (1920,)


@pytest.mark.parametrize("k", [1, 2])
def test_condensed_mixed_matches_eliminated(k):
    mesh = build_criss_cross(8)
    space = DGSpace(mesh, k)
    problem = get_problem("test1")
    eliminated = assemble(mesh, space, problem.coefficient, problem.f, BilinearFormConfig())
    mixed = assemble(mesh, space, problem.coefficient, problem.f, BilinearFormConfig(form=MIXED))
    a = eliminated.matrix.to_scipy()
    b = condense(mixed).matrix.to_scipy()
    assert abs(a - b).max() <= 1e-10 * abs(a).max()
    assert np.allclose(eliminated.rhs, condense(mixed).rhs)

    u_e = spla.spsolve(a.tocsc(), eliminated.rhs)
    u_m = spla.spsolve(b.tocsc(), mixed.rhs[:mixed.n_u])
    energy = energy_matrix_1(space)
    diff = u_e - u_m
    assert np.sqrt(diff @ (energy @ diff)) < 1e-9


def test_mixed_block_solution_is_consistent():
    mesh = build_criss_cross(4)
    space = DGSpace(mesh, 2)
    problem = get_problem("test2")
    system = assemble_mixed(mesh, space, problem.coefficient, problem.f,
                            BilinearFormConfig(form=MIXED))
    u, report = solve(system, SolverConfig())
    assert report.converged
    h = recover_hessian(system, u)
    full = np.concatenate((u, h.components.reshape(-1)))
    residual = system.matrix.matvec(full) - system.rhs
    assert np.max(np.abs(residual)) <= 1e-8 * np.max(np.abs(system.rhs))


def test_recovered_hessian_matches_direct_assembly():
    mesh = build_criss_cross(4)
    space = DGSpace(mesh, 1)
    problem = get_problem("test1")
    system = assemble_mixed(mesh, space, problem.coefficient, problem.f,
                            BilinearFormConfig(form=MIXED, theta=-1))
    v = np.random.default_rng(0).standard_normal(space.n_dofs)
    recovered = recover_hessian(system, v).components
    direct = assemble_hessian(space, v, FluxChoice(theta=-1)).components
    assert np.allclose(recovered, direct, rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("form", ["eliminated", "mixed"])
def test_solution_satisfies_discrete_equations(form):
    mesh = build_criss_cross(8)
    space = DGSpace(mesh, 1)
    problem = get_problem("test1")
    system = assemble(mesh, space, problem.coefficient, problem.f, BilinearFormConfig(form=form))
    u, report = solve(system, SolverConfig(tol=1e-12))
    assert report.converged
    assert galerkin_orthogonality_residual(system, u) <= 1e-9 * np.linalg.norm(system.rhs)


def test_bilinear_form_is_matrix_entry():
    system = laplace_system(2, 1)
    e = np.eye(system.space.n_dofs)
    dense = system.matrix.to_dense()
    assert bilinear_form(system, e[3], e[5]) == pytest.approx(dense[5, 3])


def test_galerkin_orthogonality_for_constant_coefficients():
    space = DGSpace(build_criss_cross(4), 2)
    assert np.max(np.abs(error_functional(space, get_problem("constant")))) < 1e-10
    assert np.max(np.abs(error_functional(space, get_problem("test1")))) > 1e-8


def test_space_must_match_mesh():
    space = DGSpace(build_criss_cross(2), 1)
    problem = get_problem("laplace")
    with pytest.raises(ValueError):
        assemble_eliminated(build_criss_cross(2), space, problem.coefficient, problem.f)


@pytest.mark.parametrize("kwargs", [dict(sigma=0.0), dict(sigma=-1.0), dict(theta=0),
                                    dict(form="hybrid")])
def test_invalid_form_configuration(kwargs):
    with pytest.raises(ValueError):
        BilinearFormConfig(**kwargs)


@pytest.mark.parametrize("name", ["laplace", "constant"])
def test_orthogonality_residual_after_solve(name):
    mesh = build_criss_cross(8)
    space = DGSpace(mesh, 2)
    problem = get_problem(name)
    system = assemble(mesh, space, problem.coefficient, problem.f, BilinearFormConfig())
    assert galerkin_orthogonality_residual(system, np.zeros(space.n_dofs)) == pytest.approx(
        np.max(np.abs(system.rhs)))
    u, report = solve(system, SolverConfig())
    assert report.converged
    assert galerkin_orthogonality_residual(system, u) <= 1e-9


def log_ridge_system(mesh, k=1):
    problem = get_problem("test1")
    space = DGSpace(mesh, k)
    return problem, space, assemble(mesh, space, problem.coefficient, problem.f,
                                    BilinearFormConfig())


def test_refined_and_directly_built_meshes_give_the_same_errors():
    results = []
    for mesh in (refine(build_criss_cross(8)), build_criss_cross(16)):
        problem, space, system = log_ridge_system(mesh)
        u, report = solve(system, SolverConfig(tol=1e-13))
        assert report.converged
        results.append((l2_error(u, problem.solution, mesh, space),
                        energy_error(u, problem.solution, mesh, space)))
    assert results[0] == pytest.approx(results[1], rel=1e-8)


def test_bicgstab_matches_dense_lu_on_log_ridge_problem():
    _, _, system = log_ridge_system(build_criss_cross(8))
    exact = scipy.linalg.lu_solve(scipy.linalg.lu_factor(system.matrix.to_dense()), system.rhs)
    u, report = solve(system, SolverConfig(tol=1e-14))
    assert report.converged
    assert np.linalg.norm(u - exact) <= 1e-9 * np.linalg.norm(exact)


def test_ilu0_needs_no_more_iterations_than_jacobi():
    _, _, system = log_ridge_system(build_criss_cross(8))
    ilu = solve(system, SolverConfig(precond="ilu0"))[1]
    jacobi = solve(system, SolverConfig(precond="jacobi"))[1]
    assert ilu.converged and jacobi.converged
    assert ilu.iterations <= jacobi.iterations


def test_condensed_mixed_matches_eliminated_on_uneven_elements():
    base = build_criss_cross(4)
    x, y = base.vertices[:, 0], base.vertices[:, 1]
    shift = 0.05 * np.sin(np.pi * x) * np.sin(np.pi * y)
    mesh = Mesh(np.column_stack((x + shift, y + 0.5 * shift)), base.elements)
    assert np.ptp(mesh.signed_areas) > 1e-4

    space = DGSpace(mesh, 2)
    problem = get_problem("test2")
    eliminated = assemble(mesh, space, problem.coefficient, problem.f, BilinearFormConfig())
    mixed = assemble(mesh, space, problem.coefficient, problem.f, BilinearFormConfig(form=MIXED))
    a = eliminated.matrix.to_scipy()
    b = condense(mixed).matrix.to_scipy()
    assert abs(a - b).max() <= 1e-10 * abs(a).max()
