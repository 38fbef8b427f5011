import numpy as np
import pytest

from nvdg.analysis import eoc, l2_error
from nvdg.femspace import DGSpace, eval_basis
from nvdg.mesh import build_criss_cross
from nvdg.problems import diagonal_field, identity_field, log_field, sine_solution, test1
from nvdg.projection import (LocalProjector, matrix_basis_coefficients, project_coefficient,
                             project_function, project_matrix_times_basis, project_scalar)


def wavy(points):
    return np.exp(points[..., 0]) * np.cos(2 * points[..., 1])


@pytest.mark.parametrize("k", [0, 1, 2])
def test_projection_preserves_polynomials(k):
    space = DGSpace(build_criss_cross(3), k)

    def poly(p):
        x, y = p[..., 0], p[..., 1]
        return 2.0 - (k > 0) * (x - 3 * y) + (k > 1) * (x * y - y ** 2)

    v = project_function(space, poly)
    et = space.element_tables()
    assert np.allclose(space.evaluate(v, et), poly(et.points), atol=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_projection_residual_is_orthogonal(k):
    space = DGSpace(build_criss_cross(2), k)
    v = project_function(space, wavy)
    et = space.element_tables()
    residual = wavy(et.points) - space.evaluate(v, et)
    moments = np.einsum('eq,eq,qi->ei', et.weights, residual, et.values)
    assert np.allclose(moments, 0.0, atol=1e-13)


def test_single_element_matches_batch():
    space = DGSpace(build_criss_cross(2), 2)
    batch = LocalProjector(space).project(wavy)
    assert project_scalar(space, 5, wavy) == pytest.approx(batch[5])


def test_identity_times_basis():
    space = DGSpace(build_criss_cross(2), 1)
    coeffs = project_matrix_times_basis(space, 3, identity_field(), 1)
    expected = np.zeros((2, 2, space.n_loc))
    expected[0, 0, 1] = expected[1, 1, 1] = 1.0
    assert coeffs == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("k", [1, 2])
def test_matrix_basis_coefficients_match_single_element(k):
    space = DGSpace(build_criss_cross(2), k)
    coef = log_field()
    batch = matrix_basis_coefficients(space, coef)
    for e in (0, 5):
        for j in range(space.n_loc):
            single = project_matrix_times_basis(space, e, coef, j)
            assert batch[e, j] == pytest.approx(single, rel=1e-12, abs=1e-12)


def test_constant_coefficient_projects_exactly():
    space = DGSpace(build_criss_cross(2), 2)
    coeffs = matrix_basis_coefficients(space, diagonal_field(2.0))
    eye = np.eye(space.n_loc)
    assert np.allclose(coeffs[:, :, 0, 0, :], eye, atol=1e-12)
    assert np.allclose(coeffs[:, :, 1, 1, :], 2.0 * eye, atol=1e-12)
    assert np.allclose(coeffs[:, :, 0, 1, :], 0.0)


def test_piecewise_constant_coefficient():
    space0 = DGSpace(build_criss_cross(4), 0)
    a_h = project_coefficient(space0, diagonal_field(3.0))
    assert a_h.shape == (32, 2, 2)
    assert np.allclose(a_h, [[1.0, 0.0], [0.0, 3.0]])
    with pytest.raises(ValueError):
        project_coefficient(DGSpace(build_criss_cross(4), 1), diagonal_field(3.0))


@pytest.mark.parametrize("k", [1, 2])
def test_projection_approximation_order(k):
    solution = sine_solution()
    errors = []
    for n in (4, 8, 16, 32):
        mesh = build_criss_cross(n)
        space = DGSpace(mesh, k)
        errors.append(l2_error(project_function(space, solution.value), solution, mesh, space))
    assert eoc(errors)[-1] >= k + 0.9


def duffy_rule(vertices, n=20):
    """Tensor Gauss rule collapsed onto the triangle `vertices`."""
    x, w = np.polynomial.legendre.leggauss(n)
    s, ws = 0.5 * (x + 1), 0.5 * w
    ss, tt = np.meshgrid(s, s, indexing="ij")
    ref = np.column_stack((ss.ravel(), (tt * (1 - ss)).ravel()))
    weights = np.outer(ws, ws).ravel() * (1 - ss.ravel())
    v0, v1, v2 = np.asarray(vertices, dtype=float)
    jac = np.column_stack((v1 - v0, v2 - v0))
    return ref, v0 + ref @ jac.T, abs(np.linalg.det(jac)) * weights


def test_cubic_projection_against_tensor_quadrature():
    cube = lambda p: p[..., 0] ** 3
    space = DGSpace(build_criss_cross(1), 2)
    _, points, weights = duffy_rule(space.mesh.vertices[space.mesh.elements[0]])
    x, y = points[:, 0], points[:, 1]
    monomials = np.column_stack((np.ones_like(x), x, y, x ** 2, x * y, y ** 2))
    mass = np.einsum('q,qi,qj->ij', weights, monomials, monomials)
    best = np.linalg.solve(mass, monomials.T @ (weights * cube(points)))

    et = space.element_tables()
    px, py = et.points[0, :, 0], et.points[0, :, 1]
    expected = np.column_stack((np.ones_like(px), px, py, px ** 2, px * py, py ** 2)) @ best
    assert space.evaluate(project_function(space, cube), et)[0] == pytest.approx(expected, abs=1e-13)


def test_log_ridge_coefficient_against_normal_equations():
    space = DGSpace(build_criss_cross(8), 2)
    coef = test1().coefficient
    batch = matrix_basis_coefficients(space, coef, quad_degree=16)

    element = 0
    ref, points, weights = duffy_rule(space.mesh.vertices[space.mesh.elements[element]])
    phi = eval_basis(2, ref, 0).values
    a = coef.matrix(points)
    normal = np.einsum('q,qi,ql->il', weights, phi, phi)
    for j in range(space.n_loc):
        rhs = np.einsum('q,ql,q,qab->abl', weights, phi, phi[:, j], a)
        expected = np.linalg.solve(normal, rhs.reshape(-1, space.n_loc).T).T.reshape(2, 2, -1)
        assert batch[element, j] == pytest.approx(expected, abs=1e-10)


def test_projection_is_local():
    space = DGSpace(build_criss_cross(3), 2)
    element = 7
    v0, v1, v2 = space.mesh.vertices[space.mesh.elements[element]]
    to_bary = np.linalg.inv(np.column_stack((v1 - v0, v2 - v0)))

    def masked(p):
        lam = (p - v0) @ to_bary.T
        inside = (lam[..., 0] >= -1e-12) & (lam[..., 1] >= -1e-12) & (lam.sum(axis=-1) <= 1 + 1e-12)
        return np.where(inside, wavy(p), 0.0)

    coeffs = project_function(space, masked).reshape(space.n_elements, space.n_loc)
    assert np.all(np.delete(coeffs, element, axis=0) == 0.0)
    assert coeffs[element] == pytest.approx(project_scalar(space, element, wavy), rel=1e-12)
