import numpy as np
import pytest
import scipy.sparse as sp

from nvdg.linalg import (CsrMatrix, DimensionError, Ilu0Preconditioner, SingularMatrixError,
                         ZeroPivotError, attainable_residual, bicgstab, dense_solve,
                         ilu0_factor, make_preconditioner, read_matrix_market,
                         write_matrix_market)


def laplacian_1d(n):
    return CsrMatrix.from_scipy(sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n)).tocsr())


def random_nonsymmetric(n, seed=0):
    rng = np.random.default_rng(seed)
    a = sp.random(n, n, density=0.03, random_state=rng, data_rvs=rng.standard_normal)
    return CsrMatrix.from_scipy((a + 6.0 * sp.identity(n)).tocsr())


def test_dense_solve_permutation():
    assert dense_solve([[0.0, 1.0], [1.0, 0.0]], [1.0, 2.0]) == pytest.approx([2.0, 1.0])


def test_dense_solve_singular():
    with pytest.raises(SingularMatrixError):
        dense_solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


def test_dense_solve_shape_mismatch():
    with pytest.raises(DimensionError):
        dense_solve(np.eye(3), np.ones(2))


def test_triplets_are_summed():
    k = CsrMatrix.from_triplets([0, 0, 1, 1], [0, 0, 1, 0], [1.0, 2.0, 5.0, -1.0], 2)
    assert np.array_equal(k.to_dense(), [[3.0, 0.0], [-1.0, 5.0]])
    assert k.nnz == 3


def test_matvec_matches_dense():
    k = random_nonsymmetric(50)
    x = np.random.default_rng(1).standard_normal(50)
    assert np.allclose(k.matvec(x), k.to_dense() @ x)
    assert np.allclose(k @ x, k.to_dense() @ x)
    assert np.allclose(k.abs_matvec(x), np.abs(k.to_dense()) @ np.abs(x))
    assert np.allclose(k.transpose().to_dense(), k.to_dense().T)


def test_matvec_dimension_check():
    with pytest.raises(DimensionError):
        laplacian_1d(4).matvec(np.ones(5))


def test_block_stats():
    # two 2x2 blocks coupled to each other, a third one isolated
    dense = np.zeros((6, 6))
    dense[:4, :4] = 1.0
    dense[4:, 4:] = np.eye(2)
    stats = CsrMatrix.from_dense(dense).block_stats(2)
    assert stats.n_block_rows == 3
    assert stats.max_blocks_per_row == 2
    assert stats.max_bandwidth == 3


def test_ilu0_is_exact_on_tridiagonal():
    k = laplacian_1d(30)
    prec = Ilu0Preconditioner(k)
    dense = k.to_dense()
    applied = np.column_stack([prec.apply(dense[:, j]) for j in range(30)])
    assert np.allclose(applied, np.eye(30), atol=1e-12)


def test_ilu0_zero_pivot():
    k = CsrMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ZeroPivotError):
        ilu0_factor(k)


def test_preconditioner_fallbacks():
    k = CsrMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    assert make_preconditioner(k, "ilu0").name == "none"
    k = CsrMatrix.from_dense([[1.0, 1.0], [1.0, 1.0]])
    assert make_preconditioner(k, "ilu0").name == "jacobi"
    with pytest.raises(ValueError):
        make_preconditioner(k, "amg")


def test_bicgstab_small_system():
    k = CsrMatrix.from_dense([[2.0, 1.0], [1.0, 3.0]])
    x, report = bicgstab(k, np.array([3.0, 4.0]))
    assert x == pytest.approx([1.0, 1.0], abs=1e-12)
    assert report.converged
    assert report.iterations == 1
    assert report.precond == "ilu0"


@pytest.mark.parametrize("precond", ["ilu0", "jacobi", "none"])
def test_bicgstab_nonsymmetric(precond):
    k = random_nonsymmetric(300, seed=4)
    x_true = np.random.default_rng(5).standard_normal(300)
    b = k.matvec(x_true)
    x, report = bicgstab(k, b, precond=precond, tol=1e-12)
    assert report.converged
    assert report.residual <= 1e-12
    assert np.linalg.norm(b - k.matvec(x)) / np.linalg.norm(b) == pytest.approx(report.residual)
    assert x == pytest.approx(x_true, abs=1e-8)


def test_bicgstab_zero_rhs():
    x, report = bicgstab(laplacian_1d(10), np.zeros(10))
    assert np.all(x == 0.0)
    assert report.converged
    assert report.iterations == 0


def test_bicgstab_iteration_budget():
    k = laplacian_1d(400)
    x, report = bicgstab(k, np.ones(400), precond="none", max_iter=3)
    assert not report.converged
    assert report.iterations == 3
    assert report.reason == "max_iter"


def test_bicgstab_rejects_bad_input():
    k = laplacian_1d(5)
    with pytest.raises(DimensionError):
        bicgstab(k, np.ones(6))
    with pytest.raises(ValueError):
        bicgstab(k, np.ones(5), tol=0.0)


def test_attainable_residual_scales_with_eps():
    k = laplacian_1d(100)
    x = np.ones(100)
    floor = attainable_residual(k, x, k.matvec(x) + 1.0)
    assert 0.0 < floor < 1e-13


def test_matrix_market_roundtrip(tmp_path):
    k = random_nonsymmetric(40, seed=7)
    path = tmp_path / "k.mtx"
    write_matrix_market(k, path)
    back = read_matrix_market(path)
    assert np.array_equal(back.to_dense(), k.to_dense())
    assert path.read_text().startswith("%%MatrixMarket matrix coordinate real general")
