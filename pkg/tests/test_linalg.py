"""
Tests for Gaussian elimination mod p
"""
import numpy as np
import pytest

from geometry.linalg import inv_mod_p, kernel_mod_p, rank_mod_p, rref_mod_p


class TestLinalg:

    def test_inverse(self):
        assert inv_mod_p(3, 7) == 5
        assert inv_mod_p(-1, 11) == 10

    def test_inverse_of_zero(self):
        with pytest.raises(ZeroDivisionError):
            inv_mod_p(14, 7)

    def test_rank_depends_on_prime(self):
        A = np.array([[1, 1], [1, -1]])
        assert rank_mod_p(A, 2) == 1
        assert rank_mod_p(A, 3) == 2

    def test_dependent_rows(self):
        assert rank_mod_p(np.array([[1, 2, 3], [2, 4, 6], [0, 1, 1]]), 5) == 2

    def test_rref(self):
        R, pivots = rref_mod_p(np.array([[2, 4], [1, 3]]), 5)
        assert pivots == [0, 1]
        assert R.tolist() == [[1, 0], [0, 1]]

    def test_input_not_modified(self):
        A = np.array([[3, 1], [6, 2]])
        rref_mod_p(A, 7)
        assert A.tolist() == [[3, 1], [6, 2]]

    def test_kernel_is_normalized(self):
        basis = kernel_mod_p(np.array([[1, 1]]), 5)
        assert len(basis) == 1
        assert basis[0].tolist() == [1, 4]

    def test_kernel_vectors_vanish(self):
        p = 7
        A = np.array([[1, 2, 3, 4], [2, 4, 6, 1], [0, 0, 1, 5]])
        basis = kernel_mod_p(A, p)
        assert len(basis) == A.shape[1] - rank_mod_p(A, p)
        for vec in basis:
            assert np.all(A @ vec % p == 0)
            assert vec[np.nonzero(vec)[0][0]] == 1

    def test_full_rank_has_empty_kernel(self):
        assert kernel_mod_p(np.eye(3, dtype=np.int64), 13) == []
