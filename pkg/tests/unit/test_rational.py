from fractions import Fraction

import pytest

from app.utils.rational import is_psd_exact, min_norm_correction, rational_ldl, solve_rational


class TestRationalLDL:
    """Test suite for exact LDL^T factorization"""

    def test_positive_definite(self):
        """Test the factors reproduce the matrix"""
        matrix = [[Fraction(4), Fraction(2)], [Fraction(2), Fraction(3)]]
        lower, diag = rational_ldl(matrix)
        assert diag == [4, 2]
        assert lower[1][0] == Fraction(1, 2)

    def test_singular_psd(self):
        """Test rank-deficient PSD matrices factor with a zero pivot"""
        assert is_psd_exact([[1, 1], [1, 1]])
        assert is_psd_exact([[0, 0], [0, 1]])

    def test_not_psd(self):
        """Test indefinite matrices are rejected"""
        assert rational_ldl([[1, 2], [2, 1]]) is None
        assert rational_ldl([[0, 1], [1, 0]]) is None
        assert not is_psd_exact([[-1]])

    def test_not_symmetric(self):
        """Test asymmetric input raises"""
        with pytest.raises(ValueError):
            rational_ldl([[1, 2], [0, 1]])


class TestRationalSolve:
    """Test suite for exact linear solves"""

    def test_consistent(self):
        """Test a unique solution"""
        assert solve_rational([[2, 1], [1, 3]], [3, 5]) == [Fraction(4, 5), Fraction(7, 5)]

    def test_underdetermined(self):
        """Test free variables are set to zero"""
        assert solve_rational([[1, 1]], [2]) == [2, 0]

    def test_inconsistent(self):
        """Test inconsistent systems return None"""
        assert solve_rational([[1, 1], [2, 2]], [1, 3]) is None

    def test_min_norm_correction(self):
        """Test the smallest correction spreads evenly"""
        assert min_norm_correction([[1, 1]], [2]) == [1, 1]
