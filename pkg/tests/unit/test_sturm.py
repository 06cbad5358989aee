from fractions import Fraction

import numpy as np
import pytest

from app.services.polynomial import parse_polynomial
from app.services.sturm import (
    count_roots,
    root_count,
    squarefree_decomposition,
    sturm_profile,
    sturm_sequence,
    univariate_coefficients,
    vanishes_at,
)

T = ["t"]


def grid_sign_changes(text: str, lo: float, hi: float, step: float = 1e-4) -> int:
    grid = np.arange(lo, hi + step / 2, step)
    values = parse_polynomial(text, T).evaluate_many(grid[:, None])
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(np.diff(signs)))


class TestSturmProfile:
    """Test suite for exact univariate sign analysis"""

    def test_counterexample_polynomial(self):
        """Test roots and signs of -t^2 (t + 1)(t - 1) on [-2, 2]"""
        profile = sturm_profile(parse_polynomial("-t^2*(t + 1)*(t - 1)", T), Fraction(-2), Fraction(2))
        assert [r.lo for r in profile.roots] == [-1, 0, 1]
        assert all(r.exact for r in profile.roots)
        assert [r.multiplicity for r in profile.roots] == [1, 2, 1]
        assert [p.sign for p in profile.pieces] == [-1, 1, 1, -1]
        double = profile.roots[1]
        assert [p.sign for p in profile.neighbors(double)] == [1, 1]

    def test_irrational_roots(self):
        """Test isolating intervals around +-sqrt(2)"""
        profile = sturm_profile(parse_polynomial("t^2 - 2", T), Fraction(-2), Fraction(2))
        assert len(profile.roots) == 2
        for root, expected in zip(profile.roots, (-2 ** 0.5, 2 ** 0.5)):
            assert not root.exact
            assert root.lo < expected < root.hi
            assert root.approx == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize(
        "text",
        ["t^2 - 2", "(3*t - 1)*(7*t + 1)*(2*t - 3)", "t^3 - t/5 + 1/100", "t^4 - 3*t^2 + 1"],
    )
    def test_matches_grid(self, text):
        """Test root counts against sign changes on a fine grid"""
        assert root_count(parse_polynomial(text, T), Fraction(-2), Fraction(2)) == grid_sign_changes(text, -2, 2)

    def test_half_interval(self):
        """Test counting on a closed subinterval"""
        q = parse_polynomial("t^2 - 2", T)
        assert root_count(q, Fraction(0), Fraction(2)) == 1
        assert root_count(q, Fraction(-1), Fraction(1)) == 0

    def test_unbounded(self):
        """Test missing bounds fall back to the Cauchy bound"""
        profile = sturm_profile(parse_polynomial("1 + t^2", T))
        assert profile.bounded == (False, False)
        assert profile.roots == ()
        assert profile.negative_piece() is None

    def test_constants(self):
        """Test a nonzero constant has one piece of its sign"""
        profile = sturm_profile(parse_polynomial("-3", T), Fraction(0), Fraction(1))
        assert [p.sign for p in profile.pieces] == [-1]
        assert profile.roots == ()

    def test_zero_polynomial(self):
        """Test the zero polynomial is rejected with or without bounds"""
        with pytest.raises(ValueError, match="zero polynomial"):
            sturm_profile(parse_polynomial("0", T), Fraction(0), Fraction(1))
        with pytest.raises(ValueError):
            sturm_profile(parse_polynomial("t - t", T))

    def test_endpoint_root(self):
        """Test roots on the boundary are reported exactly"""
        profile = sturm_profile(parse_polynomial("1 - t^2", T), Fraction(-1), Fraction(1))
        assert [r.lo for r in profile.roots] == [-1, 1]
        assert [p.sign for p in profile.pieces] == [1]


class TestSturmHelpers:
    """Test suite for the dense univariate helpers"""

    def test_univariate_coefficients(self):
        """Test dense coefficient extraction"""
        index, coeffs = univariate_coefficients(parse_polynomial("2 - y^2", ["x", "y"]))
        assert index == 1
        assert coeffs == [2, 0, -1]
        with pytest.raises(ValueError):
            univariate_coefficients(parse_polynomial("x*y", ["x", "y"]))

    def test_squarefree(self):
        """Test multiplicities of t^3 (t - 1)"""
        _, coeffs = univariate_coefficients(parse_polynomial("t^3*(t - 1)", T))
        multiplicities = sorted(m for _, m in squarefree_decomposition(coeffs))
        assert multiplicities == [1, 3]

    def test_sturm_sequence_count(self):
        """Test the raw Sturm chain on t^3 - t"""
        _, coeffs = univariate_coefficients(parse_polynomial("t^3 - t", T))
        assert count_roots(sturm_sequence(coeffs), Fraction(-2), Fraction(2)) == 3

    def test_vanishes_at(self):
        """Test exact vanishing at isolated roots"""
        profile = sturm_profile(parse_polynomial("t^2 - 2", T), Fraction(0), Fraction(2))
        root = profile.roots[0]
        assert vanishes_at(parse_polynomial("t^4 - 4", T), root)
        assert not vanishes_at(parse_polynomial("t - 1", T), root)
