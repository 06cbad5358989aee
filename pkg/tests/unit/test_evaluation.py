import numpy as np
import pytest

from app.core.exceptions import DomainError
from app.schemas.tower import Mode
from app.services.evaluation import (
    compile_elementary,
    elementary_is_continuous,
    image_values,
    odd_root,
    parse_elementary,
)
from app.services.tower import init_tower
from tests.conftest import interval


class TestElementaryExpressions:
    """Test suite for elementary base functions"""

    def test_xor_is_power(self):
        """Test ^ means exponentiation"""
        fn = compile_elementary("t^2 + 1", ("t",))
        np.testing.assert_allclose(fn(np.array([3.0, -1.0])), [10.0, 2.0])

    def test_unknown_symbol(self):
        """Test names outside the coordinates are rejected"""
        with pytest.raises(DomainError):
            parse_elementary("cos(s)", ("t",))

    def test_continuity(self):
        """Test discontinuous functions are flagged"""
        assert elementary_is_continuous("exp(t)", ("t",))
        assert elementary_is_continuous("Abs(t)", ("t",))
        assert not elementary_is_continuous("sign(t)", ("t",))

    def test_odd_root_keeps_sign(self):
        """Test real odd roots of negative numbers"""
        np.testing.assert_allclose(odd_root(np.array([-8.0, 27.0]), 3), [-2.0, 3.0])


class TestImageValues:
    """Test suite for the map from the domain into the tower variables"""

    def test_circle(self, circle_tower):
        """Test (cos t, sin t) at t = 0"""
        np.testing.assert_allclose(image_values(circle_tower, np.array([[0.0]])), [[1.0, 0.0]])

    def test_exponentials(self, settings):
        """Test (exp t, exp -t) at t = 0 is (1, 1)"""
        tw = init_tower(
            interval("t", -1, 1),
            coordinates=[("x", "exp(t)"), ("y", "exp(-t)")],
            claimed_mode=Mode.EXACT,
            settings=settings,
        )
        np.testing.assert_allclose(image_values(tw, np.array([[0.0]])), [[1.0, 1.0]])

    def test_characteristic(self, counter_tower):
        """Test (t, chi) at t = 1/2 is (1/2, 1)"""
        np.testing.assert_allclose(image_values(counter_tower, np.array([[0.5]])), [[0.5, 1.0]])
        np.testing.assert_allclose(image_values(counter_tower, np.array([[1.5]])), [[1.5, 0.0]])

    def test_roots_and_characteristic(self, abs_chi_tower):
        """Test (t, |t|, chi_[0,1]) at a few points"""
        values = image_values(abs_chi_tower, np.array([[-0.5], [0.0], [0.25]]))
        np.testing.assert_allclose(values, [[-0.5, 0.5, 0.0], [0.0, 0.0, 1.0], [0.25, 0.25, 1.0]])

    def test_wrong_dimension(self, interval_tower):
        """Test domain points must match the domain"""
        with pytest.raises(DomainError):
            image_values(interval_tower, np.zeros((3, 2)))
