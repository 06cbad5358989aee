import numpy as np
import pytest

from app.utils.sampling import (
    chunked_map,
    dedupe,
    gauss_newton,
    halton_points,
    nearest_distances,
)

BOX = [(-1.0, 1.0), (0.0, 3.0)]


def circle_residuals(y):
    r = (y[:, 0] ** 2 + y[:, 1] ** 2 - 1.0)[:, None]
    jac = np.stack([2 * y[:, 0], 2 * y[:, 1]], axis=1)[:, None, :]
    return r, jac


class TestHalton:
    """Test suite for low-discrepancy sampling"""

    def test_deterministic_and_in_box(self):
        """Test the same seed gives the same points inside the box"""
        a = halton_points(256, BOX, seed=11)
        b = halton_points(256, BOX, seed=11)
        np.testing.assert_array_equal(a, b)
        assert a.shape == (256, 2)
        assert (a[:, 0] >= -1).all() and (a[:, 0] <= 1).all()
        assert (a[:, 1] >= 0).all() and (a[:, 1] <= 3).all()

    def test_seed_changes_points(self):
        """Test different seeds scramble differently"""
        assert not np.allclose(halton_points(64, BOX, seed=1), halton_points(64, BOX, seed=2))

    def test_skip(self):
        """Test skipping continues the same sequence"""
        full = halton_points(15, BOX, seed=3)
        np.testing.assert_allclose(halton_points(10, BOX, seed=3, skip=5), full[5:])

    def test_zero_dimensional(self):
        """Test an empty box gives empty rows"""
        assert halton_points(4, [], seed=0).shape == (4, 0)


class TestGaussNewton:
    """Test suite for batched projection"""

    def test_projects_onto_circle(self):
        """Test points land on the unit circle"""
        start = halton_points(100, [(0.2, 2.0), (0.2, 2.0)], seed=5)
        points, norms = gauss_newton(circle_residuals, start)
        assert (norms < 1e-8).all()
        np.testing.assert_allclose(np.hypot(points[:, 0], points[:, 1]), 1.0, atol=1e-8)

    def test_empty(self):
        """Test no start points"""
        points, norms = gauss_newton(circle_residuals, np.zeros((0, 2)))
        assert points.shape == (0, 2)
        assert norms.size == 0


class TestPointHelpers:
    """Test suite for nearest-neighbour helpers"""

    def test_nearest_distances(self):
        """Test distances to a reference cloud"""
        reference = np.array([[0.0, 0.0], [1.0, 0.0]])
        dist, index = nearest_distances(reference, np.array([[0.9, 0.0], [0.0, 2.0]]))
        np.testing.assert_allclose(dist, [0.1, 2.0])
        assert list(index) == [1, 0]

    def test_nearest_distances_empty_reference(self):
        """Test an empty reference is infinitely far"""
        dist, _ = nearest_distances(np.zeros((0, 2)), np.array([[0.0, 0.0]]))
        assert np.isinf(dist).all()

    def test_dedupe(self):
        """Test close points collapse to the first"""
        points = np.array([[0.0, 0.0], [0.001, 0.0], [1.0, 1.0]])
        np.testing.assert_array_equal(dedupe(points, 0.01), points[[0, 2]])

    def test_chunked_map_keeps_order(self):
        """Test threaded chunks come back in order"""
        points = np.arange(10.0)[:, None]
        pieces = chunked_map(lambda p: p[:, 0] * 2, points, workers=3, chunk=3)
        np.testing.assert_array_equal(np.concatenate(pieces), np.arange(10.0) * 2)
