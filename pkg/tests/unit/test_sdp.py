import numpy as np
import pytest

from app.schemas.sos import SDPProblem, SDPStatus
from app.services.sdp import solve_sdp


def trace_one(c: np.ndarray, rhs: float = 1.0) -> SDPProblem:
    n = c.shape[0]
    return SDPProblem(
        sizes=(n,),
        a_blocks=(np.eye(n)[None, :, :],),
        c_blocks=(c,),
        b=np.array([rhs]),
    )


class TestSolveSDP:
    """Test suite for the interior point solver"""

    def test_diagonal(self):
        """Test min tr(CX) with tr X = 1 and C = diag(1, 2) is 1"""
        solution = solve_sdp(trace_one(np.diag([1.0, 2.0])))
        assert solution.status == SDPStatus.OPTIMAL
        assert solution.primal_objective == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(solution.x_blocks[0], np.diag([1.0, 0.0]), atol=1e-4)

    def test_smallest_eigenvalue(self):
        """Test random trace-one programs against the smallest eigenvalue"""
        rng = np.random.default_rng(42)
        for _ in range(20):
            m = rng.normal(size=(4, 4))
            c = (m + m.T) / 2
            solution = solve_sdp(trace_one(c))
            assert solution.status == SDPStatus.OPTIMAL
            assert solution.primal_objective == pytest.approx(np.linalg.eigvalsh(c)[0], abs=1e-5)

    def test_two_blocks(self):
        """Test a block-diagonal program picks the cheaper block"""
        problem = SDPProblem(
            sizes=(1, 2),
            a_blocks=(np.ones((1, 1, 1)), np.eye(2)[None, :, :]),
            c_blocks=(np.array([[3.0]]), np.diag([2.0, 5.0])),
            b=np.array([1.0]),
        )
        solution = solve_sdp(problem)
        assert solution.status == SDPStatus.OPTIMAL
        assert solution.primal_objective == pytest.approx(2.0, abs=1e-6)

    def test_infeasible(self):
        """Test tr X = -1 has no PSD solution"""
        solution = solve_sdp(trace_one(np.zeros((2, 2)), rhs=-1.0))
        assert solution.status == SDPStatus.INFEASIBLE

    def test_without_constraints(self):
        """Test programs without constraints"""
        empty = np.zeros((0, 2, 2))
        psd = SDPProblem(sizes=(2,), a_blocks=(empty,), c_blocks=(np.eye(2),), b=np.zeros(0))
        assert solve_sdp(psd).status == SDPStatus.OPTIMAL
        indefinite = SDPProblem(sizes=(2,), a_blocks=(empty,), c_blocks=(np.diag([1.0, -1.0]),), b=np.zeros(0))
        assert solve_sdp(indefinite).status == SDPStatus.UNBOUNDED

    def test_empty_block(self):
        """Test blocks of size zero are rejected"""
        problem = SDPProblem(sizes=(0,), a_blocks=(np.zeros((1, 0, 0)),), c_blocks=(np.zeros((0, 0)),), b=np.ones(1))
        with pytest.raises(ValueError):
            solve_sdp(problem)
