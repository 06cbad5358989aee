"""
Schemas for relaxations, semidefinite programs and positivity certificates.
"""
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.services.polynomial import Monomial, Polynomial


class _Model(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# ============================================================================
# Relaxation
# ============================================================================

class RelaxationBlock(_Model):
    """One Gram block: sigma_i * g_i with sigma_i over ``basis``.

    ``entries[(j, k)]`` is NF(b_j * b_k * g) for j <= k, exact.
    """
    generator: Polynomial
    basis: Tuple[Monomial, ...]
    entries: Dict[Tuple[int, int], Polynomial]

    @property
    def size(self) -> int:
        return len(self.basis)


class RelaxationProblem(_Model):
    degree: int
    nvars: int
    target: Polynomial = Field(..., description="Normal form of the polynomial to certify")
    blocks: Tuple[RelaxationBlock, ...]
    monomials: Tuple[Monomial, ...] = Field(..., description="Every monomial an identity can involve")

    def identity_polynomial(self) -> Polynomial:
        """Sum over blocks of the trace-form element, NF(sum_b b^2 g)."""
        total = Polynomial.zero(self.nvars)
        for block in self.blocks:
            for j in range(block.size):
                total = total + block.entries[(j, j)]
        return total


# ============================================================================
# Semidefinite programs
# ============================================================================

class SDPStatus(str, Enum):
    OPTIMAL = "Optimal"
    INACCURATE = "Inaccurate"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class SDPProblem(_Model):
    """min <C, X> s.t. <A_k, X> = b_k, X block diagonal and PSD."""
    sizes: Tuple[int, ...]
    a_blocks: Tuple[np.ndarray, ...] = Field(..., description="Per block, array of shape (m, n, n)")
    c_blocks: Tuple[np.ndarray, ...]
    b: np.ndarray

    @property
    def constraints(self) -> int:
        return int(self.b.shape[0])


class SDPSolution(_Model):
    status: SDPStatus
    x_blocks: Tuple[np.ndarray, ...]
    z_blocks: Tuple[np.ndarray, ...]
    y: np.ndarray
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int


# ============================================================================
# Certificates
# ============================================================================

class CertificateBlock(_Model):
    generator: Polynomial
    basis: Tuple[Monomial, ...]
    gram: Tuple[Tuple[Any, ...], ...] = Field(..., description="Symmetric Gram rows; floats or Fractions")

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.gram], dtype=float).reshape(
            len(self.basis), len(self.basis)
        )


class Certificate(_Model):
    """Gram matrices with f + eps = sum_i b_i^T G_i b_i g_i modulo the ideal."""
    variables: Tuple[str, ...]
    target: Polynomial = Field(..., description="The polynomial f, without eps")
    eps: Fraction
    degree: int
    blocks: Tuple[CertificateBlock, ...]
    rationalized: bool = False
    residual: Optional[float] = Field(None, description="Largest coefficient of the identity residual")


class VerificationLevel(str, Enum):
    EXACT_VERIFIED = "ExactVerified"
    NUMERIC_VERIFIED = "NumericVerified"
    REFUTED = "Refuted"


class VerificationReport(_Model):
    level: VerificationLevel
    claim: str = Field(..., description="P1 for eps = 0, P2 otherwise")
    residual: float
    eps: Fraction
    degree: int
    witness: Optional[str] = None


class DegreeAttempt(_Model):
    degree: int
    status: str
    margin: Optional[float] = None
    residual: Optional[float] = None


class CertificationOutcome(_Model):
    success: bool
    certificate: Optional[Certificate] = None
    report: Optional[VerificationReport] = None
    attempts: Tuple[DegreeAttempt, ...] = ()
    best_residual: Optional[float] = None
    reason: str = ""

    @property
    def degrees(self) -> List[int]:
        return [a.degree for a in self.attempts]
