"""
Degree-d relaxations of the quadratic module over the quotient algebra.

Every Gram entry is the normal form NF(b_j * b_k * g) expanded over
standard monomials, so the identity f = sum_i <A_i, G_i> is imposed exactly
modulo the ideal.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.core.config import Settings, settings as default_settings
from app.core.exceptions import RelaxationError
from app.schemas.sos import RelaxationBlock, RelaxationProblem, SDPProblem
from app.schemas.tower import TowerState
from app.services.groebner import NormalFormCache, standard_monomials
from app.services.polynomial import Monomial, Polynomial, monomial_mul

logger = logging.getLogger(__name__)


def _block_degree(d: int, g: Polynomial) -> int:
    return d - (g.degree() + 1) // 2


def build_relaxation(
    tw: TowerState,
    f: Polynomial,
    d: int,
    settings: Optional[Settings] = None,
) -> RelaxationProblem:
    """Structure of f - (shift) in Q_d: one block for sigma_0 and one per generator."""
    settings = settings or default_settings
    cache = NormalFormCache(tw.ideal)
    target = cache.polynomial(f)
    if 2 * d < target.degree():
        raise RelaxationError(f"degree {d} is too small for a target of degree {target.degree()}")
    if not tw.witness.archimedean:
        logger.warning("Relaxation over a non-archimedean quadratic module; certificates may not exist")
    standard_monomials(tw.ideal, 2 * d, cap=settings.MONOMIAL_CAP)

    generators = [Polynomial.constant(1, tw.nvars)] + tw.generator_polynomials()
    blocks: List[RelaxationBlock] = []
    monomials = set(target.terms)
    for g in generators:
        basis_degree = _block_degree(d, g)
        if basis_degree < 0:
            continue
        basis = standard_monomials(tw.ideal, basis_degree, cap=settings.MONOMIAL_CAP)
        if len(basis) > settings.SDP_MAX_BLOCK:
            raise RelaxationError(
                f"block of size {len(basis)} exceeds the limit {settings.SDP_MAX_BLOCK}",
                {"degree": d, "size": len(basis)},
            )
        entries: Dict[Tuple[int, int], Polynomial] = {}
        for j in range(len(basis)):
            for k in range(j, len(basis)):
                entry = cache.product(monomial_mul(basis[j], basis[k]), g)
                entries[(j, k)] = entry
                monomials.update(entry.terms)
        blocks.append(RelaxationBlock(generator=g, basis=tuple(basis), entries=entries))

    order = tw.ideal.order
    problem = RelaxationProblem(
        degree=d,
        nvars=tw.nvars,
        target=target,
        blocks=tuple(blocks),
        monomials=tuple(sorted(monomials, key=order.key)),
    )
    logger.info(
        f"Relaxation at degree {d}: {len(blocks)} blocks of sizes "
        f"{[b.size for b in blocks]}, {len(problem.monomials)} monomials"
    )
    return problem


@dataclass(frozen=True)
class ShiftedProgram:
    """An SDP for max lambda with target - lambda * shift = sum <A_i, Y_i>.

    lambda = offset - <C, Y> at any feasible Y.
    """

    sdp: SDPProblem
    offset: float
    pivot: Monomial


def to_sdp(problem: RelaxationProblem, target: Polynomial, shift: Polynomial) -> ShiftedProgram:
    """Eliminate lambda through the pivot monomial and return a standard-form SDP."""
    if shift.is_zero():
        raise RelaxationError("shift direction must be nonzero")
    index = {m: row for row, m in enumerate(problem.monomials)}
    for m in list(shift.terms) + list(target.terms):
        if m not in index:
            raise RelaxationError("target or shift uses a monomial outside the relaxation")

    zero = (0,) * problem.nvars
    if shift.coefficient(zero) != 0:
        pivot = zero
    else:
        pivot = max(shift.terms, key=lambda m: (abs(shift.coefficient(m)), m))
    h_p = shift.coefficient(pivot)
    f_p = target.coefficient(pivot)
    rows = [m for m in problem.monomials if m != pivot]
    row_of = {m: i for i, m in enumerate(rows)}
    m_count = len(rows)

    b = np.array(
        [float(target.coefficient(m) - shift.coefficient(m) / h_p * f_p) for m in rows], dtype=float
    )
    a_blocks = []
    c_blocks = []
    for block in problem.blocks:
        n = block.size
        a = np.zeros((m_count, n, n))
        c = np.zeros((n, n))
        for (j, k), entry in block.entries.items():
            p_coeff = entry.coefficient(pivot)
            for m, coeff in entry.terms.items():
                if m == pivot:
                    continue
                value = float(coeff)
                a[row_of[m], j, k] += value
                if j != k:
                    a[row_of[m], k, j] += value
            if p_coeff:
                for m, h_coeff in shift.terms.items():
                    if m == pivot:
                        continue
                    value = float(-p_coeff * h_coeff / h_p)
                    a[row_of[m], j, k] += value
                    if j != k:
                        a[row_of[m], k, j] += value
                value = float(p_coeff / h_p)
                c[j, k] += value
                if j != k:
                    c[k, j] += value
        a_blocks.append(a)
        c_blocks.append(c)

    sdp = SDPProblem(
        sizes=tuple(block.size for block in problem.blocks),
        a_blocks=tuple(a_blocks),
        c_blocks=tuple(c_blocks),
        b=b,
    )
    return ShiftedProgram(sdp=sdp, offset=float(f_p / h_p), pivot=pivot)
