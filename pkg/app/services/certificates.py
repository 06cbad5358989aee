"""
Positivity certificates: lower bounds, Gram extraction, rounding to exact
rationals and verification of f + eps = sum_i sigma_i g_i modulo the ideal.
"""

import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import Settings, settings as default_settings
from app.core.exceptions import CertificateError, SamplingError, TowerError
from app.schemas.sos import (
    Certificate,
    CertificateBlock,
    CertificationOutcome,
    DegreeAttempt,
    RelaxationProblem,
    SDPSolution,
    SDPStatus,
    VerificationLevel,
    VerificationReport,
)
from app.schemas.tower import TowerState
from app.services.groebner import NormalFormCache
from app.services.polynomial import (
    Monomial,
    Polynomial,
    format_monomial,
    format_polynomial,
    format_rational,
    monomial_mul,
)
from app.services.relaxation import build_relaxation, to_sdp
from app.services.sdp import solve_sdp
from app.services.variety import sample_image
from app.utils.rational import min_norm_correction, rational_ldl

logger = logging.getLogger(__name__)


def _with_eps(f: Polynomial, eps: Fraction) -> Polynomial:
    return f + Polynomial.constant(Fraction(eps), f.nvars)


def _numeric_identity(problem: RelaxationProblem, grams: Sequence[np.ndarray]) -> Dict[Monomial, float]:
    """Coefficients of sum_i <A_i, G_i> in floating point."""
    out: Dict[Monomial, float] = {}
    for block, gram in zip(problem.blocks, grams):
        for (j, k), entry in block.entries.items():
            weight = gram[j, k] * (1.0 if j == k else 2.0)
            if weight == 0.0:
                continue
            for m, c in entry.terms.items():
                out[m] = out.get(m, 0.0) + weight * float(c)
    return out


def _numeric_residual(target: Polynomial, identity: Dict[Monomial, float]) -> Tuple[float, Optional[Monomial]]:
    monomials = set(identity) | set(target.terms)
    worst, where = 0.0, None
    for m in monomials:
        r = abs(float(target.coefficient(m)) - identity.get(m, 0.0))
        if r > worst:
            worst, where = r, m
    return worst, where


# ============================================================================
# Bounds and extraction
# ============================================================================

def lower_bound(
    tw: TowerState, f: Polynomial, d: int, settings: Optional[Settings] = None
) -> Tuple[float, SDPSolution]:
    """Largest lambda with f - lambda in the degree-d truncation of Q."""
    settings = settings or default_settings
    problem = build_relaxation(tw, f, d, settings)
    program = to_sdp(problem, problem.target, Polynomial.constant(1, tw.nvars))
    solution = solve_sdp(program.sdp, settings=settings)
    if solution.status == SDPStatus.INFEASIBLE:
        value = -math.inf
    elif solution.status == SDPStatus.UNBOUNDED:
        value = math.inf
    else:
        value = program.offset - solution.primal_objective
    logger.info(f"Lower bound at degree {d}: {value:.9g} ({solution.status.value})")
    return value, solution


def _certificate_program(tw: TowerState, f: Polynomial, eps: Fraction, d: int, settings: Settings):
    problem = build_relaxation(tw, _with_eps(f, eps), d, settings)
    return problem, to_sdp(problem, problem.target, problem.identity_polynomial())


def extract_certificate(
    tw: TowerState,
    f: Polynomial,
    eps: Fraction,
    d: int,
    solution: SDPSolution,
    problem: Optional[RelaxationProblem] = None,
    settings: Optional[Settings] = None,
) -> Certificate:
    """Gram matrices G_i = Y_i + lambda I from a margin-maximizing solution."""
    settings = settings or default_settings
    if solution.status not in (SDPStatus.OPTIMAL, SDPStatus.INACCURATE):
        raise CertificateError(f"cannot extract a certificate from a {solution.status.value} solution")
    problem = problem or build_relaxation(tw, _with_eps(f, eps), d, settings)
    grams = [np.array(x, dtype=float) for x in solution.x_blocks]

    # lambda from the identity target - sum <A, Y> = lambda * shift, least squares
    shift = problem.identity_polynomial()
    base = _numeric_identity(problem, grams)
    monomials = sorted(set(base) | set(shift.terms) | set(problem.target.terms))
    r0 = np.array([float(problem.target.coefficient(m)) - base.get(m, 0.0) for m in monomials])
    h = np.array([float(shift.coefficient(m)) for m in monomials])
    margin = float(r0 @ h / (h @ h))
    grams = [g + margin * np.eye(g.shape[0]) for g in grams]

    smallest = min(float(np.linalg.eigvalsh(g)[0]) for g in grams)
    if smallest < -settings.NUMERIC_ACCEPT:
        raise CertificateError(
            f"Gram matrices are indefinite (smallest eigenvalue {smallest:.3g})",
            {"eigenvalue": smallest, "margin": margin},
        )
    residual, _ = _numeric_residual(problem.target, _numeric_identity(problem, grams))
    blocks = tuple(
        CertificateBlock(
            generator=block.generator,
            basis=block.basis,
            gram=tuple(tuple(float(x) for x in row) for row in gram),
        )
        for block, gram in zip(problem.blocks, grams)
    )
    logger.info(f"Extracted certificate at degree {d}: margin {margin:.3g}, residual {residual:.3g}")
    return Certificate(
        variables=tw.variables,
        target=f,
        eps=Fraction(eps),
        degree=d,
        blocks=blocks,
        rationalized=False,
        residual=residual,
    )


# ============================================================================
# Exact arithmetic
# ============================================================================

def _entries(cache: NormalFormCache, block: CertificateBlock) -> Dict[Tuple[int, int], Polynomial]:
    n = len(block.basis)
    return {
        (j, k): cache.product(monomial_mul(block.basis[j], block.basis[k]), block.generator)
        for j in range(n)
        for k in range(j, n)
    }


def _exact_residual(
    tw: TowerState,
    cert: Certificate,
    tables: Sequence[Dict[Tuple[int, int], Polynomial]],
    grams: Sequence[List[List[Fraction]]],
) -> Polynomial:
    residual = tw.ideal.normal_form(_with_eps(cert.target.extend(tw.nvars), cert.eps))
    terms = dict(residual.terms)
    for table, gram in zip(tables, grams):
        for (j, k), entry in table.items():
            weight = gram[j][k] * (1 if j == k else 2)
            if not weight:
                continue
            for m, c in entry.terms.items():
                terms[m] = terms.get(m, Fraction(0)) - weight * c
    return Polynomial(tw.nvars, terms)


def _check_shape(tw: TowerState, cert: Certificate) -> None:
    if cert.variables != tw.variables:
        raise CertificateError("certificate variables do not match the tower")
    for block in cert.blocks:
        n = len(block.basis)
        if block.generator.nvars != tw.nvars or any(len(m) != tw.nvars for m in block.basis):
            raise CertificateError("certificate block lives in a different ring")
        if len(block.gram) != n or any(len(row) != n for row in block.gram):
            raise CertificateError(f"Gram matrix of size {len(block.gram)} does not match basis of size {n}")


def rationalize_certificate(
    cert: Certificate,
    tw: TowerState,
    denominator_bound: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> Certificate:
    """Round Gram entries to rationals and repair the identity exactly.

    Rounded entries are corrected by the minimum-norm rational change that
    makes the identity hold modulo the ideal; a remaining constant residual
    is absorbed into the constant entry of sigma_0. Positive semidefiniteness
    is then decided by an exact LDL^T factorization.
    """
    settings = settings or default_settings
    bound = denominator_bound or settings.DENOMINATOR_BOUND
    _check_shape(tw, cert)
    grams: List[List[List[Fraction]]] = []
    for block in cert.blocks:
        n = len(block.basis)
        rounded = [[Fraction(0)] * n for _ in range(n)]
        for j in range(n):
            for k in range(j, n):
                value = Fraction(block.gram[j][k]).limit_denominator(bound)
                rounded[j][k] = rounded[k][j] = value
        grams.append(rounded)

    cache = NormalFormCache(tw.ideal)
    tables = [_entries(cache, block) for block in cert.blocks]
    residual = _exact_residual(tw, cert, tables, grams)

    if not residual.is_zero():
        unknowns = [(b, j, k) for b, table in enumerate(tables) for (j, k) in table]
        monomials = sorted(
            set(residual.terms) | {m for table in tables for e in table.values() for m in e.terms},
            key=tw.ideal.order.key,
        )
        row = {m: i for i, m in enumerate(monomials)}
        matrix = [[Fraction(0)] * len(unknowns) for _ in monomials]
        for col, (b, j, k) in enumerate(unknowns):
            factor = 1 if j == k else 2
            for m, c in tables[b][(j, k)].terms.items():
                matrix[row[m]][col] += factor * c
        rhs = [residual.coefficient(m) for m in monomials]
        delta = min_norm_correction(matrix, rhs)
        if delta is not None:
            for (b, j, k), change in zip(unknowns, delta):
                if change:
                    grams[b][j][k] += change
                    if j != k:
                        grams[b][k][j] = grams[b][j][k]
            residual = _exact_residual(tw, cert, tables, grams)
        else:
            logger.warning("Affine correction of the rounded certificate is inconsistent")

    zero = (0,) * tw.nvars
    if not residual.is_zero() and residual.is_constant() and cert.blocks:
        first = cert.blocks[0]
        if first.generator.is_constant() and first.basis and first.basis[0] == zero:
            grams[0][0][0] += residual.constant_value()
            residual = _exact_residual(tw, cert, tables, grams)

    for block, gram in zip(cert.blocks, grams):
        if rational_ldl(gram) is None:
            raise CertificateError(
                "PSD lost after rounding",
                {"generator": format_polynomial(block.generator, tw.variables)},
            )
    worst = max((abs(float(c)) for c in residual.terms.values()), default=0.0)
    logger.info(f"Rationalized certificate; exact residual {'zero' if residual.is_zero() else worst}")
    return cert.model_copy(update={
        "blocks": tuple(
            block.model_copy(update={"gram": tuple(tuple(row) for row in gram)})
            for block, gram in zip(cert.blocks, grams)
        ),
        "rationalized": True,
        "residual": worst,
    })


# ============================================================================
# Verification
# ============================================================================

def verify_certificate(
    tw: TowerState,
    f: Polynomial,
    eps: Fraction,
    cert: Certificate,
    settings: Optional[Settings] = None,
) -> VerificationReport:
    """Check the identity and the Gram matrices; exact when every entry is rational."""
    settings = settings or default_settings
    _check_shape(tw, cert)
    eps = Fraction(eps)
    claim = "P1" if eps == 0 else "P2"
    cert = cert.model_copy(update={"target": f, "eps": eps})
    cache = NormalFormCache(tw.ideal)
    tables = [_entries(cache, block) for block in cert.blocks]
    exact = all(isinstance(x, (Fraction, int)) for block in cert.blocks for row in block.gram for x in row)

    if exact:
        grams = [[[Fraction(x) for x in row] for row in block.gram] for block in cert.blocks]
        for block, gram in zip(cert.blocks, grams):
            for j in range(len(gram)):
                for k in range(j):
                    if gram[j][k] != gram[k][j]:
                        raise CertificateError("Gram matrix is not symmetric")
        residual_poly = _exact_residual(tw, cert, tables, grams)
        psd = [rational_ldl(gram) is not None for gram in grams]
        if residual_poly.is_zero() and all(psd):
            level = VerificationLevel.EXACT_VERIFIED
            logger.info(f"Certificate verified exactly ({claim}, eps={format_rational(eps)})")
            return VerificationReport(level=level, claim=claim, residual=0.0, eps=eps, degree=cert.degree)
        terms = [(abs(float(c)), m, c) for m, c in residual_poly.terms.items()]
        norm, where, value = max(terms, default=(0.0, None, Fraction(0)))
        witness = None
        if where is not None:
            witness = f"{format_rational(value)}*{format_monomial(where, tw.variables)}"
        if not all(psd):
            index = psd.index(False)
            witness = f"Gram of {format_polynomial(cert.blocks[index].generator, tw.variables)} is not PSD"
            norm = max(norm, settings.REFUTE_THRESHOLD * 2)
    else:
        grams_f = [block.as_array() for block in cert.blocks]
        for gram in grams_f:
            if not np.allclose(gram, gram.T, atol=1e-12):
                raise CertificateError("Gram matrix is not symmetric")
        identity: Dict[Monomial, float] = {}
        for table, gram in zip(tables, grams_f):
            for (j, k), entry in table.items():
                weight = gram[j, k] * (1.0 if j == k else 2.0)
                for m, c in entry.terms.items():
                    identity[m] = identity.get(m, 0.0) + weight * float(c)
        target = tw.ideal.normal_form(_with_eps(f.extend(tw.nvars), eps))
        norm, where = _numeric_residual(target, identity)
        witness = None
        if where is not None:
            value = float(target.coefficient(where)) - identity.get(where, 0.0)
            witness = f"{value:.6g}*{format_monomial(where, tw.variables)}"
        eigs = [float(np.linalg.eigvalsh(g)[0]) for g in grams_f]
        if eigs and min(eigs) < -settings.REFUTE_THRESHOLD:
            index = int(np.argmin(eigs))
            witness = (
                f"Gram of {format_polynomial(cert.blocks[index].generator, tw.variables)} "
                f"has eigenvalue {eigs[index]:.3g}"
            )
            norm = max(norm, -eigs[index])

    level = VerificationLevel.REFUTED if norm > settings.REFUTE_THRESHOLD else VerificationLevel.NUMERIC_VERIFIED
    logger.info(f"Certificate {level.value} ({claim}); residual {norm:.3g}")
    return VerificationReport(
        level=level, claim=claim, residual=norm, eps=eps, degree=cert.degree,
        witness=witness if level == VerificationLevel.REFUTED else None,
    )


# ============================================================================
# Degree loop
# ============================================================================

def _sample_refutation(tw: TowerState, target: Polynomial, settings: Settings) -> Optional[str]:
    """A sampled image point where the target is negative, if any."""
    try:
        image = sample_image(tw, settings.DOMAIN_SAMPLES, settings.DEFAULT_SEED, settings=settings)
    except SamplingError:
        return None
    if image.size == 0:
        return None
    values = target.evaluate_many(image.points)
    worst = int(np.argmin(values))
    if values[worst] < -settings.SIGN_TOL:
        point = ", ".join(f"{x:.6g}" for x in image.points[worst])
        return f"target is {values[worst]:.6g} at image point ({point})"
    return None


def certify_positivity(
    tw: TowerState,
    f: Polynomial,
    eps: Fraction = Fraction(0),
    d_max: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> CertificationOutcome:
    """Search degrees upward for a certificate of f + eps in Q.

    The first numerically acceptable certificate is rationalized and
    verified; a failed rounding falls back to the numeric certificate.
    """
    settings = settings or default_settings
    d_max = settings.D_MAX if d_max is None else d_max
    eps = Fraction(eps)
    if eps < 0:
        raise TowerError("eps must be nonnegative")
    if not tw.witness.archimedean:
        unbounded = [s.name for s in tw.witness.statuses if s.state.value == "unbounded"]
        raise TowerError(f"certification needs an archimedean tower; unbounded: {', '.join(unbounded)}")

    f = f.extend(tw.nvars) if f.nvars < tw.nvars else f
    target = tw.ideal.normal_form(_with_eps(f, eps))
    refuted = _sample_refutation(tw, target, settings)
    if refuted:
        logger.info(f"Certification skipped: {refuted}")
        return CertificationOutcome(success=False, reason=refuted)

    d_start = max(0, (max(target.degree(), 0) + 1) // 2)
    attempts: List[DegreeAttempt] = []
    best: Optional[float] = None
    for d in range(d_start, d_max + 1):
        problem, program = _certificate_program(tw, f, eps, d, settings)
        solution = solve_sdp(program.sdp, settings=settings)
        if solution.status not in (SDPStatus.OPTIMAL, SDPStatus.INACCURATE):
            attempts.append(DegreeAttempt(degree=d, status=solution.status.value))
            continue
        margin = program.offset - solution.primal_objective
        if margin <= 0:
            attempts.append(DegreeAttempt(degree=d, status=solution.status.value, margin=margin))
            continue
        try:
            cert = extract_certificate(tw, f, eps, d, solution, problem, settings)
        except CertificateError as exc:
            attempts.append(DegreeAttempt(degree=d, status=f"extraction failed: {exc.message}", margin=margin))
            continue
        attempts.append(DegreeAttempt(degree=d, status=solution.status.value, margin=margin, residual=cert.residual))
        best = cert.residual if best is None else min(best, cert.residual)
        if cert.residual > settings.NUMERIC_ACCEPT:
            continue
        try:
            exact = rationalize_certificate(cert, tw, settings=settings)
            report = verify_certificate(tw, f, eps, exact, settings)
            if report.level != VerificationLevel.REFUTED:
                cert = exact
            else:
                report = verify_certificate(tw, f, eps, cert, settings)
        except CertificateError as exc:
            logger.warning(f"Rationalization failed at degree {d}: {exc.message}")
            report = verify_certificate(tw, f, eps, cert, settings)
        return CertificationOutcome(
            success=True, certificate=cert, report=report, attempts=tuple(attempts), best_residual=best,
        )

    reason = f"no certificate up to degree {d_max}"
    logger.info(f"Certification failed: {reason}")
    return CertificationOutcome(success=False, attempts=tuple(attempts), best_residual=best, reason=reason)
