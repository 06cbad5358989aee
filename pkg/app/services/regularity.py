"""
Regularity checks gating piecewise and characteristic adjunctions.

Univariate problems on an interval are decided exactly with Sturm
sequences. Everything else is semi-decided by sampling: zeros of q are
located by Gauss-Newton projection from sampled points and then inspected.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from app.core.config import Settings, settings as default_settings
from app.schemas.tower import (
    CheckMethod,
    RegularityCase,
    RegularityData,
    RegularityResult,
    SymbolKind,
    TowerState,
    Verdict,
)
from app.services.evaluation import image_values
from app.services.polynomial import Polynomial, format_rational
from app.services.sturm import RealRoot, SignProfile, sturm_profile, vanishes_at
from app.services.variety import (
    _projection_residuals,
    domain_box,
    generator_mask,
    relation_residuals,
    sample_domain,
    sample_variety,
)
from app.utils.sampling import dedupe, gauss_newton, nearest_distances

logger = logging.getLogger(__name__)

ZERO_MERGE_RADIUS = 1e-4


@dataclass(frozen=True)
class SignCheck:
    """Outcome of a sign condition (nonnegative or nonvanishing) on the domain."""

    holds: bool
    method: CheckMethod
    witness: Optional[List[float]] = None
    witness_text: Optional[str] = None


# ============================================================================
# Exact univariate path
# ============================================================================

def coordinate_polynomial(tw: TowerState, p: Polynomial) -> Optional[Polynomial]:
    """``p`` as a polynomial in the single domain coordinate, when that is possible.

    Requires a one-dimensional domain without extra constraints and ``p``
    to involve only base variables that are the plain coordinate.
    """
    dom = tw.domain
    if dom.dimension != 1 or dom.constraints:
        return None
    coordinate = Polynomial.variable(0, 1)
    plain = {
        s.index for s in tw.symbols if s.kind == SymbolKind.BASE_POLY and s.poly == coordinate
    }
    used = p.variables_used()
    if any(i not in plain for i in used):
        return None
    terms = {}
    for monomial, c in p.terms.items():
        key = (sum(monomial[i] for i in plain),)
        terms[key] = terms.get(key, Fraction(0)) + c
    return Polynomial(1, terms)


def _interval(tw: TowerState) -> Tuple[Optional[Fraction], Optional[Fraction]]:
    box = tw.domain.box[0]
    if box is None:
        return None, None
    return Fraction(box[0]), Fraction(box[1])


def _profile(tw: TowerState, p: Polynomial) -> Optional[SignProfile]:
    uni = coordinate_polynomial(tw, p)
    if uni is None:
        return None
    lo, hi = _interval(tw)
    return sturm_profile(uni, lo, hi)


def _anchor(tw: TowerState) -> List[float]:
    """A domain point reported when a polynomial vanishes identically."""
    lo, _ = _interval(tw)
    start = float(lo) if lo is not None else 0.0
    return [start] * tw.domain.dimension


def _root_text(tw: TowerState, root: RealRoot) -> str:
    name = tw.domain.coordinates[0]
    if root.exact:
        return f"{name}={format_rational(root.lo)}"
    return f"{name}~{root.approx:.12g}"


def _value_at_root(tw: TowerState, p: Polynomial, root: RealRoot) -> float:
    values = image_values(tw, np.array([[root.approx]]))
    return float(p.evaluate_many(values)[0])


# ============================================================================
# Sampling helpers
# ============================================================================

def _effective_domain(tw: TowerState, settings: Settings, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sampled points of K_{Q,X} and their images."""
    xs = sample_domain(tw.domain, settings.REGULARITY_SAMPLES, seed, box=domain_box(tw), settings=settings)
    values = image_values(tw, xs.points)
    mask = generator_mask(tw, values, settings.POSITIVITY_TOL)
    return xs.points[mask], values[mask]


def _in_domain(tw: TowerState, xs: np.ndarray, box: List[Tuple[float, float]]) -> np.ndarray:
    mask = np.all(np.isfinite(xs), axis=1)
    for j, (lo, hi) in enumerate(box):
        mask &= (xs[:, j] >= lo - 1e-12) & (xs[:, j] <= hi + 1e-12)
    for c in tw.domain.constraint_polynomials():
        mask &= c.evaluate_many(np.nan_to_num(xs)) >= -1e-12
    return mask


def _domain_zeros(
    tw: TowerState, q: Polynomial, starts: np.ndarray, settings: Settings
) -> np.ndarray:
    """Zeros of q(m(x)) on X, found by Gauss-Newton with finite differences."""
    box = domain_box(tw)
    dim = tw.domain.dimension

    def pulled(xs: np.ndarray) -> np.ndarray:
        return q.evaluate_many(image_values(tw, np.clip(xs, [b[0] for b in box], [b[1] for b in box])))

    def residuals(xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        r = pulled(xs)
        jac = np.zeros((xs.shape[0], 1, dim))
        for j in range(dim):
            step = 1e-7 * (1.0 + np.abs(xs[:, j]))
            plus, minus = xs.copy(), xs.copy()
            plus[:, j] += step
            minus[:, j] -= step
            jac[:, 0, j] = (pulled(plus) - pulled(minus)) / (2 * step)
        return r[:, None], jac

    found, norms = gauss_newton(residuals, starts, settings.GN_MAX_ITER, settings.GN_TOL)
    keep = _in_domain(tw, found, box) & (norms <= settings.ZERO_TOL)
    zeros = found[keep]
    if zeros.shape[0]:
        values = image_values(tw, zeros)
        zeros = zeros[generator_mask(tw, values, settings.POSITIVITY_TOL)]
    return dedupe(zeros, ZERO_MERGE_RADIUS)


def _variety_zeros(
    tw: TowerState, q: Polynomial, starts: np.ndarray, settings: Settings
) -> np.ndarray:
    """Zeros of q on K_{Q,Y}, projected from variety samples."""
    frozen = [s.index for s in tw.symbols if s.is_binary]
    base = _projection_residuals(tw, frozen)
    grad = [q.diff(k) for k in range(tw.nvars)]

    def residuals(y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        r, jac = base(y)
        rq = q.evaluate_many(y)[:, None]
        jq = np.column_stack([g.evaluate_many(y) for g in grad])[:, None, :]
        if frozen:
            jq[:, :, frozen] = 0.0
        return np.concatenate([r, rq], axis=1), np.concatenate([jac, jq], axis=1)

    found, _ = gauss_newton(residuals, starts, settings.GN_MAX_ITER, settings.GN_TOL)
    keep = (
        generator_mask(tw, found, settings.POSITIVITY_TOL)
        & (relation_residuals(tw, found) <= settings.RELATION_TOL)
        & (np.abs(q.evaluate_many(np.nan_to_num(found))) <= settings.ZERO_TOL)
    )
    zeros = found[keep]
    zeros = zeros[np.lexsort(zeros.T[::-1])] if zeros.shape[0] else zeros
    return dedupe(zeros, ZERO_MERGE_RADIUS)


def _starts(values: np.ndarray, q_values: np.ndarray, limit: int = 2000) -> np.ndarray:
    """Starting points for zero finding: the samples where |q| is smallest."""
    order = np.argsort(np.abs(q_values), kind="stable")
    return values[order[:limit]]


def _sign_change(q_values: np.ndarray, tol: float) -> bool:
    return bool((q_values > tol).any() and (q_values < -tol).any())


def _pass(case: RegularityCase, method: CheckMethod, **details) -> RegularityResult:
    return RegularityResult(case=case, verdict=Verdict.PASS, method=method, details=details)


def _fail(
    case: RegularityCase,
    method: CheckMethod,
    witness: List[float],
    text: Optional[str] = None,
    **details,
) -> RegularityResult:
    return RegularityResult(
        case=case,
        verdict=Verdict.FAIL,
        method=method,
        witness=[float(x) for x in witness],
        witness_text=text,
        details=details,
    )


def _format_point(names, point) -> str:
    return "(" + ", ".join(f"{n}={x:.6g}" for n, x in zip(names, point)) + ")"


# ============================================================================
# Sign conditions used by root and reciprocal adjunctions
# ============================================================================

def check_nonnegative(
    tw: TowerState, g: Polynomial, settings: Optional[Settings] = None, seed: Optional[int] = None
) -> SignCheck:
    """Whether g >= 0 on the domain."""
    settings = settings or default_settings
    if g.is_zero():
        return SignCheck(True, CheckMethod.VACUOUS)
    profile = _profile(tw, g)
    if profile is not None:
        piece = profile.negative_piece()
        if piece is None:
            return SignCheck(True, CheckMethod.STURM_EXACT)
        name = tw.domain.coordinates[0]
        return SignCheck(
            False,
            CheckMethod.STURM_EXACT,
            [float(piece.sample)],
            f"{name}={format_rational(piece.sample)}",
        )
    xs, values = _effective_domain(tw, settings, settings.DEFAULT_SEED if seed is None else seed)
    g_values = g.evaluate_many(values)
    bad = np.flatnonzero(g_values < -settings.SIGN_TOL)
    if bad.size:
        worst = bad[np.argmin(g_values[bad])]
        return SignCheck(False, CheckMethod.SAMPLING, xs[worst].tolist(),
                         _format_point(tw.domain.coordinates, xs[worst]))
    return SignCheck(True, CheckMethod.SAMPLING)


def check_nonvanishing(
    tw: TowerState, g: Polynomial, settings: Optional[Settings] = None, seed: Optional[int] = None
) -> SignCheck:
    """Whether g has no zero on the domain."""
    settings = settings or default_settings
    if g.is_zero():
        return SignCheck(False, CheckMethod.VACUOUS, _anchor(tw), "g vanishes identically")
    profile = _profile(tw, g)
    if profile is not None:
        if not profile.roots:
            return SignCheck(True, CheckMethod.STURM_EXACT)
        root = profile.roots[0]
        return SignCheck(False, CheckMethod.STURM_EXACT, [root.approx], _root_text(tw, root))
    xs, values = _effective_domain(tw, settings, settings.DEFAULT_SEED if seed is None else seed)
    g_values = g.evaluate_many(values)
    small = np.flatnonzero(np.abs(g_values) <= settings.ZERO_TOL)
    if small.size:
        return SignCheck(False, CheckMethod.SAMPLING, xs[small[0]].tolist(),
                         _format_point(tw.domain.coordinates, xs[small[0]]))
    continuous = all(s.continuous for s in tw.symbols)
    if continuous and _sign_change(g_values, 0.0):
        zeros = _domain_zeros(tw, g, _starts(xs, g_values), settings)
        if zeros.shape[0]:
            return SignCheck(False, CheckMethod.SAMPLING, zeros[0].tolist(),
                             _format_point(tw.domain.coordinates, zeros[0]))
    return SignCheck(True, CheckMethod.SAMPLING)


# ============================================================================
# Regularity conditions
# ============================================================================

def _check_inj4(tw: TowerState, data: RegularityData, settings: Settings, seed: int) -> RegularityResult:
    case = RegularityCase.INJ_CASE4
    diff = tw.ideal.normal_form(data.g - data.h)
    if diff.is_zero():
        return _pass(case, CheckMethod.VACUOUS, reason="g and h agree")
    profile = None if data.q.is_zero() else _profile(tw, data.q)
    if profile is not None:
        diff_uni = coordinate_polynomial(tw, diff)
        for root in profile.roots:
            if diff_uni is not None:
                agree = vanishes_at(diff_uni, root)
            else:
                agree = abs(_value_at_root(tw, diff, root)) <= settings.ZERO_TOL
            if not agree:
                return _fail(case, CheckMethod.STURM_EXACT, [root.approx], _root_text(tw, root))
        return _pass(case, CheckMethod.STURM_EXACT, zeros=len(profile.roots))

    xs, values = _effective_domain(tw, settings, seed)
    q_values = data.q.evaluate_many(values)
    zeros = _domain_zeros(tw, data.q, _starts(xs, q_values), settings)
    for z in zeros:
        gap = diff.evaluate_many(image_values(tw, z[None, :]))[0]
        if abs(gap) > settings.ZERO_TOL:
            return _fail(case, CheckMethod.SAMPLING, z.tolist(), _format_point(tw.domain.coordinates, z))
    if zeros.shape[0] == 0 and _sign_change(q_values, settings.SIGN_TOL) and all(
        s.continuous for s in tw.symbols
    ):
        return RegularityResult(
            case=case, verdict=Verdict.UNDECIDED, method=CheckMethod.SAMPLING,
            details={"reason": "q changes sign but no zero was located"},
        )
    return _pass(case, CheckMethod.SAMPLING, zeros=int(zeros.shape[0]))


def _check_alinj4(tw: TowerState, data: RegularityData, settings: Settings, seed: int) -> RegularityResult:
    case = RegularityCase.ALINJ_CASE4
    diff = tw.ideal.normal_form(data.g - data.h)
    if diff.is_zero():
        return _pass(case, CheckMethod.VACUOUS, reason="g and h agree")
    cloud = sample_variety(tw, seed=seed, settings=settings)
    if cloud.size == 0:
        return RegularityResult(case=case, verdict=Verdict.UNDECIDED, method=CheckMethod.SAMPLING,
                                details={"reason": "empty variety sample"})
    q_values = data.q.evaluate_many(cloud.points)
    zeros = _variety_zeros(tw, data.q, _starts(cloud.points, q_values), settings)
    for z in zeros:
        if abs(diff.evaluate_many(z[None, :])[0]) > settings.ZERO_TOL:
            return _fail(case, CheckMethod.SAMPLING, z.tolist(), _format_point(tw.variables, z))
    return _pass(case, CheckMethod.SAMPLING, zeros=int(zeros.shape[0]))


def _check_alinj5(tw: TowerState, data: RegularityData, settings: Settings, seed: int) -> RegularityResult:
    case = RegularityCase.ALINJ_CASE5
    cloud = sample_variety(tw, seed=seed, settings=settings)
    if cloud.size == 0:
        return RegularityResult(case=case, verdict=Verdict.UNDECIDED, method=CheckMethod.SAMPLING,
                                details={"reason": "empty variety sample"})
    q_values = data.q.evaluate_many(cloud.points)
    zeros = _variety_zeros(tw, data.q, _starts(cloud.points, q_values), settings)
    delta = settings.NEIGHBORHOOD_RADIUS
    positive = cloud.points[q_values > settings.SIGN_TOL]
    negative = cloud.points[q_values < -settings.SIGN_TOL]
    if zeros.shape[0]:
        near_pos, _ = nearest_distances(positive, zeros)
        near_neg, _ = nearest_distances(negative, zeros)
        for z, dp, dn in zip(zeros, near_pos, near_neg):
            if dp > delta or dn > delta:
                side = "positive" if dp > delta else "negative"
                return _fail(
                    case, CheckMethod.SAMPLING, z.tolist(), _format_point(tw.variables, z),
                    missing=side,
                )
    return _pass(case, CheckMethod.SAMPLING, zeros=int(zeros.shape[0]))


def _check_comp(tw: TowerState, data: RegularityData, settings: Settings, seed: int) -> RegularityResult:
    case = RegularityCase.COMP
    if data.q.is_zero():
        return _fail(case, CheckMethod.VACUOUS, _anchor(tw), "q vanishes identically")
    profile = _profile(tw, data.q)
    if profile is not None:
        if not profile.roots:
            return _pass(case, CheckMethod.VACUOUS, reason="q has no zeros")
        for root in profile.roots:
            if not any(piece.sign < 0 for piece in profile.neighbors(root)):
                return _fail(case, CheckMethod.STURM_EXACT, [root.approx], _root_text(tw, root))
        return _pass(case, CheckMethod.STURM_EXACT, zeros=len(profile.roots))

    xs, values = _effective_domain(tw, settings, seed)
    q_values = data.q.evaluate_many(values)
    zeros = _domain_zeros(tw, data.q, _starts(xs, q_values), settings)
    negative = xs[q_values < -settings.SIGN_TOL]
    if zeros.shape[0]:
        near, _ = nearest_distances(negative, zeros)
        for z, d in zip(zeros, near):
            if d > settings.NEIGHBORHOOD_RADIUS:
                return _fail(case, CheckMethod.SAMPLING, z.tolist(), _format_point(tw.domain.coordinates, z))
    return _pass(case, CheckMethod.SAMPLING, zeros=int(zeros.shape[0]))


_CHECKS: dict = {
    RegularityCase.INJ_CASE4: _check_inj4,
    RegularityCase.ALINJ_CASE4: _check_alinj4,
    RegularityCase.ALINJ_CASE5: _check_alinj5,
    RegularityCase.COMP: _check_comp,
}


def check_regularity(
    tw: TowerState,
    data: RegularityData,
    case: RegularityCase,
    settings: Optional[Settings] = None,
    seed: Optional[int] = None,
) -> RegularityResult:
    """Decide or semi-decide one regularity condition on the current tower."""
    settings = settings or default_settings
    seed = settings.DEFAULT_SEED if seed is None else seed
    if case in (RegularityCase.INJ_CASE4, RegularityCase.ALINJ_CASE4) and (data.g is None or data.h is None):
        raise ValueError(f"{case.value} needs g and h")
    q = tw.ideal.normal_form(data.q)
    if q.is_constant() and not q.is_zero():
        return _pass(case, CheckMethod.VACUOUS, reason="q is a nonzero constant")
    result = _CHECKS[case](tw, data, settings, seed)
    logger.info(f"Regularity {result.describe()}")
    return result
