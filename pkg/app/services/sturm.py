"""
Exact real root isolation for univariate rational polynomials.

Roots are isolated with Sturm sequences on the square-free factors of a
Yun decomposition, which also yields multiplicities. Everything stays in
``Fraction`` arithmetic; the only floats are the ``approx`` conveniences.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from app.services.polynomial import Polynomial

logger = logging.getLogger(__name__)

Coeffs = List[Fraction]  # low degree first

REFINE_WIDTH = Fraction(1, 2 ** 40)


# Dense univariate helpers

def _trim(p: Sequence[Fraction]) -> Coeffs:
    out = list(p)
    while out and out[-1] == 0:
        out.pop()
    return out


def _degree(p: Coeffs) -> int:
    return len(p) - 1


def _monic(p: Coeffs) -> Coeffs:
    lead = p[-1]
    return [c / lead for c in p]


def _evaluate(p: Coeffs, x: Fraction) -> Fraction:
    total = Fraction(0)
    for c in reversed(p):
        total = total * x + c
    return total


def _derivative(p: Coeffs) -> Coeffs:
    return _trim([c * i for i, c in enumerate(p)][1:])


def _sub(a: Coeffs, b: Coeffs) -> Coeffs:
    n = max(len(a), len(b))
    a = a + [Fraction(0)] * (n - len(a))
    b = b + [Fraction(0)] * (n - len(b))
    return _trim([x - y for x, y in zip(a, b)])


def _divmod(a: Coeffs, b: Coeffs) -> Tuple[Coeffs, Coeffs]:
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    remainder = list(a)
    quotient = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    lead = b[-1]
    while len(remainder) >= len(b) and remainder:
        shift = len(remainder) - len(b)
        factor = remainder[-1] / lead
        quotient[shift] = factor
        for i, c in enumerate(b):
            remainder[shift + i] -= factor * c
        remainder = _trim(remainder)
    return _trim(quotient), remainder


def _gcd(a: Coeffs, b: Coeffs) -> Coeffs:
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _divmod(a, b)[1]
    return _monic(a) if a else a


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def univariate_coefficients(p: Polynomial) -> Tuple[Optional[int], Coeffs]:
    """Variable index and dense coefficients of a polynomial in one variable.

    Constants report index ``None``. Raises ``ValueError`` when more than one
    variable occurs.
    """
    used = p.variables_used()
    if len(used) > 1:
        raise ValueError("polynomial is not univariate")
    if not used:
        return None, _trim([p.constant_value()])
    index = used[0]
    coeffs = [Fraction(0)] * (p.degree_in(index) + 1)
    for monomial, c in p.terms.items():
        coeffs[monomial[index]] = c
    return index, _trim(coeffs)


def cauchy_bound(coeffs: Sequence[Fraction]) -> Fraction:
    """Strict upper bound on the absolute value of every complex root."""
    p = _trim(coeffs)
    if len(p) <= 1:
        return Fraction(1)
    lead = abs(p[-1])
    return 1 + max(abs(c) / lead for c in p[:-1])


def sturm_sequence(p: Coeffs) -> List[Coeffs]:
    chain = [_trim(p), _derivative(p)]
    while chain[-1]:
        remainder = _divmod(chain[-2], chain[-1])[1]
        if not remainder:
            break
        chain.append([-c for c in remainder])
    return [c for c in chain if c]


def _variations(chain: List[Coeffs], x: Fraction) -> int:
    signs = [s for s in (_sign(_evaluate(c, x)) for c in chain) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots(chain: List[Coeffs], lo: Fraction, hi: Fraction) -> int:
    """Distinct roots in the open interval (lo, hi) of the square-free head of ``chain``."""
    if lo >= hi:
        return 0
    at_hi = 1 if _evaluate(chain[0], hi) == 0 else 0
    return _variations(chain, lo) - _variations(chain, hi) - at_hi


def squarefree_decomposition(p: Coeffs) -> List[Tuple[Coeffs, int]]:
    """Yun's algorithm: monic square-free factors with their multiplicities."""
    p = _trim(p)
    if _degree(p) < 1:
        return []
    p = _monic(p)
    dp = _derivative(p)
    a = _gcd(p, dp)
    b = _divmod(p, a)[0]
    c = _divmod(dp, a)[0]
    d = _sub(c, _derivative(b))
    factors = []
    multiplicity = 1
    while _degree(b) > 0:
        a = _gcd(b, d)
        if _degree(a) > 0:
            factors.append((a, multiplicity))
        b = _divmod(b, a)[0]
        c = _divmod(d, a)[0]
        d = _sub(c, _derivative(b))
        multiplicity += 1
    return factors


@dataclass(frozen=True)
class RealRoot:
    """A real root isolated in [lo, hi]; ``lo == hi`` for rational roots."""

    lo: Fraction
    hi: Fraction
    multiplicity: int
    factor: Tuple[Fraction, ...]

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def approx(self) -> float:
        return float(self.midpoint)

    def refined(self, width: Fraction = REFINE_WIDTH) -> "RealRoot":
        lo, hi = self.lo, self.hi
        factor = list(self.factor)
        chain = sturm_sequence(factor)
        while hi - lo > width:
            mid = (lo + hi) / 2
            if _evaluate(factor, mid) == 0:
                return RealRoot(mid, mid, self.multiplicity, self.factor)
            if count_roots(chain, lo, mid) == 1:
                hi = mid
            else:
                lo = mid
        return RealRoot(lo, hi, self.multiplicity, self.factor)

    def halved(self) -> "RealRoot":
        width = (self.hi - self.lo) / 2
        return self.refined(width) if width > 0 else self


@dataclass(frozen=True)
class SignPiece:
    """An open interval between consecutive roots with the constant sign there."""

    lo: Fraction
    hi: Fraction
    sign: int
    sample: Fraction


@dataclass(frozen=True)
class SignProfile:
    """Roots and sign pattern of a univariate polynomial on an interval."""

    variable: Optional[int]
    lo: Fraction
    hi: Fraction
    bounded: Tuple[bool, bool]
    roots: Tuple[RealRoot, ...]
    pieces: Tuple[SignPiece, ...]

    def neighbors(self, root: RealRoot) -> List[SignPiece]:
        """Pieces adjacent to ``root``; only one when it sits on the boundary."""
        return [p for p in self.pieces if p.hi == root.lo or p.lo == root.hi]

    def negative_piece(self) -> Optional[SignPiece]:
        return next((p for p in self.pieces if p.sign < 0), None)


def _isolate(factor: Coeffs, lo: Fraction, hi: Fraction, multiplicity: int) -> List[RealRoot]:
    """Isolating intervals of the roots of a square-free factor in [lo, hi]."""
    chain = sturm_sequence(factor)
    key = tuple(factor)
    roots: List[RealRoot] = []
    for endpoint in (lo, hi) if lo != hi else (lo,):
        if _evaluate(factor, endpoint) == 0:
            roots.append(RealRoot(endpoint, endpoint, multiplicity, key))
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        n = count_roots(chain, a, b)
        if n == 0:
            continue
        if n == 1:
            roots.append(RealRoot(a, b, multiplicity, key))
            continue
        mid = (a + b) / 2
        if _evaluate(factor, mid) == 0:
            roots.append(RealRoot(mid, mid, multiplicity, key))
        stack.append((a, mid))
        stack.append((mid, b))
    return roots


def _separate(roots: List[RealRoot], lo: Fraction, hi: Fraction) -> List[RealRoot]:
    """Refine isolating intervals until they are disjoint and off the boundary."""
    roots = sorted(roots, key=lambda r: (r.lo, r.hi))
    changed = True
    while changed:
        changed = False
        for i, root in enumerate(roots):
            if root.exact:
                continue
            touches = root.lo <= lo or root.hi >= hi
            if touches:
                roots[i] = root.halved()
                changed = True
        for i in range(len(roots) - 1):
            left, right = roots[i], roots[i + 1]
            if left.hi >= right.lo:
                roots[i] = left.halved()
                roots[i + 1] = right.halved()
                changed = True
        roots.sort(key=lambda r: (r.lo, r.hi))
    return roots


def sturm_profile(
    q: Polynomial,
    lo: Optional[Fraction] = None,
    hi: Optional[Fraction] = None,
) -> SignProfile:
    """Roots with multiplicities and the sign on each open piece of [lo, hi].

    Missing bounds are replaced by the Cauchy bound of ``q``; the profile then
    covers the whole real line. The zero polynomial has no sign profile.
    """
    if q.is_zero():
        raise ValueError("sign profile of the zero polynomial")
    index, coeffs = univariate_coefficients(q)
    bound = cauchy_bound(coeffs)
    bounded = (lo is not None, hi is not None)
    lo = Fraction(lo) if lo is not None else -bound
    hi = Fraction(hi) if hi is not None else bound
    if lo > hi:
        raise ValueError("empty interval")

    if len(coeffs) == 1:
        sign = _sign(coeffs[0])
        pieces = (SignPiece(lo, hi, sign, (lo + hi) / 2),) if lo < hi else ()
        return SignProfile(index, lo, hi, bounded, (), pieces)

    roots: List[RealRoot] = []
    for factor, multiplicity in squarefree_decomposition(coeffs):
        roots.extend(_isolate(factor, lo, hi, multiplicity))
    roots = [r.refined() for r in _separate(roots, lo, hi)]
    roots = _separate(roots, lo, hi)

    pieces: List[SignPiece] = []
    left = lo
    for root in roots:
        right = root.lo
        if right > left:
            sample = (left + right) / 2
            pieces.append(SignPiece(left, right, _sign(_evaluate(coeffs, sample)), sample))
        left = root.hi
    if hi > left:
        sample = (left + hi) / 2
        pieces.append(SignPiece(left, hi, _sign(_evaluate(coeffs, sample)), sample))

    logger.debug(f"Sturm profile: {len(roots)} roots, {len(pieces)} pieces on [{lo}, {hi}]")
    return SignProfile(index, lo, hi, bounded, tuple(roots), tuple(pieces))


def root_count(q: Polynomial, lo: Optional[Fraction] = None, hi: Optional[Fraction] = None) -> int:
    """Number of distinct real roots in the closed interval."""
    return len(sturm_profile(q, lo, hi).roots)


def vanishes_at(p: Polynomial, root: RealRoot) -> bool:
    """Exact test whether the univariate ``p`` vanishes at an isolated root."""
    index, coeffs = univariate_coefficients(p)
    if not coeffs:
        return True
    if root.exact:
        return _evaluate(coeffs, root.lo) == 0
    if index is None:
        return False
    common = _gcd(list(root.factor), coeffs)
    if _degree(common) < 1:
        return False
    # the factor has exactly one root inside the isolating interval
    return count_roots(sturm_sequence(common), root.lo, root.hi) > 0
