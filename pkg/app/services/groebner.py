"""
Groebner bases, normal forms and standard monomials.

Buchberger's algorithm with the normal selection strategy and the
Gebauer-Moeller pair criteria, followed by minimalization and
interreduction into the reduced basis.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from app.core.exceptions import RelaxationError, VariableMismatchError
from app.services.polynomial import (
    Monomial,
    Polynomial,
    TermOrder,
    monomial_div,
    monomial_divides,
    monomial_lcm,
    monomial_mul,
    monomials_up_to,
)

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


class GroebnerBasis:
    """Reduced Groebner basis of an ideal in ``nvars`` variables."""

    __slots__ = ("generators", "order", "nvars", "leading")

    def __init__(
        self,
        generators: Tuple[Polynomial, ...],
        order: TermOrder,
        nvars: int,
        leading: Optional[Tuple[Monomial, ...]] = None,
    ):
        self.generators = tuple(generators)
        self.order = order
        self.nvars = nvars
        if leading is None:
            leading = tuple(g.leading_monomial(order) for g in self.generators)
        self.leading = tuple(leading)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroebnerBasis):
            return NotImplemented
        return (self.nvars, self.order, set(self.generators)) == (other.nvars, other.order, set(other.generators))

    def __hash__(self) -> int:
        return hash((self.nvars, self.order, frozenset(self.generators)))

    def __repr__(self) -> str:
        return f"GroebnerBasis({len(self.generators)} generators in {self.nvars} variables)"

    @classmethod
    def zero_ideal(cls, nvars: int, order: Optional[TermOrder] = None) -> "GroebnerBasis":
        return cls((), order or TermOrder.grevlex(nvars), nvars, ())

    def is_unit(self) -> bool:
        """True when the ideal is the whole ring."""
        return any(g.is_constant() for g in self.generators)

    def normal_form(self, p: Polynomial) -> Polynomial:
        return normal_form(p, self)

    def contains(self, p: Polynomial) -> bool:
        return normal_form(p, self).is_zero()

    def extend(self, nvars: int) -> "GroebnerBasis":
        """Same ideal generators in a ring with more (higher ranked) variables."""
        order = self.order.extend(nvars)
        gens = tuple(g.extend(nvars) for g in self.generators)
        return GroebnerBasis(gens, order, nvars, tuple(g.leading_monomial(order) for g in gens))


def s_polynomial(f: Polynomial, g: Polynomial, order: TermOrder) -> Polynomial:
    """S-polynomial of two monic polynomials."""
    lmf = f.leading_monomial(order)
    lmg = g.leading_monomial(order)
    lcm = monomial_lcm(lmf, lmg)
    return f.mul_term(monomial_div(lcm, lmf), 1) - g.mul_term(monomial_div(lcm, lmg), 1)


def reduce(
    p: Polynomial,
    divisors: Sequence[Polynomial],
    order: TermOrder,
    leading: Optional[Sequence[Monomial]] = None,
) -> Polynomial:
    """Remainder of ``p`` on full division by ``divisors``."""
    if not divisors:
        return p
    if leading is None:
        leading = [d.leading_monomial(order) for d in divisors]
    lead_coefs = [d.terms[lm] for d, lm in zip(divisors, leading)]
    work: Dict[Monomial, Fraction] = dict(p.terms)
    remainder: Dict[Monomial, Fraction] = {}
    while work:
        monomial = max(work, key=order.key)
        coefficient = work.pop(monomial)
        for divisor, lm, lc in zip(divisors, leading, lead_coefs):
            if monomial_divides(lm, monomial):
                quotient = monomial_div(monomial, lm)
                factor = coefficient / lc
                for m, c in divisor.terms.items():
                    if m == lm:
                        continue
                    target = monomial_mul(m, quotient)
                    value = work.get(target, Fraction(0)) - factor * c
                    if value:
                        work[target] = value
                    else:
                        work.pop(target, None)
                break
        else:
            remainder[monomial] = coefficient
    return Polynomial(p.nvars, remainder)


def _select(pairs: Set[Pair], leading: List[Monomial], order: TermOrder) -> Pair:
    # normal strategy: smallest lcm first, ties by index
    return min(pairs, key=lambda p: (order.key(monomial_lcm(leading[p[0]], leading[p[1]])), p))


def _update(
    basis: List[Polynomial],
    leading: List[Monomial],
    pairs: Set[Pair],
    f: Polynomial,
    order: TermOrder,
) -> None:
    """Add ``f`` to the basis, pruning pairs with the Gebauer-Moeller criteria."""
    lmf = f.leading_monomial(order)
    lcm = monomial_lcm
    kept = set()
    for i, j in pairs:
        lij = lcm(leading[i], leading[j])
        if (
            not monomial_divides(lmf, lij)
            or lij == lcm(leading[i], lmf)
            or lij == lcm(leading[j], lmf)
        ):
            kept.add((i, j))

    by_lcm: Dict[Monomial, List[int]] = {}
    for i, lm in enumerate(leading):
        by_lcm.setdefault(lcm(lm, lmf), []).append(i)
    minimal: List[Monomial] = []
    for candidate in sorted(by_lcm, key=order.key):
        if all(not monomial_divides(m, candidate) for m in minimal):
            minimal.append(candidate)

    new_index = len(basis)
    for candidate in minimal:
        members = by_lcm[candidate]
        # coprime leading monomials reduce to zero
        if not any(lcm(leading[i], lmf) == monomial_mul(leading[i], lmf) for i in members):
            kept.add((min(members), new_index))

    basis.append(f)
    leading.append(lmf)
    pairs.clear()
    pairs.update(kept)


def _minimalize(basis: List[Polynomial], order: TermOrder) -> List[Polynomial]:
    minimal: List[Polynomial] = []
    for f in sorted(basis, key=lambda h: order.key(h.leading_monomial(order))):
        lm = f.leading_monomial(order)
        if all(not monomial_divides(g.leading_monomial(order), lm) for g in minimal):
            minimal.append(f)
    return minimal


def _interreduce(basis: List[Polynomial], order: TermOrder) -> List[Polynomial]:
    reduced = []
    for i, g in enumerate(basis):
        others = basis[:i] + basis[i + 1 :]
        reduced.append(reduce(g, others, order).monic(order))
    return reduced


def buchberger(generators: Sequence[Polynomial], order: Optional[TermOrder] = None) -> GroebnerBasis:
    """Reduced Groebner basis of the ideal generated by ``generators``.

    An empty or all-zero generator list yields the zero ideal.
    """
    gens = [g for g in generators if not g.is_zero()]
    if not generators:
        if order is None:
            raise VariableMismatchError("cannot infer the ring of an empty generator list")
        return GroebnerBasis.zero_ideal(order.nvars, order)
    nvars = generators[0].nvars
    if any(g.nvars != nvars for g in generators):
        raise VariableMismatchError("generators live in different polynomial rings")
    order = order or TermOrder.grevlex(nvars)
    if order.nvars != nvars:
        raise VariableMismatchError("term order and generators disagree on the variables")
    if not gens:
        return GroebnerBasis.zero_ideal(nvars, order)

    basis: List[Polynomial] = []
    leading: List[Monomial] = []
    pairs: Set[Pair] = set()
    for g in gens:
        _update(basis, leading, pairs, g.monic(order), order)

    reductions = 0
    while pairs:
        i, j = _select(pairs, leading, order)
        pairs.remove((i, j))
        s = s_polynomial(basis[i], basis[j], order)
        r = reduce(s, basis, order, leading)
        reductions += 1
        if not r.is_zero():
            _update(basis, leading, pairs, r.monic(order), order)

    result = _interreduce(_minimalize(basis, order), order)
    result.sort(key=lambda g: order.key(g.leading_monomial(order)))
    logger.debug(f"Groebner basis with {len(result)} elements after {reductions} reductions")
    return GroebnerBasis(
        tuple(result), order, nvars, tuple(g.leading_monomial(order) for g in result)
    )


def normal_form(p: Polynomial, gb: GroebnerBasis) -> Polynomial:
    """Unique remainder of ``p`` modulo the ideal of ``gb``."""
    if p.nvars != gb.nvars:
        raise VariableMismatchError(
            f"polynomial has {p.nvars} variables but the basis has {gb.nvars}"
        )
    return reduce(p, gb.generators, gb.order, gb.leading)


def is_standard(monomial: Monomial, gb: GroebnerBasis) -> bool:
    return not any(monomial_divides(lm, monomial) for lm in gb.leading)


def standard_monomials(gb: GroebnerBasis, degree: int, cap: Optional[int] = None) -> List[Monomial]:
    """Monomials of degree at most ``degree`` outside the leading ideal, ascending."""
    if degree < 0:
        return []
    found = [m for m in monomials_up_to(gb.nvars, degree) if is_standard(m, gb)]
    if cap is not None and len(found) > cap:
        raise RelaxationError(
            f"{len(found)} standard monomials of degree <= {degree} exceed the cap of {cap}",
            {"degree": degree, "count": len(found), "cap": cap},
        )
    found.sort(key=gb.order.key)
    return found


class NormalFormCache:
    """Memoized normal forms of monomials and their products with a polynomial."""

    def __init__(self, gb: GroebnerBasis):
        self.gb = gb
        self._monomials: Dict[Monomial, Polynomial] = {}

    def monomial(self, m: Monomial) -> Polynomial:
        cached = self._monomials.get(m)
        if cached is None:
            cached = normal_form(Polynomial.from_monomial(m), self.gb)
            self._monomials[m] = cached
        return cached

    def product(self, m: Monomial, p: Polynomial) -> Polynomial:
        """Normal form of ``m * p``."""
        terms: Dict[Monomial, Fraction] = {}
        for pm, pc in p.terms.items():
            for nm, nc in self.monomial(monomial_mul(m, pm)).terms.items():
                terms[nm] = terms.get(nm, Fraction(0)) + pc * nc
        return Polynomial(self.gb.nvars, terms)

    def polynomial(self, p: Polynomial) -> Polynomial:
        return self.product((0,) * self.gb.nvars, p)
