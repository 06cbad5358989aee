"""
Exact sparse polynomials over the rationals.

A polynomial lives in a fixed number of variables; its terms map exponent
tuples to nonzero ``Fraction`` coefficients. Variable names are kept by the
caller (the tower) and only matter for parsing and printing.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import PolynomialParseError, VariableMismatchError

Monomial = Tuple[int, ...]
Scalar = Union[int, Fraction]


@dataclass(frozen=True)
class TermOrder:
    """Graded reverse lexicographic order.

    ``priority`` lists variable indices from highest to lowest. Adjoined
    variables come last in the tower, so ``grevlex(n)`` ranks them highest.
    """

    priority: Tuple[int, ...]
    name: str = "grevlex"

    @classmethod
    def grevlex(cls, nvars: int) -> "TermOrder":
        return cls(tuple(reversed(range(nvars))))

    @property
    def nvars(self) -> int:
        return len(self.priority)

    def key(self, monomial: Monomial) -> Tuple[int, Tuple[int, ...]]:
        return sum(monomial), tuple(-monomial[i] for i in reversed(self.priority))

    def extend(self, nvars: int) -> "TermOrder":
        """Order on a larger ring with the new variables ranked highest."""
        added = tuple(reversed(range(self.nvars, nvars)))
        return TermOrder(added + self.priority, self.name)


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def monomial_divides(a: Monomial, b: Monomial) -> bool:
    """True when ``a`` divides ``b``."""
    return all(x <= y for x, y in zip(a, b))


def monomial_div(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x - y for x, y in zip(a, b))


def monomial_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def monomials_up_to(nvars: int, degree: int) -> List[Monomial]:
    """All monomials of total degree at most ``degree``."""
    result: List[Monomial] = []

    def build(prefix: List[int], remaining: int, left: int) -> None:
        if left == 0:
            result.append(tuple(prefix))
            return
        for e in range(remaining + 1):
            prefix.append(e)
            build(prefix, remaining - e, left - 1)
            prefix.pop()

    if nvars == 0:
        return [()]
    build([], degree, nvars)
    return result


class Polynomial:
    """Immutable sparse polynomial with rational coefficients."""

    __slots__ = ("nvars", "_terms", "_hash", "_arrays")

    def __init__(self, nvars: int, terms: Optional[Mapping[Monomial, Scalar]] = None):
        self.nvars = nvars
        clean: Dict[Monomial, Fraction] = {}
        for monomial, coefficient in (terms or {}).items():
            if len(monomial) != nvars:
                raise VariableMismatchError(
                    f"monomial {monomial} does not have {nvars} exponents"
                )
            value = Fraction(coefficient)
            if value != 0:
                clean[tuple(monomial)] = value
        self._terms = clean
        self._hash = None
        self._arrays = None

    # Constructors

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, value: Scalar, nvars: int) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, index: int, nvars: int) -> "Polynomial":
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1})

    @classmethod
    def from_monomial(cls, monomial: Monomial, coefficient: Scalar = 1) -> "Polynomial":
        return cls(len(monomial), {monomial: coefficient})

    # Inspection

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def coefficient(self, monomial: Monomial) -> Fraction:
        return self._terms.get(tuple(monomial), Fraction(0))

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(m) for m in self._terms)

    def degree_in(self, index: int) -> int:
        if not self._terms:
            return -1
        return max(m[index] for m in self._terms)

    def variables_used(self) -> List[int]:
        used = set()
        for monomial in self._terms:
            used.update(i for i, e in enumerate(monomial) if e)
        return sorted(used)

    def sorted_terms(self, order: TermOrder, descending: bool = True) -> List[Tuple[Monomial, Fraction]]:
        return sorted(self._terms.items(), key=lambda item: order.key(item[0]), reverse=descending)

    def leading_monomial(self, order: TermOrder) -> Monomial:
        if not self._terms:
            raise ValueError("the zero polynomial has no leading monomial")
        return max(self._terms, key=order.key)

    def leading_term(self, order: TermOrder) -> Tuple[Monomial, Fraction]:
        monomial = self.leading_monomial(order)
        return monomial, self._terms[monomial]

    def leading_coefficient(self, order: TermOrder) -> Fraction:
        return self.leading_term(order)[1]

    def monic(self, order: TermOrder) -> "Polynomial":
        if not self._terms:
            return self
        return self.scale(1 / self.leading_coefficient(order))

    # Arithmetic

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise VariableMismatchError(
                    f"cannot combine polynomials in {self.nvars} and {other.nvars} variables"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(other, self.nvars)
        return NotImplemented

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for monomial, coefficient in other._terms.items():
            terms[monomial] = terms.get(monomial, Fraction(0)) + coefficient
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: Dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = monomial_mul(m1, m2)
                terms[m] = terms.get(m, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("polynomial division by zero")
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, exponent: int) -> "Polynomial":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = Polynomial.constant(1, self.nvars)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def scale(self, factor: Scalar) -> "Polynomial":
        factor = Fraction(factor)
        return Polynomial(self.nvars, {m: c * factor for m, c in self._terms.items()})

    def mul_term(self, monomial: Monomial, coefficient: Scalar) -> "Polynomial":
        coefficient = Fraction(coefficient)
        return Polynomial(
            self.nvars,
            {monomial_mul(m, monomial): c * coefficient for m, c in self._terms.items()},
        )

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other, self.nvars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        names = [f"x{i}" for i in range(self.nvars)]
        return f"Polynomial({format_polynomial(self, names)!r})"

    # Ring changes

    def extend(self, nvars: int) -> "Polynomial":
        """Embed into a ring with more variables appended."""
        if nvars < self.nvars:
            raise VariableMismatchError("cannot shrink a polynomial ring")
        pad = (0,) * (nvars - self.nvars)
        return Polynomial(nvars, {m + pad: c for m, c in self._terms.items()})

    def restrict(self, nvars: int) -> "Polynomial":
        """Drop trailing variables, which must not occur."""
        for monomial in self._terms:
            if any(monomial[nvars:]):
                raise VariableMismatchError("polynomial uses variables beyond the target ring")
        return Polynomial(nvars, {m[:nvars]: c for m, c in self._terms.items()})

    def diff(self, index: int) -> "Polynomial":
        terms: Dict[Monomial, Fraction] = {}
        for monomial, coefficient in self._terms.items():
            e = monomial[index]
            if e:
                m = list(monomial)
                m[index] = e - 1
                terms[tuple(m)] = coefficient * e
        return Polynomial(self.nvars, terms)

    def substitute(self, index: int, value: "Polynomial") -> "Polynomial":
        """Replace variable ``index`` by ``value``."""
        result = Polynomial.zero(self.nvars)
        powers = {0: Polynomial.constant(1, self.nvars)}
        for monomial, coefficient in self._terms.items():
            e = monomial[index]
            if e not in powers:
                powers[e] = value ** e
            m = list(monomial)
            m[index] = 0
            result = result + powers[e].mul_term(tuple(m), coefficient)
        return result

    # Evaluation

    def evaluate(self, point: Sequence[Scalar]) -> Fraction:
        """Exact evaluation at a rational point."""
        if len(point) != self.nvars:
            raise VariableMismatchError(f"expected {self.nvars} coordinates, got {len(point)}")
        values = [Fraction(v) for v in point]
        total = Fraction(0)
        for monomial, coefficient in self._terms.items():
            term = coefficient
            for v, e in zip(values, monomial):
                if e:
                    term *= v ** e
            total += term
        return total

    def _numeric_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._arrays is None:
            if self._terms:
                exps = np.array(list(self._terms.keys()), dtype=np.int64).reshape(len(self._terms), self.nvars)
                coefs = np.array([float(c) for c in self._terms.values()], dtype=float)
            else:
                exps = np.zeros((0, self.nvars), dtype=np.int64)
                coefs = np.zeros(0, dtype=float)
            self._arrays = (exps, coefs)
        return self._arrays

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Floating-point evaluation at each row of ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.nvars:
            raise VariableMismatchError(
                f"expected {self.nvars} coordinates, got {points.shape[1]}"
            )
        exps, coefs = self._numeric_arrays()
        if coefs.size == 0:
            return np.zeros(points.shape[0])
        values = np.ones((points.shape[0], coefs.size))
        for i in range(self.nvars):
            column = exps[:, i]
            if column.any():
                values *= points[:, i : i + 1] ** column[None, :]
        return values @ coefs


def poly_arith(a: Polynomial, b: Polynomial, op: str) -> Polynomial:
    """Add, subtract or multiply two polynomials over the same variables.

    ``scale`` multiplies ``a`` by the constant ``b``.
    """
    if a.nvars != b.nvars:
        raise VariableMismatchError(
            f"cannot combine polynomials in {a.nvars} and {b.nvars} variables"
        )
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "scale":
        if not b.is_constant():
            raise ValueError(f"scale needs a constant factor, got degree {b.degree()}")
        return a.scale(b.constant_value())
    raise ValueError(f"unknown polynomial operation: {op}")


# Text format

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        match = _TOKEN.match(stripped, pos)
        if not match or match.end() == pos:
            raise PolynomialParseError(f"unexpected character {stripped[pos]!r}", pos, text)
        kind = match.lastgroup
        start = match.start(kind)
        value = match.group(kind)
        if value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = match.end()
    tokens.append(("end", "", len(stripped)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.index = {name: i for i, name in enumerate(variables)}
        self.nvars = len(variables)

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> Tuple[str, str, int]:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def fail(self, message: str) -> PolynomialParseError:
        return PolynomialParseError(message, self.peek()[2], self.text)

    def parse(self) -> Polynomial:
        if self.peek()[0] == "end":
            raise self.fail("empty expression")
        result = self.expression()
        if self.peek()[0] != "end":
            raise self.fail(f"unexpected token {self.peek()[1]!r}")
        return result

    def expression(self) -> Polynomial:
        result = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Polynomial:
        result = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                result = result * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise self.fail("division is only allowed by nonzero constants")
                result = result / rhs.constant_value()
        return result

    def unary(self) -> Polynomial:
        if self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            operand = self.unary()
            return -operand if op == "-" else operand
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, value, _ = self.peek()
            if kind != "number" or not value.isdigit():
                raise self.fail("exponents must be nonnegative integers")
            self.take()
            return base ** int(value)
        return base

    def atom(self) -> Polynomial:
        kind, value, _ = self.peek()
        if kind == "number":
            self.take()
            return Polynomial.constant(Fraction(value), self.nvars)
        if kind == "name":
            if value not in self.index:
                raise self.fail(f"unknown variable {value!r}")
            self.take()
            return Polynomial.variable(self.index[value], self.nvars)
        if kind == "op" and value == "(":
            self.take()
            inner = self.expression()
            if self.peek()[1] != ")":
                raise self.fail("expected ')'")
            self.take()
            return inner
        raise self.fail(f"unexpected token {value!r}" if value else "unexpected end of expression")


def parse_polynomial(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``text`` as a polynomial over ``variables``."""
    return _Parser(text, variables).parse()


def format_rational(value: Scalar) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PolynomialParseError(f"invalid rational {text!r}", 0, text) from exc


def format_monomial(monomial: Monomial, variables: Sequence[str]) -> str:
    parts = []
    for name, e in zip(variables, monomial):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts) if parts else "1"


def parse_monomial(text: str, variables: Sequence[str]) -> Monomial:
    poly = parse_polynomial(text, variables)
    if len(poly.terms) != 1:
        raise PolynomialParseError(f"not a monomial: {text!r}", 0, text)
    (monomial, coefficient), = poly.terms.items()
    if coefficient != 1:
        raise PolynomialParseError(f"not a monomial: {text!r}", 0, text)
    return monomial


def _display_key(monomial: Monomial) -> Tuple[int, Tuple[int, ...]]:
    return -sum(monomial), tuple(-e for e in monomial)


def format_polynomial(p: Polynomial, variables: Sequence[str]) -> str:
    """Print ``p`` with explicit coefficients, e.g. ``1*x^2 + 1*y^2 - 1``.

    Terms go by descending degree, ties broken lexicographically in the
    order the variables were declared.
    """
    if len(variables) != p.nvars:
        raise VariableMismatchError(f"expected {p.nvars} variable names, got {len(variables)}")
    if p.is_zero():
        return "0"
    pieces: List[str] = []
    for monomial, coefficient in sorted(p.terms.items(), key=lambda item: _display_key(item[0])):
        magnitude = format_rational(abs(coefficient))
        body = magnitude if sum(monomial) == 0 else f"{magnitude}*{format_monomial(monomial, variables)}"
        if not pieces:
            pieces.append(f"-{body}" if coefficient < 0 else body)
        else:
            pieces.append(f"- {body}" if coefficient < 0 else f"+ {body}")
    return " ".join(pieces)
