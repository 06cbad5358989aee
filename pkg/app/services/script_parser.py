"""
Parser and printer for problem scripts.

A script is a sequence of ``;``-terminated statements. Expressions are
polynomials over the symbols declared so far; ``coord`` definitions may use
elementary functions of the domain coordinates.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from app.core.exceptions import ScriptSyntaxError
from app.schemas.script import (
    PREAMBLE,
    DomainCoordinate,
    Location,
    ProblemScript,
    Statement,
    StatementKind,
)
from app.services.polynomial import format_rational

_TOKEN = re.compile(
    r"(?P<space>\s+)|(?P<comment>#[^\n]*)"
    r"|(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>>=|\*\*|[-+*/^(),;\[\]=])"
)

ADJOIN_ARITY = {"oddroot": 2, "evenroot": 2, "recip": 1, "piecewise": 3, "chi": 1}
CHECK_ARITY = {"nonneg": 1, "nonzero": 1, "inj4": 3, "alinj4": 3, "alinj5": 1, "comp": 1}
MODES = ("exact", "closure", "unverified")

ADJOIN_OPTIONS = {
    "oddroot": {},
    "evenroot": {},
    "recip": {"bound": "rational"},
    "piecewise": {"mode": ("exact", "closure")},
    "chi": {"mode": ("compact", "closure")},
}
STATEMENT_OPTIONS = {
    StatementKind.ADD_GEN: {"assert": ("exact", "closure")},
    StatementKind.EXCLUDE: {"eps": "rational"},
    StatementKind.EXPLORE: {"samples": "int", "delta": "float"},
    StatementKind.CERTIFY: {"eps": "rational", "dmax": "int"},
}
STATEMENT_FLAGS = {
    StatementKind.ADD_GEN: ("claim",),
    StatementKind.ADJOIN: ("force",),
}


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    start: int
    end: int
    line: int
    column: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match:
            raise ScriptSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group(kind)
        if kind not in ("space", "comment"):
            tokens.append(_Token(kind, value, pos, match.end(), line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = match.end()
    tokens.append(_Token("end", "", len(text), len(text), line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.domain_names: List[str] = []
        self.scope: List[str] = []
        self.coords: List[str] = []
        self.seen: Set[StatementKind] = set()

    # Token helpers

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def take(self) -> _Token:
        token = self.peek()
        self.pos += 1
        return token

    def error(self, message: str, expected: Optional[str] = None, token: Optional[_Token] = None) -> ScriptSyntaxError:
        token = token or self.peek()
        return ScriptSyntaxError(message, token.line, token.column, expected)

    def expect(self, value: str) -> _Token:
        token = self.peek()
        if token.value != value or token.kind == "end":
            found = token.value or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}", value)
        return self.take()

    def name(self, what: str = "name") -> _Token:
        token = self.peek()
        if token.kind != "name":
            raise self.error(f"expected {what}", what)
        return self.take()

    def at(self, value: str) -> bool:
        token = self.peek()
        return token.kind != "end" and token.value == value

    # Expressions

    def expression(self, stops: Sequence[str] = (",", ";", ")")) -> Tuple[str, List[_Token]]:
        """Raw text of the tokens up to a stop at depth zero."""
        start = self.pos
        depth = 0
        while True:
            token = self.peek()
            if token.kind == "end":
                break
            if depth == 0:
                if token.value in stops and token.kind == "op":
                    break
                if token.kind == "name" and self.pos > start:
                    previous = self.tokens[self.pos - 1]
                    if previous.kind in ("name", "number") or previous.value == ")":
                        break
                if token.kind == "name" and self.peek(1).value == "=":
                    break
            if token.value in ("(", "["):
                depth += 1
            elif token.value in (")", "]"):
                depth -= 1
            self.take()
        used = self.tokens[start:self.pos]
        if not used:
            raise self.error("expected expression", "expression")
        text = self.text[used[0].start:used[-1].end]
        return " ".join(text.split()), used

    def polynomial(self, stops: Sequence[str] = (",", ";", ")")) -> str:
        text, used = self.expression(stops)
        for i, token in enumerate(used):
            if token.kind != "name":
                continue
            if i + 1 < len(used) and used[i + 1].value == "(":
                raise self.error(f"function {token.value!r} is not allowed in a polynomial", token=token)
            if token.value not in self.scope:
                raise self.error(f"unknown symbol {token.value!r}", token=token)
        return text

    def rational(self, stops: Sequence[str] = (",", ";", ")", "]")) -> Fraction:
        text, used = self.expression(stops)
        try:
            return Fraction(text.replace(" ", ""))
        except (ValueError, ZeroDivisionError):
            raise self.error(f"expected a rational number, found {text!r}", "rational", used[0]) from None

    # Options and flags

    def options_and_flags(
        self, allowed: Dict[str, object], flags: Sequence[str]
    ) -> Tuple[Dict[str, str], Tuple[str, ...]]:
        options: Dict[str, str] = {}
        found: List[str] = []
        while not self.at(";"):
            token = self.name("option or ';'")
            if self.at("="):
                self.take()
                if token.value not in allowed:
                    raise self.error(f"unknown option {token.value!r}", ", ".join(allowed) or None, token)
                value, used = self.expression((";",))
                options[token.value] = self._check_option(token.value, value, allowed[token.value], used[0])
            elif token.value in flags:
                found.append(token.value)
            else:
                raise self.error(f"unexpected {token.value!r}", ", ".join(flags) or "';'", token)
        return options, tuple(found)

    def _check_option(self, key: str, value: str, kind: object, token: _Token) -> str:
        compact = value.replace(" ", "")
        try:
            if kind == "rational":
                return format_rational(Fraction(compact))
            if kind == "int":
                if int(compact) <= 0:
                    raise ValueError
                return str(int(compact))
            if kind == "float":
                if float(compact) <= 0:
                    raise ValueError
                return compact
        except (ValueError, ZeroDivisionError):
            raise self.error(f"invalid value {value!r} for {key}", str(kind), token) from None
        if compact not in kind:
            raise self.error(f"invalid value {value!r} for {key}", " | ".join(kind), token)
        return compact

    # Statements

    def declare(self, token: _Token) -> None:
        if token.value in self.scope or token.value in self.domain_names:
            raise self.error(f"duplicate symbol {token.value!r}", token=token)
        self.scope.append(token.value)

    def script(self) -> List[Statement]:
        statements = []
        while self.peek().kind != "end":
            statements.append(self.statement())
        if not statements:
            raise self.error("expected domain", "domain")
        return statements

    def statement(self) -> Statement:
        head = self.peek()
        try:
            kind = StatementKind(head.value) if head.kind == "name" else None
        except ValueError:
            kind = None
        if kind is None:
            raise self.error(f"unknown statement {head.value!r}", "statement")
        if not self.seen and kind != StatementKind.DOMAIN:
            raise self.error("expected domain", "domain")
        if kind == StatementKind.DOMAIN and self.seen:
            raise self.error("exactly one domain statement is allowed")
        if kind in PREAMBLE and self.seen - set(PREAMBLE):
            raise self.error(f"{kind.value} must come before tower statements")
        if kind == StatementKind.COORD and self.seen - {StatementKind.DOMAIN, StatementKind.COORD}:
            raise self.error("coord must directly follow the domain")
        self.take()
        location = Location(line=head.line, column=head.column)
        fields = getattr(self, f"_{kind.value}")()
        self.expect(";")
        self.seen.add(kind)
        return Statement(kind=kind, location=location, **fields)

    def _domain(self) -> dict:
        coordinates = []
        while True:
            token = self.name("coordinate name")
            if token.value in self.domain_names:
                raise self.error(f"duplicate symbol {token.value!r}", token=token)
            self.domain_names.append(token.value)
            keyword = self.name("'in'")
            if keyword.value != "in":
                raise self.error("expected 'in'", "in", keyword)
            if self.at("["):
                self.take()
                lo = self.rational()
                self.expect(",")
                hi = self.rational()
                self.expect("]")
                if lo > hi:
                    raise self.error(f"empty interval for {token.value}")
                coordinates.append(DomainCoordinate(name=token.value, lo=lo, hi=hi))
            else:
                whole = self.name("'[' or 'R'")
                if whole.value != "R":
                    raise self.error("expected '[' or 'R'", "[ | R", whole)
                coordinates.append(DomainCoordinate(name=token.value))
            if not self.at(","):
                break
            self.take()
        self.scope = list(self.domain_names)
        constraints = []
        if self.at("where"):
            self.take()
            while True:
                constraints.append(self.polynomial((">=", ",", ";")))
                self.expect(">=")
                zero = self.take()
                if zero.value != "0":
                    raise self.error("constraints are written EXPR >= 0", "0", zero)
                if not self.at(","):
                    break
                self.take()
        return {"coordinates": tuple(coordinates), "exprs": tuple(constraints)}

    def _coord(self) -> dict:
        token = self.name("coordinate variable")
        if token.value in self.coords:
            raise self.error(f"duplicate symbol {token.value!r}", token=token)
        self.expect("=")
        text, used = self.expression((";",))
        for i, t in enumerate(used):
            called = i + 1 < len(used) and used[i + 1].value == "("
            if t.kind == "name" and not called and t.value not in self.domain_names:
                raise self.error(f"unknown domain coordinate {t.value!r}", token=t)
        self.coords.append(token.value)
        self.scope = list(self.coords)
        return {"name": token.value, "exprs": (text,)}

    def _claim(self) -> dict:
        token = self.name("mode")
        if token.value not in MODES:
            raise self.error(f"unknown mode {token.value!r}", " | ".join(MODES), token)
        return {"operator": token.value}

    def _base_gen(self) -> dict:
        return {"exprs": (self.polynomial((";",)),)}

    _relation = _base_gen

    def _ball_bound(self) -> dict:
        value = self.rational((";",))
        if value <= 0:
            raise self.error("ball bound must be positive")
        return {"options": {"bound": format_rational(value)}}

    def _call(self, arities: Dict[str, int]) -> Tuple[str, List[str]]:
        op = self.name("operator")
        if op.value not in arities:
            raise self.error(f"unknown operator {op.value!r}", " | ".join(arities), op)
        self.expect("(")
        args = [self.polynomial()]
        while self.at(","):
            self.take()
            args.append(self.polynomial())
        self.expect(")")
        if len(args) != arities[op.value]:
            raise self.error(f"{op.value} takes {arities[op.value]} arguments, got {len(args)}", token=op)
        return op.value, args

    def _adjoin(self) -> dict:
        token = self.name("symbol name")
        self.expect("=")
        op, args = self._call(ADJOIN_ARITY)
        if op in ("oddroot", "evenroot") and not args[1].isdigit():
            raise self.error(f"{op} degree must be an integer literal")
        options, flags = self.options_and_flags(ADJOIN_OPTIONS[op], STATEMENT_FLAGS[StatementKind.ADJOIN])
        self.declare(token)
        return {"name": token.value, "operator": op, "exprs": tuple(args), "options": options, "flags": flags}

    def _add_gen(self) -> dict:
        expr = self.polynomial((";",))
        options, flags = self.options_and_flags(
            STATEMENT_OPTIONS[StatementKind.ADD_GEN], STATEMENT_FLAGS[StatementKind.ADD_GEN]
        )
        return {"exprs": (expr,), "options": options, "flags": flags}

    def _exclude(self) -> dict:
        self.expect("(")
        point = [self.rational()]
        while self.at(","):
            self.take()
            point.append(self.rational())
        self.expect(")")
        if len(point) != len(self.scope):
            raise self.error(f"point has {len(point)} coordinates, the tower has {len(self.scope)} variables")
        options, _ = self.options_and_flags(STATEMENT_OPTIONS[StatementKind.EXCLUDE], ())
        if "eps" not in options:
            raise self.error("exclude needs eps=", "eps")
        return {"exprs": tuple(format_rational(v) for v in point), "options": options}

    def _check(self) -> dict:
        op, args = self._call(CHECK_ARITY)
        return {"operator": op, "exprs": tuple(args)}

    def _explore(self) -> dict:
        options, _ = self.options_and_flags(STATEMENT_OPTIONS[StatementKind.EXPLORE], ())
        return {"options": options}

    def _certify(self) -> dict:
        expr = self.polynomial((";",))
        options, _ = self.options_and_flags(STATEMENT_OPTIONS[StatementKind.CERTIFY], ())
        return {"exprs": (expr,), "options": options}

    def _report(self) -> dict:
        return {}


def parse_script(text: str, source: str = "<script>") -> ProblemScript:
    """Parse a problem script; syntax errors carry line, column and expected tokens."""
    return ProblemScript(statements=tuple(_Parser(text).script()), source=source)


# ============================================================================
# Printing
# ============================================================================

def _interval(c: DomainCoordinate) -> str:
    if c.lo is None:
        return f"{c.name} in R"
    return f"{c.name} in [{format_rational(c.lo)}, {format_rational(c.hi)}]"


def format_statement(s: Statement) -> str:
    kind = s.kind
    if kind == StatementKind.DOMAIN:
        body = ", ".join(_interval(c) for c in s.coordinates)
        if s.exprs:
            body += " where " + ", ".join(f"{e} >= 0" for e in s.exprs)
    elif kind == StatementKind.COORD:
        body = f"{s.name} = {s.exprs[0]}"
    elif kind == StatementKind.CLAIM:
        body = s.operator
    elif kind == StatementKind.BALL_BOUND:
        body = s.options["bound"]
    elif kind == StatementKind.ADJOIN:
        body = f"{s.name} = {s.operator}({', '.join(s.exprs)})"
    elif kind == StatementKind.CHECK:
        body = f"{s.operator}({', '.join(s.exprs)})"
    elif kind == StatementKind.EXCLUDE:
        body = f"({', '.join(s.exprs)})"
    else:
        body = ", ".join(s.exprs)
    extras = [f"{k}={v}" for k, v in s.options.items() if kind != StatementKind.BALL_BOUND]
    extras += list(s.flags)
    text = " ".join(part for part in [kind.value, body] + extras if part)
    return text + ";"


def print_script(script: ProblemScript) -> str:
    """Canonical text; parsing it gives back an equivalent script."""
    return "\n".join(format_statement(s) for s in script.statements) + "\n"
