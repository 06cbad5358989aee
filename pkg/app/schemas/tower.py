"""
Schemas for extension towers: function symbols, quadratic modules,
archimedean witnesses and regularity results.
"""
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.services.groebner import GroebnerBasis
from app.services.polynomial import Polynomial, parse_polynomial


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# ============================================================================
# Modes
# ============================================================================

class Mode(str, Enum):
    """How the tower's image relates to K_{Q,Y}."""
    EXACT = "exact"            # m(X) = K_{Q,Y}
    CLOSURE = "closure"        # closure of m(X) = K_{Q,Y}
    UNVERIFIED = "unverified"  # nothing claimed


MODE_RANK = {Mode.UNVERIFIED: 0, Mode.CLOSURE: 1, Mode.EXACT: 2}


def weakest(*modes: Mode) -> Mode:
    return min(modes, key=MODE_RANK.__getitem__)


class ModeEvent(_Frozen):
    """One entry of the mode history."""
    step: int
    mode: Mode
    reason: str


# ============================================================================
# Domain
# ============================================================================

class DomainDescription(_Frozen):
    """Semialgebraic domain X: coordinate names, an optional box and constraints >= 0."""
    coordinates: Tuple[str, ...] = Field(..., description="Domain coordinate names")
    box: Tuple[Optional[Tuple[Fraction, Fraction]], ...] = Field(
        ..., description="Per-coordinate closed interval, None when unbounded"
    )
    constraints: Tuple[str, ...] = Field(default=(), description="Polynomials required >= 0")

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    @property
    def is_compact(self) -> bool:
        return all(interval is not None for interval in self.box)

    @property
    def is_interval(self) -> bool:
        return self.dimension == 1 and not self.constraints

    def constraint_polynomials(self) -> List[Polynomial]:
        return [parse_polynomial(text, self.coordinates) for text in self.constraints]


# ============================================================================
# Function symbols
# ============================================================================

class SymbolKind(str, Enum):
    BASE_POLY = "base_poly"
    ELEMENTARY = "elementary"
    ODD_ROOT = "odd_root"
    EVEN_ROOT = "even_root"
    RECIPROCAL = "reciprocal"
    PIECEWISE = "piecewise"
    CHARACTERISTIC = "characteristic"


BASE_KINDS = (SymbolKind.BASE_POLY, SymbolKind.ELEMENTARY)


class FunctionSymbol(_Frozen):
    """Definition of one tower variable as a function on the domain.

    ``g``, ``h`` and ``q`` live in the ring of the variables defined before
    this one (``index`` variables).
    """
    name: str
    kind: SymbolKind
    index: int
    poly: Optional[Polynomial] = Field(None, description="Base polynomial in domain coordinates")
    expr: Optional[str] = Field(None, description="Elementary expression in domain coordinates")
    g: Optional[Polynomial] = None
    h: Optional[Polynomial] = None
    q: Optional[Polynomial] = None
    degree: Optional[int] = None
    bound: Optional[Fraction] = None
    continuous: bool = True

    @property
    def is_base(self) -> bool:
        return self.kind in BASE_KINDS

    @property
    def is_binary(self) -> bool:
        return self.kind == SymbolKind.CHARACTERISTIC


# ============================================================================
# Quadratic module, relations and archimedean witness
# ============================================================================

class Provenance(str, Enum):
    BASE = "base"
    BALL = "ball"
    ADJUNCTION = "adjunction"
    BOUND = "bound"
    SEPARATOR = "separator"
    MANUAL = "manual"
    RELATION = "relation"


class GeneratorEntry(_Frozen):
    poly: Polynomial
    provenance: Provenance
    note: str = ""


class QuadraticModuleDesc(_Frozen):
    """Finite generator list of a quadratic module; the constant 1 is implicit."""
    generators: Tuple[GeneratorEntry, ...] = ()

    def polynomials(self) -> List[Polynomial]:
        return [entry.poly for entry in self.generators]


class RelationEntry(_Frozen):
    poly: Polynomial
    provenance: Provenance
    note: str = ""


class VariableState(str, Enum):
    INTEGRAL = "integral"
    BOUNDED = "bounded"
    UNBOUNDED = "unbounded"


class VariableStatus(_Frozen):
    name: str
    state: VariableState
    bound: Optional[Fraction] = Field(None, description="N with N - v^2 in Q when bounded")
    justification: str = ""


class ArchimedeanWitness(_Frozen):
    statuses: Tuple[VariableStatus, ...] = ()

    @property
    def archimedean(self) -> bool:
        return all(s.state != VariableState.UNBOUNDED for s in self.statuses)

    def status_of(self, name: str) -> VariableStatus:
        for status in self.statuses:
            if status.name == name:
                return status
        raise KeyError(name)


# ============================================================================
# Tower
# ============================================================================

class TowerState(_Frozen):
    """Presentation A = R[v_1..v_t]/I with quadratic module Q and mode."""
    domain: DomainDescription
    variables: Tuple[str, ...]
    symbols: Tuple[FunctionSymbol, ...]
    relations: Tuple[RelationEntry, ...] = ()
    ideal: GroebnerBasis
    qmodule: QuadraticModuleDesc
    witness: ArchimedeanWitness
    mode: Mode
    history: Tuple[ModeEvent, ...] = ()
    ball_bound: Optional[Fraction] = None

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def base_count(self) -> int:
        return sum(1 for s in self.symbols if s.is_base)

    def index_of(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise KeyError(name) from None

    def parse(self, text: str) -> Polynomial:
        return parse_polynomial(text, self.variables)

    def generator_polynomials(self) -> List[Polynomial]:
        return self.qmodule.polynomials()

    def relation_polynomials(self) -> List[Polynomial]:
        return [entry.poly for entry in self.relations]


# ============================================================================
# Regularity
# ============================================================================

class RegularityCase(str, Enum):
    INJ_CASE4 = "inj4"
    ALINJ_CASE4 = "alinj4"
    ALINJ_CASE5 = "alinj5"
    COMP = "comp"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    UNDECIDED = "undecided"


class CheckMethod(str, Enum):
    STURM_EXACT = "sturm_exact"
    SAMPLING = "sampling"
    VACUOUS = "vacuous"


class RegularityData(_Frozen):
    """Polynomials a regularity condition is about (g, h only for piecewise cases)."""
    q: Polynomial
    g: Optional[Polynomial] = None
    h: Optional[Polynomial] = None


class RegularityResult(_Frozen):
    case: RegularityCase
    verdict: Verdict
    method: CheckMethod
    witness: Optional[List[float]] = Field(None, description="Point violating the condition")
    witness_text: Optional[str] = Field(None, description="Exact witness when available")
    details: Dict[str, Any] = Field(default_factory=dict)

    def describe(self) -> str:
        text = f"{self.case.value}: {self.verdict.value} ({self.method.value})"
        if self.witness_text:
            text += f" witness {self.witness_text}"
        elif self.witness is not None:
            text += " witness (" + ", ".join(f"{x:.6g}" for x in self.witness) + ")"
        return text


class SurjectivityReport(_Frozen):
    holds: bool
    max_distance: float
    delta: float
    samples: int
    seed: int
    worst_point: Optional[List[float]] = None
