"""
Schemas for problem scripts and their run reports.
"""
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


class StatementKind(str, Enum):
    DOMAIN = "domain"
    COORD = "coord"
    CLAIM = "claim"
    BASE_GEN = "base_gen"
    BALL_BOUND = "ball_bound"
    RELATION = "relation"
    ADJOIN = "adjoin"
    ADD_GEN = "add_gen"
    EXCLUDE = "exclude"
    CHECK = "check"
    EXPLORE = "explore"
    CERTIFY = "certify"
    REPORT = "report"


# Statements that configure the base algebra and must come before the rest
PREAMBLE = (
    StatementKind.DOMAIN,
    StatementKind.COORD,
    StatementKind.CLAIM,
    StatementKind.BASE_GEN,
    StatementKind.BALL_BOUND,
)


class Location(BaseModel):
    model_config = ConfigDict(frozen=True)

    line: int
    column: int


class DomainCoordinate(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None


class Statement(BaseModel):
    """One parsed statement.

    ``operator`` is the adjunction kind (oddroot, evenroot, recip, piecewise,
    chi) or the check kind (nonneg, nonzero, inj4, alinj4, alinj5, comp).
    ``exprs`` are expression texts in source order, ``options`` the
    ``key=value`` pairs and ``flags`` the bare keywords such as ``force``.
    """
    model_config = ConfigDict(frozen=True)

    kind: StatementKind
    location: Location
    name: Optional[str] = None
    operator: Optional[str] = None
    exprs: Tuple[str, ...] = ()
    options: Dict[str, str] = Field(default_factory=dict)
    flags: Tuple[str, ...] = ()
    coordinates: Tuple[DomainCoordinate, ...] = ()

    def normalized(self) -> dict:
        """Content without the source location."""
        return self.model_dump(exclude={"location"})


class ProblemScript(BaseModel):
    model_config = ConfigDict(frozen=True)

    statements: Tuple[Statement, ...]
    source: str = "<script>"

    @property
    def domain(self) -> Statement:
        return self.statements[0]

    def normalized(self) -> List[dict]:
        return [s.normalized() for s in self.statements]


# ============================================================================
# Run reports
# ============================================================================

class OutcomeStatus(str, Enum):
    OK = "ok"
    FAILED = "failed"


class StatementOutcome(BaseModel):
    line: int
    statement: str = Field(..., description="Canonical text of the statement")
    status: OutcomeStatus
    mode: Optional[str] = Field(None, description="Tower mode after the statement")
    summary: str = ""
    verdict: Optional[str] = Field(None, description="Regularity, gap or verification verdict")
    witness: Optional[str] = None
    seed: Optional[int] = None
    elapsed: float = Field(0.0, description="Wall time in seconds; not part of the text report")


class RunReport(BaseModel):
    source: str
    seed: int
    tolerances: Dict[str, float]
    outcomes: List[StatementOutcome] = Field(default_factory=list)
    exit_code: int = 0
    error: Optional[str] = None
    final_mode: Optional[str] = None
    archimedean: Optional[bool] = None

    @property
    def succeeded(self) -> bool:
        return self.exit_code == 0

    def to_text(self) -> str:
        """Deterministic text rendering: identical for identical seeds."""
        lines = [f"run report for {self.source}", f"seed: {self.seed}"]
        for key in sorted(self.tolerances):
            lines.append(f"tolerance {key}: {self.tolerances[key]:g}")
        for outcome in self.outcomes:
            lines.append(f"[line {outcome.line}] {outcome.statement}")
            lines.append(f"  status: {outcome.status.value}")
            if outcome.mode:
                lines.append(f"  mode: {outcome.mode}")
            if outcome.verdict:
                lines.append(f"  verdict: {outcome.verdict}")
            if outcome.witness:
                lines.append(f"  witness: {outcome.witness}")
            if outcome.seed is not None:
                lines.append(f"  seed: {outcome.seed}")
            for detail in outcome.summary.splitlines():
                lines.append(f"  {detail}")
        if self.final_mode:
            lines.append(f"final mode: {self.final_mode}")
        if self.archimedean is not None:
            lines.append(f"archimedean: {str(self.archimedean).lower()}")
        if self.error:
            lines.append(f"error: {self.error}")
        lines.append(f"exit code: {self.exit_code}")
        return "\n".join(lines) + "\n"
