"""
Execution of problem scripts against the tower, explorer and certificate
services, and the files a run leaves behind.
"""

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple, Union

from app.core.config import Settings, settings as default_settings
from app.core.exceptions import CertificateError, PositivityError, RegularityError
from app.schemas.script import (
    OutcomeStatus,
    ProblemScript,
    RunReport,
    Statement,
    StatementKind,
    StatementOutcome,
)
from app.schemas.sos import Certificate, VerificationLevel, VerificationReport
from app.schemas.tower import (
    DomainDescription,
    Mode,
    RegularityCase,
    RegularityData,
    TowerState,
    Verdict,
)
from app.schemas.variety import PointCloud
from app.services.certificates import certify_positivity
from app.services.explorer import exclude_point, explore
from app.services.regularity import check_nonnegative, check_nonvanishing, check_regularity
from app.services.script_parser import format_statement
from app.services.tower import (
    add_generator,
    add_relation,
    adjoin_characteristic,
    adjoin_even_root,
    adjoin_odd_root,
    adjoin_piecewise,
    adjoin_reciprocal,
    init_tower,
)
from app.utils.formats import (
    describe_tower,
    dump_certificate,
    dump_tower,
    export_cloud_csv,
    format_gap_report,
    format_verification_report,
)

logger = logging.getLogger(__name__)

REPORTED_TOLERANCES = (
    "ZERO_TOL",
    "SIGN_TOL",
    "NEIGHBORHOOD_RADIUS",
    "RELATION_TOL",
    "POSITIVITY_TOL",
    "SDP_TOL",
    "NUMERIC_ACCEPT",
    "REFUTE_THRESHOLD",
)

CHECK_CASES = {
    "inj4": RegularityCase.INJ_CASE4,
    "alinj4": RegularityCase.ALINJ_CASE4,
    "alinj5": RegularityCase.ALINJ_CASE5,
    "comp": RegularityCase.COMP,
}


class _StatementFailed(PositivityError):
    """A statement ran but its verdict fails the run."""

    def __init__(self, message: str, exit_code: int, verdict: Optional[str] = None, witness: Optional[str] = None):
        super().__init__(message)
        self.exit_code = exit_code
        self.verdict = verdict
        self.witness = witness


@dataclass
class ScriptRun:
    """Everything a run produced: the report plus the artifacts behind it."""

    report: RunReport
    tower: Optional[TowerState] = None
    image: Optional[PointCloud] = None
    variety: Optional[PointCloud] = None
    certificates: List[Certificate] = field(default_factory=list)
    verifications: List[VerificationReport] = field(default_factory=list)


class _Runner:
    def __init__(self, script: ProblemScript, settings: Settings):
        self.script = script
        self.settings = settings
        self.domain: Optional[DomainDescription] = None
        self.coordinates: List[Tuple[str, str]] = []
        self.base_gens: List[str] = []
        self.ball_bound: Optional[Fraction] = None
        self.claimed: Optional[Mode] = None
        self.run = ScriptRun(report=RunReport(
            source=script.source,
            seed=settings.DEFAULT_SEED,
            tolerances={key: float(getattr(settings, key)) for key in REPORTED_TOLERANCES},
        ))

    @property
    def tower(self) -> TowerState:
        if self.run.tower is None:
            self.run.tower = init_tower(
                self.domain,
                base_gens=self.base_gens,
                ball_bound=self.ball_bound,
                coordinates=self.coordinates or None,
                claimed_mode=self.claimed,
                settings=self.settings,
            )
        return self.run.tower

    @tower.setter
    def tower(self, value: TowerState) -> None:
        self.run.tower = value

    def execute(self) -> ScriptRun:
        report = self.run.report
        for statement in self.script.statements:
            text = format_statement(statement)
            started = time.perf_counter()
            outcome = StatementOutcome(line=statement.location.line, statement=text, status=OutcomeStatus.OK)
            try:
                update = getattr(self, f"_{statement.kind.value}")(statement) or {}
                outcome = outcome.model_copy(update=update)
            except _StatementFailed as exc:
                outcome = outcome.model_copy(update={
                    "status": OutcomeStatus.FAILED, "summary": exc.message,
                    "verdict": exc.verdict, "witness": exc.witness,
                })
                report.exit_code = exc.exit_code
            except RegularityError as exc:
                result = exc.result
                outcome = outcome.model_copy(update={
                    "status": OutcomeStatus.FAILED, "summary": exc.message,
                    "verdict": result.verdict.value if result else None,
                    "witness": result.witness_text if result and result.witness_text else None,
                })
                report.exit_code = exc.exit_code
            except PositivityError as exc:
                outcome = outcome.model_copy(update={"status": OutcomeStatus.FAILED, "summary": exc.message})
                report.exit_code = exc.exit_code
            if self.run.tower is not None and outcome.mode is None and statement.kind not in (
                StatementKind.DOMAIN, StatementKind.COORD, StatementKind.CLAIM,
                StatementKind.BASE_GEN, StatementKind.BALL_BOUND,
            ):
                outcome = outcome.model_copy(update={"mode": self.run.tower.mode.value})
            outcome = outcome.model_copy(update={"elapsed": time.perf_counter() - started})
            report.outcomes.append(outcome)
            if outcome.status == OutcomeStatus.FAILED:
                report.error = f"line {statement.location.line}: {outcome.summary}"
                logger.warning(f"Script {self.script.source} halted at {report.error}")
                break
        else:
            try:
                self.tower
            except PositivityError as exc:
                report.exit_code = exc.exit_code
                report.error = exc.message
        if self.run.tower is not None:
            report.final_mode = self.run.tower.mode.value
            report.archimedean = self.run.tower.witness.archimedean
        logger.info(f"Script {self.script.source} finished with exit code {report.exit_code}")
        return self.run

    # Preamble

    def _domain(self, s: Statement) -> dict:
        self.domain = DomainDescription(
            coordinates=tuple(c.name for c in s.coordinates),
            box=tuple(None if c.lo is None else (c.lo, c.hi) for c in s.coordinates),
            constraints=s.exprs,
        )
        return {}

    def _coord(self, s: Statement) -> dict:
        self.coordinates.append((s.name, s.exprs[0]))
        return {}

    def _claim(self, s: Statement) -> dict:
        self.claimed = Mode(s.operator)
        return {}

    def _base_gen(self, s: Statement) -> dict:
        self.base_gens.append(s.exprs[0])
        return {}

    def _ball_bound(self, s: Statement) -> dict:
        self.ball_bound = Fraction(s.options["bound"])
        return {}

    # Tower statements

    def _last_reason(self) -> str:
        return self.tower.history[-1].reason if self.tower.history else ""

    def _relation(self, s: Statement) -> dict:
        self.tower = add_relation(self.tower, s.exprs[0], self.settings)
        return {"summary": self._last_reason()}

    def _adjoin(self, s: Statement) -> dict:
        tw, name, args = self.tower, s.name, s.exprs
        force = "force" in s.flags
        if s.operator == "oddroot":
            tw = adjoin_odd_root(tw, name, args[0], int(args[1]))
        elif s.operator == "evenroot":
            tw = adjoin_even_root(tw, name, args[0], int(args[1]), self.settings)
        elif s.operator == "recip":
            bound = Fraction(s.options["bound"]) if "bound" in s.options else None
            tw = adjoin_reciprocal(tw, name, args[0], bound, self.settings)
        elif s.operator == "piecewise":
            mode = Mode(s.options.get("mode", "exact"))
            tw = adjoin_piecewise(tw, name, args[0], args[1], args[2], mode, force, self.settings)
        else:
            tw = adjoin_characteristic(tw, name, args[0], s.options.get("mode", "closure"), force, self.settings)
        self.tower = tw
        return {"summary": self._last_reason()}

    def _add_gen(self, s: Statement) -> dict:
        asserted = Mode(s.options["assert"]) if "assert" in s.options else None
        self.tower = add_generator(
            self.tower, s.exprs[0], claim_nonneg="claim" in s.flags, asserted_mode=asserted, settings=self.settings,
        )
        return {"summary": self._last_reason()}

    def _exclude(self, s: Statement) -> dict:
        point = [Fraction(x) for x in s.exprs]
        self.tower = exclude_point(self.tower, point, Fraction(s.options["eps"]), settings=self.settings)
        return {"summary": self._last_reason(), "seed": self.settings.DEFAULT_SEED}

    def _check(self, s: Statement) -> dict:
        tw = self.tower
        polys = [tw.parse(e) for e in s.exprs]
        if s.operator in ("nonneg", "nonzero"):
            check = (check_nonnegative if s.operator == "nonneg" else check_nonvanishing)(tw, polys[0], self.settings)
            verdict = Verdict.PASS if check.holds else Verdict.FAIL
            if not check.holds:
                raise _StatementFailed(
                    f"{s.operator} fails ({check.method.value})", RegularityError.exit_code,
                    verdict.value, check.witness_text,
                )
            return {"verdict": verdict.value, "summary": f"{s.operator} holds ({check.method.value})"}
        if len(polys) == 3:
            data = RegularityData(g=polys[0], h=polys[1], q=polys[2])
        else:
            data = RegularityData(q=polys[0])
        result = check_regularity(tw, data, CHECK_CASES[s.operator], self.settings)
        undecided_ok = result.verdict == Verdict.UNDECIDED and self.settings.FORCE_UNDECIDED
        if result.verdict != Verdict.PASS and not undecided_ok:
            raise _StatementFailed(
                result.describe(), RegularityError.exit_code, result.verdict.value, result.witness_text,
            )
        return {"verdict": result.verdict.value, "summary": result.describe(), "witness": result.witness_text}

    def _explore(self, s: Statement) -> dict:
        samples = int(s.options["samples"]) if "samples" in s.options else None
        delta = float(s.options["delta"]) if "delta" in s.options else None
        image, variety, gap = explore(self.tower, samples, delta, settings=self.settings)
        self.run.image, self.run.variety = image, variety
        top = gap.top
        witness = None
        if top is not None:
            witness = "(" + ", ".join(f"{x:.6g}" for x in top.point) + ")"
        return {
            "verdict": gap.verdict.value,
            "summary": format_gap_report(gap),
            "witness": witness,
            "seed": image.seed,
        }

    def _certify(self, s: Statement) -> dict:
        tw = self.tower
        eps = Fraction(s.options.get("eps", "0"))
        d_max = int(s.options["dmax"]) if "dmax" in s.options else None
        outcome = certify_positivity(tw, tw.parse(s.exprs[0]), eps, d_max, self.settings)
        if not outcome.success:
            trail = ", ".join(f"d={a.degree}: {a.status}" for a in outcome.attempts)
            message = outcome.reason + (f" [{trail}]" if trail else "")
            raise _StatementFailed(message, CertificateError.exit_code, "Failure")
        self.run.certificates.append(outcome.certificate)
        self.run.verifications.append(outcome.report)
        if outcome.report.level == VerificationLevel.REFUTED:
            raise _StatementFailed(
                format_verification_report(outcome.report), CertificateError.exit_code,
                outcome.report.level.value, outcome.report.witness,
            )
        return {"verdict": outcome.report.level.value, "summary": format_verification_report(outcome.report)}

    def _report(self, s: Statement) -> dict:
        return {"summary": describe_tower(self.tower)}


def run_script(script: ProblemScript, settings: Optional[Settings] = None) -> ScriptRun:
    """Execute statements in order; the first failing statement halts the run."""
    settings = settings or default_settings
    logger.info(f"Running {script.source}: {len(script.statements)} statements, seed {settings.DEFAULT_SEED}")
    return _Runner(script, settings).execute()


def emit_outputs(run: ScriptRun, directory: Union[str, Path]) -> List[Path]:
    """Write the tower, point clouds, certificates and the report into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    if run.tower is not None:
        path = directory / "tower.txt"
        path.write_text(dump_tower(run.tower))
        written.append(path)
    if run.image is not None:
        written.append(export_cloud_csv(run.image, directory / "image.csv"))
    if run.variety is not None:
        written.append(export_cloud_csv(run.variety, directory / "variety.csv"))
    for i, cert in enumerate(run.certificates, start=1):
        path = directory / ("certificate.txt" if i == 1 else f"certificate_{i}.txt")
        path.write_text(dump_certificate(cert))
        written.append(path)
    path = directory / "report.txt"
    path.write_text(run.report.to_text())
    written.append(path)
    logger.info(f"Wrote {len(written)} files to {directory}")
    return written
