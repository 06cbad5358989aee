"""
Text formats for towers, certificates, point clouds and reports.

Towers and certificates are line oriented: one keyword per line followed by
shell-quoted fields, rationals written as ``num/den``. Both round-trip
exactly.
"""

import logging
import shlex
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from app.core.exceptions import CertificateError, TowerError
from app.schemas.sos import Certificate, CertificateBlock, VerificationReport
from app.schemas.tower import (
    ArchimedeanWitness,
    DomainDescription,
    FunctionSymbol,
    GeneratorEntry,
    Mode,
    ModeEvent,
    Provenance,
    QuadraticModuleDesc,
    RelationEntry,
    SymbolKind,
    TowerState,
    VariableState,
    VariableStatus,
)
from app.schemas.variety import GapReport, PointCloud
from app.services.groebner import buchberger
from app.services.polynomial import (
    Polynomial,
    TermOrder,
    format_monomial,
    format_polynomial,
    format_rational,
    parse_monomial,
    parse_polynomial,
    parse_rational,
)

logger = logging.getLogger(__name__)

TOWER_HEADER = "tower v1"
CERTIFICATE_HEADER = "certificate v1"


def _line(keyword: str, *fields: str, **options: Optional[str]) -> str:
    parts = [keyword] + [shlex.quote(f) for f in fields]
    parts += [f"{key}={shlex.quote(value)}" for key, value in options.items() if value is not None]
    return " ".join(parts)


def _split(line: str) -> Tuple[str, List[str], Dict[str, str]]:
    tokens = shlex.split(line)
    positional, options = [], {}
    for token in tokens[1:]:
        key, sep, value = token.partition("=")
        if sep and key.isidentifier():
            options[key] = value
        else:
            positional.append(token)
    return tokens[0], positional, options


def _lines(text: str) -> List[str]:
    return [line.strip() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]


# ============================================================================
# Towers
# ============================================================================

def dump_tower(tw: TowerState) -> str:
    """Serialize a tower; ``load_tower`` restores an equal state."""
    dom = tw.domain
    out = [TOWER_HEADER]
    for name, interval in zip(dom.coordinates, dom.box):
        if interval is None:
            out.append(_line("coordinate", name))
        else:
            out.append(_line("coordinate", name, lo=format_rational(interval[0]), hi=format_rational(interval[1])))
    for constraint in dom.constraints:
        out.append(_line("constraint", constraint))
    if tw.ball_bound is not None:
        out.append(_line("ball_bound", format_rational(tw.ball_bound)))

    for s in tw.symbols:
        earlier = tw.variables[:s.index]
        out.append(_line(
            "symbol", s.name, s.kind.value,
            poly=format_polynomial(s.poly, dom.coordinates) if s.poly is not None else None,
            expr=s.expr,
            g=format_polynomial(s.g, earlier) if s.g is not None else None,
            h=format_polynomial(s.h, earlier) if s.h is not None else None,
            q=format_polynomial(s.q, earlier) if s.q is not None else None,
            degree=str(s.degree) if s.degree is not None else None,
            bound=format_rational(s.bound) if s.bound is not None else None,
            continuous=str(s.continuous).lower(),
        ))
    for r in tw.relations:
        out.append(_line("relation", format_polynomial(r.poly, tw.variables), provenance=r.provenance.value, note=r.note))
    for g in tw.qmodule.generators:
        out.append(_line("generator", format_polynomial(g.poly, tw.variables), provenance=g.provenance.value, note=g.note))
    for status in tw.witness.statuses:
        out.append(_line(
            "status", status.name, status.state.value,
            bound=format_rational(status.bound) if status.bound is not None else None,
            why=status.justification,
        ))
    for event in tw.history:
        out.append(_line("event", str(event.step), event.mode.value, event.reason))
    out.append(_line("mode", tw.mode.value))
    out.append("end")
    return "\n".join(out) + "\n"


def load_tower(text: str) -> TowerState:
    lines = _lines(text)
    if not lines or lines[0] != TOWER_HEADER:
        raise TowerError(f"expected header {TOWER_HEADER!r}")
    coordinates: List[str] = []
    box: List[Optional[Tuple[Fraction, Fraction]]] = []
    constraints: List[str] = []
    ball_bound = None
    symbol_fields: List[Tuple[List[str], Dict[str, str]]] = []
    relation_fields: List[Tuple[str, Dict[str, str]]] = []
    generator_fields: List[Tuple[str, Dict[str, str]]] = []
    statuses: List[VariableStatus] = []
    history: List[ModeEvent] = []
    mode = None

    for line in lines[1:]:
        if line == "end":
            break
        try:
            keyword, args, opts = _split(line)
        except ValueError as exc:
            raise TowerError(f"malformed tower line {line!r}: {exc}") from exc
        if keyword == "coordinate":
            coordinates.append(args[0])
            box.append((parse_rational(opts["lo"]), parse_rational(opts["hi"])) if "lo" in opts else None)
        elif keyword == "constraint":
            constraints.append(args[0])
        elif keyword == "ball_bound":
            ball_bound = parse_rational(args[0])
        elif keyword == "symbol":
            symbol_fields.append((args, opts))
        elif keyword == "relation":
            relation_fields.append((args[0], opts))
        elif keyword == "generator":
            generator_fields.append((args[0], opts))
        elif keyword == "status":
            statuses.append(VariableStatus(
                name=args[0],
                state=VariableState(args[1]),
                bound=parse_rational(opts["bound"]) if "bound" in opts else None,
                justification=opts.get("why", ""),
            ))
        elif keyword == "event":
            history.append(ModeEvent(step=int(args[0]), mode=Mode(args[1]), reason=args[2]))
        elif keyword == "mode":
            mode = Mode(args[0])
        else:
            raise TowerError(f"unknown tower line {keyword!r}")
    if mode is None:
        raise TowerError("tower file has no mode line")

    domain = DomainDescription(coordinates=tuple(coordinates), box=tuple(box), constraints=tuple(constraints))
    variables = tuple(args[0] for args, _ in symbol_fields)
    symbols = []
    for index, (args, opts) in enumerate(symbol_fields):
        earlier = variables[:index]

        def poly(key: str, names: Sequence[str] = earlier) -> Optional[Polynomial]:
            return parse_polynomial(opts[key], names) if key in opts else None

        symbols.append(FunctionSymbol(
            name=args[0],
            kind=SymbolKind(args[1]),
            index=index,
            poly=poly("poly", coordinates),
            expr=opts.get("expr"),
            g=poly("g"),
            h=poly("h"),
            q=poly("q"),
            degree=int(opts["degree"]) if "degree" in opts else None,
            bound=parse_rational(opts["bound"]) if "bound" in opts else None,
            continuous=opts.get("continuous", "true") == "true",
        ))
    relations = tuple(
        RelationEntry(poly=parse_polynomial(p, variables), provenance=Provenance(o["provenance"]), note=o.get("note", ""))
        for p, o in relation_fields
    )
    generators = tuple(
        GeneratorEntry(poly=parse_polynomial(p, variables), provenance=Provenance(o["provenance"]), note=o.get("note", ""))
        for p, o in generator_fields
    )
    return TowerState(
        domain=domain,
        variables=variables,
        symbols=tuple(symbols),
        relations=relations,
        ideal=buchberger([r.poly for r in relations], TermOrder.grevlex(len(variables))),
        qmodule=QuadraticModuleDesc(generators=generators),
        witness=ArchimedeanWitness(statuses=tuple(statuses)),
        mode=mode,
        history=tuple(history),
        ball_bound=ball_bound,
    )


def describe_tower(tw: TowerState) -> str:
    """Human-readable summary: variables, relations, generators, witness and mode."""
    lines = [f"variables: {', '.join(tw.variables)}"]
    for r in tw.relations:
        lines.append(f"relation: {format_polynomial(r.poly, tw.variables)} = 0")
    for g in tw.qmodule.generators:
        lines.append(f"generator: {format_polynomial(g.poly, tw.variables)} >= 0 ({g.provenance.value})")
    for s in tw.witness.statuses:
        bound = f" <= {format_rational(s.bound)}" if s.bound is not None else ""
        lines.append(f"status: {s.name} {s.state.value}{bound}")
    lines.append(f"archimedean: {str(tw.witness.archimedean).lower()}")
    lines.append(f"mode: {tw.mode.value}")
    return "\n".join(lines)


# ============================================================================
# Certificates
# ============================================================================

def _entry(value, exact: bool) -> str:
    return format_rational(value) if exact else repr(float(value))


def dump_certificate(cert: Certificate) -> str:
    exact = cert.rationalized
    out = [
        CERTIFICATE_HEADER,
        _line("variables", *cert.variables),
        _line("target", format_polynomial(cert.target, cert.variables)),
        _line("eps", format_rational(cert.eps)),
        _line("degree", str(cert.degree)),
        _line("rationalized", str(exact).lower()),
        _line("residual", "none" if cert.residual is None else repr(float(cert.residual))),
    ]
    for block in cert.blocks:
        out.append(_line("block", format_polynomial(block.generator, cert.variables)))
        out.append(_line("basis", *(format_monomial(m, cert.variables) for m in block.basis)))
        for row in block.gram:
            out.append(_line("row", *(_entry(x, exact) for x in row)))
    out.append("end")
    return "\n".join(out) + "\n"


def load_certificate(text: str) -> Certificate:
    lines = _lines(text)
    if not lines or lines[0] != CERTIFICATE_HEADER:
        raise CertificateError(f"expected header {CERTIFICATE_HEADER!r}")
    header: Dict[str, List[str]] = {}
    blocks: List[Dict] = []
    for line in lines[1:]:
        if line == "end":
            break
        keyword, args, _ = _split(line)
        if keyword == "block":
            blocks.append({"generator": args[0], "basis": [], "rows": []})
        elif keyword == "basis":
            blocks[-1]["basis"] = args
        elif keyword == "row":
            blocks[-1]["rows"].append(args)
        else:
            header[keyword] = args
    try:
        variables = tuple(header["variables"])
        exact = header["rationalized"][0] == "true"
        residual = header["residual"][0]
        parse_entry = parse_rational if exact else float
        return Certificate(
            variables=variables,
            target=parse_polynomial(header["target"][0], variables),
            eps=parse_rational(header["eps"][0]),
            degree=int(header["degree"][0]),
            rationalized=exact,
            residual=None if residual == "none" else float(residual),
            blocks=tuple(
                CertificateBlock(
                    generator=parse_polynomial(b["generator"], variables),
                    basis=tuple(parse_monomial(m, variables) for m in b["basis"]),
                    gram=tuple(tuple(parse_entry(x) for x in row) for row in b["rows"]),
                )
                for b in blocks
            ),
        )
    except (KeyError, IndexError) as exc:
        raise CertificateError(f"certificate file is missing {exc}") from exc


def format_verification_report(report: VerificationReport) -> str:
    lines = [
        f"level: {report.level.value}",
        f"claim: {report.claim}",
        f"eps: {format_rational(report.eps)}",
        f"degree: {report.degree}",
        f"residual: {report.residual:.3e}",
    ]
    if report.witness:
        lines.append(f"witness: {report.witness}")
    return "\n".join(lines)


# ============================================================================
# Point clouds and reports
# ============================================================================

def export_cloud_csv(cloud: PointCloud, path: Union[str, Path]) -> Path:
    """One row per point, 17 significant digits."""
    path = Path(path)
    frame = pd.DataFrame(cloud.points, columns=list(cloud.variables))
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote {cloud.size} {cloud.label.value} points to {path}")
    return path


def _point(values: Sequence[float]) -> str:
    return "(" + ", ".join(f"{x:.6g}" for x in values) + ")"


def format_gap_report(report: GapReport) -> str:
    lines = [
        f"verdict: {report.verdict.value}",
        f"variables: {', '.join(report.variables)}",
        f"delta: {report.delta:g}",
        f"image samples: {report.image_size} (seed {report.image_seed})",
        f"variety samples: {report.variety_size} (seed {report.variety_seed})",
        f"max distance: {report.max_distance:.6g}",
        f"far points: {int(report.thresholds.get('far_points', 0))}",
    ]
    for spurious in report.spurious:
        lines.append(f"spurious: {_point(spurious.point)} distance {spurious.distance:.6g}")
    return "\n".join(lines)
