"""
Extension towers: the inductive adjunction procedure.

Each adjunction extends the presentation by one variable and its defining
relation, adds the prescribed quadratic module generators, runs the
regularity check the construction needs and degrades the mode when the
image equality can no longer be vouched for. Towers are immutable; every
operation returns a new state.
"""

import logging
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import Settings, settings as default_settings
from app.core.exceptions import (
    DomainError,
    GeneratorRefutedError,
    PolynomialParseError,
    RegularityError,
    SamplingError,
    TowerError,
)
from app.schemas.tower import (
    ArchimedeanWitness,
    DomainDescription,
    FunctionSymbol,
    GeneratorEntry,
    Mode,
    ModeEvent,
    Provenance,
    QuadraticModuleDesc,
    RegularityCase,
    RegularityData,
    RegularityResult,
    RelationEntry,
    SymbolKind,
    TowerState,
    VariableState,
    VariableStatus,
    Verdict,
    weakest,
)
from app.services.evaluation import elementary_is_continuous, image_values
from app.services.groebner import buchberger
from app.services.polynomial import (
    Polynomial,
    TermOrder,
    format_polynomial,
    format_rational,
    parse_polynomial,
)
from app.services.regularity import check_nonnegative, check_nonvanishing, check_regularity
from app.services.variety import sample_domain, domain_box
from app.utils.sampling import halton_points

logger = logging.getLogger(__name__)

PolyLike = Union[str, Polynomial]
CoordinateSpec = Tuple[str, Optional[PolyLike]]


def _as_poly(tw: TowerState, p: PolyLike) -> Polynomial:
    if isinstance(p, Polynomial):
        return p.extend(tw.nvars) if p.nvars < tw.nvars else p
    return tw.parse(p)


def _show(tw: TowerState, p: Polynomial) -> str:
    return format_polynomial(p, tw.variables)


# ============================================================================
# Archimedean witness
# ============================================================================

def _square_bound(p: Polynomial) -> Optional[Dict[int, Fraction]]:
    """Match ``K - sum b_i v_i^2`` with K, b_i > 0; returns the bounds K/b_i on v_i^2."""
    constant = p.constant_value()
    if constant <= 0:
        return None
    squares: Dict[int, Fraction] = {}
    for monomial, coefficient in p.terms.items():
        if sum(monomial) == 0:
            continue
        if sum(monomial) != 2 or max(monomial) != 2 or coefficient >= 0:
            return None
        squares[monomial.index(2)] = constant / -coefficient
    return squares or None


def _linear_bound(p: Polynomial) -> Optional[Tuple[int, Fraction, int]]:
    """Match ``c (a - v)`` or ``c (b + v)``; returns (index, bound, sign of v)."""
    linear = [(m, c) for m, c in p.terms.items() if sum(m) == 1]
    if len(linear) != 1 or any(sum(m) > 1 for m in p.terms):
        return None
    monomial, coefficient = linear[0]
    index = monomial.index(1)
    # p >= 0 gives v <= const/|c| (sign -1) or v >= -const/c (sign +1)
    return index, p.constant_value() / abs(coefficient), 1 if coefficient > 0 else -1


def archimedean_status(tw: TowerState) -> ArchimedeanWitness:
    """Per-variable boundedness with the reason it holds.

    Roots, piecewise and characteristic variables are integral over their
    predecessors. Base variables and reciprocals are bounded by generators
    of the forms N - v^2, N - sum v_i^2, a linear pair a - v and b + v, or
    by a sphere relation N - sum v_i^2 = 0.
    """
    bounds: Dict[int, Tuple[Fraction, str]] = {}

    def offer(index: int, bound: Fraction, reason: str) -> None:
        if index not in bounds or bound < bounds[index][0]:
            bounds[index] = (bound, reason)

    def scan(p: Polynomial, label: str) -> None:
        for q in (p, -p) if label == "relation" else (p,):
            squares = _square_bound(q)
            for index, bound in (squares or {}).items():
                offer(index, bound, f"{label} {_show(tw, p)}")

    for entry in tw.qmodule.generators:
        scan(entry.poly, "generator")
    for entry in tw.relations:
        scan(entry.poly, "relation")

    upper: Dict[int, Tuple[Fraction, Polynomial]] = {}
    lower: Dict[int, Tuple[Fraction, Polynomial]] = {}
    for entry in tw.qmodule.generators:
        matched = _linear_bound(entry.poly)
        if matched is None:
            continue
        index, value, sign = matched
        if sign < 0:
            if index not in upper or value < upper[index][0]:
                upper[index] = (value, entry.poly)
        else:
            if index not in lower or value < lower[index][0]:
                lower[index] = (value, entry.poly)
    for index in set(upper) & set(lower):
        a, pa = upper[index]
        b, pb = lower[index]
        c = max(abs(a), abs(b))
        offer(index, c * c, f"generators {_show(tw, pa)} and {_show(tw, pb)}")

    statuses = []
    for symbol in tw.symbols:
        name = symbol.name
        if symbol.kind in (
            SymbolKind.ODD_ROOT,
            SymbolKind.EVEN_ROOT,
            SymbolKind.PIECEWISE,
            SymbolKind.CHARACTERISTIC,
        ):
            statuses.append(VariableStatus(
                name=name, state=VariableState.INTEGRAL,
                justification=f"monic relation of {symbol.kind.value}",
            ))
        elif symbol.index in bounds:
            bound, reason = bounds[symbol.index]
            statuses.append(VariableStatus(
                name=name, state=VariableState.BOUNDED, bound=bound, justification=reason,
            ))
        else:
            statuses.append(VariableStatus(name=name, state=VariableState.UNBOUNDED))
    return ArchimedeanWitness(statuses=tuple(statuses))


# ============================================================================
# Internal state transitions
# ============================================================================

def _normalize(tw: TowerState, entries: Sequence[GeneratorEntry]) -> Tuple[GeneratorEntry, ...]:
    """Normal forms of generators, dropping zeros and duplicates modulo the ideal."""
    seen = set()
    result = []
    for entry in entries:
        p = tw.ideal.normal_form(entry.poly)
        if p.is_zero() or p in seen:
            continue
        seen.add(p)
        result.append(entry.model_copy(update={"poly": p}))
    return tuple(result)


def _rebuild(tw: TowerState, **update) -> TowerState:
    """Recompute ideal, normal forms and witness after changing the presentation."""
    state = tw.model_copy(update=update)
    relations = state.relation_polynomials()
    ideal = buchberger(relations, TermOrder.grevlex(state.nvars))
    if ideal.is_unit():
        raise TowerError("relations generate the unit ideal; the presentation is empty")
    state = state.model_copy(update={"ideal": ideal})
    state = state.model_copy(update={"qmodule": QuadraticModuleDesc(generators=_normalize(state, state.qmodule.generators))})
    return state.model_copy(update={"witness": archimedean_status(state)})


def _with_mode(tw: TowerState, mode: Mode, reason: str) -> TowerState:
    event = ModeEvent(step=len(tw.history), mode=mode, reason=reason)
    if mode != tw.mode:
        logger.info(f"Tower mode {tw.mode.value} -> {mode.value}: {reason}")
    return tw.model_copy(update={"mode": mode, "history": tw.history + (event,)})


def _extended(tw: TowerState, name: str) -> TowerState:
    """The tower with one more variable and every polynomial lifted to it."""
    if name in tw.variables or name in tw.domain.coordinates:
        raise TowerError(f"symbol {name} is already defined")
    n = tw.nvars + 1
    return tw.model_copy(update={
        "variables": tw.variables + (name,),
        "relations": tuple(r.model_copy(update={"poly": r.poly.extend(n)}) for r in tw.relations),
        "qmodule": QuadraticModuleDesc(generators=tuple(
            g.model_copy(update={"poly": g.poly.extend(n)}) for g in tw.qmodule.generators
        )),
        "ideal": tw.ideal.extend(n),
    })


def _adjoin(
    tw: TowerState,
    symbol: FunctionSymbol,
    relation: Polynomial,
    generators: Sequence[Tuple[Polynomial, str]],
    mode: Mode,
    reason: str,
) -> TowerState:
    grown = _extended(tw, symbol.name)
    grown = grown.model_copy(update={
        "symbols": tw.symbols + (symbol,),
        "relations": grown.relations + (
            RelationEntry(poly=relation, provenance=Provenance.ADJUNCTION, note=symbol.name),
        ),
        "qmodule": QuadraticModuleDesc(generators=grown.qmodule.generators + tuple(
            GeneratorEntry(poly=g, provenance=Provenance.ADJUNCTION, note=note) for g, note in generators
        )),
    })
    result = _with_mode(_rebuild(grown), mode, reason)
    logger.info(
        f"Adjoined {symbol.name} ({symbol.kind.value}); relation {_show(result, relation)}; "
        f"{len(generators)} generators; mode {result.mode.value}"
    )
    return result


def _new_variable(tw: TowerState) -> Polynomial:
    return Polynomial.variable(tw.nvars, tw.nvars + 1)


def _lift(tw: TowerState, p: PolyLike) -> Polynomial:
    """A predecessor polynomial as an element of the extended ring."""
    return _as_poly(tw, p).extend(tw.nvars + 1)


def _gate(
    result: RegularityResult,
    force: bool,
    settings: Settings,
    what: str,
) -> Tuple[bool, str]:
    """Decide whether an adjunction may proceed; returns (verified, note)."""
    if result.verdict == Verdict.PASS:
        return True, f"{what}: {result.describe()}"
    if force or (result.verdict == Verdict.UNDECIDED and settings.FORCE_UNDECIDED):
        logger.warning(f"Forcing {what} past {result.describe()}")
        return False, f"{what} forced past {result.describe()}"
    raise RegularityError(f"{what} rejected: {result.describe()}", result)


# ============================================================================
# Operations
# ============================================================================

def _coordinate_symbol(
    domain: DomainDescription, index: int, name: str, spec: Optional[PolyLike]
) -> FunctionSymbol:
    coordinates = domain.coordinates
    if spec is None:
        if name not in coordinates:
            raise TowerError(f"coordinate {name} needs a definition")
        return FunctionSymbol(
            name=name, kind=SymbolKind.BASE_POLY, index=index,
            poly=Polynomial.variable(coordinates.index(name), domain.dimension),
        )
    if isinstance(spec, Polynomial):
        return FunctionSymbol(name=name, kind=SymbolKind.BASE_POLY, index=index, poly=spec)
    try:
        poly = parse_polynomial(spec, coordinates)
    except PolynomialParseError:
        return FunctionSymbol(
            name=name, kind=SymbolKind.ELEMENTARY, index=index, expr=spec,
            continuous=elementary_is_continuous(spec, coordinates),
        )
    return FunctionSymbol(name=name, kind=SymbolKind.BASE_POLY, index=index, poly=poly)


def _is_standard(tw: TowerState) -> bool:
    """True when the base variables are exactly the domain coordinates."""
    dom = tw.domain
    if len(tw.symbols) != dom.dimension:
        return False
    return all(
        s.kind == SymbolKind.BASE_POLY and s.poly == Polynomial.variable(i, dom.dimension)
        for i, s in enumerate(tw.symbols)
    )


def _standard_exactness(tw: TowerState, settings: Settings) -> Tuple[Mode, str]:
    """Exact when no point outside X satisfies every generator (sampled check)."""
    dom = tw.domain
    if all(b is None for b in dom.box) and not dom.constraints:
        return Mode.EXACT, "X is the whole space"
    box = []
    for interval in dom.box:
        if interval is None:
            box.append((-10.0, 10.0))
        else:
            lo, hi = float(interval[0]), float(interval[1])
            width = hi - lo
            box.append((lo - width - 1.0, hi + width + 1.0))
    points = halton_points(settings.DOMAIN_SAMPLES, box, settings.DEFAULT_SEED)
    inside = np.ones(points.shape[0], dtype=bool)
    for j, interval in enumerate(dom.box):
        if interval is not None:
            inside &= (points[:, j] >= float(interval[0])) & (points[:, j] <= float(interval[1]))
    for c in dom.constraint_polynomials():
        inside &= c.evaluate_many(points) >= 0
    admitted = np.ones(points.shape[0], dtype=bool)
    for g in tw.generator_polynomials():
        admitted &= g.evaluate_many(points) >= 0
    escaped = np.flatnonzero(admitted & ~inside)
    if escaped.size:
        point = ", ".join(f"{x:.6g}" for x in points[escaped[0]])
        return Mode.UNVERIFIED, f"generators admit ({point}) outside X"
    return Mode.EXACT, "generators cut out X"


def init_tower(
    domain: DomainDescription,
    base_gens: Sequence[PolyLike] = (),
    ball_bound: Optional[Fraction] = None,
    coordinates: Optional[Sequence[CoordinateSpec]] = None,
    claimed_mode: Optional[Mode] = None,
    settings: Optional[Settings] = None,
) -> TowerState:
    """Tower of the base algebra with the quadratic module of ``base_gens``.

    ``coordinates`` lists base variables as (name, definition) pairs; a
    definition is a polynomial in the domain coordinates, an elementary
    expression, or None for the coordinate of that name. The default is the
    domain coordinates themselves.
    """
    settings = settings or default_settings
    specs = list(coordinates) if coordinates else [(name, None) for name in domain.coordinates]
    names = [name for name, _ in specs]
    if len(set(names)) != len(names):
        raise TowerError("duplicate coordinate names")
    symbols = tuple(_coordinate_symbol(domain, i, name, spec) for i, (name, spec) in enumerate(specs))
    n = len(symbols)
    tw = TowerState(
        domain=domain,
        variables=tuple(names),
        symbols=symbols,
        ideal=buchberger([], TermOrder.grevlex(n)),
        qmodule=QuadraticModuleDesc(),
        witness=ArchimedeanWitness(),
        mode=Mode.UNVERIFIED,
        ball_bound=ball_bound,
    )

    polys = [_as_poly(tw, g) for g in base_gens]
    for g in polys:
        try:
            check = check_nonnegative(tw, g, settings)
        except SamplingError as exc:
            logger.warning(f"Base generator {_show(tw, g)} not spot-checked: {exc.message}")
            continue
        if not check.holds:
            raise DomainError(
                f"base generator {_show(tw, g)} is negative on X at {check.witness_text}",
                witness=check.witness,
            )

    entries = [GeneratorEntry(poly=g, provenance=Provenance.BASE) for g in polys]
    if ball_bound is not None:
        if ball_bound <= 0:
            raise TowerError("ball bound must be positive")
        ball = Polynomial.constant(Fraction(ball_bound), n)
        for i in range(n):
            ball = ball - Polynomial.variable(i, n) ** 2
        entries.append(GeneratorEntry(poly=ball, provenance=Provenance.BALL))
    tw = _rebuild(tw, qmodule=QuadraticModuleDesc(generators=tuple(entries)))

    if claimed_mode is not None:
        mode, reason = claimed_mode, "claimed by caller"
    elif _is_standard(tw):
        mode, reason = _standard_exactness(tw, settings)
    else:
        mode, reason = Mode.UNVERIFIED, "non-standard coordinates"
    tw = _with_mode(tw, mode, f"base algebra: {reason}")
    logger.info(
        f"Initialized tower over {', '.join(domain.coordinates)} with variables {', '.join(names)}; "
        f"{len(tw.qmodule.generators)} generators; mode {tw.mode.value}"
    )
    return tw


def assert_mode(tw: TowerState, mode: Mode, reason: str = "asserted by caller") -> TowerState:
    """Claim the image mode of the base algebra; only allowed before adjunctions."""
    if any(not s.is_base for s in tw.symbols):
        raise TowerError("a mode can only be asserted for the base algebra")
    return _with_mode(tw, mode, reason)


def adjoin_odd_root(tw: TowerState, name: str, g: PolyLike, r: int) -> TowerState:
    if r < 3 or r % 2 == 0:
        raise TowerError(f"odd root degree must be odd and at least 3, got {r}")
    v = _new_variable(tw)
    gp = _as_poly(tw, g)
    symbol = FunctionSymbol(name=name, kind=SymbolKind.ODD_ROOT, index=tw.nvars, g=gp, degree=r)
    return _adjoin(tw, symbol, v ** r - _lift(tw, gp), [], tw.mode, f"{name} = oddroot({_show(tw, gp)}, {r})")


def adjoin_even_root(
    tw: TowerState, name: str, g: PolyLike, s: int, settings: Optional[Settings] = None
) -> TowerState:
    settings = settings or default_settings
    if s < 2 or s % 2:
        raise TowerError(f"even root degree must be even and at least 2, got {s}")
    gp = _as_poly(tw, g)
    check = check_nonnegative(tw, gp, settings)
    if not check.holds:
        raise DomainError(
            f"radicand {_show(tw, gp)} of {name} is negative at {check.witness_text}",
            witness=check.witness,
        )
    v = _new_variable(tw)
    symbol = FunctionSymbol(name=name, kind=SymbolKind.EVEN_ROOT, index=tw.nvars, g=gp, degree=s)
    return _adjoin(
        tw, symbol, v ** s - _lift(tw, gp), [(v, "root")], tw.mode,
        f"{name} = evenroot({_show(tw, gp)}, {s}) ({check.method.value})",
    )


def adjoin_reciprocal(
    tw: TowerState,
    name: str,
    g: PolyLike,
    bound: Optional[Fraction] = None,
    settings: Optional[Settings] = None,
) -> TowerState:
    settings = settings or default_settings
    gp = _as_poly(tw, g)
    check = check_nonvanishing(tw, gp, settings)
    if not check.holds:
        raise DomainError(
            f"denominator {_show(tw, gp)} of {name} vanishes at {check.witness_text}",
            witness=check.witness,
        )
    generators = []
    if bound is not None:
        bound = Fraction(bound)
        if bound <= 0:
            raise TowerError("reciprocal bound must be positive")
        bounded = check_nonnegative(tw, gp * gp * bound - 1, settings)
        if not bounded.holds:
            raise DomainError(
                f"|1/({_show(tw, gp)})|^2 exceeds {format_rational(bound)} at {bounded.witness_text}",
                witness=bounded.witness,
            )
        v = _new_variable(tw)
        generators.append((Polynomial.constant(bound, tw.nvars + 1) - v * v, "bound"))
    v = _new_variable(tw)
    symbol = FunctionSymbol(name=name, kind=SymbolKind.RECIPROCAL, index=tw.nvars, g=gp, bound=bound)
    return _adjoin(
        tw, symbol, _lift(tw, gp) * v - 1, generators, tw.mode, f"{name} = recip({_show(tw, gp)})"
    )


def adjoin_piecewise(
    tw: TowerState,
    name: str,
    g: PolyLike,
    h: PolyLike,
    q: PolyLike,
    mode_req: Mode = Mode.EXACT,
    force: bool = False,
    settings: Optional[Settings] = None,
) -> TowerState:
    """Adjoin f = g where q >= 0 and f = h where q < 0."""
    settings = settings or default_settings
    if mode_req == Mode.UNVERIFIED:
        raise TowerError("piecewise adjunction needs mode exact or closure")
    gp, hp, qp = _as_poly(tw, g), _as_poly(tw, h), _as_poly(tw, q)
    data = RegularityData(q=qp, g=gp, h=hp)
    case = RegularityCase.INJ_CASE4 if mode_req == Mode.EXACT else RegularityCase.ALINJ_CASE4
    result = check_regularity(tw, data, case, settings)
    verified, note = _gate(result, force, settings, f"piecewise {name}")

    if case == RegularityCase.INJ_CASE4:
        continuous_break = result.verdict != Verdict.PASS
    else:
        try:
            continuous_break = check_regularity(tw, data, RegularityCase.INJ_CASE4, settings).verdict != Verdict.PASS
        except SamplingError:
            continuous_break = True
    continuous = not continuous_break

    v = _new_variable(tw)
    lg, lh, lq = _lift(tw, gp), _lift(tw, hp), _lift(tw, qp)
    symbol = FunctionSymbol(
        name=name, kind=SymbolKind.PIECEWISE, index=tw.nvars, g=gp, h=hp, q=qp, continuous=continuous,
    )
    mode = weakest(tw.mode, mode_req) if verified else Mode.UNVERIFIED
    return _adjoin(
        tw, symbol, (v - lg) * (v - lh),
        [(-lq * (v - lg) ** 2, "q<0 branch"), (lq * (v - lh) ** 2, "q>=0 branch")],
        mode, note,
    )


def adjoin_characteristic(
    tw: TowerState,
    name: str,
    q: PolyLike,
    variant: str = "closure",
    force: bool = False,
    settings: Optional[Settings] = None,
) -> TowerState:
    """Adjoin the characteristic function of {q >= 0}.

    ``variant`` is ``compact`` (X compact, continuous predecessors, zeros of
    q in the closure of {q < 0}) or ``closure`` (zeros of q on the variety
    approximable from both sides).
    """
    settings = settings or default_settings
    qp = _as_poly(tw, q)
    if variant == "compact":
        if not tw.domain.is_compact:
            raise TowerError(f"compact variant of {name} needs a compact domain")
        jumps = [s.name for s in tw.symbols if not s.continuous]
        if jumps:
            raise TowerError(f"compact variant of {name} needs continuous predecessors; {', '.join(jumps)} are not")
        case = RegularityCase.COMP
    elif variant == "closure":
        case = RegularityCase.ALINJ_CASE5
    else:
        raise TowerError(f"unknown characteristic variant {variant}")
    result = check_regularity(tw, RegularityData(q=qp), case, settings)
    verified, note = _gate(result, force, settings, f"characteristic {name}")

    v = _new_variable(tw)
    lq = _lift(tw, qp)
    symbol = FunctionSymbol(name=name, kind=SymbolKind.CHARACTERISTIC, index=tw.nvars, q=qp, continuous=False)
    mode = weakest(tw.mode, Mode.CLOSURE) if verified else Mode.UNVERIFIED
    return _adjoin(tw, symbol, v * v - v, [(lq * v, "q*f"), (lq * (v - 1), "q*(f-1)")], mode, note)


def separator_generator(tw: TowerState, y: Sequence, eps: Fraction) -> Polynomial:
    """sum_j (v_j - y_j)^2 - eps in normal form; negative at y, positive away from it."""
    eps = Fraction(eps)
    if eps <= 0:
        raise TowerError("separator radius must be positive")
    if len(y) != tw.nvars:
        raise TowerError(f"point has {len(y)} coordinates, tower has {tw.nvars} variables")
    n = tw.nvars
    p = Polynomial.constant(-eps, n)
    for i, value in enumerate(y):
        p = p + (Polynomial.variable(i, n) - Fraction(value)) ** 2
    return tw.ideal.normal_form(p)


def add_generator(
    tw: TowerState,
    g: PolyLike,
    claim_nonneg: bool = False,
    asserted_mode: Optional[Mode] = None,
    provenance: Provenance = Provenance.MANUAL,
    note: str = "",
    settings: Optional[Settings] = None,
) -> TowerState:
    """Append a generator to the quadratic module.

    An exact tower stays exact. Otherwise the mode drops to the asserted one,
    or to unverified without an assertion.
    """
    settings = settings or default_settings
    gp = tw.ideal.normal_form(_as_poly(tw, g))
    if gp.is_zero():
        raise TowerError("generator is zero modulo the relations")
    if claim_nonneg:
        check = check_nonnegative(tw, gp, settings)
        if not check.holds:
            raise GeneratorRefutedError(
                f"generator {_show(tw, gp)} is negative at {check.witness_text}", witness=check.witness
            )
    entry = GeneratorEntry(poly=gp, provenance=provenance, note=note)
    grown = _rebuild(tw, qmodule=QuadraticModuleDesc(generators=tw.qmodule.generators + (entry,)))
    if tw.mode == Mode.EXACT:
        mode, reason = Mode.EXACT, f"generator {_show(tw, gp)} added to exact tower"
    elif asserted_mode is not None:
        mode, reason = weakest(tw.mode, asserted_mode), f"generator {_show(tw, gp)}, mode asserted"
    else:
        mode, reason = Mode.UNVERIFIED, f"generator {_show(tw, gp)} added without assertion"
    logger.info(f"Added generator {_show(tw, gp)} ({provenance.value})")
    return _with_mode(grown, mode, reason)


def add_relation(tw: TowerState, p: PolyLike, settings: Optional[Settings] = None) -> TowerState:
    """Import a relation that holds on the image; checked on sampled domain points."""
    settings = settings or default_settings
    pp = _as_poly(tw, p)
    if tw.ideal.contains(pp):
        logger.info(f"Relation {_show(tw, pp)} already holds in the presentation")
        return tw
    xs = sample_domain(tw.domain, settings.DOMAIN_SAMPLES, settings.DEFAULT_SEED, box=domain_box(tw), settings=settings)
    residual = np.abs(pp.evaluate_many(image_values(tw, xs.points)))
    worst = int(np.argmax(residual))
    if residual[worst] > settings.RELATION_TOL:
        raise DomainError(
            f"relation {_show(tw, pp)} does not vanish on the image (|value| = {residual[worst]:.3g})",
            witness=xs.points[worst].tolist(),
        )
    entry = RelationEntry(poly=pp, provenance=Provenance.RELATION)
    grown = _rebuild(tw, relations=tw.relations + (entry,))
    logger.info(f"Added relation {_show(tw, pp)}")
    return _with_mode(grown, tw.mode, f"relation {_show(tw, pp)} declared")
