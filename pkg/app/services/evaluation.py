"""
Numeric evaluation of tower variables as functions on the domain.
"""

import logging
from functools import lru_cache
from typing import Callable, Sequence, Tuple

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from app.core.exceptions import DomainError
from app.schemas.tower import FunctionSymbol, SymbolKind, TowerState

logger = logging.getLogger(__name__)

POLE_TOL = 1e-14
ROOT_SLACK = 1e-9


DISCONTINUOUS = (sympy.sign, sympy.Heaviside, sympy.Piecewise, sympy.floor, sympy.ceiling)


@lru_cache(maxsize=128)
def parse_elementary(expr: str, coordinates: Tuple[str, ...]) -> sympy.Expr:
    symbols = sympy.symbols(list(coordinates))
    local = {name: symbol for name, symbol in zip(coordinates, symbols)}
    try:
        parsed = parse_expr(expr, local_dict=local, transformations=standard_transformations + (convert_xor,))
    except (SyntaxError, TypeError, sympy.SympifyError) as exc:
        raise DomainError(f"cannot parse elementary expression {expr!r}: {exc}") from exc
    unknown = sorted(s.name for s in parsed.free_symbols if s.name not in local)
    if unknown:
        raise DomainError(f"elementary expression {expr!r} uses unknown symbols {unknown}")
    return parsed


@lru_cache(maxsize=128)
def compile_elementary(expr: str, coordinates: Tuple[str, ...]) -> Callable[..., np.ndarray]:
    """Vectorized callable for an elementary expression in the domain coordinates."""
    parsed = parse_elementary(expr, coordinates)
    return sympy.lambdify(sympy.symbols(list(coordinates)), parsed, modules="numpy")


def elementary_is_continuous(expr: str, coordinates: Tuple[str, ...]) -> bool:
    return not parse_elementary(expr, coordinates).has(*DISCONTINUOUS)


def odd_root(values: np.ndarray, r: int) -> np.ndarray:
    return np.sign(values) * np.abs(values) ** (1.0 / r)


def evaluate_symbol(
    symbol: FunctionSymbol,
    domain_points: np.ndarray,
    previous: np.ndarray,
    coordinates: Sequence[str],
) -> np.ndarray:
    """Values of one symbol given the domain points and the earlier tower variables."""
    n = domain_points.shape[0]
    kind = symbol.kind
    if kind == SymbolKind.BASE_POLY:
        return symbol.poly.evaluate_many(domain_points)
    if kind == SymbolKind.ELEMENTARY:
        fn = compile_elementary(symbol.expr, tuple(coordinates))
        values = np.asarray(fn(*domain_points.T), dtype=float)
        return np.broadcast_to(values, (n,)).astype(float)

    if kind == SymbolKind.CHARACTERISTIC:
        return np.where(symbol.q.evaluate_many(previous) >= 0, 1.0, 0.0)
    if kind == SymbolKind.PIECEWISE:
        q = symbol.q.evaluate_many(previous)
        return np.where(q >= 0, symbol.g.evaluate_many(previous), symbol.h.evaluate_many(previous))

    g = symbol.g.evaluate_many(previous)
    if kind == SymbolKind.ODD_ROOT:
        return odd_root(g, symbol.degree)
    if kind == SymbolKind.EVEN_ROOT:
        bad = np.flatnonzero(g < -ROOT_SLACK)
        if bad.size:
            raise DomainError(
                f"{symbol.name}: radicand negative at a domain point",
                witness=domain_points[bad[0]].tolist(),
            )
        return np.maximum(g, 0.0) ** (1.0 / symbol.degree)
    if kind == SymbolKind.RECIPROCAL:
        bad = np.flatnonzero(np.abs(g) <= POLE_TOL)
        if bad.size:
            raise DomainError(
                f"{symbol.name}: pole at a domain point",
                witness=domain_points[bad[0]].tolist(),
            )
        return 1.0 / g
    raise DomainError(f"unknown symbol kind {kind}")


def image_values(tw: TowerState, domain_points: np.ndarray) -> np.ndarray:
    """The map m: X -> R^t evaluated at each row of ``domain_points``."""
    points = np.atleast_2d(np.asarray(domain_points, dtype=float))
    if points.shape[1] != tw.domain.dimension:
        raise DomainError(
            f"expected {tw.domain.dimension} domain coordinates, got {points.shape[1]}"
        )
    values = np.zeros((points.shape[0], tw.nvars))
    for symbol in tw.symbols:
        values[:, symbol.index] = evaluate_symbol(
            symbol, points, values[:, : symbol.index], tw.domain.coordinates
        )
    return values