"""
Sampling of the domain X, the image m(X) and the variety K_{Q,Y}.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import Settings, settings as default_settings
from app.core.exceptions import SamplingError
from app.schemas.tower import DomainDescription, SymbolKind, TowerState, VariableState
from app.schemas.variety import CloudLabel, PointCloud
from app.services.evaluation import POLE_TOL, image_values, odd_root
from app.services.polynomial import Polynomial
from app.utils.sampling import chunked_map, gauss_newton, halton_points

logger = logging.getLogger(__name__)

Bounds = Sequence[Optional[Tuple[float, float]]]


def _bounded_interval(tw: TowerState, index: int) -> Optional[Tuple[float, float]]:
    status = tw.witness.statuses[index] if index < len(tw.witness.statuses) else None
    if status is None or status.state != VariableState.BOUNDED or status.bound is None:
        return None
    radius = math.sqrt(float(status.bound))
    return (-radius, radius)


def domain_box(tw: TowerState, box: Optional[Bounds] = None) -> List[Tuple[float, float]]:
    """Sampling box for the domain coordinates.

    Uses the explicit box, then the domain's own box, then archimedean bounds
    of base variables that are plain coordinates.
    """
    dom = tw.domain
    result: List[Tuple[float, float]] = []
    for j, name in enumerate(dom.coordinates):
        interval = box[j] if box is not None and j < len(box) else None
        if interval is None and dom.box[j] is not None:
            interval = dom.box[j]
        if interval is None:
            coordinate = Polynomial.variable(j, dom.dimension)
            for symbol in tw.symbols:
                if symbol.kind == SymbolKind.BASE_POLY and symbol.poly == coordinate:
                    interval = _bounded_interval(tw, symbol.index)
                    if interval is not None:
                        break
        if interval is None:
            raise SamplingError(f"domain coordinate {name} is unbounded; give a sampling box")
        result.append((float(interval[0]), float(interval[1])))
    return result


def sample_domain(
    dom: DomainDescription,
    n: int,
    seed: int,
    box: Optional[Bounds] = None,
    settings: Optional[Settings] = None,
) -> PointCloud:
    """``n`` points of X by rejection sampling in a box; deterministic per seed."""
    settings = settings or default_settings
    bounds = list(box) if box is not None else list(dom.box)
    if len(bounds) != dom.dimension or any(b is None for b in bounds):
        raise SamplingError("domain sampling needs a bounded box for every coordinate")
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    constraints = dom.constraint_polynomials()

    max_draws = max(n, int(math.ceil(n / settings.MIN_ACCEPTANCE_RATE)))
    accepted: List[np.ndarray] = []
    count = 0
    drawn = 0
    batch = max(n, 256)
    while count < n and drawn < max_draws:
        size = min(batch, max_draws - drawn)
        candidates = halton_points(size, bounds, seed, skip=drawn)
        drawn += size
        mask = np.ones(size, dtype=bool)
        for c in constraints:
            mask &= c.evaluate_many(candidates) >= 0
        if mask.any():
            accepted.append(candidates[mask])
            count += int(mask.sum())
        batch = min(batch * 2, 1 << 20)
    if count < n:
        rate = count / max(drawn, 1)
        raise SamplingError(
            f"acceptance rate {rate:.2e} below {settings.MIN_ACCEPTANCE_RATE:.0e}; the box is too large",
            {"drawn": drawn, "accepted": count},
        )
    points = np.vstack(accepted)[:n]
    logger.debug(f"Sampled {n} domain points from {drawn} candidates")
    return PointCloud(
        label=CloudLabel.DOMAIN, variables=dom.coordinates, points=points, seed=seed, candidates=drawn
    )


def generator_mask(tw: TowerState, values: np.ndarray, tau: float) -> np.ndarray:
    mask = np.all(np.isfinite(values), axis=1)
    for g in tw.generator_polynomials():
        mask &= g.evaluate_many(values) >= -tau
    return mask


def image_points(
    tw: TowerState,
    xs: Union[PointCloud, np.ndarray],
    restrict: bool = False,
    settings: Optional[Settings] = None,
) -> PointCloud:
    """Cloud of m(x) for the given domain points.

    With ``restrict`` only points of K_{Q,X} are kept, i.e. those whose image
    satisfies every generator.
    """
    settings = settings or default_settings
    points = xs.points if isinstance(xs, PointCloud) else np.atleast_2d(np.asarray(xs, dtype=float))
    seed = xs.seed if isinstance(xs, PointCloud) else 0
    values = image_values(tw, points)
    if restrict:
        values = values[generator_mask(tw, values, settings.POSITIVITY_TOL)]
    return PointCloud(
        label=CloudLabel.IMAGE,
        variables=tw.variables,
        points=values,
        seed=seed,
        candidates=points.shape[0],
        coverage_undecided=values.shape[0] == 0,
    )


def sample_image(
    tw: TowerState,
    n: int,
    seed: int,
    box: Optional[Bounds] = None,
    settings: Optional[Settings] = None,
) -> PointCloud:
    """Sample of m(K_{Q,X})."""
    settings = settings or default_settings
    xs = sample_domain(tw.domain, n, seed, box=domain_box(tw, box), settings=settings)
    return image_points(tw, xs, restrict=True, settings=settings)


def variable_box(tw: TowerState, box: Optional[Bounds] = None) -> List[Tuple[float, float]]:
    """Sampling intervals for the base variables of the tower."""
    result = []
    dom_box: Optional[List[Tuple[float, float]]] = None
    for symbol in tw.symbols:
        if not symbol.is_base:
            continue
        i = symbol.index
        interval = box[i] if box is not None and i < len(box) else None
        if interval is None:
            interval = _bounded_interval(tw, i)
        if interval is None and symbol.kind == SymbolKind.BASE_POLY:
            # a plain coordinate inherits the domain interval
            used = symbol.poly.variables_used()
            if len(used) == 1 and symbol.poly == Polynomial.variable(used[0], tw.domain.dimension):
                if dom_box is None:
                    try:
                        dom_box = domain_box(tw)
                    except SamplingError:
                        dom_box = []
                if dom_box:
                    interval = dom_box[used[0]]
        if interval is None:
            raise SamplingError(
                f"variable {tw.variables[i]} is unbounded; give a sampling box or add a bound generator"
            )
        result.append((float(interval[0]), float(interval[1])))
    return result


def lift_branches(tw: TowerState, base: np.ndarray) -> np.ndarray:
    """Extend base values through every adjoined variable, enumerating branches.

    Roots and reciprocals follow their defining relation; even roots,
    piecewise functions and characteristic functions contribute every branch
    of their relation, so each base point yields up to 2^k candidates.
    """
    rows = base
    for symbol in tw.symbols:
        if symbol.is_base:
            continue
        prev = rows[:, : symbol.index]
        kind = symbol.kind
        if kind == SymbolKind.ODD_ROOT:
            columns = [odd_root(symbol.g.evaluate_many(prev), symbol.degree)]
        elif kind == SymbolKind.EVEN_ROOT:
            value = np.maximum(symbol.g.evaluate_many(prev), 0.0) ** (1.0 / symbol.degree)
            columns = [value, -value]
        elif kind == SymbolKind.RECIPROCAL:
            g = symbol.g.evaluate_many(prev)
            keep = np.abs(g) > POLE_TOL
            rows, g = rows[keep], g[keep]
            columns = [1.0 / g]
        elif kind == SymbolKind.PIECEWISE:
            columns = [symbol.g.evaluate_many(prev), symbol.h.evaluate_many(prev)]
        else:
            columns = [np.zeros(rows.shape[0]), np.ones(rows.shape[0])]
        rows = np.vstack([np.column_stack([rows, column]) for column in columns])
    return rows


def _projection_residuals(tw: TowerState, frozen: List[int]):
    relations = tw.relation_polynomials()
    generators = tw.generator_polynomials()
    nvars = tw.nvars
    rel_grad = [[p.diff(k) for k in range(nvars)] for p in relations]
    gen_grad = [[g.diff(k) for k in range(nvars)] for g in generators]

    def residuals(y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = y.shape[0]
        m = len(relations) + len(generators)
        r = np.zeros((n, m))
        jac = np.zeros((n, m, nvars))
        for row, (p, grad) in enumerate(zip(relations, rel_grad)):
            r[:, row] = p.evaluate_many(y)
            for k, dp in enumerate(grad):
                if not dp.is_zero():
                    jac[:, row, k] = dp.evaluate_many(y)
        offset = len(relations)
        for row, (g, grad) in enumerate(zip(generators, gen_grad)):
            values = g.evaluate_many(y)
            negative = values < 0
            r[:, offset + row] = np.where(negative, values, 0.0)
            for k, dg in enumerate(grad):
                if not dg.is_zero():
                    jac[:, offset + row, k] = np.where(negative, dg.evaluate_many(y), 0.0)
        if frozen:
            jac[:, :, frozen] = 0.0
        return r, jac

    return residuals


def relation_residuals(tw: TowerState, values: np.ndarray) -> np.ndarray:
    """Largest relation residual at each point (0 without relations)."""
    relations = tw.relation_polynomials()
    if not relations:
        return np.zeros(values.shape[0])
    return np.max(np.abs(np.column_stack([p.evaluate_many(values) for p in relations])), axis=1)


def sample_variety(
    tw: TowerState,
    box: Optional[Bounds] = None,
    n: Optional[int] = None,
    tau_rel: Optional[float] = None,
    tau_pos: Optional[float] = None,
    seed: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> PointCloud:
    """Sample K_{Q,Y}: base points in a box, branch lifting, projection, filtering.

    Every candidate is projected with Gauss-Newton onto the relations together
    with the negative parts of the generators, so isolated points cut out by
    inequalities are reached as well.
    """
    settings = settings or default_settings
    n = n or settings.VARIETY_SAMPLES
    tau_rel = settings.RELATION_TOL if tau_rel is None else tau_rel
    tau_pos = settings.POSITIVITY_TOL if tau_pos is None else tau_pos
    seed = settings.DEFAULT_SEED if seed is None else seed

    base = halton_points(n, variable_box(tw, box), seed)
    candidates = lift_branches(tw, base)
    frozen = [s.index for s in tw.symbols if s.is_binary]
    if len(frozen) < tw.nvars and (tw.relations or tw.qmodule.generators):
        residuals = _projection_residuals(tw, frozen)

        def project(chunk: np.ndarray) -> np.ndarray:
            return gauss_newton(residuals, chunk, max_iter=settings.GN_MAX_ITER, tol=settings.GN_TOL)[0]

        projected = np.vstack(chunked_map(project, candidates, settings.SAMPLING_WORKERS))
    else:
        projected = candidates

    mask = generator_mask(tw, projected, tau_pos) & (relation_residuals(tw, projected) <= tau_rel)
    points = projected[mask]
    if points.shape[0] == 0:
        logger.warning("Variety sample is empty; coverage undecided")
    else:
        logger.info(f"Variety sample: {points.shape[0]} of {candidates.shape[0]} candidates accepted")
    return PointCloud(
        label=CloudLabel.VARIETY,
        variables=tw.variables,
        points=points,
        seed=seed,
        candidates=int(candidates.shape[0]),
        coverage_undecided=points.shape[0] == 0,
    )
