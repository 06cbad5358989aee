"""
Sampling helpers: low-discrepancy points in boxes and batched Gauss-Newton
projection onto zero sets.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

logger = logging.getLogger(__name__)

Box = Sequence[Tuple[float, float]]
ResidualFn = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


def halton_points(n: int, box: Box, seed: int, skip: int = 0) -> np.ndarray:
    """``n`` scrambled Halton points in ``box``; ``skip`` advances the sequence."""
    dim = len(box)
    if dim == 0:
        return np.zeros((n, 0))
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    if skip:
        sampler.fast_forward(skip)
    unit = sampler.random(n)
    lower = np.array([float(lo) for lo, _ in box])
    upper = np.array([float(hi) for _, hi in box])
    return lower + unit * (upper - lower)


def gauss_newton(
    residuals: ResidualFn,
    start: np.ndarray,
    max_iter: int = 50,
    tol: float = 1e-10,
) -> Tuple[np.ndarray, np.ndarray]:
    """Project each row of ``start`` onto the zero set of ``residuals``.

    ``residuals(Y)`` returns ``(R, J)`` with shapes ``(N, m)`` and
    ``(N, m, k)``. Steps are minimum-norm least-squares steps. Returns the
    final points and their residual norms.
    """
    y = np.array(start, dtype=float, copy=True)
    if y.shape[0] == 0:
        return y, np.zeros(0)
    active = np.ones(y.shape[0], dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        r, jac = residuals(y[idx])
        finite = np.isfinite(r).all(axis=1) & np.isfinite(jac).all(axis=(1, 2))
        done = finite & (np.linalg.norm(np.nan_to_num(r), axis=1) <= tol)
        active[idx[done | ~finite]] = False
        work = finite & ~done
        if not work.any():
            break
        step = -np.einsum("nkm,nm->nk", np.linalg.pinv(jac[work], rcond=1e-12), r[work])
        stalled = np.linalg.norm(step, axis=1) <= tol * (1.0 + np.linalg.norm(y[idx[work]], axis=1))
        y[idx[work]] += step
        active[idx[work][stalled]] = False
    r, _ = residuals(y)
    return y, np.linalg.norm(r, axis=1)


def chunked_map(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray, workers: int, chunk: int = 2048) -> List[np.ndarray]:
    """Apply ``fn`` to row chunks, in order; threads when ``workers > 1``."""
    pieces = [points[i : i + chunk] for i in range(0, points.shape[0], chunk)] or [points]
    if workers <= 1 or len(pieces) == 1:
        return [fn(piece) for piece in pieces]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, pieces))


def nearest_distances(reference: np.ndarray, queries: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Distance from each query to the nearest reference point, and its index."""
    if reference.shape[0] == 0:
        return np.full(queries.shape[0], np.inf), np.full(queries.shape[0], -1)
    tree = cKDTree(reference)
    dist, index = tree.query(queries, k=1)
    return np.atleast_1d(dist), np.atleast_1d(index)


def dedupe(points: np.ndarray, radius: float) -> np.ndarray:
    """Drop points within ``radius`` of an earlier kept point."""
    if points.shape[0] == 0:
        return points
    tree = cKDTree(points)
    keep = np.ones(points.shape[0], dtype=bool)
    for i in range(points.shape[0]):
        if not keep[i]:
            continue
        for j in tree.query_ball_point(points[i], radius):
            if j > i:
                keep[j] = False
    return points[keep]

