"""
Dense primal-dual interior point solver for small block semidefinite programs.

Solves min <C, X> s.t. <A_k, X> = b_k, X >= 0 together with its dual
max b^T y s.t. Z = C - sum_k y_k A_k >= 0. Nesterov-Todd scaling,
Mehrotra predictor-corrector, Schur complement system for dy.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from app.core.config import Settings, settings as default_settings
from app.schemas.sos import SDPProblem, SDPSolution, SDPStatus

logger = logging.getLogger(__name__)

DIVERGENCE = 1e8
STEP_FACTOR = 0.95

Blocks = List[np.ndarray]


def _apply(problem: SDPProblem, blocks: Blocks) -> np.ndarray:
    """A(X): the vector of <A_k, X>."""
    out = np.zeros(problem.constraints)
    for a, x in zip(problem.a_blocks, blocks):
        out += np.tensordot(a, x, axes=([1, 2], [0, 1]))
    return out


def _adjoint(problem: SDPProblem, y: np.ndarray) -> Blocks:
    """A*(y) = sum_k y_k A_k per block."""
    return [np.tensordot(y, a, axes=(0, 0)) for a in problem.a_blocks]


def _inner(left: Blocks, right: Blocks) -> float:
    return float(sum(np.sum(a * b) for a, b in zip(left, right)))


def _norm(blocks: Blocks) -> float:
    return float(np.sqrt(sum(np.sum(b * b) for b in blocks)))


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _residuals(problem: SDPProblem, x: Blocks, y: np.ndarray, z: Blocks) -> Tuple[float, float, float, float, float]:
    rp = problem.b - _apply(problem, x)
    aty = _adjoint(problem, y)
    rd = [c - a - zz for c, a, zz in zip(problem.c_blocks, aty, z)]
    pobj = _inner(list(problem.c_blocks), x)
    dobj = float(problem.b @ y)
    p_res = float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(problem.b)))
    d_res = _norm(rd) / (1.0 + _norm(list(problem.c_blocks)))
    return p_res, d_res, pobj, dobj, abs(pobj - dobj)


def _finish(problem: SDPProblem, status: SDPStatus, x: Blocks, y: np.ndarray, z: Blocks, iterations: int) -> SDPSolution:
    p_res, d_res, pobj, dobj, gap = _residuals(problem, x, y, z)
    logger.info(
        f"SDP {status.value} after {iterations} iterations: pobj={pobj:.9g} dobj={dobj:.9g} "
        f"rp={p_res:.2e} rd={d_res:.2e}"
    )
    return SDPSolution(
        status=status,
        x_blocks=tuple(x),
        z_blocks=tuple(z),
        y=y,
        primal_objective=pobj,
        dual_objective=dobj,
        primal_residual=p_res,
        dual_residual=d_res,
        gap=gap,
        iterations=iterations,
    )


def _reduce_rows(problem: SDPProblem) -> Tuple[Optional[SDPProblem], np.ndarray]:
    """Drop linearly dependent constraints; None when they are inconsistent.

    Returns the reduced problem and the indices of the kept rows.
    """
    m = problem.constraints
    matrix = np.hstack([a.reshape(m, -1) for a in problem.a_blocks]) if m else np.zeros((0, 0))
    if m == 0:
        return problem, np.arange(0)
    _, r, pivots = scipy.linalg.qr(matrix.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = max(float(diag[0]) if diag.size else 0.0, 1.0)
    rank = int(np.sum(diag > 1e-10 * scale))
    keep = np.sort(pivots[:rank])
    dropped = np.setdiff1d(np.arange(m), keep)
    if dropped.size:
        if rank == 0:
            consistent = np.allclose(problem.b, 0.0, atol=1e-9)
        else:
            coeffs, *_ = np.linalg.lstsq(matrix[keep].T, matrix[dropped].T, rcond=None)
            predicted = coeffs.T @ problem.b[keep]
            consistent = np.allclose(predicted, problem.b[dropped], atol=1e-8 * (1.0 + np.abs(problem.b).max()))
        if not consistent:
            return None, keep
        logger.debug(f"Removed {dropped.size} dependent constraints")
    reduced = problem.model_copy(update={
        "a_blocks": tuple(a[keep] for a in problem.a_blocks),
        "b": problem.b[keep],
    })
    return reduced, keep


def _nt_scaling(x: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """G with G^{-1} X G^{-T} = G^T Z G = diag(lam); returns (G, lam)."""
    lx = np.linalg.cholesky(x)
    lz = np.linalg.cholesky(z)
    _, s, vt = np.linalg.svd(lz.T @ lx)
    g = lx @ vt.T @ np.diag(1.0 / np.sqrt(s))
    return g, s


def _max_step(lam: np.ndarray, d: np.ndarray) -> float:
    """Largest alpha with diag(lam) + alpha * d PSD."""
    inv_sqrt = 1.0 / np.sqrt(lam)
    scaled = _sym(d * inv_sqrt[:, None] * inv_sqrt[None, :])
    smallest = float(np.linalg.eigvalsh(scaled)[0])
    return np.inf if smallest >= 0 else -1.0 / smallest


def _initial_point(problem: SDPProblem) -> Tuple[Blocks, np.ndarray, Blocks]:
    total = sum(problem.sizes)
    a_norms = [
        float(np.sqrt(sum(np.sum(a[k] ** 2) for a in problem.a_blocks))) for k in range(problem.constraints)
    ]
    xi = max([10.0, np.sqrt(total)] + [
        total * (1.0 + abs(bk)) / (1.0 + nk) for bk, nk in zip(problem.b, a_norms)
    ])
    eta = max([10.0, np.sqrt(total), _norm(list(problem.c_blocks))] + a_norms)
    x = [xi * np.eye(n) for n in problem.sizes]
    z = [eta * np.eye(n) for n in problem.sizes]
    return x, np.zeros(problem.constraints), z


def solve_sdp(
    problem: SDPProblem,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> SDPSolution:
    """Solve a block SDP; residuals in the result are recomputed from the iterates."""
    settings = settings or default_settings
    tol = settings.SDP_TOL if tol is None else tol
    max_iter = settings.SDP_MAX_ITER if max_iter is None else max_iter
    if any(n <= 0 for n in problem.sizes):
        raise ValueError("SDP blocks must have positive size")

    if problem.constraints == 0:
        eigs = [float(np.linalg.eigvalsh(c)[0]) for c in problem.c_blocks]
        x = [np.zeros((n, n)) for n in problem.sizes]
        status = SDPStatus.OPTIMAL if min(eigs) >= -tol else SDPStatus.UNBOUNDED
        return _finish(problem, status, x, np.zeros(0), [c.copy() for c in problem.c_blocks], 0)

    reduced, keep = _reduce_rows(problem)
    if reduced is None:
        x, y, z = _initial_point(problem)
        return _finish(problem, SDPStatus.INFEASIBLE, x, y, z, 0)

    x, y, z = _initial_point(reduced)
    total = sum(reduced.sizes)
    b_norm = 1.0 + float(np.linalg.norm(reduced.b))
    c_norm = 1.0 + _norm(list(reduced.c_blocks))
    status = SDPStatus.INACCURATE
    iteration = 0

    for iteration in range(1, max_iter + 1):
        rp = reduced.b - _apply(reduced, x)
        aty = _adjoint(reduced, y)
        rd = [_sym(c - a - zz) for c, a, zz in zip(reduced.c_blocks, aty, z)]
        mu = _inner(x, z) / total
        pobj = _inner(list(reduced.c_blocks), x)
        dobj = float(reduced.b @ y)
        p_res = float(np.linalg.norm(rp)) / b_norm
        d_res = _norm(rd) / c_norm
        logger.debug(
            f"iter {iteration}: pobj={pobj:.9g} dobj={dobj:.9g} rp={p_res:.2e} rd={d_res:.2e} mu={mu:.2e}"
        )
        if p_res <= tol and d_res <= tol and abs(pobj - dobj) <= tol * (1.0 + abs(pobj)):
            status = SDPStatus.OPTIMAL
            break
        if dobj > 0:
            farkas = max(float(np.linalg.eigvalsh(_sym(a))[-1]) for a in aty) / dobj
            if farkas <= tol or dobj > DIVERGENCE * b_norm:
                status = SDPStatus.INFEASIBLE
                break
        if pobj < -DIVERGENCE * c_norm:
            status = SDPStatus.UNBOUNDED
            break

        try:
            scalings = [_nt_scaling(xb, zb) for xb, zb in zip(x, z)]
        except np.linalg.LinAlgError:
            logger.warning("Lost positive definiteness of the iterates")
            break
        gs = [g for g, _ in scalings]
        lams = [lam for _, lam in scalings]
        ws = [g @ g.T for g in gs]

        m = reduced.constraints
        schur = np.zeros((m, m))
        for a, w in zip(reduced.a_blocks, ws):
            waw = np.matmul(np.matmul(w, a), w)
            schur += a.reshape(m, -1) @ waw.reshape(m, -1).T
        schur = _sym(schur) + 1e-14 * np.trace(schur) / max(m, 1) * np.eye(m)
        try:
            factor = scipy.linalg.cho_factor(schur)
            solve = lambda rhs: scipy.linalg.cho_solve(factor, rhs)  # noqa: E731
        except np.linalg.LinAlgError:
            solve = lambda rhs: np.linalg.lstsq(schur, rhs, rcond=None)[0]  # noqa: E731

        wrdw = [w @ r @ w for w, r in zip(ws, rd)]

        def direction(targets: Blocks) -> Tuple[Blocks, np.ndarray, Blocks]:
            gsg = []
            for g, lam, t in zip(gs, lams, targets):
                s = 2.0 * t / (lam[:, None] + lam[None, :])
                gsg.append(_sym(g @ s @ g.T))
            rhs = rp - _apply(reduced, gsg) + _apply(reduced, wrdw)
            dy = solve(rhs)
            dz = [_sym(r - a) for r, a in zip(rd, _adjoint(reduced, dy))]
            dx = [_sym(v - w @ d @ w) for v, w, d in zip(gsg, ws, dz)]
            return dx, dy, dz

        def scaled(dx: Blocks, dz: Blocks) -> Tuple[Blocks, Blocks]:
            sx, sz = [], []
            for g, a, b in zip(gs, dx, dz):
                ginv = np.linalg.inv(g)
                sx.append(_sym(ginv @ a @ ginv.T))
                sz.append(_sym(g.T @ b @ g))
            return sx, sz

        def steps(sx: Blocks, sz: Blocks) -> Tuple[float, float]:
            ap = min([_max_step(lam, d) for lam, d in zip(lams, sx)] + [np.inf])
            ad = min([_max_step(lam, d) for lam, d in zip(lams, sz)] + [np.inf])
            return ap, ad

        affine = [-np.diag(lam ** 2) for lam in lams]
        dx_a, dy_a, dz_a = direction(affine)
        sx_a, sz_a = scaled(dx_a, dz_a)
        ap, ad = steps(sx_a, sz_a)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = _inner(
            [xb + ap * d for xb, d in zip(x, dx_a)], [zb + ad * d for zb, d in zip(z, dz_a)]
        ) / total
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

        corrector = [
            sigma * mu * np.eye(lam.size) - np.diag(lam ** 2) - _sym(a @ b)
            for lam, a, b in zip(lams, sx_a, sz_a)
        ]
        dx, dy, dz = direction(corrector)
        sx, sz = scaled(dx, dz)
        ap, ad = steps(sx, sz)
        ap, ad = min(1.0, STEP_FACTOR * ap), min(1.0, STEP_FACTOR * ad)

        x = [_sym(xb + ap * d) for xb, d in zip(x, dx)]
        y = y + ad * dy
        z = [_sym(zb + ad * d) for zb, d in zip(z, dz)]

    full_y = np.zeros(problem.constraints)
    full_y[keep] = y
    return _finish(problem, status, x, full_y, z, iteration)
