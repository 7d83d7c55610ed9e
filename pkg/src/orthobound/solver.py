"""Primal-dual interior-point solver for block-diagonal LMI problems.

Problems come as :class:`~orthobound.problem.SdpProblem`:

    maximize   c @ x + c0
    subject to F0_b + sum_m x_m F_mb  >= 0   for every block b

("psd" blocks in the semidefinite order, "diag" blocks entrywise). The
solver works on the pair

    (D)  max c @ y        S = F0 + sum y_m F_m >= 0
    (P)  min <F0, X>      <F_m, X> = -c_m,  X >= 0

with the HKM search direction, Mehrotra predictor-corrector and an
infeasible start. Blocks are equilibrated (diagonal congruence for psd
blocks, row scaling for diag blocks, column scaling for variables) before
iterating; reported quantities refer to the original problem.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .problem import Block, SdpProblem

log = logging.getLogger(__name__)

STATUSES = ("optimal", "near_optimal", "max_iter", "numerical_failure", "infeasible", "unbounded")


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 200
    damping: float = 0.98
    precision: str = "double"
    feasibility_target: float = 1e-8
    near_optimal_tolerance: float = 1e-5
    equilibrate: bool = True
    direction: str = "nt"
    stall_iterations: int = 8
    time_limit: float | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.direction not in ("nt", "hkm"):
            raise ValueError(f"unknown search direction {self.direction!r}")
        if self.precision not in ("double", "extended"):
            raise ValueError(f"unknown precision mode {self.precision!r}")


@dataclass
class Solution:
    status: str
    objective: float
    dual_objective: float
    x: np.ndarray
    block_min_eigs: list[float]
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    wall_time: float
    history: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def rel_gap(self) -> float:
        return abs(self.dual_objective - self.objective) / (
            1.0 + abs(self.objective) + abs(self.dual_objective))


def min_eigenvalue(block: np.ndarray, sym_tol: float = 1e-9) -> float:
    """Smallest eigenvalue of a symmetric matrix (LAPACK tridiagonal QL/QR)."""
    a = np.asarray(block, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if a.size == 0:
        return np.inf
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    return float(sla.eigvalsh((a + a.T) / 2, subset_by_index=[0, 0])[0])


# --------------------------------------------------------------------------
# equilibration


@dataclass
class _Scaled:
    c: np.ndarray
    blocks: list[Block]
    col: np.ndarray  # x = col * z
    obj_scale: float  # c_scaled = col * c / obj_scale
    row: list[np.ndarray]  # psd: congruence diagonal; diag: row factor


def _equilibrate(problem: SdpProblem, rounds: int) -> _Scaled:
    m = problem.num_variables
    col = np.ones(m)
    row = [np.ones(b.size) for b in problem.blocks]
    blocks = [Block(b.kind, b.size, b.constant.copy(), b.var_index.copy(), b.coef.copy())
              for b in problem.blocks]
    for _ in range(rounds):
        # variable columns
        colmax = np.zeros(m)
        for b in blocks:
            if len(b.var_index):
                mags = np.abs(b.coef).reshape(len(b.var_index), -1).max(axis=1)
                np.maximum.at(colmax, b.var_index, mags)
        f = np.where(colmax > 0, 1.0 / np.sqrt(np.where(colmax > 0, colmax, 1.0)), 1.0)
        col *= f
        for b in blocks:
            if len(b.var_index):
                shape = (-1,) + (1,) * (b.coef.ndim - 1)
                b.coef *= f[b.var_index].reshape(shape)
        # block rows
        for bi, b in enumerate(blocks):
            stack = np.concatenate([b.constant[None], b.coef]) if len(b.var_index) else b.constant[None]
            if b.kind == "diag":
                r = np.abs(stack).max(axis=0)
                g = np.where(r > 0, 1.0 / np.sqrt(np.where(r > 0, r, 1.0)), 1.0)
                b.constant *= g
                b.coef *= g
            else:
                r = np.abs(stack).max(axis=(0, 2))
                g = np.where(r > 0, 1.0 / np.sqrt(np.sqrt(np.where(r > 0, r, 1.0))), 1.0)
                outer = np.outer(g, g)
                b.constant *= outer
                b.coef *= outer
            row[bi] *= g
    c = problem.objective * col
    obj_scale = float(np.abs(c).max(initial=0.0)) or 1.0
    return _Scaled(c=c / obj_scale, blocks=blocks, col=col, obj_scale=obj_scale, row=row)


# --------------------------------------------------------------------------
# block helpers


def _apply(blocks, y):
    """F0 + sum y F per block."""
    return [b.evaluate(y) for b in blocks]


def _adjoint(blocks, mats, m):
    """Vector with entries sum_b <F_mb, mats_b>."""
    out = np.zeros(m)
    for b, z in zip(blocks, mats):
        if len(b.var_index):
            if b.kind == "psd":
                out[b.var_index] += np.tensordot(b.coef, z, axes=([1, 2], [0, 1]))
            else:
                out[b.var_index] += b.coef @ z
    return out


def _inner(blocks, a, b):
    return float(sum(np.vdot(u, v) for u, v in zip(a, b)))


def _step_length(blk: Block, cur: np.ndarray, chol, d: np.ndarray) -> float:
    if blk.kind == "diag":
        neg = d < 0
        return float(np.min(-cur[neg] / d[neg])) if np.any(neg) else np.inf
    t = sla.solve_triangular(chol, d, lower=True)
    t = sla.solve_triangular(chol, t.T, lower=True)
    lam = sla.eigvalsh((t + t.T) / 2, subset_by_index=[0, 0])[0]
    return -1.0 / lam if lam < 0 else np.inf


def _chol(blk: Block, a: np.ndarray):
    if blk.kind == "diag":
        if np.any(a <= 0):
            raise np.linalg.LinAlgError("nonpositive diagonal")
        return None
    return np.linalg.cholesky(a)


def _inv(blk, a, chol):
    if blk.kind == "diag":
        return 1.0 / a
    inv = sla.cho_solve((chol, True), np.eye(blk.size))
    return (inv + inv.T) / 2


def _prod(blk, a, b):
    return a * b if blk.kind == "diag" else a @ b


def _sym(blk, a):
    return a if blk.kind == "diag" else (a + a.T) / 2


def _ident(blk):
    return np.ones(blk.size) if blk.kind == "diag" else np.eye(blk.size)


# --------------------------------------------------------------------------
# main loop


def _trivial_solution(problem: SdpProblem, config: SolverConfig, t0: float) -> Solution:
    x = np.zeros(0)
    eigs = problem.min_eigenvalues(x)
    feasible = all(e >= -config.feasibility_target for e in eigs)
    val = problem.objective_constant
    return Solution(
        status="optimal" if feasible else "infeasible", objective=val, dual_objective=val,
        x=x, block_min_eigs=eigs, primal_residual=0.0, dual_residual=0.0, gap=0.0,
        iterations=0, wall_time=time.perf_counter() - t0, meta={"direction": "none"},
    )


def solve(problem: SdpProblem, config: SolverConfig | None = None) -> Solution:
    """Solve ``problem``; never raises on numerical trouble, reports it via ``status``."""
    config = config or SolverConfig()
    t0 = time.perf_counter()
    if problem.num_variables == 0:
        return _trivial_solution(problem, config, t0)
    if config.precision == "extended":
        from .extended import solve_extended

        return solve_extended(problem, config)
    return _solve_double(problem, config, t0)


def _solve_double(problem: SdpProblem, config: SolverConfig, t0: float) -> Solution:
    sc = _equilibrate(problem, rounds=4 if config.equilibrate else 0)
    blocks, c, m = sc.blocks, sc.c, problem.num_variables
    total_dim = sum(b.size for b in blocks)

    norm_c = float(np.linalg.norm(c))
    norm_f0 = float(np.sqrt(sum(np.sum(b.constant**2) for b in blocks)))
    norm_f = max((float(np.abs(b.coef).max(initial=0.0)) for b in blocks), default=1.0)

    gram_solve = _gram_solver(blocks, m)

    # infeasible start: X = xi I, S = eta I, y = 0
    xi = max(10.0, np.sqrt(total_dim), (1 + np.abs(c).max()) / max(norm_f, 1e-12))
    eta = max(10.0, np.sqrt(total_dim), norm_f0, norm_f)
    X = [xi * _ident(b) for b in blocks]
    S = [eta * _ident(b) for b in blocks]
    y = np.zeros(m)

    history = []
    stall = 0
    status = "max_iter"
    best = None
    it = 0
    meta = {"direction": config.direction.upper(), "corrector": "Mehrotra", "equilibrated": config.equilibrate}
    for it in range(1, config.max_iterations + 1):
        Fy = _apply(blocks, y)
        Rd = [f - s for f, s in zip(Fy, S)]
        rp = c + _adjoint(blocks, X, m)
        pobj = float(c @ y)
        dobj = _inner(blocks, [b.constant for b in blocks], X)
        mu = _inner(blocks, X, S) / total_dim
        rel_gap = abs(dobj - pobj) / (1 + abs(pobj) + abs(dobj))
        p_inf = float(np.sqrt(sum(np.sum(r**2) for r in Rd))) / (1 + norm_f0)
        d_inf = float(np.linalg.norm(rp)) / (1 + norm_c)
        history.append({"iter": it - 1, "pobj": pobj, "dobj": dobj, "gap": dobj - pobj,
                        "mu": mu, "p_inf": p_inf, "d_inf": d_inf})
        merit = max(rel_gap, p_inf, d_inf)
        if best is None or merit <= best[0]:
            if best is not None and merit < 0.5 * best[0]:
                stall = 0
            best = (merit, y.copy(), [a.copy() for a in X], [a.copy() for a in S], it - 1)
        stall += 1
        if stall > config.stall_iterations and merit <= config.near_optimal_tolerance:
            meta["stalled"] = True
            break
        if rel_gap <= config.tolerance and p_inf <= config.feasibility_target \
                and d_inf <= config.feasibility_target:
            status = "optimal"
            break
        if p_inf < 1e-6 and pobj > 1e10:
            status = "unbounded"
            break
        xnorm = float(np.sqrt(sum(np.sum(a**2) for a in X)))
        if dobj < -1e10 and d_inf * (1 + norm_c) < 1e-6 * xnorm:
            status = "infeasible"
            break
        if config.time_limit is not None and time.perf_counter() - t0 > config.time_limit:
            meta["time_limit_hit"] = True
            break
        try:
            newton = _newton_nt if config.direction == "nt" else _newton
            step = newton(blocks, X, S, Rd, rp, c, mu, m, config, gram_solve)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            log.debug("iteration %d failed: %s", it, exc)
            status = "numerical_failure"
            break
        dX, dy, dS, ap, ad = step
        history[-1]["step_p"], history[-1]["step_d"] = ap, ad
        X = [a + ap * d for a, d in zip(X, dX)]
        y = y + ad * dy
        S = [a + ad * d for a, d in zip(S, dS)]
    else:
        it = config.max_iterations + 1

    merit, y, X, S, iters = best
    if status != "optimal":
        if merit <= config.near_optimal_tolerance and status in ("max_iter", "numerical_failure"):
            status = "near_optimal"
    iters = it - 1 if status == "optimal" else iters
    return _finish(problem, sc, y, X, S, status, iters, history, meta, t0, config)


def _gram_solver(blocks, m):
    G = np.zeros((m, m))
    for b in blocks:
        if len(b.var_index):
            flat = b.coef.reshape(len(b.var_index), -1)
            G[np.ix_(b.var_index, b.var_index)] += flat @ flat.T
    G[np.diag_indices(m)] += 1e-14 * max(1.0, float(np.abs(G).max(initial=0.0)))
    fac = sla.cho_factor(G, lower=True)
    return lambda r: sla.cho_solve(fac, r)


def _newton(blocks, X, S, Rd, rp, c, mu, m, config, gram_solve):
    chol_X = [_chol(b, a) for b, a in zip(blocks, X)]
    chol_S = [_chol(b, a) for b, a in zip(blocks, S)]
    Sinv = [_inv(b, a, ch) for b, a, ch in zip(blocks, S, chol_S)]

    # Schur complement M_ij = <F_i, X F_j S^-1>
    M = np.zeros((m, m))
    for b, x, si in zip(blocks, X, Sinv):
        idx = b.var_index
        if not len(idx):
            continue
        if b.kind == "diag":
            Mb = (b.coef * (x * si)) @ b.coef.T
        else:
            G = np.matmul(np.matmul(x, b.coef), si)
            Mb = b.coef.reshape(len(idx), -1) @ np.transpose(G, (0, 2, 1)).reshape(len(idx), -1).T
        M[np.ix_(idx, idx)] += Mb
    M = (M + M.T) / 2
    diag_scale = np.sqrt(np.maximum(np.diag(M), 1e-300))
    Mn = M / np.outer(diag_scale, diag_scale)
    try:
        fac = sla.cho_factor(Mn, lower=True)
        base_solve = lambda r: sla.cho_solve(fac, r)
    except np.linalg.LinAlgError:
        reg = Mn.copy()
        reg[np.diag_indices(m)] += 1e-12
        lu = sla.lu_factor(reg)
        base_solve = lambda r: sla.lu_solve(lu, r)

    def solve_m(r):
        r = r / diag_scale
        z = base_solve(r)
        for _ in range(2):  # iterative refinement
            z = z + base_solve(r - Mn @ z)
        return z / diag_scale

    XRdSi = [_prod(b, _prod(b, x, r), si) for b, x, r, si in zip(blocks, X, Rd, Sinv)]
    base_rhs = c - _adjoint(blocks, XRdSi, m)
    FSinv = _adjoint(blocks, Sinv, m)

    correction_threshold = 0.1 * config.feasibility_target * (1 + float(np.linalg.norm(c)))

    def direction(sigma_mu, corr):
        rhs = base_rhs + sigma_mu * FSinv
        if corr is not None:
            rhs = rhs - _adjoint(blocks, [_prod(b, q, si) for b, q, si in zip(blocks, corr, Sinv)], m)
        dy = solve_m(rhs)
        dS = [r + (b.evaluate(dy) - b.constant) for b, r in zip(blocks, Rd)]
        dX = []
        for b, x, si, ds, q in zip(blocks, X, Sinv, dS, corr or [None] * len(blocks)):
            d = sigma_mu * si - x - _prod(b, _prod(b, x, ds), si)
            if q is not None:
                d = d - _prod(b, q, si)
            dX.append(_sym(b, d))
        # restore <F_m, dX> = -rp when roundoff has visibly broken it
        err = -rp - _adjoint(blocks, dX, m)
        if np.linalg.norm(err) > correction_threshold:
            lam = gram_solve(err)
            dX = [d + (b.evaluate(lam) - b.constant) for b, d in zip(blocks, dX)]
        return dX, dy, dS

    def steps(dX, dS):
        ap = min([_step_length(b, x, ch, d) for b, x, ch, d in zip(blocks, X, chol_X, dX)] + [np.inf])
        ad = min([_step_length(b, s, ch, d) for b, s, ch, d in zip(blocks, S, chol_S, dS)] + [np.inf])
        return ap, ad

    # predictor
    dXa, dya, dSa = direction(0.0, None)
    ap, ad = steps(dXa, dSa)
    ap, ad = min(1.0, ap), min(1.0, ad)
    total_dim = sum(b.size for b in blocks)
    mu_aff = _inner(blocks, [x + ap * d for x, d in zip(X, dXa)],
                    [s + ad * d for s, d in zip(S, dSa)]) / total_dim
    sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
    # corrector
    corr = [_prod(b, dx, ds) for b, dx, ds in zip(blocks, dXa, dSa)]
    dX, dy, dS = direction(sigma * mu, corr)
    ap, ad = steps(dX, dS)
    gamma = min(config.damping, 0.9 + 0.09 * min(ap, ad))
    ap = min(1.0, gamma * ap)
    ad = min(1.0, gamma * ad)
    if not (np.isfinite(ap) and np.isfinite(ad)) or not np.all(np.isfinite(dy)):
        raise FloatingPointError("non-finite step")
    return dX, dy, dS, ap, ad


def _nt_scaling(blk, x, s):
    """G with W = G G^T the NT scaling point (W S W = X) and v = diag of G^-1 X G^-T."""
    if blk.kind == "diag":
        if np.any(x <= 0) or np.any(s <= 0):
            raise np.linalg.LinAlgError("nonpositive diagonal")
        return (x / s) ** 0.25, np.sqrt(x * s)
    lx = np.linalg.cholesky(x)
    d, u = np.linalg.eigh(lx.T @ s @ lx)
    if d[0] <= 0:
        raise np.linalg.LinAlgError("scaled product not positive definite")
    return (lx @ u) * d ** -0.25, np.sqrt(d)


def _congr(blk, g, a, transpose=False):
    """G a G^T (or G^T a G)."""
    if blk.kind == "diag":
        return g * a * g
    return g.T @ a @ g if transpose else g @ a @ g.T


def _newton_nt(blocks, X, S, Rd, rp, c, mu, m, config, gram_solve):
    scal = [_nt_scaling(b, x, s) for b, x, s in zip(blocks, X, S)]
    # Schur complement M_ij = <G^T F_i G, G^T F_j G>
    M = np.zeros((m, m))
    for b, (g, _) in zip(blocks, scal):
        idx = b.var_index
        if not len(idx):
            continue
        if b.kind == "diag":
            ft = b.coef * (g * g)
        else:
            ft = np.matmul(np.matmul(g.T, b.coef), g)
        flat = ft.reshape(len(idx), -1)
        M[np.ix_(idx, idx)] += flat @ flat.T
    diag_scale = np.sqrt(np.maximum(np.diag(M), 1e-300))
    Mn = M / np.outer(diag_scale, diag_scale)
    try:
        fac = sla.cho_factor(Mn, lower=True)
        base_solve = lambda r: sla.cho_solve(fac, r)
    except np.linalg.LinAlgError:
        reg = Mn.copy()
        reg[np.diag_indices(m)] += 1e-12
        lu = sla.lu_factor(reg)
        base_solve = lambda r: sla.lu_solve(lu, r)

    def solve_m(r):
        r = r / diag_scale
        z = base_solve(r)
        for _ in range(2):
            z = z + base_solve(r - Mn @ z)
        return z / diag_scale

    WRdW = [_congr(b, g * g if b.kind == "diag" else g @ g.T, r) if b.kind == "diag"
            else (g @ g.T) @ r @ (g @ g.T) for b, (g, _), r in zip(blocks, scal, Rd)]
    base_rhs = rp - _adjoint(blocks, WRdW, m)
    correction_threshold = 0.1 * config.feasibility_target * (1 + float(np.linalg.norm(c)))
    total_dim = sum(b.size for b in blocks)

    def direction(sigma_mu, corr):
        rhat = []
        for b, (g, v), q in zip(blocks, scal, corr or [None] * len(blocks)):
            if b.kind == "diag":
                r = 2 * (sigma_mu - v * v)
                if q is not None:
                    r = r - q
                rhat.append(r / (2 * v))
            else:
                r = -2 * np.diag(v * v) + 2 * sigma_mu * np.eye(b.size)
                if q is not None:
                    r = r - q
                rhat.append(r / (v[:, None] + v[None, :]))
        GRG = [_congr(b, g, rh) for b, (g, _), rh in zip(blocks, scal, rhat)]
        dy = solve_m(base_rhs + _adjoint(blocks, GRG, m))
        dS = [r + (b.evaluate(dy) - b.constant) for b, r in zip(blocks, Rd)]
        dX = []
        for b, (g, _), grg, ds in zip(blocks, scal, GRG, dS):
            if b.kind == "diag":
                dX.append(grg - (g**4) * ds)
            else:
                w = g @ g.T
                dX.append(_sym(b, grg - w @ ds @ w))
        err = -rp - _adjoint(blocks, dX, m)
        if np.linalg.norm(err) > correction_threshold:
            lam = gram_solve(err)
            dX = [d + (b.evaluate(lam) - b.constant) for b, d in zip(blocks, dX)]
        return dX, dy, dS

    chol_X = [_chol(b, a) for b, a in zip(blocks, X)]
    chol_S = [_chol(b, a) for b, a in zip(blocks, S)]

    def steps(dX, dS):
        ap = min([_step_length(b, x, ch, d) for b, x, ch, d in zip(blocks, X, chol_X, dX)] + [np.inf])
        ad = min([_step_length(b, s, ch, d) for b, s, ch, d in zip(blocks, S, chol_S, dS)] + [np.inf])
        return ap, ad

    dXa, dya, dSa = direction(0.0, None)
    ap, ad = steps(dXa, dSa)
    ap, ad = min(1.0, ap), min(1.0, ad)
    mu_aff = _inner(blocks, [x + ap * d for x, d in zip(X, dXa)],
                    [s + ad * d for s, d in zip(S, dSa)]) / total_dim
    expon = max(1.0, 3 * min(ap, ad) ** 2)
    sigma = min(1.0, max(0.0, mu_aff / mu)) ** expon if mu > 0 else 0.0
    corr = []
    for b, (g, _), dx, ds in zip(blocks, scal, dXa, dSa):
        if b.kind == "diag":
            corr.append(2 * (dx / (g * g)) * (ds * g * g))
        else:
            gi = np.linalg.inv(g)
            dxs = gi @ dx @ gi.T
            dss = g.T @ ds @ g
            corr.append(dxs @ dss + dss @ dxs)
    dX, dy, dS = direction(sigma * mu, corr)
    ap, ad = steps(dX, dS)
    gamma = min(config.damping, 0.9 + 0.09 * min(ap, ad))
    ap = min(1.0, gamma * ap)
    ad = min(1.0, gamma * ad)
    if not (np.isfinite(ap) and np.isfinite(ad)) or not np.all(np.isfinite(dy)):
        raise FloatingPointError("non-finite step")
    return dX, dy, dS, ap, ad


def _finish(problem, sc, z, X, S, status, iters, history, meta, t0, config):
    x = sc.col * z
    eigs = problem.min_eigenvalues(x)
    vals = problem.evaluate(x)
    rel_eigs = []
    for blk, val, e in zip(problem.blocks, vals, eigs):
        norm = float(np.abs(val).max(initial=0.0)) if blk.kind == "diag" else float(np.linalg.norm(val, 2))
        rel_eigs.append(e / max(1.0, norm))
    # unscale the dual matrix: X_orig = D X' D (psd) or g * X' (diag)
    dual_val = 0.0
    for b, xs, g in zip(problem.blocks, X, sc.row):
        xo = xs * g if b.kind == "diag" else xs * np.outer(g, g)
        dual_val += float(np.vdot(b.constant, xo))
    dual_obj = sc.obj_scale * dual_val + problem.objective_constant
    obj = problem.objective_value(x)
    last = history[min(iters, len(history) - 1)] if history else {}
    primal_res = max(0.0, -min(rel_eigs, default=0.0))
    if status == "optimal" and primal_res > config.feasibility_target * 10:
        status = "near_optimal"
    meta = dict(meta, relative_block_min_eigs=rel_eigs)
    return Solution(
        status=status, objective=obj, dual_objective=dual_obj, x=x, block_min_eigs=eigs,
        primal_residual=primal_res, dual_residual=float(last.get("d_inf", 0.0)),
        gap=dual_obj - obj, iterations=iters, wall_time=time.perf_counter() - t0,
        history=history, meta=meta,
    )
