"""Extended-precision interior point iterations.

Iterates, residuals and the Newton system are held in ``numpy.longdouble``
(80-bit on x86).  LAPACK only speaks double, so factorizations are done in
double and then polished: inverses by Newton-Schulz steps, the Schur system
by mixed-precision iterative refinement.  Step lengths only need a few
digits and come from double eigenvalues, followed by an extended Cholesky
check with backtracking.
"""
from __future__ import annotations

import logging
import time

import numpy as np
import scipy.linalg as sla

from .problem import SdpProblem
from .solver import Solution, SolverConfig, _equilibrate, _finish

log = logging.getLogger(__name__)

LD = np.longdouble


def _chol_ld(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor in extended precision; raises LinAlgError if not PD."""
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - np.dot(L[j, :j], L[j, :j])
        if not d > 0:
            raise np.linalg.LinAlgError("not positive definite")
        L[j, j] = np.sqrt(d)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _is_pd(kind, a) -> bool:
    if kind == "diag":
        return bool(np.all(a > 0))
    try:
        _chol_ld(a)
    except np.linalg.LinAlgError:
        return False
    return True


def _inv_ld(kind, a):
    if kind == "diag":
        return LD(1) / a
    z = np.linalg.inv(a.astype(float)).astype(LD)
    eye = np.eye(a.shape[0], dtype=LD)
    for _ in range(2):
        z = z @ (2 * eye - a @ z)
    return (z + z.T) / 2


def _max_step(kind, cur, d) -> float:
    if kind == "diag":
        neg = d < 0
        return float(np.min(-cur[neg] / d[neg])) if np.any(neg) else np.inf
    lam = sla.eigh(d.astype(float), cur.astype(float), eigvals_only=True, subset_by_index=[0, 0])[0]
    return -1.0 / lam if lam < 0 else np.inf


class _Blocks:
    """Equilibrated blocks converted to extended precision."""

    def __init__(self, blocks):
        self.kind = [b.kind for b in blocks]
        self.size = [b.size for b in blocks]
        self.idx = [b.var_index for b in blocks]
        self.F0 = [b.constant.astype(LD) for b in blocks]
        self.F = [b.coef.astype(LD) for b in blocks]

    def __len__(self):
        return len(self.kind)

    def apply(self, y):
        out = []
        for f0, f, idx in zip(self.F0, self.F, self.idx):
            out.append(f0 + np.tensordot(y[idx], f, axes=1) if len(idx) else f0.copy())
        return out

    def adjoint(self, mats, m):
        out = np.zeros(m, dtype=LD)
        for f, idx, z in zip(self.F, self.idx, mats):
            if len(idx):
                out[idx] += f.reshape(len(idx), -1) @ z.reshape(-1)
        return out

    def ident(self, i):
        return np.ones(self.size[i], dtype=LD) if self.kind[i] == "diag" else np.eye(self.size[i], dtype=LD)

    def prod(self, i, a, b):
        return a * b if self.kind[i] == "diag" else a @ b


def _inner(a, b):
    return sum(np.vdot(u.reshape(-1), v.reshape(-1)) for u, v in zip(a, b))


def solve_extended(problem: SdpProblem, config: SolverConfig) -> Solution:
    t0 = time.perf_counter()
    sc = _equilibrate(problem, rounds=4 if config.equilibrate else 0)
    B = _Blocks(sc.blocks)
    c = sc.c.astype(LD)
    m = problem.num_variables
    nb = len(B)
    total_dim = sum(B.size)

    norm_c = float(np.linalg.norm(sc.c))
    norm_f0 = float(np.sqrt(sum(np.sum(b.constant**2) for b in sc.blocks)))
    norm_f = max((float(np.abs(b.coef).max(initial=0.0)) for b in sc.blocks), default=1.0)
    xi = max(10.0, np.sqrt(total_dim), (1 + np.abs(sc.c).max()) / max(norm_f, 1e-12))
    eta = max(10.0, np.sqrt(total_dim), norm_f0, norm_f)
    X = [LD(xi) * B.ident(i) for i in range(nb)]
    S = [LD(eta) * B.ident(i) for i in range(nb)]
    y = np.zeros(m, dtype=LD)

    history, best, stall, status, it = [], None, 0, "max_iter", 0
    meta = {"direction": "HKM", "corrector": "Mehrotra", "precision": "extended",
            "equilibrated": config.equilibrate}
    tol_feas = config.feasibility_target
    for it in range(1, config.max_iterations + 1):
        Rd = [f - s for f, s in zip(B.apply(y), S)]
        rp = c + B.adjoint(X, m)
        pobj = float(c @ y)
        dobj = float(_inner(B.F0, X))
        mu = _inner(X, S) / total_dim
        rel_gap = abs(dobj - pobj) / (1 + abs(pobj) + abs(dobj))
        p_inf = float(np.sqrt(sum(np.sum(r * r) for r in Rd))) / (1 + norm_f0)
        d_inf = float(np.sqrt(np.sum(rp * rp))) / (1 + norm_c)
        history.append({"iter": it - 1, "pobj": pobj, "dobj": dobj, "gap": dobj - pobj,
                        "mu": float(mu), "p_inf": p_inf, "d_inf": d_inf})
        merit = max(rel_gap, p_inf, d_inf)
        if best is None or merit <= best[0]:
            if best is not None and merit < 0.5 * best[0]:
                stall = 0
            best = (merit, y.copy(), [a.copy() for a in X], [a.copy() for a in S], it - 1)
        stall += 1
        if stall > config.stall_iterations and merit <= config.near_optimal_tolerance:
            meta["stalled"] = True
            break
        if rel_gap <= config.tolerance and p_inf <= tol_feas and d_inf <= tol_feas:
            status = "optimal"
            break
        if config.time_limit is not None and time.perf_counter() - t0 > config.time_limit:
            meta["time_limit_hit"] = True
            break
        try:
            dX, dy, dS, ap, ad = _hkm_step(B, X, S, Rd, rp, c, mu, m, config)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            log.debug("iteration %d failed: %s", it, exc)
            status = "numerical_failure"
            break
        history[-1]["step_p"], history[-1]["step_d"] = ap, ad
        X = [a + LD(ap) * d for a, d in zip(X, dX)]
        y = y + LD(ad) * dy
        S = [a + LD(ad) * d for a, d in zip(S, dS)]
    else:
        it = config.max_iterations + 1

    merit, y, X, S, iters = best
    if status != "optimal" and merit <= config.near_optimal_tolerance \
            and status in ("max_iter", "numerical_failure"):
        status = "near_optimal"
    iters = it - 1 if status == "optimal" else iters
    return _finish(problem, sc, y.astype(float), [a.astype(float) for a in X],
                   [a.astype(float) for a in S], status, iters, history, meta, t0, config)


def _hkm_step(B, X, S, Rd, rp, c, mu, m, config):
    nb = len(B)
    Sinv = [_inv_ld(B.kind[i], S[i]) for i in range(nb)]
    M = np.zeros((m, m), dtype=LD)
    for i in range(nb):
        idx, f = B.idx[i], B.F[i]
        if not len(idx):
            continue
        if B.kind[i] == "diag":
            Mb = (f * (X[i] * Sinv[i])) @ f.T
        else:
            G = np.matmul(np.matmul(X[i], f), Sinv[i])
            Mb = f.reshape(len(idx), -1) @ np.transpose(G, (0, 2, 1)).reshape(len(idx), -1).T
        M[np.ix_(idx, idx)] += Mb
    M = (M + M.T) / 2
    scale = np.sqrt(np.maximum(np.diag(M), LD(1e-300)))
    Mn = M / np.outer(scale, scale)
    Md = Mn.astype(float)
    try:
        fac = sla.cho_factor(Md, lower=True)
        base = lambda r: sla.cho_solve(fac, r)
    except np.linalg.LinAlgError:
        Md[np.diag_indices(m)] += 1e-12
        lu = sla.lu_factor(Md)
        base = lambda r: sla.lu_solve(lu, r)

    def solve_m(r):
        r = r / scale
        z = base(r.astype(float)).astype(LD)
        for _ in range(4):
            z = z + base((r - Mn @ z).astype(float)).astype(LD)
        return z / scale

    XRdSi = [B.prod(i, B.prod(i, X[i], Rd[i]), Sinv[i]) for i in range(nb)]
    base_rhs = c - B.adjoint(XRdSi, m)
    FSinv = B.adjoint(Sinv, m)

    def direction(sigma_mu, corr):
        rhs = base_rhs + sigma_mu * FSinv
        if corr is not None:
            rhs = rhs - B.adjoint([B.prod(i, corr[i], Sinv[i]) for i in range(nb)], m)
        dy = solve_m(rhs)
        dS = [r + (f - f0) for r, f, f0 in zip(Rd, B.apply(dy), B.F0)]
        dX = []
        for i in range(nb):
            d = sigma_mu * Sinv[i] - X[i] - B.prod(i, B.prod(i, X[i], dS[i]), Sinv[i])
            if corr is not None:
                d = d - B.prod(i, corr[i], Sinv[i])
            dX.append(d if B.kind[i] == "diag" else (d + d.T) / 2)
        return dX, dy, dS

    def steps(dX, dS):
        ap = min([_max_step(B.kind[i], X[i], dX[i]) for i in range(nb)] + [np.inf])
        ad = min([_max_step(B.kind[i], S[i], dS[i]) for i in range(nb)] + [np.inf])
        return ap, ad

    dXa, dya, dSa = direction(LD(0), None)
    ap, ad = steps(dXa, dSa)
    ap, ad = min(1.0, ap), min(1.0, ad)
    total_dim = sum(B.size)
    mu_aff = _inner([x + LD(ap) * d for x, d in zip(X, dXa)],
                    [s + LD(ad) * d for s, d in zip(S, dSa)]) / total_dim
    sigma = LD(min(1.0, max(0.0, float(mu_aff / mu))) ** 3) if mu > 0 else LD(0)
    corr = [B.prod(i, dXa[i], dSa[i]) for i in range(nb)]
    dX, dy, dS = direction(sigma * mu, corr)
    ap, ad = steps(dX, dS)
    gamma = min(config.damping, 0.9 + 0.09 * min(ap, ad))
    ap, ad = min(1.0, gamma * ap), min(1.0, gamma * ad)
    if not (np.isfinite(ap) and np.isfinite(ad)) or not np.all(np.isfinite(dy)):
        raise FloatingPointError("non-finite step")
    # the double eigenvalue estimate may overshoot by a hair; back off until PD
    for cur, d, attr in ((X, dX, "p"), (S, dS, "d")):
        a = ap if attr == "p" else ad
        for _ in range(30):
            if all(_is_pd(B.kind[i], cur[i] + LD(a) * d[i]) for i in range(nb)):
                break
            a *= 0.8
        else:
            raise FloatingPointError("could not keep iterate positive definite")
        if attr == "p":
            ap = a
        else:
            ad = a
    return dX, dy, dS, ap, ad
