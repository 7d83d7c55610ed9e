"""Non-SDP bounds on the stability number of the orthogonality graph.

Covers the explicit stable-set construction, the eigenvalue ratio bound,
the Delsarte linear program and its closed-form optimal witness, and the
integer post-processing applied to reported bounds.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb, factorial

import numpy as np

from .scheme import HammingScheme, _check_omega_n, double_factorial, krawtchouk

log = logging.getLogger(__name__)

MAX_LISTED_N = 32
PAIR_CHECK_BUDGET = 10_000_000
DENOMINATOR_BOUND = 10**6


# --------------------------------------------------------------------------
# lower bound construction


def epsilon(n: int) -> int:
    """Parity class used by the construction: ``1 - eps == (n/4) mod 2``."""
    _check_omega_n(n)
    return 1 - (n // 4) % 2


def lower_bound_size(n: int) -> int:
    """4 * sum_{i=eps}^{floor(n/8)} C(n, 2i - eps)."""
    eps = epsilon(n)
    return 4 * sum(comb(n, 2 * i - eps) for i in range(eps, n // 8 + 1))


@dataclass(frozen=True)
class StableSetCertificate:
    n: int
    vertices: tuple[int, ...]
    size: int
    epsilon: int
    pairs_checked: int = 0
    verified: bool | None = None  # None: pair check skipped (over budget)


def _words_of_weight(n: int, w: int) -> list[int]:
    out = []
    for support in combinations(range(n), w):
        word = 0
        for b in support:
            word |= 1 << b
        out.append(word)
    return out


def lower_bound_set(n: int, verify: bool = True, budget: int = PAIR_CHECK_BUDGET) -> StableSetCertificate:
    """Explicit stable set of Omega(n).

    Words of weight eps, eps+2, ..., n/4-1 in one parity class, their
    complements, and the image of both under flipping bit 0.
    """
    eps = epsilon(n)
    if n > MAX_LISTED_N:
        raise ValueError(f"n={n} too large to list vertices; use lower_bound_size")
    full = (1 << n) - 1
    base = [w for weight in range(eps, n // 4, 2) for w in _words_of_weight(n, weight)]
    half = base + [full ^ w for w in base]
    vertices = tuple(sorted(half + [w ^ 1 for w in half]))
    size = lower_bound_size(n)
    if len(vertices) != size or len(set(vertices)) != size:
        raise AssertionError(f"construction produced {len(vertices)} vertices, expected {size}")
    pairs = size * (size - 1) // 2
    verified = None
    if verify and (pairs <= budget or n <= 16):
        verified = verify_stable_set(n, vertices)
    return StableSetCertificate(
        n=n, vertices=vertices, size=size, epsilon=eps,
        pairs_checked=pairs if verified is not None else 0, verified=verified,
    )


def verify_stable_set(n: int, vertices) -> bool:
    """True iff no two of ``vertices`` are at Hamming distance n/2."""
    words = np.asarray(vertices, dtype=np.uint64)
    target = n // 2
    for idx in range(len(words) - 1):
        diff = np.bitwise_xor(words[idx + 1:], words[idx])
        if np.any(_popcount(diff) == target):
            return False
    return True


def _popcount(a: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(a)
    bytes_ = a.view(np.uint8).reshape(a.shape + (8,))
    return np.unpackbits(bytes_, axis=-1).sum(axis=-1)


# --------------------------------------------------------------------------
# ratio bound


def ratio_bound(v: int, k: int, lambda_min) -> Fraction:
    """|V| / (1 - k / lambda_min) for a k-regular graph."""
    lam = Fraction(lambda_min)
    if lam >= 0:
        raise ValueError(f"least eigenvalue must be negative, got {lam}")
    return Fraction(v) / (1 - Fraction(k) / lam)


def omega_ratio_bound(n: int) -> Fraction:
    from .scheme import omega_spectrum

    spectrum = omega_spectrum(n)
    return ratio_bound(2**n, spectrum.degree, spectrum.lambda_min)


def chromatic_lower_bound(v: int, alpha_upper) -> int:
    """ceil(v / alpha_upper)."""
    a = Fraction(alpha_upper)
    if a < 1:
        raise ValueError(f"alpha upper bound must be >= 1, got {alpha_upper}")
    return math.ceil(Fraction(v) / a)


def integer_refinement(bound: float) -> int:
    """Largest multiple of 4 not exceeding ``floor(bound)``."""
    if isinstance(bound, float) and not math.isfinite(bound):
        raise ValueError(f"bound must be finite, got {bound}")
    if bound < 0:
        raise ValueError(f"bound must be nonnegative, got {bound}")
    fl = math.floor(bound)
    return fl - fl % 4


# --------------------------------------------------------------------------
# Delsarte LP


@dataclass
class DelsarteCertificate:
    w: list
    objective: float
    residuals: dict[str, float]
    exact: bool
    status: str
    extra: dict = field(default_factory=dict)


def _lp_residuals(scheme: HammingScheme, forbidden, w) -> dict:
    size = scheme.size
    qtw = [sum(scheme.Q[j][i] * w[j] for j in range(size)) for i in range(size)]
    return {
        "min_w": min(w),
        "min_Qtw": min(qtw),
        "w0_error": abs(w[0] - 1),
        "forbidden_max": max((abs(w[j]) for j in forbidden), default=0),
    }


def verify_distribution(scheme: HammingScheme, forbidden, w, tol: float = 0.0) -> tuple[bool, dict]:
    """Check w >= 0, Q^T w >= 0, w_0 = 1 and w vanishes on ``forbidden``.

    With ``tol=0`` and Fraction entries the check is exact.
    """
    res = _lp_residuals(scheme, forbidden, w)
    ok = (
        res["min_w"] >= -tol
        and res["min_Qtw"] >= -tol * scheme.v
        and res["w0_error"] <= tol
        and res["forbidden_max"] <= tol
    )
    return ok, res


def delsarte_problem(scheme: HammingScheme, forbidden):
    """The Delsarte LP as a diagonal-block problem over w_j, j notin {0} u forbidden."""
    from .problem import Block, SdpProblem

    forbidden = sorted(set(forbidden))
    if any(j < 1 or j > scheme.n for j in forbidden):
        raise ValueError(f"forbidden relations must lie in 1..{scheme.n}: {forbidden}")
    free = [j for j in range(1, scheme.n + 1) if j not in forbidden]
    size = scheme.size
    # rows: w_j >= 0 for free j, then (Q^T w)_i >= 0 for all i
    rows = len(free) + size
    const = np.zeros(rows)
    coef = np.zeros((len(free), rows))
    for col, j in enumerate(free):
        coef[col, col] = 1.0
    for i in range(size):
        r = len(free) + i
        const[r] = scheme.Q[0][i]
        for col, j in enumerate(free):
            coef[col, r] = scheme.Q[j][i]
    blocks = [Block("diag", rows, const, np.arange(len(free)), coef)] if free else []
    return SdpProblem(
        variables=tuple(("w", j) for j in free),
        objective=np.ones(len(free)),
        objective_constant=1.0,
        blocks=blocks,
        meta={"flavor": "delsarte", "n": scheme.n, "q": scheme.q, "forbidden": forbidden},
    )


def delsarte_lp(scheme: HammingScheme, forbidden, config=None) -> tuple[float, DelsarteCertificate, object]:
    """Solve the Delsarte LP numerically, then try to certify it exactly.

    Returns ``(bound, certificate, solution)``. The certificate status is
    ``"exact"`` when the rationalized distribution passes the exact check,
    ``"numeric"`` otherwise.
    """
    from .solver import solve

    forbidden = sorted(set(forbidden))
    problem = delsarte_problem(scheme, forbidden)
    sol = solve(problem, config)
    w_float = [1.0] + [0.0] * scheme.n
    for (_, j), val in zip(problem.variables, sol.x):
        w_float[j] = float(val)
    w_exact = [Fraction(1)] + [Fraction(0)] * scheme.n
    for j in range(1, scheme.n + 1):
        if j not in forbidden:
            w_exact[j] = max(Fraction(w_float[j]).limit_denominator(DENOMINATOR_BOUND), Fraction(0))
    exact_ok, exact_res = verify_distribution(scheme, forbidden, w_exact)
    num_ok, num_res = verify_distribution(scheme, forbidden, w_float, tol=1e-7)
    if exact_ok:
        w_out, residuals, status = w_exact, {k: float(v) for k, v in exact_res.items()}, "exact"
        objective = float(sum(w_exact))
    else:
        w_out, residuals, status = w_float, num_res, "numeric"
        objective = sol.objective
        if not num_ok:
            log.warning("Delsarte distribution fails numeric check: %s", num_res)
    cert = DelsarteCertificate(
        w=w_out, objective=objective, residuals=residuals, exact=exact_ok, status=status,
        extra={"exact_objective": sum(w_exact) if exact_ok else None},
    )
    # report the numeric optimum; the exact objective, if any, sits in the certificate
    return sol.objective, cert, sol


# --------------------------------------------------------------------------
# closed-form witness for Delsarte == ratio bound


@dataclass
class WitnessReport:
    r: int
    tau: int
    ell: int
    ties: tuple[int, ...]
    hypothesis: bool
    hypothesis_failures: tuple[int, ...]
    feasible: bool
    objective: Fraction
    ratio: Fraction
    residuals: dict

    @property
    def holds(self) -> bool:
        return self.hypothesis and self.feasible and self.objective == self.ratio


def prop1_witness(scheme: HammingScheme, r: int) -> tuple[list[Fraction], WitnessReport]:
    """Exact LP-feasible distribution whose value equals the ratio bound of relation ``r``.

    a = (-tau/(v_r - tau)) P_0 + (v_r/(v_r - tau)) P_ell, where tau = P[ell][r]
    is the least eigenvalue of relation ``r`` (smallest ``ell`` on ties).
    """
    if not (1 <= r <= scheme.n):
        raise ValueError(f"relation index r={r} outside 1..{scheme.n}")
    P = scheme.P
    column = [P[i][r] for i in range(scheme.size)]
    tau = min(column)
    ties = tuple(i for i, val in enumerate(column) if val == tau)
    ell = ties[0]
    vr = scheme.valencies[r]
    if vr == tau:
        raise ZeroDivisionError("v_r equals the least eigenvalue")
    lo, hi = Fraction(-tau, vr - tau), Fraction(vr, vr - tau)
    a = [lo * P[0][i] + hi * P[ell][i] for i in range(scheme.size)]
    failures = tuple(
        i for i in range(scheme.size) if vr * P[ell][i] < scheme.valencies[i] * tau
    )
    feasible, residuals = verify_distribution(scheme, [r], a)
    report = WitnessReport(
        r=r, tau=tau, ell=ell, ties=ties[1:], hypothesis=not failures,
        hypothesis_failures=failures, feasible=feasible, objective=sum(a),
        ratio=ratio_bound(scheme.v, vr, tau), residuals=residuals,
    )
    return a, report


def corollary_identity_check(n: int, i: int) -> tuple[Fraction, Fraction, bool]:
    """Both sides of the identity behind the Delsarte/ratio coincidence for Omega(n).

    lhs = C(n, n/2) K_i(2) - C(n, i) K_{n/2}(2)
    rhs = 2^{n/2+2} (n-2)! (n-1)!! (n/2 - i)^2 / (i! (n/2)! (n-i)!)
    """
    _check_omega_n(n)
    if not (0 <= i <= n):
        raise ValueError(f"i={i} outside [0, {n}]")
    half = n // 2
    lhs = Fraction(comb(n, half) * krawtchouk(n, 2, i, 2) - comb(n, i) * krawtchouk(n, 2, half, 2))
    rhs = Fraction(
        2 ** (half + 2) * factorial(n - 2) * double_factorial(n - 1) * (half - i) ** 2,
        factorial(i) * factorial(half) * factorial(n - i),
    )
    return lhs, rhs, lhs == rhs and lhs >= 0
