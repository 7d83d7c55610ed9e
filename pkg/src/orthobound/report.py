"""Bound reports, the bound chain check and the on-disk results cache."""
from __future__ import annotations

import dataclasses
import fcntl
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__
from .classical import (
    delsarte_lp, integer_refinement, lower_bound_size, omega_ratio_bound,
)
from .scheme import build_scheme
from .solver import SolverConfig, solve
from .terwilliger import build_laurent_sdp, build_schrijver_sdp

METHODS = ("lower", "ratio", "delsarte", "schrijver", "laurent")
UPPER_METHODS = ("laurent", "schrijver", "delsarte", "ratio")
SCHEMA_VERSION = 1
CACHE_ENV = "ORTHOBOUND_CACHE"


class ChainViolation(RuntimeError):
    pass


@dataclass
class BoundReport:
    n: int
    method: str
    forbidden: list[int]
    value: float | None
    integer_refinement: int | None
    status: str
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    wall_time: float = 0.0
    config_hash: str = ""
    version: str = __version__
    omega: bool = True
    exact_value: str | None = None
    dual_value: float | None = None
    schema_version: int = SCHEMA_VERSION

    @property
    def solved(self) -> bool:
        return self.status in ("exact", "optimal", "near_optimal")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BoundReport":
        return cls(**data)


def load_schema() -> dict:
    text = resources.files("orthobound").joinpath("schemas/bound_report.v1.json").read_text()
    return json.loads(text)


def is_omega(n: int, forbidden) -> bool:
    return n % 4 == 0 and list(forbidden) == [n // 2]


def config_hash(method: str, config: SolverConfig) -> str:
    payload = {"method": method}
    if method in ("delsarte", "schrijver", "laurent"):
        payload["config"] = dataclasses.asdict(config)
        payload["config"].pop("time_limit", None)
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _refine(value: float, omega: bool) -> int:
    return integer_refinement(value) if omega else math.floor(value)


def compute(n: int, method: str, forbidden=None, config: SolverConfig | None = None) -> BoundReport:
    """Compute one bound. ``lower`` and ``ratio`` need the Omega(n) setting."""
    config = config or SolverConfig()
    forbidden = sorted(set(forbidden)) if forbidden is not None else [n // 2]
    omega = is_omega(n, forbidden)
    chash = config_hash(method, config)
    t0 = time.perf_counter()
    if method in ("lower", "ratio"):
        if not omega:
            raise ValueError(f"method {method!r} is only defined for Omega(n): n % 4 == 0, forbidden {{n/2}}")
        exact = Fraction(lower_bound_size(n)) if method == "lower" else omega_ratio_bound(n)
        return BoundReport(
            n=n, method=method, forbidden=forbidden, value=float(exact),
            integer_refinement=math.floor(exact) if method == "lower" else integer_refinement(exact),
            status="exact", exact_value=str(exact), wall_time=time.perf_counter() - t0,
            config_hash=chash, omega=omega,
        )
    if method == "delsarte":
        value, cert, sol = delsarte_lp(build_scheme(n), forbidden, config)
        residuals = {k: float(v) for k, v in cert.residuals.items()}
        residuals["certificate"] = cert.status
        exact_value = str(cert.extra["exact_objective"]) if cert.exact else None
    elif method in ("schrijver", "laurent"):
        build = build_schrijver_sdp if method == "schrijver" else build_laurent_sdp
        sol = solve(build(n, forbidden), config)
        value, residuals, exact_value = sol.objective, {}, None
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    # the dual (Z-side) objective is the upper-bound certificate; never report below it
    value = max(sol.objective, sol.dual_objective)
    residuals.update({
        "primal_objective": sol.objective,
        "primal": sol.primal_residual, "dual": sol.dual_residual,
        "gap": sol.gap, "rel_gap": sol.rel_gap,
        "min_block_eig": min(sol.block_min_eigs, default=0.0),
    })
    if sol.meta.get("time_limit_hit"):
        residuals["time_limit_hit"] = 1.0
    return BoundReport(
        n=n, method=method, forbidden=forbidden, value=value,
        integer_refinement=_refine(value, omega) if math.isfinite(value) else None,
        status=sol.status, residuals=residuals, iterations=sol.iterations,
        wall_time=time.perf_counter() - t0, config_hash=chash, omega=omega,
        exact_value=exact_value, dual_value=sol.dual_objective,
    )


def check_chain(reports: list[BoundReport], rel_tol: float = 1e-6, abs_tol: float = 1e-3) -> None:
    """lower <= laurent <= schrijver <= delsarte <= ratio on the solved reports."""
    by = {r.method: r for r in reports if r.solved and r.value is not None}
    order = [m for m in ("lower",) + UPPER_METHODS if m in by]
    for a, b in zip(order, order[1:]):
        va, vb = by[a].value, by[b].value
        slack = abs_tol + rel_tol * max(abs(va), abs(vb))
        if va > vb + slack:
            raise ChainViolation(f"bound chain violated: {a}={va} > {b}={vb}")
    if "lower" in by:
        lo = by["lower"].value
        for m in UPPER_METHODS:
            if m in by and by[m].value < lo - abs_tol - rel_tol * lo:
                raise ChainViolation(f"upper bound {m}={by[m].value} below lower bound {lo}")


class Cache:
    """Append-only JSON-lines cache keyed by (n, method, forbidden, config hash, version)."""

    def __init__(self, path):
        self.path = Path(path)

    @classmethod
    def from_env(cls):
        path = os.environ.get(CACHE_ENV)
        return cls(path) if path else None

    @staticmethod
    def key(n, method, forbidden, chash, version=__version__):
        return (n, method, tuple(forbidden), chash, version)

    def lookup(self, n, method, forbidden, chash) -> BoundReport | None:
        if not self.path.exists():
            return None
        want = self.key(n, method, forbidden, chash)
        found = None
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if self.key(rec["n"], rec["method"], rec["forbidden"], rec["config_hash"],
                            rec["version"]) == want:
                    found = rec
        return BoundReport.from_dict(found) if found else None

    def store(self, report: BoundReport) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(report.to_dict(), sort_keys=True) + "\n"
        with self.path.open("a", encoding="utf-8") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                fh.write(line)
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)


def compute_cached(n, method, forbidden=None, config=None, cache: Cache | None = None) -> BoundReport:
    config = config or SolverConfig()
    forbidden = sorted(set(forbidden)) if forbidden is not None else [n // 2]
    if cache is not None:
        hit = cache.lookup(n, method, forbidden, config_hash(method, config))
        if hit is not None:
            return hit
    rep = compute(n, method, forbidden, config)
    if cache is not None and rep.solved:
        cache.store(rep)
    return rep
