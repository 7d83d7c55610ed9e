"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances."""
import io
from fractions import Fraction
from math import floor

import numpy as np
import pytest

from orthobound import sdpa
from orthobound.classical import (
    chromatic_lower_bound, corollary_identity_check, delsarte_lp, integer_refinement,
    lower_bound_set, lower_bound_size, omega_ratio_bound, prop1_witness,
)
from orthobound.cli import main
from orthobound.report import check_chain, compute
from orthobound.scheme import build_scheme
from orthobound.solver import solve
from orthobound.terwilliger import (
    bordered_oracle, build_schrijver_sdp, expand_orbit_assignment, psd_equivalence_oracle,
    triple_orbits,
)

NS = (16, 20, 24, 28, 32)
LOWER = {16: 2304, 20: 20144, 24: 178208, 28: 1590376, 32: 14288896}
RATIO = {16: 4096, 20: 52428, 24: 699050, 28: 9586980, 32: 134217728}


@pytest.fixture
def gate(capsys):
    def record(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {criterion:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return record


@pytest.fixture(scope="module")
def solved():
    return {}


def _report(solved, n, method):
    if (n, method) not in solved:
        solved[(n, method)] = compute(n, method)
    return solved[(n, method)]


def test_c01_lower_bound_formula(gate):
    got = {n: lower_bound_size(n) for n in NS}
    gate(1, got == LOWER, f"lower bounds {got}")


def test_c02_stable_set_certificates(gate):
    certs = {n: lower_bound_set(n) for n in (4, 8, 12, 16)}
    ok = all(c.verified is True and c.size == lower_bound_size(n) for n, c in certs.items())
    ok &= certs[16].size == 2304 and certs[16].pairs_checked == 2304 * 2303 // 2
    gate(2, ok, "exhaustive pair checks " + ", ".join(
        f"n={n}: {c.size} vertices / {c.pairs_checked} pairs" for n, c in certs.items()))


def test_c03_ratio_bound(gate):
    got = {}
    for n in NS:
        r = omega_ratio_bound(n)
        got[n] = r.numerator // r.denominator
    gate(3, got == RATIO and all(omega_ratio_bound(n) == Fraction(2**n, n) for n in NS),
         f"floor(2^n/n) {got}")


def test_c04_delsarte_and_witness(gate):
    errs = {}
    for n in (8, 12, 16, 20):
        bound, _, _ = delsarte_lp(build_scheme(n), {n // 2})
        errs[n] = abs(bound - 2**n / n) / (2**n / n)
    witness_ok = True
    for n in range(4, 33, 4):
        s = build_scheme(n)
        a, rep = prop1_witness(s, n // 2)
        witness_ok &= (rep.holds and a[0] == 1 and a[n // 2] == 0 and min(a) >= 0
                       and all(sum(s.Q[j][i] * a[j] for j in range(n + 1)) >= 0
                               for i in range(n + 1))
                       and sum(a) == Fraction(2**n, n))
    worst = max(errs.values())
    gate(4, worst <= 1e-6 and witness_ok,
         f"Delsarte max rel err {worst:.2e}; exact witnesses n=4..32 {'ok' if witness_ok else 'FAILED'}")


def test_c05_corollary_identity(gate):
    ok = all(corollary_identity_check(n, i)[2] for n in range(4, 41, 4) for i in range(n + 1))
    lhs, rhs, _ = corollary_identity_check(8, 2)
    gate(5, ok and lhs == rhs == 560, f"identity exact for n=4..40; (8,2) -> {lhs} = {rhs}")


def test_c06_blockdiag_oracle(gate):
    worst, agree, count = 0.0, True, 0
    for n in (4, 6, 8):
        rng = np.random.default_rng(2024 + n)
        for s in range(20):
            vals = {o.representative: float(rng.random()) for o in triple_orbits(n)}
            a = expand_orbit_assignment(n, vals)
            if s % 2:
                shift = float(rng.uniform(0, 2 * n))
                for i in range(n + 1):
                    a[(i, i, i)] += shift
            reps = [psd_equivalence_oracle(n, a, "x"), psd_equivalence_oracle(n, a, "y")]
            if n <= 6:
                reps.append(bordered_oracle(n, a))
            for rep in reps:
                worst = max(worst, rep["max_discrepancy"])
                agree &= rep["psd_agree"]
            count += 1
    gate(6, worst <= 1e-7 and agree,
         f"{count} assignments, max spectral discrepancy {worst:.1e}, PSD verdicts agree={agree}")


def test_c07_schrijver(gate, solved):
    r16, r20, r24 = (_report(solved, n, "schrijver") for n in (16, 20, 24))
    ok16 = abs(r16.value - 2304) <= 0.5
    ok20 = abs(r20.value - 20166.98) <= 1
    ok24 = abs(r24.value - 184194) <= 5e-3 * 184194
    gate(7, ok16 and ok20 and ok24 and r16.solved and r20.solved,
         f"n=16 {r16.value:.4f} ({r16.wall_time:.1f}s), n=20 {r20.value:.4f} ({r20.wall_time:.1f}s), "
         f"n=24 {r24.value:.2f} ({r24.wall_time:.1f}s, stretch)")


def test_c08_laurent(gate, solved):
    r16, r20 = _report(solved, 16, "laurent"), _report(solved, 20, "laurent")
    cands = list(range(LOWER[20], r20.integer_refinement + 1, 4))
    ok = (abs(r16.value - 2304) <= 0.5 and abs(r20.value - 20166.62) <= 1
          and r20.integer_refinement == 20164 and cands == list(range(20144, 20165, 4))
          and integer_refinement(20166.62) == 20164)
    gate(8, ok, f"n=16 {r16.value:.4f}, n=20 {r20.value:.4f} -> {r20.integer_refinement}; "
                f"candidates {{{cands[0]}, ..., {cands[-1]}}} ({len(cands)} values)")


def test_c09_chain(gate, solved):
    lines = []
    ok = True
    for n in (16, 20):
        reps = [_report(solved, n, m) for m in ("lower", "laurent", "schrijver", "delsarte", "ratio")]
        try:
            check_chain(reps)
        except Exception as exc:  # noqa: BLE001 - reported through the gate line
            ok = False
            lines.append(f"n={n}: {exc}")
            continue
        vals = [r.value for r in reps]
        tol = 1e-6 * vals[-1] + 1e-3
        ok &= all(a <= b + tol for a, b in zip(vals, vals[1:]))
        lines.append(f"n={n}: " + " <= ".join(f"{v:.2f}" for v in vals))
    gate(9, ok, "; ".join(lines))


def test_c10_chromatic(gate, solved):
    upper = min(_report(solved, 16, m).integer_refinement for m in ("laurent", "schrijver"))
    chi = chromatic_lower_bound(2**16, upper)
    hist = chromatic_lower_bound(2**16, 3912)
    gate(10, chi == 29 and hist == 17, f"chi(Omega(16)) >= {chi} from alpha <= {upper}; >= {hist} from 3912")


def test_c11_sdpa_roundtrip(gate, tmp_path):
    prob = build_schrijver_sdp(16)
    text = sdpa.dumps(prob)
    identical = sdpa.dumps(sdpa.loads(text)) == text
    path = tmp_path / "s16.dat-s"
    out = io.StringIO()
    main(["export", "--n", "16", "--out", str(path)], out=out)
    sol = solve(sdpa.read(path))
    value = max(sol.objective, sol.dual_objective)
    gate(11, identical and path.read_text() == text and abs(value - 2304) <= 0.5,
         f"byte-identical={identical}; re-solved export -> {value:.4f}")
