from fractions import Fraction
from itertools import combinations
from math import comb, factorial

import numpy as np
import pytest

from orthobound.classical import (
    chromatic_lower_bound, corollary_identity_check, delsarte_lp, epsilon, integer_refinement,
    lower_bound_set, lower_bound_size, omega_ratio_bound, prop1_witness, ratio_bound,
    verify_distribution, verify_stable_set,
)
from orthobound.scheme import build_scheme, double_factorial, krawtchouk

TABLE_LOWER = {16: 2304, 20: 20144, 24: 178208, 28: 1590376, 32: 14288896}
TABLE_RATIO = {16: 4096, 20: 52428, 24: 699050, 28: 9586980, 32: 134217728}


def _brute_alpha_omega4():
    adj = [[bin(a ^ b).count("1") == 2 for b in range(16)] for a in range(16)]
    best = 0
    for mask in range(1 << 16):
        members = [v for v in range(16) if mask >> v & 1]
        if len(members) <= best:
            continue
        if all(not adj[a][b] for a, b in combinations(members, 2)):
            best = len(members)
    return best


def test_alpha_omega4_brute_force():
    assert _brute_alpha_omega4() == 4 == lower_bound_size(4)


@pytest.mark.parametrize("n,size", sorted(TABLE_LOWER.items()))
def test_lower_bound_formula(n, size):
    assert lower_bound_size(n) == size


def test_epsilon():
    assert [epsilon(n) for n in (4, 8, 12, 16)] == [0, 1, 0, 1]


@pytest.mark.parametrize("n", [4, 8, 12, 16])
def test_stable_set_certificates(n):
    cert = lower_bound_set(n)
    assert cert.verified is True
    assert cert.size == len(set(cert.vertices)) == lower_bound_size(n)
    assert cert.pairs_checked == cert.size * (cert.size - 1) // 2


def test_stable_set_over_budget_is_unverified():
    cert = lower_bound_set(20, budget=1000)
    assert cert.size == 20144
    assert cert.verified is None


def test_verify_stable_set_detects_edge():
    assert not verify_stable_set(8, [0, 0b1111])
    assert verify_stable_set(8, [0, 0b1])


def test_ratio_bound_examples():
    assert ratio_bound(65536, 12870, -858) == 4096
    assert omega_ratio_bound(32) == 134217728
    assert ratio_bound(100, 7, -7) == 50
    with pytest.raises(ValueError):
        ratio_bound(10, 3, 0)


@pytest.mark.parametrize("n,value", sorted(TABLE_RATIO.items()))
def test_ratio_column(n, value):
    r = omega_ratio_bound(n)
    assert r == Fraction(2**n, n)
    assert r.numerator // r.denominator == value


def test_chromatic():
    assert chromatic_lower_bound(65536, 2304) == 29
    assert chromatic_lower_bound(65536, 3912) == 17
    assert chromatic_lower_bound(777, 777) == 1


@pytest.mark.parametrize("value,expected", [(20166.98, 20164), (2304.0, 2304), (20166.62, 20164),
                                            (3.9, 0), (184194.31, 184192)])
def test_integer_refinement(value, expected):
    assert integer_refinement(value) == expected


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -1.0])
def test_integer_refinement_rejects(bad):
    with pytest.raises(ValueError):
        integer_refinement(bad)


@pytest.mark.parametrize("n", [8, 12, 16, 20])
def test_delsarte_matches_ratio(n):
    bound, cert, _ = delsarte_lp(build_scheme(n), {n // 2})
    assert abs(bound - 2**n / n) <= 1e-6 * 2**n / n
    ok, res = verify_distribution(build_scheme(n), {n // 2}, cert.w, tol=1e-6)
    assert ok, res


def test_delsarte_extremes():
    s = build_scheme(10)
    assert delsarte_lp(s, set())[0] == pytest.approx(1024, rel=1e-7)
    assert delsarte_lp(s, set(range(1, 11)))[0] == pytest.approx(1, rel=1e-7)
    ok, _ = verify_distribution(s, set(), list(s.valencies))
    assert ok


def test_delsarte_code_bound():
    # minimum distance 6 in length 16: the Nordstrom-Robinson code is optimal
    bound, _, _ = delsarte_lp(build_scheme(16), set(range(1, 6)))
    assert bound == pytest.approx(256, rel=1e-6)


def test_prop1_small_example():
    a, rep = prop1_witness(build_scheme(4), 2)
    assert a == [1, 1, 0, 1, 1]
    assert rep.tau == -2 and rep.ell == 2
    assert sum(a) == 4 and rep.holds


@pytest.mark.parametrize("n", range(4, 33, 4))
def test_prop1_witness_exact(n):
    s = build_scheme(n)
    a, rep = prop1_witness(s, n // 2)
    assert rep.holds
    assert a[0] == 1 and a[n // 2] == 0
    assert all(isinstance(x, Fraction) or isinstance(x, int) for x in a)
    assert all(x >= 0 for x in a)
    assert all(sum(s.Q[j][i] * a[j] for j in range(n + 1)) >= 0 for i in range(n + 1))
    assert sum(a) == Fraction(2**n, n)


def test_corollary_spot_value():
    lhs, rhs, holds = corollary_identity_check(8, 2)
    assert lhs == rhs == 560 and holds
    assert krawtchouk(8, 2, 2, 2) == 4
    assert Fraction(2**6 * factorial(6) * double_factorial(7) * 4, factorial(2) * factorial(4) * factorial(6)) == 560


@pytest.mark.parametrize("n", range(4, 41, 4))
def test_corollary_identity(n):
    for i in range(n + 1):
        lhs, rhs, holds = corollary_identity_check(n, i)
        assert holds and lhs == rhs
        assert lhs == comb(n, n // 2) * krawtchouk(n, 2, i, 2) - comb(n, i) * krawtchouk(n, 2, n // 2, 2)
    assert corollary_identity_check(n, n // 2)[0] == 0
