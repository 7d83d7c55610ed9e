from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from orthobound.scheme import (
    binomial, build_scheme, double_factorial, krawtchouk, omega_spectrum,
)


def _pascal(n):
    row = [1]
    for _ in range(n):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row


def test_binomial_values():
    assert binomial(4, 2) == 6
    assert binomial(9, 0) == 1
    assert binomial(16, 8) == 12870 == _pascal(16)[8]
    assert binomial(5, -1) == 0
    assert binomial(5, 6) == 0
    assert binomial(60, 30) == comb(60, 30)


def test_double_factorial():
    assert double_factorial(7) == 105
    assert double_factorial(5) == 15
    assert double_factorial(0) == 1
    assert double_factorial(-1) == 1
    assert double_factorial(39) > 2**64
    with pytest.raises(ValueError):
        double_factorial(-2)


def test_krawtchouk_values():
    assert all(krawtchouk(7, 2, 0, x) == 1 for x in range(8))
    assert krawtchouk(4, 2, 2, 2) == -2
    assert krawtchouk(8, 2, 4, 2) == -10


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20), st.sampled_from([2, 3]), st.data())
def test_krawtchouk_orthogonality(n, q, data):
    k = data.draw(st.integers(0, n))
    l = data.draw(st.integers(0, n))
    total = sum(comb(n, x) * (q - 1) ** x * krawtchouk(n, q, k, x) * krawtchouk(n, q, l, x)
                for x in range(n + 1))
    expected = q**n * comb(n, k) * (q - 1) ** k if k == l else 0
    assert total == expected


def test_small_scheme():
    s = build_scheme(2, 2)
    assert [list(r) for r in s.P] == [[1, 2, 1], [1, 0, -1], [1, -2, 1]]
    s.check()


@pytest.mark.parametrize("n,q", [(n, q) for n in (1, 4, 7, 16, 20) for q in (2, 3)])
def test_pq_is_v_identity(n, q):
    s = build_scheme(n, q)
    s.check()
    v = q**n
    for i in range(n + 1):
        for j in range(n + 1):
            assert sum(s.P[i][k] * s.Q[k][j] for k in range(n + 1)) == (v if i == j else 0)
    assert list(s.P[0]) == [comb(n, j) * (q - 1) ** j for j in range(n + 1)]
    assert s.valencies == s.multiplicities == tuple(s.P[0])


def test_scheme_rejects_bad_input():
    with pytest.raises(ValueError):
        build_scheme(0)
    with pytest.raises(ValueError):
        build_scheme(4, 1)
    with pytest.raises(ValueError):
        build_scheme(70)


def test_omega_spectrum_examples():
    sp16 = omega_spectrum(16)
    assert sp16.lambda_min == Fraction(-12870, 15) == -858
    assert sp16.degree == 12870
    assert omega_spectrum(4).value(2) == -2 == krawtchouk(4, 2, 2, 2)
    for n in (4, 8, 12):
        assert omega_spectrum(n).value(1) == 0


@pytest.mark.parametrize("n", [4, 8, 12, 16, 20, 24, 28, 32])
def test_omega_spectrum_is_krawtchouk_column(n):
    spectrum = omega_spectrum(n)
    for m in range(1, n):
        assert spectrum.value(m) == krawtchouk(n, 2, n // 2, m)
    assert spectrum.lambda_min == min(krawtchouk(n, 2, n // 2, m) for m in range(1, n + 1))


@pytest.mark.parametrize("n", [0, 6, 10, -4])
def test_omega_spectrum_rejects(n):
    with pytest.raises(ValueError):
        omega_spectrum(n)
