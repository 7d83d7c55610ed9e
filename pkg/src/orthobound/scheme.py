"""Exact algebra of the binary/q-ary Hamming scheme and of the orthogonality graph.

Everything here is integer or :class:`fractions.Fraction` arithmetic; no
floating point is introduced.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

MAX_SCHEME_N = 64


def binomial(n: int, k: int) -> int:
    """C(n, k), zero outside ``0 <= k <= n``."""
    if n < 0:
        raise ValueError(f"binomial needs n >= 0, got {n}")
    if k < 0 or k > n:
        return 0
    return comb(n, k)


def double_factorial(m: int) -> int:
    """m!! = m (m-2) (m-4) ..., with (-1)!! = 0!! = 1."""
    if m < -1:
        raise ValueError(f"double factorial undefined for m={m}")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


@lru_cache(maxsize=None)
def krawtchouk(n: int, q: int, k: int, x: int) -> int:
    """Value of the Krawtchouk polynomial K_k(x) for length ``n`` over a ``q``-ary alphabet."""
    if not (0 <= k <= n):
        raise ValueError(f"degree k={k} outside [0, {n}]")
    if not (0 <= x <= n):
        raise ValueError(f"point x={x} outside [0, {n}]")
    return sum(
        (-1) ** j * (q - 1) ** (k - j) * comb(x, j) * comb(n - x, k - j)
        for j in range(k + 1)
    )


def _matmul(a: tuple[tuple[int, ...], ...], b: tuple[tuple[int, ...], ...]) -> list[list[int]]:
    size = len(a)
    return [[sum(a[i][l] * b[l][j] for l in range(size)) for j in range(size)] for i in range(size)]


@dataclass(frozen=True)
class HammingScheme:
    """Parameters and eigenmatrices of H(n, q).

    ``P[i][j]`` is the eigenvalue of the distance-``j`` relation on the
    ``i``-th eigenspace, i.e. ``K_j(i)``. H(n, q) is self-dual so ``Q == P``.
    """

    n: int
    q: int
    v: int
    valencies: tuple[int, ...]
    multiplicities: tuple[int, ...]
    P: tuple[tuple[int, ...], ...]
    Q: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return self.n + 1

    def check(self) -> None:
        """Raise ``AssertionError`` if any structural identity fails."""
        n, v = self.n, self.v
        eye = [[v if i == j else 0 for j in range(n + 1)] for i in range(n + 1)]
        assert _matmul(self.P, self.Q) == eye, "PQ != vI"
        assert _matmul(self.Q, self.P) == eye, "QP != vI"
        assert tuple(self.P[0]) == self.valencies
        assert tuple(self.Q[0]) == self.multiplicities
        assert sum(self.valencies) == v and sum(self.multiplicities) == v
        assert all(x > 0 for x in self.valencies + self.multiplicities)


def build_scheme(n: int, q: int = 2, max_n: int = MAX_SCHEME_N) -> HammingScheme:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if q < 2:
        raise ValueError(f"alphabet size must be >= 2, got {q}")
    if n > max_n:
        raise ValueError(f"n={n} exceeds the scheme size limit {max_n}")
    P = tuple(tuple(krawtchouk(n, q, j, i) for j in range(n + 1)) for i in range(n + 1))
    valencies = tuple(comb(n, j) * (q - 1) ** j for j in range(n + 1))
    return HammingScheme(
        n=n, q=q, v=q**n, valencies=valencies, multiplicities=valencies, P=P, Q=P
    )


@dataclass(frozen=True)
class OmegaSpectrum:
    """Distinct eigenvalues of the orthogonality graph (multiplicities not modelled)."""

    n: int
    degree: int
    lambdas: tuple[int, ...]  # lambdas[m - 1] is the value for m = 1..n
    lambda_min: Fraction

    def value(self, m: int) -> int:
        return self.lambdas[m - 1]


def _check_omega_n(n: int) -> None:
    if n <= 0 or n % 4:
        raise ValueError(
            f"n={n}: the orthogonality graph is only modelled for positive multiples of 4"
        )


def omega_spectrum(n: int) -> OmegaSpectrum:
    _check_omega_n(n)
    half = n // 2
    lead = Fraction(2**half, factorial(half))
    lambdas = []
    for m in range(1, n + 1):
        val = lead
        for odd in range(1, n, 2):
            val *= m - odd
        if val.denominator != 1:
            raise ArithmeticError(f"non-integral eigenvalue at m={m}: {val}")
        lambdas.append(int(val))
    lambda_min = Fraction(-comb(n, half), n - 1)
    assert min(lambdas) == lambda_min == lambdas[1]
    return OmegaSpectrum(n=n, degree=comb(n, half), lambdas=tuple(lambdas), lambda_min=lambda_min)
