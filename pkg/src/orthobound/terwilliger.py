"""Terwilliger algebra of the binary Hamming cube and the reduced Schrijver/Laurent SDPs.

The 0-1 matrices ``M^t_{i,j}`` (rows of weight i, columns of weight j, at
distance i+j-2t) span an algebra whose irreducible decomposition has one
block of order n-2k+1 for each k = 0..n//2, repeated C(n,k) - C(n,k-1)
times. Positive semidefiniteness of any combination is decided by those
small blocks, which is what makes the code SDPs tractable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp

from .problem import Block, SdpProblem

MAX_EXPLICIT_N = 14
MAX_ORACLE_N = 10
MAX_BUILD_N = 40


def is_valid_triple(n: int, i: int, j: int, t: int) -> bool:
    return 0 <= i <= n and 0 <= j <= n and 0 <= t <= min(i, j) and i + j - t <= n


def distances(i: int, j: int, t: int) -> tuple[int, int, int]:
    """Sorted pairwise distances of the triangle (0, X, Y)."""
    return tuple(sorted((i, j, i + j - 2 * t)))


def _check_triple(n, i, j, t):
    if not is_valid_triple(n, i, j, t):
        raise ValueError(f"({i}, {j}, {t}) is not a valid triple for n={n}")


@dataclass(frozen=True)
class TripleOrbit:
    representative: tuple[int, int, int]
    members: tuple[tuple[int, int, int], ...]

    @property
    def distances(self) -> tuple[int, int, int]:
        return distances(*self.representative)


def orbit_members(n: int, i: int, j: int, t: int) -> tuple[tuple[int, int, int], ...]:
    _check_triple(n, i, j, t)
    dist = (i, j, i + j - 2 * t)
    out = set()
    for a in range(3):
        for b in range(3):
            if a != b:
                c = 3 - a - b
                ii, jj = dist[a], dist[b]
                out.add((ii, jj, (ii + jj - dist[c]) // 2))
    return tuple(sorted(out))


def canonical_triple(n: int, i: int, j: int, t: int) -> tuple[int, int, int]:
    """Lexicographically greatest member (i, j, t) with i <= j; fixes (i, i, i) and (0, 0, 0)."""
    return max(m for m in orbit_members(n, i, j, t) if m[0] <= m[1])


@lru_cache(maxsize=None)
def triple_orbits(n: int) -> tuple[TripleOrbit, ...]:
    """All orbits of valid triples, sorted by representative."""
    reps = {}
    for i in range(n + 1):
        for j in range(n + 1):
            for t in range(min(i, j) + 1):
                if is_valid_triple(n, i, j, t):
                    reps.setdefault(canonical_triple(n, i, j, t), []).append((i, j, t))
    return tuple(TripleOrbit(rep, tuple(sorted(mem))) for rep, mem in sorted(reps.items()))


def valid_triples(n: int):
    return [(i, j, t) for i in range(n + 1) for j in range(n + 1)
            for t in range(min(i, j) + 1) if is_valid_triple(n, i, j, t)]


# --------------------------------------------------------------------------
# explicit matrices (oracle scale)


def _weights(n: int) -> np.ndarray:
    words = np.arange(1 << n, dtype=np.int64)
    return np.array([bin(w).count("1") for w in words], dtype=np.int64)


def build_M(n: int, i: int, j: int, t: int) -> sp.csr_matrix:
    """Explicit 2^n x 2^n 0-1 matrix M^t_{i,j}."""
    if n > MAX_EXPLICIT_N:
        raise ValueError(f"explicit matrices are limited to n <= {MAX_EXPLICIT_N}")
    _check_triple(n, i, j, t)
    wt = _weights(n)
    rows, cols = [], []
    row_words = np.flatnonzero(wt == i)
    col_words = np.flatnonzero(wt == j)
    d = i + j - 2 * t
    for x in row_words:
        diff = wt[np.bitwise_xor(col_words, x)]
        hit = col_words[diff == d]
        rows.extend([x] * len(hit))
        cols.extend(hit.tolist())
    size = 1 << n
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))


def expand_orbit_assignment(n: int, orbit_values) -> dict:
    """Per-triple assignment from a mapping representative -> value."""
    out = {}
    for orb in triple_orbits(n):
        val = orbit_values.get(orb.representative, 0.0)
        for m in orb.members:
            out[m] = val
    return out


def _family_values(n: int, assignment, family: str) -> dict:
    """Coefficient of M^t_{i,j} for the chosen PSD family."""
    if family == "x":
        return {tr: assignment.get(tr, 0.0) for tr in valid_triples(n)}
    if family == "y":
        return {
            (i, j, t): assignment.get((i + j - 2 * t, 0, 0), 0.0) - assignment.get((i, j, t), 0.0)
            for (i, j, t) in valid_triples(n)
        }
    raise ValueError(f"unknown family {family!r}")


def explicit_matrix(n: int, assignment, family: str = "x") -> np.ndarray:
    """Dense sum of coefficient * M^t_{i,j} over all valid triples."""
    if n > MAX_ORACLE_N:
        raise ValueError(f"dense explicit matrices are limited to n <= {MAX_ORACLE_N}")
    coeff = _family_values(n, assignment, family)
    table = np.zeros((n + 1, n + 1, n + 1))
    for (i, j, t), val in coeff.items():
        table[i, j, t] = val
    wt = _weights(n)
    words = np.arange(1 << n)
    d = wt[np.bitwise_xor(words[:, None], words[None, :])]
    wi = wt[:, None]
    wj = wt[None, :]
    tt = (wi + wj - d) // 2
    return table[np.broadcast_to(wi, d.shape), np.broadcast_to(wj, d.shape), tt]


def chi_vectors(n: int) -> np.ndarray:
    """Rows are the weight-class indicators chi_0..chi_n."""
    wt = _weights(n)
    return (wt[None, :] == np.arange(n + 1)[:, None]).astype(float)


# --------------------------------------------------------------------------
# block diagonalization


@lru_cache(maxsize=None)
def block_coefficient(n: int, k: int, i: int, j: int, t: int) -> int:
    """beta^{n,k}_{i,j,t} = sum_u (-1)^{u-t} C(u,t) C(n-2k,u-k) C(n-k-u,i-u) C(n-k-u,j-u)."""
    if not (0 <= k <= n // 2):
        raise ValueError(f"k={k} outside [0, {n // 2}]")
    if not (k <= i <= n - k and k <= j <= n - k):
        raise ValueError(f"(i, j)=({i}, {j}) outside [{k}, {n - k}]")
    if not is_valid_triple(n, i, j, t):
        return 0
    total = 0
    for u in range(max(k, t), min(i, j) + 1):
        total += (-1) ** (u - t) * comb(u, t) * comb(n - 2 * k, u - k) \
            * comb(n - k - u, i - u) * comb(n - k - u, j - u)
    return total


@lru_cache(maxsize=None)
def _scaled_coefficients(n: int, k: int) -> dict:
    """(i, j, t) -> beta * C(n-2k, i-k)^{-1/2} C(n-2k, j-k)^{-1/2}, for i <= j."""
    out = {}
    for i in range(k, n - k + 1):
        for j in range(i, n - k + 1):
            scale = math.sqrt(comb(n - 2 * k, i - k) * comb(n - 2 * k, j - k))
            for t in range(min(i, j) + 1):
                beta = block_coefficient(n, k, i, j, t)
                if beta:
                    out[(i, j, t)] = beta / scale
    return out


def block_multiplicity(n: int, k: int) -> int:
    return comb(n, k) - (comb(n, k - 1) if k else 0)


def reduce_blocks(n: int, assignment, family: str = "x") -> list[np.ndarray]:
    """Reduced blocks k = 0..n//2 of the family's matrix.

    ``assignment`` maps triples (i, j, t) to values and must be symmetric in
    i and j; use :func:`expand_orbit_assignment` for orbit-level values.
    """
    coeff = _family_values(n, assignment, family)
    blocks = []
    for k in range(n // 2 + 1):
        p = n - 2 * k + 1
        mat = np.zeros((p, p))
        for (i, j, t), c in _scaled_coefficients(n, k).items():
            mat[i - k, j - k] += c * coeff.get((i, j, t), 0.0)
            if i != j:
                mat[j - k, i - k] += c * coeff.get((j, i, t), 0.0)
        blocks.append(mat)
    return blocks


def border_vector(n: int, assignment) -> np.ndarray:
    """Coordinates of c = sum_i (x^0_{0,0} - x^0_{0,i}) chi_i in the k=0 block basis."""
    x00 = assignment.get((0, 0, 0), 0.0)
    return np.array([math.sqrt(comb(n, i)) * (x00 - assignment.get((0, i, 0), 0.0))
                     for i in range(n + 1)])


def bordered_blocks(n: int, assignment) -> list[np.ndarray]:
    """Reduced form of [[1 - x00, c^T], [c, sum y M]]: k=0 block bordered, others as is."""
    blocks = reduce_blocks(n, assignment, "y")
    c = border_vector(n, assignment)
    p = n + 2
    top = np.zeros((p, p))
    top[0, 0] = 1.0 - assignment.get((0, 0, 0), 0.0)
    top[0, 1:] = c
    top[1:, 0] = c
    top[1:, 1:] = blocks[0]
    return [top] + blocks[1:]


def explicit_bordered(n: int, assignment) -> np.ndarray:
    inner = explicit_matrix(n, assignment, "y")
    chi = chi_vectors(n)
    x00 = assignment.get((0, 0, 0), 0.0)
    c = sum((x00 - assignment.get((0, i, 0), 0.0)) * chi[i] for i in range(n + 1))
    size = inner.shape[0] + 1
    out = np.zeros((size, size))
    out[0, 0] = 1.0 - x00
    out[0, 1:] = c
    out[1:, 0] = c
    out[1:, 1:] = inner
    return out


def _spectral_report(explicit: np.ndarray, blocks, mults, tol: float) -> dict:
    full = np.sort(np.linalg.eigvalsh(explicit))
    parts = [np.repeat(np.linalg.eigvalsh(b), m) for b, m in zip(blocks, mults)]
    reduced = np.sort(np.concatenate(parts))
    scale = max(1.0, float(np.abs(full).max(initial=0.0)))
    if full.shape != reduced.shape:
        discrepancy = math.inf
    else:
        discrepancy = float(np.abs(full - reduced).max(initial=0.0)) / scale
    psd_full = bool(full[0] >= -tol * scale)
    psd_reduced = bool(reduced[0] >= -tol * scale)
    return {
        "dimension": int(full.shape[0]),
        "max_discrepancy": discrepancy,
        "min_eig_explicit": float(full[0]),
        "min_eig_reduced": float(reduced[0]),
        "psd_explicit": psd_full,
        "psd_reduced": psd_reduced,
        "psd_agree": psd_full == psd_reduced,
    }


def psd_equivalence_oracle(n: int, assignment, family: str = "x", tol: float = 1e-7) -> dict:
    """Compare the explicit 2^n spectrum with the multiplicity-weighted reduced spectra."""
    if n > MAX_ORACLE_N:
        raise ValueError(f"oracle limited to n <= {MAX_ORACLE_N}")
    blocks = reduce_blocks(n, assignment, family)
    mults = [block_multiplicity(n, k) for k in range(n // 2 + 1)]
    return _spectral_report(explicit_matrix(n, assignment, family), blocks, mults, tol)


def bordered_oracle(n: int, assignment, tol: float = 1e-7) -> dict:
    if n > MAX_ORACLE_N:
        raise ValueError(f"oracle limited to n <= {MAX_ORACLE_N}")
    blocks = bordered_blocks(n, assignment)
    mults = [1] + [block_multiplicity(n, k) for k in range(1, n // 2 + 1)]
    # the bordered k=0 block carries one extra eigenvalue; remaining k=0 copies are absent
    # because the k=0 component occurs once
    return _spectral_report(explicit_bordered(n, assignment), blocks, mults, tol)


# --------------------------------------------------------------------------
# SDP construction


class _Linear:
    """Affine expression over orbit variables: const + sum coef[var] * x[var]."""

    __slots__ = ("const", "terms")

    def __init__(self, const=0.0, terms=None):
        self.const = const
        self.terms = terms or {}

    def __sub__(self, other):
        terms = dict(self.terms)
        for v, c in other.terms.items():
            terms[v] = terms.get(v, 0.0) - c
        return _Linear(self.const - other.const, terms)


class _BlockAccumulator:
    def __init__(self, kind, size):
        self.kind, self.size = kind, size
        shape = (size, size) if kind == "psd" else (size,)
        self.shape = shape
        self.constant = np.zeros(shape)
        self.coef = {}

    def add(self, pos, scale, expr):
        self.constant[pos] += scale * expr.const
        for v, c in expr.terms.items():
            if v not in self.coef:
                self.coef[v] = np.zeros(self.shape)
            self.coef[v][pos] += scale * c

    def add_sym(self, a, b, scale, expr):
        self.add((a, b), scale, expr)
        if a != b:
            self.add((b, a), scale, expr)

    def finish(self) -> Block:
        idx = sorted(v for v, arr in self.coef.items() if np.any(arr))
        coef = np.array([self.coef[v] for v in idx]).reshape((len(idx),) + self.shape)
        return Block(self.kind, self.size, self.constant, np.array(idx, dtype=np.intp), coef)


def _check_forbidden(n, forbidden):
    forbidden = sorted(set(int(d) for d in forbidden))
    if 0 in forbidden:
        raise ValueError("distance 0 cannot be forbidden")
    if any(d < 0 or d > n for d in forbidden):
        raise ValueError(f"forbidden distances must lie in 1..{n}: {forbidden}")
    return forbidden


def _build(n: int, forbidden, flavor: str) -> SdpProblem:
    if n < 1 or n > MAX_BUILD_N:
        raise ValueError(f"n={n} outside the builder range 1..{MAX_BUILD_N}")
    forbidden = _check_forbidden(n, forbidden)
    fset = set(forbidden)
    orbits = triple_orbits(n)
    rep_of = {}
    for orb in orbits:
        for m in orb.members:
            rep_of[m] = orb.representative
    free = [o.representative for o in orbits
            if not fset.intersection(o.distances)
            and (flavor == "laurent" or o.representative != (0, 0, 0))]
    index = {rep: pos for pos, rep in enumerate(free)}

    def expr(i, j, t):
        rep = rep_of[(i, j, t)]
        if rep in index:
            return _Linear(0.0, {index[rep]: 1.0})
        if rep == (0, 0, 0):  # normalised in the Schrijver flavour
            return _Linear(1.0)
        return _Linear()  # zero-forced

    def x(i, j, t):
        return expr(i, j, t)

    def y(i, j, t):
        return expr(i + j - 2 * t, 0, 0) - expr(i, j, t)

    blocks = []
    for family in (x, y):
        for k in range(n // 2 + 1):
            bordered = flavor == "laurent" and family is y and k == 0
            off = 1 if bordered else 0
            acc = _BlockAccumulator("psd", n - 2 * k + 1 + off)
            for (i, j, t), c in _scaled_coefficients(n, k).items():
                acc.add_sym(i - k + off, j - k + off, c, family(i, j, t))
            if bordered:
                acc.add((0, 0), 1.0, _Linear(1.0) - x(0, 0, 0))
                for i in range(n + 1):
                    acc.add_sym(0, i + 1, math.sqrt(comb(n, i)), x(0, 0, 0) - x(0, i, 0))
            blocks.append(acc.finish())

    # 0 <= x_O <= x^0_{a,0} for each distance a of the orbit
    rows = []
    for rep in free:
        rows.append(x(*rep))
        for a in sorted(set(distances(*rep))):
            bound_rep = rep_of[(a, 0, 0)]
            if bound_rep != rep:
                rows.append(x(a, 0, 0) - x(*rep))
    seen, uniq = set(), []
    for r in rows:
        key = (r.const, tuple(sorted(r.terms.items())))
        if key not in seen:
            seen.add(key)
            uniq.append(r)
    if uniq:
        lin = _BlockAccumulator("diag", len(uniq))
        for pos, r in enumerate(uniq):
            lin.add(pos, 1.0, r)
        blocks.append(lin.finish())

    objective = np.zeros(len(free))
    if flavor == "schrijver":
        const = 0.0
        for i in range(n + 1):
            e = x(i, 0, 0)
            const += comb(n, i) * e.const
            for v, c in e.terms.items():
                objective[v] += comb(n, i) * c
    else:
        const = 0.0
        objective[index[(0, 0, 0)]] = float(2**n)
    blocks = [b for b in blocks if len(b.var_index) or np.any(b.constant)]
    return SdpProblem(
        variables=tuple(free), objective=objective, objective_constant=float(const),
        blocks=blocks, meta={"flavor": flavor, "n": n, "forbidden": forbidden},
    )


def build_schrijver_sdp(n: int, forbidden=None) -> SdpProblem:
    """Reduced Schrijver relaxation; default forbidden set is {n/2}."""
    return _build(n, [n // 2] if forbidden is None else forbidden, "schrijver")


def build_laurent_sdp(n: int, forbidden=None) -> SdpProblem:
    """Reduced Laurent refinement with the bordered second constraint."""
    return _build(n, [n // 2] if forbidden is None else forbidden, "laurent")
