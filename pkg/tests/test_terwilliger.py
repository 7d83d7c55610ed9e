import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orthobound.solver import solve
from orthobound.terwilliger import (
    block_coefficient, block_multiplicity, bordered_oracle, build_laurent_sdp, build_M,
    build_schrijver_sdp, canonical_triple, explicit_matrix, expand_orbit_assignment,
    orbit_members, psd_equivalence_oracle, reduce_blocks, triple_orbits, valid_triples,
)
from math import comb


def _random_assignment(n, rng, shift=0.0):
    vals = {o.representative: rng.random() for o in triple_orbits(n)}
    a = expand_orbit_assignment(n, vals)
    for i in range(n + 1):
        a[(i, i, i)] += shift
    return a


def test_canonical_examples():
    assert canonical_triple(4, 3, 1, 1) == canonical_triple(4, 2, 3, 2)
    assert canonical_triple(4, 3, 1, 1) == (2, 3, 2)
    for i in range(10):
        assert canonical_triple(9, i, i, i) == (i, i, i)
        assert canonical_triple(9, i, 0, 0) == (i, i, i)
    assert canonical_triple(5, 0, 0, 0) == (0, 0, 0)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 12), st.data())
def test_orbits_share_distance_multiset(n, data):
    i = data.draw(st.integers(0, n))
    j = data.draw(st.integers(0, n))
    t = data.draw(st.integers(0, min(i, j)))
    if i + j - t > n:
        return
    rep = canonical_triple(n, i, j, t)
    ms = sorted((i, j, i + j - 2 * t))
    for m in orbit_members(n, i, j, t):
        assert sorted((m[0], m[1], m[0] + m[1] - 2 * m[2])) == ms
        assert canonical_triple(n, *m) == rep


@pytest.mark.parametrize("n", [1, 4, 7, 12])
def test_orbits_partition_valid_triples(n):
    members = [m for o in triple_orbits(n) for m in o.members]
    assert sorted(members) == sorted(valid_triples(n))
    assert len(set(members)) == len(members)


def test_build_M_examples():
    m = build_M(4, 0, 0, 0)
    assert m.nnz == 1 and m[0, 0] == 1
    d = build_M(6, 2, 2, 2)
    assert d.nnz == comb(6, 2)
    r, c = d.nonzero()
    assert np.all(r == c)


def test_M_sum_is_all_ones():
    n = 6
    total = sum(build_M(n, *tr) for tr in valid_triples(n))
    assert np.array_equal(total.toarray(), np.ones((64, 64)))


def test_M_row_counts():
    # a weight-i word has C(i,t) C(n-i, j-t) partners of weight j sharing t ones
    n, i, j, t = 8, 3, 4, 2
    m = build_M(n, i, j, t)
    rows = np.asarray(m.sum(axis=1)).ravel()
    assert set(rows[rows > 0]) == {comb(i, t) * comb(n - i, j - t)}


def test_block_coefficient_basics():
    assert block_coefficient(8, 0, 0, 0, 0) == 1
    assert block_coefficient(6, 0, 4, 4, 1) == 0  # i + j - t > n
    with pytest.raises(ValueError):
        block_coefficient(6, 2, 1, 3, 1)  # below the k-th level


def test_block_multiplicities_fill_space():
    for n in range(1, 13):
        dims = sum(block_multiplicity(n, k) * (n - 2 * k + 1) for k in range(n // 2 + 1))
        assert dims == 2**n


@pytest.mark.parametrize("n", [4, 6, 8])
@pytest.mark.parametrize("family", ["x", "y"])
def test_blockdiag_oracle(n, family):
    rng = np.random.default_rng(n)
    for s in range(20):
        a = _random_assignment(n, rng, shift=float(rng.uniform(0, 2 * n)) if s % 2 else 0.0)
        rep = psd_equivalence_oracle(n, a, family)
        assert rep["max_discrepancy"] <= 1e-7
        assert rep["psd_agree"]


def test_identity_assignment():
    n = 8
    a = {(i, i, i): 1.0 for i in range(n + 1)}
    assert np.array_equal(explicit_matrix(n, a), np.eye(2**n))
    for blk in reduce_blocks(n, a):
        assert np.allclose(blk, np.eye(blk.shape[0]), atol=1e-12)


def test_zero_assignment():
    for blk in reduce_blocks(6, {}):
        assert not np.any(blk)


@pytest.mark.parametrize("n", [4, 6])
def test_bordered_oracle(n):
    rng = np.random.default_rng(100 + n)
    for s in range(20):
        a = _random_assignment(n, rng, shift=float(rng.uniform(0, 2 * n)) if s % 2 else 0.0)
        rep = bordered_oracle(n, a)
        assert rep["max_discrepancy"] <= 1e-7 and rep["psd_agree"]


def test_solved_assignment_is_psd_in_both_forms():
    n = 6
    prob = build_schrijver_sdp(n, [3])
    sol = solve(prob)
    assert sol.status in ("optimal", "near_optimal")
    vals = dict(zip(prob.variables, sol.x))
    vals[(0, 0, 0)] = 1.0
    a = expand_orbit_assignment(n, vals)
    for fam in ("x", "y"):
        rep = psd_equivalence_oracle(n, a, fam)
        assert rep["min_eig_explicit"] >= -1e-7 and rep["min_eig_reduced"] >= -1e-7


@pytest.mark.parametrize("builder", [build_schrijver_sdp, build_laurent_sdp])
def test_forced_orbits_absent(builder):
    n = 12
    prob = builder(n)
    for rep in prob.variables:
        assert n // 2 not in {rep[0], rep[1], rep[0] + rep[1] - 2 * rep[2]}
    assert ((0, 0, 0) in prob.variables) == (builder is build_laurent_sdp)


@pytest.mark.parametrize("builder", [build_schrijver_sdp, build_laurent_sdp])
def test_all_distances_forbidden(builder):
    n = 8
    sol = solve(builder(n, range(1, n + 1)))
    assert sol.objective == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("n,expected", [(8, 32), (12, 268)])
@pytest.mark.parametrize("builder", [build_schrijver_sdp, build_laurent_sdp])
def test_small_omega_values(builder, n, expected):
    sol = solve(builder(n))
    assert sol.status in ("optimal", "near_optimal")
    assert sol.objective == pytest.approx(expected, abs=1e-3)


def test_builder_rejects():
    with pytest.raises(ValueError):
        build_schrijver_sdp(8, [0])
    with pytest.raises(ValueError):
        build_schrijver_sdp(8, [9])
    with pytest.raises(ValueError):
        build_M(20, 0, 0, 0)
