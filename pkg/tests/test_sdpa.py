from pathlib import Path

import numpy as np
import pytest

from orthobound import sdpa
from orthobound.solver import solve
from orthobound.terwilliger import build_laurent_sdp, build_schrijver_sdp

DATA = Path(__file__).parent / "data"


@pytest.mark.parametrize("builder", [build_schrijver_sdp, build_laurent_sdp])
@pytest.mark.parametrize("n", [4, 8, 16])
def test_roundtrip_byte_identical(builder, n):
    text = sdpa.dumps(builder(n))
    again = sdpa.dumps(sdpa.loads(text))
    assert again == text


def test_roundtrip_preserves_problem(tmp_path):
    prob = build_laurent_sdp(8)
    path = tmp_path / "l8.dat-s"
    sdpa.write(prob, path)
    back = sdpa.read(path)
    assert back.variables == prob.variables
    assert back.objective_constant == prob.objective_constant
    assert np.array_equal(back.objective, prob.objective)
    for a, b in zip(prob.blocks, back.blocks):
        assert a.kind == b.kind and np.array_equal(a.constant, b.constant)
        assert np.array_equal(a.var_index, b.var_index) and np.array_equal(a.coef, b.coef)


def test_golden_n4():
    golden = (DATA / "schrijver_n4.dat-s").read_text()
    assert sdpa.dumps(build_schrijver_sdp(4)) == golden
    sol = solve(sdpa.loads(golden))
    assert sol.objective == pytest.approx(4.0, abs=1e-6)


def test_sign_convention():
    # SDPA minimises: objective and F0 are stored negated
    lines = sdpa.dumps(build_schrijver_sdp(4)).splitlines()
    assert lines[5].split()[0] == "-4.0"


def test_loads_rejects_garbage():
    with pytest.raises(ValueError):
        sdpa.loads("not an sdpa file\n")
