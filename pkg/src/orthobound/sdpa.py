"""SDPA sparse format (".dat-s") reader and writer.

SDPA states problems as ``min c'x  s.t.  sum_i F_i x_i - F_0 >= 0``; ours
maximize ``c'x + c0`` subject to ``F_0 + sum_i x_i F_i >= 0``, so the
objective and the constant matrix are negated on the way out and back in.
Problem metadata (variable labels, objective constant, flavour) travels in
a ``*``-comment line so that a file parses back to an identical problem.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .problem import Block, SdpProblem

HEADER = '"orthobound sdpa export v1'


def _fmt(v: float) -> str:
    v = float(v)
    return "0" if v == 0 else repr(v)


def _label(lbl):
    return list(lbl) if isinstance(lbl, tuple) else lbl


def dumps(problem: SdpProblem) -> str:
    lines = [HEADER]
    meta = {
        "objective_constant": problem.objective_constant,
        "variables": [_label(v) for v in problem.variables],
        "meta": problem.meta,
    }
    lines.append("*meta " + json.dumps(meta, sort_keys=True, separators=(",", ":")))
    lines.append(str(problem.num_variables))
    lines.append(str(len(problem.blocks)))
    lines.append(" ".join(str(b.size if b.kind == "psd" else -b.size) for b in problem.blocks))
    lines.append(" ".join(_fmt(-c) for c in problem.objective))

    def emit(matno, blkno, blk, mat, sign):
        if blk.kind == "diag":
            for i in np.flatnonzero(mat):
                lines.append(f"{matno} {blkno} {i + 1} {i + 1} {_fmt(sign * mat[i])}")
        else:
            rows, cols = np.nonzero(np.triu(mat))
            for i, j in zip(rows, cols):
                lines.append(f"{matno} {blkno} {i + 1} {j + 1} {_fmt(sign * mat[i, j])}")

    for blkno, blk in enumerate(problem.blocks, start=1):
        emit(0, blkno, blk, blk.constant, -1.0)
    for var in range(problem.num_variables):
        for blkno, blk in enumerate(problem.blocks, start=1):
            pos = np.searchsorted(blk.var_index, var)
            if pos < len(blk.var_index) and blk.var_index[pos] == var:
                emit(var + 1, blkno, blk, blk.coef[pos], 1.0)
    return "\n".join(lines) + "\n"


def write(problem: SdpProblem, path) -> None:
    path = Path(path)
    try:
        path.write_text(dumps(problem), encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write SDPA file {path}: {exc}") from exc


def _label_back(lbl):
    return tuple(lbl) if isinstance(lbl, list) else lbl


def loads(text: str) -> SdpProblem:
    meta = None
    body = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*meta "):
            meta = json.loads(line[len("*meta "):])
            continue
        if line[0] in '"*':
            continue
        body.append(line.replace(",", " ").replace("{", " ").replace("}", " ")
                    .replace("(", " ").replace(")", " "))
    if len(body) < 4:
        raise ValueError("truncated SDPA file")
    m = int(body[0].split()[0])
    nblocks = int(body[1].split()[0])
    sizes = [int(s) for s in body[2].split()[:nblocks]]
    c = np.array([float(s) for s in body[3].split()[:m]])
    if len(sizes) != nblocks or len(c) != m:
        raise ValueError("malformed SDPA header")
    consts = [np.zeros((s, s)) if s > 0 else np.zeros(-s) for s in sizes]
    coefs = [dict() for _ in sizes]
    for line in body[4:]:
        parts = line.split()
        matno, blkno, i, j = (int(p) for p in parts[:4])
        val = float(parts[4])
        b = blkno - 1
        size = sizes[b]
        if matno == 0:
            target, val = consts[b], -val
        else:
            target = coefs[b].setdefault(matno - 1, np.zeros((size, size)) if size > 0 else np.zeros(-size))
        if size > 0:
            target[i - 1, j - 1] = val
            target[j - 1, i - 1] = val
        else:
            if i != j:
                raise ValueError(f"off-diagonal entry in diagonal block {blkno}")
            target[i - 1] = val
    blocks = []
    for size, const, co in zip(sizes, consts, coefs):
        idx = sorted(co)
        shape = (size, size) if size > 0 else (-size,)
        arr = np.array([co[v] for v in idx]).reshape((len(idx),) + shape)
        blocks.append(Block("psd" if size > 0 else "diag", abs(size), const, np.array(idx, dtype=np.intp), arr))
    if meta is None:
        variables = tuple(f"x{i + 1}" for i in range(m))
        const, extra = 0.0, {}
    else:
        variables = tuple(_label_back(v) for v in meta["variables"])
        const, extra = meta["objective_constant"], meta["meta"]
    return SdpProblem(variables=variables, objective=-c + 0.0, objective_constant=const,
                      blocks=blocks, meta=extra)


def read(path) -> SdpProblem:
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot read SDPA file {path}: {exc}") from exc
    return loads(text)
