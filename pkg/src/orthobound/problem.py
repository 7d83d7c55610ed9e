"""Block-diagonal linear matrix inequality problems.

A problem reads: maximize ``c @ x + c0`` subject to, for every block,
``constant + sum_m x[m] * coef[m]`` being positive semidefinite ("psd"
blocks) or entrywise nonnegative ("diag" blocks).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Block:
    kind: str  # "psd" or "diag"
    size: int
    constant: np.ndarray  # (p, p) for psd, (p,) for diag
    var_index: np.ndarray  # variables appearing in this block
    coef: np.ndarray  # (len(var_index), p, p) or (len(var_index), p)

    def __post_init__(self):
        if self.kind not in ("psd", "diag"):
            raise ValueError(f"unknown block kind {self.kind!r}")
        self.constant = np.asarray(self.constant, dtype=float)
        self.var_index = np.asarray(self.var_index, dtype=np.intp)
        self.coef = np.asarray(self.coef, dtype=float)
        shape = (self.size, self.size) if self.kind == "psd" else (self.size,)
        if self.constant.shape != shape:
            raise ValueError(f"constant has shape {self.constant.shape}, expected {shape}")
        if self.coef.shape != (len(self.var_index),) + shape:
            raise ValueError(f"coef has shape {self.coef.shape}")
        if self.kind == "psd":
            sym = [self.constant] + list(self.coef)
            if any(not np.array_equal(a, a.T) for a in sym):
                raise ValueError("psd block data must be exactly symmetric")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        if len(self.var_index) == 0:
            return self.constant.copy()
        return self.constant + np.tensordot(x[self.var_index], self.coef, axes=1)


@dataclass
class SdpProblem:
    variables: tuple
    objective: np.ndarray
    objective_constant: float
    blocks: list[Block]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (len(self.variables),):
            raise ValueError("objective length must match the number of variables")

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    def objective_value(self, x) -> float:
        return float(self.objective @ np.asarray(x, dtype=float) + self.objective_constant)

    def evaluate(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [b.evaluate(x) for b in self.blocks]

    def min_eigenvalues(self, x) -> list[float]:
        from .solver import min_eigenvalue

        out = []
        for blk, val in zip(self.blocks, self.evaluate(x)):
            out.append(min_eigenvalue(val) if blk.kind == "psd" else float(val.min(initial=np.inf)))
        return out
