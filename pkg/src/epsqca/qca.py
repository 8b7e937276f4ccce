"""Two-layer (Margolus-partitioned) circuit approximating ``exp(itH)``.

The U layer holds block propagators on the partition ``P1`` of consecutive
blocks of ``block_size`` sites; the V layer holds one windowed patch per P1
boundary, each living on the ``P2`` block (P1 shifted by ``block_size // 2``)
that straddles the boundary.  The circuit applies V first, then U.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .decay import DEFAULT_CONSTANTS, DecayConstants
from .errors import ComputationError, InputError
from .patch import DEFAULT_TOL, PatchResult, patch_windowed
from .spinchain import (
    DenseOperator,
    SpinChainHamiltonian,
    chain_propagator,
    check_dense,
    max_dense_sites,
    unitarity_defect,
)

GATE_UNITARITY_TOL = 1e-8


@dataclass(frozen=True)
class CutPlan:
    n: int
    block_size: int
    partition_p1: tuple[tuple[int, int], ...]
    partition_p2: tuple[tuple[int, int], ...]
    cuts: tuple[int, ...]
    cut_windows: tuple[tuple[int, int], ...]

    def reference_chain(self, k: int) -> tuple[int, int]:
        """Chain left after peeling off the first ``k`` P1 blocks: ``[cuts[k] - size, n)``."""
        return self.cuts[k] - self.block_size, self.n

    def union_chain(self, k: int) -> tuple[int, int]:
        """The two P1 blocks adjacent to cut ``k``."""
        c = self.cuts[k]
        return c - self.block_size, min(c + self.block_size, self.n)


def plan_cuts(n: int, block_size: int) -> CutPlan:
    if block_size < 2:
        raise InputError(f"block_size must be >= 2 so a bridging term fits, got {block_size}")
    if n < 2:
        raise InputError(f"chain needs at least 2 sites, got n={n}")
    size = min(block_size, n)
    p1 = tuple((a, min(a + size, n)) for a in range(0, n, size))
    cuts = tuple(range(size, n, size))
    half = size // 2
    p2 = ((0, half),) + tuple((a, min(a + size, n)) for a in range(half, n, size))
    # the P2 block holding each cut: size - half sites left of it, half sites right
    windows = tuple((c - size + half, min(c + half, n)) for c in cuts)
    return CutPlan(n, size, p1, p2, cuts, windows)


@dataclass(frozen=True)
class LayeredCircuit:
    n: int
    t: float
    block_size: int
    u_layer: tuple[tuple[tuple[int, int], DenseOperator], ...]
    v_layer: tuple[tuple[tuple[int, int], DenseOperator], ...]
    per_cut_errors: tuple[float, ...]
    cuts: tuple[int, ...] = ()
    patches: tuple[PatchResult, ...] = ()

    @property
    def error_sum(self) -> float:
        return math.fsum(self.per_cut_errors)


def _check_gate(name: str, gate: DenseOperator) -> None:
    defect = unitarity_defect(gate)
    if defect > GATE_UNITARITY_TOL:
        raise ComputationError(f"{name} on {gate.support} is not unitary (defect {defect:.3e})")


def build_qca(
    h: SpinChainHamiltonian,
    t: float,
    block_size: int,
    tol: float = DEFAULT_TOL,
    bound: str = "analytic",
    workers: int = 1,
) -> LayeredCircuit:
    """U gates ``exp(itH_block)`` on P1 and windowed patches on the P2 blocks over each cut.

    Each patch is measured against the chain left over by the sequential
    recursion (the cut's left P1 block through the chain end) when that fits
    the dense cap, and otherwise against the two P1 blocks adjacent to the
    cut.  ``per_cut_errors`` holds the exact error when available and the
    bound selected by ``bound`` otherwise.
    """
    plan = plan_cuts(h.n, block_size)
    check_dense(plan.block_size, "QCA block")

    u_layer = []
    for block in plan.partition_p1:
        gate = chain_propagator(h, t, block)
        _check_gate("U gate", gate)
        u_layer.append((block, gate))

    limit = max_dense_sites()

    def run(k: int) -> PatchResult:
        ref = plan.reference_chain(k)
        if ref[1] - ref[0] > limit:
            ref = plan.union_chain(k)
        return patch_windowed(h, plan.cuts[k], plan.cut_windows[k], t, tol, chain=ref, bound=bound)

    indices = range(len(plan.cuts))
    if workers > 1 and len(plan.cuts) > 1:
        with ThreadPoolExecutor(workers) as pool:
            patches = list(pool.map(run, indices))
    else:
        patches = [run(k) for k in indices]

    v_layer = []
    errors = []
    for p in patches:
        _check_gate("V gate", p.v_windowed)
        v_layer.append((p.window, p.v_windowed))
        errors.append(p.error_exact if p.error_exact is not None else p.error_bound)
    return LayeredCircuit(
        h.n, float(t), plan.block_size, tuple(u_layer), tuple(v_layer), tuple(errors), plan.cuts, tuple(patches)
    )


def layer_matrix(gates: Sequence[tuple[tuple[int, int], DenseOperator]], n: int) -> np.ndarray:
    """Tensor product of disjoint gates on ``[0, n)``, identity elsewhere."""
    check_dense(n, "layer contraction")
    out = np.ones((1, 1), dtype=complex)
    pos = 0
    for (a, b), gate in sorted(gates, key=lambda g: g[0][0]):
        if a < pos:
            raise InputError(f"gate on [{a}, {b}) overlaps a previous gate")
        if a > pos:
            out = np.kron(out, np.eye(2 ** (a - pos)))
        out = np.kron(out, gate.matrix)
        pos = b
    if pos > n:
        raise InputError(f"gates extend past n={n}")
    if pos < n:
        out = np.kron(out, np.eye(2 ** (n - pos)))
    return out


def contract_circuit(circuit: LayeredCircuit, n: int | None = None) -> DenseOperator:
    """``(U layer) @ (V layer)`` as one dense unitary."""
    n = circuit.n if n is None else n
    check_dense(n, "circuit contraction")
    u = layer_matrix(circuit.u_layer, n)
    if not circuit.v_layer:
        return DenseOperator((0, n), u)
    return DenseOperator((0, n), u @ layer_matrix(circuit.v_layer, n))


def window_size_for(n: int, t: float, epsilon: float, constants: DecayConstants | None = None) -> int:
    """``ceil(c0 |t| + c1 ln(n / epsilon))`` clamped to ``[2, n]``."""
    if not 0 < epsilon <= 1:
        raise InputError(f"epsilon must lie in (0, 1], got {epsilon}")
    c = constants if constants is not None else DEFAULT_CONSTANTS
    raw = c.c0 * abs(t) + c.c1 * math.log(n / epsilon)
    size = math.ceil(raw - 1e-9)
    return int(min(max(size, 2), n))
