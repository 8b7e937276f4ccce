"""Experiment drivers: QCA error scans, the Lie-Trotter baseline, and their records."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .decay import DecayConstants, fit_decay_constants
from .errors import ComputationError, InputError
from .heisenberg import fmt
from .mpo import mpo_from_layer, mpo_multiply, qca_to_mpo
from .patch import DEFAULT_TOL, analytic_patch_bound
from .qca import build_qca, contract_circuit
from .spinchain import (
    DenseOperator,
    SpinChainHamiltonian,
    chain_propagator,
    check_dense,
    embed_matrix,
    operator_norm,
)

ERROR_SCAN_COLUMNS = (
    "model", "n", "t", "block_size", "n_cuts", "max_cut_error", "global_error",
    "triangle_sum", "lr_bound_sum", "global_le_triangle", "cuts_le_lr",
)
TROTTER_COLUMNS = ("model", "n", "t", "m", "trotter_error", "ratio_to_previous")


@dataclass
class ExperimentRecord:
    experiment: str
    config: dict
    columns: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = __version__
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "experiment": self.experiment,
                "config": self.config,
                "columns": list(self.columns),
                "rows": self.rows,
                "wall_clock": self.wall_clock,
                "version": self.version,
                "summary": self.summary,
            },
            indent=2,
            default=_json_default,
        )


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return fmt(v)
    return v


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"cannot serialize {type(v)}")


def error_scan(
    h: SpinChainHamiltonian,
    t_list: Sequence[float],
    block_list: Sequence[int],
    tol: float = DEFAULT_TOL,
    model: str = "custom",
    config: dict | None = None,
    workers: int = 1,
) -> ExperimentRecord:
    """Build the QCA circuit at every ``(t, block size)`` and compare it with ``exp(itH)``."""
    check_dense(h.n, "error scan")
    start = time.perf_counter()
    rows = []
    for t in t_list:
        exact = chain_propagator(h, t).matrix
        for block in block_list:
            try:
                circuit = build_qca(h, t, block, tol, workers=workers)
            except (InputError, ComputationError) as exc:
                raise type(exc)(f"(t={t}, block={block}): {exc}") from exc
            global_error = 0.0 if t == 0 else operator_norm(exact - contract_circuit(circuit).matrix)
            lr = [analytic_patch_bound(h, p.cut, p.window, t, p.chain) for p in circuit.patches]
            cut_errors = circuit.per_cut_errors
            rows.append(
                {
                    "model": model,
                    "n": h.n,
                    "t": float(t),
                    "block_size": circuit.block_size,
                    "n_cuts": len(cut_errors),
                    "max_cut_error": float(max(cut_errors, default=0.0)),
                    "global_error": float(global_error),
                    "triangle_sum": float(circuit.error_sum),
                    "lr_bound_sum": float(math.fsum(lr)),
                    "global_le_triangle": bool(global_error <= circuit.error_sum + 1e-7),
                    "cuts_le_lr": bool(all(e <= b + 1e-8 for e, b in zip(cut_errors, lr))),
                }
            )
    cfg = {"t_list": list(map(float, t_list)), "block_list": list(map(int, block_list)), "tol": tol, "n": h.n}
    cfg.update(config or {})
    return ExperimentRecord("qca-error-scan", cfg, ERROR_SCAN_COLUMNS, rows, time.perf_counter() - start)


def fit_record(record: ExperimentRecord) -> DecayConstants:
    """Fit the decay form to the largest per-cut error of each scan row."""
    rows = [r for r in record.rows if r["n_cuts"] > 0]
    provenance = {"experiment": record.experiment}
    provenance.update({k: v for k, v in record.config.items() if k in ("model", "n", "t_list", "block_list", "params")})
    return fit_decay_constants(
        [r["t"] for r in rows], [r["block_size"] for r in rows], [r["max_cut_error"] for r in rows], provenance
    )


def _bond_sum(h: SpinChainHamiltonian, parity: int) -> DenseOperator:
    out = np.zeros((2**h.n, 2**h.n), dtype=complex)
    for j in range(parity, h.n - 1, 2):
        out += embed_matrix(h.terms[j].matrix, (j, j + 2), (0, h.n))
    return DenseOperator((0, h.n), out)


def trotter_propagator(h: SpinChainHamiltonian, t: float, m: int) -> DenseOperator:
    """``(exp(i t/m A) exp(i t/m B))^m`` with ``A`` the even bonds and ``B`` the odd bonds."""
    if m < 1:
        raise InputError(f"step count must be >= 1, got {m}")
    check_dense(h.n, "Trotter propagator")
    dt = t / m
    step = None
    for parity in (0, 1):
        w, v = np.linalg.eigh(_bond_sum(h, parity).matrix)
        factor = (v * np.exp(1j * dt * w)) @ v.conj().T
        step = factor if step is None else step @ factor
    return DenseOperator((0, h.n), np.linalg.matrix_power(step, m))


def trotter_scan(
    h: SpinChainHamiltonian, t: float, m_list: Sequence[int], model: str = "custom", config: dict | None = None
) -> ExperimentRecord:
    start = time.perf_counter()
    exact = chain_propagator(h, t).matrix
    rows = []
    prev = None
    for m in m_list:
        err = operator_norm(exact - trotter_propagator(h, t, m).matrix)
        ratio = err / prev if prev else float("nan")
        rows.append({"model": model, "n": h.n, "t": float(t), "m": int(m), "trotter_error": err, "ratio_to_previous": ratio})
        prev = err
    cfg = {"t": float(t), "m_list": list(map(int, m_list)), "n": h.n}
    cfg.update(config or {})
    return ExperimentRecord("trotter-compare", cfg, TROTTER_COLUMNS, rows, time.perf_counter() - start)


def matched_qca(h: SpinChainHamiltonian, t: float, target: float, tol: float = DEFAULT_TOL, truncation_tol: float = 1e-8) -> dict:
    """Smallest block size whose QCA circuit reaches ``target``, with its MPO bond data."""
    exact = chain_propagator(h, t).matrix
    for block in range(2, h.n + 1):
        circuit = build_qca(h, t, block, tol)
        err = operator_norm(exact - contract_circuit(circuit).matrix)
        if err <= target or block == h.n:
            raw = mpo_multiply(mpo_from_layer(circuit.u_layer, h.n), mpo_from_layer(circuit.v_layer, h.n))
            compressed = qca_to_mpo(circuit, truncation_tol)
            return {
                "target_error": float(target),
                "block_size": circuit.block_size,
                "qca_error": float(err),
                "mpo_max_bond_uncompressed": raw.max_bond,
                "mpo_max_bond": compressed.max_bond,
                "bond_cap": 2 ** (2 * circuit.block_size),
            }
    raise ComputationError("no block size reached the target")  # pragma: no cover
