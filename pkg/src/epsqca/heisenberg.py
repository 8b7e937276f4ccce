"""Heisenberg-picture evolution and Lieb-Robinson discrepancies for a bridging term.

``tau_t^B(A) = exp(-itB) A exp(itB)``.  The bound on the discrepancy between
full-chain and window-restricted evolution is the series
``sum_{l >= k} ||h_I|| (2 ||h|| |t|)^l / l!`` with ``k`` the light-cone order of
each window edge the evolution can leak through.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ComputationError, InputError
from .spinchain import (
    DenseOperator,
    HermitianSpectrum,
    SpinChainHamiltonian,
    _interval,
    check_dense,
    embed_matrix,
    is_hermitian,
    operator_norm,
    tensor_embed,
)

LR_CSV_HEADER = ("model", "n", "cut", "t", "window_size", "measured", "bound")


def heisenberg_evolve(a: DenseOperator, hmat: DenseOperator, t: float) -> DenseOperator:
    """``exp(-i t B) A exp(+i t B)`` on the union of both supports."""
    lo = min(a.support[0], hmat.support[0])
    hi = max(a.support[1], hmat.support[1])
    check_dense(hi - lo)
    am = tensor_embed(a, (lo, hi)).matrix
    if t == 0:
        return DenseOperator((lo, hi), am)
    bm = tensor_embed(hmat, (lo, hi)).matrix
    if not is_hermitian(bm, 1e-10):
        raise InputError("Heisenberg evolution needs a Hermitian generator")
    w, v = np.linalg.eigh((bm + bm.conj().T) / 2)
    a_eig = v.conj().T @ am @ v
    phase = np.exp(-1j * t * w)
    return DenseOperator((lo, hi), v @ (phase[:, None] * a_eig * phase.conj()[None, :]) @ v.conj().T)


class HeisenbergGenerator:
    """``s -> tau_s^{H_R}(h)`` for a fixed chain interval ``R`` and local operator ``h``.

    Besides evaluation it supplies exact single-step exponentials and the
    midpoint time-ordered product, which telescopes because every factor is a
    conjugation by ``exp(-isH_R)``.
    """

    def __init__(self, spectrum: HermitianSpectrum, op: DenseOperator):
        self.support = spectrum.support
        self.spectrum = spectrum
        self.op = tensor_embed(op, self.support)
        v = spectrum.vectors
        self._op_eig = v.conj().T @ self.op.matrix @ v
        self._local_op = op

    @classmethod
    def for_chain(cls, h: SpinChainHamiltonian, op: DenseOperator, support) -> "HeisenbergGenerator":
        a, b = _interval(support)
        if op.support[0] < a or op.support[1] > b:
            raise InputError(f"operator on {op.support} is not inside the window [{a}, {b})")
        check_dense(b - a, "window generator")
        return cls(h.spectrum((a, b)), op)

    def __call__(self, s: float) -> DenseOperator:
        return DenseOperator(self.support, self._in_site_basis(self._conjugated_eig(self._op_eig, s)))

    def _conjugated_eig(self, m: np.ndarray, s: float) -> np.ndarray:
        phase = np.exp(-1j * s * self.spectrum.energies)
        return phase[:, None] * m * phase.conj()[None, :]

    def _in_site_basis(self, m: np.ndarray) -> np.ndarray:
        v = self.spectrum.vectors
        return v @ m @ v.conj().T

    def _step_eig(self, dt: float) -> np.ndarray:
        w, u = np.linalg.eigh(self._local_op.matrix)
        local = (u * np.exp(1j * dt * w)) @ u.conj().T
        full = embed_matrix(local, self._local_op.support, self.support)
        v = self.spectrum.vectors
        return v.conj().T @ full @ v

    def exp_step(self, s: float, dt: float) -> np.ndarray:
        """``exp(i dt L(s))`` exactly."""
        return self._in_site_basis(self._conjugated_eig(self._step_eig(dt), s))

    def midpoint_product(self, t: float, m: int) -> np.ndarray:
        """``prod_{j=0}^{m-1} exp(i L((j+1/2) dt) dt)`` with ``dt = t/m``, j = 0 leftmost."""
        dt = t / m
        energies = self.spectrum.energies
        step = self._step_eig(dt)
        shift = np.exp(-1j * dt * energies)[:, None] * step
        first = np.exp(-1j * 0.5 * dt * energies)
        last = np.exp(1j * (t - 0.5 * dt) * energies)
        core = np.linalg.matrix_power(shift, m - 1) if m > 1 else np.eye(len(energies))
        return self._in_site_basis(first[:, None] * (step @ core) * last[None, :])


def bridging_operator(h: SpinChainHamiltonian, cut: int) -> DenseOperator:
    """The term ``h_I`` joining sites ``cut - 1`` and ``cut``."""
    if not 1 <= cut <= h.n - 1:
        raise InputError(f"cut must lie in [1, {h.n - 1}], got {cut}")
    return DenseOperator((cut - 1, cut + 1), h.terms[cut - 1].matrix)


def centered_window(n: int, cut: int, size: int) -> tuple[int, int]:
    """Window of ``size`` sites around the bond ``(cut - 1, cut)``, clipped at the chain ends.

    The window extends ``ceil((size - 2) / 2)`` sites left of the bond and the
    remainder right of it.
    """
    if size < 2:
        raise InputError(f"window must hold the two-site bridging term, got size {size}")
    left = math.ceil((size - 2) / 2)
    right = size - 2 - left
    return max(0, cut - 1 - left), min(n, cut + 1 + right)


def _check_window(cut: int, window: tuple[int, int]) -> None:
    a, b = window
    if a > cut - 1 or b < cut + 1:
        raise InputError(f"window [{a}, {b}) excludes the bridging term on sites {cut - 1}, {cut}")


def light_cone_orders(cut: int, window, chain) -> list[int]:
    """First series order at which evolution inside ``window`` can differ from ``chain``.

    One entry per window edge that is not also an edge of ``chain``: the
    margin between the bridging term and that edge, plus one.
    """
    a, b = _interval(window)
    lo, hi = _interval(chain)
    _check_window(cut, (a, b))
    orders = []
    if a > lo:
        orders.append(cut - 1 - a + 1)
    if b < hi:
        orders.append(b - cut - 1 + 1)
    return orders


def analytic_lr_bound(norm_hI: float, norm_h: float, window_size: int, t: float, l_max: int | None = None) -> float:
    """``sum_{l >= window_size} ||h_I|| 2^l ||h||^l |t|^l / l!`` with a geometric tail majorant.

    Terms are formed in log space.  ``l_max`` is raised until the ratio of
    consecutive terms beyond it is below one half.
    """
    if window_size < 1:
        raise InputError(f"window_size must be >= 1, got {window_size}")
    if t == 0 or norm_hI == 0 or norm_h == 0:
        return 0.0
    if l_max is None:
        l_max = window_size + 60
    if l_max < window_size:
        raise InputError(f"l_max={l_max} is below window_size={window_size}")
    rate = 2.0 * norm_h * abs(t)
    while rate / (l_max + 1) >= 0.5:
        l_max *= 2
    log_rate = math.log(rate)
    log_hI = math.log(norm_hI)

    def term(l: int) -> float:
        x = log_hI + l * log_rate - math.lgamma(l + 1)
        return math.exp(x) if x < 700 else math.inf

    partial = math.fsum(term(l) for l in range(window_size, l_max + 1))
    ratio = rate / (l_max + 1)
    return partial + term(l_max + 1) / (1.0 - ratio)


def window_lr_bound(norm_hI: float, norm_h: float, cut: int, window, chain, t: float) -> float:
    """Sum of :func:`analytic_lr_bound` over the leaky edges of ``window``."""
    return sum(analytic_lr_bound(norm_hI, norm_h, k, t) for k in light_cone_orders(cut, window, chain))


def _difference_norm(h: SpinChainHamiltonian, cut: int, window, t: float, full: DenseOperator | None = None) -> float:
    hI = bridging_operator(h, cut)
    if full is None:
        full = HeisenbergGenerator.for_chain(h, hI, (0, h.n))(t)
    windowed = HeisenbergGenerator.for_chain(h, hI, window)(t)
    diff = full.matrix - tensor_embed(windowed, full.support).matrix
    return operator_norm((diff + diff.conj().T) / 2)


def lr_discrepancy(h: SpinChainHamiltonian, cut: int, window, t: float) -> float:
    """``|| tau_t^H(h_I) - tau_t^{H_window}(h_I) ||`` on the full chain."""
    window = _interval(window)
    if window[1] > h.n:
        raise InputError(f"window {window} exceeds chain of {h.n} sites")
    bridging_operator(h, cut)
    _check_window(cut, window)
    check_dense(h.n, "Lieb-Robinson discrepancy")
    if t == 0:
        return 0.0
    return _difference_norm(h, cut, window, t)


@dataclass(frozen=True)
class LrScanRecord:
    model: str
    n: int
    cut: int
    t: float
    window_size: int
    window: tuple[int, int]
    measured: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.measured <= self.bound + 1e-9


def lr_scan(
    h: SpinChainHamiltonian,
    cut: int,
    t_list: Sequence[float],
    window_list: Sequence[int],
    model: str = "custom",
    workers: int = 1,
) -> list[LrScanRecord]:
    """One record per ``(t, window size)`` pair, in input order (t outer)."""
    t_list = list(t_list)
    window_list = list(window_list)
    if not t_list or not window_list:
        return []
    hI = bridging_operator(h, cut)
    norm_hI = float(np.max(np.abs(np.linalg.eigvalsh(hI.matrix))))
    norm_h = h.norm_h
    windows = []
    for size in window_list:
        win = centered_window(h.n, cut, size)
        _check_window(cut, win)
        windows.append(win)
    check_dense(h.n, "Lieb-Robinson scan")
    full_gen = HeisenbergGenerator.for_chain(h, hI, (0, h.n))

    def run(t: float) -> list[LrScanRecord]:
        full = full_gen(t) if t != 0 else None
        out = []
        for size, win in zip(window_list, windows):
            try:
                measured = 0.0 if t == 0 else _difference_norm(h, cut, win, t, full)
            except (InputError, ComputationError) as exc:
                raise type(exc)(f"(t={t}, window={size}): {exc}") from exc
            bound = window_lr_bound(norm_hI, norm_h, cut, win, (0, h.n), t)
            out.append(LrScanRecord(model, h.n, cut, float(t), size, win, measured, bound))
        return out

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(run, t_list))
    else:
        chunks = [run(t) for t in t_list]
    return [rec for chunk in chunks for rec in chunk]


def fmt(x: float) -> str:
    """Locale-independent decimal with 12 significant digits."""
    return format(float(x), ".12g")


def lr_records_to_csv(records: Iterable[LrScanRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LR_CSV_HEADER)
    for r in records:
        writer.writerow([r.model, r.n, r.cut, fmt(r.t), r.window_size, fmt(r.measured), fmt(r.bound)])
    return buf.getvalue()
