"""Matrix product operators in the Pauli basis.

An operator on ``n`` sites is stored as ``W = sum_alpha A^{alpha_0} ... A^{alpha_{n-1}}
sigma^{alpha_0} (x) ... (x) sigma^{alpha_{n-1}}`` with one array of shape
``(4, C_j, D_j)`` per site, ``C_0 = D_{n-1} = 1``.  Inner products use the
normalized Hilbert-Schmidt form ``tr(A^dag B) / 2^n``, in which Pauli strings are
orthonormal, so SVD truncation of the site tensors is Frobenius truncation of
the operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ComputationError, InputError, ResourceError
from .spinchain import PAULI, DenseOperator, check_dense, pauli_coefficients

MAX_BOND = 4096
# singular values below this fraction of the largest are treated as exact zeros
RANK_RTOL = 1e-13

# sigma^a sigma^b = sum_g PAULI_PRODUCT[a, b, g] sigma^g
PAULI_PRODUCT = np.einsum("gij,ajk,bki->abg", PAULI, PAULI, PAULI) / 2


@dataclass(frozen=True)
class MpoOperator:
    tensors: tuple[np.ndarray, ...]
    truncation_error: float = 0.0

    def __post_init__(self):
        tensors = tuple(np.asarray(t, dtype=complex) for t in self.tensors)
        if not tensors:
            raise InputError("an MPO needs at least one site")
        for j, t in enumerate(tensors):
            if t.ndim != 3 or t.shape[0] != 4:
                raise InputError(f"site {j}: expected shape (4, C, D), got {t.shape}")
            if max(t.shape[1:]) > MAX_BOND:
                raise ResourceError(f"site {j}: bond {max(t.shape[1:])} exceeds the cap {MAX_BOND}")
        if tensors[0].shape[1] != 1 or tensors[-1].shape[2] != 1:
            raise InputError("boundary auxiliary dimensions must be 1")
        for j in range(len(tensors) - 1):
            if tensors[j].shape[2] != tensors[j + 1].shape[1]:
                raise InputError(
                    f"bond mismatch between sites {j} and {j + 1}: {tensors[j].shape[2]} != {tensors[j + 1].shape[1]}"
                )
        for t in tensors:
            t.setflags(write=False)
        object.__setattr__(self, "tensors", tensors)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """``D_j`` for ``j = 0 .. n-2``."""
        return tuple(t.shape[2] for t in self.tensors[:-1])

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)


def identity_mpo(n: int) -> MpoOperator:
    site = np.zeros((4, 1, 1), dtype=complex)
    site[0, 0, 0] = 1.0
    return MpoOperator(tuple(site for _ in range(n)))


def _keep(s: np.ndarray, allowed_sq: float) -> tuple[int, float]:
    """Number of singular values to keep and the discarded squared weight."""
    if s.size == 0 or s[0] == 0:
        return 1, 0.0
    keep = int(np.count_nonzero(s > RANK_RTOL * s[0]))
    # drop from the tail while the discarded weight stays within budget
    tail = np.cumsum((s[::-1] ** 2))
    droppable = int(np.searchsorted(tail, allowed_sq, side="right"))
    keep = max(1, min(keep, s.size - droppable))
    return keep, float(np.sum(s[keep:] ** 2))


def mpo_from_dense(w, truncation_tol: float = 0.0) -> MpoOperator:
    """Pauli-expand ``w`` and factor the coefficient tensor by sequential SVDs."""
    if truncation_tol < 0:
        raise InputError("truncation_tol must be >= 0")
    m = w.matrix if isinstance(w, DenseOperator) else np.asarray(w, dtype=complex)
    n = int(round(math.log2(m.shape[0])))
    check_dense(n, "MPO from dense")
    coeffs = pauli_coefficients(m)
    if n == 1:
        return MpoOperator((coeffs.reshape(4, 1, 1),))
    total_sq = float(np.sum(np.abs(coeffs) ** 2))
    allowed = truncation_tol**2 * total_sq / (n - 1)
    tensors = []
    discarded = 0.0
    rest = coeffs.reshape(1, -1)
    left = 1
    for _ in range(n - 1):
        mat = rest.reshape(left * 4, -1)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        k, lost = _keep(s, allowed)
        discarded += lost
        tensors.append(u[:, :k].reshape(left, 4, k).transpose(1, 0, 2))
        rest = s[:k, None] * vh[:k]
        left = k
    tensors.append(rest.reshape(left, 4, 1).transpose(1, 0, 2))
    return MpoOperator(tuple(tensors), math.sqrt(discarded))


def mpo_to_dense(m: MpoOperator) -> DenseOperator:
    """Evaluate the Pauli-basis sum as an explicit matrix."""
    check_dense(m.n, "MPO contraction")
    acc = np.einsum("acd,aik->ikd", m.tensors[0][:, :1, :], PAULI)
    for t in m.tensors[1:]:
        site = np.einsum("acd,aik->cdik", t, PAULI)
        acc = np.einsum("IKc,cdik->IiKkd", acc, site)
        r, _, c, _, d = acc.shape
        acc = acc.reshape(r * 2, c * 2, d)
    return DenseOperator((0, m.n), acc[:, :, 0])


def mpo_from_layer(gates: Sequence[tuple[tuple[int, int], DenseOperator]], n: int) -> MpoOperator:
    """MPO of a product of gates on disjoint blocks; bond 1 between blocks."""
    ident = identity_mpo(1).tensors[0]
    tensors = []
    pos = 0
    for (a, b), gate in sorted(gates, key=lambda g: g[0][0]):
        if a < pos:
            raise InputError(f"gate on [{a}, {b}) overlaps a previous gate")
        if b > n:
            raise InputError(f"gate on [{a}, {b}) extends past n={n}")
        if gate.matrix.shape[0] != 2 ** (b - a):
            raise InputError(f"gate for block [{a}, {b}) has shape {gate.matrix.shape}")
        tensors.extend(ident for _ in range(a - pos))
        tensors.extend(mpo_from_dense(gate.matrix).tensors)
        pos = b
    tensors.extend(ident for _ in range(n - pos))
    return MpoOperator(tuple(tensors))


def mpo_multiply(a: MpoOperator, b: MpoOperator) -> MpoOperator:
    """MPO of ``a @ b``; bond dimensions multiply, nothing is truncated."""
    if a.n != b.n:
        raise InputError(f"cannot multiply MPOs on {a.n} and {b.n} sites")
    out = []
    for ta, tb in zip(a.tensors, b.tensors):
        c = np.einsum("abg,acd,bef->gcedf", PAULI_PRODUCT, ta, tb, optimize=True)
        g, c1, c2, d1, d2 = c.shape
        if max(c1 * c2, d1 * d2) > MAX_BOND:
            raise ResourceError(f"product bond {max(c1 * c2, d1 * d2)} exceeds the cap {MAX_BOND}")
        out.append(c.reshape(g, c1 * c2, d1 * d2))
    return MpoOperator(tuple(out), a.truncation_error + b.truncation_error)


def _right_orthogonalize(tensors: list[np.ndarray]) -> list[np.ndarray]:
    """Right-to-left QR sweep; every site but the first ends right-orthonormal."""
    tensors = list(tensors)
    for j in range(len(tensors) - 1, 0, -1):
        t = tensors[j]
        _, c, d = t.shape
        mat = t.transpose(1, 0, 2).reshape(c, 4 * d)
        q, r = np.linalg.qr(mat.conj().T)
        k = q.shape[1]
        tensors[j] = q.conj().T.reshape(k, 4, d).transpose(1, 0, 2)
        tensors[j - 1] = tensors[j - 1] @ r.conj().T
    return tensors


def _left_orthogonalize(tensors: list[np.ndarray]) -> list[np.ndarray]:
    """Left-to-right QR sweep; the norm ends up in the last site."""
    tensors = list(tensors)
    for j in range(len(tensors) - 1):
        t = tensors[j]
        _, c, d = t.shape
        q, r = np.linalg.qr(t.transpose(1, 0, 2).reshape(c * 4, d))
        k = q.shape[1]
        tensors[j] = q.reshape(c, 4, k).transpose(1, 0, 2)
        tensors[j + 1] = np.einsum("kd,ade->ake", r, tensors[j + 1])
    return tensors


def mpo_compress(m: MpoOperator, truncation_tol: float = 0.0) -> MpoOperator:
    """Right-to-left orthogonalization, then a left-to-right truncating SVD sweep.

    The squared weight discarded over all bonds is at most
    ``truncation_tol**2 * ||m||_F**2`` and equals the squared Frobenius error;
    its square root is added to ``truncation_error``.  The result is left-canonical.
    """
    if truncation_tol < 0:
        raise InputError("truncation_tol must be >= 0")
    if m.n == 1:
        return m
    tensors = _right_orthogonalize(list(m.tensors))
    total_sq = float(np.sum(np.abs(tensors[0]) ** 2))
    allowed = truncation_tol**2 * total_sq / (m.n - 1)
    discarded = 0.0
    for j in range(m.n - 1):
        t = tensors[j]
        _, c, d = t.shape
        u, s, vh = np.linalg.svd(t.transpose(1, 0, 2).reshape(c * 4, d), full_matrices=False)
        k, lost = _keep(s, allowed)
        discarded += lost
        tensors[j] = u[:, :k].reshape(c, 4, k).transpose(1, 0, 2)
        tensors[j + 1] = np.einsum("kd,ade->ake", s[:k, None] * vh[:k], tensors[j + 1])
    return MpoOperator(tuple(tensors), m.truncation_error + math.sqrt(discarded))


def mpo_inner(a: MpoOperator, b: MpoOperator) -> complex:
    """``tr(a^dag b) / 2^n`` by left-to-right transfer contraction."""
    if a.n != b.n:
        raise InputError(f"MPOs on {a.n} and {b.n} sites")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.einsum("xy,axd,aye->de", env, ta.conj(), tb, optimize=True)
    return complex(env[0, 0])


def mpo_frobenius_norm(a: MpoOperator) -> float:
    """``sqrt(tr(W^dag W) / 2^n)``."""
    return math.sqrt(max(mpo_inner(a, a).real, 0.0))


def mpo_add(a: MpoOperator, b: MpoOperator, scale: complex = 1.0) -> MpoOperator:
    """``a + scale * b`` with direct-sum bonds."""
    if a.n != b.n:
        raise InputError(f"MPOs on {a.n} and {b.n} sites")
    n = a.n
    if n == 1:
        return MpoOperator((a.tensors[0] + scale * b.tensors[0],))
    out = []
    for j, (ta, tb) in enumerate(zip(a.tensors, b.tensors)):
        _, ca, da = ta.shape
        _, cb, db = tb.shape
        if j == 0:
            out.append(np.concatenate([ta, tb], axis=2))
        elif j == n - 1:
            out.append(np.concatenate([ta, scale * tb], axis=1))
        else:
            t = np.zeros((4, ca + cb, da + db), dtype=complex)
            t[:, :ca, :da] = ta
            t[:, ca:, da:] = tb
            out.append(t)
    return MpoOperator(tuple(out))


def mpo_frobenius_distance(a: MpoOperator, b: MpoOperator) -> float:
    """``||a - b||`` in the normalized Frobenius norm.

    Orthogonalizing the difference before taking its norm keeps the result
    accurate to machine precision even when ``a`` and ``b`` nearly coincide.
    """
    diff = _left_orthogonalize(list(mpo_add(a, b, -1.0).tensors))
    return float(np.linalg.norm(diff[-1]))


def qca_to_mpo(circuit, truncation_tol: float = 1e-8) -> MpoOperator:
    """Compressed MPO of ``(U layer)(V layer)``; checks the ``2^(2 block_size)`` bond ceiling first."""
    u = mpo_from_layer(circuit.u_layer, circuit.n)
    v = mpo_from_layer(circuit.v_layer, circuit.n)
    product = mpo_multiply(u, v)
    cap = 2 ** (2 * circuit.block_size)
    if product.max_bond > cap:
        raise ComputationError(f"uncompressed QCA MPO bond {product.max_bond} exceeds 2^(2|Omega|) = {cap}")
    return mpo_compress(product, truncation_tol)
