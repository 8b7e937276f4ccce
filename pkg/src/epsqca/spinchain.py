"""Spin-1/2 chains with nearest-neighbour terms, dense operators and the numerical kernels.

Site ordering follows the usual Kronecker convention: site ``a`` of a support
``[a, b)`` is the leftmost (most significant) tensor factor.  All site
intervals are half-open.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ComputationError, InputError, ResourceError

HERMITIAN_TOL = 1e-12
PROPAGATOR_HERMITIAN_TOL = 1e-10

DEFAULT_MAX_DENSE_SITES = 10
HARD_MAX_DENSE_SITES = 12

_max_dense_sites = contextvars.ContextVar("max_dense_sites", default=DEFAULT_MAX_DENSE_SITES)

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
I2, X, Y, Z = PAULI


def max_dense_sites() -> int:
    return _max_dense_sites.get()


def set_max_dense_sites(k: int) -> None:
    if not 1 <= k <= HARD_MAX_DENSE_SITES:
        raise InputError(f"max_dense_sites must lie in [1, {HARD_MAX_DENSE_SITES}], got {k}")
    _max_dense_sites.set(k)


@contextlib.contextmanager
def dense_site_limit(k: int) -> Iterator[None]:
    """Temporarily change the dense-oracle site cap."""
    if not 1 <= k <= HARD_MAX_DENSE_SITES:
        raise InputError(f"max_dense_sites must lie in [1, {HARD_MAX_DENSE_SITES}], got {k}")
    token = _max_dense_sites.set(k)
    try:
        yield
    finally:
        _max_dense_sites.reset(token)


def check_dense(nsites: int, what: str = "dense operator") -> None:
    limit = max_dense_sites()
    if nsites > limit:
        raise ResourceError(f"{what} on {nsites} sites exceeds max_dense_sites={limit}")


def _interval(support) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in support)
    except (TypeError, ValueError) as exc:
        raise InputError(f"malformed site interval {support!r}") from exc
    if a < 0 or b < a:
        raise InputError(f"malformed site interval [{a}, {b})")
    return a, b


def embed_matrix(m: np.ndarray, inner: tuple[int, int], outer: tuple[int, int]) -> np.ndarray:
    """Pad ``m`` (acting on ``inner``) with identities up to ``outer``."""
    a, b = inner
    lo, hi = outer
    if a < lo or b > hi:
        raise InputError(f"interval [{a}, {b}) is not contained in [{lo}, {hi})")
    out = m
    if a > lo:
        out = np.kron(np.eye(2 ** (a - lo)), out)
    if hi > b:
        out = np.kron(out, np.eye(2 ** (hi - b)))
    return out


# ---------------------------------------------------------------------------
# Pauli basis


def pauli_string(indices: Sequence[int]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for k in indices:
        out = np.kron(out, PAULI[k])
    return out


def pauli_coefficients(matrix: np.ndarray) -> np.ndarray:
    """Coefficients ``c_k = tr(sigma^k W) / 2^n`` as an array of shape ``(4,) * n``."""
    dim = matrix.shape[0]
    n = int(round(np.log2(dim)))
    if 2**n != dim or matrix.shape != (dim, dim):
        raise InputError(f"matrix of shape {matrix.shape} is not a {n}-qubit operator")
    # axes: remaining (row, col) pairs in front, finished Pauli indices at the back
    t = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * n))
    t = np.moveaxis(t, list(range(n, 2 * n)), list(range(1, 2 * n, 2)))
    # now axes are (r0, c0, r1, c1, ...)
    for _ in range(n):
        # contract sigma^alpha_{c r} W_{r c} on the leading pair, push alpha to the back
        t = np.tensordot(t, PAULI, axes=([0, 1], [2, 1]))
    return t / 2**n


def pauli_reconstruct(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pauli_coefficients`."""
    n = coeffs.ndim
    t = np.asarray(coeffs, dtype=complex)
    for _ in range(n):
        # contract leading alpha with sigma^alpha, push (r, c) to the back
        t = np.tensordot(t, PAULI, axes=([0], [0]))
    # axes now (r0, c0, r1, c1, ...)
    t = np.moveaxis(t, list(range(1, 2 * n, 2)), list(range(n, 2 * n)))
    return t.reshape(2**n, 2**n)


# ---------------------------------------------------------------------------
# Hamiltonian data


@dataclass(frozen=True)
class LocalTerm:
    """Two-site Hermitian term acting on sites ``site`` and ``site + 1``."""

    site: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise InputError(f"local term at site {self.site} must be 4x4, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InputError(f"local term at site {self.site} is not Hermitian")
        if self.site < 0:
            raise InputError(f"negative site index {self.site}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


@dataclass(frozen=True)
class HermitianSpectrum:
    support: tuple[int, int]
    energies: np.ndarray
    vectors: np.ndarray

    def exp(self, t: float) -> np.ndarray:
        """``exp(i t H)`` on ``support``."""
        return (self.vectors * np.exp(1j * t * self.energies)) @ self.vectors.conj().T


@dataclass(frozen=True)
class SpinChainHamiltonian:
    n: int
    terms: tuple[LocalTerm, ...]
    _spectra: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise InputError(f"chain needs at least 2 sites, got n={self.n}")
        terms = tuple(t if isinstance(t, LocalTerm) else LocalTerm(j, t) for j, t in enumerate(self.terms))
        if len(terms) != self.n - 1:
            raise InputError(f"expected {self.n - 1} terms for n={self.n}, got {len(terms)}")
        for j, term in enumerate(terms):
            if term.site != j:
                raise InputError(f"term {j} is labelled with site {term.site}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_matrices(cls, matrices: Sequence[np.ndarray]) -> "SpinChainHamiltonian":
        return cls(len(matrices) + 1, tuple(LocalTerm(j, m) for j, m in enumerate(matrices)))

    @property
    def term_norms(self) -> np.ndarray:
        return np.array([t.norm for t in self.terms])

    @property
    def norm_h(self) -> float:
        """``max_j ||h_j||``."""
        return float(self.term_norms.max())

    def restrict(self, support) -> "SpinChainHamiltonian":
        """The chain on ``support`` keeping only terms inside it, relabelled from site 0."""
        a, b = _interval(support)
        if b > self.n or b - a < 2:
            raise InputError(f"cannot restrict an n={self.n} chain to [{a}, {b})")
        return SpinChainHamiltonian(b - a, tuple(LocalTerm(j - a, self.terms[j].matrix) for j in range(a, b - 1)))

    def spectrum(self, support=None) -> HermitianSpectrum:
        """Cached eigendecomposition of ``H`` restricted to ``support``."""
        a, b = _interval(support if support is not None else (0, self.n))
        key = (a, b)
        if key not in self._spectra:
            hmat = build_dense_hamiltonian(self, (a, b))
            w, v = np.linalg.eigh(hmat.matrix)
            self._spectra[key] = HermitianSpectrum((a, b), w, v)
        return self._spectra[key]


def random_hamiltonian(n: int, seed: int) -> SpinChainHamiltonian:
    """Independent random Hermitian terms with ``||h_j|| = 1``; deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(n - 1):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = (a + a.conj().T) / 2
        mats.append(a / np.max(np.abs(np.linalg.eigvalsh(a))))
    return SpinChainHamiltonian.from_matrices(mats)


# ---------------------------------------------------------------------------
# Dense operators


@dataclass(frozen=True)
class DenseOperator:
    support: tuple[int, int]
    matrix: np.ndarray

    def __post_init__(self):
        a, b = _interval(self.support)
        m = np.array(self.matrix, dtype=complex)
        dim = 2 ** (b - a)
        if m.shape != (dim, dim):
            raise InputError(f"support [{a}, {b}) needs a {dim}x{dim} matrix, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "support", (a, b))
        object.__setattr__(self, "matrix", m)

    @property
    def nsites(self) -> int:
        return self.support[1] - self.support[0]

    def embed(self, support) -> "DenseOperator":
        return tensor_embed(self, support)

    def adjoint(self) -> "DenseOperator":
        return adjoint(self)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return multiply(self, other)


def identity_operator(support) -> DenseOperator:
    a, b = _interval(support)
    check_dense(b - a)
    return DenseOperator((a, b), np.eye(2 ** (b - a), dtype=complex))


def single_site(op: np.ndarray, site: int, support) -> DenseOperator:
    a, b = _interval(support)
    if not a <= site < b:
        raise InputError(f"site {site} outside [{a}, {b})")
    check_dense(b - a)
    return DenseOperator((a, b), embed_matrix(np.asarray(op, dtype=complex), (site, site + 1), (a, b)))


def tensor_embed(a: DenseOperator, support) -> DenseOperator:
    """Pad ``a`` with identities so that it acts on ``support``."""
    lo, hi = _interval(support)
    if a.support == (lo, hi):
        return a
    check_dense(hi - lo)
    return DenseOperator((lo, hi), embed_matrix(a.matrix, a.support, (lo, hi)))


def _union(*ops: DenseOperator) -> tuple[int, int]:
    lo = min(op.support[0] for op in ops)
    hi = max(op.support[1] for op in ops)
    return lo, hi


def multiply(a: DenseOperator, b: DenseOperator) -> DenseOperator:
    union = _union(a, b)
    check_dense(union[1] - union[0])
    return DenseOperator(union, tensor_embed(a, union).matrix @ tensor_embed(b, union).matrix)


def add(a: DenseOperator, b: DenseOperator, scale: complex = 1.0) -> DenseOperator:
    """``a + scale * b`` on the union interval."""
    union = _union(a, b)
    check_dense(union[1] - union[0])
    return DenseOperator(union, tensor_embed(a, union).matrix + scale * tensor_embed(b, union).matrix)


def adjoint(a: DenseOperator) -> DenseOperator:
    return DenseOperator(a.support, a.matrix.conj().T)


def is_hermitian(m: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def operator_norm(a) -> float:
    """Largest singular value of a dense operator or raw matrix."""
    m = a.matrix if isinstance(a, DenseOperator) else np.asarray(a)
    if m.size == 0:
        return 0.0
    try:
        if is_hermitian(m, 0.0):
            return float(np.max(np.abs(np.linalg.eigvalsh(m))))
        return float(np.linalg.svd(m, compute_uv=False)[0])
    except np.linalg.LinAlgError as exc:
        raise ComputationError(f"operator norm failed: {exc}") from exc


def unitarity_defect(m) -> float:
    m = m.matrix if isinstance(m, DenseOperator) else np.asarray(m)
    return operator_norm(m.conj().T @ m - np.eye(m.shape[0]))


def build_dense_hamiltonian(h: SpinChainHamiltonian, support) -> DenseOperator:
    """Sum of the terms of ``h`` lying entirely inside ``support``."""
    a, b = _interval(support)
    if b > h.n:
        raise InputError(f"interval [{a}, {b}) exceeds chain of {h.n} sites")
    check_dense(b - a, "Hamiltonian")
    dim = 2 ** (b - a)
    out = np.zeros((dim, dim), dtype=complex)
    for j in range(a, b - 1):
        out += embed_matrix(h.terms[j].matrix, (j, j + 2), (a, b))
    return DenseOperator((a, b), out)


def propagator(hmat: DenseOperator, t: float) -> DenseOperator:
    """``exp(+i t H)`` via Hermitian eigendecomposition."""
    m = hmat.matrix
    if not is_hermitian(m, PROPAGATOR_HERMITIAN_TOL):
        raise InputError("propagator needs a Hermitian generator")
    if t == 0:
        return DenseOperator(hmat.support, np.eye(m.shape[0], dtype=complex))
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return DenseOperator(hmat.support, (v * np.exp(1j * t * w)) @ v.conj().T)


def chain_propagator(h: SpinChainHamiltonian, t: float, support=None) -> DenseOperator:
    """``exp(i t H_support)`` using the cached spectrum of ``h``."""
    a, b = _interval(support if support is not None else (0, h.n))
    if b - a < 2:
        return identity_operator((a, b))
    if t == 0:
        return identity_operator((a, b))
    return DenseOperator((a, b), h.spectrum((a, b)).exp(t))
