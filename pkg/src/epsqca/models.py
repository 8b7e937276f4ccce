"""Named chain presets, each normalized so that ``max_j ||h_j|| = 1``."""
from __future__ import annotations

import numpy as np

from .errors import InputError
from .spinchain import I2, X, Y, Z, SpinChainHamiltonian, random_hamiltonian

PRESETS = ("tfim", "heisenberg-xxz", "ising-zz", "random-seeded")
_ALIASES = {"random": "random-seeded", "xxz": "heisenberg-xxz"}


def tfim_term(g: float = 1.0, j: float = 1.0) -> np.ndarray:
    """``-J Z Z - (g/2)(X 1 + 1 X)``; the field on each site is shared by its two bonds."""
    return -j * np.kron(Z, Z) - 0.5 * g * (np.kron(X, I2) + np.kron(I2, X))


def xxz_term(delta: float = 0.5) -> np.ndarray:
    return np.kron(X, X) + np.kron(Y, Y) + delta * np.kron(Z, Z)


def zz_term(j: float = 1.0, hz: float = 0.0) -> np.ndarray:
    return -j * np.kron(Z, Z) - 0.5 * hz * (np.kron(Z, I2) + np.kron(I2, Z))


def _normalized(mats: list[np.ndarray]) -> SpinChainHamiltonian:
    scale = max(float(np.max(np.abs(np.linalg.eigvalsh(m)))) for m in mats)
    if scale > 0:
        mats = [m / scale for m in mats]
    return SpinChainHamiltonian.from_matrices(mats)


def preset_models(name: str, n: int, params: dict | None = None) -> SpinChainHamiltonian:
    """Build a preset chain.

    ``tfim`` (g, J), ``heisenberg-xxz`` (delta), ``ising-zz`` (J, hz; all terms
    commute) and ``random-seeded`` (seed) are available.
    """
    params = dict(params or {})
    key = _ALIASES.get(name, name)
    if n < 2:
        raise InputError(f"chain needs at least 2 sites, got n={n}")
    if key == "tfim":
        term = tfim_term(float(params.get("g", 1.0)), float(params.get("J", 1.0)))
        return _normalized([term] * (n - 1))
    if key == "heisenberg-xxz":
        return _normalized([xxz_term(float(params.get("delta", 0.5)))] * (n - 1))
    if key == "ising-zz":
        return _normalized([zz_term(float(params.get("J", 1.0)), float(params.get("hz", 0.0)))] * (n - 1))
    if key == "random-seeded":
        return random_hamiltonian(n, int(params.get("seed", 0)))
    raise InputError(f"unknown model {name!r}; valid presets: {', '.join(PRESETS)}")
