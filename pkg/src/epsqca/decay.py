"""Fitting ``error ~ omega * exp(kappa |t|) * exp(-mu |Omega|)`` to measured patch errors."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import FitRejectedError, InputError

NUMERICAL_FLOOR = 1e-11


@dataclass(frozen=True)
class DecayConstants:
    omega: float
    kappa: float
    mu: float
    residual: float = float("nan")
    r2: float = float("nan")
    n_samples: int = 0
    provenance: dict = field(default_factory=dict)

    @property
    def c0(self) -> float:
        return self.kappa / self.mu

    @property
    def c1(self) -> float:
        return 1.0 / self.mu

    @classmethod
    def from_window_constants(cls, c0: float, c1: float) -> "DecayConstants":
        """Constants reproducing the given ``c0, c1`` (with ``omega = 1``)."""
        if c1 <= 0:
            raise InputError(f"c1 must be positive, got {c1}")
        return cls(omega=1.0, kappa=c0 / c1, mu=1.0 / c1, provenance={"source": "window constants"})

    def to_json(self) -> str:
        d = asdict(self)
        d["c0"] = self.c0
        d["c1"] = self.c1
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DecayConstants":
        d = json.loads(text)
        if "mu" not in d and {"c0", "c1"} <= d.keys():
            return cls.from_window_constants(d["c0"], d["c1"])
        keys = {"omega", "kappa", "mu", "residual", "r2", "n_samples", "provenance"}
        return cls(**{k: v for k, v in d.items() if k in keys})


# c0 = 4, c1 = 2: conservative until a fit replaces them
DEFAULT_CONSTANTS = DecayConstants.from_window_constants(4.0, 2.0)


def fit_decay_constants(
    t: Sequence[float],
    block_size: Sequence[float],
    error: Sequence[float],
    provenance: dict | None = None,
    floor: float = NUMERICAL_FLOOR,
) -> DecayConstants:
    """Least squares for ``log error = log omega + kappa |t| - mu |Omega|``.

    Points at or below ``floor`` are dropped.  Needs at least 6 remaining
    points over 2 distinct times and 3 distinct window sizes.
    """
    t = np.abs(np.asarray(t, dtype=float))
    w = np.asarray(block_size, dtype=float)
    e = np.asarray(error, dtype=float)
    if not (len(t) == len(w) == len(e)):
        raise InputError("t, block_size and error must have equal length")
    keep = np.isfinite(e) & (e > floor)
    t, w, e = t[keep], w[keep], e[keep]
    if len(e) < 6 or len(np.unique(t)) < 2 or len(np.unique(w)) < 3:
        raise InputError(
            f"need >= 6 points with >= 2 distinct t and >= 3 distinct window sizes above {floor:g}; "
            f"have {len(e)} points, {len(np.unique(t))} times, {len(np.unique(w))} sizes"
        )
    design = np.column_stack([np.ones_like(t), t, -w])
    y = np.log(e)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    constants = DecayConstants(
        omega=math.exp(coef[0]),
        kappa=float(coef[1]),
        mu=float(coef[2]),
        residual=math.sqrt(ss_res / len(y)),
        r2=r2,
        n_samples=int(len(y)),
        provenance=dict(provenance or {}),
    )
    if constants.mu <= 0:
        raise FitRejectedError(f"fitted mu = {constants.mu:.4g} is not a decay rate", constants)
    return constants


def fit_rows(rows: Iterable[dict], error_key: str = "error", provenance: dict | None = None) -> DecayConstants:
    rows = list(rows)
    return fit_decay_constants(
        [float(r["t"]) for r in rows],
        [float(r["block_size"]) for r in rows],
        [float(r[error_key]) for r in rows],
        provenance,
    )
