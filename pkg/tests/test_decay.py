import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epsqca.decay import DEFAULT_CONSTANTS, DecayConstants, fit_decay_constants, fit_rows
from epsqca.errors import FitRejectedError, InputError

GRID_T = [0.25, 0.5, 1.0] * 3
GRID_W = [4] * 3 + [6] * 3 + [8] * 3


def synthetic(omega, kappa, mu, noise=0.0, seed=0):
    r = np.random.default_rng(seed)
    t = np.array(GRID_T)
    w = np.array(GRID_W)
    e = omega * np.exp(kappa * t - mu * w) * np.exp(noise * r.normal(size=t.size))
    return t, w, e


def test_exact_synthetic_recovery():
    c = fit_decay_constants(*synthetic(2.0, 1.0, 1.0))
    assert (c.omega, c.kappa, c.mu) == pytest.approx((2.0, 1.0, 1.0), rel=1e-10)
    assert c.r2 == pytest.approx(1.0)
    assert c.c0 == pytest.approx(1.0) and c.c1 == pytest.approx(1.0)


def test_noisy_synthetic_recovery():
    c = fit_decay_constants(*synthetic(2.0, 1.0, 1.0, noise=0.01, seed=3))
    assert c.mu == pytest.approx(1.0, abs=0.02)
    assert c.kappa == pytest.approx(1.0, abs=0.05)
    assert c.r2 > 0.99


def test_floor_points_are_dropped():
    t, w, e = synthetic(1.0, 1.0, 2.0)
    t, w, e = list(t) + [1.0], list(w) + [30], list(e) + [1e-14]
    c = fit_decay_constants(t, w, e)
    assert c.n_samples == 9


def test_insufficient_data_rejected():
    with pytest.raises(InputError):
        fit_decay_constants([0.5] * 6, [4, 6, 8] * 2, [1e-2] * 6)
    with pytest.raises(InputError):
        fit_decay_constants([0.5, 1.0], [4, 6], [1e-2, 1e-3])


def test_growing_error_rejected_with_diagnostics():
    t, w, e = synthetic(1.0, 1.0, -0.5)
    with pytest.raises(FitRejectedError) as info:
        fit_decay_constants(t, w, e)
    assert info.value.diagnostics.mu == pytest.approx(-0.5)


def test_json_round_trip_and_defaults():
    c = fit_decay_constants(*synthetic(0.5, 2.0, 1.5), provenance={"model": "tfim"})
    back = DecayConstants.from_json(c.to_json())
    assert back == c
    assert (DEFAULT_CONSTANTS.c0, DEFAULT_CONSTANTS.c1) == pytest.approx((4.0, 2.0))
    k = DecayConstants.from_json('{"c0": 3.0, "c1": 1.5}')
    assert (k.c0, k.c1) == pytest.approx((3.0, 1.5))


def test_fit_rows():
    t, w, e = synthetic(1.0, 2.0, 1.0)
    rows = [{"t": a, "block_size": b, "max_cut_error": c} for a, b, c in zip(t, w, e)]
    assert fit_rows(rows, "max_cut_error").mu == pytest.approx(1.0)


@given(st.floats(0.1, 10), st.floats(-2, 5), st.floats(0.1, 3))
def test_noise_free_fit_is_exact(omega, kappa, mu):
    c = fit_decay_constants(*synthetic(omega, kappa, mu))
    assert c.mu == pytest.approx(mu, rel=1e-8, abs=1e-9)
    assert c.kappa == pytest.approx(kappa, rel=1e-8, abs=1e-8)
    assert math.log(c.omega) == pytest.approx(math.log(omega), abs=1e-7)
