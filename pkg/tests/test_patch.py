import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epsqca.errors import InputError
from epsqca.heisenberg import centered_window
from epsqca.models import preset_models
from epsqca.patch import (
    analytic_patch_bound,
    generator_L,
    integrate_time_ordered,
    patch_exact,
    patch_windowed,
    time_ordered_with_steps,
)
from epsqca.spinchain import DenseOperator, X, Z, random_hamiltonian, tensor_embed, unitarity_defect


def full_generator(h, cut):
    return lambda s: generator_L(h, cut, s)


@pytest.mark.parametrize("t", [0.25, 1.0])
def test_generic_integrator_reproduces_exact_patch(t):
    # step-by-step exponentials, no closed-form shortcut
    h = random_hamiltonian(4, 11)
    v = integrate_time_ordered(full_generator(h, 2), t, tol=1e-8, fast=False)
    assert np.max(np.abs(v.matrix - patch_exact(h, 2, t).matrix)) < 1e-7


@pytest.mark.parametrize("m", [3, 16])
def test_fast_and_generic_products_agree(m):
    from epsqca.heisenberg import HeisenbergGenerator, bridging_operator
    from epsqca.patch import _midpoint_generic

    h = random_hamiltonian(6, 5)
    gen = HeisenbergGenerator.for_chain(h, bridging_operator(h, 3), (0, 6))
    np.testing.assert_allclose(gen.midpoint_product(-0.8, m), _midpoint_generic(gen, -0.8, m), atol=1e-11)


def test_patch_satisfies_its_ode():
    h = preset_models("tfim", 5)
    t, eps = 0.6, 1e-5
    dv = (patch_exact(h, 2, t + eps).matrix - patch_exact(h, 2, t - eps).matrix) / (2 * eps)
    rhs = 1j * patch_exact(h, 2, t).matrix @ generator_L(h, 2, t).matrix
    np.testing.assert_allclose(dv, rhs, atol=1e-8)


def test_constant_generator_gives_plain_exponential():
    g = DenseOperator((0, 1), X)
    u = integrate_time_ordered(lambda s: g, 0.4, tol=1e-12)
    np.testing.assert_allclose(u.matrix, np.cos(0.4) * np.eye(2) + 1j * np.sin(0.4) * X, atol=1e-12)


def test_time_ordering_puts_later_factors_right():
    # piecewise generator: Z on [0, 1/2), X on [1/2, 1]
    gen = lambda s: DenseOperator((0, 1), Z if s < 0.5 else X)
    u = integrate_time_ordered(gen, 1.0, tol=1e-10)
    ez = np.diag(np.exp(0.5j * np.array([1, -1])))
    ex = np.cos(0.5) * np.eye(2) + 1j * np.sin(0.5) * X
    np.testing.assert_allclose(u.matrix, ez @ ex, atol=1e-9)


def test_integrator_zero_time_and_bad_tol():
    h = preset_models("tfim", 4)
    v, steps = time_ordered_with_steps(full_generator(h, 2), 0.0)
    assert steps == 0 and np.array_equal(v.matrix, np.eye(16))
    with pytest.raises(InputError):
        integrate_time_ordered(full_generator(h, 2), 1.0, tol=0)


def test_whole_chain_window_is_exact():
    h = preset_models("heisenberg-xxz", 6)
    p = patch_windowed(h, 3, (0, 6), 0.7)
    assert p.error_exact < 1e-7
    assert p.error_bound < 1e-12


def test_windowed_error_respects_bounds():
    h = preset_models("tfim", 8)
    for size in (2, 4, 6):
        win = centered_window(8, 4, size)
        p = patch_windowed(h, 4, win, 0.5, bound="quadrature")
        assert p.error_exact <= p.error_bound + 1e-8
        assert p.error_bound <= analytic_patch_bound(h, 4, win, 0.5) + 1e-8
        assert unitarity_defect(p.v_windowed) < 1e-8


def test_patch_windowed_input_checks():
    h = preset_models("tfim", 6)
    with pytest.raises(InputError):
        patch_windowed(h, 3, (3, 6), 0.5)
    with pytest.raises(InputError):
        patch_windowed(h, 3, (0, 6), 0.5, chain=(1, 5))
    with pytest.raises(InputError):
        patch_windowed(h, 3, (2, 4), 0.5, bound="magic")
    with pytest.raises(InputError):
        patch_exact(h, 6, 0.5)


def test_error_shrinks_with_window():
    h = preset_models("tfim", 8)
    errs = [patch_windowed(h, 4, centered_window(8, 4, s), 1.0, bound="analytic").error_exact for s in (2, 4, 6, 8)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-7


@given(st.integers(0, 10_000), st.floats(-1.0, 1.0), st.integers(2, 5))
def test_fundamental_estimate_random(seed, t, size):
    h = random_hamiltonian(6, seed)
    win = centered_window(6, 3, size)
    p = patch_windowed(h, 3, win, t, bound="quadrature")
    assert p.error_exact <= p.error_bound + 1e-8


@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_patch_is_unitary_and_reduces_at_zero(seed, t):
    h = random_hamiltonian(5, seed)
    v = patch_exact(h, 2, t)
    assert unitarity_defect(v) < 1e-11
    # V(t) = I + i t h_I + O(t^2)
    small = patch_exact(h, 2, 1e-6).matrix
    expected = np.eye(32) + 1e-6j * tensor_embed(DenseOperator((1, 3), h.terms[1].matrix), (0, 5)).matrix
    np.testing.assert_allclose(small, expected, atol=1e-10)
