import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epsqca.decay import DecayConstants
from epsqca.errors import InputError, ResourceError
from epsqca.models import preset_models
from epsqca.qca import build_qca, contract_circuit, layer_matrix, plan_cuts, window_size_for
from epsqca.spinchain import X, DenseOperator, chain_propagator, dense_site_limit, operator_norm, random_hamiltonian


def test_plan_regressions():
    p = plan_cuts(10, 4)
    assert p.partition_p1 == ((0, 4), (4, 8), (8, 10))
    assert p.partition_p2 == ((0, 2), (2, 6), (6, 10))
    assert p.cuts == (4, 8)
    assert p.cut_windows == ((2, 6), (6, 10))
    assert p.reference_chain(1) == (4, 10)
    assert p.union_chain(0) == (0, 8)

    p = plan_cuts(7, 3)
    assert p.partition_p1 == ((0, 3), (3, 6), (6, 7))
    assert p.partition_p2 == ((0, 1), (1, 4), (4, 7))
    assert p.cut_windows == ((1, 4), (4, 7))

    p = plan_cuts(6, 9)
    assert p.block_size == 6 and p.cuts == ()


def test_plan_rejects_tiny_blocks():
    with pytest.raises(InputError):
        plan_cuts(8, 1)


@given(st.integers(2, 40), st.integers(2, 12))
def test_plan_invariants(n, size):
    p = plan_cuts(n, size)
    covered = [s for a, b in p.partition_p1 for s in range(a, b)]
    assert covered == list(range(n))
    covered = [s for a, b in p.partition_p2 for s in range(a, b)]
    assert covered == list(range(n))
    for c, (a, b) in zip(p.cuts, p.cut_windows):
        assert a <= c - 1 and c + 1 <= b
        assert b - a <= p.block_size
        assert (a, b) in p.partition_p2


def exact_error(h, circuit, t):
    return operator_norm(chain_propagator(h, t).matrix - contract_circuit(circuit).matrix)


@pytest.mark.parametrize("block", [2, 3, 4])
def test_triangle_accounting_random_chain(block):
    h = random_hamiltonian(8, 4)
    c = build_qca(h, 0.6, block)
    assert exact_error(h, c, 0.6) <= c.error_sum + 1e-7


def test_commuting_chain_is_exact():
    h = preset_models("ising-zz", 8, {"hz": 0.3})
    c = build_qca(h, 1.3, 3)
    assert exact_error(h, c, 1.3) <= 1e-9
    assert c.error_sum <= 1e-9


def test_zero_time_is_identity():
    h = preset_models("tfim", 8)
    c = build_qca(h, 0.0, 4)
    assert exact_error(h, c, 0.0) <= 1e-12
    assert c.error_sum == 0.0


def test_single_block_is_exact_propagator():
    h = preset_models("tfim", 6)
    c = build_qca(h, 0.9, 6)
    assert c.v_layer == ()
    assert exact_error(h, c, 0.9) < 1e-12


def test_reference_falls_back_to_union_beyond_dense_cap():
    h = preset_models("tfim", 10)
    with dense_site_limit(6):
        c = build_qca(h, 0.5, 3)
    assert [p.chain for p in c.patches] == [(0, 6), (3, 9), (6, 10)]
    c_full = build_qca(h, 0.5, 3)
    assert [p.chain for p in c_full.patches] == [(0, 10), (3, 10), (6, 10)]


def test_block_beyond_cap_is_refused():
    with dense_site_limit(4), pytest.raises(ResourceError):
        build_qca(preset_models("tfim", 8), 0.5, 5)


def test_layer_matrix_ordering_and_overlap():
    gates = [((1, 2), DenseOperator((1, 2), X))]
    np.testing.assert_allclose(layer_matrix(gates, 3), np.kron(np.kron(np.eye(2), X), np.eye(2)))
    with pytest.raises(InputError):
        layer_matrix([((0, 2), DenseOperator((0, 2), np.eye(4))), ((1, 2), DenseOperator((1, 2), X))], 3)


def test_window_size_formula():
    # ceil(4 * 0.5 + 2 ln(10 / 1e-3)) = ceil(20.42) clamps to n
    assert window_size_for(10, 0.5, 1e-3) == 10
    assert window_size_for(100, 0.5, 1e-3) == math.ceil(2 + 2 * math.log(1e5))
    k = DecayConstants.from_window_constants(1.0, 0.5)
    assert window_size_for(1000, 1.0, 0.1, k) == math.ceil(1 + 0.5 * math.log(1e4))
    assert window_size_for(10, 0.0, 1.0, DecayConstants.from_window_constants(0.0, 0.1)) == 2
    with pytest.raises(InputError):
        window_size_for(10, 1.0, 0.0)


@given(st.integers(0, 1000), st.floats(-1, 1), st.integers(2, 4))
def test_triangle_property(seed, t, block):
    h = random_hamiltonian(6, seed)
    c = build_qca(h, t, block)
    assert exact_error(h, c, t) <= c.error_sum + 1e-7
