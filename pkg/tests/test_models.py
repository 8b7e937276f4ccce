import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epsqca.errors import InputError
from epsqca.models import PRESETS, preset_models, tfim_term, xxz_term


@pytest.mark.parametrize("name", PRESETS)
def test_presets_are_normalized(name):
    h = preset_models(name, 6, {"seed": 2})
    assert h.n == 6
    assert h.norm_h == pytest.approx(1.0)


def test_aliases_and_unknown_name():
    assert preset_models("xxz", 4).n == 4
    with pytest.raises(InputError, match="tfim"):
        preset_models("potts", 4)
    with pytest.raises(InputError):
        preset_models("tfim", 1)


def test_commuting_preset_terms_commute():
    h = preset_models("ising-zz", 4, {"hz": 0.7})
    a = np.kron(h.terms[0].matrix, np.eye(2))
    b = np.kron(np.eye(2), h.terms[1].matrix)
    np.testing.assert_allclose(a @ b, b @ a, atol=1e-14)


def test_term_spectra():
    np.testing.assert_allclose(np.linalg.eigvalsh(xxz_term(0.5)), [-2.5, 0.5, 0.5, 1.5], atol=1e-12)
    # -ZZ - (X1 + 1X)/2 has extreme eigenvalues +-sqrt(2)
    w = np.linalg.eigvalsh(tfim_term())
    assert w[0] == pytest.approx(-np.sqrt(2)) and w[-1] == pytest.approx(np.sqrt(2))


@given(st.floats(0.1, 3), st.floats(0.1, 3))
def test_tfim_parameters(g, j):
    h = preset_models("tfim", 3, {"g": g, "J": j})
    assert h.norm_h == pytest.approx(1.0)
