"""Unit tests for the source-state builders."""

import numpy as np
import pytest

from qrep.fock import make_pure
from qrep.states import SourceParams, atom_photon, ideal_qm_pair, joint_spdc, spdc_pair


def purity(state):
    return float(np.trace(state.matrix @ state.matrix).real)


def test_source_params_ranges():
    SourceParams(lam=0.0, q=0.0)
    SourceParams(lam=0.99, q=1.0)
    with pytest.raises(ValueError):
        SourceParams(lam=1.0, q=0.5)
    with pytest.raises(ValueError):
        SourceParams(lam=0.1, q=1.5)


def test_spdc_pair_vacuum_at_zero_brightness():
    rho = spdc_pair(0.0)
    assert rho.matrix[0, 0].real == pytest.approx(1.0)
    assert rho.trace == pytest.approx(1.0)


def test_spdc_pair_population_ratios():
    lam = 0.1
    rho = spdc_pair(lam)
    dims = rho.register.dims
    idx = lambda *k: np.ravel_multi_index(k, dims)
    p00 = rho.matrix[idx(0, 0), idx(0, 0)].real
    p11 = rho.matrix[idx(1, 1), idx(1, 1)].real
    p22 = rho.matrix[idx(2, 2), idx(2, 2)].real
    assert p11 / p00 == pytest.approx(lam**2, abs=1e-12)
    assert p22 / p00 == pytest.approx(lam**4, abs=1e-12)


def test_spdc_pair_is_pure():
    assert purity(spdc_pair(0.3)) == pytest.approx(1.0, abs=1e-12)


def test_joint_spdc_vacuum_at_zero_brightness():
    rho = joint_spdc(0.0)
    assert rho.matrix[0, 0].real == pytest.approx(1.0)


def test_joint_spdc_double_pair_amplitude():
    lam = 0.1
    rho = joint_spdc(lam)
    dims = rho.register.dims
    vac = np.ravel_multi_index((0, 0, 0, 0), dims)
    both = np.ravel_multi_index((1, 1, 1, 1), dims)
    # amplitude ratio lam^2 shows up as the coherence over the vacuum weight
    assert rho.matrix[both, vac].real / rho.matrix[vac, vac].real == pytest.approx(lam**2, abs=1e-12)


def test_joint_spdc_exactly_six_kets():
    rho = joint_spdc(0.2)
    dims = rho.register.dims
    allowed = {
        np.ravel_multi_index(k, dims)
        for k in [(0, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 1), (2, 2, 0, 0), (0, 0, 2, 2), (1, 1, 1, 1)]
    }
    diag = np.diagonal(rho.matrix).real
    for i, pop in enumerate(diag):
        if i not in allowed:
            assert pop == 0.0


def test_joint_spdc_matches_retruncated_product():
    # tensor of two independent pairs, re-truncated at total order lam^2,
    # reproduces the joint builder
    lam = 0.25
    reg = joint_spdc(lam).register
    amps = {
        (0, 0, 0, 0): 1.0,
        (1, 1, 0, 0): lam,
        (0, 0, 1, 1): lam,
        (2, 2, 0, 0): lam**2,
        (0, 0, 2, 2): lam**2,
        (1, 1, 1, 1): lam * lam,
    }
    ref = make_pure(reg, amps)
    assert np.max(np.abs(joint_spdc(lam).matrix - ref.matrix)) < 1e-14


def test_atom_photon_limits():
    dark = atom_photon(0.0)
    dims = dark.register.dims
    idx = lambda *k: np.ravel_multi_index(k, dims)
    assert dark.matrix[idx(1, 0), idx(1, 0)].real == pytest.approx(1.0)
    bright = atom_photon(1.0)
    assert bright.matrix[idx(0, 1), idx(0, 1)].real == pytest.approx(1.0)


def test_atom_photon_coherence():
    q = 0.1
    rho = atom_photon(q)
    dims = rho.register.dims
    b1 = np.ravel_multi_index((0, 1), dims)
    d0 = np.ravel_multi_index((1, 0), dims)
    assert rho.matrix[b1, d0].real == pytest.approx(np.sqrt(q * (1 - q)), abs=1e-12)
    assert rho.matrix[b1, d0].real == pytest.approx(0.3, abs=1e-12)


def test_atom_photon_number_expectation():
    for q in (0.0, 0.17, 0.5, 0.93):
        rho = atom_photon(q)
        dims = rho.register.dims
        diag = np.diagonal(rho.matrix).real
        photon_n = np.tile(np.arange(dims[1]), dims[0])
        assert float(np.sum(diag * photon_n)) == pytest.approx(q, abs=1e-12)


def test_ideal_qm_pair_structure():
    rho = ideal_qm_pair()
    dims = rho.register.dims
    i01 = np.ravel_multi_index((0, 1), dims)
    i10 = np.ravel_multi_index((1, 0), dims)
    assert rho.trace == pytest.approx(1.0)
    assert rho.matrix[i01, i01].real == pytest.approx(0.5)
    assert rho.matrix[i10, i10].real == pytest.approx(0.5)
    assert rho.matrix[i01, i10].real == pytest.approx(0.5)


def test_all_builders_pure():
    for rho in (spdc_pair(0.4), joint_spdc(0.4), atom_photon(0.6), ideal_qm_pair()):
        assert purity(rho) == pytest.approx(1.0, abs=1e-12)
