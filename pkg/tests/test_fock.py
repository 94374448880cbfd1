"""Unit tests for the truncated Fock-space engine."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrep.fock import (
    A_ONLY,
    B_ONLY,
    BOTH_PATTERNS,
    DensityOperator,
    DetectorModel,
    ModeRegister,
    ModeSpec,
    beam_splitter,
    condition_single_click,
    loss_channel,
    make_pure,
    normalize,
    partial_trace,
    tensor,
)

HERM_TOL = 1e-12
PSD_TOL = -1e-10


def assert_valid_state(state):
    """Hermiticity, positivity, and trace bounds shared by all outputs."""
    mat = state.matrix
    assert np.max(np.abs(mat - mat.conj().T)) <= HERM_TOL
    assert np.linalg.eigvalsh(mat).min() >= PSD_TOL
    assert -1e-12 <= state.trace <= 1.0 + 1e-12


def two_bosons(cutoff=3):
    return ModeRegister((ModeSpec.boson("x", cutoff), ModeSpec.boson("y", cutoff)))


# ---------------------------------------------------------------- mode plumbing


def test_qubit_mode_dimension_is_two():
    assert ModeSpec.qubit("a").dim == 2


def test_bosonic_cutoff_must_be_positive():
    with pytest.raises(ValueError):
        ModeSpec.boson("a", cutoff=0)


def test_register_rejects_duplicate_labels():
    with pytest.raises(ValueError):
        ModeRegister((ModeSpec.qubit("a"), ModeSpec.boson("a")))


def test_register_dimension_is_product_of_mode_dimensions():
    reg = ModeRegister((ModeSpec.qubit("a"), ModeSpec.boson("b"), ModeSpec.boson("c", 2)))
    assert reg.dim == 2 * 4 * 3
    assert reg.dims == (2, 4, 3)


# ------------------------------------------------------------------- make_pure


def test_make_pure_qubit_basis_state():
    reg = ModeRegister((ModeSpec.qubit("a"),))
    rho = make_pure(reg, {(0,): 1.0})
    assert rho.trace == pytest.approx(1.0)
    assert rho.matrix[0, 0] == pytest.approx(1.0)
    assert_valid_state(rho)


def test_make_pure_equal_superposition_coherence():
    reg = ModeRegister((ModeSpec.boson("a", cutoff=2),))
    rho = make_pure(reg, {(0,): 1.0, (1,): 1.0})
    assert rho.matrix[0, 1] == pytest.approx(0.5)
    assert rho.trace == pytest.approx(1.0)


def test_make_pure_two_mode_squeezed_populations():
    lam = 0.1
    reg = two_bosons(cutoff=2)
    rho = make_pure(reg, {(0, 0): 1.0, (1, 1): lam, (2, 2): lam**2})
    # populations proportional to 1, lam^2, lam^4 regardless of normalization
    p00 = rho.matrix[0, 0].real
    p11 = rho.matrix[np.ravel_multi_index((1, 1), reg.dims), np.ravel_multi_index((1, 1), reg.dims)].real
    p22 = rho.matrix[np.ravel_multi_index((2, 2), reg.dims), np.ravel_multi_index((2, 2), reg.dims)].real
    assert p11 / p00 == pytest.approx(lam**2)
    assert p22 / p00 == pytest.approx(lam**4)
    assert rho.trace == pytest.approx(1.0)


def test_make_pure_rejects_zero_norm():
    reg = ModeRegister((ModeSpec.qubit("a"),))
    with pytest.raises(ValueError):
        make_pure(reg, {(0,): 0.0})


def test_make_pure_rejects_out_of_range_index():
    reg = ModeRegister((ModeSpec.qubit("a"),))
    with pytest.raises(ValueError):
        make_pure(reg, {5: 1.0})
    with pytest.raises(ValueError):
        make_pure(reg, {(3,): 1.0})


# ---------------------------------------------------------------------- tensor


def test_tensor_basis_states():
    a = make_pure(ModeRegister((ModeSpec.qubit("a"),)), {(0,): 1.0})
    b = make_pure(ModeRegister((ModeSpec.qubit("b"),)), {(1,): 1.0})
    ab = tensor(a, b)
    assert ab.register.labels == ("a", "b")
    assert ab.matrix[1, 1] == pytest.approx(1.0)


def test_tensor_trace_multiplies():
    a = make_pure(ModeRegister((ModeSpec.qubit("a"),)), {(0,): 1.0})
    b = make_pure(ModeRegister((ModeSpec.qubit("b"),)), {(0,): 1.0})
    half_a = DensityOperator(a.register, a.matrix * 0.5)
    half_b = DensityOperator(b.register, b.matrix * 0.5)
    assert tensor(half_a, half_b).trace == pytest.approx(0.25)


def test_tensor_rejects_label_collision():
    a = make_pure(ModeRegister((ModeSpec.qubit("a"),)), {(0,): 1.0})
    with pytest.raises(ValueError):
        tensor(a, a)


def test_tensor_six_mode_bookkeeping():
    # atom-photon pair times a two-mode photonic pair: dimensions and trace
    # must come straight from the factors.
    q = 0.3
    ap = make_pure(
        ModeRegister((ModeSpec.qubit("atom"), ModeSpec.boson("ph"))),
        {(1, 0): np.sqrt(1 - q), (0, 1): np.sqrt(q)},
    )
    qm = make_pure(two_bosons(), {(0, 1): 1.0, (1, 0): 1.0})
    joint = tensor(tensor(ap, qm), make_pure(ModeRegister((ModeSpec.qubit("atom2"), ModeSpec.boson("ph2"))), {(1, 0): 1.0}))
    assert joint.register.dim == 2 * 4 * 4 * 4 * 2 * 4
    assert joint.trace == pytest.approx(1.0)
    assert_valid_state(joint)


# --------------------------------------------------------------- beam splitter


def test_beam_splitter_single_photon_splits_evenly():
    reg = two_bosons()
    rho = make_pure(reg, {(1, 0): 1.0})
    out = beam_splitter(rho, "x", "y")
    expected = make_pure(reg, {(1, 0): 1.0, (0, 1): 1.0})
    assert np.max(np.abs(out.matrix - expected.matrix)) < 1e-12
    assert_valid_state(out)


def test_beam_splitter_hong_ou_mandel_bunching():
    reg = two_bosons()
    rho = make_pure(reg, {(1, 1): 1.0})
    out = beam_splitter(rho, "x", "y")
    expected = make_pure(reg, {(2, 0): 1.0, (0, 2): -1.0})
    assert np.max(np.abs(out.matrix - expected.matrix)) < 1e-12


def test_beam_splitter_vacuum_fixed_point():
    reg = two_bosons()
    rho = make_pure(reg, {(0, 0): 1.0})
    out = beam_splitter(rho, "x", "y")
    assert np.max(np.abs(out.matrix - rho.matrix)) < 1e-14


def test_beam_splitter_swapped_arguments_invert():
    reg = two_bosons()
    rho = make_pure(reg, {(1, 0): 0.6, (0, 1): 0.8j, (1, 1): 0.3, (0, 0): 0.1})
    back = beam_splitter(beam_splitter(rho, "x", "y"), "y", "x")
    assert np.max(np.abs(back.matrix - rho.matrix)) < 1e-12


def test_beam_splitter_preserves_photon_number_sectors():
    reg = two_bosons()
    mixed = DensityOperator(
        reg,
        0.5 * make_pure(reg, {(1, 0): 1.0}).matrix + 0.5 * make_pure(reg, {(1, 1): 1.0}).matrix,
    )
    out = beam_splitter(mixed, "x", "y")
    totals = np.add.outer(np.arange(4), np.arange(4)).ravel()
    diag = np.diagonal(out.matrix).real
    for n, weight in ((1, 0.5), (2, 0.5)):
        assert diag[totals == n].sum() == pytest.approx(weight)
    assert out.trace == pytest.approx(1.0)


def test_beam_splitter_rejects_atomic_mode():
    reg = ModeRegister((ModeSpec.qubit("a"), ModeSpec.boson("y")))
    rho = make_pure(reg, {(0, 0): 1.0})
    with pytest.raises(ValueError):
        beam_splitter(rho, "a", "y")


def test_beam_splitter_rejects_cutoff_overflow():
    reg = two_bosons()
    rho = make_pure(reg, {(3, 1): 1.0})
    with pytest.raises(ValueError):
        beam_splitter(rho, "x", "y")
    rho2 = make_pure(reg, {(2, 2): 1.0})
    with pytest.raises(ValueError):
        beam_splitter(rho2, "x", "y")


# ---------------------------------------------------------------- loss channel


def test_loss_channel_zero_is_identity():
    reg = two_bosons()
    rho = make_pure(reg, {(2, 1): 1.0, (0, 0): 0.5})
    out = loss_channel(rho, "x", 0.0)
    assert np.max(np.abs(out.matrix - rho.matrix)) < 1e-14


def test_loss_channel_single_photon():
    eps = 0.37
    reg = ModeRegister((ModeSpec.boson("x"),))
    out = loss_channel(make_pure(reg, {(1,): 1.0}), "x", eps)
    assert out.matrix[1, 1].real == pytest.approx(1 - eps)
    assert out.matrix[0, 0].real == pytest.approx(eps)
    assert out.trace == pytest.approx(1.0)


def test_loss_channel_two_photon_binomial():
    eps = 0.2
    reg = ModeRegister((ModeSpec.boson("x"),))
    out = loss_channel(make_pure(reg, {(2,): 1.0}), "x", eps)
    assert out.matrix[2, 2].real == pytest.approx((1 - eps) ** 2)
    assert out.matrix[1, 1].real == pytest.approx(2 * eps * (1 - eps))
    assert out.matrix[0, 0].real == pytest.approx(eps**2)


def test_loss_channel_full_loss_gives_vacuum():
    reg = two_bosons()
    rho = make_pure(reg, {(3, 2): 1.0, (1, 0): 1.0})
    out = loss_channel(loss_channel(rho, "x", 1.0), "y", 1.0)
    assert out.matrix[0, 0].real == pytest.approx(1.0)
    assert out.trace == pytest.approx(1.0)


def test_loss_channel_rejects_bad_epsilon():
    reg = ModeRegister((ModeSpec.boson("x"),))
    rho = make_pure(reg, {(0,): 1.0})
    with pytest.raises(ValueError):
        loss_channel(rho, "x", -0.1)
    with pytest.raises(ValueError):
        loss_channel(rho, "x", 1.1)


# ------------------------------------------------------- single-click patterns


def test_condition_click_certain_single_photon():
    # spectator qubit checks that non-detector modes pass through unchanged
    spect = make_pure(ModeRegister((ModeSpec.qubit("s"),)), {(0,): 0.6, (1,): 0.8})
    det = make_pure(two_bosons(), {(1, 0): 1.0})
    state = tensor(spect, det)
    out, p = condition_single_click(state, "x", "y", DetectorModel.THRESHOLD, A_ONLY)
    assert p == pytest.approx(1.0)
    assert out.register.labels == ("s",)
    assert np.max(np.abs(out.matrix - spect.matrix)) < 1e-12


def test_condition_click_pnr_rejects_bunched_pair():
    det = make_pure(two_bosons(), {(2, 0): 1.0})
    _, p = condition_single_click(det, "x", "y", DetectorModel.PNR, A_ONLY)
    assert p == pytest.approx(0.0)
    # a threshold detector accepts the same event
    _, p_thr = condition_single_click(det, "x", "y", DetectorModel.THRESHOLD, A_ONLY)
    assert p_thr == pytest.approx(1.0)


def test_condition_click_both_patterns_sums_probability():
    reg = two_bosons()
    rho = make_pure(reg, {(1, 0): 1.0, (0, 1): 1.0})
    out_a, p_a = condition_single_click(rho, "x", "y", DetectorModel.THRESHOLD, A_ONLY)
    out_b, p_b = condition_single_click(rho, "x", "y", DetectorModel.THRESHOLD, B_ONLY)
    out_ab, p_ab = condition_single_click(rho, "x", "y", DetectorModel.THRESHOLD, BOTH_PATTERNS)
    assert p_ab == pytest.approx(p_a + p_b)
    assert out_ab.trace == pytest.approx(p_ab)
    # canonical A-pattern state scaled to the requested probability
    assert np.max(np.abs(out_b.matrix - out_a.matrix * (p_b / p_a))) < 1e-12


def test_condition_click_threshold_patterns_complete():
    # A-only, B-only, both-click, and no-click weights must exhaust the state.
    reg = two_bosons()
    rho = make_pure(reg, {(0, 0): 0.4, (1, 0): 0.5, (0, 2): 0.3, (1, 1): 0.2, (2, 1): 0.1})
    _, p_a = condition_single_click(rho, "x", "y", DetectorModel.THRESHOLD, A_ONLY)
    _, p_b = condition_single_click(rho, "x", "y", DetectorModel.THRESHOLD, B_ONLY)
    diag = np.diagonal(rho.matrix).real
    n_x = np.repeat(np.arange(4), 4)
    n_y = np.tile(np.arange(4), 4)
    p_none = diag[(n_x == 0) & (n_y == 0)].sum()
    p_both = diag[(n_x > 0) & (n_y > 0)].sum()
    assert p_a + p_b + p_none + p_both == pytest.approx(1.0, abs=1e-10)


def test_condition_click_unknown_selector_rejected():
    rho = make_pure(two_bosons(), {(1, 0): 1.0})
    with pytest.raises(ValueError):
        condition_single_click(rho, "x", "y", DetectorModel.THRESHOLD, "C-only")


def test_condition_click_probability_relative_to_input_trace():
    rho = make_pure(two_bosons(), {(1, 0): 1.0})
    scaled = DensityOperator(rho.register, rho.matrix * 0.25)
    out, p = condition_single_click(scaled, "x", "y", DetectorModel.THRESHOLD, A_ONLY)
    assert p == pytest.approx(1.0)
    assert out.trace == pytest.approx(0.25)


# --------------------------------------------------------------- partial trace


def test_partial_trace_bell_pair_marginal_is_mixed():
    reg = ModeRegister((ModeSpec.qubit("a"), ModeSpec.qubit("b")))
    bell = make_pure(reg, {(0, 1): 1.0, (1, 0): 1.0})
    red = partial_trace(bell, {"b"})
    assert np.max(np.abs(red.matrix - np.eye(2) / 2)) < 1e-12


def test_partial_trace_empty_drop_is_identity():
    rho = make_pure(two_bosons(), {(1, 0): 1.0, (0, 1): 1.0j})
    out = partial_trace(rho, set())
    assert np.max(np.abs(out.matrix - rho.matrix)) < 1e-15


def test_partial_trace_recovers_tensor_factors():
    a = make_pure(ModeRegister((ModeSpec.qubit("a"),)), {(0,): 1.0, (1,): 1.0j})
    b = make_pure(ModeRegister((ModeSpec.boson("b"),)), {(0,): 1.0, (2,): -0.5})
    ab = tensor(a, b)
    assert np.max(np.abs(partial_trace(ab, {"b"}).matrix - a.matrix)) < 1e-12
    assert np.max(np.abs(partial_trace(ab, {"a"}).matrix - b.matrix)) < 1e-12


def test_partial_trace_unknown_label_rejected():
    rho = make_pure(two_bosons(), {(0, 0): 1.0})
    with pytest.raises(KeyError):
        partial_trace(rho, {"nope"})


def test_partial_trace_preserves_trace_and_order():
    reg = ModeRegister((ModeSpec.qubit("a"), ModeSpec.boson("b"), ModeSpec.qubit("c")))
    rho = make_pure(reg, {(0, 1, 1): 1.0, (1, 0, 0): 2.0})
    out = partial_trace(rho, {"b"})
    assert out.register.labels == ("a", "c")
    assert out.trace == pytest.approx(rho.trace)


# ------------------------------------------------------------------- normalize


def test_normalize_returns_original_trace():
    rho = make_pure(two_bosons(), {(1, 0): 1.0})
    scaled = DensityOperator(rho.register, rho.matrix * 0.5)
    out, t = normalize(scaled)
    assert t == pytest.approx(0.5)
    assert out.trace == pytest.approx(1.0)


def test_normalize_identity_on_unit_trace():
    rho = make_pure(two_bosons(), {(1, 0): 1.0})
    out, t = normalize(rho)
    assert t == pytest.approx(1.0)
    assert np.max(np.abs(out.matrix - rho.matrix)) < 1e-12


def test_normalize_rejects_zero_trace():
    reg = ModeRegister((ModeSpec.qubit("a"),))
    zero = DensityOperator(reg, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        normalize(zero)


# ------------------------------------------------------------- property tests


@st.composite
def bounded_two_mode_states(draw):
    """Random pure two-boson states with at most three photons in total."""
    keys = [(i, j) for i in range(4) for j in range(4) if i + j <= 3]
    amps = {}
    for key in keys:
        re = draw(st.integers(min_value=-3, max_value=3))
        im = draw(st.integers(min_value=-3, max_value=3))
        if re or im:
            amps[key] = complex(re, im)
    if not amps:
        amps[(0, 0)] = 1.0
    return make_pure(two_bosons(), amps)


@given(bounded_two_mode_states())
@settings(max_examples=60, deadline=None)
def test_property_beam_splitter_round_trip(rho):
    back = beam_splitter(beam_splitter(rho, "x", "y"), "y", "x")
    assert np.max(np.abs(back.matrix - rho.matrix)) < 1e-12
    assert_valid_state(beam_splitter(rho, "x", "y"))


@given(bounded_two_mode_states(), st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=60, deadline=None)
def test_property_loss_channel_trace_preserving(rho, eps):
    out = loss_channel(rho, "x", eps)
    assert abs(out.trace - rho.trace) <= 1e-12
    assert_valid_state(out)


@given(bounded_two_mode_states(), st.sampled_from([DetectorModel.THRESHOLD, DetectorModel.PNR]))
@settings(max_examples=60, deadline=None)
def test_property_click_probabilities_bounded(rho, det):
    out, p = condition_single_click(rho, "x", "y", det, BOTH_PATTERNS)
    assert -1e-12 <= p <= 1.0 + 1e-12
    assert out.trace == pytest.approx(p, abs=1e-10)
    if p > 1e-9:
        assert_valid_state(normalize(out)[0])
