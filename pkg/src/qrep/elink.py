"""Elementary-link pipelines and their closed-form counterparts.

Two architectures produce heralded two-qubit entanglement between neighboring
processing nodes. The atom-based baseline interferes the emission of two
remote atoms directly. The hybrid link first heralds entanglement between two
absorptive memories fed by SPDC sources, then loads each memory photon onto a
local atom through a second interference step. Both pipelines run on the
truncated Fock engine and return the conditioned atomic state together with
every stage probability.

The closed-form evaluators (``analytic_*``) reproduce the same states from
polynomial expressions in the brightness and loss parameters. They were
derived independently of the procedural pipelines, so agreement between the
two routes is a meaningful cross-check and is enforced in the test suite; the
two implementations must stay independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import (
    BOTH_PATTERNS,
    CUTOFF,
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
from .states import SourceParams, atom_photon, joint_spdc


@dataclass(frozen=True)
class TwoQubitState:
    """Two-qubit density matrix in the basis {BB, BD, DB, DD}, B encoding 0."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (4, 4):
            raise ValueError(f"two-qubit matrix must be 4x4, got {mat.shape}")
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class LossParams:
    """Loss probabilities of one elementary link plus the efficiencies behind them.

    ``epsilon_r`` is the per-arm transmission loss to the midpoint swapper and
    ``epsilon_l`` the local loss shared by memory readout and frequency
    conversion. The eta fields record the hardware efficiencies those epsilons
    are derived from when a link is built for a concrete distance; the rate
    layer owns that derivation.
    """

    epsilon_r: float
    epsilon_l: float
    eta_qfc: float = 1.0
    eta_qm: float = 1.0
    eta_fiber_db_per_km: float = 0.3

    def __post_init__(self) -> None:
        for name in ("epsilon_r", "epsilon_l", "eta_qfc", "eta_qm"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.eta_fiber_db_per_km < 0.0:
            raise ValueError("fiber attenuation cannot be negative")


@dataclass(frozen=True)
class ElinkResult:
    """Conditioned link state with the probabilities of each heralding stage.

    ``p_remote_click`` is the success probability of the midpoint swap per
    emitted mode pair, ``p_load`` the joint click probability of both loading
    swappers given a heralded memory pair, and ``p_el`` their product. The
    atom-based link has no loading stage, so there ``p_load`` is one.
    """

    state: TwoQubitState
    p_remote_click: float
    p_load: float
    p_el: float


def _interfere_and_click(
    state: DensityOperator,
    click_port: str,
    partner: str,
    detector: DetectorModel,
    which: str,
) -> tuple[DensityOperator, float]:
    # The splitter routes the positive-phase superposition of its two inputs
    # onto the port named second, so listing the click port there makes the
    # accepted A pattern herald the canonical-phase state.
    mixed = beam_splitter(state, partner, click_port)
    return condition_single_click(mixed, click_port, partner, detector, which)


def _two_qubit(state: DensityOperator) -> TwoQubitState:
    if state.register.dim != 4:
        raise ValueError("expected a register reduced to the two atomic qubits")
    return TwoQubitState(state.matrix)


def _heralded_memory_pair(
    lam: float, epsilon_r: float, detector: DetectorModel, which: str
) -> tuple[DensityOperator, float]:
    """Remote-swap stage: returns the normalized memory pair and its click probability."""
    state = joint_spdc(lam)
    state = loss_channel(state, "s1", epsilon_r)
    state = loss_channel(state, "s2", epsilon_r)
    conditioned, p_click = _interfere_and_click(state, "s1", "s2", detector, which)
    if p_click <= 0.0:
        raise ValueError("remote swap herald has zero probability; check brightness")
    heralded, _ = normalize(conditioned)
    return heralded, p_click


def _load_one_side(
    state: DensityOperator,
    memory_mode: str,
    atom_label: str,
    photon_label: str,
    q: float,
    epsilon_l: float,
    detector: DetectorModel,
    which: str,
) -> DensityOperator:
    state = loss_channel(state, memory_mode, epsilon_l)
    state = tensor(state, atom_photon(q, atom=atom_label, photon=photon_label))
    state = loss_channel(state, photon_label, epsilon_l)
    conditioned, _ = condition_single_click(
        beam_splitter(state, memory_mode, photon_label),
        photon_label,
        memory_mode,
        detector,
        which,
    )
    return conditioned


def _load_both_sides(
    qm_pair: DensityOperator,
    q: float,
    epsilon_l: float,
    detector: DetectorModel,
    which: str = BOTH_PATTERNS,
) -> DensityOperator:
    """Loading stage: unnormalized atom-atom state, trace = joint click probability."""
    left, right = qm_pair.register.labels
    state = _load_one_side(qm_pair, left, "atom1", "ph1", q, epsilon_l, detector, which)
    state = _load_one_side(state, right, "atom2", "ph2", q, epsilon_l, detector, which)
    return state


def hybrid_raw_elink(
    src: SourceParams,
    loss: LossParams,
    detector: DetectorModel,
    which: str = BOTH_PATTERNS,
) -> ElinkResult:
    """Full hybrid elementary link: remote memory swap followed by loading.

    Stages: joint SPDC emission, remote loss on both signal arms, midpoint
    interference and single-click heralding, memory readout loss, local
    interference of each memory photon with a fresh atomic emission, and joint
    conditioning on both loading clicks. The returned state lives on the two
    atoms in the basis {BB, BD, DB, DD}.

    Raises
    ------
    ValueError
        If any heralding stage has zero probability, which signals degenerate
        parameters such as zero SPDC brightness.
    """
    qm_pair, p_remote = _heralded_memory_pair(src.lam, loss.epsilon_r, detector, which)
    loaded = _load_both_sides(qm_pair, src.q, loss.epsilon_l, detector, which)
    if loaded.trace <= 0.0:
        raise ValueError("loading stage has zero click probability")
    final, p_load = normalize(loaded)
    return ElinkResult(
        state=_two_qubit(final),
        p_remote_click=p_remote,
        p_load=p_load,
        p_el=p_remote * p_load,
    )


def atom_elink(
    q: float,
    loss: LossParams,
    detector: DetectorModel,
    which: str = BOTH_PATTERNS,
) -> ElinkResult:
    """Atom-based elementary link: two emitted photons meet at a midpoint swapper.

    ``loss.epsilon_r`` must already include the frequency-conversion loss of
    this architecture on top of the fiber transmission.
    """
    state = tensor(
        atom_photon(q, atom="atom1", photon="ph1"),
        atom_photon(q, atom="atom2", photon="ph2"),
    )
    state = loss_channel(state, "ph1", loss.epsilon_r)
    state = loss_channel(state, "ph2", loss.epsilon_r)
    conditioned, p_click = _interfere_and_click(state, "ph1", "ph2", detector, which)
    if p_click <= 0.0:
        raise ValueError("swap herald has zero probability; check brightness")
    final, _ = normalize(conditioned)
    return ElinkResult(
        state=_two_qubit(final), p_remote_click=p_click, p_load=1.0, p_el=p_click
    )


def _controlled_emission(
    state: DensityOperator, atom_label: str, photon_label: str
) -> DensityOperator:
    """Re-pump step: the bright atomic level emits one photon into an empty mode.

    Unitary on (atom, photon): identity when the atom is dark, photon-number
    flip 0<->1 (and 2<->3 to complete the unitary) when it is bright. The
    photon mode is freshly added in vacuum, so only the 0->1 branch acts.
    """
    reg = state.register
    dims = reg.dims
    pos_atom = reg.position(atom_label)
    pos_photon = reg.position(photon_label)
    if reg.modes[pos_photon].kind != "bosonic":
        raise ValueError("emission target must be a bosonic mode")
    atom_digit = _digits(dims, pos_atom)
    photon_digit = _digits(dims, pos_photon)
    stride = int(np.prod(dims[pos_photon + 1:], dtype=int)) if pos_photon + 1 < len(dims) else 1
    # XOR with 1 on the photon digit, applied only where the atom is bright (0)
    delta = np.where(atom_digit == 0, (1 - 2 * (photon_digit % 2)) * stride, 0)
    perm = np.arange(reg.dim) + delta
    mat = state.matrix[np.ix_(perm, perm)]
    return DensityOperator(reg, mat)


def _digits(dims: tuple[int, ...], pos: int) -> np.ndarray:
    stride = int(np.prod(dims[pos + 1:], dtype=int)) if pos + 1 < len(dims) else 1
    return (np.arange(int(np.prod(dims, dtype=int))) // stride) % dims[pos]


def _flip_both(state: TwoQubitState) -> TwoQubitState:
    # X tensor X permutes the basis to {DD, DB, BD, BB}
    x2 = np.array([[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=float)
    return TwoQubitState(x2 @ state.matrix @ x2)


def re_trick(
    raw: ElinkResult,
    src: SourceParams,
    loss: LossParams,
    detector: DetectorModel,
    which: str = BOTH_PATTERNS,
) -> ElinkResult:
    """Re-emission round: flip both atoms, re-pump, and interfere again.

    ``raw`` is the completed first-round link. A fresh heralded memory pair
    with the same source and loss parameters supplies the second interference
    partner; conditioning on both loading clicks replaces the link state. The
    returned probabilities describe the retry round alone: ``p_remote_click``
    for the fresh memory herald and ``p_load`` for the joint re-load clicks.
    """
    flipped = _flip_both(raw.state)
    atoms = DensityOperator(
        ModeRegister((ModeSpec.qubit("atom1"), ModeSpec.qubit("atom2"))), flipped.matrix
    )
    qm_pair, p_remote = _heralded_memory_pair(src.lam, loss.epsilon_r, detector, which)
    state = tensor(atoms, qm_pair)
    state = _reemit_one_side(state, "atom1", "i1", "ph1", loss.epsilon_l, detector, which)
    state = _reemit_one_side(state, "atom2", "i2", "ph2", loss.epsilon_l, detector, which)
    if state.trace <= 0.0:
        raise ValueError("re-emission round has zero click probability")
    final, p_retry = normalize(state)
    return ElinkResult(
        state=_two_qubit(final),
        p_remote_click=p_remote,
        p_load=p_retry,
        p_el=p_remote * p_retry,
    )


def _reemit_one_side(
    state: DensityOperator,
    atom_label: str,
    memory_mode: str,
    photon_label: str,
    epsilon_l: float,
    detector: DetectorModel,
    which: str,
) -> DensityOperator:
    state = loss_channel(state, memory_mode, epsilon_l)
    vacuum = make_pure(ModeRegister((ModeSpec.boson(photon_label),)), {(0,): 1.0})
    state = tensor(state, vacuum)
    state = _controlled_emission(state, atom_label, photon_label)
    state = loss_channel(state, photon_label, epsilon_l)
    conditioned, _ = condition_single_click(
        beam_splitter(state, memory_mode, photon_label),
        photon_label,
        memory_mode,
        detector,
        which,
    )
    return conditioned


def fidelity_psi_plus(state: TwoQubitState) -> float:
    """Overlap with the target Bell state (|BD> + |DB>)/sqrt(2)."""
    m = state.matrix
    return float((m[1, 1] + m[2, 2] + m[1, 2] + m[2, 1]).real / 2.0)


# --------------------------------------------------------------- closed forms
#
# Polynomial density-matrix entries for each strategy, written out exactly as
# derived. Only the lower triangle is stated; the builders mirror it.


def _assemble(
    rho00: float, rho11: float, rho21: float, rho22: float, rho33: float
) -> TwoQubitState:
    mat = np.zeros((4, 4), dtype=complex)
    mat[0, 0] = rho00
    mat[1, 1] = rho11
    mat[2, 1] = rho21
    mat[1, 2] = np.conjugate(rho21)
    mat[2, 2] = rho22
    mat[3, 3] = rho33
    return TwoQubitState(mat)


def analytic_raw(q: float, lam: float, epsilon_r: float, epsilon_l: float) -> TwoQubitState:
    """Closed-form hybrid link state with threshold detectors everywhere."""
    er, el = epsilon_r, epsilon_l
    l2 = lam**2
    n_raw = (
        l2
        * (
            19 * er * el**2 * q**2
            - 6 * er * el * q**2
            + 26 * er * el * q
            + 3 * er * q**2
            + 6 * er * q
            + 4 * er
            + 9 * el**2 * q**2
            - 2 * el * q**2
            + 14 * el * q
            + q**2
            + 2 * q
            + 4
        )
        + 8 * el * q**2
        + 8 * q
    )
    if n_raw <= 0.0:
        raise ValueError("vanishing normalization; parameters are degenerate")
    rho00 = q**2 * (
        l2 * (19 * er * el**2 + 20 * er * el + 13 * er + 9 * el**2 + 12 * el + 7)
        + 8 * el
        + 8
    )
    rho11 = q * (
        l2
        * (
            -13 * er * el * q
            + 13 * er * el
            - 7 * er * q
            + 7 * er
            - 7 * el * q
            + 7 * el
            - 5 * q
            + 5
        )
        - 4 * q
        + 4
    )
    rho21 = 4 * q * (
        l2 * (-er * el * q + er * el - er * q + er - el * q + el - q + 1) - q + 1
    )
    rho33 = 4 * l2 * (er * q**2 - 2 * er * q + er + q**2 - 2 * q + 1)
    return _assemble(rho00 / n_raw, rho11 / n_raw, rho21 / n_raw, rho11 / n_raw, rho33 / n_raw)


def analytic_pnr(q: float, lam: float, epsilon_r: float, epsilon_l: float) -> TwoQubitState:
    """Closed-form hybrid link state with number-resolving detectors everywhere."""
    er, el = epsilon_r, epsilon_l
    l2 = lam**2
    n_pnr = (
        l2
        * (
            10 * er * el**2 * q**2
            - 8 * er * el * q**2
            + 8 * er * el * q
            + er * q**2
            - 2 * er * q
            + er
        )
        + 2 * el * q**2
        - q**2
        + q
    )
    if n_pnr <= 0.0:
        raise ValueError("vanishing normalization; parameters are degenerate")
    rho00 = 2 * el * q**2 * (5 * l2 * er * el + 1)
    rho11 = q * (l2 * (-8 * er * el * q + 8 * er * el) - q + 1) / 2.0
    rho21 = q * (l2 * (-4 * er * el * q + 4 * er * el) - q + 1) / 2.0
    rho33 = l2 * er * (q**2 - 2 * q + 1)
    return _assemble(
        rho00 / n_pnr, rho11 / n_pnr, rho21 / n_pnr, rho11 / n_pnr, rho33 / n_pnr
    )


def analytic_epl(raw: TwoQubitState) -> TwoQubitState:
    """Post-distillation state in terms of the input link's matrix entries."""
    m = raw.matrix
    n_epl = 2.0 * (m[0, 0] * m[3, 3] + m[1, 1] * m[2, 2]).real
    if n_epl <= 0.0:
        raise ValueError("distillation has zero success probability on this input")
    rho00 = (m[0, 0] * m[3, 3]).real
    rho11 = (m[1, 1] * m[2, 2]).real
    rho21 = m[1, 2] * m[2, 1]
    return _assemble(rho00 / n_epl, rho11 / n_epl, rho21 / n_epl, rho11 / n_epl, rho00 / n_epl)


def analytic_re(
    raw: TwoQubitState, lam: float, epsilon_r: float, epsilon_l: float
) -> TwoQubitState:
    """Post-re-emission state in terms of the input link's matrix entries."""
    er, el = epsilon_r, epsilon_l
    l2 = lam**2
    m = raw.matrix
    r00, r11, r22, r33 = (m[i, i].real for i in range(4))
    r12 = m[1, 2]
    emission_poly = 13 * er * el + 7 * er + 7 * el + 5
    heavy_poly = 19 * er * el**2 + 20 * er * el + 13 * er + 9 * el**2 + 12 * el + 7
    b = 4 * r00 * (er + 1) + emission_poly * (r11 + r22) + heavy_poly * r33
    n_re = 4 * r11 + 4 * r22 + 8 * r33 * (el + 1) + l2 * b
    if n_re <= 0.0:
        raise ValueError("vanishing normalization; parameters are degenerate")
    rho00 = 8 * r33 * (el + 1) + l2 * heavy_poly * r33
    rho11 = r22 * (4 + l2 * emission_poly)
    rho21 = np.conjugate(r12) * (4 + 4 * l2 * (er * el + er + el + 1))
    rho22 = r11 * (4 + l2 * emission_poly)
    rho33 = 4 * l2 * r00 * (er + 1)
    return _assemble(
        rho00 / n_re, rho11 / n_re, rho21 / n_re, rho22 / n_re, rho33 / n_re
    )


def analytic_pnr_epl(lam: float, epsilon_r: float, epsilon_l: float) -> TwoQubitState:
    """Distilled number-resolved link; independent of the emitter brightness."""
    x = lam**2 * epsilon_r * epsilon_l
    if 8.0 * x > 0.5 + 1e-12:
        raise ValueError("printed entries lose positivity outside 8 lam^2 er el <= 1/2")
    return _assemble(4 * x, 0.5 - 4 * x, 0.5 - 8 * x, 0.5 - 4 * x, 4 * x)
