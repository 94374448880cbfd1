"""Analytical timing, probability, and rate model of the repeater chain.

All durations are microseconds and all rates are per second. The model follows
the staged structure of the protocols: per-attempt click probabilities come
from the link pipelines, multiplexing converts them to per-round success
probabilities, a coupon-collector expectation gives the time until every
segment of the chain holds a distilled link, and one deterministic merge
finishes the end-to-end state.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, log2

from .elink import ElinkResult, LossParams, TwoQubitState, atom_elink, fidelity_psi_plus
from .fock import BOTH_PATTERNS, DetectorModel
from .qproc import epl

#: index vectors of the diagonal-basis error outcomes for the phase QBER
_PLUS_MINUS = (0.5, -0.5, 0.5, -0.5)
_MINUS_PLUS = (0.5, 0.5, -0.5, -0.5)

#: numerical slack on probabilities assembled from inexact matrix arithmetic
_PROB_SLACK = 1e-9


def _clip_probability(p: float) -> float:
    if -_PROB_SLACK <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + _PROB_SLACK:
        return 1.0
    return p


@dataclass(frozen=True)
class HardwareParams:
    """Hardware and protocol constants, defaulting to the studied setup.

    ``n_mul`` is the total multiplexing budget of the hybrid source, split as
    ``n_temp`` temporal times ``n_freq`` frequency modes. The atom baseline
    multiplexes over ``n_atom`` emitters instead.
    """

    c_fiber: float = 0.2
    fiber_loss_db_per_km: float = 0.3
    t_atom: float = 100.0
    t_spdc: float = 1.0
    t_meas: float = 100.0
    t_cnot: float = 100.0
    n_atom: int = 2
    n_mul: int = 1000
    eta_qfc: float = 1.0
    eta_qm: float = 1.0
    n_temp: int = 10
    n_freq: int = 100
    lam: float = 0.1
    q: float = 0.1
    f_threshold: float = 0.95

    def __post_init__(self) -> None:
        for name in ("c_fiber", "t_atom", "t_spdc", "t_meas", "t_cnot"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.fiber_loss_db_per_km < 0.0:
            raise ValueError("fiber attenuation cannot be negative")
        for name in ("eta_qfc", "eta_qm", "f_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0.0 <= self.lam < 1.0:
            raise ValueError("SPDC brightness must lie in [0, 1)")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("emitter brightness must lie in [0, 1]")
        for name in ("n_atom", "n_mul", "n_temp", "n_freq"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.n_temp * self.n_freq != self.n_mul:
            raise ValueError(
                "temporal and frequency modes must multiply to the total "
                f"multiplexing budget: {self.n_temp} * {self.n_freq} != {self.n_mul}"
            )


@dataclass(frozen=True)
class TimingBreakdown:
    """Stage durations in microseconds.

    The memory stages ``t_qm_try`` and ``t_load`` exist only in the hybrid
    architecture and are zero for the atom baseline.
    """

    t_signal: float
    t_el_try: float
    t_ed: float
    t_el_d: float
    t_merge: float
    t_qm_try: float
    t_load: float
    expected_t_el_d_all: float
    expected_t_end: float


@dataclass(frozen=True)
class ProbabilityBreakdown:
    """Success probabilities of each protocol stage.

    ``p_click`` is per attempt (per frequency mode for the hybrid link),
    ``p_click_temp`` per temporal mode after frequency multiplexing, ``p_el``
    the full elementary-link probability per temporal attempt, ``p_el_2`` the
    chance that one round yields the two pairs distillation needs, and
    ``p_el_d = p_el_2 * p_ed`` the per-round distilled-link probability.
    """

    p_click: float
    p_click_temp: float
    p_el: float
    p_el_2: float
    p_ed: float
    p_el_d: float


@dataclass(frozen=True)
class KeyRateResult:
    """Secret-key throughput of one configuration."""

    r_rep: float
    p_bit: float
    p_phase: float
    r_sec: float
    r_key: float
    fidelity: float


def arm_transmission(distance_between_qpus_km: float, params: HardwareParams) -> float:
    """Fiber transmission of one arm; the swapper sits at the midpoint."""
    if distance_between_qpus_km < 0.0:
        raise ValueError("distance cannot be negative")
    arm_km = distance_between_qpus_km / 2.0
    return 10.0 ** (-params.fiber_loss_db_per_km * arm_km / 10.0)


def expected_max_geometric_rounds(n_segments: int, p: float) -> float:
    """Expected rounds until every one of ``n_segments`` geometric trials succeeds.

    Inclusion-exclusion over the segment maxima gives the finite sum
    sum_j (-1)^(j+1) C(n, j) / (1 - (1-p)^j).
    """
    if n_segments < 1:
        raise ValueError("need at least one segment")
    if not 0.0 < p <= 1.0:
        raise ValueError("per-round probability must lie in (0, 1]")
    return sum(
        (-1.0) ** (j + 1) * comb(n_segments, j) / (1.0 - (1.0 - p) ** j)
        for j in range(1, n_segments + 1)
    )


def p_at_least_two(p: float, n_attempts: int) -> float:
    """Probability that at least two of ``n_attempts`` independent tries succeed."""
    if n_attempts < 2:
        raise ValueError("at least two attempts are required")
    if not 0.0 <= p <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    miss = (1.0 - p) ** n_attempts
    one_hit = n_attempts * p * (1.0 - p) ** (n_attempts - 1)
    return 1.0 - miss - one_hit


def _chain_expectation(
    t_el_d: float, p_el_d: float, n_qpu: int, t_merge: float
) -> tuple[float, float]:
    if p_el_d <= 0.0:
        raise ValueError("distilled-link probability vanished; no finite rate exists")
    expected_all = t_el_d * expected_max_geometric_rounds(n_qpu - 1, p_el_d)
    return expected_all, expected_all + t_merge


def atom_timing(
    params: HardwareParams,
    d_qpu_km: float,
    n_qpu: int,
    detector: DetectorModel = DetectorModel.THRESHOLD,
    which: str = BOTH_PATTERNS,
    link: ElinkResult | None = None,
) -> tuple[TimingBreakdown, ProbabilityBreakdown]:
    """Timing and probability stack of the atom-based repeater.

    Each round drives ``n_atom`` emitters per segment, distills the two
    heralded pairs, and repeats until every segment between the ``n_qpu``
    processing nodes holds a distilled link. ``link`` may carry a precomputed
    elementary-link result to avoid re-running the pipeline.
    """
    if n_qpu < 2:
        raise ValueError("a chain needs at least two processing nodes")
    t_signal = d_qpu_km / params.c_fiber
    if link is None:
        epsilon_r = 1.0 - params.eta_qfc * arm_transmission(d_qpu_km, params)
        link = atom_elink(
            params.q,
            LossParams(
                epsilon_r=epsilon_r,
                epsilon_l=0.0,
                eta_qfc=params.eta_qfc,
                eta_qm=params.eta_qm,
                eta_fiber_db_per_km=params.fiber_loss_db_per_km,
            ),
            detector,
            which,
        )
    p_click = link.p_el
    p_el_2 = p_at_least_two(p_click, params.n_atom)
    p_ed = epl(link.state, link.state).p_success
    p_el_d = p_el_2 * p_ed

    t_el_try = params.n_atom * params.t_atom + t_signal
    t_ed = params.t_cnot + params.t_meas + t_signal
    t_el_d = t_el_try + t_ed
    t_merge = params.t_cnot + params.t_meas + (n_qpu - 1) * t_signal
    expected_all, expected_end = _chain_expectation(t_el_d, p_el_d, n_qpu, t_merge)

    timing = TimingBreakdown(
        t_signal=t_signal,
        t_el_try=t_el_try,
        t_ed=t_ed,
        t_el_d=t_el_d,
        t_merge=t_merge,
        t_qm_try=0.0,
        t_load=0.0,
        expected_t_el_d_all=expected_all,
        expected_t_end=expected_end,
    )
    probs = ProbabilityBreakdown(
        p_click=p_click,
        p_click_temp=p_click,
        p_el=p_click,
        p_el_2=p_el_2,
        p_ed=p_ed,
        p_el_d=p_el_d,
    )
    return timing, probs


def hybrid_timing(
    params: HardwareParams,
    d_qpu_km: float,
    n_qpu: int,
    elink: ElinkResult,
) -> tuple[TimingBreakdown, ProbabilityBreakdown]:
    """Timing and probability stack of the hybrid repeater.

    ``elink`` carries the per-frequency-mode herald probability, the loading
    probability, and the conditioned state produced by the link pipeline.
    Frequency multiplexing boosts the herald chance per temporal mode, the
    loading time is bounded by reading out every temporal mode, and the rest
    of the round structure matches the atom baseline.
    """
    if n_qpu < 2:
        raise ValueError("a chain needs at least two processing nodes")
    if params.n_temp < 2:
        raise ValueError("distillation needs at least two temporal modes")
    t_signal = d_qpu_km / params.c_fiber
    p_click_freq = elink.p_remote_click
    p_click_temp = 1.0 - (1.0 - p_click_freq) ** params.n_freq
    p_el = p_click_temp * elink.p_load
    p_el_2 = p_at_least_two(p_el, params.n_temp)
    p_ed = epl(elink.state, elink.state).p_success
    p_el_d = p_el_2 * p_ed

    t_qm_try = params.n_temp * params.t_spdc + t_signal
    t_load = params.n_temp * (params.t_atom + t_signal)
    t_el_try = t_qm_try + t_load
    t_ed = params.t_cnot + params.t_meas + t_signal
    t_el_d = t_el_try + t_ed
    t_merge = params.t_cnot + params.t_meas + (n_qpu - 1) * t_signal
    expected_all, expected_end = _chain_expectation(t_el_d, p_el_d, n_qpu, t_merge)

    timing = TimingBreakdown(
        t_signal=t_signal,
        t_el_try=t_el_try,
        t_ed=t_ed,
        t_el_d=t_el_d,
        t_merge=t_merge,
        t_qm_try=t_qm_try,
        t_load=t_load,
        expected_t_el_d_all=expected_all,
        expected_t_end=expected_end,
    )
    probs = ProbabilityBreakdown(
        p_click=p_click_freq,
        p_click_temp=p_click_temp,
        p_el=p_el,
        p_el_2=p_el_2,
        p_ed=p_ed,
        p_el_d=p_el_d,
    )
    return timing, probs


def binary_entropy(p: float) -> float:
    """Shannon entropy of a bit, zero at both endpoints."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * log2(p) - (1.0 - p) * log2(1.0 - p)


def qber(state: TwoQubitState) -> tuple[float, float]:
    """Bit- and phase-error rates of the state against the target Bell pair.

    The target anticorrelates computational outcomes, so correlated results
    (BB or DD) are bit errors; in the diagonal basis it correlates outcomes,
    so the anticorrelated projections carry the phase error.
    """
    m = state.matrix
    p_bit = float((m[0, 0] + m[3, 3]).real)
    p_phase = 0.0
    for vec in (_PLUS_MINUS, _MINUS_PLUS):
        amp = 0.0
        for i, vi in enumerate(vec):
            for j, vj in enumerate(vec):
                amp += vi * vj * m[i, j].real
        p_phase += amp
    return _clip_probability(p_bit), _clip_probability(float(p_phase))


def secret_key_rate(r_rep: float, state: TwoQubitState) -> KeyRateResult:
    """Asymptotic secret-key throughput of an entanglement-based exchange.

    The secret fraction 1 - h(p_bit) - h(p_phase) may be negative; the key
    rate clips it at zero since no key can be distilled there.
    """
    if r_rep < 0.0:
        raise ValueError("repetition rate cannot be negative")
    p_bit, p_phase = qber(state)
    r_sec = 1.0 - binary_entropy(p_bit) - binary_entropy(p_phase)
    return KeyRateResult(
        r_rep=r_rep,
        p_bit=p_bit,
        p_phase=p_phase,
        r_sec=r_sec,
        r_key=r_rep * max(r_sec, 0.0),
        fidelity=fidelity_psi_plus(state),
    )


def edr_thresholded(r_rep: float, state: TwoQubitState, f_threshold: float) -> float:
    """Entanglement-distribution rate, zeroed below the fidelity threshold."""
    if not 0.0 <= f_threshold <= 1.0:
        raise ValueError("fidelity threshold must lie in [0, 1]")
    return r_rep if fidelity_psi_plus(state) >= f_threshold else 0.0
