"""Truncated Fock-space density-matrix engine for small optical-atomic registers.

A register mixes two-level atomic qubits with bosonic modes truncated at a
global photon cutoff. States are dense complex density matrices over the
row-major tensor basis of the declared mode order, and every operation is a
pure function returning a new state. Traces below one are meaningful: they
carry the success probability of whatever conditioning produced the state.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import comb, prod

import numpy as np
from scipy.linalg import expm

#: Global photon cutoff for bosonic modes. Sources in this project emit at most
#: two photons per mode and interference can bunch at most three into one output,
#: so a four-level truncation is exact rather than approximate.
CUTOFF = 3

ATOMIC_QUBIT = "atomic-qubit"
BOSONIC = "bosonic"

# Literal click-pattern selectors for condition_single_click.
A_ONLY = "A-only"
B_ONLY = "B-only"
BOTH_PATTERNS = "both-patterns"

HERMITICITY_TOL = 1e-12
PSD_TOL = -1e-10
TRACE_TOL = 1e-12


class DetectorModel(Enum):
    """Photon detector variants used when conditioning on click patterns.

    THRESHOLD fires on one or more photons. PNR resolves photon number and its
    single-click element accepts exactly one photon, rejecting bunched events.
    """

    THRESHOLD = "threshold"
    PNR = "pnr"


@dataclass(frozen=True)
class ModeSpec:
    """One register slot: an atomic qubit or a truncated bosonic mode."""

    label: str
    kind: str
    dim: int

    def __post_init__(self) -> None:
        if self.kind == ATOMIC_QUBIT:
            if self.dim != 2:
                raise ValueError("atomic qubits are exactly two-dimensional")
        elif self.kind == BOSONIC:
            # dim = cutoff + 1 and the cutoff must be at least one photon
            if self.dim < 2:
                raise ValueError("bosonic cutoff must be at least 1")
        else:
            raise ValueError(f"unknown mode kind {self.kind!r}")

    @classmethod
    def qubit(cls, label: str) -> "ModeSpec":
        """Atomic qubit with basis states B (index 0) and D (index 1)."""
        return cls(label, ATOMIC_QUBIT, 2)

    @classmethod
    def boson(cls, label: str, cutoff: int = CUTOFF) -> "ModeSpec":
        """Bosonic mode truncated at ``cutoff`` photons."""
        return cls(label, BOSONIC, cutoff + 1)


@dataclass(frozen=True)
class ModeRegister:
    """Ordered collection of modes defining a row-major tensor basis."""

    modes: tuple[ModeSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "modes", tuple(self.modes))
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise ValueError("mode labels within a register must be unique")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.dim for m in self.modes)

    @property
    def dim(self) -> int:
        return prod(self.dims)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    def position(self, label: str) -> int:
        for pos, mode in enumerate(self.modes):
            if mode.label == label:
                return pos
        raise KeyError(f"no mode labeled {label!r} in register")

    def spec(self, label: str) -> ModeSpec:
        return self.modes[self.position(label)]


@dataclass(frozen=True)
class DensityOperator:
    """Dense density matrix over a mode register.

    The trace may be below one for conditioned-but-unnormalized states; it then
    equals the probability of the conditioning branch times any input trace.
    """

    register: ModeRegister
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.register.dim, self.register.dim):
            raise ValueError(
                f"matrix shape {mat.shape} does not match register dimension "
                f"{self.register.dim}"
            )
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(self.matrix.trace().real)


def make_pure(register: ModeRegister, amplitudes: dict) -> DensityOperator:
    """Build the normalized pure state with the given basis amplitudes.

    Parameters
    ----------
    register : ModeRegister
        Target register.
    amplitudes : dict
        Sparse map from basis index to complex amplitude. Keys are either flat
        row-major integers or tuples of per-mode occupation indices.

    Returns
    -------
    DensityOperator
        The projector onto the normalized superposition, trace one.
    """
    psi = np.zeros(register.dim, dtype=complex)
    dims = register.dims
    for key, amp in amplitudes.items():
        if isinstance(key, tuple):
            if len(key) != len(dims):
                raise ValueError(f"index tuple {key} does not match register arity")
            idx = int(np.ravel_multi_index(key, dims))
        else:
            idx = int(key)
            if not 0 <= idx < register.dim:
                raise ValueError(f"basis index {idx} out of range")
        psi[idx] = amp
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("amplitude map has zero norm")
    psi /= norm
    return DensityOperator(register, np.outer(psi, psi.conj()))


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    """Kronecker product of two states on label-disjoint registers."""
    common = set(a.register.labels) & set(b.register.labels)
    if common:
        raise ValueError(f"mode labels appear in both factors: {sorted(common)}")
    register = ModeRegister(a.register.modes + b.register.modes)
    return DensityOperator(register, np.kron(a.matrix, b.matrix))


@lru_cache(maxsize=None)
def _bs_unitary(dims: tuple[int, ...], pos_i: int, pos_j: int) -> np.ndarray:
    """Balanced beam-splitter unitary embedded in the full register."""
    lower_i = _lowering(dims, pos_i)
    lower_j = _lowering(dims, pos_j)
    # Rotation taking a_i^dag to (a_i^dag + a_j^dag)/sqrt(2); its inverse is the
    # same rotation with the mode arguments swapped.
    generator = lower_j.T @ lower_i - lower_i.T @ lower_j
    return expm((np.pi / 4.0) * generator)


def _lowering(dims: tuple[int, ...], pos: int) -> np.ndarray:
    """Annihilation operator of mode ``pos`` embedded in the full register."""
    d = dims[pos]
    a = np.diag(np.sqrt(np.arange(1, d)), k=1)
    return np.kron(np.kron(np.eye(prod(dims[:pos])), a), np.eye(prod(dims[pos + 1:])))


def _mode_digits(dims: tuple[int, ...], pos: int) -> np.ndarray:
    """Occupation number of mode ``pos`` for every flat basis index."""
    stride = prod(dims[pos + 1:])
    return (np.arange(prod(dims)) // stride) % dims[pos]


def beam_splitter(state: DensityOperator, mode_i: str, mode_j: str) -> DensityOperator:
    """Interfere two bosonic modes on a balanced beam splitter.

    The convention maps the first mode's creation operator to the symmetric
    combination, so a single photon in ``mode_i`` becomes (|1,0> + |0,1>)/sqrt(2).
    Applying the operation again with the arguments swapped undoes it exactly.

    Raises
    ------
    ValueError
        If either mode is not bosonic, or if any populated basis state carries
        more total photons across the pair than the smaller cutoff can hold
        after interference.
    """
    reg = state.register
    pos_i, pos_j = reg.position(mode_i), reg.position(mode_j)
    for pos in (pos_i, pos_j):
        if reg.modes[pos].kind != BOSONIC:
            raise ValueError(f"beam splitter needs bosonic modes, got {reg.modes[pos]}")
    dims = reg.dims
    # Interference moves photons between the pair, so every populated sector
    # must fit entirely within each output cutoff.
    total = _mode_digits(dims, pos_i) + _mode_digits(dims, pos_j)
    overflow = total > min(dims[pos_i], dims[pos_j]) - 1
    if np.any(np.abs(state.matrix[overflow, :]) > 1e-14) or np.any(
        np.abs(state.matrix[:, overflow]) > 1e-14
    ):
        raise ValueError("photon number across the beam-splitter pair exceeds the cutoff")
    u = _bs_unitary(dims, pos_i, pos_j)
    return DensityOperator(reg, u @ state.matrix @ u.T)


def loss_channel(state: DensityOperator, mode: str, epsilon: float) -> DensityOperator:
    """Apply per-photon loss with probability ``epsilon`` to one bosonic mode.

    Implements the binomial damping map: each of the n photons is lost
    independently, giving Kraus operators K_k with matrix elements
    sqrt(C(n, k) epsilon^k (1 - epsilon)^(n-k)) |n-k><n|.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"loss probability must lie in [0, 1], got {epsilon}")
    reg = state.register
    pos = reg.position(mode)
    if reg.modes[pos].kind != BOSONIC:
        raise ValueError(f"loss channel needs a bosonic mode, got {reg.modes[pos]}")
    dims = reg.dims
    d = dims[pos]
    d_pre = prod(dims[:pos])
    d_post = prod(dims[pos + 1:])
    # Contract each Kraus operator against the mode axis alone; embedding the
    # operators in the full register would cost a factor dim^2 more.
    arr = state.matrix.reshape(d_pre, d, d_post, d_pre, d, d_post)
    out = np.zeros_like(arr)
    for k in range(d):
        kraus = np.zeros((d, d))
        for n in range(k, d):
            kraus[n - k, n] = np.sqrt(comb(n, k) * epsilon**k * (1.0 - epsilon) ** (n - k))
        if not kraus.any():
            continue
        tmp = np.moveaxis(np.tensordot(kraus, arr, axes=(1, 1)), 0, 1)
        out += np.moveaxis(np.tensordot(tmp, kraus, axes=(4, 1)), 5, 4)
    return DensityOperator(reg, out.reshape(state.matrix.shape))


def _click_weights(detector: DetectorModel, d: int) -> np.ndarray:
    w = np.zeros(d)
    if detector is DetectorModel.THRESHOLD:
        w[1:] = 1.0
    elif detector is DetectorModel.PNR:
        w[1] = 1.0
    else:
        raise ValueError(f"unknown detector model {detector!r}")
    return w


def condition_single_click(
    state: DensityOperator,
    mode_a: str,
    mode_b: str,
    detector: DetectorModel,
    which: str = BOTH_PATTERNS,
) -> tuple[DensityOperator, float]:
    """Project onto a single-click pattern across two detector modes.

    The A pattern is a click on ``mode_a`` with vacuum on ``mode_b``; the B
    pattern is the mirror image. Threshold detectors click on any photon
    number above zero while PNR detectors accept exactly one photon.

    Returns the unnormalized conditioned state with the detector modes traced
    out, together with the pattern probability relative to the input trace.
    The B pattern heralds the same state up to a correctable local phase, so
    the returned matrix is always the A-pattern one with its trace rescaled to
    the requested pattern set; only when the A pattern itself has zero weight
    does the raw B branch come back instead. This phase canonicalization
    assumes the two detector arms see symmetric states, which holds throughout
    the swap setups in this project.

    Parameters
    ----------
    which : {"A-only", "B-only", "both-patterns"}
        Pattern set to accept. "both-patterns" sums the two probabilities.
    """
    if which not in (A_ONLY, B_ONLY, BOTH_PATTERNS):
        raise ValueError(f"unknown click pattern selector {which!r}")
    reg = state.register
    pos_a, pos_b = reg.position(mode_a), reg.position(mode_b)
    for pos in (pos_a, pos_b):
        if reg.modes[pos].kind != BOSONIC:
            raise ValueError(f"detector modes must be bosonic, got {reg.modes[pos]}")
    t_in = state.trace
    if t_in <= 0.0:
        raise ValueError("cannot condition a state with nonpositive trace")
    dims = reg.dims
    digits_a = _mode_digits(dims, pos_a)
    digits_b = _mode_digits(dims, pos_b)
    click_a = _click_weights(detector, dims[pos_a])
    click_b = _click_weights(detector, dims[pos_b])
    vac_a = np.zeros(dims[pos_a])
    vac_a[0] = 1.0
    vac_b = np.zeros(dims[pos_b])
    vac_b[0] = 1.0

    proj_a = click_a[digits_a] * vac_b[digits_b]
    proj_b = vac_a[digits_a] * click_b[digits_b]
    drop = {mode_a, mode_b}
    sigma_a = partial_trace(
        DensityOperator(reg, proj_a[:, None] * state.matrix * proj_a[None, :]), drop
    )
    p_a = sigma_a.trace / t_in
    p_b = float(np.real(np.sum(proj_b * np.diagonal(state.matrix))) / t_in)

    if which == A_ONLY:
        return sigma_a, p_a
    if which == B_ONLY:
        wanted = p_b
    else:
        wanted = p_a + p_b
    if p_a > 0.0:
        scaled = DensityOperator(sigma_a.register, sigma_a.matrix * (wanted / p_a))
        return scaled, wanted
    # Degenerate fallback: the A branch is empty, return the raw B branch.
    sigma_b = partial_trace(
        DensityOperator(reg, proj_b[:, None] * state.matrix * proj_b[None, :]), drop
    )
    return sigma_b, wanted


def partial_trace(state: DensityOperator, drop: set[str]) -> DensityOperator:
    """Trace out the modes named in ``drop``; surviving modes keep their order."""
    reg = state.register
    positions = sorted((reg.position(label) for label in drop), reverse=True)
    mat = state.matrix
    dims = list(reg.dims)
    modes = list(reg.modes)
    for pos in positions:
        d_pre = prod(dims[:pos])
        d_post = prod(dims[pos + 1:])
        arr = mat.reshape(d_pre, dims[pos], d_post, d_pre, dims[pos], d_post)
        mat = np.trace(arr, axis1=1, axis2=4).reshape(d_pre * d_post, d_pre * d_post)
        del dims[pos]
        del modes[pos]
    return DensityOperator(ModeRegister(tuple(modes)), mat)


def normalize(state: DensityOperator) -> tuple[DensityOperator, float]:
    """Scale to unit trace; returns the normalized state and the original trace.

    A nonpositive trace signals an impossible conditioning branch and raises.
    """
    t = state.trace
    if t <= 0.0:
        raise ValueError("cannot normalize a state with nonpositive trace")
    return DensityOperator(state.register, state.matrix / t), t
