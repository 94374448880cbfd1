"""Deterministic two-qubit post-processing done by the processing nodes.

Everything here acts on 4x4 matrices in the {BB, BD, DB, DD} basis with B as
logical 0: distillation of two noisy link copies, Pauli-frame flips, and the
Bell-measurement merges that stitch elementary links into an end-to-end chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .elink import TwoQubitState

_I2 = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])

# Bell kets over the two measured middle qubits, paired with the correction on
# the far qubit that maps the ideal (all-Bell-target) branch back to the target
# state (|BD> + |DB>)/sqrt(2).
_SQ2 = np.sqrt(0.5)
_BELL_BRANCHES = (
    (np.array([0.0, _SQ2, _SQ2, 0.0]), _I2),        # symmetric one-excitation
    (np.array([0.0, _SQ2, -_SQ2, 0.0]), _Z),        # antisymmetric one-excitation
    (np.array([_SQ2, 0.0, 0.0, _SQ2]), _X),         # symmetric even-parity
    (np.array([_SQ2, 0.0, 0.0, -_SQ2]), _Z @ _X),   # antisymmetric even-parity
)


@dataclass(frozen=True)
class DistillResult:
    """Post-selected distilled state and the probability of keeping it."""

    state: TwoQubitState
    p_success: float


def epl(a: TwoQubitState, b: TwoQubitState) -> DistillResult:
    """Distill two link copies by bilateral CNOTs and a double |D> herald.

    Each node uses its qubit from pair ``a`` as control and its qubit from
    pair ``b`` as target, measures the target, and the copies are kept only
    when both measurements give the dark state (logical 1). The surviving
    control pair is returned normalized together with the branch probability.
    """
    rho = np.kron(a.matrix, b.matrix)
    # basis index bits (a1, b1, a2, b2); both CNOTs are index permutations
    idx = np.arange(16)
    a1, b1 = (idx >> 3) & 1, (idx >> 2) & 1
    a2, b2 = (idx >> 1) & 1, idx & 1
    perm = (a1 << 3) | (b1 << 2) | ((a2 ^ a1) << 1) | (b2 ^ b1)
    rho = rho[np.ix_(np.argsort(perm), np.argsort(perm))]
    keep = np.flatnonzero(((idx >> 1) & 1) & (idx & 1))  # target bits both 1
    block = rho[np.ix_(keep, keep)]
    total = np.trace(rho).real
    p_success = float(np.trace(block).real / total)
    if p_success <= 0.0:
        raise ValueError("distillation herald has zero probability on these inputs")
    return DistillResult(TwoQubitState(block / np.trace(block)), p_success)


def pauli_x_both(state: TwoQubitState) -> TwoQubitState:
    """Flip both qubits; exchanges the BB and DD error populations."""
    x2 = np.kron(_X, _X)
    return TwoQubitState(x2 @ state.matrix @ x2)


def bell_swap_merge(ab: TwoQubitState, bc: TwoQubitState) -> TwoQubitState:
    """Merge two links sharing a middle node into one longer link.

    The middle pair is measured in the Bell basis and each of the four
    outcomes is corrected by the Pauli frame that would restore the target
    state in the ideal case, then the corrected branches are summed. The
    operation is deterministic: all outcomes are kept and the output trace
    equals the input trace.
    """
    rho = np.kron(ab.matrix, bc.matrix)
    out = np.zeros((4, 4), dtype=complex)
    for bra, correction in _BELL_BRANCHES:
        # middle qubits are contiguous in the (A, B1, B2, C) ordering
        k = np.kron(np.kron(_I2, bra[None, :]), _I2)
        branch = k @ rho @ k.conj().T
        fix = np.kron(_I2, correction)
        out += fix @ branch @ fix.conj().T
    return TwoQubitState(out)


def chain_state(link: TwoQubitState, hops: int) -> TwoQubitState:
    """End-to-end state of a chain built from identical links.

    ``hops`` counts the merging nodes, so hops = 0 returns the link itself.
    Merging folds left to right; for identical links the order is immaterial
    on the Bell-diagonal states this project produces.
    """
    if hops < 0:
        raise ValueError("hop count cannot be negative")
    return reduce(bell_swap_merge, [link] * hops, link)
