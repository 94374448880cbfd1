"""Source-state builders for the repeater protocol.

Covers the photonic and atomic inputs of an elementary link: single SPDC
pairs, the joint state of the two SPDC sources feeding a remote swap, the
atom-photon emission of a processing node, and the ideal heralded memory pair
used as a loading-stage fixture. Frequency multiplexing never enters the state
space; after heralding only the accepted mode pair is tracked, and mode counts
appear solely in the rate arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import CUTOFF, DensityOperator, ModeRegister, ModeSpec, make_pure


@dataclass(frozen=True)
class SourceParams:
    """Brightness settings of the two source types.

    ``lam`` is the SPDC squeezing amplitude (population ratio per photon pair
    is lam squared) and ``q`` the emission probability of the atomic qubit.
    """

    lam: float
    q: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"SPDC brightness must lie in [0, 1), got {self.lam}")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"emitter brightness must lie in [0, 1], got {self.q}")


def spdc_pair(lam: float, signal: str = "signal", idler: str = "idler") -> DensityOperator:
    """Two-mode SPDC output truncated at two photon pairs.

    Amplitudes 1, lam, lam^2 on |00>, |11>, |22>, renormalized after the
    truncation.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"SPDC brightness must lie in [0, 1), got {lam}")
    reg = ModeRegister((ModeSpec.boson(signal), ModeSpec.boson(idler)))
    return make_pure(reg, {(0, 0): 1.0, (1, 1): lam, (2, 2): lam**2})


def joint_spdc(lam: float) -> DensityOperator:
    """Joint state of both SPDC sources, truncated at total order lam^2.

    Exactly six kets survive the truncation: the joint vacuum, one pair from
    either source, two pairs from either source, and one pair from each. The
    truncation is by total photon-pair number across both sources, not per
    source, so no other ket carries any population.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"SPDC brightness must lie in [0, 1), got {lam}")
    reg = ModeRegister(
        (
            ModeSpec.boson("s1"),
            ModeSpec.boson("i1"),
            ModeSpec.boson("s2"),
            ModeSpec.boson("i2"),
        )
    )
    return make_pure(
        reg,
        {
            (0, 0, 0, 0): 1.0,
            (1, 1, 0, 0): lam,
            (0, 0, 1, 1): lam,
            (2, 2, 0, 0): lam**2,
            (0, 0, 2, 2): lam**2,
            (1, 1, 1, 1): lam**2,
        },
    )


def atom_photon(q: float, atom: str = "atom", photon: str = "photon") -> DensityOperator:
    """Atom-photon emission state sqrt(1-q)|D,0> + sqrt(q)|B,1>.

    The bright atomic level B (index 0) is the one correlated with an emitted
    photon; D (index 1) stays dark.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"emitter brightness must lie in [0, 1], got {q}")
    reg = ModeRegister((ModeSpec.qubit(atom), ModeSpec.boson(photon)))
    return make_pure(reg, {(1, 0): np.sqrt(1.0 - q), (0, 1): np.sqrt(q)})


def ideal_qm_pair(left: str = "qm1", right: str = "qm2") -> DensityOperator:
    """Perfectly heralded memory pair (|01> + |10>)/sqrt(2).

    The remote-swap pipeline produces this state in the lossless limit; the
    builder exists as a fixture for exercising the loading stage on its own.
    """
    reg = ModeRegister((ModeSpec.boson(left), ModeSpec.boson(right)))
    return make_pure(reg, {(0, 1): 1.0, (1, 0): 1.0})
