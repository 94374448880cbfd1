"""Scenario sweeps: brightness optimization, multiplexing-partition search,
and rate-versus-distance tables.

Every sweep is an exhaustive, deterministic grid scan. Link states depend on
brightness and loss but not on how the multiplexing budget is split, so the
expensive pipeline evaluations are cached per (loss, detector) point and the
cheap timing arithmetic is re-run for each candidate partition on top of them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import isfinite
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .elink import ElinkResult, LossParams, atom_elink, hybrid_raw_elink
from .fock import DetectorModel
from .qproc import chain_state, epl
from .rates import (
    HardwareParams,
    arm_transmission,
    atom_timing,
    hybrid_timing,
    secret_key_rate,
)
from .states import SourceParams

ATOM = "atom"
HYBRID = "hybrid"
ARCHITECTURES = (ATOM, HYBRID)

#: all link-preparation strategies; the "pnr" prefix selects the detector model
STRATEGIES = ("raw", "pnr", "epl", "pnr+epl", "re", "pnr+re")
#: strategies whose round structure the timing model describes
RATE_STRATEGIES = ("epl", "pnr+epl")

DEFAULT_BRIGHTNESS_GRID = tuple(round(0.02 * k, 10) for k in range(1, 50))
DEFAULT_DISTANCES_KM = tuple(float(d) for d in np.geomspace(10.0, 200.0, 20))
DEFAULT_N_TEMP_GRID = (10,)


@dataclass(frozen=True)
class LossRegime:
    """Named local-loss assumption: conversion and memory efficiencies."""

    name: str
    eta_qfc: float
    eta_qm: float

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("regime needs a name")
        for eta in (self.eta_qfc, self.eta_qm):
            if not 0.0 <= eta <= 1.0:
                raise ValueError("efficiencies must lie in [0, 1]")


# Placeholder efficiency sets spanning optimistic to presently achievable
# hardware; the curves they produce are meant for qualitative comparison.
IDEALIZED = LossRegime("idealized", 1.0, 1.0)
NEAR_TERM = LossRegime("near-term", 0.8, 0.8)
CURRENT = LossRegime("current", 0.5, 0.5)
NAMED_REGIMES: Mapping[str, LossRegime] = {
    r.name: r for r in (IDEALIZED, NEAR_TERM, CURRENT)
}


@dataclass(frozen=True)
class Scenario:
    """One sweep configuration: what to build, where, and over which grids."""

    architecture: str
    strategy: str
    hops: int
    regime: LossRegime
    d_end_km: tuple[float, ...] = DEFAULT_DISTANCES_KM
    q_grid: tuple[float, ...] = DEFAULT_BRIGHTNESS_GRID
    lam_grid: tuple[float, ...] = DEFAULT_BRIGHTNESS_GRID
    n_temp_grid: tuple[int, ...] = DEFAULT_N_TEMP_GRID

    def __post_init__(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.strategy.endswith("re") and self.architecture != HYBRID:
            raise ValueError("the re-emission retry exists only in the hybrid scheme")
        if self.hops not in (0, 1, 2):
            raise ValueError("hops must be 0, 1, or 2")
        if not self.d_end_km or any(d <= 0.0 for d in self.d_end_km):
            raise ValueError("distances must be positive")
        for grid_name in ("q_grid", "lam_grid"):
            grid = getattr(self, grid_name)
            if not grid or any(not 0.0 < v < 1.0 for v in grid):
                raise ValueError(f"{grid_name} values must lie strictly in (0, 1)")
        if not self.n_temp_grid or any(n < 2 for n in self.n_temp_grid):
            raise ValueError("n_temp candidates must be at least 2")


@dataclass(frozen=True)
class SweepRow:
    """One output record of a rate-versus-distance sweep.

    ``r_key`` holds the sweep's objective: the secret-key rate, or the
    thresholded distribution rate for fidelity-gated sweeps. Atom rows carry
    ``lam_star = 0`` and ``n_temp_star = n_atom`` since those knobs do not
    exist there.
    """

    architecture: str
    strategy: str
    hops: int
    regime: str
    d_end_km: float
    r_rep: float
    r_key: float
    fidelity: float
    p_el_d: float
    q_star: float
    lam_star: float
    n_temp_star: int

    def __post_init__(self) -> None:
        for name in ("d_end_km", "r_rep", "r_key", "fidelity", "p_el_d",
                     "q_star", "lam_star"):
            value = getattr(self, name)
            if not isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and nonnegative")
        if self.hops < 0 or self.n_temp_star < 0:
            raise ValueError("counts cannot be negative")


@dataclass(frozen=True)
class PartitionRow:
    """Brightness-optimized link key rate for one multiplexing split."""

    n_temp: int
    n_freq: int
    d_km: float
    r_key: float
    q_star: float
    lam_star: float

    def __post_init__(self) -> None:
        if self.n_temp < 2 or self.n_freq < 1:
            raise ValueError("invalid partition")
        for name in ("d_km", "r_key", "q_star", "lam_star"):
            value = getattr(self, name)
            if not isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and nonnegative")


@dataclass(frozen=True)
class BrightnessOptimum:
    """Grid-search result; ``all_zero`` flags a everywhere-zero objective."""

    q: float
    lam: float
    n_temp: int
    r_key: float
    all_zero: bool


@dataclass(frozen=True)
class BrightnessRow:
    """Key rate at a single brightness grid point."""

    regime: str
    d_km: float
    q: float
    lam: float
    r_key: float

    def __post_init__(self) -> None:
        for name in ("d_km", "q", "lam", "r_key"):
            value = getattr(self, name)
            if not isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and nonnegative")


def strategy_detector(strategy: str) -> DetectorModel:
    """Detector model a strategy name implies."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    return DetectorModel.PNR if strategy.startswith("pnr") else DetectorModel.THRESHOLD


def regime_losses(
    architecture: str,
    regime: LossRegime,
    d_qpu_km: float,
    params: HardwareParams,
) -> LossParams:
    """Loss parameters one segment of the chain sees under a regime.

    The hybrid source emits at telecom wavelength, so only fiber loss acts
    remotely and the conversion and memory inefficiencies pile onto the local
    loading arm. Atom photons must be converted before the fiber, which moves
    the conversion loss into the remote arm.
    """
    eta_fiber = arm_transmission(d_qpu_km, params)
    if architecture == HYBRID:
        epsilon_r = 1.0 - eta_fiber
        epsilon_l = 1.0 - regime.eta_qfc * regime.eta_qm
    elif architecture == ATOM:
        epsilon_r = 1.0 - regime.eta_qfc * eta_fiber
        epsilon_l = 0.0
    else:
        raise ValueError(f"unknown architecture {architecture!r}")
    return LossParams(
        epsilon_r=epsilon_r,
        epsilon_l=epsilon_l,
        eta_qfc=regime.eta_qfc,
        eta_qm=regime.eta_qm,
        eta_fiber_db_per_km=params.fiber_loss_db_per_km,
    )


def divisor_partitions(n_mul: int) -> tuple[tuple[int, int], ...]:
    """All (n_temp, n_freq) splits of the budget with n_temp >= 2."""
    if n_mul < 2:
        raise ValueError("multiplexing budget must be at least 2")
    return tuple(
        (t, n_mul // t) for t in range(2, n_mul + 1) if n_mul % t == 0
    )


def _worker_count() -> int:
    raw = os.environ.get("QREP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parallel_map(fn: Callable, items: Sequence) -> list:
    workers = _worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class _PointEval:
    r_rep: float
    r_key: float
    fidelity: float
    p_el_d: float


_ZERO_EVAL = _PointEval(0.0, 0.0, 0.0, 0.0)

_LinkCache = dict


def _hybrid_links(
    q_values: Sequence[float],
    lam_values: Sequence[float],
    loss: LossParams,
    detector: DetectorModel,
    cache: _LinkCache,
) -> dict[tuple[float, float], ElinkResult]:
    points = [(q, lam) for q in q_values for lam in lam_values]
    missing = [
        p for p in points
        if (loss.epsilon_r, loss.epsilon_l, detector, p) not in cache
    ]

    def build(point: tuple[float, float]) -> ElinkResult:
        q, lam = point
        return hybrid_raw_elink(SourceParams(lam=lam, q=q), loss, detector)

    for point, link in zip(missing, _parallel_map(build, missing)):
        cache[(loss.epsilon_r, loss.epsilon_l, detector, point)] = link
    return {
        p: cache[(loss.epsilon_r, loss.epsilon_l, detector, p)] for p in points
    }


def _chained_rates(link: ElinkResult, timing_end: float, p_el_d: float, hops: int) -> _PointEval:
    distilled = epl(link.state, link.state)
    chain = chain_state(distilled.state, hops)
    r_rep = 1e6 / timing_end
    result = secret_key_rate(r_rep, chain)
    return _PointEval(r_rep, result.r_key, result.fidelity, p_el_d)


def _eval_hybrid(
    params: HardwareParams, d_qpu: float, n_qpu: int, hops: int, link: ElinkResult
) -> _PointEval:
    try:
        timing, probs = hybrid_timing(params, d_qpu, n_qpu, link)
        return _chained_rates(link, timing.expected_t_end, probs.p_el_d, hops)
    except ValueError:
        return _ZERO_EVAL


def _eval_atom(
    params: HardwareParams,
    d_qpu: float,
    n_qpu: int,
    hops: int,
    detector: DetectorModel,
    link: ElinkResult,
) -> _PointEval:
    try:
        timing, probs = atom_timing(params, d_qpu, n_qpu, detector, link=link)
        return _chained_rates(link, timing.expected_t_end, probs.p_el_d, hops)
    except ValueError:
        return _ZERO_EVAL


def _require_rate_strategy(scenario: Scenario) -> None:
    if scenario.strategy not in RATE_STRATEGIES:
        raise ValueError(
            "the timing model covers distillation-based strategies only; got "
            f"{scenario.strategy!r}"
        )


@dataclass(frozen=True)
class _BestPoint:
    value: float
    q: float
    lam: float
    n_temp: int
    result: _PointEval


def _scan_scenario_point(
    scenario: Scenario,
    d_end_km: float,
    params: HardwareParams,
    objective: Callable[[_PointEval], float],
    cache: _LinkCache,
    n_temp_values: Sequence[int] | None = None,
) -> _BestPoint:
    """Exhaustive scan of the brightness (and partition) grid at one distance.

    Grid order never affects the outcome: candidates are visited in sorted
    order and only a strictly larger objective displaces the incumbent, so
    ties resolve to the smallest q, then lambda, then n_temp.
    """
    n_qpu = scenario.hops + 2
    d_qpu = d_end_km / (n_qpu - 1)
    detector = strategy_detector(scenario.strategy)
    loss = regime_losses(scenario.architecture, scenario.regime, d_qpu, params)
    base = replace(
        params, eta_qfc=scenario.regime.eta_qfc, eta_qm=scenario.regime.eta_qm
    )
    best: _BestPoint | None = None

    if scenario.architecture == ATOM:
        for q in sorted(set(scenario.q_grid)):
            link = atom_elink(q, loss, detector)
            ev = _eval_atom(replace(base, q=q), d_qpu, n_qpu, scenario.hops,
                            detector, link)
            value = objective(ev)
            if best is None or value > best.value:
                best = _BestPoint(value, q, 0.0, base.n_atom, ev)
        assert best is not None
        return best

    n_temps = sorted(set(n_temp_values or scenario.n_temp_grid))
    for n_temp in n_temps:
        if params.n_mul % n_temp != 0:
            raise ValueError(
                f"n_temp={n_temp} does not divide the multiplexing budget "
                f"{params.n_mul}"
            )
    q_values = sorted(set(scenario.q_grid))
    lam_values = sorted(set(scenario.lam_grid))
    links = _hybrid_links(q_values, lam_values, loss, detector, cache)
    for q in q_values:
        for lam in lam_values:
            link = links[(q, lam)]
            for n_temp in n_temps:
                point_params = replace(
                    base, q=q, lam=lam, n_temp=n_temp,
                    n_freq=params.n_mul // n_temp,
                )
                ev = _eval_hybrid(point_params, d_qpu, n_qpu, scenario.hops, link)
                value = objective(ev)
                if best is None or value > best.value:
                    best = _BestPoint(value, q, lam, n_temp, ev)
    assert best is not None
    return best


def optimize_brightness(
    scenario: Scenario,
    d_end_km: float,
    q_grid: Sequence[float] | None = None,
    lam_grid: Sequence[float] | None = None,
    params: HardwareParams | None = None,
    link_cache: _LinkCache | None = None,
) -> BrightnessOptimum:
    """Exhaustive key-rate maximization over the brightness grid.

    Returns the argmax with ties broken toward the smallest q, then the
    smallest lambda. A configuration whose key rate vanishes everywhere comes
    back flagged ``all_zero`` at the tie-break corner of the grid.
    """
    _require_rate_strategy(scenario)
    params = params if params is not None else HardwareParams()
    if q_grid is not None or lam_grid is not None:
        scenario = replace(
            scenario,
            q_grid=tuple(q_grid) if q_grid is not None else scenario.q_grid,
            lam_grid=tuple(lam_grid) if lam_grid is not None else scenario.lam_grid,
        )
    cache = link_cache if link_cache is not None else {}
    best = _scan_scenario_point(
        scenario, d_end_km, params, lambda ev: ev.r_key, cache
    )
    return BrightnessOptimum(
        q=best.q,
        lam=best.lam,
        n_temp=best.n_temp,
        r_key=best.result.r_key,
        all_zero=best.value <= 0.0,
    )


def brightness_map(
    scenario: Scenario,
    d_points: Sequence[float] | None = None,
    params: HardwareParams | None = None,
) -> list[BrightnessRow]:
    """Key rate at every brightness grid point, for colormap-style output.

    Unlike the optimizer this emits the whole landscape, one row per (q,
    lambda) pair and distance. The temporal partition is fixed to the first
    entry of the scenario's n_temp grid.
    """
    _require_rate_strategy(scenario)
    if scenario.architecture != HYBRID:
        raise ValueError("brightness landscapes exist only for the hybrid scheme")
    params = params if params is not None else HardwareParams()
    distances = tuple(d_points) if d_points is not None else scenario.d_end_km
    n_temp = sorted(scenario.n_temp_grid)[0]
    n_qpu = scenario.hops + 2
    detector = strategy_detector(scenario.strategy)
    base = replace(
        params, eta_qfc=scenario.regime.eta_qfc, eta_qm=scenario.regime.eta_qm
    )
    cache: _LinkCache = {}
    rows: list[BrightnessRow] = []
    for d in sorted(distances):
        d_qpu = d / (n_qpu - 1)
        loss = regime_losses(HYBRID, scenario.regime, d_qpu, params)
        q_values = sorted(set(scenario.q_grid))
        lam_values = sorted(set(scenario.lam_grid))
        links = _hybrid_links(q_values, lam_values, loss, detector, cache)
        for q in q_values:
            for lam in lam_values:
                point_params = replace(
                    base, q=q, lam=lam, n_temp=n_temp,
                    n_freq=params.n_mul // n_temp,
                )
                ev = _eval_hybrid(
                    point_params, d_qpu, n_qpu, scenario.hops, links[(q, lam)]
                )
                rows.append(
                    BrightnessRow(
                        regime=scenario.regime.name,
                        d_km=d,
                        q=q,
                        lam=lam,
                        r_key=ev.r_key,
                    )
                )
    return rows


def partition_sweep(
    scenario: Scenario,
    n_mul: int = 1000,
    d_range: Sequence[float] | None = None,
    params: HardwareParams | None = None,
) -> list[PartitionRow]:
    """Brightness-optimized link key rate for every split of the budget.

    Scans every divisor pair n_temp * n_freq = n_mul with n_temp >= 2 on the
    single-segment link. The link pipeline is independent of the split, so
    each brightness point is simulated once per distance and every partition
    reuses it.
    """
    _require_rate_strategy(scenario)
    if scenario.architecture != HYBRID:
        raise ValueError("the multiplexing partition exists only in the hybrid scheme")
    params = params if params is not None else HardwareParams()
    distances = tuple(d_range) if d_range is not None else scenario.d_end_km
    link_scenario = replace(scenario, hops=0)
    cache: _LinkCache = {}
    rows: list[PartitionRow] = []
    for n_temp, n_freq in divisor_partitions(n_mul):
        point_params = replace(params, n_mul=n_mul, n_temp=n_temp, n_freq=n_freq)
        for d in sorted(distances):
            best = _scan_scenario_point(
                link_scenario, d, point_params, lambda ev: ev.r_key, cache,
                n_temp_values=(n_temp,),
            )
            rows.append(
                PartitionRow(
                    n_temp=n_temp,
                    n_freq=n_freq,
                    d_km=d,
                    r_key=best.result.r_key,
                    q_star=best.q,
                    lam_star=best.lam,
                )
            )
    return rows


def _distance_table(
    scenarios: Iterable[Scenario],
    d_points: Sequence[float] | None,
    params: HardwareParams,
    objective_for: Callable[[Scenario], Callable[[_PointEval], float]],
    rate_field: Callable[[_BestPoint], float],
) -> list[SweepRow]:
    cache: _LinkCache = {}
    rows: list[SweepRow] = []
    for scenario in scenarios:
        _require_rate_strategy(scenario)
        objective = objective_for(scenario)
        distances = tuple(d_points) if d_points is not None else scenario.d_end_km
        for d in sorted(distances):
            best = _scan_scenario_point(scenario, d, params, objective, cache)
            rows.append(
                SweepRow(
                    architecture=scenario.architecture,
                    strategy=scenario.strategy,
                    hops=scenario.hops,
                    regime=scenario.regime.name,
                    d_end_km=d,
                    r_rep=best.result.r_rep,
                    r_key=rate_field(best),
                    fidelity=best.result.fidelity,
                    p_el_d=best.result.p_el_d,
                    q_star=best.q,
                    lam_star=best.lam,
                    n_temp_star=best.n_temp,
                )
            )
    return rows


def keyrate_vs_distance(
    scenarios: Iterable[Scenario],
    d_points: Sequence[float] | None = None,
    params: HardwareParams | None = None,
) -> list[SweepRow]:
    """Secret-key rate against end-to-end distance, one row per scenario point.

    Each row reports the brightness- and partition-optimized rate together
    with the chosen operating point and the end-to-end chain fidelity.
    """
    params = params if params is not None else HardwareParams()
    return _distance_table(
        scenarios,
        d_points,
        params,
        lambda scenario: lambda ev: ev.r_key,
        lambda best: best.result.r_key,
    )


def edr_vs_distance(
    scenarios: Iterable[Scenario],
    d_points: Sequence[float] | None = None,
    f_threshold: float = 0.95,
    params: HardwareParams | None = None,
) -> list[SweepRow]:
    """Fidelity-gated entanglement-distribution rate against distance.

    The objective is the repetition rate when the end-to-end fidelity clears
    the threshold and zero otherwise; rows where no grid point clears it
    still record the tie-break point's repetition rate and fidelity.
    """
    if not 0.0 <= f_threshold <= 1.0:
        raise ValueError("fidelity threshold must lie in [0, 1]")
    params = params if params is not None else HardwareParams()

    def objective_for(scenario: Scenario) -> Callable[[_PointEval], float]:
        def objective(ev: _PointEval) -> float:
            return ev.r_rep if ev.fidelity >= f_threshold else 0.0

        return objective

    return _distance_table(
        scenarios,
        d_points,
        params,
        objective_for,
        lambda best: best.value,
    )
