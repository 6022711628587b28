"""Deterministic trial execution and exit-probability estimation.

Per-trial randomness is derived from a base seed through
``numpy.random.SeedSequence`` spawn keys built from the trial index (and,
inside sweeps, from the grid coordinates), so results are independent of
execution order and worker count, and bitwise reproducible for a fixed base
seed.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .systems import HlipSystem, InfeasibleFilterError, ScalarLinearSystem

__all__ = [
    "Trajectory",
    "TrialOutcome",
    "ExitEstimate",
    "HlipController",
    "wilson_interval",
    "trial_seed",
    "point_seed",
    "run_trial",
    "estimate_exit_probability",
    "mc_cond_moments",
    "simulate_scalar_batch",
    "sweep",
    "SweepRow",
]

_WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass(frozen=True)
class Trajectory:
    """One rollout: states, true barrier values, and the barrier process
    actually certified by the filter (equal to h for the scalar system,
    the halfspace-convexified value for the walker) with its analytic
    conditional moments."""

    states: np.ndarray
    h_values: np.ndarray
    proc_values: np.ndarray
    proc_cond_means: np.ndarray
    proc_cond_vars: np.ndarray
    inputs: np.ndarray | None
    disturbances: np.ndarray | None
    exit_index: int | None


@dataclass(frozen=True)
class TrialOutcome:
    exit_index: int | None
    trajectory: Trajectory | None
    controller_failed: bool

    @property
    def exited(self) -> bool:
        return self.exit_index is not None


@dataclass(frozen=True)
class ExitEstimate:
    """Monte Carlo exit-probability estimate with 95% Wilson interval."""

    p_hat: float
    ci_lo: float
    ci_hi: float
    n_trials: int
    n_exits: int
    n_controller_failures: int


@dataclass(frozen=True)
class HlipController:
    """Velocity-tracking nominal passed through the expectation filter."""

    v_des: tuple[float, float]
    alpha: float

    def __call__(self, system: HlipSystem, x: np.ndarray) -> np.ndarray:
        u_nom = system.nominal_controller(x, np.asarray(self.v_des))
        return system.safety_filter(x, u_nom, self.alpha)


def wilson_interval(n_success: int, n: int) -> tuple[float, float]:
    """Two-sided 95% Wilson score interval; exact endpoints at 0 and n."""
    if n < 1:
        raise ValueError("need at least one trial")
    p = n_success / n
    z2 = _WILSON_Z * _WILSON_Z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = _WILSON_Z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    lo = 0.0 if n_success == 0 else max(0.0, center - half)
    hi = 1.0 if n_success == n else min(1.0, center + half)
    return lo, hi


def trial_seed(base_seed: int, *key: int) -> np.random.SeedSequence:
    """Counter-style per-trial seed: spawn key = integer coordinates."""
    return np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(key))


def point_seed(base_seed: int, coords) -> np.random.SeedSequence:
    """Seed derived from grid *coordinates* (hashed), not from grid order,
    so permuting or distributing a sweep cannot change any point's stream."""
    blob = repr(tuple(coords)).encode("utf-8")
    digest = hashlib.sha256(blob).digest()
    words = tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4))
    return np.random.SeedSequence(entropy=base_seed, spawn_key=words)


def _proc_step(system, x, u, x_next):
    """Realized next value of the certified barrier process."""
    if isinstance(system, ScalarLinearSystem):
        return float(x_next)
    be = system.barrier(x, p_next=np.asarray(x_next)[:2])
    return be.hbar


def _proc_cond_moments(system, x, u):
    if isinstance(system, ScalarLinearSystem):
        return system.cond_mean_h(x), system.cond_var_h(x)
    return system.cond_moments_hbar(x, u)


def run_trial(
    system,
    controller,
    x0,
    K: int,
    epsilon: float = 0.0,
    seed=0,
    keep_trajectory: bool = False,
) -> TrialOutcome:
    """Roll out up to K steps, recording the first index with h < -epsilon.

    Deterministic given ``seed`` (an int or SeedSequence).  A controller that
    raises InfeasibleFilterError terminates the trial as a controller
    failure, a distinct outcome never counted as safe by default.
    """
    if K < 1:
        raise ValueError(f"horizon K must be >= 1, got {K}")
    rng = np.random.default_rng(seed)
    scalar = isinstance(system, ScalarLinearSystem)
    x = float(x0) if scalar else np.asarray(x0, dtype=float)
    h = system.barrier(x) if scalar else system.signed_distance(x)

    states = [x]
    h_values = [h]
    proc_values = [h]
    cond_means: list[float] = []
    cond_vars: list[float] = []
    inputs: list[np.ndarray] = []
    disturbances: list = []

    exit_index: int | None = 0 if h < -epsilon else None
    failed = False
    if exit_index is None:
        for k in range(K):
            try:
                u = controller(system, x) if controller is not None else None
            except InfeasibleFilterError:
                failed = True
                break
            mean, var = _proc_cond_moments(system, x, u)
            d = system.disturbance.sample(rng)
            x_next = system.apply(x, u, d)
            h_next = (
                system.barrier(x_next) if scalar else system.signed_distance(x_next)
            )
            states.append(x_next)
            h_values.append(h_next)
            proc_values.append(_proc_step(system, x, u, x_next))
            cond_means.append(mean)
            cond_vars.append(var)
            disturbances.append(d)
            if u is not None:
                inputs.append(u)
            if h_next < -epsilon:
                exit_index = k + 1
                break
            x = x_next

    trajectory = None
    if keep_trajectory:
        trajectory = Trajectory(
            states=np.asarray(states),
            h_values=np.asarray(h_values),
            proc_values=np.asarray(proc_values),
            proc_cond_means=np.asarray(cond_means),
            proc_cond_vars=np.asarray(cond_vars),
            inputs=np.asarray(inputs) if inputs else None,
            disturbances=np.asarray(disturbances) if disturbances else None,
            exit_index=exit_index,
        )
    return TrialOutcome(
        exit_index=None if failed else exit_index,
        trajectory=trajectory,
        controller_failed=failed,
    )


def estimate_exit_probability(
    system,
    controller,
    x0,
    K: int,
    n_trials: int,
    base_seed: int,
    epsilon: float = 0.0,
    count_failures_as_exits: bool = False,
    grid_key: tuple = (),
    collect=None,
    max_workers: int = 1,
) -> ExitEstimate:
    """Independent trials with per-trial derived seeds; Wilson 95% interval.

    ``collect``, when given, receives every TrialOutcome (with trajectory)
    so callers can audit or retain rollouts without a second pass.  With
    ``max_workers`` > 1 trials fan out to a process pool; outcomes are merged
    in trial order, so the result is bitwise independent of worker count.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    keep = collect is not None

    def seed_for(i):
        return np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(grid_key) + (i,))

    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            futures = [
                pool.submit(run_trial, system, controller, x0, K,
                            epsilon=epsilon, seed=seed_for(i), keep_trajectory=keep)
                for i in range(n_trials)
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [
            run_trial(system, controller, x0, K,
                      epsilon=epsilon, seed=seed_for(i), keep_trajectory=keep)
            for i in range(n_trials)
        ]

    n_exits = 0
    n_failures = 0
    for i, outcome in enumerate(outcomes):
        if outcome.controller_failed:
            n_failures += 1
        elif outcome.exited:
            n_exits += 1
        if collect is not None:
            collect(i, outcome)
    effective = n_exits + (n_failures if count_failures_as_exits else 0)
    lo, hi = wilson_interval(effective, n_trials)
    return ExitEstimate(
        p_hat=effective / n_trials,
        ci_lo=lo,
        ci_hi=hi,
        n_trials=n_trials,
        n_exits=n_exits,
        n_controller_failures=n_failures,
    )


def mc_cond_moments(
    system, state, u, n_samples: int, seed
) -> tuple[float, float, tuple[float, float]]:
    """Sampling oracle for the one-step conditional moments of the barrier
    process; cross-checks the analytic values.  Returns (mean estimate,
    variance estimate, (SE of mean, SE of variance))."""
    if n_samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    vals = np.empty(n_samples)
    for i in range(n_samples):
        x_next = system.step(state, u, rng)
        vals[i] = _proc_step(system, state, u, x_next)
    mean = float(np.mean(vals))
    var = float(np.var(vals, ddof=1))
    centered = vals - mean
    m4 = float(np.mean(centered**4))
    se_mean = math.sqrt(var / n_samples)
    var_of_var = max(0.0, (m4 - var * var * (n_samples - 3) / (n_samples - 1)) / n_samples)
    return mean, var, (se_mean, math.sqrt(var_of_var))


def simulate_scalar_batch(
    system: ScalarLinearSystem, x0: float, K: int, n_trials: int, seed
) -> np.ndarray:
    """Vectorized scalar rollouts; returns the (n_trials, K+1) barrier matrix.

    One generator drives the whole batch (seeded per grid cell by the
    caller); the recursion itself is exact and disturbance draws are the only
    randomness, so the batch is bitwise reproducible.
    """
    rng = np.random.default_rng(seed)
    draws = system.disturbance.sample_batch(rng, n_trials * K).reshape(n_trials, K)
    h = np.empty((n_trials, K + 1))
    h[:, 0] = x0
    for k in range(K):
        h[:, k + 1] = system.alpha * h[:, k] + draws[:, k]
    return h


@dataclass(frozen=True)
class SweepRow:
    coords: tuple
    estimate: ExitEstimate | None
    bounds: dict
    error: str | None = None


def sweep(points, n_trials: int, base_seed: int) -> list[SweepRow]:
    """Run one exit estimate per grid point; rows keyed and seeded by the
    point coordinates so the result is order-insensitive.

    Each point is a mapping with keys ``coords`` (tuple of primitives),
    ``system``, ``controller``, ``x0``, ``K`` and optionally ``epsilon``,
    ``bounds`` (a dict of theoretical bound values attached verbatim).
    A point that fails yields a flagged row instead of aborting the sweep.
    """
    rows = []
    for point in points:
        coords = tuple(point["coords"])
        ss = point_seed(base_seed, coords)
        bounds = dict(point.get("bounds", {}))
        try:
            est = estimate_exit_probability(
                point["system"],
                point.get("controller"),
                point["x0"],
                point["K"],
                n_trials=n_trials,
                base_seed=int(ss.generate_state(1)[0]),
                epsilon=point.get("epsilon", 0.0),
            )
        except (ValueError, KeyError) as exc:
            rows.append(SweepRow(coords=coords, estimate=None, bounds=bounds,
                                 error=str(exc)))
            continue
        rows.append(SweepRow(coords=coords, estimate=est, bounds=bounds))
    return rows
