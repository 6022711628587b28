"""Scenario definitions: the bound-comparison grid, the level-set expansion
comparison against the worst-case floor, and the walker obstacle-avoidance
case study.

Each scenario emits a schema-stable ResultTable (fixed column set per kind)
and is bitwise reproducible from its seed.  Trajectory-level audits (the
exit-event containment check that underpins the kernel bound) run inline and
report their counts through the table metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .bounds import (
    DTCBF,
    SafetySpec,
    comparison_conditions,
    dominance_gap,
    freedman_bound,
    freedman_kernel,
    hlip_delta_sigma,
    issf_worst_case,
    stochastic_issf_bound,
    ville_bound,
)
from .disturbances import Categorical, TruncatedGaussian, UniformInterval
from .martingale import build_candidate, containment_witness, doob_decompose
from .montecarlo import (
    HlipController,
    estimate_exit_probability,
    point_seed,
    simulate_scalar_batch,
    wilson_interval,
)
from .systems import GaitParams, HlipSystem, Obstacle, ScalarLinearSystem
from .tables import ColumnSpec, ResultTable, standard_metadata

__all__ = [
    "Scenario",
    "SCALAR_DISTRIBUTIONS",
    "MACHINERY_DISTURBANCE",
    "bound_grid",
    "issf_compare",
    "hlip_case",
    "audit_containment_scalar",
    "default_epsilon_grid",
    "default_hlip_geometry",
]

#: The three zero-mean scalar disturbance families used throughout: all have
#: support in [-1, 1].  The categorical atoms are -1 w.p. 1/6 and 1/5 w.p.
#: 5/6, which makes the mean exactly zero.
SCALAR_DISTRIBUTIONS = {
    "uniform": UniformInterval(-1.0, 1.0),
    "truncgauss": TruncatedGaussian(0.0, 1.0, -1.0, 1.0),
    "categorical": Categorical(((-1.0, 1.0 / 6.0), (0.2, 5.0 / 6.0))),
}

#: Disturbance for the martingale-machinery checks: truncated at +-1 with a
#: base std of 1/3, so its conditional variance (~0.1081) actually satisfies
#: the sigma = 1/3 premise those checks assert against.
MACHINERY_DISTURBANCE = TruncatedGaussian(0.0, 1.0 / 3.0, -1.0, 1.0)


@dataclass(frozen=True)
class Scenario:
    """One runnable unit: id, kind, parameters, seed and trial count."""

    id: str
    kind: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    trials: int = 1000


# ---------------------------------------------------------------------------
# Bound-comparison grid
# ---------------------------------------------------------------------------

BOUND_GRID_COLUMNS = (
    ColumnSpec("lambda", "float"),
    ColumnSpec("sigma", "float"),
    ColumnSpec("ville", "float"),
    ColumnSpec("freedman", "float"),
    ColumnSpec("cond1", "bool"),
    ColumnSpec("cond2", "bool"),
    ColumnSpec("gap", "float"),
)


def bound_grid(
    B: float = 10.0,
    K: int = 100,
    delta: float = 1.0,
    lambda_grid=None,
    sigma_grid=None,
    scenario_id: str = "bound_grid",
    seed: int = 0,
) -> ResultTable:
    """Both closed-form bounds and the dominance predicate over a
    (lambda, sigma) grid.  Defaults: 101 lambda values on [0, B] and 100
    sigma values on (0, 1]."""
    if lambda_grid is None:
        lambda_grid = np.linspace(0.0, B, 101)
    if sigma_grid is None:
        sigma_grid = np.linspace(0.01, 1.0, 100)
    table = ResultTable(
        columns=BOUND_GRID_COLUMNS,
        metadata=standard_metadata(scenario_id, seed, B=B, K=K, delta=delta),
    )
    sqrt_k = math.sqrt(K)
    for lam in np.asarray(lambda_grid, dtype=float):
        for sigma in np.asarray(sigma_grid, dtype=float):
            ville = 1.0 - lam / B
            freed = freedman_kernel(lam / delta, sigma * sqrt_k / delta)
            c1, c2 = comparison_conditions(lam, delta, sigma, K, B)
            table.append(
                float(lam), float(sigma), ville, freed, c1, c2, ville - freed
            )
    return table


# ---------------------------------------------------------------------------
# Level-set expansion comparison
# ---------------------------------------------------------------------------

ISSF_COLUMNS = (
    ColumnSpec("K", "int"),
    ColumnSpec("epsilon", "float"),
    ColumnSpec("distribution", "str"),
    ColumnSpec("bound_raw", "float"),
    ColumnSpec("bound", "float"),
    ColumnSpec("bound_vacuous", "bool"),
    ColumnSpec("issf_indicator", "int"),
    ColumnSpec("p_hat", "float"),
    ColumnSpec("ci_lo", "float"),
    ColumnSpec("ci_hi", "float"),
    ColumnSpec("n_trials", "int"),
    ColumnSpec("n_exits", "int"),
)


def default_epsilon_grid(n: int = 20, top: float = 120.0) -> np.ndarray:
    return np.linspace(0.0, top, n)


def audit_containment_scalar(
    h_row: np.ndarray,
    alpha: float,
    delta: float,
    K: int,
    epsilon: float,
) -> bool:
    """Containment check for one scalar trajectory and one level set.

    Builds the epsilon-shifted candidate process from the exact conditional
    means E[h_k + eps | F_{k-1}] = alpha h_{k-1} + eps and verifies that an
    exit implies the Doob martingale crossed alpha^K (h0 + eps) / delta.
    """
    h = np.asarray(h_row, dtype=float)
    eta = (h + epsilon) / delta
    eta_cond_means = (alpha * h[:-1] + epsilon) / delta
    trace = build_candidate(eta, eta_cond_means, alpha, 0.0, delta, horizon=K)
    parts = doob_decompose(trace)
    lam = alpha**K * (h[0] + epsilon) / delta
    record = containment_witness(h + epsilon, parts, lam)
    return record.implication_holds


def issf_compare(
    alpha: float = 0.99,
    delta: float = 1.0,
    sigma: float = 1.0 / 3.0,
    h0: float = 10.0,
    K_list=(1, 100, 200, 300, 400),
    epsilon_grid=None,
    distributions=("uniform", "truncgauss", "categorical"),
    trials: int = 1000,
    scenario_id: str = "issf_compare",
    seed: int = 0,
) -> ResultTable:
    """Kernel bound vs worst-case indicator vs sampled frequencies for the
    scalar contraction, per (K, epsilon, distribution).

    One batch of trajectories per (distribution, K) cell serves the whole
    epsilon grid; the exit event for level -epsilon is read off the running
    barrier minimum.  Every exiting trajectory is containment-audited and the
    counts land in the table metadata.
    """
    if epsilon_grid is None:
        epsilon_grid = default_epsilon_grid()
    epsilon_grid = np.asarray(epsilon_grid, dtype=float)
    table = ResultTable(
        columns=ISSF_COLUMNS,
        metadata=standard_metadata(
            scenario_id,
            seed,
            alpha=alpha,
            delta=delta,
            sigma=sigma,
            h0=h0,
            trials=trials,
            batch_shared_across_epsilon=True,
        ),
    )
    audited = 0
    violations = 0
    for name in distributions:
        system = ScalarLinearSystem(alpha=alpha, disturbance=SCALAR_DISTRIBUTIONS[name])
        for K in K_list:
            ss = point_seed(seed, ("issf", name, int(K)))
            h = simulate_scalar_batch(system, h0, int(K), trials, ss)
            row_min = np.min(h, axis=1)
            for eps in epsilon_grid:
                exited = row_min < -eps
                n_exits = int(np.count_nonzero(exited))
                lo, hi = wilson_interval(n_exits, trials)
                result = stochastic_issf_bound(alpha, int(K), h0, delta, sigma, float(eps))
                floor = issf_worst_case(alpha, delta, h0, int(K))
                indicator = 0 if -eps < floor else 1
                for idx in np.nonzero(exited)[0]:
                    audited += 1
                    if not audit_containment_scalar(
                        h[idx], alpha, delta, int(K), float(eps)
                    ):
                        violations += 1
                table.append(
                    int(K),
                    float(eps),
                    name,
                    result.raw,
                    result.clamped,
                    result.vacuous,
                    indicator,
                    n_exits / trials,
                    lo,
                    hi,
                    trials,
                    n_exits,
                )
    table.metadata["containment_audited"] = audited
    table.metadata["containment_violations"] = violations
    return table


# ---------------------------------------------------------------------------
# Walker case study
# ---------------------------------------------------------------------------

HLIP_COLUMNS = (
    ColumnSpec("d_max", "float"),
    ColumnSpec("alpha", "float"),
    ColumnSpec("K", "int"),
    ColumnSpec("h0", "float"),
    ColumnSpec("delta", "float"),
    ColumnSpec("sigma_sq", "float"),
    ColumnSpec("bound_raw", "float"),
    ColumnSpec("bound", "float"),
    ColumnSpec("bound_vacuous", "bool"),
    ColumnSpec("p_hat", "float"),
    ColumnSpec("ci_lo", "float"),
    ColumnSpec("ci_hi", "float"),
    ColumnSpec("n_trials", "int"),
    ColumnSpec("n_exits", "int"),
    ColumnSpec("n_controller_failures", "int"),
    ColumnSpec("first_violation_step", "int"),
)

HLIP_TRAJECTORY_COLUMNS = (
    ColumnSpec("d_max", "float"),
    ColumnSpec("alpha", "float"),
    ColumnSpec("trial", "int"),
    ColumnSpec("step", "int"),
    ColumnSpec("px", "float"),
    ColumnSpec("py", "float"),
)


def default_hlip_geometry() -> dict:
    """Artifact defaults (not sourced from any reference data): the obstacle
    sits just off the straight-line path so the filter has to act."""
    return {
        "x0": np.zeros(6),
        "v_des": (0.35, 0.35),
        "obstacle": Obstacle(rho=np.array([2.0, 1.9]), r=0.5),
        "u_cap": 1.0,
    }


def _first_violation_step(alpha: float, delta: float, h0: float, K: int) -> int:
    """Smallest k <= K whose worst-case floor is negative, else -1."""
    if delta == 0.0:
        return -1
    for k in range(K + 1):
        if issf_worst_case(alpha, delta, h0, k) < 0.0:
            return k
    return -1


def hlip_case(
    d_max_list=(0.0, 0.03, 0.06),
    alpha_list=(0.9, 0.99),
    trials: int = 5000,
    steps_per_second: float = 3.0,
    duration: float = 20.0,
    gait: GaitParams | None = None,
    geometry: dict | None = None,
    matrices: tuple[np.ndarray, np.ndarray] | None = None,
    keep_trajectories: int = 50,
    scenario_id: str = "hlip_case",
    seed: int = 0,
    workers: int = 1,
) -> tuple[ResultTable, ResultTable]:
    """Exit-frequency table plus retained planar trajectories for the walker.

    Per (d_max, alpha) cell: the kernel bound with delta = (5/3) d_max and
    sigma^2 = d_max^2/2, the empirical exit frequency with its interval,
    controller-failure counts, and the earliest step at which the worst-case
    floor stops certifying the original safe set.
    """
    K = int(round(duration * steps_per_second))
    if gait is None:
        period = 1.0 / steps_per_second
        gait = GaitParams(z0=0.8, t_ssp=0.75 * period, t_dsp=0.25 * period)
    geo = default_hlip_geometry()
    if geometry:
        geo.update(geometry)
    x0 = np.asarray(geo["x0"], dtype=float)
    A_mat, B_mat = (None, None) if matrices is None else matrices

    table = ResultTable(
        columns=HLIP_COLUMNS,
        metadata=standard_metadata(
            scenario_id,
            seed,
            K=K,
            duration=duration,
            steps_per_second=steps_per_second,
            z0=gait.z0,
            t_ssp=gait.t_ssp,
            t_dsp=gait.t_dsp,
            obstacle_rho=list(map(float, geo["obstacle"].rho)),
            obstacle_r=geo["obstacle"].r,
            v_des=list(map(float, geo["v_des"])),
            trials=trials,
        ),
    )
    traj_table = ResultTable(
        columns=HLIP_TRAJECTORY_COLUMNS,
        metadata=standard_metadata(scenario_id + "_trajectories", seed),
    )

    audited = 0
    violations = 0
    worst_slack = math.inf
    for d_max in d_max_list:
        for alpha in alpha_list:
            system = HlipSystem(
                gait=gait,
                obstacle=geo["obstacle"],
                d_max=float(d_max),
                A=A_mat,
                B=B_mat,
                u_cap=geo["u_cap"],
            )
            controller = HlipController(v_des=tuple(geo["v_des"]), alpha=float(alpha))
            h0 = system.signed_distance(x0)
            delta, sigma_sq = hlip_delta_sigma(float(d_max))

            if d_max == 0.0:
                # Deterministic filter: the expectation condition holds with
                # the realized value, so no exit is possible from h0 > 0.
                result = bounds.BoundResult.from_raw(0.0 if h0 > 0.0 else 1.0)
            else:
                spec = SafetySpec(
                    mode=DTCBF(alpha=float(alpha)),
                    K=K,
                    h0=h0,
                    delta=delta,
                    sigma=math.sqrt(sigma_sq),
                )
                result = freedman_bound(spec)

            retained: list[tuple[int, np.ndarray]] = []

            def collect(i, outcome, _dm=d_max, _al=alpha, _delta=delta, _K=K):
                nonlocal audited, violations, worst_slack
                traj = outcome.trajectory
                if traj is None:
                    return
                if len(retained) < keep_trajectories:
                    retained.append((i, np.asarray([np.asarray(s)[:2] for s in traj.states])))
                if traj.proc_cond_means.size:
                    slack = np.min(
                        traj.proc_cond_means
                        - _al * traj.h_values[: len(traj.proc_cond_means)]
                    )
                    worst_slack = min(worst_slack, float(slack))
                if outcome.exited and _delta > 0.0:
                    audited += 1
                    eta = traj.proc_values / _delta
                    eta_means = traj.proc_cond_means / _delta
                    trace = build_candidate(eta, eta_means, _al, 0.0, _delta, horizon=_K)
                    parts = doob_decompose(trace)
                    lam = _al**_K * traj.h_values[0] / _delta
                    if not containment_witness(traj.h_values, parts, lam).implication_holds:
                        violations += 1

            ss = point_seed(seed, ("hlip", float(d_max), float(alpha)))
            est = estimate_exit_probability(
                system,
                controller,
                x0,
                K,
                n_trials=trials,
                base_seed=int(ss.generate_state(1)[0]),
                collect=collect,
                max_workers=workers,
            )
            table.append(
                float(d_max),
                float(alpha),
                K,
                h0,
                delta,
                sigma_sq,
                result.raw,
                result.clamped,
                result.vacuous,
                est.p_hat,
                est.ci_lo,
                est.ci_hi,
                est.n_trials,
                est.n_exits,
                est.n_controller_failures,
                _first_violation_step(float(alpha), delta, h0, K),
            )
            for trial_idx, pxy in retained:
                for step, (px, py) in enumerate(pxy):
                    traj_table.append(
                        float(d_max), float(alpha), trial_idx, step, float(px), float(py)
                    )
    table.metadata["containment_audited"] = audited
    table.metadata["containment_violations"] = violations
    table.metadata["worst_filter_slack"] = None if math.isinf(worst_slack) else worst_slack
    return table, traj_table
