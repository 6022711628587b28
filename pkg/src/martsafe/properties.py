"""Executable property suite: every module invariant, run at fixed seeds.

Each check returns a PropertyResult row; ``property_suite`` packs them into a
ResultTable.  Any failed row is meant to turn the whole run red.  The checks
deliberately re-derive expectations through independent routes (quadrature,
brute-force sampling, finite differences) rather than reusing the code under
test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import (
    BoundResult,
    comparison_conditions,
    dominance_gap,
    dominance_gap_dsigma2,
    freedman_kernel,
    issf_worst_case,
    log_freedman_kernel,
    santoyo_bound,
    ville_bound,
    DTCBF,
    CMart,
    SafetySpec,
)
from .disturbances import (
    Categorical,
    ProductOfDisks,
    TruncatedGaussian,
    UniformBall,
    UniformDisk2,
    UniformInterval,
)
from .experiments import MACHINERY_DISTURBANCE, SCALAR_DISTRIBUTIONS
from .martingale import (
    build_candidate,
    check_difference_bound,
    check_supermartingale,
    containment_witness,
    doob_decompose,
    pqv,
)
from .montecarlo import (
    mc_cond_moments,
    point_seed,
    simulate_scalar_batch,
    wilson_interval,
)
from .systems import GaitParams, HlipSystem, Obstacle, ScalarLinearSystem
from .tables import ColumnSpec, ResultTable, standard_metadata

__all__ = ["PropertyResult", "property_suite", "PROPERTY_COLUMNS"]

PROPERTY_COLUMNS = (
    ColumnSpec("property", "str"),
    ColumnSpec("passed", "bool"),
    ColumnSpec("n_checked", "int"),
    ColumnSpec("n_violations", "int"),
    ColumnSpec("worst_margin", "float"),
    ColumnSpec("detail", "str"),
)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    n_checked: int
    n_violations: int
    worst_margin: float
    detail: str = ""


def _result(name, margins, tol=0.0, detail=""):
    """Margins >= -tol pass; worst margin is reported."""
    margins = np.asarray(margins, dtype=float)
    bad = int(np.count_nonzero(margins < -tol))
    return PropertyResult(
        name=name,
        passed=bad == 0,
        n_checked=margins.size,
        n_violations=bad,
        worst_margin=float(np.min(margins)) if margins.size else 0.0,
        detail=detail,
    )


# ---------------------------------------------------------------------------
# Kernel and bound properties
# ---------------------------------------------------------------------------

def check_kernel_identity(rng):
    margins = []
    for xi in (0.1, 0.5, 1.0, 2.0, 7.3, 10.0):
        margins.append(0.0 if freedman_kernel(0.0, xi) == 1.0 else -1.0)
    return _result("kernel_identity_h0_equals_1", margins)


def check_kernel_monotonicity(rng):
    lams = np.linspace(0.0, 20.0, 50)
    xis = np.linspace(0.2, 10.0, 50)
    grid = np.array([[log_freedman_kernel(l, x) for x in xis] for l in lams])
    margins = np.concatenate(
        [
            -(np.diff(grid, axis=0)).ravel(),  # nonincreasing in lambda
            (np.diff(grid, axis=1)).ravel(),  # nondecreasing in xi
        ]
    )
    return _result("kernel_monotonicity_grid", margins, tol=1e-12)


def check_mgf_lemma(rng):
    gam = rng.uniform(0.0, 5.0, size=10_000)
    x = rng.uniform(-10.0, 1.0, size=10_000)
    lhs = np.exp(gam * x)
    rhs = 1.0 + gam * x + x * x * (np.exp(gam) - 1.0 - gam)
    return _result("mgf_lemma", rhs - lhs, tol=1e-12)


def check_optimal_gamma(rng):
    margins = []
    rel = []
    for _ in range(1000):
        lam = rng.uniform(0.0, 20.0)
        xi = rng.uniform(0.1, 10.0)
        xi2 = xi * xi
        g_star = math.log((lam + xi2) / xi2)
        log_at = lambda g: (math.exp(g) - 1.0 - g) * xi2 - g * lam
        log_h = log_freedman_kernel(lam, xi)
        rel.append(abs(log_at(g_star) - log_h) <= 1e-12 * max(1.0, abs(log_h)))
        # the chosen gamma must minimize the exponent over perturbations
        for f in np.linspace(0.5, 1.5, 20):
            g = max(0.0, g_star * f)
            margins.append(log_at(g) - log_at(g_star))
    ok = all(rel)
    res = _result("optimal_gamma_minimizes", margins, tol=1e-12)
    return PropertyResult(
        name="optimal_gamma_consistency",
        passed=ok and res.passed,
        n_checked=res.n_checked + len(rel),
        n_violations=res.n_violations + (0 if ok else 1),
        worst_margin=res.worst_margin,
        detail="gamma* reproduces the kernel and minimizes the exponent",
    )


def _random_condition_tuple(rng):
    """Random (lam, delta, sigma, K, B) satisfying both comparison conditions."""
    while True:
        delta = rng.uniform(0.1, 3.0)
        b_val = rng.uniform(delta / (2 * math.log(2) - 1) + 0.01, 30.0)
        lam_hi = b_val - delta / (2 * math.log(2) - 1)
        lam = rng.uniform(0.0, lam_hi)
        K = int(rng.integers(1, 400))
        sigma_hi = math.sqrt(max(lam * delta / K, 1e-12))
        sigma = rng.uniform(0.0, sigma_hi)
        if sigma <= 0.0:
            continue
        c1, c2 = comparison_conditions(lam, delta, sigma, K, b_val)
        if c1 and c2:
            return lam, delta, sigma, K, b_val


def check_prop1_dominance(rng):
    margins = []
    for _ in range(10_000):
        lam, delta, sigma, K, b_val = _random_condition_tuple(rng)
        margins.append(dominance_gap(lam, b_val, sigma, K, delta))
    return _result("dominance_under_conditions", margins, tol=1e-12)


def check_derivative_factorization(rng):
    rel_margins = []
    sign_margins = []
    checked = 0
    while checked < 1000:
        lam = rng.uniform(0.1, 10.0)
        b_val = rng.uniform(1.0, 20.0)
        sigma = rng.uniform(0.05, 2.0)
        K = int(rng.integers(1, 300))
        delta = rng.uniform(0.2, 3.0)
        analytic = dominance_gap_dsigma2(lam, b_val, sigma, K, delta)
        s2 = sigma * sigma
        step = 1e-6 * s2
        # The gap is O(1), so each evaluation carries ~1e-16 rounding noise;
        # only test points where the true difference dwarfs that, otherwise
        # the central difference verifies nothing.
        if abs(analytic) * 2.0 * step < 1e-11:
            continue
        checked += 1
        fd = (
            dominance_gap(lam, b_val, math.sqrt(s2 + step), K, delta)
            - dominance_gap(lam, b_val, math.sqrt(s2 - step), K, delta)
        ) / (2.0 * step)
        scale = max(abs(analytic), abs(fd), 1e-30)
        rel_margins.append(1e-5 - abs(analytic - fd) / scale)
        sign_margins.append(-analytic)  # derivative must be <= 0
    return _result(
        "derivative_matches_fd_and_nonpositive",
        np.concatenate([rel_margins, sign_margins]),
    )


def check_derivative_b_factor(rng):
    margins = []
    for _ in range(1000):
        lam = rng.uniform(0.0, 10.0)
        sigma = rng.uniform(0.05, 2.0)
        K = int(rng.integers(1, 300))
        delta = rng.uniform(0.2, 3.0)
        s2 = sigma * sigma
        b = lam * delta - s2 * K * math.log1p(lam * delta / (s2 * K))
        margins.append(b)
    return _result("derivative_b_factor_nonnegative", margins, tol=1e-12)


def check_santoyo_coincidence(rng):
    margins = []
    for _ in range(500):
        alpha = rng.uniform(0.05, 1.0)
        K = int(rng.integers(1, 200))
        h0 = rng.uniform(0.0, 9.0)
        b_val = rng.uniform(max(h0, 0.1), 20.0)
        c = rng.uniform(0.0, 0.5)
        s1 = santoyo_bound(alpha, 0.0, K, h0, b_val).raw
        v1 = ville_bound(
            SafetySpec(DTCBF(alpha), K, h0, 1.0, 1.0, B=b_val)
        ).raw
        s2 = santoyo_bound(1.0, c, K, h0, b_val).raw
        v2 = ville_bound(SafetySpec(CMart(c), K, h0, 1.0, 1.0, B=b_val)).raw
        for a, b in ((s1, v1), (s2, v2)):
            margins.append(1e-14 - abs(a - b) / max(1.0, abs(a), abs(b)))
    return _result("santoyo_ville_coincidence", margins)


def check_vacuity_handling(rng):
    margins = []
    for _ in range(1000):
        raw = rng.uniform(-1.0, 3.0)
        r = BoundResult.from_raw(raw)
        ok = (
            0.0 <= r.clamped <= 1.0
            and r.clamped == min(1.0, max(0.0, raw))
            and r.vacuous == (raw >= 1.0)
        )
        margins.append(0.0 if ok else -1.0)
    return _result("vacuity_handling", margins)


# ---------------------------------------------------------------------------
# Martingale machinery properties
# ---------------------------------------------------------------------------

def _machinery_batch(rng_seed, n=2000, K=100, alpha=0.99, h0=10.0):
    system = ScalarLinearSystem(alpha=alpha, disturbance=MACHINERY_DISTURBANCE)
    h = simulate_scalar_batch(system, h0, K, n, rng_seed)
    return system, h


def check_doob_reconstruction(rng):
    system, h = _machinery_batch(point_seed(7, ("doob",)), n=200)
    alpha = system.alpha
    var = system.cond_var_h(0.0)
    margins = []
    for row in h:
        eta_means = alpha * row[:-1]
        trace = build_candidate(row, eta_means, alpha, 0.0, 1.0,
                                eta_cond_vars=np.full(len(row) - 1, var))
        parts = doob_decompose(trace)
        err = np.max(np.abs(parts.martingale + parts.predictable - trace.values))
        margins.append(1e-12 - err)
    return _result("doob_reconstruction", margins)


def check_predictable_nonincrease(rng):
    system, h = _machinery_batch(point_seed(7, ("predictable",)), n=500)
    alpha = system.alpha
    margins = []
    for row in h:
        trace = build_candidate(row, alpha * row[:-1], alpha, 0.0, 1.0)
        parts = doob_decompose(trace)
        inc = np.diff(parts.predictable)
        margins.append(1e-12 - float(np.max(inc)) if inc.size else 0.0)
    return _result("predictable_nonincrease", margins)


def check_martingale_zero_drift(rng):
    system, h = _machinery_batch(point_seed(7, ("drift",)), n=10_000)
    alpha, K = system.alpha, h.shape[1] - 1
    var = system.cond_var_h(0.0)
    pqv_total = var * (1.0 - alpha ** (2 * K)) / (1.0 - alpha * alpha)
    m_K = np.empty(h.shape[0])
    for i, row in enumerate(h):
        trace = build_candidate(row, alpha * row[:-1], alpha, 0.0, 1.0)
        m_K[i] = doob_decompose(trace).martingale[-1]
    band = 5.0 * math.sqrt(pqv_total / h.shape[0])
    margin = band - abs(float(np.mean(m_K)))
    return _result("martingale_zero_drift", [margin],
                   detail=f"mean M_K = {np.mean(m_K):.3e}, 5-sigma band {band:.3e}")


def check_pqv_bound(rng):
    system, h = _machinery_batch(point_seed(7, ("pqv",)), n=500)
    alpha, K = system.alpha, h.shape[1] - 1
    var = system.cond_var_h(0.0)
    sigma2 = (1.0 / 3.0) ** 2
    margins = []
    for row in h:
        trace = build_candidate(
            row, alpha * row[:-1], alpha, 0.0, 1.0,
            eta_cond_vars=np.full(K, var),
        )
        total = pqv(trace, martingale_part=True).final
        margins.append(sigma2 * K + 1e-12 - total)
    return _result("pqv_bound", margins, detail="sigma = 1/3, delta = 1")


def check_supermartingale_and_differences(rng):
    system, h = _machinery_batch(point_seed(7, ("super",)), n=500)
    alpha = system.alpha
    margins = []
    for row in h:
        trace = build_candidate(row, alpha * row[:-1], alpha, 0.0, 1.0)
        parts = doob_decompose(trace)
        ok = bool(np.all(check_supermartingale(trace, tol=1e-12)))
        ok &= bool(np.all(check_difference_bound(parts, trace, tol=1e-12)))
        margins.append(0.0 if ok else -1.0)
    return _result("supermartingale_and_difference_bounds", margins)


def check_containment(rng):
    system, h = _machinery_batch(point_seed(7, ("containment",)), n=2000)
    alpha, K = system.alpha, h.shape[1] - 1
    margins = []
    n_exits = 0
    for row in h:
        trace = build_candidate(row, alpha * row[:-1], alpha, 0.0, 1.0)
        parts = doob_decompose(trace)
        lam = alpha**K * row[0]
        record = containment_witness(row, parts, lam)
        if record.exited:
            n_exits += 1
            margins.append(0.0 if record.mart_exceeded else -1.0)
    return _result("containment_exits_cross_threshold", margins,
                   detail=f"{n_exits} exiting trajectories audited")


# ---------------------------------------------------------------------------
# Distribution and system properties
# ---------------------------------------------------------------------------

def _moment_margin_scalar(dist, rng, n=1_000_000):
    mean, var = dist.exact_moments()
    x = dist.sample_batch(rng, n)
    se_mean = math.sqrt(var / n)
    m4 = float(np.mean((x - mean) ** 4))
    se_var = math.sqrt(max(m4 - var * var, 1e-30) / n)
    return [
        5.0 * se_mean - abs(float(np.mean(x)) - mean),
        5.0 * se_var - abs(float(np.var(x)) - var),
    ]


def check_distribution_moments(rng):
    margins = []
    for dist in (
        UniformInterval(-1.0, 1.0),
        TruncatedGaussian(0.0, 1.0, -1.0, 1.0),
        TruncatedGaussian(0.0, 1.0 / 3.0, -1.0, 1.0),
        Categorical(((-1.0, 1.0 / 6.0), (0.2, 5.0 / 6.0))),
    ):
        margins.extend(_moment_margin_scalar(dist, rng))
    for dist in (
        UniformDisk2(0.3),
        ProductOfDisks((0.06, 0.06)),
        UniformBall(0.5, 4),
    ):
        mean, cov = dist.exact_moments()
        x = dist.sample_batch(rng, 1_000_000)
        n = x.shape[0]
        for j in range(dist.dim):
            se = math.sqrt(cov[j, j] / n)
            margins.append(5.0 * se - abs(float(np.mean(x[:, j])) - mean[j]))
            m4 = float(np.mean((x[:, j] - mean[j]) ** 4))
            se_v = math.sqrt(max(m4 - cov[j, j] ** 2, 1e-30) / n)
            margins.append(5.0 * se_v - abs(float(np.var(x[:, j])) - cov[j, j]))
    return _result("distribution_moments_5sigma", margins)


def check_disk_projection_variance(rng):
    """Quadrature oracle: Var of a unit-direction projection of a uniform
    disk equals R^2/4 (strictly inside the walker's sigma^2 = R^2/2)."""
    R = 0.3
    # polar quadrature of E[(e.x)^2] over the disk, e = (1, 0)
    r = np.linspace(0.0, R, 20001)
    th = np.linspace(0.0, 2.0 * math.pi, 20001)
    fr = np.trapezoid(r**3, r)  # integral r^3 dr
    fth = np.trapezoid(np.cos(th) ** 2, th)
    quad = fr * fth / (math.pi * R * R)
    margins = [1e-6 - abs(quad - R * R / 4.0)]
    return _result("uniform_disk_projection_variance", margins)


def check_issf_floor(rng):
    system = ScalarLinearSystem(alpha=0.9, disturbance=UniformInterval(-0.5, 0.5))
    delta = 0.5
    h = simulate_scalar_batch(system, 3.0, 60, 500, point_seed(11, ("issf-floor",)))
    ks = np.arange(h.shape[1])
    floors = np.array(
        [issf_worst_case(system.alpha, delta, 3.0, int(k)) for k in ks]
    )
    margins = (h - floors[None, :] + 1e-12).ravel()
    return _result("issf_worst_case_floor", margins)


def _default_hlip(d_max=0.06):
    return HlipSystem(
        gait=GaitParams(z0=0.8, t_ssp=0.25, t_dsp=1.0 / 3.0 - 0.25),
        obstacle=Obstacle(rho=np.array([2.0, 1.9]), r=0.5),
        d_max=d_max,
    )


def _random_hlip_state(rng):
    x = np.zeros(6)
    x[0:2] = rng.uniform(-1.0, 1.0, size=2) + np.array([0.0, -0.5])
    x[2:4] = rng.uniform(-0.2, 0.2, size=2)
    x[4:6] = rng.uniform(-0.5, 0.5, size=2)
    return x


def check_filter_idempotence(rng):
    system = _default_hlip()
    margins = []
    for _ in range(300):
        x = _random_hlip_state(rng)
        if system.signed_distance(x) <= 0.01:
            continue
        u_nom = rng.uniform(-1.0, 1.0, size=2)
        u1 = system.safety_filter(x, u_nom, 0.9)
        u2 = system.safety_filter(x, u1, 0.9)
        margins.append(0.0 if np.array_equal(u1, u2) else -1.0)
    return _result("filter_idempotence", margins)


def check_filter_constraint(rng):
    system = _default_hlip()
    margins = []
    for _ in range(1000):
        x = _random_hlip_state(rng)
        h = system.signed_distance(x)
        if h <= 0.01:
            continue
        u_nom = rng.uniform(-1.0, 1.0, size=2)
        u = system.safety_filter(x, u_nom, 0.9)
        mean, _ = system.cond_moments_hbar(x, u)
        margins.append(mean - 0.9 * h + 1e-9)
    return _result("filter_satisfies_expectation_condition", margins)


def check_convexification_conservatism(rng):
    system = _default_hlip()
    margins = []
    for _ in range(1000):
        x = _random_hlip_state(rng)
        if system.signed_distance(x) <= 0.01:
            continue
        p_next = x[:2] + rng.uniform(-0.5, 0.5, size=2)
        be = system.barrier(x, p_next=p_next)
        h_next = float(np.linalg.norm(p_next - system.obstacle.rho)) - system.obstacle.r
        margins.append(h_next - be.hbar + 1e-12)
    return _result("convexification_conservative", margins)


def check_mc_cond_moment_agreement(rng):
    margins = []
    scalar = ScalarLinearSystem(alpha=0.99, disturbance=SCALAR_DISTRIBUTIONS["uniform"])
    for i in range(5):
        x = float(rng.uniform(-5.0, 5.0))
        mean_est, var_est, (se_m, se_v) = mc_cond_moments(scalar, x, None, 4000, 100 + i)
        margins.append(5.0 * se_m - abs(mean_est - scalar.cond_mean_h(x)))
        margins.append(5.0 * se_v - abs(var_est - scalar.cond_var_h(x)))
    system = _default_hlip()
    for i in range(5):
        x = _random_hlip_state(rng)
        if system.signed_distance(x) <= 0.05:
            continue
        u = rng.uniform(-0.5, 0.5, size=2)
        mean, var = system.cond_moments_hbar(x, u)
        mean_est, var_est, (se_m, se_v) = mc_cond_moments(system, x, u, 4000, 200 + i)
        margins.append(5.0 * se_m - abs(mean_est - mean))
        margins.append(5.0 * se_v - abs(var_est - var))
    return _result("mc_cond_moments_agree_with_analytic", margins)


def check_estimator_sanity(rng):
    """Wilson 95% interval covers the true Bernoulli p in >= 93% of runs."""
    margins = []
    for p in (0.1, 0.5):
        covered = 0
        reps = 1000
        draws = rng.random(size=(reps, 500)) < p
        for row in draws:
            k = int(np.count_nonzero(row))
            lo, hi = wilson_interval(k, 500)
            covered += lo <= p <= hi
        margins.append(covered / reps - 0.93)
    return _result("wilson_coverage", margins)


def check_ville_empirical(rng):
    """Empirical tail of the nonnegative supermartingale built from an
    upper-bounded barrier stays below its initial-mean-over-threshold bound.

    The process B a^-K - a^-k h(x_k) crosses B a^-K exactly when the barrier
    goes negative, so the frequency of that crossing is compared to
    E[W_0]/lambda plus three interval half-widths.
    """
    alpha, K, B, h0, trials = 0.99, 100, 10.0, 5.0, 5000
    system = ScalarLinearSystem(
        alpha=alpha, disturbance=SCALAR_DISTRIBUTIONS["truncgauss"]
    )
    h = simulate_scalar_batch(system, h0, K, trials, point_seed(13, ("ville",)))
    crossings = int(np.count_nonzero(np.min(h, axis=1) < 0.0))
    p_hat = crossings / trials
    lo, hi = wilson_interval(crossings, trials)
    half = (hi - lo) / 2.0
    bound = (B * alpha**-K - h0) / (B * alpha**-K)
    margin = bound + 3.0 * half - p_hat
    return _result(
        "ville_empirical_tail",
        [margin],
        detail=f"p_hat = {p_hat:.4f}, bound = {bound:.4f}",
    )


ALL_CHECKS = (
    check_kernel_identity,
    check_kernel_monotonicity,
    check_mgf_lemma,
    check_optimal_gamma,
    check_prop1_dominance,
    check_derivative_factorization,
    check_derivative_b_factor,
    check_santoyo_coincidence,
    check_vacuity_handling,
    check_doob_reconstruction,
    check_predictable_nonincrease,
    check_martingale_zero_drift,
    check_pqv_bound,
    check_supermartingale_and_differences,
    check_containment,
    check_distribution_moments,
    check_disk_projection_variance,
    check_issf_floor,
    check_filter_idempotence,
    check_filter_constraint,
    check_convexification_conservatism,
    check_mc_cond_moment_agreement,
    check_estimator_sanity,
    check_ville_empirical,
)


def property_suite(scenario_id: str = "property_suite", seed: int = 0) -> ResultTable:
    """Run every named invariant at fixed seeds; one row per property."""
    table = ResultTable(
        columns=PROPERTY_COLUMNS,
        metadata=standard_metadata(scenario_id, seed),
    )
    for check in ALL_CHECKS:
        rng = np.random.default_rng(point_seed(seed, ("property", check.__name__)))
        res = check(rng)
        table.append(
            res.name,
            res.passed,
            res.n_checked,
            res.n_violations,
            res.worst_margin,
            res.detail,
        )
    return table
