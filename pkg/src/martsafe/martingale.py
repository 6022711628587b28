"""Candidate supermartingale construction and empirical verification.

Given a barrier trajectory together with the *analytic* conditional moments
supplied by the model, this module builds the normalized candidate process

    W_k = -a^(K-k) eta_k + a^K eta_0 - sum_{i=1}^k a^(K-i) c/delta,

splits it into its martingale and predictable parts, accumulates predictable
quadratic variation, and checks every property the exit-probability bound
rests on: the supermartingale inequality, the unit bound on martingale
differences, and the containment of the exit event in the threshold-crossing
event of the martingale part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProcessTrace",
    "DoobParts",
    "PqvTrace",
    "ContainmentRecord",
    "build_candidate",
    "doob_decompose",
    "pqv",
    "check_supermartingale",
    "check_difference_bound",
    "containment_witness",
]

#: Absolute tolerance on the normalized (eta) scale for per-step checks.
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ProcessTrace:
    """A process W_0..W_K with analytic one-step conditional moments.

    ``cond_means[k-1]`` is E[W_k | F_{k-1}] and ``cond_second_moments[k-1]``
    is E[(W_k - W_{k-1})^2 | F_{k-1}], both for k = 1..K.  Second moments are
    optional; they are only needed for quadratic-variation accounting.
    """

    values: np.ndarray
    cond_means: np.ndarray
    cond_second_moments: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "cond_means", np.asarray(self.cond_means, dtype=float))
        if self.cond_second_moments is not None:
            object.__setattr__(
                self,
                "cond_second_moments",
                np.asarray(self.cond_second_moments, dtype=float),
            )
        if len(self.cond_means) != len(self.values) - 1:
            raise ValueError(
                f"need one conditional mean per transition: "
                f"{len(self.values)} values vs {len(self.cond_means)} means"
            )
        if (
            self.cond_second_moments is not None
            and len(self.cond_second_moments) != len(self.values) - 1
        ):
            raise ValueError("cond_second_moments length mismatch")

    @property
    def horizon(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class DoobParts:
    """Martingale part M and predictable part A with M + A = W, A_0 = 0."""

    martingale: np.ndarray
    predictable: np.ndarray


@dataclass(frozen=True)
class PqvTrace:
    """Cumulative predictable quadratic variation, nondecreasing from 0."""

    cumulative: np.ndarray

    @property
    def final(self) -> float:
        return float(self.cumulative[-1])


def build_candidate(
    eta_values,
    eta_cond_means,
    alpha_tilde: float,
    c_tilde: float,
    delta: float,
    eta_cond_vars=None,
    horizon: int | None = None,
) -> ProcessTrace:
    """Candidate supermartingale from a normalized barrier sequence.

    ``eta_values`` holds eta_k = h(x_k)/delta for k = 0..K and
    ``eta_cond_means`` holds E[eta_k | F_{k-1}] for k = 1..K.  ``c_tilde`` is
    in barrier units and is divided by delta here.  W_0 = 0 by construction
    (the sum over an empty index range is zero).  When ``eta_cond_vars`` is
    given, conditional second moments of the W increments are filled in so
    the trace supports quadratic-variation accounting.

    ``horizon`` fixes the exponent horizon when the sequence was cut short
    (e.g. a rollout stopped at its first exit); it defaults to the sequence
    length and must not be smaller than it.
    """
    if not 0.0 < alpha_tilde <= 1.0:
        raise ValueError(f"alpha_tilde must be in (0, 1], got {alpha_tilde}")
    if c_tilde < 0.0:
        raise ValueError(f"c_tilde must be >= 0, got {c_tilde}")
    if delta <= 0.0:
        raise ValueError(f"delta must be > 0, got {delta}")
    eta = np.asarray(eta_values, dtype=float)
    eta_means = np.asarray(eta_cond_means, dtype=float)
    if len(eta_means) != len(eta) - 1:
        raise ValueError(
            f"need one conditional mean per transition: "
            f"{len(eta)} eta values vs {len(eta_means)} means"
        )
    n_steps = len(eta) - 1
    K = n_steps if horizon is None else int(horizon)
    if K < n_steps:
        raise ValueError(f"horizon {K} shorter than the sequence ({n_steps} steps)")
    # pow_[j] = alpha_tilde^j built by cumulative products so that the same
    # float is reused wherever the same power appears.
    pow_ = np.concatenate(([1.0], np.cumprod(np.full(K, alpha_tilde)))) if K else np.ones(1)
    k = np.arange(n_steps + 1)
    drift = np.concatenate(
        ([0.0], np.cumsum(pow_[K - np.arange(1, n_steps + 1)] * (c_tilde / delta)))
    )
    values = -pow_[K - k] * eta + pow_[K] * eta[0] - drift
    # E[W_k | F_{k-1}] is the same affine map applied to E[eta_k | F_{k-1}].
    kk = np.arange(1, n_steps + 1)
    cond_means = -pow_[K - kk] * eta_means + pow_[K] * eta[0] - drift[1:]
    second = None
    if eta_cond_vars is not None:
        eta_vars = np.asarray(eta_cond_vars, dtype=float)
        if len(eta_vars) != n_steps:
            raise ValueError("eta_cond_vars length mismatch")
        # E[(W_k - W_{k-1})^2 | F] = Var(W_k | F) + (E[W_k | F] - W_{k-1})^2
        # and Var(W_k | F) = alpha^(2(K-k)) Var(eta_k | F).
        second = pow_[K - kk] ** 2 * eta_vars + (cond_means - values[:-1]) ** 2
    return ProcessTrace(values=values, cond_means=cond_means, cond_second_moments=second)


def doob_decompose(trace: ProcessTrace) -> DoobParts:
    """Unique split W = M + A with M a martingale and A predictable, A_0 = 0.

    A_k = sum_{i<=k} (E[W_i | F_{i-1}] - W_{i-1});  M = W - A.
    """
    increments = trace.cond_means - trace.values[:-1]
    predictable = np.concatenate(([0.0], np.cumsum(increments)))
    martingale = trace.values - predictable
    return DoobParts(martingale=martingale, predictable=predictable)


def pqv(trace: ProcessTrace, martingale_part: bool = False) -> PqvTrace:
    """Cumulative predictable quadratic variation.

    With ``martingale_part`` the increments of the Doob martingale are used:
    E[(M_k - M_{k-1})^2 | F] = E[(W_k - W_{k-1})^2 | F] - (A_k - A_{k-1})^2,
    i.e. the conditional variance of W_k, which drops the predictable drift.
    """
    if trace.cond_second_moments is None:
        raise ValueError("trace carries no conditional second moments")
    second = trace.cond_second_moments
    if martingale_part:
        drift = trace.cond_means - trace.values[:-1]
        second = second - drift * drift
    if np.any(second < -1e-15):
        raise ValueError("negative conditional second moment")
    return PqvTrace(cumulative=np.concatenate(([0.0], np.cumsum(np.maximum(second, 0.0)))))


def check_supermartingale(trace: ProcessTrace, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Per-step booleans: E[W_k | F_{k-1}] <= W_{k-1} + tol."""
    return trace.cond_means <= trace.values[:-1] + tol


def check_difference_bound(
    parts: DoobParts, trace: ProcessTrace, tol: float = DEFAULT_TOL
) -> np.ndarray:
    """Per-step booleans: M_k - M_{k-1} <= 1 + tol.

    The martingale increment equals W_k - E[W_k | F_{k-1}], so the check uses
    the analytic conditional means rather than the reconstructed M.
    """
    diffs = trace.values[1:] - trace.cond_means
    del parts  # reconstruction-free form; kept in the signature for symmetry
    return diffs <= 1.0 + tol


@dataclass(frozen=True)
class ContainmentRecord:
    """Whether the trace exited and whether the martingale crossed lambda."""

    exited: bool
    mart_exceeded: bool
    max_martingale: float
    threshold: float

    @property
    def implication_holds(self) -> bool:
        return (not self.exited) or self.mart_exceeded


def containment_witness(
    h_values, parts: DoobParts, lam: float, tol: float = DEFAULT_TOL
) -> ContainmentRecord:
    """Check {min_k h < 0} implies {max_k M_k >= lam} on one trajectory.

    Exits are strict (h = 0 is safe: the safe set is the closed 0-superlevel
    set).  The threshold comparison allows an absolute tolerance on the
    normalized scale.
    """
    h = np.asarray(h_values, dtype=float)
    m_max = float(np.max(parts.martingale))
    return ContainmentRecord(
        exited=bool(np.any(h < 0.0)),
        mart_exceeded=m_max >= lam - tol,
        max_martingale=m_max,
        threshold=float(lam),
    )
