"""Closed-form finite-horizon safety probability bounds.

Everything in this module is a pure function of its arguments: the
supermartingale concentration kernel, the Ville-style bound for upper-bounded
barriers, the Freedman-style bound for barriers with bounded one-step drop and
conditional variance, the almost-sure worst-case (ISSf) floor, the comparison
predicates between the two bound families, and the constructive recipes for
the (delta, sigma^2) parameters.

Units: ``h0``, ``delta``, ``B`` and ``c`` are in barrier units; ``alpha`` is a
per-step contraction factor in (0, 1]; ``sigma`` is the conditional standard
deviation bound of the one-step barrier update, also in barrier units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "DTCBF",
    "CMart",
    "General",
    "SafetySpec",
    "BoundResult",
    "PHI",
    "freedman_kernel",
    "log_freedman_kernel",
    "lambda_threshold",
    "ville_bound",
    "freedman_bound",
    "tightened_pqv",
    "issf_worst_case",
    "issf_safe_level",
    "stochastic_issf_bound",
    "comparison_conditions",
    "dominance_gap",
    "dominance_gap_dsigma2",
    "santoyo_bound",
    "constructive_delta_sigma",
    "hlip_delta_sigma",
    "lambert_w_minus1",
    "psi",
    "psi_threshold",
]

#: Exponent constant in the second comparison condition, 2*ln(2) - 1.
PHI = 2.0 * math.log(2.0) - 1.0

_INV_E = math.exp(-1.0)


# ---------------------------------------------------------------------------
# Safety specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DTCBF:
    """Expectation condition E[h_{k+1} | F_k] >= alpha * h_k."""

    alpha: float

    def validate(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"DTCBF alpha must be in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class CMart:
    """Expectation condition E[h_{k+1} | F_k] >= h_k - c."""

    c: float

    def validate(self):
        if self.c < 0.0:
            raise ValueError(f"c-martingale drop c must be >= 0, got {self.c}")


@dataclass(frozen=True)
class General:
    """Combined condition E[h_{k+1} | F_k] >= alpha_tilde * h_k - c_tilde."""

    alpha_tilde: float
    c_tilde: float

    def validate(self):
        if not 0.0 < self.alpha_tilde <= 1.0:
            raise ValueError(
                f"alpha_tilde must be in (0, 1], got {self.alpha_tilde}"
            )
        if self.c_tilde < 0.0:
            raise ValueError(f"c_tilde must be >= 0, got {self.c_tilde}")


Mode = DTCBF | CMart | General


@dataclass(frozen=True)
class SafetySpec:
    """Parameters shared by every bound: mode, horizon and moment bounds.

    ``B`` is only needed by the Ville-style bound and may be omitted.
    """

    mode: Mode
    K: int
    h0: float
    delta: float
    sigma: float
    B: float | None = None

    def __post_init__(self):
        self.mode.validate()
        if self.K < 1:
            raise ValueError(f"horizon K must be >= 1, got {self.K}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.B is not None and self.B <= 0.0:
            raise ValueError(f"B must be > 0 when given, got {self.B}")


@dataclass(frozen=True)
class BoundResult:
    """A probability bound before and after clamping to [0, 1].

    ``raw`` may exceed 1; such bounds are valid but carry no information,
    which the ``vacuous`` flag records (raw >= 1).
    """

    raw: float
    clamped: float
    vacuous: bool

    @staticmethod
    def from_raw(raw: float) -> "BoundResult":
        return BoundResult(
            raw=raw,
            clamped=min(1.0, max(0.0, raw)),
            vacuous=raw >= 1.0,
        )


# ---------------------------------------------------------------------------
# Supermartingale concentration kernel
# ---------------------------------------------------------------------------

def log_freedman_kernel(lam: float, xi: float) -> float:
    """log H(lam, xi) for H(lam, xi) = (xi^2/(lam+xi^2))^(lam+xi^2) e^lam.

    Evaluated as lam - (lam + xi^2) * log1p(lam / xi^2), which is exact at
    lam = 0 and avoids the overflow/underflow of the power form once
    lam + xi^2 exceeds a few hundred.
    """
    if lam < 0.0:
        raise ValueError(f"kernel requires lam >= 0, got {lam}")
    if xi <= 0.0:
        raise ValueError(f"kernel requires xi > 0, got {xi}")
    xi2 = xi * xi
    return lam - (lam + xi2) * math.log1p(lam / xi2)


def freedman_kernel(lam: float, xi: float) -> float:
    """H(lam, xi), the tail bound for supermartingales with differences <= 1
    and predictable quadratic variation <= xi^2."""
    return math.exp(log_freedman_kernel(lam, xi))


# ---------------------------------------------------------------------------
# Exit-probability bounds
# ---------------------------------------------------------------------------

def _geom_sum(alpha: float, K: int) -> float:
    """sum_{j=0}^{K-1} alpha^j with the alpha = 1 case handled exactly."""
    if alpha == 1.0:
        return float(K)
    return (1.0 - alpha**K) / (1.0 - alpha)


def lambda_threshold(spec: SafetySpec) -> float:
    """Threshold numerator (barrier units, before division by delta).

    DTCBF: alpha^K h0.  c-martingale: h0 - c K.  General:
    alpha_tilde^K h0 - c_tilde * sum_{i=1}^K alpha_tilde^(K-i).
    May be negative; the caller decides what a negative threshold means.
    """
    m = spec.mode
    if isinstance(m, DTCBF):
        return m.alpha**spec.K * spec.h0
    if isinstance(m, CMart):
        return spec.h0 - m.c * spec.K
    return m.alpha_tilde**spec.K * spec.h0 - m.c_tilde * _geom_sum(
        m.alpha_tilde, spec.K
    )


def ville_bound(spec: SafetySpec) -> BoundResult:
    """Exit-probability bound 1 - lambda/B for barriers upper-bounded by B."""
    if spec.B is None:
        raise ValueError("ville_bound requires the barrier upper bound B")
    return BoundResult.from_raw(1.0 - lambda_threshold(spec) / spec.B)


def freedman_bound(spec: SafetySpec) -> BoundResult:
    """Exit-probability bound H(lambda/delta, sigma*sqrt(K)/delta).

    A negative threshold leaves the kernel undefined, and the guarantee
    carries no information; that case returns a vacuous raw = 1 result.
    """
    lam = lambda_threshold(spec)
    if lam < 0.0:
        return BoundResult(raw=1.0, clamped=1.0, vacuous=True)
    h = freedman_kernel(lam / spec.delta, spec.sigma * math.sqrt(spec.K) / spec.delta)
    return BoundResult.from_raw(h)


def tightened_pqv(alpha: float, K: int, sigma: float, delta: float) -> float:
    """Geometric-series bound sigma^2 (1 - alpha^(2K)) / (delta^2 (1 - alpha^2)).

    Strictly below sigma^2 K / delta^2 for alpha in (0, 1).  Singular at
    alpha = 1, where the plain sum sigma^2 K / delta^2 applies instead.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(
            f"tightened_pqv requires alpha in (0, 1); use sigma^2*K/delta^2 "
            f"at alpha = 1 (got alpha = {alpha})"
        )
    return (sigma * sigma) * (1.0 - alpha ** (2 * K)) / (
        delta * delta * (1.0 - alpha * alpha)
    )


def issf_worst_case(alpha: float, delta: float, h0: float, k: int) -> float:
    """Almost-sure lower bound alpha^k h0 - sum_{i=0}^{k-1} alpha^i delta."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"issf_worst_case requires alpha in [0, 1), got {alpha}")
    if k < 0:
        raise ValueError(f"step index must be >= 0, got {k}")
    if k == 0:
        return h0
    return alpha**k * h0 - delta * _geom_sum(alpha, k)


def issf_safe_level(alpha: float, delta: float) -> float:
    """Level -delta/(1-alpha) whose superlevel set is forward invariant a.s."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"issf_safe_level requires alpha in [0, 1), got {alpha}")
    return -delta / (1.0 - alpha)


def stochastic_issf_bound(
    alpha: float,
    K: int,
    h0: float,
    delta: float,
    sigma: float,
    epsilon: float,
) -> BoundResult:
    """Bound on P{min_k h(x_k) < -epsilon} over K steps.

    Combines the kernel at lambda = alpha^K (h0 + epsilon) / delta with the
    geometric-series quadratic-variation bound, and returns 0 outright when
    the almost-sure worst-case floor makes the event impossible.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"stochastic_issf_bound requires alpha in (0, 1), got {alpha}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if K < 1:
        raise ValueError(f"horizon K must be >= 1, got {K}")
    floor = issf_worst_case(alpha, delta, h0, K)
    if -epsilon < floor:
        return BoundResult(raw=0.0, clamped=0.0, vacuous=False)
    lam = alpha**K * (h0 + epsilon) / delta
    if lam < 0.0:
        return BoundResult(raw=1.0, clamped=1.0, vacuous=True)
    xi = math.sqrt(tightened_pqv(alpha, K, sigma, delta))
    return BoundResult.from_raw(freedman_kernel(lam, xi))


# ---------------------------------------------------------------------------
# Bound comparison
# ---------------------------------------------------------------------------

def comparison_conditions(
    lam: float, delta: float, sigma: float, K: int, B: float
) -> tuple[bool, bool]:
    """The two sufficient conditions under which the kernel bound dominates.

    cond1: lam * delta >= sigma^2 K.  cond2: lam <= B - delta/PHI.
    """
    if delta <= 0.0 or sigma <= 0.0 or B <= 0.0:
        raise ValueError("comparison_conditions requires delta, sigma, B > 0")
    cond1 = lam * delta >= sigma * sigma * K
    cond2 = lam <= B - delta / PHI
    return cond1, cond2


def dominance_gap(lam: float, B: float, sigma: float, K: int, delta: float) -> float:
    """Gap 1 - lam/B - H(lam/delta, sigma*sqrt(K)/delta).

    Nonnegative whenever both comparison conditions hold; may be negative
    otherwise.
    """
    return 1.0 - lam / B - freedman_kernel(lam / delta, sigma * math.sqrt(K) / delta)


def dominance_gap_dsigma2(
    lam: float, B: float, sigma: float, K: int, delta: float
) -> float:
    """Analytic partial derivative of dominance_gap with respect to sigma^2.

    Factorizes as a * b with a = -H(lam/delta, sigma sqrt(K)/delta)/(delta^2
    sigma^2) < 0 and b = lam*delta + sigma^2 K ln(sigma^2 K/(lam delta +
    sigma^2 K)) >= 0, so the value is always <= 0.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    s2 = sigma * sigma
    h = freedman_kernel(lam / delta, math.sqrt(s2 * K) / delta)
    a = -h / (delta * delta * s2)
    # b = s2 K (x - log1p(x)) with x = lam delta / (s2 K); the direct
    # subtraction cancels catastrophically for small x (and can even go
    # negative by an ulp, breaking b >= 0), so switch to the series there.
    x = lam * delta / (s2 * K)
    if x < 1e-4:
        diff = x * x * (0.5 - x / 3.0 + x * x / 4.0)
    else:
        diff = x - math.log1p(x)
    b = s2 * K * diff
    return a * b


def santoyo_bound(alpha: float, c: float, K: int, h0: float, B: float) -> BoundResult:
    """Four-case Ville-style bound for E[h_{k+1}|F_k] >= alpha h_k - c with
    h <= B, written with the barrier-function sign convention.

    The alpha in (0,1], c = 0 case coincides with the DTCBF Ville bound and
    the alpha = 1 case with the c-martingale Ville bound.
    """
    if B <= 0.0:
        raise ValueError(f"B must be > 0, got {B}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if K < 1:
        raise ValueError(f"horizon K must be >= 1, got {K}")
    if alpha == 1.0:
        raw = 1.0 - (h0 - c * K) / B
    elif c == 0.0:
        raw = 1.0 - alpha**K * h0 / B
    elif c < 0.0:
        raw = 1.0 - (h0 / B) * ((alpha * B - c) / B) ** K
    else:
        raw = 1.0 - (alpha**K * h0 / (1.0 - alpha)) * ((c + (1.0 - alpha) * B) / B)
    return BoundResult.from_raw(raw)


# ---------------------------------------------------------------------------
# Constructive (delta, sigma^2) recipes
# ---------------------------------------------------------------------------

def constructive_delta_sigma(lipschitz: float, d_max: float) -> tuple[float, float]:
    """Sufficient (delta, sigma^2) for a Lipschitz barrier under a disturbance
    bounded in norm by d_max: delta = 2 L d_max, sigma^2 = L^2 d_max^2."""
    if lipschitz < 0.0 or d_max < 0.0:
        raise ValueError("lipschitz constant and d_max must be >= 0")
    return 2.0 * lipschitz * d_max, lipschitz * lipschitz * d_max * d_max


def hlip_delta_sigma(d_max: float) -> tuple[float, float]:
    """(delta, sigma^2) for the signed-distance barrier of the walker model
    under a uniform-disk position disturbance of radius d_max:
    delta = (5/3) d_max, sigma^2 = d_max^2 / 2."""
    if d_max < 0.0:
        raise ValueError(f"d_max must be >= 0, got {d_max}")
    return (5.0 / 3.0) * d_max, d_max * d_max / 2.0


# ---------------------------------------------------------------------------
# Lambert-W machinery
# ---------------------------------------------------------------------------

def lambert_w_minus1(x: float) -> float:
    """Real branch W_{-1} of w e^w = x on [-1/e, 0), with W_{-1} <= -1.

    Halley iterations (at most 100, step tolerance 1e-13) polish a series
    initial guess; near the branch point the series alone is used because the
    Newton/Halley denominators degenerate there.
    """
    if not (-_INV_E <= x < 0.0):
        raise ValueError(f"lambert_w_minus1 domain is [-1/e, 0), got {x}")
    q = 1.0 + math.e * x
    if q <= 0.0:
        # At (or a rounding error below) the branch point.
        return -1.0
    p = -math.sqrt(2.0 * q)
    # Branch-point series W = -1 + p - p^2/3 + 11 p^3/72 - 43 p^4/540 + ...
    w = -1.0 + p * (
        1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0)))
    )
    if p > -1e-4:
        # Series error is O(p^5) ~ 1e-20 here; Halley would divide by ~0.
        return w
    if x > -0.25:
        # Series is poor far from the branch point; switch to the
        # asymptotic form w = ln(-x) - ln(-ln(-x)) + correction.
        log_mx = math.log(-x)
        log_mlog = math.log(-log_mx)
        w = log_mx - log_mlog + log_mlog / log_mx
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-13 * (1.0 + abs(w)):
            break
    return w


def psi(phi: float, B: float) -> float:
    """psi_phi(B) = 1/B - e^((B-1) phi)."""
    return 1.0 / B - math.exp((B - 1.0) * phi)


def psi_threshold(phi: float) -> float:
    """Largest zero W_{-1}(phi e^phi)/phi of psi_phi; psi_phi(B) >= 0 beyond it.

    Requires phi < 0 so that phi e^phi lies in [-1/e, 0).
    """
    if phi >= 0.0:
        raise ValueError(f"psi_threshold requires phi < 0, got {phi}")
    arg = phi * math.exp(phi)
    if arg < -_INV_E:
        # x e^x >= -1/e for all real x; only rounding can land below.
        arg = -_INV_E
    return lambert_w_minus1(arg) / phi
