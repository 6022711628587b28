"""Stochastic discrete-time systems: scalar contraction and the walker model.

The scalar system x' = alpha x + d with barrier h(x) = x satisfies the
expectation condition E[h(x')|F] >= alpha h(x) exactly for zero-mean
disturbances, which makes it the reference system for verifying the
martingale machinery.

The walker is a step-to-step model of bipedal locomotion: a linear inverted
pendulum with fixed center-of-mass height whose input is the relative foot
placement at impact.  State layout is x = (p, c, v) with global position p,
COM-to-stance-foot offset c and COM velocity v, each planar.  Safety is
clearance from a circular obstacle, enforced by a minimum-norm input filter
on a halfspace convexification of the signed-distance barrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .disturbances import Disturbance, ProductOfDisks

__all__ = [
    "GRAVITY",
    "ScalarLinearSystem",
    "GaitParams",
    "Obstacle",
    "HlipSystem",
    "BarrierEval",
    "InfeasibleFilterError",
    "hlip_matrices",
]

GRAVITY = 9.81

#: Position-selector matrix: safety depends on global position only.
HLIP_C = np.zeros((6, 6))
HLIP_C[0, 0] = 1.0
HLIP_C[1, 1] = 1.0

#: Disturbance input matrix: (d1, d2) perturb global and COM-relative
#: position together, (d3, d4) perturb velocity.
HLIP_D = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)


class InfeasibleFilterError(RuntimeError):
    """Raised when the filter constraint is violated but has zero gradient."""


# ---------------------------------------------------------------------------
# Scalar system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarLinearSystem:
    """x_{k+1} = alpha x_k + d_k with h(x) = x."""

    alpha: float
    disturbance: Disturbance

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.disturbance.dim != 1:
            raise ValueError("scalar system needs a scalar disturbance family")

    def barrier(self, x: float) -> float:
        return float(x)

    def step(self, x: float, u, rng: np.random.Generator) -> float:
        return self.apply(x, u, self.disturbance.sample(rng))

    def apply(self, x: float, u, d: float) -> float:
        del u  # uncontrolled
        return self.alpha * x + d

    def cond_mean_h(self, x: float) -> float:
        """E[h(x_{k+1}) | F_k], exact."""
        mean, _ = self.disturbance.exact_moments()
        return self.alpha * x + mean

    def cond_var_h(self, x: float) -> float:
        """Var(h(x_{k+1}) | F_k), exact and state-independent."""
        _, var = self.disturbance.exact_moments()
        return var


# ---------------------------------------------------------------------------
# Walker model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaitParams:
    """Center-of-mass height and phase durations of the step-to-step map."""

    z0: float = 0.8
    t_ssp: float = 0.25
    t_dsp: float = 1.0 / 3.0 - 0.25

    def __post_init__(self):
        if self.z0 <= 0.0 or self.t_ssp <= 0.0 or self.t_dsp < 0.0:
            raise ValueError("gait parameters must be positive (t_dsp >= 0)")

    @property
    def step_period(self) -> float:
        return self.t_ssp + self.t_dsp


@dataclass(frozen=True)
class Obstacle:
    """Circular obstacle: center rho (2-vector) and radius r."""

    rho: np.ndarray
    r: float

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        if self.rho.shape != (2,):
            raise ValueError("obstacle center must be a 2-vector")
        if self.r <= 0.0:
            raise ValueError(f"obstacle radius must be > 0, got {self.r}")


def hlip_matrices(gait: GaitParams) -> tuple[np.ndarray, np.ndarray]:
    """Step-to-step (A, B) of the pendulum model, replicated per planar axis.

    Single support is the linear-inverted-pendulum flow over t_ssp with rate
    lam = sqrt(g/z0); double support translates the COM at constant velocity
    for t_dsp; the impact shifts the stance foot by the input u.  The state
    is sampled pre-impact.  The global position row integrates the COM
    displacement of one full step.
    """
    lam = math.sqrt(GRAVITY / gait.z0)
    ch = math.cosh(lam * gait.t_ssp)
    sh = math.sinh(lam * gait.t_ssp)
    m_ssp = np.array([[ch, sh / lam], [lam * sh, ch]])
    m_dsp = np.array([[1.0, gait.t_dsp], [0.0, 1.0]])
    a2 = m_ssp @ m_dsp
    b2 = -m_ssp[:, 0]  # stance shift enters as c -> c - u before the flow
    a3 = np.array(
        [
            [1.0, a2[0, 0] - 1.0, a2[0, 1]],
            [0.0, a2[0, 0], a2[0, 1]],
            [0.0, a2[1, 0], a2[1, 1]],
        ]
    )
    b3 = np.array([1.0 + b2[0], b2[0], b2[1]])
    A = np.zeros((6, 6))
    B = np.zeros((6, 2))
    for axis, idx in enumerate([(0, 2, 4), (1, 3, 5)]):
        for r_, i in enumerate(idx):
            for c_, j in enumerate(idx):
                A[i, j] = a3[r_, c_]
            B[i, axis] = b3[r_]
    return A, B


@dataclass(frozen=True)
class BarrierEval:
    """Signed distance h, its convexified value hbar, and the unit direction."""

    h: float
    e_hat: np.ndarray
    hbar: float | None = None


@dataclass(frozen=True)
class HlipSystem:
    """Walker step-to-step model with obstacle-clearance barrier.

    ``A`` and ``B`` may be supplied verbatim (overriding the gait-derived
    map); ``C`` and ``D`` have the fixed structures above.
    """

    gait: GaitParams
    obstacle: Obstacle
    d_max: float
    disturbance: Disturbance | None = None
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    u_cap: float = 1.0

    C: np.ndarray = field(default_factory=lambda: HLIP_C.copy())
    D: np.ndarray = field(default_factory=lambda: HLIP_D.copy())

    def __post_init__(self):
        if self.d_max < 0.0:
            raise ValueError(f"d_max must be >= 0, got {self.d_max}")
        if self.A is None or self.B is None:
            A, B = hlip_matrices(self.gait)
            object.__setattr__(self, "A", A if self.A is None else np.asarray(self.A, float))
            object.__setattr__(self, "B", B if self.B is None else np.asarray(self.B, float))
        else:
            object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
            object.__setattr__(self, "B", np.asarray(self.B, dtype=float))
        if self.A.shape != (6, 6) or self.B.shape != (6, 2):
            raise ValueError("A must be 6x6 and B 6x2")
        if self.disturbance is None:
            object.__setattr__(
                self, "disturbance", ProductOfDisks((self.d_max, self.d_max))
            )
        if self.disturbance.dim != 4:
            raise ValueError("walker disturbance must be 4-dimensional")

    # -- barrier geometry ---------------------------------------------------

    def barrier(self, x: np.ndarray, p_next: np.ndarray | None = None) -> BarrierEval:
        """Signed distance and obstacle direction at ``x``.

        When ``p_next`` is given, also evaluates the halfspace convexification
        hbar = e_hat . (p_next - rho) - r, which lower-bounds the signed
        distance at p_next.
        """
        p = np.asarray(x, dtype=float)[:2]
        diff = p - self.obstacle.rho
        dist = float(np.linalg.norm(diff))
        if dist == 0.0:
            raise ValueError("barrier direction undefined at the obstacle center")
        e_hat = diff / dist
        h = dist - self.obstacle.r
        hbar = None
        if p_next is not None:
            hbar = float(e_hat @ (np.asarray(p_next, float) - self.obstacle.rho)) - self.obstacle.r
        return BarrierEval(h=h, e_hat=e_hat, hbar=hbar)

    def signed_distance(self, x: np.ndarray) -> float:
        """h without the direction; well-defined everywhere."""
        p = np.asarray(x, dtype=float)[:2]
        return float(np.linalg.norm(p - self.obstacle.rho)) - self.obstacle.r

    # -- dynamics -----------------------------------------------------------

    def step(self, x: np.ndarray, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.apply(x, u, self.disturbance.sample(rng))

    def apply(self, x: np.ndarray, u: np.ndarray, d: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ u + self.D @ d

    def step_deterministic(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ u

    # -- conditional moments of the convexified barrier ----------------------

    def cond_moments_hbar(self, x: np.ndarray, u: np.ndarray) -> tuple[float, float]:
        """Exact mean and variance of hbar(x_{k+1}) given (x_k, u_k).

        The disturbance is zero-mean, so the mean is the convexified barrier
        at the deterministic next position; the variance is the quadratic
        form of the direction with the position block of D Cov(d) D^T.
        """
        be = self.barrier(x)
        xa = self.A @ x + self.B @ u
        mean = float(be.e_hat @ (xa[:2] - self.obstacle.rho)) - self.obstacle.r
        _, cov = self.disturbance.exact_moments()
        pd = self.D[:2, :]
        var = float(be.e_hat @ (pd @ cov @ pd.T) @ be.e_hat)
        return mean, var

    # -- controllers ----------------------------------------------------------

    def nominal_controller(self, x: np.ndarray, v_des: np.ndarray) -> np.ndarray:
        """Deadbeat foot placement driving next-step velocity to v_des.

        Inverts the (scalar per axis) velocity row of the step-to-step map;
        the output norm is capped at ``u_cap``.
        """
        u = np.empty(2)
        for axis, (ic, iv) in enumerate([(2, 4), (3, 5)]):
            a_c = self.A[iv, ic]
            a_v = self.A[iv, iv]
            b_v = self.B[iv, axis]
            if b_v == 0.0:
                raise ValueError("velocity row of B is zero; gait is degenerate")
            u[axis] = (v_des[axis] - a_c * x[ic] - a_v * x[iv]) / b_v
        norm = float(np.linalg.norm(u))
        if norm > self.u_cap:
            u *= self.u_cap / norm
        return u

    def safety_filter(
        self, x: np.ndarray, u_nom: np.ndarray, alpha: float, feas_tol: float = 1e-12
    ) -> np.ndarray:
        """Minimum-norm correction of u_nom enforcing the expectation condition
        E[hbar(x_{k+1}) | F_k] >= alpha * hbar(x_k).

        The disturbance term has zero mean, so the constraint is a single
        affine halfspace a.u >= b; infeasibility (a = 0 with the constraint
        violated) raises InfeasibleFilterError.
        """
        be = self.barrier(x)
        xa = self.A @ x
        c0 = float(be.e_hat @ (xa[:2] - self.obstacle.rho)) - self.obstacle.r
        a = self.B[:2, :].T @ be.e_hat
        b = alpha * be.h - c0
        slack_tol = feas_tol * (1.0 + abs(b))
        if float(a @ u_nom) >= b - slack_tol:
            return np.asarray(u_nom, dtype=float)
        norm2 = float(a @ a)
        if norm2 == 0.0:
            raise InfeasibleFilterError(
                "constraint gradient vanished with the constraint violated"
            )
        return u_nom + a * (b - float(a @ u_nom)) / norm2
