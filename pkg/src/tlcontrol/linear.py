"""Optimal linear feedback baseline u = -k1*x - k2*z.

The closed loop (x, z) is a 2-D linear stochastic system; its stationary
covariance solves the 2x2 Lyapunov balance in closed form, the control u is
stationary Gaussian, and E|u| follows from its variance. Eliminating k1 via
the variance budget reduces the gain optimization to a scalar search, like
the switched-rule optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, InstabilityError
from .units import FlowParams, characteristic_scales, dimensionless_R


@dataclass(frozen=True)
class LinearGains:
    """Feedback gains of u = -k1*x - k2*z; both in 1/s.

    Stability of the closed loop requires k1 > 0 and k2 > 0 (positive
    determinant and damping); operations that need a stationary state raise
    InstabilityError outside that region.
    """

    k1: float
    k2: float

    def __post_init__(self):
        for name in ("k1", "k2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class StationaryCovariance:
    """Stationary second moments of the closed loop: sxx = Var[X] [m^2],
    sxz = Cov[X, Z] [m^2], szz = Var[Z] [m^2]."""

    sxx: float
    sxz: float
    szz: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.sxx, self.sxz], [self.sxz, self.szz]])


@dataclass(frozen=True)
class LinearOptimum:
    """Result of the linear-rule gain optimization."""

    gains: LinearGains
    cost: float
    gamma_k1: float
    gamma_k2: float
    covariance: StationaryCovariance


def closed_loop_matrices(flow: FlowParams, gains: LinearGains) -> tuple[np.ndarray, np.ndarray]:
    """Drift matrix A and noise covariance Q of the closed loop d(x,z)."""
    A = np.array([[0.0, flow.alpha], [-gains.k1, -gains.k2]])
    Q = np.diag([flow.c2, 0.0])
    return A, Q


def stationary_covariance(flow: FlowParams, gains: LinearGains) -> StationaryCovariance:
    """Closed-form solution of A*S + S*A^T + Q = 0 for the closed loop.

    sxz = -c2/(2*alpha); szz = k1*c2/(2*alpha*k2);
    sxx = c2/(2*k2) + k2*c2/(2*alpha*k1).
    """
    if gains.k1 <= 0 or gains.k2 <= 0:
        raise InstabilityError(
            f"gains (k1={gains.k1:g}, k2={gains.k2:g}) give an unstable closed loop;"
            " both must be positive"
        )
    c2, alpha = flow.c2, flow.alpha
    return StationaryCovariance(
        sxx=c2 / (2.0 * gains.k2) + gains.k2 * c2 / (2.0 * alpha * gains.k1),
        sxz=-c2 / (2.0 * alpha),
        szz=gains.k1 * c2 / (2.0 * alpha * gains.k2),
    )


def lyapunov_residual(flow: FlowParams, gains: LinearGains, cov: StationaryCovariance) -> float:
    """Largest entry of A*S + S*A^T + Q, normalized by the largest entry of Q."""
    A, Q = closed_loop_matrices(flow, gains)
    S = cov.matrix()
    residual = A @ S + S @ A.T + Q
    return float(np.max(np.abs(residual)) / np.max(np.abs(Q)))


def control_variance(gains: LinearGains, cov: StationaryCovariance) -> float:
    """Stationary variance of u = -k1*x - k2*z."""
    var_u = (
        gains.k1**2 * cov.sxx
        + 2.0 * gains.k1 * gains.k2 * cov.sxz
        + gains.k2**2 * cov.szz
    )
    if var_u < 0:
        raise ValueError(
            f"control variance came out negative ({var_u:g}); covariance input is not"
            " positive semidefinite"
        )
    return var_u


def expected_abs_control(
    flow: FlowParams, gains: LinearGains, cov: StationaryCovariance
) -> float:
    """Cost rate E|u| = sqrt(2/pi)*sigma_u of the zero-mean Gaussian control."""
    return math.sqrt(2.0 / math.pi) * math.sqrt(control_variance(gains, cov))


def optimize_linear(flow: FlowParams, objective: str = "mean-abs") -> LinearOptimum:
    """Minimize the linear-rule cost subject to Var[X] = sigma_bar^2.

    k1 is eliminated through the variance budget,
    k1 = k2*c2 / (2*alpha*(sigma_bar^2 - c2/(2*k2))), leaving a scalar
    search over k2 > c2/(2*sigma_bar^2).

    objective selects what the scalar search minimizes: "mean-abs" minimizes
    E|u| directly; "mean-square" minimizes E[u^2]. For a stationary Gaussian
    control E|u| is a monotone function of E[u^2], so both produce the same
    gains; exposing both makes that coincidence checkable.
    """
    if objective not in ("mean-abs", "mean-square"):
        raise ValueError(f"unknown objective {objective!r}")
    R = dimensionless_R(flow)
    scales = characteristic_scales(flow)
    target = flow.sigma_bar**2
    k2_floor = flow.c2 / (2.0 * target)

    def gains_at(k2):
        k1 = k2 * flow.c2 / (2.0 * flow.alpha * (target - flow.c2 / (2.0 * k2)))
        return LinearGains(k1=k1, k2=k2)

    def cost_at(k2):
        gains = gains_at(k2)
        cov = stationary_covariance(flow, gains)
        if objective == "mean-square":
            return control_variance(gains, cov)
        return expected_abs_control(flow, gains, cov)

    lo, hi = k2_floor * (1.0 + 1e-9), 50.0 * k2_floor
    result = minimize_scalar(
        cost_at, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * k2_floor}
    )
    if not result.success:
        raise ConvergenceError(f"scalar minimization failed: {result.message}")
    k2_opt = float(result.x)
    if not (lo + 1e-6 * k2_floor < k2_opt < hi - 1e-6 * k2_floor):
        raise ConvergenceError(
            f"no interior cost minimum found: k2 = {k2_opt:g} sits at the search boundary"
        )

    gains = gains_at(k2_opt)
    cov = stationary_covariance(flow, gains)
    return LinearOptimum(
        gains=gains,
        cost=expected_abs_control(flow, gains, cov),
        gamma_k1=gains.k1 * scales.T * R**2,
        gamma_k2=gains.k2 * scales.T * R,
        covariance=cov,
    )
