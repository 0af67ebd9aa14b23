"""Constrained minimization of the switched-rule actuation cost.

The problem min w(d, h) subject to stationary variance = sigma_bar^2 is
reduced to one dimension: for each trigger distance d the variance budget
pins the tail scale lam (monotonicity in lam makes the root unique), and the
remaining scalar objective is minimized over d by bounded search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq, minimize_scalar

from .analytic import TlcParams, activation_frequency, tlc_cost, tlc_variance
from .errors import ConvergenceError, InfeasibleError
from .units import (
    FlowParams,
    GammaConstants,
    characteristic_scales,
    dimensionless_R,
)


@dataclass(frozen=True)
class TlcOptimum:
    """Result of the switched-rule optimization."""

    params: TlcParams
    cost: float
    frequency: float
    gammas: GammaConstants


def lambda_on_constraint(d: float, sigma_bar: float) -> float:
    """Tail scale lam > 0 at which tlc_variance(d, lam) = sigma_bar^2.

    Unique by strict monotonicity of the variance in lam. Raises
    InfeasibleError for d >= sqrt(6)*sigma_bar, where the variance exceeds
    the budget even at lam = 0.
    """
    if not (math.isfinite(d) and d > 0):
        raise ValueError(f"d must be positive and finite, got {d!r}")
    if not (math.isfinite(sigma_bar) and sigma_bar > 0):
        raise ValueError(f"sigma_bar must be positive and finite, got {sigma_bar!r}")
    d_max = math.sqrt(6.0) * sigma_bar
    if d >= d_max:
        raise InfeasibleError(
            f"d = {d:g} is infeasible: the variance budget requires d < sqrt(6)*sigma_bar"
            f" = {d_max:g}"
        )
    target = sigma_bar**2

    def residual(lam):
        return tlc_variance(d, lam) - target

    hi = max(sigma_bar, d)
    for _ in range(200):
        if residual(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("failed to bracket the variance constraint in lam")
    return brentq(residual, 0.0, hi, xtol=1e-300, rtol=1e-13)


def optimize_tlc(flow: FlowParams) -> TlcOptimum:
    """Minimize the actuation cost over (d, h) on the variance budget.

    Returns the optimal parameters, cost rate, activation frequency, and the
    dimensionless constants (gamma_w, gamma_d, gamma_h, f_coeff); the linear
    gamma fields are left unfilled.
    """
    R = dimensionless_R(flow)
    scales = characteristic_scales(flow)
    d_max = math.sqrt(6.0) * flow.sigma_bar

    def objective(d):
        lam = lambda_on_constraint(d, flow.sigma_bar)
        h = flow.c2 / (flow.alpha * lam)
        return tlc_cost(flow, TlcParams(d=d, h=h))

    lo, hi = 1e-6 * d_max, (1.0 - 1e-9) * d_max
    result = minimize_scalar(
        objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * d_max}
    )
    if not result.success:
        raise ConvergenceError(f"scalar minimization failed: {result.message}")
    d_opt = float(result.x)
    if not (lo + 1e-6 * d_max < d_opt < hi - 1e-6 * d_max):
        raise ConvergenceError(
            f"no interior cost minimum found: d = {d_opt:g} sits at the search boundary"
        )

    lam = lambda_on_constraint(d_opt, flow.sigma_bar)
    params = TlcParams(d=d_opt, h=flow.c2 / (flow.alpha * lam))
    cost = tlc_cost(flow, params)
    freq = activation_frequency(flow, params)
    gammas = GammaConstants(
        gamma_w=cost * R**1.5 / scales.U,
        gamma_d=params.d / (math.sqrt(R) * scales.L),
        gamma_h=params.h * math.sqrt(R) / scales.L,
        f_coeff=freq * R * scales.T,
    )
    return TlcOptimum(params=params, cost=cost, frequency=freq, gammas=gammas)


def cost_sweep(flow: FlowParams, R_values) -> list[tuple[float, float]]:
    """Optimal dimensionless cost w/U per requested R.

    Each entry is produced by a fresh optimization of the flow whose
    sigma_bar realizes that R at the family's (alpha, c2), verifying that
    w/U depends on the flow only through R. Returns rows (R, w/U).
    """
    values = list(R_values)
    if not values:
        raise ValueError("R_values must not be empty")
    if any(not (math.isfinite(r) and r > 0) for r in values):
        raise ValueError("all R values must be positive and finite")
    rows = []
    for R in values:
        swept = FlowParams(
            alpha=flow.alpha,
            c2=flow.c2,
            sigma_bar=math.sqrt(R * flow.c2 / flow.alpha),
        )
        opt = optimize_tlc(swept)
        rows.append((float(R), opt.cost / characteristic_scales(swept).U))
    return rows
