"""Physical parameters, characteristic scales, and dimensional scaling laws.

All quantities are carried in SI units internally. The single dimensionless
group R = sigma_bar^2 * alpha / c2 connects physically different flows: the
optimal control parameters collapse onto dimensionless gamma constants, and
the functions here convert between the two representations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def _require_positive(obj, names):
    for name in names:
        value = getattr(obj, name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class FlowParams:
    """Physical description of the station-keeping problem.

    alpha:     vertical shear of the horizontal wind [1/s]
    c2:        spectral density of the white-noise velocity fluctuations
               [m^2/s]; free diffusion grows as Var[X(t)] = c2 * t
    sigma_bar: target standard deviation of the horizontal position [m]

    c2 = 0 is accepted as the degenerate noise-free limit used by
    deterministic smoke tests; the scale and R computations below require
    c2 > 0 and raise otherwise.
    """

    alpha: float
    c2: float
    sigma_bar: float

    def __post_init__(self):
        _require_positive(self, ("alpha", "sigma_bar"))
        if not (isinstance(self.c2, (int, float)) and math.isfinite(self.c2) and self.c2 >= 0):
            raise ValueError(f"c2 must be a non-negative finite number, got {self.c2!r}")


@dataclass(frozen=True)
class Scales:
    """Characteristic length, time, and velocity scales of a flow.

    L = sqrt(c2/alpha), T = 1/alpha, U = sqrt(c2*alpha); L = U*T holds
    identically.
    """

    L: float
    T: float
    U: float

    def __post_init__(self):
        _require_positive(self, ("L", "T", "U"))


@dataclass(frozen=True)
class GammaConstants:
    """Dimensionless constants describing the optimal control rules.

    gamma_w, gamma_d, gamma_h and f_coeff belong to the switched rule;
    f_coeff = gamma_w / gamma_h ties the activation frequency to the cost.
    gamma_k1 and gamma_k2 belong to the linear rule and are None when only
    the switched rule has been optimized.
    """

    gamma_w: float
    gamma_d: float
    gamma_h: float
    f_coeff: float
    gamma_k1: float | None = None
    gamma_k2: float | None = None

    def __post_init__(self):
        _require_positive(self, ("gamma_w", "gamma_d", "gamma_h", "f_coeff"))
        for name in ("gamma_k1", "gamma_k2"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite when given, got {value!r}")


def dimensionless_R(flow: FlowParams) -> float:
    """Dimensionless group R = sigma_bar^2 * alpha / c2 governing the design."""
    if flow.c2 == 0:
        raise ValueError("R is undefined for the noise-free flow (c2 = 0)")
    return flow.sigma_bar**2 * flow.alpha / flow.c2


def characteristic_scales(flow: FlowParams) -> Scales:
    """Length, time, and velocity scales built from (alpha, c2)."""
    if flow.c2 == 0:
        raise ValueError("characteristic scales are undefined for c2 = 0")
    return Scales(
        L=math.sqrt(flow.c2 / flow.alpha),
        T=1.0 / flow.alpha,
        U=math.sqrt(flow.c2 * flow.alpha),
    )


def tlc_params_from_gammas(gammas: GammaConstants, flow: FlowParams):
    """Physical switched-rule parameters from dimensionless constants.

    d = gamma_d * R^(1/2) * L and h = gamma_h * R^(-1/2) * L.
    """
    from .analytic import TlcParams

    R = dimensionless_R(flow)
    scales = characteristic_scales(flow)
    return TlcParams(
        d=gammas.gamma_d * math.sqrt(R) * scales.L,
        h=gammas.gamma_h * scales.L / math.sqrt(R),
    )


def tlc_gammas_from_params(params, flow: FlowParams) -> tuple[float, float]:
    """Nondimensionalize (d, h); inverse of tlc_params_from_gammas.

    Returns (gamma_d, gamma_h).
    """
    R = dimensionless_R(flow)
    scales = characteristic_scales(flow)
    return (
        params.d / (math.sqrt(R) * scales.L),
        params.h * math.sqrt(R) / scales.L,
    )


def cost_from_gamma(gamma_w: float, flow: FlowParams) -> float:
    """Actuation cost rate w = gamma_w * R^(-3/2) * U in m/s.

    Algebraically identical to gamma_w * c2^2 / (alpha * sigma_bar^3).
    """
    R = dimensionless_R(flow)
    scales = characteristic_scales(flow)
    return gamma_w * R**-1.5 * scales.U


def gamma_from_cost(cost: float, flow: FlowParams) -> float:
    """Dimensionless cost gamma_w = w * R^(3/2) / U; inverse of cost_from_gamma."""
    R = dimensionless_R(flow)
    scales = characteristic_scales(flow)
    return cost * R**1.5 / scales.U


def linear_gains_from_gammas(gamma_k1: float, gamma_k2: float, flow: FlowParams):
    """Physical linear-rule gains from dimensionless constants.

    k1 = gamma_k1 * R^(-2) / T and k2 = gamma_k2 * R^(-1) / T.
    """
    from .linear import LinearGains

    R = dimensionless_R(flow)
    scales = characteristic_scales(flow)
    return LinearGains(
        k1=gamma_k1 / (R**2 * scales.T),
        k2=gamma_k2 / (R * scales.T),
    )


def linear_gammas_from_gains(gains, flow: FlowParams) -> tuple[float, float]:
    """Nondimensionalize (k1, k2); inverse of linear_gains_from_gammas.

    Returns (gamma_k1, gamma_k2).
    """
    R = dimensionless_R(flow)
    scales = characteristic_scales(flow)
    return (gains.k1 * scales.T * R**2, gains.k2 * scales.T * R)
