"""Closed-form stationary statistics of the switched control rule.

The controlled particle obeys dX = -alpha*Zbar dt + sqrt(c2) dW where the
actuator Zbar takes the three values {-h, 0, +h}: it engages at the trigger
positions x = +-d and releases when the particle returns to x = 0. The
stationary Fokker-Planck system for the three branch densities has a
piecewise closed-form solution; this module evaluates it, together with the
variance, actuation cost rate, activation frequency, and feasibility limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .units import FlowParams

BRANCHES = ("state-h", "state0", "state+h")


@dataclass(frozen=True)
class TlcParams:
    """Switched-rule control parameters.

    d: trigger distance [m] at which the actuator engages
    h: altitude step [m], setting the restoring drift alpha*h
    """

    d: float
    h: float

    def __post_init__(self):
        for name in ("d", "h"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class TlcAnalysis:
    """Scalar stationary statistics of a switched rule."""

    variance: float
    cost_rate: float
    activation_frequency: float


@dataclass(frozen=True)
class TlcPdf:
    """Coefficients of the piecewise stationary branch densities.

    With lam = c2/(alpha*h) (twice the e-folding scale of the tails):

        p0(x)  = c1*|x| + c2_coef                      on (-d, d),
        p+h(x) = q1*(lam/2)*exp(-2x/lam) + q2          on (0, d),
        p+h(x) = r1*(lam/2)*exp(-2x/lam) + r2          on (d, inf),

    and p-h(x) = p+h(-x). Densities vanish outside these supports.
    """

    d: float
    lam: float
    c1: float
    c2_coef: float
    q1: float
    q2: float
    r1: float
    r2: float


def efold_lambda(flow: FlowParams, h: float) -> float:
    """Tail length scale lam = c2/(alpha*h) of the raised-actuator densities."""
    if not (math.isfinite(h) and h > 0):
        raise ValueError(f"h must be positive and finite, got {h!r}")
    return flow.c2 / (flow.alpha * h)


def pdf_coefficients(d: float, lam: float) -> TlcPdf:
    """Integration constants of the stationary branch densities.

    Note r1 grows like exp(2d/lam); for extremely stiff ratios d/lam > 355
    it saturates to inf, while pdf_eval stays finite by evaluating the tail
    in the cancellation-free form r1*(lam/2)*e^(-2x/lam) =
    (lam/2)*(1 - e^(-2d/lam))*e^(-2(x-d)/lam)/(d*(d+lam)).
    """
    if not (math.isfinite(d) and d > 0):
        raise ValueError(f"d must be positive and finite, got {d!r}")
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    denom = d * (d + lam)
    try:
        r1 = math.expm1(2.0 * d / lam) / denom
    except OverflowError:
        r1 = math.inf
    return TlcPdf(
        d=d,
        lam=lam,
        c1=-1.0 / denom,
        c2_coef=1.0 / (d + lam),
        q1=-1.0 / denom,
        q2=lam / (2.0 * denom),
        r1=r1,
        r2=0.0,
    )


def _eval_state0(pdf: TlcPdf, x: np.ndarray) -> np.ndarray:
    inside = np.abs(x) < pdf.d
    return np.where(inside, pdf.c1 * np.abs(x) + pdf.c2_coef, 0.0)


def _eval_plus(pdf: TlcPdf, x: np.ndarray) -> np.ndarray:
    d, lam = pdf.d, pdf.lam
    out = np.zeros_like(x)
    inner = (x > 0) & (x <= d)
    outer = x > d
    out[inner] = pdf.q1 * (lam / 2.0) * np.exp(-2.0 * x[inner] / lam) + pdf.q2
    # tail written as r1*(lam/2)*e^(-2x/lam) with the overflow factored out
    tail_amp = (lam / 2.0) * (-math.expm1(-2.0 * d / lam)) / (d * (d + lam))
    out[outer] = tail_amp * np.exp(-2.0 * (x[outer] - d) / lam)
    return out


def pdf_eval(pdf: TlcPdf, x, branch: str):
    """Evaluate a branch density (or the marginal) at positions x.

    branch is one of "state-h", "state0", "state+h", "marginal". Points
    outside a branch's support evaluate to 0. Mirror symmetry is built in:
    the state-h density at x equals the state+h density at -x.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if branch == "state0":
        out = _eval_state0(pdf, xa)
    elif branch == "state+h":
        out = _eval_plus(pdf, xa)
    elif branch == "state-h":
        out = _eval_plus(pdf, -xa)
    elif branch == "marginal":
        out = _eval_state0(pdf, xa) + _eval_plus(pdf, xa) + _eval_plus(pdf, -xa)
    else:
        raise ValueError(f"unknown branch {branch!r}; expected one of {BRANCHES + ('marginal',)}")
    return float(out[0]) if scalar else out


def branch_masses(pdf: TlcPdf) -> tuple[float, float, float]:
    """Exact probability mass per branch, ordered (state-h, state0, state+h).

    The center branch holds d/(d+lam); each raised branch holds
    lam/(2(d+lam)); the three sum to 1.
    """
    m0 = pdf.d / (pdf.d + pdf.lam)
    mh = pdf.lam / (2.0 * (pdf.d + pdf.lam))
    return (mh, m0, mh)


def tlc_variance(d: float, lam: float) -> float:
    """Stationary variance (d^3 + 2*lam*d^2 + 3*lam^2*d + 3*lam^3) / (6*(d+lam)).

    Limits: d^2/6 as lam -> 0 (instant return) and lam^2/2 as d -> 0.
    """
    if not (math.isfinite(d) and d > 0):
        raise ValueError(f"d must be positive and finite, got {d!r}")
    if not (math.isfinite(lam) and lam >= 0):
        raise ValueError(f"lam must be non-negative and finite, got {lam!r}")
    return (d**3 + 2.0 * lam * d**2 + 3.0 * lam**2 * d + 3.0 * lam**3) / (6.0 * (d + lam))


def activation_frequency(flow: FlowParams, params: TlcParams) -> float:
    """Expected number of altitude steps per unit time, f = 2*c2/(d*(d+lam)).

    Each trigger crossing and each release counts as one step of size h, so
    f*h equals the cost rate identically.
    """
    lam = efold_lambda(flow, params.h)
    return 2.0 * flow.c2 / (params.d * (params.d + lam))


def tlc_cost(flow: FlowParams, params: TlcParams) -> float:
    """Mean actuation speed w = 2*h*c2/(d*(d+lam)) in m/s.

    Computed as activation_frequency * h so the accounting identity
    w = f*h holds bit-exactly.
    """
    return activation_frequency(flow, params) * params.h


def analyze_tlc(flow: FlowParams, params: TlcParams) -> TlcAnalysis:
    """Variance, cost rate, and activation frequency of a switched rule."""
    lam = efold_lambda(flow, params.h)
    freq = activation_frequency(flow, params)
    return TlcAnalysis(
        variance=tlc_variance(params.d, lam),
        cost_rate=freq * params.h,
        activation_frequency=freq,
    )


def feasibility_limits(flow: FlowParams) -> tuple[float, float]:
    """Largest usable trigger distance and smallest usable step.

    Returns (d_max, h_min) = (sqrt(6)*sigma_bar, c2/(sqrt(2)*sigma_bar*alpha)).
    Beyond d_max even an instant return (lam -> 0) leaves the variance above
    the budget; below h_min even d -> 0 does.
    """
    return (
        math.sqrt(6.0) * flow.sigma_bar,
        flow.c2 / (math.sqrt(2.0) * flow.sigma_bar * flow.alpha),
    )
