"""Finite-difference verification of the stationary branch densities.

The three coupled stationary advection-diffusion equations (one per actuator
level) are discretized on a shared uniform grid in conservative face-flux
form and solved as one sparse linear system. Probability absorbed at the
trigger points x = +-d of the center branch is injected into the raised
branches at the same location, and probability absorbed at x = 0 of the
raised branches is injected back into the center branch, mirroring the
automaton arrows. The assembled operator is an exactly conservative
master-equation generator (zero-flux closure at +-x_max), so one row is
genuinely redundant and is replaced by the normalization condition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .analytic import TlcParams, TlcPdf, efold_lambda, pdf_coefficients, pdf_eval
from .errors import ConvergenceError, TailTruncationWarning
from .units import FlowParams

SCHEMES = ("hybrid", "upwind")


@dataclass(frozen=True)
class GridSpec:
    """Uniform shared grid on [-x_max, x_max] with nx cells per half axis.

    Node spacing is dx = x_max/nx; nodes must land exactly on the trigger
    points +-d and on 0, which solve_steady_fp validates against the rule
    parameters.
    """

    x_max: float
    nx: int

    def __post_init__(self):
        if not (math.isfinite(self.x_max) and self.x_max > 0):
            raise ValueError(f"x_max must be positive and finite, got {self.x_max!r}")
        if self.nx < 200:
            raise ValueError(f"nx must be at least 200, got {self.nx}")

    @property
    def dx(self) -> float:
        return self.x_max / self.nx

    def nodes(self) -> np.ndarray:
        return np.linspace(-self.x_max, self.x_max, 2 * self.nx + 1)


@dataclass(frozen=True)
class DiscretePdfField:
    """Solved branch densities on the shared grid.

    p_minus, p_zero, p_plus are node values (zero outside each branch's
    support); exchange_fluxes holds the four discrete transition
    throughputs in 1/s.
    """

    x: np.ndarray
    p_minus: np.ndarray
    p_zero: np.ndarray
    p_plus: np.ndarray
    dx: float
    exchange_fluxes: dict = field(default_factory=dict)

    @property
    def marginal(self) -> np.ndarray:
        return self.p_minus + self.p_zero + self.p_plus

    def mass(self) -> float:
        return float(np.trapezoid(self.marginal, dx=self.dx))

    def variance(self) -> float:
        return float(np.trapezoid(self.x**2 * self.marginal, dx=self.dx))


def default_grid(
    flow: FlowParams, params: TlcParams, nx: int = 2000, tail_lambdas: float = 10.0
) -> GridSpec:
    """Grid whose spacing divides d exactly and whose tail spans ~tail_lambdas
    e-fold scales beyond the trigger point."""
    if tail_lambdas < 8.0:
        raise ValueError("tail_lambdas must be at least 8 (tail truncation)")
    lam = efold_lambda(flow, params.h)
    if lam <= 0:
        raise ValueError("the finite-difference solver needs c2 > 0")
    target = params.d + tail_lambdas * lam
    m = min(nx - 1, max(1, round(nx * params.d / target)))
    while m > 0 and (nx - m) * params.d / m < 8.0 * lam:
        m -= 1
    if m < 1:
        raise ValueError(
            f"nx = {nx} is too small to cover d plus an 8*lambda tail for d = {params.d:g},"
            f" lambda = {lam:g}"
        )
    dx = params.d / m
    return GridSpec(x_max=nx * dx, nx=nx)


def _face_coeffs(vel: float, D: float, dx: float, scheme: str):
    """Coefficients (a_j, a_j1) of the face flux F_{j+1/2} = a_j*p_j + a_j1*p_{j+1}.

    Central differencing of the advective part where the cell Peclet number
    |vel|*dx/D stays below 2 (second order), first-order upwind otherwise.
    """
    if scheme == "hybrid" and abs(vel) * dx / D < 2.0:
        return (vel / 2.0 + D / dx, vel / 2.0 - D / dx)
    if vel > 0:
        return (vel + D / dx, -D / dx)
    return (D / dx, vel - D / dx)


def solve_steady_fp(
    flow: FlowParams, params: TlcParams, grid: GridSpec, scheme: str = "hybrid"
) -> DiscretePdfField:
    """Solve the stationary three-branch system on the given grid.

    Raises ValueError when grid nodes miss the trigger points or the tail is
    shorter than 8 e-fold scales, and ConvergenceError when the assembled
    system cannot be solved to working precision (a sign of inconsistent
    flux bookkeeping). Warns with TailTruncationWarning when the solution
    has not decayed at the domain edge.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if flow.c2 == 0:
        raise ValueError("the finite-difference solver needs c2 > 0")
    lam = efold_lambda(flow, params.h)
    dx = grid.dx
    m_float = params.d / dx
    m = round(m_float)
    if abs(m_float - m) > 1e-9 * max(1.0, m_float) or not (1 <= m < grid.nx):
        raise ValueError(
            f"grid nodes must coincide with the trigger points: d/dx = {m_float!r}"
            " is not an integer inside the domain"
        )
    if grid.x_max < params.d + 8.0 * lam - 1e-9 * grid.x_max:
        raise ValueError(
            f"x_max = {grid.x_max:g} truncates the tail: need at least d + 8*lambda"
            f" = {params.d + 8.0 * lam:g}"
        )

    D = flow.c2 / 2.0
    v = flow.alpha * params.h
    x = grid.nodes()
    n_nodes = x.size
    i0 = grid.nx
    ipd = i0 + m
    imd = i0 - m

    # unknown layout: center interior, then plus branch, then minus branch
    idx_c = {j: k for k, j in enumerate(range(imd + 1, ipd))}
    nc = len(idx_c)
    idx_p = {j: nc + k for k, j in enumerate(range(i0 + 1, n_nodes))}
    np_ = len(idx_p)
    idx_m = {j: nc + np_ + k for k, j in enumerate(range(0, i0))}
    n_unknown = nc + np_ + len(idx_m)

    rows, cols, vals = [], [], []

    def add(r, c, value):
        rows.append(r)
        cols.append(c)
        vals.append(value)

    def assemble_branch(idx, jlo, jhi, vel, dirichlet_left, dirichlet_right):
        # Row j states (F_{j-1/2} - F_{j+1/2} + S_j)/dx = 0. A Dirichlet
        # neighbor contributes its face flux with p = 0 there; a reflecting
        # edge carries no face at all.
        aj, aj1 = _face_coeffs(vel, D, dx, scheme)
        for j in range(jlo, jhi + 1):
            r = idx[j]
            if j - 1 in idx:
                add(r, idx[j - 1], aj / dx)
                add(r, r, aj1 / dx)
            elif dirichlet_left:
                add(r, r, aj1 / dx)
            if j + 1 in idx:
                add(r, r, -aj / dx)
                add(r, idx[j + 1], -aj1 / dx)
            elif dirichlet_right:
                add(r, r, -aj / dx)

    # center branch: no drift, absorbing at both trigger points
    assemble_branch(idx_c, imd + 1, ipd - 1, 0.0, True, True)
    # plus branch: restoring drift -v, absorbing at 0, zero-flux at +x_max
    assemble_branch(idx_p, i0 + 1, n_nodes - 1, -v, True, False)
    # minus branch: restoring drift +v, zero-flux at -x_max, absorbing at 0
    assemble_branch(idx_m, 0, i0 - 1, +v, False, True)

    # exchange terms: what each absorbing face swallows reappears, at the
    # same node, as a source in the destination branch
    a0, a01 = _face_coeffs(0.0, D, dx, scheme)
    add(idx_p[ipd], idx_c[ipd - 1], a0 / dx)      # center outflux at +d feeds +h
    add(idx_m[imd], idx_c[imd + 1], -a01 / dx)    # center outflux at -d feeds -h
    ajp, aj1p = _face_coeffs(-v, D, dx, scheme)
    add(idx_c[i0], idx_p[i0 + 1], -aj1p / dx)     # +h outflux at 0 feeds center
    ajm, _ = _face_coeffs(+v, D, dx, scheme)
    add(idx_c[i0], idx_m[i0 - 1], ajm / dx)       # -h outflux at 0 feeds center

    A = sp.coo_matrix((vals, (rows, cols)), shape=(n_unknown, n_unknown)).tolil()

    # normalization row replaces the (redundant) balance at the center node
    # x = 0: trapezoid weights over all three branch supports
    weights = np.full(n_unknown, dx)
    weights[idx_p[n_nodes - 1]] = dx / 2.0
    weights[idx_m[0]] = dx / 2.0
    A[idx_c[i0], :] = weights
    b = np.zeros(n_unknown)
    b[idx_c[i0]] = 1.0

    A = A.tocsr()
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            p = spla.spsolve(A, b)
        except spla.MatrixRankWarning as exc:
            raise ConvergenceError(
                "assembled steady-state system is singular; flux bookkeeping is inconsistent"
            ) from exc
    if not np.all(np.isfinite(p)):
        raise ConvergenceError("sparse solve produced non-finite values")
    residual = np.max(np.abs(A @ p - b))
    if residual > 1e-8 * max(1.0, np.max(np.abs(p))):
        raise ConvergenceError(f"sparse solve residual too large: {residual:g}")

    p_zero = np.zeros(n_nodes)
    p_plus = np.zeros(n_nodes)
    p_minus = np.zeros(n_nodes)
    for j, k in idx_c.items():
        p_zero[j] = p[k]
    for j, k in idx_p.items():
        p_plus[j] = p[k]
    for j, k in idx_m.items():
        p_minus[j] = p[k]

    fluxes = {
        "0->+h": a0 / dx * p_zero[ipd - 1] * dx,
        "0->-h": -a01 / dx * p_zero[imd + 1] * dx,
        "+h->0": -aj1p * p_plus[i0 + 1],
        "-h->0": ajm * p_minus[i0 - 1],
    }

    field_out = DiscretePdfField(
        x=x, p_minus=p_minus, p_zero=p_zero, p_plus=p_plus, dx=dx, exchange_fluxes=fluxes
    )
    marginal = field_out.marginal
    peak = np.max(marginal)
    edge = max(marginal[0], marginal[-1])
    if edge > 1e-8 * peak:
        warnings.warn(
            f"marginal at the domain edge is {edge / peak:.2e} of its peak;"
            " increase x_max to suppress tail truncation",
            TailTruncationWarning,
            stacklevel=2,
        )
    return field_out


def max_branch_error(field: DiscretePdfField, pdf: TlcPdf) -> float:
    """Largest pointwise deviation from the analytic branch densities."""
    err_m = np.max(np.abs(field.p_minus - pdf_eval(pdf, field.x, "state-h")))
    err_0 = np.max(np.abs(field.p_zero - pdf_eval(pdf, field.x, "state0")))
    err_p = np.max(np.abs(field.p_plus - pdf_eval(pdf, field.x, "state+h")))
    return float(max(err_m, err_0, err_p))


def convergence_study(
    flow: FlowParams,
    params: TlcParams,
    nx_list,
    scheme: str = "hybrid",
    tail_lambdas: float = 10.0,
) -> list[tuple[int, float]]:
    """Sup-norm error against the analytic solution per grid resolution.

    Returns rows (nx, error) for the increasing resolutions in nx_list.
    """
    nx_values = list(nx_list)
    if nx_values != sorted(nx_values) or len(set(nx_values)) != len(nx_values):
        raise ValueError("nx_list must be strictly increasing")
    lam = efold_lambda(flow, params.h)
    pdf = pdf_coefficients(params.d, lam)
    rows = []
    for nx in nx_values:
        grid = default_grid(flow, params, nx=nx, tail_lambdas=tail_lambdas)
        field_out = solve_steady_fp(flow, params, grid, scheme=scheme)
        rows.append((int(nx), max_branch_error(field_out, pdf)))
    return rows
