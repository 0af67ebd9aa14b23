"""Finite-difference steady-state solver versus the closed-form densities."""

import warnings

import numpy as np
import pytest

from tlcontrol import (
    FlowParams,
    GridSpec,
    TailTruncationWarning,
    TlcParams,
    activation_frequency,
    convergence_study,
    default_grid,
    max_branch_error,
    pdf_coefficients,
    pdf_eval,
    solve_steady_fp,
    tlc_variance,
)


@pytest.fixture(scope="module")
def unit_case():
    flow = FlowParams(alpha=1.0, c2=1.0, sigma_bar=1.0)
    params = TlcParams(d=1.0, h=1.0)  # lambda = 1
    field = solve_steady_fp(flow, params, default_grid(flow, params, nx=1000))
    return flow, params, field


def test_mass_is_exact(unit_case):
    _, _, field = unit_case
    assert field.mass() == pytest.approx(1.0, abs=1e-12)


def test_nonnegative(unit_case):
    _, _, field = unit_case
    low = min(field.p_minus.min(), field.p_zero.min(), field.p_plus.min())
    assert low >= -1e-12


def test_mirror_symmetry(unit_case):
    _, _, field = unit_case
    assert np.max(np.abs(field.p_minus - field.p_plus[::-1])) <= 1e-12
    assert np.max(np.abs(field.p_zero - field.p_zero[::-1])) <= 1e-12


def test_matches_analytic(unit_case):
    _, params, field = unit_case
    pdf = pdf_coefficients(params.d, 1.0)
    peak = float(np.max(pdf_eval(pdf, field.x, "marginal")))
    assert max_branch_error(field, pdf) <= 1e-4 * peak


def test_variance_matches(unit_case):
    _, _, field = unit_case
    assert field.variance() == pytest.approx(tlc_variance(1.0, 1.0), rel=1e-4)


def test_exchange_fluxes_balance(unit_case):
    """Each of the four switching channels carries f/4 in steady state."""
    flow, params, field = unit_case
    f = activation_frequency(flow, params)
    fluxes = field.exchange_fluxes
    assert set(fluxes) == {"0->+h", "0->-h", "+h->0", "-h->0"}
    for value in fluxes.values():
        assert value == pytest.approx(f / 4.0, rel=1e-3)
    # stationarity: what leaves the center branch re-enters it
    out_center = fluxes["0->+h"] + fluxes["0->-h"]
    into_center = fluxes["+h->0"] + fluxes["-h->0"]
    assert out_center == pytest.approx(into_center, rel=1e-12)


def test_second_order_convergence():
    flow = FlowParams(alpha=1.0, c2=1.0, sigma_bar=1.0)
    params = TlcParams(d=1.0, h=1.0)
    study = convergence_study(flow, params, [250, 500, 1000])
    errors = [err for _, err in study]
    for coarse, fine in zip(errors, errors[1:]):
        assert coarse / fine >= 1.8


def test_upwind_less_accurate_but_converges():
    flow = FlowParams(alpha=1.0, c2=1.0, sigma_bar=1.0)
    params = TlcParams(d=1.0, h=1.0)
    hybrid = dict(convergence_study(flow, params, [500, 1000]))
    upwind = dict(convergence_study(flow, params, [500, 1000], scheme="upwind"))
    assert upwind[500] > hybrid[500]
    assert upwind[500] / upwind[1000] >= 1.8


def test_grid_validation():
    flow = FlowParams(alpha=1.0, c2=1.0, sigma_bar=1.0)
    params = TlcParams(d=1.0, h=1.0)
    with pytest.raises(ValueError):
        GridSpec(x_max=10.0, nx=100)  # below the minimum resolution
    with pytest.raises(ValueError):
        # d is not an integer number of cells from the origin
        solve_steady_fp(flow, params, GridSpec(x_max=9.37, nx=1000))
    with pytest.raises(ValueError):
        # domain does not cover the 8-lambda tail
        solve_steady_fp(flow, params, GridSpec(x_max=5.0, nx=1000))
    with pytest.raises(ValueError):
        solve_steady_fp(flow, params, default_grid(flow, params, nx=1000), scheme="qick")
    noise_free = FlowParams(alpha=1.0, c2=0.0, sigma_bar=1.0)
    with pytest.raises(ValueError):
        solve_steady_fp(noise_free, params, GridSpec(x_max=10.0, nx=1000))


def test_short_tail_warns():
    flow = FlowParams(alpha=1.0, c2=1.0, sigma_bar=1.0)
    params = TlcParams(d=1.0, h=1.0)
    # 8.125 lambda of tail: the truncated far-field density is still above
    # the reporting threshold
    grid = GridSpec(x_max=9.125, nx=1460)
    assert (params.d / (grid.x_max / grid.nx)) == pytest.approx(160.0, abs=1e-9)
    with pytest.warns(TailTruncationWarning):
        solve_steady_fp(flow, params, grid)
    # ample 10-lambda tail from the default factory: no warning
    with warnings.catch_warnings():
        warnings.simplefilter("error", TailTruncationWarning)
        solve_steady_fp(flow, params, default_grid(flow, params, nx=1000))


def test_default_grid_places_nodes():
    flow = FlowParams(alpha=1.0, c2=1.0, sigma_bar=1.0)
    params = TlcParams(d=1.0, h=1.0)
    grid = default_grid(flow, params, nx=1000)
    dx = grid.x_max / grid.nx
    assert params.d / dx == pytest.approx(round(params.d / dx), abs=1e-12)
    assert grid.x_max >= params.d + 8.0


def test_hurricane_grid(hurricane, hurricane_opt):
    field = solve_steady_fp(
        hurricane, hurricane_opt.params, default_grid(hurricane, hurricane_opt.params, nx=800)
    )
    lam = hurricane.c2 / (hurricane.alpha * hurricane_opt.params.h)
    pdf = pdf_coefficients(hurricane_opt.params.d, lam)
    peak = float(np.max(pdf_eval(pdf, field.x, "marginal")))
    assert max_branch_error(field, pdf) <= 1e-3 * peak
    assert field.variance() == pytest.approx(hurricane.sigma_bar**2, rel=1e-3)
