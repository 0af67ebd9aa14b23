"""Monte Carlo oracle: kernel correctness, determinism, and physics checks."""

import math
import warnings

import numpy as np
import pytest

from tlcontrol import (
    AutomatonState,
    ConfigError,
    FlowParams,
    InstabilityError,
    LinearGains,
    SimConfig,
    TimeStepResolutionWarning,
    TlcParams,
    default_warmup,
    histogram_vs_analytic,
    pdf_coefficients,
    reference_tlc_trajectory,
    simulate_linear,
    simulate_tlc,
    stationary_covariance,
    suggested_dt_linear,
    suggested_dt_tlc,
)
from tlcontrol._kernels import run_tlc_particle


def test_automaton_hysteresis():
    state = AutomatonState()
    assert state.update(0.9, 1.0) is False and state.level == 0
    assert state.update(1.2, 1.0) is True and state.level == 1
    # engaged: crossing d again or wandering inside the band does nothing
    assert state.update(1.5, 1.0) is False and state.level == 1
    assert state.update(0.4, 1.0) is False and state.level == 1
    assert state.update(-0.01, 1.0) is True and state.level == 0
    assert state.update(-1.0, 1.0) is True and state.level == -1
    assert state.update(-0.3, 1.0) is False and state.level == -1
    assert state.update(0.0, 1.0) is True and state.level == 0


def test_kernel_matches_pure_python_reference(unit_flow, unit_opt):
    """The compiled loop and the plain-Python loop agree bit for bit."""
    params = unit_opt.params
    dt = 2e-4
    n_steps = 20000
    stride = 7
    nbins = 50
    lo, hi = -5.0, 5.0
    rng = np.random.Generator(np.random.PCG64DXSM(np.random.SeedSequence(42)))
    noise = rng.standard_normal(n_steps, dtype=np.float32)

    sig = math.sqrt(unit_flow.c2 * dt)
    g = unit_flow.alpha * params.h * dt
    counts = np.zeros((3, nbins), dtype=np.int64)
    acc = np.zeros(5)
    run_tlc_particle(
        noise, sig, np.array([g, 0.0, -g]), params.d, 0, stride,
        lo, nbins / (hi - lo), counts, acc,
    )

    xs, levels, transitions = reference_tlc_trajectory(unit_flow, params, noise, dt)
    assert acc[2] == transitions

    sum_x = 0.0
    sum_x2 = 0.0
    for v in xs:
        sum_x += v
        sum_x2 += v * v
    assert acc[0] == sum_x
    assert acc[1] == sum_x2

    ref_counts = np.zeros((3, nbins), dtype=np.int64)
    inv_bin = nbins / (hi - lo)
    for k in range(stride - 1, n_steps, stride):
        t = (xs[k] - lo) * inv_bin
        if 0.0 <= t < nbins:
            ref_counts[levels[k] + 1, int(t)] += 1
    assert np.array_equal(counts, ref_counts)


@pytest.fixture(scope="module")
def small_tlc_run(unit_flow, unit_opt):
    config = SimConfig(dt=5e-3, t_total=50.0, t_warmup=5.0, n_particles=8, seed=123)
    return simulate_tlc(unit_flow, unit_opt.params, config)


def test_determinism_same_seed(unit_flow, unit_opt, small_tlc_run):
    config = SimConfig(dt=5e-3, t_total=50.0, t_warmup=5.0, n_particles=8, seed=123)
    again = simulate_tlc(unit_flow, unit_opt.params, config)
    assert again.variance_x == small_tlc_run.variance_x
    assert again.mean_x == small_tlc_run.mean_x
    assert again.activation_freq == small_tlc_run.activation_freq
    assert np.array_equal(again.histogram.counts, small_tlc_run.histogram.counts)


def test_worker_count_does_not_change_results(unit_flow, unit_opt, small_tlc_run):
    config = SimConfig(
        dt=5e-3, t_total=50.0, t_warmup=5.0, n_particles=8, seed=123, workers=3
    )
    threaded = simulate_tlc(unit_flow, unit_opt.params, config)
    assert threaded.variance_x == small_tlc_run.variance_x
    assert threaded.cost_rate == small_tlc_run.cost_rate
    assert threaded.activation_freq == small_tlc_run.activation_freq
    assert np.array_equal(threaded.histogram.counts, small_tlc_run.histogram.counts)


def test_different_seed_changes_results(unit_flow, unit_opt, small_tlc_run):
    config = SimConfig(dt=5e-3, t_total=50.0, t_warmup=5.0, n_particles=8, seed=124)
    other = simulate_tlc(unit_flow, unit_opt.params, config)
    assert other.variance_x != small_tlc_run.variance_x


def test_cost_frequency_identity_in_stats(small_tlc_run, unit_opt):
    assert small_tlc_run.cost_rate == unit_opt.params.h * small_tlc_run.activation_freq


def test_histogram_identities(small_tlc_run):
    hist = small_tlc_run.histogram
    assert hist.density.sum() * hist.bin_width == pytest.approx(1.0, abs=1e-12)
    assert sum(small_tlc_run.level_occupancy) == pytest.approx(1.0, abs=1e-12)
    assert hist.counts.sum() == hist.n_samples


def test_zero_noise_tlc_stays_put():
    flow = FlowParams(alpha=1.0, c2=0.0, sigma_bar=1.0)
    params = TlcParams(d=1.0, h=1.0)
    dt = suggested_dt_tlc(flow, params)
    config = SimConfig(dt=dt, t_total=10.0, t_warmup=1.0, n_particles=3, seed=9)
    stats = simulate_tlc(flow, params, config)
    assert stats.mean_x == 0.0
    assert stats.variance_x == 0.0
    assert stats.activation_freq == 0.0
    assert stats.cost_rate == 0.0
    assert stats.level_occupancy[1] == pytest.approx(1.0, abs=1e-15)


def test_zero_noise_linear_stays_put():
    flow = FlowParams(alpha=1.0, c2=0.0, sigma_bar=1.0)
    gains = LinearGains(k1=0.5, k2=0.5)
    config = SimConfig(dt=1e-2, t_total=10.0, t_warmup=1.0, n_particles=3, seed=9)
    stats = simulate_linear(flow, gains, config)
    assert stats.variance_x == 0.0
    assert stats.cost_rate == 0.0
    assert stats.control_rms == 0.0
    assert stats.var_z == 0.0


def test_dt_precondition_rejected(unit_flow, unit_opt):
    config = SimConfig(dt=0.2, t_total=50.0, t_warmup=5.0, n_particles=2, seed=1)
    with pytest.raises(ConfigError):
        simulate_tlc(unit_flow, unit_opt.params, config)


def test_unresolved_boundary_layer_warns(unit_flow, unit_opt):
    """A legal but coarse step trips the resolution warning when the
    boundary-layer e-fold time lambda/(alpha*h) is unresolved."""
    params = TlcParams(d=unit_opt.params.d, h=100.0 * unit_opt.params.h)
    config = SimConfig(dt=1e-4, t_total=5.0, t_warmup=0.5, n_particles=2, seed=1)
    with pytest.warns(TimeStepResolutionWarning):
        simulate_tlc(unit_flow, params, config)


def test_no_warning_at_suggested_dt(unit_flow, unit_opt):
    dt = suggested_dt_tlc(unit_flow, unit_opt.params)
    config = SimConfig(dt=dt, t_total=20.0, t_warmup=2.0, n_particles=2, seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TimeStepResolutionWarning)
        simulate_tlc(unit_flow, unit_opt.params, config)


def test_variance_converges_in_dt(unit_flow, unit_opt):
    """Halving dt moves the ensemble variance by no more than the combined
    Monte Carlo uncertainty (2 sigma on the difference, so the check itself
    has ~5% false-alarm probability at worst; the seed is fixed)."""
    results = []
    for dt in (4e-3, 2e-3):
        config = SimConfig(dt=dt, t_total=400.0, t_warmup=20.0, n_particles=40, seed=3)
        results.append(simulate_tlc(unit_flow, unit_opt.params, config))
    a, b = results
    gap = abs(a.variance_x - b.variance_x)
    assert gap <= 2.0 * math.hypot(a.variance_stderr, b.variance_stderr)


def test_linear_covariance_matches_lyapunov(hurricane):
    gains = LinearGains(k1=3.125e-5, k2=2.5e-4)
    cov = stationary_covariance(hurricane, gains)
    config = SimConfig(
        dt=10.0,
        t_total=default_warmup(hurricane) + 600.0 * hurricane.sigma_bar**2 / hurricane.c2,
        t_warmup=default_warmup(hurricane),
        n_particles=16,
        seed=21,
    )
    stats = simulate_linear(hurricane, gains, config)
    assert abs(stats.variance_x - cov.sxx) <= 4.0 * stats.variance_stderr
    assert abs(stats.var_z - cov.szz) <= 4.0 * stats.var_z_stderr
    assert abs(stats.cov_xz - cov.sxz) <= 4.0 * stats.cov_xz_stderr


def test_uncontrolled_diffusion_variance():
    """With the trigger far out of reach the particle diffuses freely and the
    pooled time-averaged variance is c2*dt*(N+1)/2."""
    flow = FlowParams(alpha=1.0, c2=1.0, sigma_bar=1.0)
    params = TlcParams(d=1e6, h=1.0)
    dt, t_total = 0.01, 100.0
    config = SimConfig(
        dt=dt,
        t_total=t_total,
        t_warmup=0.0,
        n_particles=2000,
        seed=31,
        workers=4,
        hist_range=(-50.0, 50.0),
        hist_stride=500,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TimeStepResolutionWarning)
        stats = simulate_tlc(flow, params, config)
    n = round(t_total / dt)
    expected = flow.c2 * dt * (n + 1) / 2.0
    assert stats.activation_freq == 0.0
    assert stats.variance_x == pytest.approx(expected, rel=0.03)


def test_histogram_vs_analytic_r1(unit_flow, unit_opt):
    config = SimConfig(dt=1e-3, t_total=2000.0, t_warmup=20.0, n_particles=16, seed=11)
    stats = simulate_tlc(unit_flow, unit_opt.params, config)
    lam = unit_flow.c2 / (unit_flow.alpha * unit_opt.params.h)
    pdf = pdf_coefficients(unit_opt.params.d, lam)
    comparison = histogram_vs_analytic(stats, pdf)
    assert comparison.frac_within_4se >= 0.9
    assert comparison.occupancy_error <= 0.05
    assert comparison.chi2_reduced <= 3.0
    assert comparison.sup_abs_marginal <= 0.2 * comparison.peak_marginal


def test_linear_rejects_unstable_setups(hurricane):
    good = LinearGains(k1=3.125e-5, k2=2.5e-4)
    config = SimConfig(dt=10.0, t_total=1e5, t_warmup=1e3, n_particles=2, seed=1)
    with pytest.raises(InstabilityError):
        simulate_linear(hurricane, LinearGains(k1=-1e-5, k2=2.5e-4), config)
    with pytest.raises(InstabilityError):
        simulate_linear(hurricane, LinearGains(k1=3.125e-5, k2=0.0), config)
    # continuous-time stable but Euler-unstable at this huge step
    bad_dt = SimConfig(dt=9000.0, t_total=1e6, t_warmup=1e4, n_particles=2, seed=1)
    with pytest.raises(ConfigError):
        simulate_linear(hurricane, good, bad_dt)


def test_sim_config_validation():
    ok = dict(dt=1e-3, t_total=1.0, t_warmup=0.1, n_particles=2, seed=1)
    SimConfig(**ok)
    for bad in (
        dict(ok, dt=0.0),
        dict(ok, t_total=-1.0),
        dict(ok, t_warmup=1.0),
        dict(ok, n_particles=0),
        dict(ok, seed=-1),
        dict(ok, workers=0),
        dict(ok, hist_bins=5),
        dict(ok, hist_stride=0),
        dict(ok, hist_range=(2.0, 1.0)),
    ):
        with pytest.raises(ConfigError):
            SimConfig(**bad)


def test_suggested_defaults(hurricane, hurricane_opt):
    warm = default_warmup(hurricane)
    assert warm == pytest.approx(20.0 * 9e6 / 1500.0, rel=1e-12)
    dt = suggested_dt_tlc(hurricane, hurricane_opt.params)
    d, h = hurricane_opt.params.d, hurricane_opt.params.h
    assert dt == pytest.approx(
        min(1e-4 * d**2 / 1500.0, 5e-3 * d / (1e-3 * h)), rel=1e-12
    )
    gains = LinearGains(k1=3.125e-5, k2=2.5e-4)
    assert suggested_dt_linear(hurricane, gains) == pytest.approx(
        5e-3 * min(1.0 / 2.5e-4, 1.0 / math.sqrt(1e-3 * 3.125e-5)), rel=1e-12
    )
