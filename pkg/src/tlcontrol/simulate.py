"""Monte Carlo oracle: Euler-Maruyama ensembles for both control rules.

An ensemble of particles is integrated independently, each on its own
counter-based random stream spawned from the run seed, and the per-particle
results are reduced in fixed index order. Statistics are therefore
bit-identical for any worker count. Standard errors come from the scatter
of per-particle estimates, which are independent by construction.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import run_linear_particle, run_tlc_particle
from .analytic import TlcParams, branch_masses, efold_lambda, pdf_coefficients
from .errors import ConfigError, InstabilityError, TimeStepResolutionWarning
from .linear import LinearGains, stationary_covariance
from .units import FlowParams


@dataclass(frozen=True)
class SimConfig:
    """Ensemble integration settings.

    dt:          time step [s]
    t_total:     simulated time per particle [s]
    t_warmup:    leading transient discarded from all statistics [s]
    n_particles: ensemble size
    seed:        64-bit root seed; fully determines the output
    workers:     worker threads (the result does not depend on this)
    hist_bins:   number of histogram bins
    hist_stride: steps between histogram samples; None picks a spacing of
                 roughly one position-decorrelation time so per-bin counts
                 carry valid binomial errors
    hist_range:  (lo, hi) histogram support; None picks a rule-specific span
    """

    dt: float
    t_total: float
    t_warmup: float
    n_particles: int
    seed: int
    workers: int = 1
    hist_bins: int = 200
    hist_stride: Optional[int] = None
    hist_range: Optional[tuple] = None

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive and finite, got {self.dt!r}")
        if not (math.isfinite(self.t_total) and self.t_total > 0):
            raise ConfigError(f"t_total must be positive and finite, got {self.t_total!r}")
        if not (0 <= self.t_warmup < self.t_total):
            raise ConfigError(
                f"t_warmup must satisfy 0 <= t_warmup < t_total, got {self.t_warmup!r}"
            )
        if self.n_particles < 1:
            raise ConfigError(f"n_particles must be at least 1, got {self.n_particles}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if self.hist_bins < 10:
            raise ConfigError(f"hist_bins must be at least 10, got {self.hist_bins}")
        if self.hist_stride is not None and self.hist_stride < 1:
            raise ConfigError(f"hist_stride must be at least 1, got {self.hist_stride}")
        if self.hist_range is not None:
            lo, hi = self.hist_range
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"hist_range must be a finite (lo, hi) pair, got {self.hist_range!r}")


@dataclass
class AutomatonState:
    """Hysteretic three-level actuator, stored as the level index in
    {-1, 0, +1}; the physical actuator value is level*h.

    Transitions fire only on threshold crossings: 0 -> +1 at x >= +d,
    0 -> -1 at x <= -d, and +-1 -> 0 on return to x = 0. Inside the bands
    the state is held, which is the hysteresis.
    """

    level: int = 0

    def update(self, x: float, d: float) -> bool:
        """Advance the automaton after a position update; True on transition."""
        if self.level == 0:
            if x >= d:
                self.level = 1
                return True
            if x <= -d:
                self.level = -1
                return True
        elif self.level == 1:
            if x <= 0.0:
                self.level = 0
                return True
        else:
            if x >= 0.0:
                self.level = 0
                return True
        return False


@dataclass(frozen=True)
class Histogram:
    """Binned position densities, one row per actuator level.

    density integrates to 1 over all rows together, so each row's mass is
    that level's occupancy among in-range samples.
    """

    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    n_samples: int
    n_out_of_range: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])


@dataclass(frozen=True)
class SimStats:
    """Ensemble statistics with standard errors from per-particle scatter.

    For the linear rule activation_freq is NaN (nothing switches) and
    level_occupancy is None; the z-statistics are None for the switched
    rule, which does not track altitude continuously.
    """

    rule: str
    config: SimConfig
    n_samples: int
    mean_x: float
    mean_stderr: float
    variance_x: float
    variance_stderr: float
    cost_rate: float
    cost_stderr: float
    activation_freq: float
    freq_stderr: float
    level_occupancy: Optional[tuple]
    histogram: Histogram
    var_z: Optional[float] = None
    var_z_stderr: Optional[float] = None
    cov_xz: Optional[float] = None
    cov_xz_stderr: Optional[float] = None
    control_rms: Optional[float] = None


def _scatter_stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return float("nan")
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def _dispatch(run_one, n_particles: int, workers: int):
    if workers <= 1:
        for i in range(n_particles):
            run_one(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, range(n_particles)))


def _steps(config: SimConfig) -> tuple[int, int]:
    n_steps = int(round(config.t_total / config.dt))
    n_warmup = int(round(config.t_warmup / config.dt))
    if not (0 <= n_warmup < n_steps):
        raise ConfigError(
            f"t_total = {config.t_total:g} and t_warmup = {config.t_warmup:g} leave no"
            f" post-warmup samples at dt = {config.dt:g}"
        )
    return n_steps, n_warmup


def default_warmup(flow: FlowParams) -> float:
    """Default discarded transient: 20 relaxation times sigma_bar^2/c2."""
    if flow.c2 == 0:
        return 0.0
    return 20.0 * flow.sigma_bar**2 / flow.c2


def suggested_dt_tlc(flow: FlowParams, params: TlcParams) -> float:
    """Step small enough that discretization bias stays well below 1%.

    Keeps the one-step noise displacement near 1% of the trigger distance
    and stays far inside the precondition enforced by simulate_tlc.
    """
    t_in = params.d / (flow.alpha * params.h)
    if flow.c2 == 0:
        return 5e-3 * t_in
    return min(1e-4 * params.d**2 / flow.c2, 5e-3 * t_in)


def suggested_dt_linear(flow: FlowParams, gains: LinearGains) -> float:
    """Step resolving both closed-loop time scales with margin."""
    return 5e-3 * min(1.0 / gains.k2, 1.0 / math.sqrt(flow.alpha * gains.k1))


def simulate_tlc(flow: FlowParams, params: TlcParams, config: SimConfig) -> SimStats:
    """Euler-Maruyama ensemble under the switched rule.

    The step must resolve the excursion time d^2/c2 and the return time
    d/(alpha*h): dt <= 0.01*min of the two, else ConfigError. A coarser
    scale, the boundary-layer e-fold time lambda/(alpha*h), only affects
    the sampled density shape near the release point; leaving it
    unresolved draws TimeStepResolutionWarning instead of an error.
    """
    t_out = params.d**2 / flow.c2 if flow.c2 > 0 else math.inf
    t_in = params.d / (flow.alpha * params.h)
    dt_max = 0.01 * min(t_out, t_in)
    if config.dt > dt_max * (1.0 + 1e-12):
        raise ConfigError(
            f"dt = {config.dt:g} fails the resolution precondition: need"
            f" dt <= 0.01*min(d^2/c2, d/(alpha*h)) = {dt_max:g}"
        )
    lam = efold_lambda(flow, params.h) if flow.c2 > 0 else 0.0
    if flow.c2 > 0 and config.dt > 0.01 * lam / (flow.alpha * params.h):
        warnings.warn(
            f"dt = {config.dt:g} leaves the boundary-layer e-fold time"
            f" {lam / (flow.alpha * params.h):g} unresolved; branch densities near x = 0"
            " will be smeared while integral statistics stay accurate",
            TimeStepResolutionWarning,
            stacklevel=2,
        )

    n_steps, n_warmup = _steps(config)
    if config.hist_range is not None:
        lo, hi = map(float, config.hist_range)
    else:
        span = params.d + 8.0 * lam if lam > 0 else 1.1 * params.d
        lo, hi = -span, span
    inv_bin = config.hist_bins / (hi - lo)
    if config.hist_stride is not None:
        stride = int(config.hist_stride)
    else:
        decorrelation = t_in if not math.isfinite(t_out) else 0.6 * (t_out + t_in)
        stride = max(1, int(round(decorrelation / config.dt)))

    sig = math.sqrt(flow.c2 * config.dt)
    g = flow.alpha * params.h * config.dt
    drift_dt = np.array([g, 0.0, -g])
    children = np.random.SeedSequence(config.seed).spawn(config.n_particles)
    acc = np.zeros((config.n_particles, 5))
    counts = np.zeros((config.n_particles, 3, config.hist_bins), dtype=np.int64)

    def run_one(i):
        rng = np.random.Generator(np.random.PCG64DXSM(children[i]))
        noise = rng.standard_normal(n_steps, dtype=np.float32)
        run_tlc_particle(
            noise, sig, drift_dt, params.d, n_warmup, stride, lo, inv_bin, counts[i], acc[i]
        )

    _dispatch(run_one, config.n_particles, config.workers)

    n_kept = n_steps - n_warmup
    t_sampled = n_kept * config.dt
    n_total = n_kept * config.n_particles
    mean_i = acc[:, 0] / n_kept
    var_i = acc[:, 1] / n_kept - mean_i**2
    freq_i = acc[:, 2] / t_sampled

    mean_x = float(np.sum(acc[:, 0]) / n_total)
    variance_x = float(np.sum(acc[:, 1]) / n_total - mean_x**2)
    freq = float(np.sum(acc[:, 2]) / (config.n_particles * t_sampled))
    freq_se = _scatter_stderr(freq_i)
    cost = params.h * freq
    cost_se = params.h * freq_se

    counts_total = counts.sum(axis=0)
    in_range = int(counts_total.sum())
    width = (hi - lo) / config.hist_bins
    density = counts_total / (in_range * width) if in_range > 0 else np.zeros_like(
        counts_total, dtype=float
    )
    occupancy = (
        tuple(counts_total.sum(axis=1) / in_range)
        if in_range > 0
        else (math.nan, math.nan, math.nan)
    )
    histogram = Histogram(
        edges=np.linspace(lo, hi, config.hist_bins + 1),
        counts=counts_total,
        density=density,
        n_samples=in_range,
        n_out_of_range=int(acc[:, 4].sum()),
    )

    return SimStats(
        rule="tlc",
        config=config,
        n_samples=n_total,
        mean_x=mean_x,
        mean_stderr=_scatter_stderr(mean_i),
        variance_x=variance_x,
        variance_stderr=_scatter_stderr(var_i),
        cost_rate=cost,
        cost_stderr=cost_se,
        activation_freq=freq,
        freq_stderr=freq_se,
        level_occupancy=occupancy,
        histogram=histogram,
    )


def _discrete_spectral_radius(flow: FlowParams, gains: LinearGains, dt: float) -> float:
    step = np.array(
        [[1.0, flow.alpha * dt], [-gains.k1 * dt, 1.0 - gains.k2 * dt]]
    )
    return float(np.max(np.abs(np.linalg.eigvals(step))))


def simulate_linear(flow: FlowParams, gains: LinearGains, config: SimConfig) -> SimStats:
    """Euler-Maruyama ensemble under the linear rule u = -k1*x - k2*z.

    Requires stable gains; raises InstabilityError either up front (k1 or
    k2 not positive) or when a trajectory exceeds 100*sigma_bar. The
    deterministic Euler map itself must be contracting at this dt, else
    ConfigError.
    """
    if gains.k1 <= 0 or gains.k2 <= 0:
        raise InstabilityError(
            f"gains (k1={gains.k1:g}, k2={gains.k2:g}) give an unstable closed loop"
        )
    rho = _discrete_spectral_radius(flow, gains, config.dt)
    if rho > 1.0 + 1e-12:
        raise ConfigError(
            f"dt = {config.dt:g} makes the Euler update unstable"
            f" (spectral radius {rho:.6g}); reduce the step"
        )

    n_steps, n_warmup = _steps(config)
    if config.hist_range is not None:
        lo, hi = map(float, config.hist_range)
    else:
        sxx = stationary_covariance(flow, gains).sxx
        # sxx degenerates to 0 in the noise-free limit; keep the bins usable
        span = 4.5 * math.sqrt(sxx) if sxx > 0 else flow.sigma_bar
        lo, hi = -span, span
    inv_bin = config.hist_bins / (hi - lo)
    if config.hist_stride is not None:
        stride = int(config.hist_stride)
    else:
        decorrelation = 2.0 / gains.k2
        stride = max(1, int(round(decorrelation / config.dt)))

    sig = math.sqrt(flow.c2 * config.dt)
    big = 100.0 * flow.sigma_bar
    children = np.random.SeedSequence(config.seed).spawn(config.n_particles)
    acc = np.zeros((config.n_particles, 10))
    counts = np.zeros((config.n_particles, 1, config.hist_bins), dtype=np.int64)

    def run_one(i):
        rng = np.random.Generator(np.random.PCG64DXSM(children[i]))
        noise = rng.standard_normal(n_steps, dtype=np.float32)
        run_linear_particle(
            noise,
            sig,
            flow.alpha * config.dt,
            gains.k1,
            gains.k2,
            config.dt,
            n_warmup,
            stride,
            lo,
            inv_bin,
            big,
            counts[i],
            acc[i],
        )

    _dispatch(run_one, config.n_particles, config.workers)

    if np.any(acc[:, 9] > 0):
        diverged = int(np.sum(acc[:, 9] > 0))
        raise InstabilityError(
            f"{diverged} of {config.n_particles} trajectories exceeded"
            f" 100*sigma_bar = {big:g} m"
        )

    n_kept = n_steps - n_warmup
    n_total = n_kept * config.n_particles
    mean_i = acc[:, 0] / n_kept
    var_i = acc[:, 1] / n_kept - mean_i**2
    mean_z_i = acc[:, 2] / n_kept
    var_z_i = acc[:, 3] / n_kept - mean_z_i**2
    cov_i = acc[:, 4] / n_kept - mean_i * mean_z_i
    cost_i = acc[:, 5] / n_kept

    mean_x = float(np.sum(acc[:, 0]) / n_total)
    variance_x = float(np.sum(acc[:, 1]) / n_total - mean_x**2)
    mean_z = float(np.sum(acc[:, 2]) / n_total)
    var_z = float(np.sum(acc[:, 3]) / n_total - mean_z**2)
    cov_xz = float(np.sum(acc[:, 4]) / n_total - mean_x * mean_z)
    cost = float(np.sum(acc[:, 5]) / n_total)
    control_rms = float(math.sqrt(np.sum(acc[:, 6]) / n_total))

    counts_total = counts.sum(axis=0)
    in_range = int(counts_total.sum())
    width = (hi - lo) / config.hist_bins
    density = counts_total / (in_range * width) if in_range > 0 else np.zeros_like(
        counts_total, dtype=float
    )
    histogram = Histogram(
        edges=np.linspace(lo, hi, config.hist_bins + 1),
        counts=counts_total,
        density=density,
        n_samples=in_range,
        n_out_of_range=int(acc[:, 8].sum()),
    )

    return SimStats(
        rule="linear",
        config=config,
        n_samples=n_total,
        mean_x=mean_x,
        mean_stderr=_scatter_stderr(mean_i),
        variance_x=variance_x,
        variance_stderr=_scatter_stderr(var_i),
        cost_rate=cost,
        cost_stderr=_scatter_stderr(cost_i),
        activation_freq=math.nan,
        freq_stderr=math.nan,
        level_occupancy=None,
        histogram=histogram,
        var_z=var_z,
        var_z_stderr=_scatter_stderr(var_z_i),
        cov_xz=cov_xz,
        cov_xz_stderr=_scatter_stderr(cov_i),
        control_rms=control_rms,
    )


@dataclass(frozen=True)
class HistogramComparison:
    """Discrepancy between a sampled histogram and the analytic densities."""

    sup_abs_marginal: float
    sup_abs_branches: tuple
    peak_marginal: float
    frac_within_4se: float
    chi2_reduced: float
    occupancy_error: float


def _bin_averages(pdf, edges: np.ndarray, branch: str) -> np.ndarray:
    """Analytic density averaged over each bin (5-point Gauss-Legendre)."""
    from .analytic import pdf_eval

    nodes, weights = np.polynomial.legendre.leggauss(5)
    lo = edges[:-1]
    width = edges[1:] - edges[:-1]
    out = np.zeros(lo.size)
    for node, weight in zip(nodes, weights):
        xs = lo + (node + 1.0) * 0.5 * width
        out += 0.5 * weight * pdf_eval(pdf, xs, branch)
    return out


def histogram_vs_analytic(stats: SimStats, pdf) -> HistogramComparison:
    """Compare a switched-rule histogram to the closed-form densities.

    Per-bin standard errors use the binomial count model, which is valid
    because the default histogram stride spaces samples by about one
    decorrelation time.
    """
    if stats.rule != "tlc":
        raise ValueError("histogram comparison requires switched-rule statistics")
    hist = stats.histogram
    edges = hist.edges
    width = hist.bin_width
    n = hist.n_samples
    branches = ("state-h", "state0", "state+h")

    expected = np.stack([_bin_averages(pdf, edges, b) for b in branches])
    expected_marginal = expected.sum(axis=0)
    observed = hist.density
    observed_marginal = observed.sum(axis=0)

    sup_branches = tuple(float(np.max(np.abs(observed[i] - expected[i]))) for i in range(3))
    sup_marginal = float(np.max(np.abs(observed_marginal - expected_marginal)))
    peak = float(np.max(expected_marginal))

    def z_scores(counts_row, expected_row):
        p_hat = counts_row / n
        se_counts = np.sqrt(np.maximum(counts_row * (1.0 - p_hat), 1.0))
        se_density = se_counts / (n * width)
        return (counts_row / (n * width) - expected_row) / se_density

    z_all = [z_scores(hist.counts[i], expected[i]) for i in range(3)]
    z_all.append(z_scores(hist.counts.sum(axis=0), expected_marginal))
    z_flat = np.concatenate(z_all)
    frac_ok = float(np.mean(np.abs(z_flat) <= 4.0))

    counts_marginal = hist.counts.sum(axis=0)
    expected_counts = expected_marginal * n * width
    valid = expected_counts >= 10.0
    if np.any(valid):
        chi2 = float(
            np.mean(
                ((counts_marginal[valid] - expected_counts[valid]) ** 2)
                / expected_counts[valid]
            )
        )
    else:
        chi2 = math.nan

    masses = branch_masses(pdf)
    occ_err = float(
        max(abs(stats.level_occupancy[i] - masses[i]) for i in range(3))
    )
    return HistogramComparison(
        sup_abs_marginal=sup_marginal,
        sup_abs_branches=sup_branches,
        peak_marginal=peak,
        frac_within_4se=frac_ok,
        chi2_reduced=chi2,
        occupancy_error=occ_err,
    )


def reference_tlc_trajectory(
    flow: FlowParams, params: TlcParams, noise: np.ndarray, dt: float
) -> tuple[np.ndarray, np.ndarray, int]:
    """Pure-Python switched-rule integration used to cross-check the kernel.

    Consumes the given standard-normal increments and returns (positions,
    level indices, transition count), with positions recorded after each
    full update exactly as the compiled kernel sees them.
    """
    sig = math.sqrt(flow.c2 * dt)
    g = flow.alpha * params.h * dt
    state = AutomatonState()
    xs = np.empty(noise.size)
    levels = np.empty(noise.size, dtype=np.int64)
    x = 0.0
    transitions = 0
    for k in range(noise.size):
        x += (-g if state.level == 1 else g if state.level == -1 else 0.0) + sig * float(
            noise[k]
        )
        if state.update(x, params.d):
            transitions += 1
        xs[k] = x
        levels[k] = state.level
    return xs, levels, transitions
