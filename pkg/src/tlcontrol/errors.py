"""Exception types raised by the library."""


class TlcontrolError(Exception):
    """Base class for all errors raised by this package."""


class InfeasibleError(TlcontrolError, ValueError):
    """A parameter choice cannot satisfy the variance budget.

    Raised e.g. when the dead-band half-width d is at or beyond the
    zero-actuation limit sqrt(6)*sigma, where no finite actuation
    velocity can hold the stationary variance at sigma^2.
    """


class ConvergenceError(TlcontrolError, RuntimeError):
    """A numerical routine failed to reach its convergence target."""


class InstabilityError(TlcontrolError, RuntimeError):
    """A simulated or analyzed system has no stationary state.

    Raised for linear gains that are not Hurwitz-stable and for
    simulated trajectories that diverge.
    """


class ConfigError(TlcontrolError, ValueError):
    """A run configuration file or value is malformed or inconsistent."""


class TailTruncationWarning(UserWarning):
    """The finite-difference domain cuts the density tail off too early.

    Issued when the solved marginal at +-x_max exceeds 1e-8 of its peak,
    meaning the reported field carries visible truncation error.
    """


class TimeStepResolutionWarning(UserWarning):
    """The simulation time step leaves the boundary-layer e-fold time
    unresolved.

    Integral statistics (variance, cost, frequency) remain accurate as long
    as the excursion and return time scales are resolved, but the sampled
    density near the release point is smeared over sqrt(c2*dt).
    """
