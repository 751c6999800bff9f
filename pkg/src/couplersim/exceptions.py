"""Exception and warning types shared across the package."""


class CouplerError(Exception):
    """Base class for computational failures raised by this package."""


class PoleError(CouplerError):
    """Junction phase too close to the inductance pole cos(phi) = gamma."""


class DegenerateNetworkError(CouplerError):
    """Star-delta denominator (sum of branch inductances) vanished."""


class NegativeModeMassError(CouplerError):
    """An effective mode inductance came out non-positive."""


class UnstableModeError(CouplerError):
    """Lower eigenmode would be imaginary: |g_r| exceeds sqrt(omega_a*omega_b)/2."""


class ConvergenceError(CouplerError):
    """An iterative solver failed to reach the requested tolerance."""


class SingularResponseError(CouplerError):
    """Driven steady state is singular (zero decay at a resonant drive)."""


class TruncationError(CouplerError):
    """Fock-space size exceeds the memory cap, or results did not converge in the cutoff."""


class ConfigError(CouplerError):
    """Invalid configuration file, parameter set, or CLI arguments."""


class MultistableWarning(UserWarning):
    """Potential has several local minima; the global minimum was selected."""


class BranchNotResolvedWarning(UserWarning):
    """Spectrum grid does not resolve a mode branch well enough to track it."""


class GridCoverageWarning(UserWarning):
    """Phase-space grid clips non-negligible Wigner weight at its boundary."""
