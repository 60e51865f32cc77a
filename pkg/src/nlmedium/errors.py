"""Exception hierarchy shared by all modules.

Two families matter for the CLI exit codes: ``InputError`` covers anything a
caller could have validated up front (bad config, bad grid, unsupported
pattern) and maps to exit code 2; ``NumericsError`` covers data-dependent
numerical failures (poles, non-convergent quadrature, leaving the
perturbative regime) and maps to exit code 3.
"""


class NlmediumError(Exception):
    """Base class for all package errors."""


class InputError(NlmediumError):
    """Invalid input, configuration, or violated precondition (exit code 2)."""


class NumericsError(NlmediumError):
    """Numerical failure: pole hit, divergence, non-convergence (exit code 3)."""


class KernelSupportError(InputError):
    """Requested frequency lies outside the reservoir kernel support."""


class QuadratureError(NumericsError):
    """A quadrature produced a non-finite result."""


class ResponsePoleError(NumericsError):
    """The linear response denominator vanished (undamped resonance hit)."""


class GridResolutionError(InputError):
    """A sampling grid is too coarse for the requested operation."""


class EnergyConservationError(InputError):
    """Frequency quadruple violates the four-wave energy constraint."""


class MillerRatioError(NumericsError):
    """Miller ratio undefined because a linear-response factor vanishes."""


class PatternError(InputError):
    """Unsupported derivative pattern for the contraction catalog."""


class CovarianceError(InputError):
    """Covariance matrix is not Hermitian positive semi-definite."""


class GridMismatchError(InputError):
    """Inputs are not sampled on a common frequency grid."""


class PropagatorPoleError(NumericsError):
    """Transverse kernel is singular at the requested (omega, k)."""


class DysonPoleError(NumericsError):
    """Dyson resummation matrix is singular (dressed resonance)."""


class LoopConvergenceError(NumericsError):
    """Loop integral error estimate exceeds the accepted bound."""


class StepSizeError(InputError):
    """Finite-difference step too large: nonlinear contamination detected."""


class WindowAlignmentError(InputError):
    """Analysis window does not hold an integer number of drive periods."""


class ResonantHarmonicError(InputError):
    """Third harmonic too close to resonance for perturbation theory."""


class DivergenceError(NumericsError):
    """Simulated amplitude diverged beyond the perturbative regime."""


class RegimeError(NumericsError):
    """Measured response is not in the perturbative scaling regime."""
