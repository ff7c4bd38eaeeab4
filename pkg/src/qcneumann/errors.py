"""Exception types shared across the package."""


class QcError(Exception):
    """Base class for all library errors."""


class PointOutsideSource(QcError):
    """Evaluation point lies outside the closed source domain."""


class DerivativeSingularity(QcError):
    """Closed-form derivative is undefined at the requested point."""


class DegenerateJacobian(QcError):
    """Jacobian is non-positive where a positive one is required."""


class NonFiniteIntegrand(QcError):
    """Integrand is non-finite on the quadrature nodes, or the integral
    fails to settle under refinement."""


class NotConverged(QcError):
    """Two successive refinement levels disagree beyond tolerance.

    Carries the two level values as ``coarse`` and ``fine``.
    """

    def __init__(self, message: str, coarse: float, fine: float):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class NoAdmissibleBeta(QcError):
    """Every probed Jacobian-integrability exponent failed to converge."""


class BetaOutOfRange(QcError):
    """Exponent outside the admissible range (requires beta > 1)."""


class NonFiniteNorm(QcError):
    """A Jacobian norm required by a bound is not finite."""


class InfiniteEsssup(QcError):
    """The Jacobian supremum is unbounded, so the sup-based bound is empty."""


class FoldedTriangle(QcError):
    """A pushed-forward mesh triangle has non-positive area."""


class DegenerateTriangle(QcError):
    """A mesh triangle has (numerically) zero area."""


class SolverStagnation(QcError):
    """Eigenvalue iteration failed to reach the residual target."""


class SpecParseError(QcError):
    """A domain specification (TOML or CLI flags) could not be parsed."""
