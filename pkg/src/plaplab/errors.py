"""Exception hierarchy for plaplab."""


class PlapLabError(Exception):
    """Base class for all errors raised by this package."""


# graph construction and domains


class GraphError(PlapLabError, ValueError):
    pass


class AsymmetricInput(GraphError):
    pass


class NonpositiveWeight(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class IsolatedVertex(GraphError):
    pass


class UnknownVertex(GraphError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyInterior(GraphError):
    pass


class DegenerateSize(GraphError):
    pass


class DisconnectedAfterRetries(GraphError):
    pass


class EdgeListParseError(GraphError):
    """Malformed edge-list text. ``lineno`` is 1-based."""

    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


# operator


class MissingNeighborValue(PlapLabError, ValueError):
    pass


class SupportMismatch(PlapLabError, ValueError):
    pass


class MissingBoundaryData(PlapLabError, ValueError):
    pass


class InvalidExponent(PlapLabError, ValueError):
    pass


# spectral


class ZeroDenominator(PlapLabError, ValueError):
    pass


class NotConnected(PlapLabError, ValueError):
    pass


class NonzeroBoundaryData(PlapLabError, ValueError):
    pass


class EmptyBoundary(PlapLabError, ValueError):
    pass


class NoConvergence(PlapLabError, RuntimeError):
    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (last residual {residual:.3e})")


# dynamics


class NoContraction(PlapLabError, RuntimeError):
    pass


class MaxSweepsExceeded(PlapLabError, RuntimeError):
    pass


class StepUnderflowWithoutGrowth(PlapLabError, RuntimeError):
    pass


class NonpositiveDenominator(PlapLabError, ValueError):
    pass


class QuadratureFailure(PlapLabError, RuntimeError):
    pass


# certificates and scenarios


class DomainMismatch(PlapLabError, ValueError):
    pass


class BelowEquilibrium(PlapLabError, ValueError):
    pass


class HypothesisViolated(PlapLabError, ValueError):
    """A sampled hypothesis of a blow-up theorem failed.

    ``which`` names the inequality, ``where`` carries the offending sample.
    """

    def __init__(self, which, where=None):
        self.which = which
        self.where = where
        msg = which if where is None else f"{which} (at {where})"
        super().__init__(msg)


class ConfigParse(PlapLabError, ValueError):
    def __init__(self, key_path, message):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")
