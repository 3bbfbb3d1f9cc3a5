"""Exception and warning types raised across the package."""


class AnisoshapeError(Exception):
    """Base class for all package errors."""


class InputError(AnisoshapeError, ValueError):
    """Malformed user input (files, config, CLI arguments)."""


# curve2d
class DegenerateLoop(AnisoshapeError, ValueError):
    pass


class SelfIntersection(AnisoshapeError, ValueError):
    pass


class OverlappingComponents(AnisoshapeError, ValueError):
    pass


# anisotropy
class NonUnitNormal(AnisoshapeError, ValueError):
    pass


class NonSmoothAnisotropy(AnisoshapeError, ValueError):
    pass


# potential
class NonConvexSample(AnisoshapeError, ValueError):
    pass


class NonConvexBaseWarning(UserWarning):
    """The base curve of a signed-distance potential is not convex."""


# variation
class DimensionMismatch(AnisoshapeError, ValueError):
    pass


class SolverFailure(AnisoshapeError, RuntimeError):
    pass


class StepTooLarge(AnisoshapeError, ValueError):
    pass


# solve
class ProjectionFailure(AnisoshapeError, RuntimeError):
    pass


class AllComponentsVanished(AnisoshapeError):
    """Every component was deleted during an unconstrained descent.

    This is a legitimate outcome (the empty set beats every curve when the
    potential is positive); the partial :class:`SolveResult` is attached.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
