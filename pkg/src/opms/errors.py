"""Domain error types shared across the package."""


class OpmsError(Exception):
    """Base class for all domain errors; the CLI maps these to exit code 1."""


# telemetry
class SchemaMismatch(OpmsError):
    pass


class InsufficientAttackRows(OpmsError):
    pass


class DegenerateClass(OpmsError):
    pass


class HeaderMismatch(OpmsError):
    pass


class NonFiniteValue(OpmsError):
    pass


class MalformedRow(OpmsError):
    pass


# models
class SingleClassTraining(OpmsError):
    pass


class NonFiniteInput(OpmsError):
    pass


class NonConvergenceWarning(UserWarning):
    """SMO hit its pass budget; the model returned is best-so-far."""


# metrics
class LengthMismatch(OpmsError):
    pass


class NonBinaryLabel(OpmsError):
    pass


class EmptyClass(OpmsError):
    pass


# explain
class TooManyFeatures(OpmsError):
    pass


class EmptyBackground(OpmsError):
    pass


class WrongModelKind(OpmsError):
    pass


class MisalignedInputs(OpmsError):
    pass


# select / resilience
class EmptyRanking(OpmsError):
    pass


class UnknownFeature(OpmsError):
    pass


class UnknownGroup(OpmsError):
    pass
