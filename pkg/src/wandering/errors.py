"""Exception hierarchy shared by all modules."""


class WanderingError(Exception):
    """Base class; the CLI maps any subclass to exit code 2."""


class NonFiniteInput(WanderingError):
    pass


class NoConvergence(WanderingError):
    pass


class DerivativeVanished(WanderingError):
    pass


class SingularJacobian(WanderingError):
    pass


class DegenerateCritical(WanderingError):
    pass


class NonDistinct(WanderingError):
    pass


class Escaped(WanderingError):
    def __init__(self, step, value=None):
        super().__init__(f"orbit escaped at step {step}")
        self.step = step
        self.value = value


class RayBifurcationSuspected(WanderingError):
    pass


class LandingUnresolved(WanderingError):
    pass


class TooCloseToBoundary(WanderingError):
    pass


class CommonLandingFailed(WanderingError):
    pass


class NonMinimal(WanderingError):
    def __init__(self, which, index):
        super().__init__(f"{which} orbit reaches its target early, at step {index}")
        self.which = which
        self.index = index


class ConfigurationMismatch(WanderingError):
    pass


class NotInW(WanderingError):
    pass


class AmbiguousBranch(WanderingError):
    pass


class NoFourRayCluster(WanderingError):
    pass


class SeparationFailed(WanderingError):
    pass


class NotSeparated(WanderingError):
    def __init__(self, point, landing_index):
        super().__init__(f"nodal point is the landing point of test angle #{landing_index}")
        self.point = point
        self.landing_index = landing_index


class NoTripleCoincidence(WanderingError):
    pass


class StitchingBroken(WanderingError):
    pass


class ChainStepError(WanderingError):
    def __init__(self, step, cause):
        super().__init__(f"chain step {step}: {type(cause).__name__}: {cause}")
        self.step = step
        self.cause = cause


class NotAdmissible(WanderingError):
    """A chain member failed an admissibility check."""
