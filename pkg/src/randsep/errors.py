"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Shapes or dimensions are inconsistent."""


class AssumptionViolation(ValueError):
    """Inputs break a geometric assumption the computation relies on
    (unequal intrinsic dimensions, zero principal angles, too many classes)."""


class UnsupportedActivation(ValueError):
    """The operation is only defined for a particular activation."""


class CostError(ValueError):
    """Refused: the requested exhaustive computation is too large."""


class DivergenceError(ArithmeticError):
    def __init__(self, epoch: int, value: float):
        super().__init__(f"loss became non-finite ({value}) at epoch {epoch}")
        self.epoch = epoch
        self.value = value


class PathologicalGeometryError(RuntimeError):
    """Rejection sampling failed to accept a single draw."""
