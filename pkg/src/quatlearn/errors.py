"""Exception hierarchy shared by all quatlearn modules."""


class QuatLearnError(ValueError):
    """Base class for all domain errors raised by quatlearn."""


class SingularInputError(QuatLearnError):
    """A zero quaternion was supplied where an inverse is required."""


class UndefinedAxisError(QuatLearnError):
    """The rotation/polar axis is undefined (purely real input)."""


class DegenerateAxisError(QuatLearnError):
    """Antipodal qubit pair: the rotation plane is not unique."""


class PreconditionError(QuatLearnError):
    """An input violated a documented precondition."""


class ShapeError(QuatLearnError):
    """Operands have incompatible shapes."""


class InvalidRegisterError(QuatLearnError):
    """A register violates the purity/normalisation invariants."""


class UndefinedProbabilityError(QuatLearnError):
    """All functionals in a panel are zero, so normalisation is undefined."""


class DivergenceError(QuatLearnError):
    """Training produced a non-finite or exploding cost."""

    def __init__(self, iteration, cost):
        self.iteration = iteration
        self.cost = cost
        super().__init__(f"training diverged at iteration {iteration} (cost={cost!r})")
