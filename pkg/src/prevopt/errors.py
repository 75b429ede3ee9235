"""Exception hierarchy shared by all prevopt modules."""


class PrevoptError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PrevoptError, ValueError):
    """A value violates a Pythagorean fuzzy number invariant."""


class DimensionError(PrevoptError, ValueError):
    """Vectors or matrices with incompatible shapes."""


class RangeError(PrevoptError, ValueError):
    """A raw feature value lies outside its admissible range."""


class DegenerateClusterError(PrevoptError, ArithmeticError):
    """A cluster received (numerically) zero total membership."""


class EncodingError(PrevoptError, ValueError):
    """A substitution pair does not index a valid drug position or bundle."""


class NoMoveError(PrevoptError, ValueError):
    """No program in the instance has a replaceable drug."""


class BudgetError(PrevoptError, ValueError):
    """An enumeration would exceed the configured budget."""


class SchemaError(PrevoptError, ValueError):
    """Input file columns or fields do not match the declared schema."""


class FormatVersionError(PrevoptError, ValueError):
    """A serialized document carries an unknown ``format_version``."""


class InstanceValidationError(PrevoptError, ValueError):
    """An instance or program breaks a structural invariant.

    ``problems`` lists one human readable message per offending field.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NotCloseableError(PrevoptError, RuntimeError):
    """A review round cannot be closed in its current state."""
