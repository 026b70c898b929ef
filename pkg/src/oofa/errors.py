"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad user input: malformed runs, files, constraints, or arguments."""


class UnsatisfiableConstraintError(ValidationError):
    """No permutation satisfies the given ordering constraints."""


class SingularModelError(ValidationError):
    """Model matrix is rank deficient where a full-rank fit is required."""
