"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """A quadrature, root-finder or series did not reach its tolerance."""


class RigidityViolation(ValueError):
    """A non-top eigenvalue sits at or above ``J + 1/J``.

    The transitional expansion takes ``log(J + 1/J - lambda_i)`` for
    ``i >= 2``; such samples are excluded from comparisons and counted.
    """
