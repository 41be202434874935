"""Exception hierarchy shared by all modules."""


class QuadSqueezeError(Exception):
    """Base class for every error raised by the package."""


class NotSymplectic(QuadSqueezeError, ValueError):
    pass


class OutOfDomain(QuadSqueezeError, ValueError):
    pass


class ToleranceNotMet(QuadSqueezeError, ArithmeticError):
    pass


class NotSymmetricProfile(QuadSqueezeError, ValueError):
    pass


class NotPeriodic(QuadSqueezeError, ValueError):
    pass


class EmptyResult(QuadSqueezeError):
    pass


class NoConvergence(QuadSqueezeError, ArithmeticError):
    pass


class NotEquidiagonal(QuadSqueezeError, ValueError):
    pass


class NotEquidiagonalCore(NotEquidiagonal):
    pass


class InvalidLambda(QuadSqueezeError, ValueError):
    pass


class SingularTheta(QuadSqueezeError, ArithmeticError):
    pass


class NonPositiveScale(QuadSqueezeError, ValueError):
    pass
