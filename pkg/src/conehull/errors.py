"""Exception types raised across the package."""


class ConeHullError(Exception):
    """Base class for all package errors."""


class DimensionTooLarge(ConeHullError):
    pass


class SingularCovariance(ConeHullError):
    pass


class IllConditioned(ConeHullError):
    """User-supplied linear map exceeds the condition-number cap."""


class AcceptanceTooLow(ConeHullError):
    pass


class ZeroVector(ConeHullError):
    pass


class DegenerateInput(ConeHullError):
    """Point set does not affinely span the ambient space."""


class NonSimplicialFacet(ConeHullError):
    pass


class BudgetExceeded(ConeHullError):
    pass


class Degenerate(ConeHullError):
    """Estimator input carries no information (e.g. all zeros)."""


class ConfigError(ConeHullError):
    pass
