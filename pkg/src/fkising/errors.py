"""Exception types raised across the package."""


class FKIsingError(Exception):
    pass


class EmptyDomain(FKIsingError):
    """No lattice point falls inside the requested rectangle."""


class UnknownSite(FKIsingError):
    pass


class InvalidBondConfig(FKIsingError):
    """Bond configuration violates a boundary-condition constraint."""


class IncompatibleState(FKIsingError):
    """Spin/bond pair violates the same-cluster-same-spin compatibility."""


class DegenerateWeights(FKIsingError):
    """Importance weights collapsed below the effective-sample-size floor."""


class UnsupportedBC(FKIsingError):
    pass


class EmptyCluster(FKIsingError):
    pass


class MissingSign(FKIsingError):
    pass


class DegenerateLoop(FKIsingError):
    pass


class EmptyEnsemble(FKIsingError):
    pass


class EmptyCollection(FKIsingError):
    pass


class DomainTooLarge(FKIsingError):
    """Enumeration request exceeds the configured state-space cap."""


class TruncationTooSmall(FKIsingError):
    pass


class AtomOutsideDomain(FKIsingError):
    pass


class InsufficientSamples(FKIsingError):
    pass


class InsufficientStatistics(FKIsingError):
    pass


class CorrelationLengthTooLarge(FKIsingError):
    """Fit window is too short relative to the fitted decay length."""


class IncompatibleLambda(FKIsingError):
    pass
