"""Exception types shared across the toolkit."""


class TrigraspError(Exception):
    """Base class for all toolkit errors."""


class AngleNearPi(TrigraspError):
    """Rotation logarithm requested for an angle at or too close to pi."""


class NoPairsFound(TrigraspError):
    """Antipodal sampling produced zero valid contact pairs."""


class NoValidTriplet(TrigraspError):
    """Every triplet of grasp groups has a (near-)singular axis matrix."""


class PlanNotFound(TrigraspError):
    """The regrasp search exhausted all triplets and members without a plan."""


class SingularTriplet(TrigraspError):
    """Grasp closing axes are too close to parallel for pose recovery."""


class NotConverged(TrigraspError):
    """A conformance run did not reach the wrench tolerance."""
