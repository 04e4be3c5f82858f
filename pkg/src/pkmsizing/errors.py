"""Exception hierarchy.

Every error raised for a domain reason derives from :class:`PkmError`; the CLI
maps those to exit code 1.
"""

from __future__ import annotations


class PkmError(Exception):
    """Base class for domain errors."""


class SingularMatrixError(PkmError, ArithmeticError):
    pass


class KinematicsError(PkmError):
    pass


class OutOfReach(KinematicsError):
    pass


class ModeViolation(KinematicsError):
    pass


class NoAssembly(KinematicsError):
    pass


class StructuralSingularity(KinematicsError):
    pass


class InconsistentPose(KinematicsError):
    pass


class SingularityError(KinematicsError):
    """Evaluation refused because the pose is (near) singular."""

    kind = "singular"

    def __init__(self, message: str, point=None, det_a: float | None = None,
                 det_b: float | None = None):
        super().__init__(message)
        self.point = point
        self.det_a = det_a
        self.det_b = det_b


class SerialSingular(SingularityError):
    kind = "serial"


class ParallelSingular(SingularityError):
    kind = "parallel"


class EmptyLocus(PkmError):
    pass


class InfeasibleAtSeed(PkmError):
    pass


class AllOrientationsRejected(PkmError):
    pass


class MismatchedScenario(PkmError):
    pass


class ConfigError(PkmError):
    pass
