"""Exception types and the certificate record shared by all modules."""

from __future__ import annotations

from dataclasses import dataclass


class DomainError(ValueError):
    """Input outside the domain of an operation (non-SPD, degenerate, ...)."""


class UnsupportedDimensionError(DomainError):
    pass


class CertificateViolation(AssertionError):
    """A certified a-priori bound failed.

    This is never expected; it signals an implementation bug in either the
    bound or the quantity it controls.
    """


@dataclass(frozen=True)
class Certificate:
    """Outcome of checking one perturbation estimate.

    ``applicable`` says whether the smallness hypothesis held. When it did,
    ``actual <= bound`` has been verified (otherwise a
    :class:`CertificateViolation` is raised instead of returning).
    """

    applicable: bool
    bound: float
    actual: float

    @property
    def slack(self) -> float:
        return self.bound - self.actual


def checked(applicable: bool, bound: float, actual: float, what: str,
            rtol: float = 1e-12) -> Certificate:
    if applicable and actual > bound * (1.0 + rtol) + 1e-15:
        raise CertificateViolation(
            f"{what}: actual {actual!r} exceeds bound {bound!r}")
    return Certificate(bool(applicable), float(bound), float(actual))
