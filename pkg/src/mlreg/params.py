"""Class parameters shared by every module of the toolkit."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ClassParams:
    """Regularity-class parameter pair (tau, sigma).

    ``tau`` controls the strength of the derivative growth, ``sigma`` its
    shape.  The conjugate parameter ``tau_tilde = tau**(sigma/(sigma-1))``
    governs admissible cutoff families on the detector side; it is defined
    only for ``sigma > 1``.
    """

    tau: float
    sigma: float

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be a positive finite real, got {self.tau}")
        if not (self.sigma >= 1 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be a finite real >= 1, got {self.sigma}")

    @property
    def tau_tilde(self) -> float | None:
        """Conjugate parameter tau**(sigma/(sigma-1)); None at sigma == 1."""
        if self.sigma == 1.0:
            return None
        return self.tau ** (self.sigma / (self.sigma - 1.0))

    def require_detector_grade(self) -> None:
        """Raise unless sigma > 1 (detector-facing operations need it)."""
        if not self.sigma > 1.0:
            raise ValueError(
                f"operation requires sigma > 1, got sigma={self.sigma}"
            )

    def conjugate(self) -> "ClassParams":
        """Parameters (tau_tilde, sigma) used for admissible localization."""
        self.require_detector_grade()
        return ClassParams(self.tau_tilde, self.sigma)

    def as_dict(self) -> dict:
        d = {"tau": self.tau, "sigma": self.sigma}
        if self.sigma > 1.0:
            d["tau_tilde"] = self.tau_tilde
        return d

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"(tau={self.tau:g}, sigma={self.sigma:g})"
