import math
from dataclasses import dataclass

DEFAULT_REL = 1e-9
DEFAULT_ABS = 1e-12


@dataclass(frozen=True)
class Tolerance:
    """Mixed relative/absolute comparison tolerance.

    A bare float passed where a tolerance is expected becomes the absolute
    part, keeping the default relative part.
    """

    rel: float = DEFAULT_REL
    abs: float = DEFAULT_ABS

    def __post_init__(self):
        if self.rel < 0 or self.abs < 0:
            raise ValueError("tolerances must be non-negative")

    @classmethod
    def coerce(cls, tol):
        if tol is None:
            return cls()
        if isinstance(tol, Tolerance):
            return tol
        return cls(rel=DEFAULT_REL, abs=float(tol))

    def slack(self, *refs: float) -> float:
        scale = max((abs(r) for r in refs if math.isfinite(r)), default=0.0)
        return self.abs + self.rel * scale

    def le(self, x: float, y: float) -> bool:
        """``x <= y`` up to tolerance."""
        if x <= y:
            return True
        return x - y <= self.slack(x, y)

    def close(self, x: float, y: float) -> bool:
        if x == y:
            return True
        return abs(x - y) <= self.slack(x, y)
