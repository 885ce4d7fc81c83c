"""Small numeric helpers shared across modules."""

from __future__ import annotations

import math


def ceil_snap(value: float, tol: float = 1e-9) -> int:
    """Ceiling that forgives float noise in quotients that are really integers.

    Quantities like n/delta or 15/r**2 are integers for the parameter values
    used throughout, but float division can land a hair above them; snapping
    keeps sample counts at their intended values.
    """
    nearest = round(value)
    if abs(value - nearest) <= tol * max(1.0, abs(value)):
        return int(nearest)
    return math.ceil(value)
