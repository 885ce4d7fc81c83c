"""Shared test utilities."""

import math

import numpy as np

#: standard normal 99th percentile
Z_99 = 2.3263478740408408


def chi2_critical_99(df: int) -> float:
    """Upper 1% chi-square quantile via the Wilson-Hilferty approximation.

    Accurate to a few tenths of a percent for df >= 3, which is plenty for
    goodness-of-fit gates.
    """
    h = 2.0 / (9.0 * df)
    return df * (1.0 - h + Z_99 * math.sqrt(h)) ** 3


def chi_square_stat(observed, expected) -> float:
    """Pearson statistic; zero-expectation cells must be unobserved."""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    dead = expected == 0.0
    assert np.all(observed[dead] == 0.0), "observed mass in a zero-probability cell"
    live = ~dead
    return float(np.sum((observed[live] - expected[live]) ** 2 / expected[live]))
