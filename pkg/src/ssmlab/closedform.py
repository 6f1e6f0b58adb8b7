"""Closed-form revenue of a single SM or SSM miner against honest miners."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError

SCAN_STEP = 0.005


@dataclass(frozen=True)
class ClosedFormQuery:
    strategy: str  # "sm" or "ssm"
    alpha: float
    gamma: float

    def __post_init__(self):
        if self.strategy not in ("sm", "ssm"):
            raise DomainError(f"strategy must be 'sm' or 'ssm', got {self.strategy!r}")
        _check(self.alpha, self.gamma)

    def revenue(self) -> float:
        f = sm_relative_revenue if self.strategy == "sm" else ssm_relative_revenue
        return f(self.alpha, self.gamma)


def _check(alpha, gamma):
    if not 0.0 < alpha <= 0.5:
        raise DomainError(f"alpha={alpha:g} out of (0,0.5]")
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma={gamma:g} out of [0,1]")


def _sm(a, g):
    num = a * (1 - a) ** 2 * (4 * a + g * (1 - 2 * a)) - a**3
    return num / (1 - a * (1 + (2 - a) * a))


def _ssm(a, g):
    return a * (a * (a * (2 * a - 5) + 4) - (a - 1) ** 3 * g) / ((a - 1) * a**2 + 1)


def sm_relative_revenue(alpha: float, gamma: float) -> float:
    _check(alpha, gamma)
    return _sm(alpha, gamma)


def ssm_rates(alpha: float, gamma: float) -> tuple[float, float]:
    """Un-normalised block rates ``(r_ssm, r_others)`` per chain step."""
    _check(alpha, gamma)
    a, g = alpha, gamma
    r_ssm = (2 - g) * a**4 + (3 * g - 5) * a**3 + (4 - 3 * g) * a**2 + g * a
    r_others = (1 - a) ** 2 * ((g - 2) * a**2 + (2 - g) * a + 1)
    return r_ssm, r_others


def ssm_relative_revenue(alpha: float, gamma: float) -> float:
    _check(alpha, gamma)
    return _ssm(alpha, gamma)


def series_coefficients(strategy: str, gamma: float, degree: int = 5, radius: float = 0.05, n: int = 256) -> np.ndarray:
    """Numeric Taylor coefficients ``c_1..c_degree`` of the revenue ratio at alpha = 0.

    Uses the discrete Cauchy integral on a circle of the given radius, which is
    exact up to aliasing for these rational functions (poles lie far outside).
    """
    f = {"sm": _sm, "ssm": _ssm}.get(strategy)
    if f is None:
        raise DomainError(f"strategy must be 'sm' or 'ssm', got {strategy!r}")
    z = radius * np.exp(2j * np.pi * np.arange(n) / n)
    c = np.fft.fft(f(z, gamma)) / n
    k = np.arange(1, degree + 1)
    return (c[k] / radius**k).real


def sign_changes(f, grid) -> list[tuple[float, float]]:
    """Brackets ``(lo, hi)`` of consecutive grid points where ``f`` changes sign."""
    vals = [f(x) for x in grid]
    out = []
    for k in range(1, len(grid)):
        if (vals[k - 1] < 0) != (vals[k] < 0):
            out.append((grid[k - 1], grid[k]))
    return out


def profitability_root(strategy: str, gamma: float, tol: float = 1e-6) -> float | None:
    """Smallest hash rate in (0, 0.5] at which the strategy earns at least its hash share.

    Returns 0.0 when the strategy already pays at the smallest scanned hash rate
    and ``None`` when it never pays on (0, 0.5].
    """
    if strategy not in ("sm", "ssm"):
        raise DomainError(f"strategy must be 'sm' or 'ssm', got {strategy!r}")
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma={gamma:g} out of [0,1]")
    rev = sm_relative_revenue if strategy == "sm" else ssm_relative_revenue

    def gain(a):
        return rev(a, gamma) - a

    grid = np.round(np.arange(SCAN_STEP, 0.5 + SCAN_STEP / 2, SCAN_STEP), 10)
    if gain(grid[0]) >= 0:
        return 0.0
    brackets = sign_changes(gain, grid)
    if not brackets:
        return None
    lo, hi = brackets[0]
    return float(bisect(gain, lo, hi, xtol=tol))
