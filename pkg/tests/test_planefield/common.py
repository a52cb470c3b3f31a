import functools
import math
from collections.abc import Sequence

import mpmath

from planefield.settings import SettingsModel

ORACLE_DIGITS = 40
ORACLE_TERMS = 200
ORACLE_TAIL = mpmath.mpf(10) ** -ORACLE_DIGITS


@functools.lru_cache
def get_testing_settings() -> SettingsModel:
    return SettingsModel(seed=0, workers=1, chunk_size=4096, log_file=None)


def wright_oracle(
    upper: Sequence[tuple[float, float]],
    lower: Sequence[tuple[float, float]],
    x: float,
    terms: int = ORACLE_TERMS,
) -> float:
    """Plain partial sum of the generalized Wright series in extended precision."""
    with mpmath.workdps(ORACLE_DIGITS):
        total = mpmath.mpf(0)
        for k in range(terms):
            term = mpmath.power(x, k) / mpmath.factorial(k)
            for a, alpha in upper:
                term *= mpmath.gamma(mpmath.mpf(a) + k * mpmath.mpf(alpha))
            for b, beta in lower:
                term *= mpmath.rgamma(mpmath.mpf(b) + k * mpmath.mpf(beta))
            total += term
        return float(total)


def ml3_oracle(alpha: float, beta: float, gamma: float, x: float) -> float:
    """Three parameter Mittag-Leffler function from its defining series."""
    with mpmath.workdps(ORACLE_DIGITS):
        total = mpmath.mpf(0)
        for k in range(ORACLE_TERMS):
            total += (
                mpmath.rf(gamma, k)
                * mpmath.power(x, k)
                * mpmath.rgamma(alpha * k + beta)
                / mpmath.factorial(k)
            )
        return float(total)


def oracle_precision(x: float) -> tuple[int, int]:
    """Digits and terms of an alternating oracle series, growing with its argument x."""
    return ORACLE_DIGITS + math.ceil(55 * x), ORACLE_TERMS + math.ceil(650 * x)


def _negligible(term: mpmath.mpf, previous: mpmath.mpf) -> bool:
    return abs(term) < ORACLE_TAIL and abs(term) <= abs(previous)


def sfprf_pmf_oracle(n: int, t1: float, t2: float, alpha: float, lam: float) -> float:
    """sum_k (-1)^(n+k) (alpha k)_n y^k / (n! k!), falling factorials, y = t1 t2 lambda^alpha."""
    digits, terms = oracle_precision(t1 * t2 * lam**alpha)
    with mpmath.workdps(digits):
        y = mpmath.mpf(t1) * t2 * mpmath.power(lam, alpha)
        total = mpmath.mpf(0)
        for k in range(terms):
            total += (-1) ** (n + k) * mpmath.ff(alpha * k, n) * mpmath.power(y, k) / (
                mpmath.factorial(n) * mpmath.factorial(k)
            )
        return float(total)


def fprf_pmf_oracle(
    n: int, t1: float, t2: float, lam: float, alpha1: float, alpha2: float
) -> float:
    """Time fractional count pmf from the moments of the two inverse stable clocks."""
    digits, terms = oracle_precision(lam * t1**alpha1 * t2**alpha2)
    with mpmath.workdps(digits):
        x = lam * mpmath.power(t1, alpha1) * mpmath.power(t2, alpha2)
        total, previous = mpmath.mpf(0), mpmath.mpf(0)
        for k in range(n, n + terms):
            moments = mpmath.factorial(k) ** 2 * mpmath.rgamma(alpha1 * k + 1) * mpmath.rgamma(
                alpha2 * k + 1
            )
            term = (-1) ** (k - n) * mpmath.power(x, k) * moments / (
                mpmath.factorial(n) * mpmath.factorial(k - n)
            )
            total += term
            if k > n and _negligible(term, previous):
                break
            previous = term
        return float(total)
