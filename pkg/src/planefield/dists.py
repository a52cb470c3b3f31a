"""Closed form laws of the planar Poisson random fields and their compound versions.

Counts:

- `prf_pmf`: Poisson(lambda t1 t2),
- `fprf_pmf` / `tfprf_laplace` / `fprf_laplace`: time fractional field, orders alpha1, alpha2,
- `sfprf_pmf` / `sfprf_pgf`: space fractional field, order beta,
- `stfprf_pmf` / `stfprf_pgf`: space-time fractional field.

Alternating count series are accepted while lambda t1^alpha1 t2^alpha2 (lambda^beta for the space
fractional ones) stays below `ALTERNATING_DOMAIN`.
"""

import functools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Literal, Self

import numpy as np
import numpy.typing as npt
from scipy import special, stats

from planefield.errors import DomainError, SeriesDivergenceError
from planefield.schemas import FieldParams, FloatArray, Rect, SeriesControl, WrightSpec
from planefield.specfun import (
    DEFAULT_CONTROL,
    Real,
    as_output,
    integrate_checked,
    ml1,
    ml3,
    power_series,
    term_budget,
    wright,
    wright_derivative,
)

LOGGER = logging.getLogger("planefield.dists")

ALTERNATING_DOMAIN = 2.0
"""Largest count-series argument accepted by the alternating pmf series."""

Point = tuple[float, float]
ScaledVariant = Literal[
    "gaussian_sheet", "tc_one_axis", "tc_two_axis", "stf_compound", "product_tc"
]
SCALED_VARIANTS: tuple[ScaledVariant, ...] = (
    "gaussian_sheet",
    "tc_one_axis",
    "tc_two_axis",
    "stf_compound",
    "product_tc",
)


def _check_times(operation: str, *times: npt.ArrayLike) -> None:
    if any(np.any(np.asarray(t) < 0) for t in times):
        raise DomainError(operation, "times must be nonnegative")


def _check_alternating(operation: str, x: npt.ArrayLike) -> None:
    largest = float(np.max(x)) if np.size(x) else 0.0
    if largest > ALTERNATING_DOMAIN:
        raise DomainError(
            operation,
            f"series argument {largest:.6g} exceeds {ALTERNATING_DOMAIN}, "
            "use a smaller lambda or smaller times",
        )


def product_clock_spec(params: FieldParams) -> WrightSpec:
    """Wright parameters of E exp(z L_alpha1(1) L_alpha2(1)) as a series in z."""
    return WrightSpec(
        upper=((1.0, 1.0), (1.0, 1.0)),
        lower=((1.0, params.alpha1), (1.0, params.alpha2)),
    )


def _time_scale(params: FieldParams, t1: npt.ArrayLike, t2: npt.ArrayLike) -> FloatArray:
    return np.asarray(params.time_scale(t1, t2), dtype=np.float64)


####################################################################################################
# Counts
####################################################################################################
# Count pmfs accept scalar or array times (broadcast together) and return a float or an array.


def prf_pmf(n: int, t1: npt.ArrayLike, t2: npt.ArrayLike, lam: float) -> Real:
    """Pr{N(t1, t2) = n} of the plain Poisson random field."""
    _check_times("prf_pmf", t1, t2)
    mean = lam * np.asarray(t1, dtype=np.float64) * np.asarray(t2, dtype=np.float64)
    on_axes = mean == 0
    pmf = stats.poisson.pmf(n, np.where(on_axes, 1.0, mean))
    return as_output(np.where(on_axes, float(n == 0), pmf))


def fprf_pmf(
    n: int,
    t1: npt.ArrayLike,
    t2: npt.ArrayLike,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Pr{N(t1, t2) = n} of the time fractional Poisson random field.

    x^n / n! * 2Psi2[(n+1, 1), (n+1, 1); (n alpha1 + 1, alpha1), (n alpha2 + 1, alpha2) | -x]
    with x = lambda t1^alpha1 t2^alpha2 (beta is ignored).
    """
    _check_times("fprf_pmf", t1, t2)
    x = params.lam * _time_scale(params, t1, t2)
    _check_alternating("fprf_pmf", x)
    a1, a2 = params.alpha1, params.alpha2
    spec = WrightSpec(
        upper=((n + 1.0, 1.0), (n + 1.0, 1.0)),
        lower=((n * a1 + 1.0, a1), (n * a2 + 1.0, a2)),
    )
    series = np.asarray(wright(spec, -x, ctrl))
    return as_output(x**n / math.factorial(n) * series)


def fprf_laplace(
    u: npt.ArrayLike,
    t1: float,
    t2: float,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """E exp(-u N(t1, t2)) of the time fractional field, from the moments of its random clocks.

    sum_k (lambda (e^-u - 1))^k E[L_alpha1(t1)^k] E[L_alpha2(t2)^k] / k!, with the inverse
    stable moments E[L_alpha(t)^k] = k! t^(alpha k) / Gamma(alpha k + 1).
    """
    _check_times("fprf_laplace", t1, t2)
    z = params.lam * np.expm1(-np.asarray(u, dtype=np.float64))
    budget = term_budget(ctrl, z * float(params.time_scale(t1, t2)))
    k = np.arange(budget, dtype=np.float64)
    log_moments = [
        special.gammaln(k + 1) + alpha * k * math.log(t) - special.gammaln(alpha * k + 1)
        if t > 0
        else np.where(k == 0, 0.0, -np.inf)
        for alpha, t in ((params.alpha1, t1), (params.alpha2, t2))
    ]
    log_abs = log_moments[0] + log_moments[1] - special.gammaln(k + 1)
    sign = np.where(np.isfinite(log_abs), 1.0, 0.0)
    log_error = 3.0 * special.gammaln(k + 1) + sum(
        np.abs(special.gammaln(alpha * k + 1)) + alpha * k * abs(math.log(t)) if t > 0 else 0.0
        for alpha, t in ((params.alpha1, t1), (params.alpha2, t2))
    )
    log_error = np.where(sign == 0.0, 0.0, log_error)

    def coefficient_mp(ctx: Any, k: int) -> Any:  # noqa: ANN401
        value = ctx.factorial(k)
        for alpha, t in ((params.alpha1, t1), (params.alpha2, t2)):
            value *= ctx.power(t, alpha * k) * ctx.rgamma(alpha * k + 1)
        return value

    series = power_series("fprf_laplace", log_abs, sign, coefficient_mp, log_error=log_error)
    return as_output(series(z, ctrl))


def tfprf_laplace(
    u: npt.ArrayLike,
    t1: float,
    t2: float,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """E exp(-u N(t1, t2)) of the time fractional field as a generalized Wright function."""
    _check_times("tfprf_laplace", t1, t2)
    x = params.lam * float(params.time_scale(t1, t2))
    z = x * np.expm1(-np.asarray(u, dtype=np.float64))
    return wright(product_clock_spec(params), z, ctrl)


def _signed_count(
    operation: str,
    n: int,
    x: FloatArray,
    beta: float,
    orders: tuple[float, ...],
    ctrl: SeriesControl,
    *,
    derivative: bool = False,
) -> FloatArray:
    """(-1)^n / n! * Psi[(1, beta), (1, 1)...; (1 - n, beta), (1, alpha)... | -x]."""
    _check_alternating(operation, x)
    spec = WrightSpec(
        upper=((1.0, beta), *((1.0, 1.0) for _ in orders)),
        lower=((1.0 - n, beta), *((1.0, alpha) for alpha in orders)),
    )
    # leading terms vanish until beta k + 1 - n leaves the poles of Gamma
    min_terms = math.ceil((n + 1) / beta) + 1
    evaluate = wright_derivative if derivative else wright
    series = np.asarray(evaluate(spec, -x, ctrl, min_terms=min_terms))
    return (-1.0) ** n / math.factorial(n) * series


def sfprf_pmf(
    n: int,
    t1: npt.ArrayLike,
    t2: npt.ArrayLike,
    alpha: float,
    lam: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Pr{N(t1, t2) = n} of the space fractional field.

    sum_k (-1)^(n+k) (alpha k)_n y^k / (n! k!) with y = t1 t2 lambda^alpha and (a)_n falling.
    """
    _check_times("sfprf_pmf", t1, t2)
    y = np.asarray(t1, dtype=np.float64) * np.asarray(t2, dtype=np.float64) * lam**alpha
    return as_output(_signed_count("sfprf_pmf", n, y, alpha, (), ctrl))


def sfprf_pmf_dlambda(
    n: int,
    t1: npt.ArrayLike,
    t2: npt.ArrayLike,
    alpha: float,
    lam: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """d/dlambda of `sfprf_pmf`, term by term."""
    _check_times("sfprf_pmf_dlambda", t1, t2)
    y = np.asarray(t1, dtype=np.float64) * np.asarray(t2, dtype=np.float64) * lam**alpha
    value = _signed_count("sfprf_pmf_dlambda", n, y, alpha, (), ctrl, derivative=True)
    return as_output(value * (-alpha * y / lam))


def sfprf_pgf(u: npt.ArrayLike, t1: float, t2: float, alpha: float, lam: float) -> Real:
    """E u^N(t1, t2) = exp(-t1 t2 lambda^alpha (1 - u)^alpha) of the space fractional field."""
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any((u_arr < 0) | (u_arr > 1)):
        raise DomainError("sfprf_pgf", "u must lie in [0, 1]")
    return as_output(np.exp(-t1 * t2 * lam**alpha * (1.0 - u_arr) ** alpha))


def stfprf_pmf(
    n: int,
    t1: npt.ArrayLike,
    t2: npt.ArrayLike,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Pr{N(t1, t2) = n} of the space-time fractional field.

    (-1)^n / n! * 3Psi3[(1, beta), (1, 1), (1, 1); (1 - n, beta), (1, alpha1), (1, alpha2) | -x]
    with x = t1^alpha1 t2^alpha2 lambda^beta.
    """
    _check_times("stfprf_pmf", t1, t2)
    x = _time_scale(params, t1, t2) * params.lam**params.beta
    orders = (params.alpha1, params.alpha2)
    return as_output(_signed_count("stfprf_pmf", n, x, params.beta, orders, ctrl))


def stfprf_pmf_dlambda(
    n: int,
    t1: npt.ArrayLike,
    t2: npt.ArrayLike,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """d/dlambda of `stfprf_pmf`, from the derivative of the Wright function."""
    _check_times("stfprf_pmf_dlambda", t1, t2)
    x = _time_scale(params, t1, t2) * params.lam**params.beta
    orders = (params.alpha1, params.alpha2)
    value = _signed_count(
        "stfprf_pmf_dlambda", n, x, params.beta, orders, ctrl, derivative=True
    )
    return as_output(value * (-params.beta * x / params.lam))


def stfprf_pgf(
    u: npt.ArrayLike,
    t1: float,
    t2: float,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """E u^N(t1, t2) of the space-time fractional field."""
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any((u_arr < 0) | (u_arr > 1)):
        raise DomainError("stfprf_pgf", "u must lie in [0, 1]")
    x = float(params.time_scale(t1, t2)) * params.lam**params.beta
    return wright(product_clock_spec(params), -x * (1.0 - u_arr) ** params.beta, ctrl)


def stf_subordinator_laplace(
    u: npt.ArrayLike,
    t1: float,
    t2: float,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """E exp(-u H_beta(L_alpha1(t1), L_alpha2(t2))) for u >= 0."""
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(u_arr < 0):
        raise DomainError("stf_subordinator_laplace", "u must be nonnegative")
    x = float(params.time_scale(t1, t2))
    return wright(product_clock_spec(params), -(u_arr**params.beta) * x, ctrl)


def levy_subordinator_density(x: npt.ArrayLike, t1: float, t2: float) -> Real:
    """Density of the stable sheet H_1/2(t1, t2), a Levy law with scale (t1 t2)^2 / 2."""
    c = t1 * t2
    x_arr = np.asarray(x, dtype=np.float64)
    positive = x_arr > 0
    safe = np.where(positive, x_arr, 1.0)
    density = c / (2.0 * math.sqrt(math.pi)) * safe**-1.5 * np.exp(-(c**2) / (4.0 * safe))
    return as_output(np.where(positive, density, 0.0))


CountPmf = Callable[[int, npt.ArrayLike, npt.ArrayLike, FieldParams, SeriesControl], Real]


def _prf_family(
    n: int,
    t1: npt.ArrayLike,
    t2: npt.ArrayLike,
    params: FieldParams,
    ctrl: SeriesControl,  # noqa: ARG001
) -> Real:
    return prf_pmf(n, t1, t2, params.lam)


def _sfprf_family(
    n: int, t1: npt.ArrayLike, t2: npt.ArrayLike, params: FieldParams, ctrl: SeriesControl
) -> Real:
    return sfprf_pmf(n, t1, t2, params.beta, params.lam, ctrl)


COUNT_FAMILIES: dict[str, CountPmf] = {
    "prf": _prf_family,
    "fprf": fprf_pmf,
    "tfprf": fprf_pmf,
    "sfprf": _sfprf_family,
    "stfprf": stfprf_pmf,
}
"""Count pmf of every field family, as a function of (n, t1, t2, params, ctrl)."""


def count_pmf(
    family: str,
    n: int,
    t1: npt.ArrayLike,
    t2: npt.ArrayLike,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Pr{N(t1, t2) = n} of a named family."""
    try:
        pmf = COUNT_FAMILIES[family]
    except KeyError:
        raise DomainError("count_pmf", f"unknown family {family!r}") from None
    return pmf(n, t1, t2, params, ctrl)


def pmf_table(
    family: str,
    nmax: int,
    t1: float,
    t2: float,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> FloatArray:
    """Pr{N(t1, t2) = n} for n = 0..nmax."""
    return np.array([float(count_pmf(family, n, t1, t2, params, ctrl)) for n in range(nmax + 1)])


def count_weights(
    t1: float, t2: float, params: FieldParams, ctrl: SeriesControl = DEFAULT_CONTROL
) -> FloatArray:
    """Time fractional count pmf p(0), p(1), ... until the missing mass falls below ctrl.tol."""
    x = params.lam * float(params.time_scale(t1, t2))
    budget = term_budget(ctrl, x)
    weights: list[float] = []
    for n in range(budget):
        if params.alpha1 == params.alpha2 == 1.0:
            p = float(prf_pmf(n, t1, t2, params.lam))
        elif params.alpha1 == 1.0 or params.alpha2 == 1.0:
            # one ordinary axis: x^n E^{n+1}_{alpha, n alpha + 1}(-x)
            alpha = params.alpha2 if params.alpha1 == 1.0 else params.alpha1
            _check_alternating("count_weights", x)
            p = x**n * float(ml3(alpha, n * alpha + 1.0, n + 1.0, -x, ctrl))
        else:
            p = float(fprf_pmf(n, t1, t2, params, ctrl))
        weights.append(p)
        if 1.0 - math.fsum(weights) < ctrl.tol or (n > x and abs(p) < ctrl.tol):
            return np.array(weights)
    raise SeriesDivergenceError("count_weights", budget, "count pmf tail does not decay")


####################################################################################################
# Exponential compounding
####################################################################################################


@dataclass(frozen=True)
class AtomicDistribution:
    """Law with an atom at 0 and an absolutely continuous part."""

    atom: float
    density: Callable[[npt.ArrayLike], Real]

    def cdf(self: Self, y: float, operation: str = "cdf") -> float:
        """Pr{Y <= y}."""
        if y < 0:
            return 0.0
        if y == 0:
            return self.atom
        mass, _ = integrate_checked(operation, self.density, 0.0, y, epsabs=1e-11, epsrel=1e-10)
        return self.atom + mass


def _mixture_density(
    y: npt.ArrayLike, weights: FloatArray, component: Callable[[FloatArray, int], FloatArray]
) -> Real:
    """sum_{n >= 1} weights[n] * component(y, n), 0 for y < 0."""
    y_arr = np.asarray(y, dtype=np.float64)
    total = np.zeros(y_arr.shape)
    for n in range(1, weights.shape[0]):
        total += weights[n] * component(y_arr, n)
    return as_output(np.where(y_arr < 0, 0.0, total))


def _erlang_mixture(y: npt.ArrayLike, weights: FloatArray, sigma: float) -> Real:
    def erlang(values: FloatArray, n: int) -> FloatArray:
        return stats.gamma.pdf(values, a=n, scale=1.0 / sigma)

    return _mixture_density(y, weights, erlang)


def cprf_exp_density(
    y: npt.ArrayLike,
    t1: float,
    t2: float,
    params: FieldParams,
    sigma: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Density of the time fractional compound field with Exp(sigma) marks on y > 0.

    The law also has the atom Pr{no points} at 0, see `cprf_exp_distribution`.
    """
    _check_times("cprf_exp_density", t1, t2)
    x = params.lam * float(params.time_scale(t1, t2))
    y_arr = np.asarray(y, dtype=np.float64)
    if x == 0:
        return as_output(np.zeros(y_arr.shape))
    if params.alpha1 == params.alpha2 == 1.0:
        positive = y_arr > 0
        safe = np.where(positive, y_arr, 1.0)
        z = 2.0 * np.sqrt(x * sigma * safe)
        density = np.exp(-sigma * safe - x + z) * np.sqrt(x * sigma / safe) * special.ive(1, z)
        density = np.where(positive, density, 0.0)
        return as_output(np.where(y_arr == 0, x * sigma * math.exp(-x), density))

    return _erlang_mixture(y_arr, count_weights(t1, t2, params, ctrl), sigma)


def cprf_exp_distribution(
    t1: float,
    t2: float,
    params: FieldParams,
    sigma: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> AtomicDistribution:
    """(atom at 0, density) of the time fractional compound field with Exp(sigma) marks."""
    atom = float(fprf_pmf(0, t1, t2, params, ctrl))
    if params.alpha1 == params.alpha2 == 1.0 or params.lam * float(params.time_scale(t1, t2)) == 0:

        def density(y: npt.ArrayLike) -> Real:
            return cprf_exp_density(y, t1, t2, params, sigma, ctrl)

        return AtomicDistribution(atom=atom, density=density)

    weights = count_weights(t1, t2, params, ctrl)
    return AtomicDistribution(
        atom=atom, density=functools.partial(_erlang_mixture, weights=weights, sigma=sigma)
    )


def cprf_exp_cdf(
    y: npt.ArrayLike,
    t1: float,
    t2: float,
    params: FieldParams,
    sigma: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Distribution function: atom at 0 plus the integrated density."""
    law = cprf_exp_distribution(t1, t2, params, sigma, ctrl)
    y_arr = np.asarray(y, dtype=np.float64)
    values = np.array([law.cdf(float(v), "cprf_exp_cdf") for v in y_arr.reshape(-1)])
    return as_output(values.reshape(y_arr.shape))


####################################################################################################
# Mittag-Leffler compounding
####################################################################################################


def ml_nfold_density(
    y: npt.ArrayLike,
    n: int,
    sigma: float,
    beta_c: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Density of the sum of n Mittag-Leffler(beta_c, sigma) marks.

    sigma^n y^(beta n - 1) E^n_{beta, beta n}(-sigma y^beta) on y > 0.
    """
    if n < 1:
        raise DomainError("ml_nfold_density", f"n must be positive, got {n}")
    y_arr = np.asarray(y, dtype=np.float64)
    positive = y_arr > 0
    safe = np.where(positive, y_arr, 1.0)
    if beta_c == 1.0:
        density = stats.gamma.pdf(safe, a=n, scale=1.0 / sigma)
    else:
        series = np.asarray(ml3(beta_c, beta_c * n, float(n), -sigma * safe**beta_c, ctrl))
        density = sigma**n * safe ** (beta_c * n - 1.0) * series
    return as_output(np.where(positive, density, 0.0))


def ml_nfold_laplace(u: npt.ArrayLike, n: int, sigma: float, beta_c: float) -> Real:
    """Laplace transform sigma^n / (u^beta + sigma)^n of `ml_nfold_density`."""
    u_arr = np.asarray(u, dtype=np.float64)
    return as_output((sigma / (u_arr**beta_c + sigma)) ** n)


def cprf_ml_density(
    y: npt.ArrayLike,
    t1: float,
    t2: float,
    lam: float,
    sigma: float,
    beta_c: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    *,
    alpha1: float = 1.0,
) -> Real:
    """Density on y > 0 of the compound field with Mittag-Leffler marks.

    The counts are Poisson, or time fractional along the first axis when alpha1 < 1.
    """
    _check_times("cprf_ml_density", t1, t2)
    params = FieldParams(lam=lam, alpha1=alpha1, alpha2=1.0)
    y_arr = np.asarray(y, dtype=np.float64)
    if lam * t1**alpha1 * t2 == 0:
        return as_output(np.zeros(y_arr.shape))
    weights = count_weights(t1, t2, params, ctrl)

    def nfold(values: FloatArray, n: int) -> FloatArray:
        return np.asarray(ml_nfold_density(values, n, sigma, beta_c, ctrl), dtype=np.float64)

    return _mixture_density(y_arr, weights, nfold)


def cprf_ml_defect(t1: float, t2: float, lam: float, *, alpha1: float = 1.0) -> float:
    """Mass of the density part, 1 - E_alpha1(-lambda t1^alpha1 t2)."""
    return 1.0 - float(ml1(alpha1, -lam * t1**alpha1 * t2))


####################################################################################################
# Normal compounding
####################################################################################################


def cprf_normal_cdf(
    y: npt.ArrayLike,
    t1: float,
    t2: float,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Distribution function of the time fractional compound field with N(0, 1) marks."""
    weights = count_weights(t1, t2, params, ctrl)
    y_arr = np.asarray(y, dtype=np.float64)
    total = weights[0] * (y_arr >= 0)
    for n in range(1, weights.shape[0]):
        total = total + weights[n] * special.ndtr(y_arr / math.sqrt(n))
    return as_output(np.asarray(total, dtype=np.float64))


def normal_cprf_cf(u: npt.ArrayLike, rect: Rect) -> complex | npt.NDArray[np.complex128]:
    """Characteristic function of a rectangular increment of the unit rate normal compound field."""
    u_arr = np.asarray(u, dtype=np.float64)
    value = np.exp(rect.area * (np.exp(-(u_arr**2) / 2.0) - 1.0)).astype(np.complex128)
    if value.ndim == 0:
        return complex(value)
    return value


def normal_cprf_joint_cf(u: float, v: float, p1: Point, p2: Point) -> complex:
    """E exp(i (u X(p1) + v X(p2))) of the unit rate normal compound field.

    The two generating rectangles split into their overlap, where the marks count with u + v,
    and two remainders; every ordering of the points is covered.
    """
    (s1, t1), (s2, t2) = p1, p2
    _check_times("normal_cprf_joint_cf", s1, t1, s2, t2)
    overlap = min(s1, s2) * min(t1, t2)
    exponent = (
        overlap * (math.exp(-((u + v) ** 2) / 2.0) - 1.0)
        + (s1 * t1 - overlap) * (math.exp(-(u**2) / 2.0) - 1.0)
        + (s2 * t2 - overlap) * (math.exp(-(v**2) / 2.0) - 1.0)
    )
    return complex(math.exp(exponent))


def sfcprf_cf(u: npt.ArrayLike, t1: float, t2: float, beta: float, lam: float) -> Real:
    """Characteristic function of the space fractional compound field with N(0, 1) marks."""
    u_arr = np.asarray(u, dtype=np.float64)
    return as_output(np.exp(-t1 * t2 * lam**beta * (1.0 - np.exp(-(u_arr**2) / 2.0)) ** beta))


####################################################################################################
# Scaled compound fields
####################################################################################################


def check_scaled_variant(operation: str, variant: str) -> None:
    """Fail on a name outside `SCALED_VARIANTS`."""
    if variant not in SCALED_VARIANTS:
        raise DomainError(operation, f"unknown variant {variant!r}")


def scaled_cf(
    variant: str,
    u: npt.ArrayLike,
    scale: int,
    t1: float,
    t2: float,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Exact characteristic function at (t1, t2) of a unit rate scaled compound field.

    Variants:
        gaussian_sheet: rate n^2 Poisson field, marks N(0, 1) / n.
        tc_one_axis: first axis run on L_alpha1, rate n, marks N(0, 1) / sqrt(n).
        tc_two_axis, product_tc: both axes run on inverse stable clocks, rate n^2, marks / n.
        stf_compound: counts driven by H_beta(L_alpha1, L_alpha2), rate n^2, marks / n.
    """
    check_scaled_variant("scaled_cf", variant)
    u_arr = np.asarray(u, dtype=np.float64)
    n = float(scale)
    if variant == "gaussian_sheet":
        return as_output(np.exp(n**2 * t1 * t2 * np.expm1(-(u_arr**2) / (2.0 * n**2))))
    if variant == "tc_one_axis":
        argument = n * t1**params.alpha1 * t2 * np.expm1(-(u_arr**2) / (2.0 * n))
        return ml1(params.alpha1, argument, ctrl)
    x = float(params.time_scale(t1, t2))
    if variant in {"tc_two_axis", "product_tc"}:
        argument = n**2 * x * np.expm1(-(u_arr**2) / (2.0 * n**2))
    else:
        thinned = -np.expm1(-(u_arr**2) / (2.0 * n**2))
        argument = -(n ** (2.0 * params.beta)) * thinned**params.beta * x
    return wright(product_clock_spec(params), argument, ctrl)


def limit_cf(
    variant: str,
    u: npt.ArrayLike,
    t1: float,
    t2: float,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Characteristic function at (t1, t2) of the limit of `scaled_cf` as the scale grows.

    W(t1, t2), W(L(t1), t2), W(L1, L2) = B(L1 L2) in law, and B(H_beta(L1, L2)).
    """
    check_scaled_variant("limit_cf", variant)
    half_square = np.asarray(u, dtype=np.float64) ** 2 / 2.0
    if variant == "gaussian_sheet":
        return as_output(np.exp(-half_square * t1 * t2))
    if variant == "tc_one_axis":
        return ml1(params.alpha1, -(t1**params.alpha1) * t2 * half_square, ctrl)
    x = float(params.time_scale(t1, t2))
    if variant in {"tc_two_axis", "product_tc"}:
        return wright(product_clock_spec(params), -x * half_square, ctrl)
    return wright(product_clock_spec(params), -x * half_square**params.beta, ctrl)
