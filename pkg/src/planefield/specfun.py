"""Special functions and fractional calculus primitives.

Every series here is a power series sum_k c_k x^k whose coefficients are built in log
magnitude / sign form (log-Gamma based, no overflow), then summed in blocks of terms:

- terms are summed in extended precision (`numpy.longdouble`) with a compensated running
  total when `SeriesControl.alternating_guard` is on,
- a series stops once |term| < tol and the terms have not increased for 3 consecutive
  indices, and fails loudly when the term budget runs out,
- with the guard on, the rounding error of the double precision sum is bounded per point
  from the size of every term and of its log-Gamma exponent. Points whose bound exceeds
  max(tol, `RELATIVE_TARGET` |sum|) are summed again with an `mpmath` context sized from that
  bound, and `CancellationError` is raised only when `EXTENDED_DIGITS_CAP` digits do not do.
"""

import logging
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Self

import numpy as np
import numpy.typing as npt
from mpmath.ctx_mp import MPContext
from scipy import integrate, special

from planefield.errors import (
    CancellationError,
    DomainError,
    GammaPoleError,
    QuadratureError,
    SeriesDivergenceError,
)
from planefield.schemas import ComparisonReport, FloatArray, SeriesControl, WrightSpec

LOGGER = logging.getLogger("planefield.specfun")

Real = float | FloatArray
CoefficientMP = Callable[[Any, int], Any]
CoefficientCache = dict[int, tuple[MPContext, list[Any]]]

RELATIVE_TARGET = 1e-12
"""Rounding error accepted relative to the value of a series, next to the absolute tol."""
EXTENDED_DIGITS_CAP = 400
"""Most decimal digits an extended precision sum may use."""
DEFAULT_CONTROL = SeriesControl()

_EPS = float(np.finfo(np.float64).eps)
_GUARD_DIGITS = 10
_ROUNDING_SLACK = 4.0
_DECREASING_RUN = 3
_BLOCK = 32
_POLE_ATOL = 1e-12
_DELTA_ATOL = 1e-12


def as_output(value: FloatArray) -> Real:
    """Plain float for 0-d results, the array otherwise."""
    if value.ndim == 0:
        return float(value)
    return value


def is_gamma_pole(z: float) -> bool:
    """Gamma has a pole at z (non-positive integer)."""
    return z <= 0 and abs(z - round(z)) < _POLE_ATOL


def term_budget(ctrl: SeriesControl, x: npt.ArrayLike) -> int:
    """Number of terms a series may use: at least 50 and 10 per unit of |x|."""
    size = float(np.max(np.abs(x))) if np.size(x) else 0.0
    return max(ctrl.max_terms, 50, 10 * math.ceil(size))


def _digits_for(ratio: float) -> int:
    """Decimal digits that bring a sum of size `ratio * target` to within target."""
    if not math.isfinite(ratio):
        return EXTENDED_DIGITS_CAP + 1
    return _GUARD_DIGITS + max(math.ceil(math.log10(max(ratio, 1.0))), 10)


####################################################################################################
# Power series engine
####################################################################################################


@dataclass(frozen=True)
class PowerSeries:
    """sum_k c_k x^k with c_k = sign[k] * exp(log_abs[k]), k < len(log_abs).

    Zero coefficients have sign 0. `log_error[k]` bounds the absolute error of `log_abs[k]` in
    units of the double precision epsilon. `pole` is the first index whose coefficient has a
    numerator Gamma pole; reaching it is an error.
    """

    operation: str
    log_abs: FloatArray
    sign: FloatArray
    log_error: FloatArray
    coefficient_mp: CoefficientMP
    min_terms: int = 0
    pole: int | None = None

    @property
    def budget(self: Self) -> int:
        """Term budget."""
        return int(self.log_abs.shape[0])

    def __call__(self: Self, x: npt.ArrayLike, ctrl: SeriesControl) -> FloatArray:
        """Evaluate elementwise."""
        x_arr = np.asarray(x, dtype=np.float64)
        if x_arr.size == 0:
            return np.zeros(x_arr.shape)
        total, magnitude, error = self._sum_double(x_arr, ctrl)
        if not ctrl.alternating_guard:
            return total
        return self._guard(x_arr, total, magnitude, error, ctrl)

    def _check_pole(self: Self, end: int) -> None:
        if self.pole is not None and end > self.pole:
            raise GammaPoleError(self.operation, float(self.pole))

    def _sum_double(
        self: Self, x: FloatArray, ctrl: SeriesControl
    ) -> tuple[FloatArray, FloatArray, FloatArray]:
        """Sum, sum of |term| and a bound of the rounding error, per point."""
        acc_dtype = np.longdouble if ctrl.alternating_guard else np.float64
        sign_x = np.sign(x)
        with np.errstate(divide="ignore"):
            log_abs_x = np.log(np.abs(x))
        total = np.zeros(x.shape, dtype=acc_dtype)
        compensation = np.zeros(x.shape, dtype=acc_dtype)
        magnitude = np.zeros(x.shape)
        error = np.zeros(x.shape)
        previous, run = math.inf, 0
        expand = (-1,) + (1,) * x.ndim

        for start in range(0, self.budget, _BLOCK):
            k = np.arange(start, min(start + _BLOCK, self.budget))
            kk = k.reshape(expand)
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                power = np.where(kk == 0, 0.0, kk * log_abs_x)
                terms = (
                    self.sign[k].reshape(expand)
                    * np.power(sign_x, kk)
                    * np.exp(self.log_abs[k].reshape(expand) + power)
                )
            # zero coefficients carry log_abs = -inf and sign 0
            terms = np.where(self.sign[k].reshape(expand) == 0.0, 0.0, terms)

            sizes = np.max(np.abs(terms).reshape(k.shape[0], -1), axis=1)
            stop: int | None = None
            for row, size in enumerate(sizes):
                if not math.isfinite(size):
                    self._check_pole(start + row + 1)
                    raise SeriesDivergenceError(self.operation, start + row, "term overflow")
                run = run + 1 if size <= previous else 0
                previous = float(size)
                index = start + row
                if index + 1 >= self.min_terms and size < ctrl.tol and run >= _DECREASING_RUN:
                    stop = row
                    break
            count = k.shape[0] if stop is None else stop + 1
            used = terms[:count]
            self._check_pole(start + count)

            # exp(a) carries the absolute error of a as a relative error
            with np.errstate(invalid="ignore"):
                exponent_error = self.log_error[k[:count]].reshape(expand) + np.abs(power[:count])
                rounding = np.abs(used) * (_ROUNDING_SLACK + exponent_error)
            error += _EPS * np.sum(np.where(used == 0.0, 0.0, rounding), axis=0)

            block_sum = np.sum(used.astype(acc_dtype), axis=0)
            corrected = block_sum - compensation
            running = total + corrected
            compensation = (running - total) - corrected
            total = running
            magnitude += np.sum(np.abs(used), axis=0)
            if stop is not None:
                error += float(np.finfo(acc_dtype).eps) * magnitude
                return total.astype(np.float64), magnitude, error

        raise SeriesDivergenceError(self.operation, self.budget, "term budget exhausted")

    def _guard(
        self: Self,
        x: FloatArray,
        total: FloatArray,
        magnitude: FloatArray,
        error: FloatArray,
        ctrl: SeriesControl,
    ) -> FloatArray:
        target = np.maximum(ctrl.tol, RELATIVE_TARGET * np.abs(total))
        bad = ~(error <= target)
        if not np.any(bad):
            return total
        flat_x, flat_magnitude = x.reshape(-1), magnitude.reshape(-1)
        flat_target = target.reshape(-1)
        flat_total = total.reshape(-1).copy()
        cache: CoefficientCache = {}
        for index in np.flatnonzero(bad):
            digits = _digits_for(float(flat_magnitude[index] / flat_target[index]))
            flat_total[index] = self.extended(float(flat_x[index]), ctrl, digits, cache=cache)
        return flat_total.reshape(total.shape)

    def _sum_mp(
        self: Self, x: float, ctrl: SeriesControl, digits: int, cache: CoefficientCache
    ) -> tuple[Any, Any]:
        if digits not in cache:
            ctx = MPContext()
            ctx.dps = digits
            cache[digits] = (ctx, [])
        ctx, coefficients = cache[digits]
        x_mp = ctx.mpf(x)
        total, magnitude, power = ctx.mpf(0), ctx.mpf(0), ctx.mpf(1)
        previous, run = math.inf, 0
        for k in range(self.budget):
            self._check_pole(k + 1)
            if k == len(coefficients):
                coefficients.append(self.coefficient_mp(ctx, k))
            term = coefficients[k] * power
            power *= x_mp
            total += term
            magnitude += abs(term)
            size = float(abs(term))
            run = run + 1 if size <= previous else 0
            previous = size
            if k + 1 >= self.min_terms and size < ctrl.tol and run >= _DECREASING_RUN:
                return total, magnitude
        raise SeriesDivergenceError(self.operation, self.budget, "term budget exhausted")

    def extended(
        self: Self,
        x: float,
        ctrl: SeriesControl,
        digits: int,
        *,
        cache: CoefficientCache | None = None,
    ) -> float:
        """Sum at one point in an `mpmath` context, adding digits until the rounding is in target.

        The coefficients computed at a precision are kept in `cache` and reused for later points.

        Raises:
            CancellationError: more than `EXTENDED_DIGITS_CAP` digits would be needed.
        """
        cache = {} if cache is None else cache
        estimate = math.inf
        while digits <= EXTENDED_DIGITS_CAP:
            total, magnitude = self._sum_mp(x, ctrl, digits, cache)
            value = float(total)
            target = max(ctrl.tol, RELATIVE_TARGET * abs(value))
            rounding = float(magnitude) * 10.0**-digits
            estimate = rounding / abs(value) if value else math.inf
            if rounding <= target:
                LOGGER.debug(
                    "Extended precision summation",
                    extra={"operation": self.operation, "x": x, "digits": digits},
                )
                return value
            digits = max(digits + _GUARD_DIGITS, _digits_for(float(magnitude) / target))
        raise CancellationError(self.operation, estimate)


def power_series(
    operation: str,
    log_abs: npt.ArrayLike,
    sign: npt.ArrayLike,
    coefficient_mp: CoefficientMP,
    *,
    log_error: npt.ArrayLike | None = None,
    min_terms: int = 0,
    pole: int | None = None,
) -> PowerSeries:
    """Build a `PowerSeries` from coefficient arrays.

    `log_error` defaults to |log_abs|, the error of a single log-Gamma evaluation.
    """
    log_abs_arr = np.asarray(log_abs, dtype=np.float64)
    if log_error is None:
        log_error = np.where(np.isfinite(log_abs_arr), np.abs(log_abs_arr), 0.0)
    return PowerSeries(
        operation=operation,
        log_abs=log_abs_arr,
        sign=np.asarray(sign, dtype=np.float64),
        log_error=np.asarray(log_error, dtype=np.float64),
        coefficient_mp=coefficient_mp,
        min_terms=min_terms,
        pole=pole,
    )


####################################################################################################
# Generalized Wright function
####################################################################################################


def fox_wright_convergence(spec: WrightSpec) -> tuple[float, float]:
    """Return (delta, rho) with delta = 1 + sum(beta_j) - sum(alpha_i).

    The series is entire for delta > 0, converges for |x| < rho when delta == 0 and diverges
    for delta < 0.
    """
    delta = 1.0 + sum(beta for _, beta in spec.lower) - sum(alpha for _, alpha in spec.upper)
    log_rho = -sum(alpha * math.log(abs(alpha)) for _, alpha in spec.upper) + sum(
        beta * math.log(abs(beta)) for _, beta in spec.lower
    )
    return delta, math.exp(log_rho)


def wright_series(spec: WrightSpec, budget: int, *, min_terms: int = 0) -> PowerSeries:
    """Coefficients prod Gamma(a_i + k alpha_i) / (prod Gamma(b_j + k beta_j) k!)."""
    k = np.arange(budget, dtype=np.float64)
    log_abs = -special.gammaln(k + 1)
    log_error = special.gammaln(k + 1)
    sign = np.ones(budget)
    pole: int | None = None
    for a, alpha in spec.upper:
        z = a + k * alpha
        poles = (z <= 0) & (np.abs(z - np.round(z)) < _POLE_ATOL)
        if np.any(poles):
            first = int(np.argmax(poles))
            pole = first if pole is None else min(pole, first)
        log_abs += np.where(poles, 0.0, special.gammaln(z))
        log_error += np.where(poles, 0.0, np.abs(special.gammaln(z)))
        sign *= np.where(poles, 1.0, special.gammasgn(z))
    for b, beta in spec.lower:
        z = b + k * beta
        poles = (z <= 0) & (np.abs(z - np.round(z)) < _POLE_ATOL)
        # 1/Gamma vanishes at its poles
        log_abs -= np.where(poles, 0.0, special.gammaln(z))
        log_error += np.where(poles, 0.0, np.abs(special.gammaln(z)))
        sign *= np.where(poles, 0.0, special.gammasgn(z))
    log_abs = np.where(sign == 0.0, -np.inf, log_abs)

    def coefficient_mp(ctx: Any, k: int) -> Any:  # noqa: ANN401
        value = ctx.rgamma(k + 1)
        for a, alpha in spec.upper:
            value *= ctx.gamma(ctx.mpf(a) + k * ctx.mpf(alpha))
        for b, beta in spec.lower:
            value *= ctx.rgamma(ctx.mpf(b) + k * ctx.mpf(beta))
        return value

    return power_series(
        "wright",
        log_abs,
        sign,
        coefficient_mp,
        log_error=log_error,
        min_terms=min_terms,
        pole=pole,
    )


def check_wright_domain(spec: WrightSpec, x: npt.ArrayLike, operation: str = "wright") -> None:
    """Fail up front when the series cannot converge at x."""
    size = float(np.max(np.abs(x))) if np.size(x) else 0.0
    if size == 0.0:
        return
    delta, rho = fox_wright_convergence(spec)
    if delta < -_DELTA_ATOL:
        raise SeriesDivergenceError(
            operation, 0, f"1 + sum(beta) - sum(alpha) = {delta:.3g} < 0, divergent for x != 0"
        )
    if abs(delta) <= _DELTA_ATOL and size >= rho:
        raise SeriesDivergenceError(
            operation, 0, f"|x| = {size:.6g} outside the radius of convergence {rho:.6g}"
        )


def wright(
    spec: WrightSpec,
    x: npt.ArrayLike,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    *,
    min_terms: int = 0,
) -> Real:
    """Generalized Wright function.

    Args:
        spec: Gamma parameters.
        x: Argument(s).
        ctrl: Truncation policy.
        min_terms: Do not stop before this many terms (series with leading zero terms).

    Raises:
        SeriesDivergenceError: divergent parameters, x outside the radius of convergence, or
            the term budget is exhausted.
        GammaPoleError: a numerator Gamma pole is reached.
        CancellationError: the alternating sum cannot be trusted even in extended precision.
    """
    check_wright_domain(spec, x)
    series = wright_series(spec, term_budget(ctrl, x), min_terms=min_terms)
    return as_output(series(x, ctrl))


def wright_derivative(
    spec: WrightSpec,
    x: npt.ArrayLike,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    *,
    min_terms: int = 0,
) -> Real:
    """d/dx of the generalized Wright function (parameters shifted by their scales)."""
    return wright(spec.shifted(), x, ctrl, min_terms=min_terms)


####################################################################################################
# Mittag-Leffler functions
####################################################################################################


def _ml3_polynomial(alpha: float, beta: float, gamma: float, x: npt.ArrayLike) -> FloatArray:
    degree = -round(gamma)
    x_arr = np.asarray(x, dtype=np.float64)
    total = np.zeros(x_arr.shape)
    for k in range(degree + 1):
        total += special.poch(gamma, k) * special.rgamma(alpha * k + beta) / math.factorial(k) * (
            x_arr**k
        )
    return total


def ml3(
    alpha: float,
    beta: float,
    gamma: float,
    x: npt.ArrayLike,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> Real:
    """Three parameter Mittag-Leffler function E^gamma_{alpha,beta}(x).

    sum_k gamma^(k) x^k / (Gamma(alpha k + beta) k!), gamma^(k) the rising factorial.
    """
    if alpha <= 0:
        raise DomainError("ml3", f"alpha must be positive, got {alpha}")
    if is_gamma_pole(gamma):
        return as_output(_ml3_polynomial(alpha, beta, gamma, x))
    spec = WrightSpec(upper=((gamma, 1.0),), lower=((beta, alpha),))
    series = wright_series(spec, term_budget(ctrl, x))
    return as_output(series(x, ctrl) * special.rgamma(gamma))


def ml1(alpha: float, x: npt.ArrayLike, ctrl: SeriesControl = DEFAULT_CONTROL) -> Real:
    """One parameter Mittag-Leffler function E_alpha(x)."""
    return ml3(alpha, 1.0, 1.0, x, ctrl)


####################################################################################################
# Fractional calculus
####################################################################################################


def frac_binom_coeffs(alpha: float, K: int) -> FloatArray:
    """Coefficients c_0..c_K of (1 - z)^alpha = sum_k c_k z^k."""
    if not 0 < alpha <= 1:
        raise DomainError("frac_binom_coeffs", f"alpha must be in (0, 1], got {alpha}")
    k = np.arange(1, K + 1, dtype=np.float64)
    return np.concatenate(([1.0], np.cumprod((k - 1.0 - alpha) / k)))


def l1_weights(alpha: float, n: int) -> FloatArray:
    """L1 weights b_j = (j+1)^(1-alpha) - j^(1-alpha), j < n."""
    j = np.arange(n, dtype=np.float64)
    return (j + 1.0) ** (1.0 - alpha) - j ** (1.0 - alpha)


def caputo_l1(samples: npt.ArrayLike, alpha: float, dt: float, axis: int = -1) -> FloatArray:
    """Caputo derivative of uniformly sampled values, lower terminal at the first sample.

    L1 scheme for alpha < 1 (node 0 carries 0), second order finite differences for alpha = 1.
    The derivative is taken along `axis`, the output has the shape of `samples`.
    """
    if not 0 < alpha <= 1:
        raise DomainError("caputo_l1", f"alpha must be in (0, 1], got {alpha}")
    values = np.moveaxis(np.asarray(samples, dtype=np.float64), axis, -1)
    n = values.shape[-1] - 1
    if n < 1:
        raise DomainError("caputo_l1", "at least 2 samples are required")
    if alpha == 1.0:
        result = np.gradient(values, dt, axis=-1, edge_order=2 if n >= 2 else 1)
    else:
        weights = l1_weights(alpha, n)
        increments = np.diff(values, axis=-1)
        history = np.apply_along_axis(lambda row: np.convolve(weights, row)[:n], -1, increments)
        scale = dt**-alpha * special.rgamma(2.0 - alpha)
        result = np.concatenate((np.zeros((*values.shape[:-1], 1)), scale * history), axis=-1)
    return np.moveaxis(result, -1, axis)


####################################################################################################
# Self test
####################################################################################################


def integrate_checked(
    operation: str,
    func: Callable[..., float],
    a: float,
    b: float,
    **kwargs: Any,  # noqa: ANN401
) -> tuple[float, float]:
    """`scipy.integrate.quad` with its warnings raised as `QuadratureError`.

    Returns:
        Integral value and absolute error estimate.
    """
    kwargs.setdefault("limit", 200)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(func, a, b, **kwargs)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(operation, str(exc)) from exc
    if not math.isfinite(value):
        raise QuadratureError(operation, f"non-finite integral {value}")
    return float(value), float(abserr)


def ml_laplace_selftest(
    alpha: float,
    beta: float,
    gamma: float,
    c: float,
    z: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> ComparisonReport:
    """Laplace transform of t^(beta-1) E^gamma_{alpha,beta}(c t^alpha) by quadrature vs closed form.

    The closed form is z^(alpha gamma - beta) / (z^alpha - c)^gamma. Negative c is accepted for
    every z > 0.
    """
    if z <= 0 or (c > 0 and c * z**-alpha >= 1):
        raise DomainError("ml_laplace_selftest", f"need |c z^-alpha| < 1, got c={c}, z={z}")
    expected = z ** (alpha * gamma - beta) / (z**alpha - c) ** gamma

    # integrand below e^-36 of its scale past t_max
    rate = z - (max(c, 0.0) ** (1.0 / alpha))
    t_max = 36.0 / rate
    plain = ctrl.model_copy(update={"alternating_guard": False})
    series = wright_series(
        WrightSpec(upper=((gamma, 1.0),), lower=((beta, alpha),)),
        term_budget(ctrl, abs(c) * t_max**alpha),
    )
    scale = float(special.rgamma(gamma))

    # in s = t^alpha the series argument is linear and the weight is s^(beta / alpha - 1)
    def integrand(s: float) -> float:
        return math.exp(-z * s ** (1.0 / alpha)) * scale * float(series(c * s, plain)) / alpha

    value, abserr = integrate_checked(
        "ml_laplace_selftest",
        integrand,
        0.0,
        t_max**alpha,
        weight="alg",
        wvar=(beta / alpha - 1.0, 0.0),
        epsabs=1e-12,
        epsrel=1e-10,
    )

    return ComparisonReport(
        statistic_name="gap",
        value=abs(value - expected),
        threshold=1e-6,
        n_samples=0,
        details={
            "check": "ml_laplace",
            "alpha": alpha,
            "beta": beta,
            "gamma": gamma,
            "c": c,
            "z": z,
            "quadrature": value,
            "closed_form": expected,
            "quadrature_error": abserr,
        },
    )
