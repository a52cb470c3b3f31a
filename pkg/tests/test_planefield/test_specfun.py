import math

import numpy as np
import pytest
from scipy import special

from planefield import specfun
from planefield.errors import (
    CancellationError,
    DomainError,
    GammaPoleError,
    QuadratureError,
    SeriesDivergenceError,
)
from planefield.schemas import SeriesControl, WrightSpec

from .common import ml3_oracle, wright_oracle

EXP_SPEC = WrightSpec(upper=(), lower=())
GEOMETRIC_SPEC = WrightSpec(upper=((1.0, 1.0),), lower=())


def test_is_gamma_pole():
    assert specfun.is_gamma_pole(0.0)
    assert specfun.is_gamma_pole(-2.0)
    assert not specfun.is_gamma_pole(-0.5)
    assert not specfun.is_gamma_pole(1.0)


def test_term_budget():
    ctrl = SeriesControl(max_terms=60)
    assert specfun.term_budget(ctrl, 0.5) == 60
    assert specfun.term_budget(ctrl, [1.0, -30.0]) == 300


def test_fox_wright_convergence():
    assert specfun.fox_wright_convergence(EXP_SPEC) == (1.0, 1.0)
    delta, rho = specfun.fox_wright_convergence(GEOMETRIC_SPEC)
    assert delta == 0.0
    assert rho == pytest.approx(1.0)


@pytest.mark.parametrize("x", [-3.0, -0.5, 0.0, 0.5, 2.0])
def test_wright_exponential(x: float):
    assert specfun.wright(EXP_SPEC, x) == pytest.approx(math.exp(x), abs=1e-10, rel=1e-10)


def test_wright_array_shape():
    x = np.linspace(-1.0, 1.0, 6).reshape(2, 3)
    values = specfun.wright(EXP_SPEC, x)
    assert isinstance(values, np.ndarray)
    assert values.shape == (2, 3)
    assert np.allclose(values, np.exp(x), rtol=1e-12)


def test_wright_extended_precision():
    # cancellation in double precision switches the sum to extended precision
    assert abs(float(specfun.wright(EXP_SPEC, -20.0)) - math.exp(-20.0)) < 1e-12


def test_wright_geometric_inside_radius():
    assert specfun.wright(GEOMETRIC_SPEC, 0.5) == pytest.approx(2.0, rel=1e-11)
    assert specfun.wright(GEOMETRIC_SPEC, -0.5) == pytest.approx(2.0 / 3.0, rel=1e-11)


def test_wright_outside_radius():
    with pytest.raises(SeriesDivergenceError):
        specfun.wright(GEOMETRIC_SPEC, 1.5)


def test_wright_divergent_parameters():
    spec = WrightSpec(upper=((1.0, 2.0),), lower=((1.0, 0.5),))
    with pytest.raises(SeriesDivergenceError):
        specfun.wright(spec, 0.1)
    assert specfun.wright(spec, 0.0) == pytest.approx(1.0)


def test_wright_gamma_pole():
    spec = WrightSpec(upper=((-2.0, 1.0),), lower=())
    with pytest.raises(GammaPoleError):
        specfun.wright(spec, 0.5)


def test_wright_budget_exhausted():
    with pytest.raises(SeriesDivergenceError):
        specfun.wright(GEOMETRIC_SPEC, 0.99, SeriesControl(max_terms=50))


@pytest.mark.parametrize(
    ("upper", "lower", "x"),
    [
        (((1.0, 1.0), (1.0, 1.0)), ((1.0, 0.8), (1.0, 0.9)), -1.5),
        (((2.0, 1.0), (2.0, 1.0)), ((1.6, 0.6), (1.8, 0.8)), -0.8),
        (((1.0, 0.5),), ((0.5, 0.5),), 1.2),
    ],
)
def test_wright_against_oracle(
    upper: tuple[tuple[float, float], ...], lower: tuple[tuple[float, float], ...], x: float
):
    value = specfun.wright(WrightSpec(upper=upper, lower=lower), x)
    assert value == pytest.approx(wright_oracle(upper, lower, x), abs=1e-11, rel=1e-10)


def test_wright_derivative():
    spec = WrightSpec(upper=((1.0, 1.0), (1.0, 1.0)), lower=((1.0, 0.8), (1.0, 0.9)))
    step = 1e-5
    difference = (
        float(specfun.wright(spec, -1.0 + step)) - float(specfun.wright(spec, -1.0 - step))
    ) / (2.0 * step)
    assert specfun.wright_derivative(spec, -1.0) == pytest.approx(difference, rel=1e-6)


def test_ml1_half_order():
    # E_1/2(-1) = e erfc(1)
    assert specfun.ml1(0.5, -1.0) == pytest.approx(0.4275836, abs=1e-7)
    assert specfun.ml1(0.5, -1.0) == pytest.approx(special.erfcx(1.0), rel=1e-12)


@pytest.mark.parametrize("x", [-2.0, 0.0, 1.0, 3.0])
def test_ml1_order_one(x: float):
    assert specfun.ml1(1.0, x) == pytest.approx(math.exp(x), rel=1e-12)


@pytest.mark.parametrize(
    ("alpha", "beta", "gamma", "x"),
    [(0.5, 1.0, 1.0, -1.5), (0.7, 1.2, 2.0, -0.9), (0.9, 0.8, 1.5, 0.6), (0.4, 1.0, 0.5, -0.3)],
)
def test_ml3_against_oracle(alpha: float, beta: float, gamma: float, x: float):
    value = specfun.ml3(alpha, beta, gamma, x)
    assert value == pytest.approx(ml3_oracle(alpha, beta, gamma, x), abs=1e-11, rel=1e-10)


def test_ml3_polynomial_gamma():
    x = np.array([-1.0, 0.3, 2.0])
    expected = 1.0 - x / math.gamma(1.5)
    assert np.allclose(specfun.ml3(0.5, 1.0, -1.0, x), expected, rtol=1e-14)


def test_ml3_rejects_nonpositive_alpha():
    with pytest.raises(DomainError):
        specfun.ml3(0.0, 1.0, 1.0, 0.5)


def test_frac_binom_coeffs():
    assert np.allclose(specfun.frac_binom_coeffs(0.5, 3), [1.0, -0.5, -0.125, -0.0625])
    assert np.allclose(specfun.frac_binom_coeffs(1.0, 3), [1.0, -1.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        specfun.frac_binom_coeffs(1.5, 3)


@pytest.mark.parametrize("alpha", [0.3, 0.6, 0.9])
def test_frac_binom_partial_sums(alpha: float):
    coefficients = specfun.frac_binom_coeffs(alpha, 2000)
    assert np.all(coefficients[1:] < 0.0)
    partial = np.cumsum(coefficients)
    assert np.all(np.diff(partial) < 0.0)
    assert partial[-1] > 0.0
    # the tail of (1 - 1)^alpha decays like K^-alpha / Gamma(1 - alpha)
    assert partial[-1] == pytest.approx(2000.0**-alpha / math.gamma(1.0 - alpha), rel=0.01)


def test_l1_weights():
    weights = specfun.l1_weights(0.5, 4)
    assert weights[0] == 1.0
    assert np.sum(weights) == pytest.approx(2.0)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_caputo_l1_exact_on_linear(alpha: float):
    t = np.linspace(0.0, 1.0, 65)
    derivative = specfun.caputo_l1(t, alpha, t[1])
    expected = t ** (1.0 - alpha) / math.gamma(2.0 - alpha)
    assert np.allclose(derivative, expected, atol=1e-12)


def test_caputo_l1_order_one_is_derivative():
    t = np.linspace(0.0, 2.0, 41)
    assert np.allclose(specfun.caputo_l1(t**2, 1.0, t[1]), 2.0 * t, atol=1e-12)


def test_caputo_l1_axis():
    t = np.linspace(0.0, 1.0, 33)
    samples = np.stack([t, 2.0 * t, 3.0 * t], axis=1)
    derivative = specfun.caputo_l1(samples, 0.5, t[1], axis=0)
    assert derivative.shape == samples.shape
    assert np.allclose(derivative[:, 2], 3.0 * specfun.caputo_l1(t, 0.5, t[1]))


def test_caputo_l1_domain():
    with pytest.raises(DomainError):
        specfun.caputo_l1([0.0, 1.0], 0.0, 0.1)
    with pytest.raises(DomainError):
        specfun.caputo_l1([1.0], 0.5, 0.1)


def test_ml_laplace_selftest():
    report = specfun.ml_laplace_selftest(0.5, 1.0, 1.0, -1.0, 2.0)
    assert report.passed
    assert report.details["closed_form"] == pytest.approx(0.292893, abs=1e-6)
    assert report.details["check"] == "ml_laplace"


def test_ml_laplace_selftest_domain():
    with pytest.raises(DomainError):
        specfun.ml_laplace_selftest(1.0, 1.0, 1.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        specfun.ml_laplace_selftest(0.5, 1.0, 1.0, -1.0, 0.0)


@pytest.mark.parametrize(
    ("alpha", "beta", "gamma", "c", "z"), [(1.0, 1.0, 1.0, -1.0, 1.0), (0.8, 1.0, 2.0, -0.5, 1.5)]
)
def test_ml_laplace_selftest_examples(alpha: float, beta: float, gamma: float, c: float, z: float):
    report = specfun.ml_laplace_selftest(alpha, beta, gamma, c, z)
    assert report.passed, report.summary()
    assert report.value < 1e-6
    expected = z ** (alpha * gamma - beta) / (z**alpha - c) ** gamma
    assert report.details["closed_form"] == pytest.approx(expected, rel=1e-14)


def test_wright_cancellation_beyond_digit_cap(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setattr(specfun, "EXTENDED_DIGITS_CAP", 20)
    with pytest.raises(CancellationError, match="wright"):
        specfun.wright(EXP_SPEC, -30.0)


def test_caputo_l1_observed_order():
    alpha = 0.6
    errors = []
    for n in (64, 128):
        t = np.linspace(0.0, 1.0, n + 1)
        derivative = specfun.caputo_l1(t**2, alpha, t[1])
        errors.append(abs(derivative[-1] - 2.0 / math.gamma(3.0 - alpha)))
    # the L1 scheme is of order 2 - alpha on smooth functions
    assert math.log2(errors[0] / errors[1]) == pytest.approx(2.0 - alpha, abs=0.05)


def test_integrate_checked():
    value, abserr = specfun.integrate_checked("square", lambda x: x * x, 0.0, 1.0)
    assert value == pytest.approx(1 / 3)
    assert abserr < 1e-10
    with pytest.raises(QuadratureError, match="reciprocal"):
        specfun.integrate_checked("reciprocal", lambda x: 1 / x, 0.0, 1.0)
