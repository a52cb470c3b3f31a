import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from planefield import verify
from planefield.errors import DomainError
from planefield.schemas import ComparisonReport, CompoundParams, FieldParams, SampleBatch

N_SAMPLES = 20_000


def _batch(values: list[float]) -> SampleBatch:
    return SampleBatch(seed=0, values=np.array(values), descriptor="test")


def _report(value: float) -> ComparisonReport:
    return ComparisonReport(statistic_name="stat", value=value, threshold=1.0, n_samples=1)


####################################################################################################
# Statistics
####################################################################################################


def test_empirical_pmf():
    assert verify.empirical_pmf(_batch([0, 2, 2, 5])) == {
        0: Fraction(1, 4),
        2: Fraction(1, 2),
        5: Fraction(1, 4),
    }


def test_tv_distance():
    assert verify.tv_distance({0: 0.5, 1: 0.5}, {0: 0.5, 1: 0.5}) == 0.0
    assert verify.tv_distance({0: 1.0}, {1: 1.0}) == 1.0
    assert verify.tv_distance({0: Fraction(1, 4), 1: Fraction(3, 4)}, {0: 0.5, 1: 0.5}) == 0.25


def test_ks_critical():
    assert verify.ks_critical(100) == pytest.approx(0.163)
    assert verify.ks_critical(100, 100) == pytest.approx(1.63 * math.sqrt(0.02))


def test_ks_statistic():
    batch = _batch([0.1, 0.4, 0.6, 0.9])
    assert verify.ks_statistic(batch, stats.uniform.cdf) == pytest.approx(0.15)
    assert verify.two_sample_ks([1.0, 2.0], [1.0, 2.0]) == 0.0


def test_empirical_cf():
    cf = verify.empirical_cf(_batch([0.0, 0.0]), [0.5, 1.0])
    assert np.allclose(cf, [1.0, 1.0])
    cf = verify.empirical_cf(_batch([math.pi, -math.pi]), [1.0])
    assert np.allclose(cf, [-1.0])


def test_expected_tv():
    assert verify.expected_tv([1.0, 0.0], 100) == 0.0
    expected = 0.5 * 2 * math.sqrt(2 * 0.25 / (math.pi * 100))
    assert verify.expected_tv([0.5, 0.5], 100) == pytest.approx(expected)


def test_tv_support():
    probs = verify.tv_support(lambda n: float(stats.poisson.pmf(n, 1.0)))
    assert 1.0 - np.sum(probs) < verify.TV_TAIL
    assert 1.0 - np.sum(probs[:-1]) >= verify.TV_TAIL
    capped = verify.tv_support(lambda n: 2.0**-n / 2.0, cap=5)
    assert capped.shape == (6,)


def test_binned_tv():
    tv, model = verify.binned_tv(_batch([0, 0, 1, 5]), np.array([0.5, 0.5]))
    assert tv == pytest.approx(0.25)
    assert np.allclose(model, [0.5, 0.5, 0.0])


def test_unknown_variants():
    with pytest.raises(DomainError):
        verify.check_timechange("unknown", FieldParams(), n_samples=10)
    with pytest.raises(DomainError):
        verify.check_subordinator("unknown", 0.5, n_samples=10)


def test_meta_trial():
    passing = verify.meta_trial(lambda _: _report(0.5), n_trials=20, seed=1, name="ok")
    assert passing.passed
    assert passing.value == 0.0
    assert passing.details == {"check": "meta_trial", "name": "ok", "failures": 0}
    failing = verify.meta_trial(lambda _: _report(2.0), n_trials=20, seed=1)
    assert not failing.passed
    assert failing.value == 1.0


def test_meta_trial_seeds_differ():
    seen: list[int] = []

    def check(seed: int) -> ComparisonReport:
        seen.append(seed)
        return _report(0.0)

    verify.meta_trial(check, n_trials=10, seed=3)
    assert len(set(seen)) == 10


def test_check_ml_laplace():
    reports = verify.check_ml_laplace()
    assert len(reports) == len(verify.ML_LAPLACE_SWEEP)
    assert all(report.passed for report in reports)


####################################################################################################
# Monte Carlo checks
####################################################################################################


@pytest.mark.slow
@pytest.mark.parametrize(
    ("variant", "params"),
    [
        ("sfprf", FieldParams(lam=1.0, beta=0.6)),
        ("tfprf", FieldParams(lam=1.5, alpha1=0.7, alpha2=0.9)),
        ("stfprf", FieldParams(lam=1.0, alpha1=0.8, alpha2=0.9, beta=0.7)),
        ("stfprf", FieldParams(lam=1.0)),
        ("ml_compound", FieldParams(lam=1.5, beta=0.6)),
    ],
)
def test_check_timechange(variant: str, params: FieldParams):
    report = verify.check_timechange(variant, params, n_samples=N_SAMPLES, seed=1)
    assert report.passed, report.summary()
    assert report.details["check"] == "timechange"
    assert report.details["variant"] == variant


def test_check_timechange_threshold_is_capped():
    report = verify.check_timechange("sfprf", FieldParams(beta=0.7), n_samples=1000, seed=3)
    assert report.details["tv_bound"] == pytest.approx(0.1)
    assert report.threshold <= 0.1
    expected = report.details["expected_tv"]
    assert isinstance(expected, float)
    assert report.threshold == pytest.approx(min(verify.TV_FACTOR * expected, 0.1))


@pytest.mark.slow
@pytest.mark.parametrize(
    ("variant", "params", "bound"),
    [
        ("sfprf", FieldParams(beta=0.7), 0.01),
        ("tfprf", FieldParams(alpha1=0.8, alpha2=0.9), 0.01),
        ("stfprf", FieldParams(alpha1=0.8, alpha2=0.8, beta=0.7), 0.015),
    ],
)
def test_check_timechange_reference_bound(variant: str, params: FieldParams, bound: float):
    report = verify.check_timechange(variant, params, n_samples=100_000, seed=42)
    assert report.passed, report.summary()
    assert report.threshold <= bound
    assert report.value < bound


@pytest.mark.slow
def test_ml_compound_meta_trial():
    params = FieldParams(beta=0.6)
    report = verify.meta_trial(
        lambda seed: verify.check_timechange("ml_compound", params, n_samples=10_000, seed=seed),
        n_trials=100,
        name="ml_compound",
    )
    assert report.passed, report.summary()
    assert report.details["failures"] <= 5


@pytest.mark.slow
def test_check_timechange_is_reproducible():
    params = FieldParams(lam=1.0, beta=0.6)
    first = verify.check_timechange("sfprf", params, n_samples=5000, seed=4)
    second = verify.check_timechange("sfprf", params, n_samples=5000, seed=4, workers=3)
    assert first == second


@pytest.mark.slow
def test_check_covariance():
    report = verify.check_covariance(n_samples=N_SAMPLES, seed=2)
    assert report.passed, report.summary()
    assert report.details["targets"] == [1.0, 1.0, 1.0, 1.0]


@pytest.mark.slow
@pytest.mark.parametrize(
    "compounding",
    [CompoundParams(kind="normal"), CompoundParams(kind="exponential", sigma=2.0)],
)
def test_check_increment_properties(compounding: CompoundParams):
    report = verify.check_increment_properties(
        1.0, compounding, n_samples=N_SAMPLES, seed=3
    )
    assert report.passed, report.summary()


@pytest.mark.slow
@pytest.mark.parametrize("variant", verify.SUBORDINATOR_VARIANTS)
def test_check_subordinator(variant: str):
    report = verify.check_subordinator(variant, 0.5, n_samples=N_SAMPLES, seed=5)
    assert report.passed, report.summary()
    if variant == "inverse_stable":
        assert report.details["target"] == pytest.approx(1.12838, abs=1e-5)


@pytest.mark.slow
def test_check_stf_laplace():
    params = FieldParams(alpha1=0.8, alpha2=0.9, beta=0.7)
    report = verify.check_stf_laplace(params, n_samples=N_SAMPLES, seed=6)
    assert report.passed, report.summary()


@pytest.mark.slow
@pytest.mark.parametrize("variant", ["gaussian_sheet", "tc_one_axis", "product_tc"])
def test_check_limit(variant: str):
    params = FieldParams(alpha1=0.7, alpha2=0.8)
    reports = verify.check_limit(
        variant, (5, 20, 100), n_samples=N_SAMPLES, seed=7, params=params
    )
    assert len(reports) == 4
    assert [report.details.get("scale") for report in reports[:-1]] == [5, 20, 100]
    assert reports[-1].details["check"] == "limit_monotone"
    assert all(report.passed for report in reports), [report.summary() for report in reports]
