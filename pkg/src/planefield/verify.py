"""Monte Carlo checks of the time change, covariance, increment and scaling limit results.

Every check samples through `fields.sample_batch`, so a report only depends on its parameters
and seed. Thresholds are derived from the sample size.
"""

import logging
import math
from collections import Counter
from collections.abc import Callable, Mapping, Sequence
from fractions import Fraction
from typing import Literal

import numpy as np
import numpy.typing as npt
from scipy import special, stats

from planefield import dists, fields
from planefield.dists import Point
from planefield.errors import DomainError
from planefield.schemas import (
    CompoundParams,
    ComparisonReport,
    Detail,
    FieldParams,
    FloatArray,
    GridSpec,
    Rect,
    SampleBatch,
    SeriesControl,
)
from planefield.specfun import DEFAULT_CONTROL, ml_laplace_selftest

LOGGER = logging.getLogger("planefield.verify")

TimechangeVariant = Literal["sfprf", "tfprf", "stfprf", "ml_compound"]
TIMECHANGE_VARIANTS: tuple[TimechangeVariant, ...] = ("sfprf", "tfprf", "stfprf", "ml_compound")
SubordinatorVariant = Literal["stable_sheet", "inverse_stable"]
SUBORDINATOR_VARIANTS: tuple[SubordinatorVariant, ...] = ("stable_sheet", "inverse_stable")

KS_COEFFICIENT = 1.63
"""Asymptotic 1 % critical value of sqrt(n) times the Kolmogorov-Smirnov statistic."""
TV_TAIL = 1e-4
TV_CAP = 60
TV_FACTOR = 3.0
TV_FACTOR_DEGENERATE = 2.0
TV_BOUNDS: dict[str, float] = {"sfprf": 0.01, "tfprf": 0.01, "stfprf": 0.015}
"""Largest accepted TV distance at `TV_REFERENCE_DRAWS` draws, per variant."""
TV_BOUND_DEGENERATE = 0.005
TV_REFERENCE_DRAWS = 100_000
Z_THRESHOLD = 3.0
CF_FACTOR = 4.0
MONOTONE_FACTOR = 1.58
META_FAILURE_RATE = 0.05

DEFAULT_POINT: Point = (1.0, 1.0)
DEFAULT_U_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
COVARIANCE_PAIRS: tuple[tuple[Point, Point], ...] = (
    ((1.0, 1.0), (2.0, 2.0)),
    ((1.0, 2.0), (2.0, 1.0)),
    ((2.0, 1.0), (1.0, 2.0)),
    ((2.0, 2.0), (1.0, 1.0)),
)
INCREMENT_PAIRS: tuple[tuple[Rect, Rect], ...] = (
    (Rect(s1=0.0, t1=1.0, s2=0.0, t2=1.0), Rect(s1=2.0, t1=3.0, s2=1.0, t2=2.0)),
    (Rect(s1=0.0, t1=1.0, s2=0.0, t2=1.0), Rect(s1=1.0, t1=2.0, s2=0.0, t2=1.0)),
)
ML_LAPLACE_SWEEP: tuple[tuple[float, float, float, float, float], ...] = (
    # (alpha, beta, gamma, c, z), |c| t^alpha stays small over the quadrature range
    (0.5, 1.0, 1.0, -1.0, 4.0),
    (0.7, 1.0, 1.0, -0.5, 3.0),
    (0.9, 1.0, 2.0, -0.5, 4.0),
    (0.6, 0.8, 1.0, -0.3, 2.0),
    (0.8, 1.0, 1.5, -0.4, 3.0),
    (0.5, 1.0, 1.0, 0.5, 2.0),
    (0.7, 1.2, 1.0, 0.3, 1.0),
    (1.0, 1.0, 1.0, 0.5, 1.0),
    (0.6, 1.5, 2.0, 0.2, 1.0),
    (0.4, 1.0, 1.0, 0.2, 0.5),
)


def _finish(report: ComparisonReport) -> ComparisonReport:
    LOGGER.info(
        "Check finished",
        extra={
            "check": report.details.get("check"),
            "variant": report.details.get("variant"),
            "statistic": report.statistic_name,
            "value": report.value,
            "threshold": report.threshold,
            "n_samples": report.n_samples,
            "passed": report.passed,
        },
    )
    return report


####################################################################################################
# Statistics
####################################################################################################


def empirical_pmf(batch: SampleBatch) -> dict[int, Fraction]:
    """Relative frequencies of integer samples, exact."""
    counts = Counter(int(value) for value in batch.values.tolist())
    return {value: Fraction(count, batch.n) for value, count in sorted(counts.items())}


def tv_distance(p: Mapping[int, float | Fraction], q: Mapping[int, float | Fraction]) -> float:
    """Total variation distance, half the l1 distance over the union of supports."""
    support = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in support)


def ks_statistic(batch: SampleBatch, cdf: Callable[[FloatArray], npt.ArrayLike]) -> float:
    """sup |F_n - F| between the empirical distribution function and `cdf`."""
    return float(stats.kstest(batch.values.astype(np.float64), cdf).statistic)


def two_sample_ks(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Two sample Kolmogorov-Smirnov statistic."""
    return float(stats.ks_2samp(a, b).statistic)


def ks_critical(n: int, m: int | None = None) -> float:
    """1 % critical value of the one sample (m None) or two sample statistic."""
    if m is None:
        return KS_COEFFICIENT / math.sqrt(n)
    return KS_COEFFICIENT * math.sqrt((n + m) / (n * m))


def empirical_cf(batch: SampleBatch, u_grid: Sequence[float]) -> npt.NDArray[np.complex128]:
    """(1/n) sum_k exp(i u X_k) at every u."""
    u = np.asarray(u_grid, dtype=np.float64)
    values = batch.values.astype(np.float64)
    return np.mean(np.exp(1j * np.outer(u, values)), axis=1)


def expected_tv(probs: npt.ArrayLike, n: int) -> float:
    """Mean TV distance between a multinomial frequency vector of n draws and its probabilities."""
    p = np.clip(np.asarray(probs, dtype=np.float64), 0.0, 1.0)
    return 0.5 * float(np.sum(np.sqrt(2.0 * p * (1.0 - p) / (math.pi * n))))


def tv_support(
    pmf: Callable[[int], float], *, tail: float = TV_TAIL, cap: int = TV_CAP
) -> FloatArray:
    """p(0..N), N the first index where the remaining mass falls below `tail`, at most `cap`."""
    probs: list[float] = []
    for n in range(cap + 1):
        probs.append(pmf(n))
        if 1.0 - sum(probs) < tail:
            break
    return np.array(probs)


def binned_tv(batch: SampleBatch, probs: FloatArray) -> tuple[float, FloatArray]:
    """TV distance on {0..N} plus one overflow bin, and the binned model probabilities."""
    top = probs.shape[0] - 1
    frequencies = empirical_pmf(batch)
    overflow = sum((f for k, f in frequencies.items() if k > top), Fraction(0))
    empirical = {k: f for k, f in frequencies.items() if k <= top} | {top + 1: overflow}
    model = np.append(probs, max(0.0, 1.0 - float(np.sum(probs))))
    return tv_distance(empirical, dict(enumerate(model.tolist()))), model


def _z_score(samples: FloatArray, target: float) -> tuple[float, float, float]:
    """(estimate, standard error, |estimate - target| / standard error)."""
    estimate = float(np.mean(samples))
    error = float(np.std(samples, ddof=1)) / math.sqrt(samples.shape[0])
    if error == 0:
        return estimate, error, 0.0 if estimate == target else math.inf
    return estimate, error, abs(estimate - target) / error


####################################################################################################
# Checks
####################################################################################################


def _count_check(
    variant: str,
    batch: SampleBatch,
    pmf: Callable[[int], float],
    *,
    degenerate: bool,
    details: dict[str, Detail],
) -> ComparisonReport:
    probs = tv_support(pmf)
    tv, model = binned_tv(batch, probs)
    expected = expected_tv(model, batch.n)
    factor = TV_FACTOR_DEGENERATE if degenerate else TV_FACTOR
    # TV noise shrinks like 1 / sqrt(n)
    bound = (TV_BOUND_DEGENERATE if degenerate else TV_BOUNDS[variant]) * math.sqrt(
        TV_REFERENCE_DRAWS / batch.n
    )
    return ComparisonReport(
        statistic_name="tv",
        value=tv,
        threshold=min(factor * expected, bound),
        n_samples=batch.n,
        details={
            "check": "timechange",
            "variant": variant,
            "expected_tv": expected,
            "tv_bound": bound,
            "support": probs.shape[0] - 1,
            "overflow_mass": float(model[-1]),
            "degenerate": degenerate,
            **details,
        },
    )


def check_timechange(
    variant: str,
    params: FieldParams,
    point: Point = DEFAULT_POINT,
    n_samples: int = 100_000,
    seed: int = 0,
    *,
    compounding: CompoundParams | None = None,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    workers: int | None = None,
) -> ComparisonReport:
    """Compare a time changed sampler with the series law of the same field.

    Variants:
        sfprf: N(H_beta(t1, t2)) against `sfprf_pmf` with order beta.
        tfprf: N(L_alpha1(t1) L_alpha2(t2)) against `fprf_pmf`.
        stfprf: N(H_beta(L_alpha1(t1), L_alpha2(t2))) against `stfprf_pmf`.
        ml_compound: compound field with Mittag-Leffler marks against the stable subordinator
            run on the compound field with exponential marks (two sample KS).
    """
    t1, t2 = point
    descriptor = f"timechange:{variant}"
    details: dict[str, Detail] = {
        "lam": params.lam,
        "alpha1": params.alpha1,
        "alpha2": params.alpha2,
        "beta": params.beta,
        "t1": t1,
        "t2": t2,
    }

    if variant == "ml_compound":
        marks = compounding or CompoundParams(kind="mittag_leffler", beta_c=params.beta)
        batches = [
            fields.sample_batch(
                f"{descriptor}:{method}",
                lambda rng, k, method=method: np.asarray(
                    fields.sample_ml_compound_field(
                        t1, t2, params.lam, marks.sigma, marks.beta_c, rng, k, method=method
                    )
                ),
                n_samples,
                seed,
                workers=workers,
            )
            for method in ("marks", "subordinated")
        ]
        statistic = two_sample_ks(batches[0].values, batches[1].values)
        return _finish(
            ComparisonReport(
                statistic_name="ks_2samp",
                value=statistic,
                threshold=ks_critical(n_samples, n_samples),
                n_samples=n_samples,
                details={
                    "check": "timechange",
                    "variant": variant,
                    "sigma": marks.sigma,
                    "beta_c": marks.beta_c,
                    **details,
                },
            )
        )

    if variant == "sfprf":

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return fields.sample_sfprf(params.beta, params.lam, t1, t2, rng, k)

        def pmf(n: int) -> float:
            return float(dists.sfprf_pmf(n, t1, t2, params.beta, params.lam, ctrl))

        degenerate = params.beta == 1.0
    elif variant == "tfprf":

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return fields.sample_tfprf(params, t1, t2, rng, k)

        def pmf(n: int) -> float:
            return float(dists.fprf_pmf(n, t1, t2, params, ctrl))

        degenerate = params.alpha1 == params.alpha2 == 1.0
    elif variant == "stfprf":

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return fields.sample_stfprf(params, t1, t2, rng, k)

        def pmf(n: int) -> float:
            return float(dists.stfprf_pmf(n, t1, t2, params, ctrl))

        degenerate = params.is_plain
    else:
        raise DomainError("check_timechange", f"unknown variant {variant!r}")

    batch = fields.sample_batch(descriptor, draw, n_samples, seed, workers=workers)
    return _finish(_count_check(variant, batch, pmf, degenerate=degenerate, details=details))


def check_covariance(
    pairs: Sequence[tuple[Point, Point]] = COVARIANCE_PAIRS,
    n_samples: int = 100_000,
    seed: int = 0,
    *,
    workers: int | None = None,
) -> ComparisonReport:
    """Product moments E X(p1) X(p2) of the unit rate normal compound field vs min * min."""
    normal = CompoundParams(kind="normal")
    query = [p for pair in pairs for p in pair]

    def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
        return fields.sample_field_at(1.0, normal, query, rng, k)

    values = fields.sample_batch("covariance", draw, n_samples, seed, workers=workers).values
    estimates: list[float] = []
    targets: list[float] = []
    scores: list[float] = []
    for index, (p1, p2) in enumerate(pairs):
        target = min(p1[0], p2[0]) * min(p1[1], p2[1])
        products = values[:, 2 * index] * values[:, 2 * index + 1]
        estimate, _, score = _z_score(products, target)
        estimates.append(estimate)
        targets.append(target)
        scores.append(score)
    return _finish(
        ComparisonReport(
            statistic_name="max_z",
            value=max(scores),
            threshold=Z_THRESHOLD,
            n_samples=n_samples,
            details={
                "check": "covariance",
                "estimates": estimates,
                "targets": targets,
                "z_scores": scores,
            },
        )
    )


def check_limit(  # noqa: PLR0913
    variant: str,
    scales: Sequence[int] = (5, 20, 100),
    point: Point = DEFAULT_POINT,
    u_grid: Sequence[float] = DEFAULT_U_GRID,
    n_samples: int = 100_000,
    seed: int = 0,
    *,
    params: FieldParams | None = None,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    workers: int | None = None,
) -> list[ComparisonReport]:
    """Empirical CF of the scaled compound field against its limit, one report per scale.

    The threshold of a scale adds the exact finite scale bias sup |CF_n - CF| to the Monte Carlo
    allowance. A last report checks that the gaps do not grow with the scale. All scales share
    one random stream.
    """
    params = params or FieldParams()
    t1, t2 = point
    limit = np.asarray(dists.limit_cf(variant, u_grid, t1, t2, params, ctrl))
    reports: list[ComparisonReport] = []
    gaps: list[float] = []
    for scale in scales:

        def draw(rng: np.random.Generator, k: int, scale: int = scale) -> npt.NDArray[np.generic]:
            return fields.sample_scaled_cprf(variant, scale, t1, t2, params, rng, k)

        batch = fields.sample_batch(f"scaled:{variant}", draw, n_samples, seed, workers=workers)
        gap = float(np.max(np.abs(empirical_cf(batch, u_grid) - limit)))
        exact = np.asarray(dists.scaled_cf(variant, u_grid, scale, t1, t2, params, ctrl))
        bias = float(np.max(np.abs(exact - limit)))
        gaps.append(gap)
        reports.append(
            _finish(
                ComparisonReport(
                    statistic_name="sup_cf_gap",
                    value=gap,
                    threshold=bias + CF_FACTOR / math.sqrt(n_samples),
                    n_samples=n_samples,
                    details={
                        "check": "limit",
                        "variant": variant,
                        "scale": scale,
                        "bias": bias,
                        "t1": t1,
                        "t2": t2,
                    },
                )
            )
        )
    increases = [later - earlier for earlier, later in zip(gaps, gaps[1:], strict=False)]
    reports.append(
        _finish(
            ComparisonReport(
                statistic_name="gap_increase",
                value=max([0.0, *increases]),
                threshold=MONOTONE_FACTOR / math.sqrt(n_samples),
                n_samples=n_samples,
                details={
                    "check": "limit_monotone",
                    "variant": variant,
                    "scales": list(scales),
                    "gaps": gaps,
                },
            )
        )
    )
    return reports


def _correlation(a: FloatArray, b: FloatArray) -> float:
    if np.std(a) == 0 or np.std(b) == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def check_increment_properties(
    lam: float = 1.0,
    compounding: CompoundParams | None = None,
    rect_pairs: Sequence[tuple[Rect, Rect]] = INCREMENT_PAIRS,
    n_samples: int = 100_000,
    seed: int = 0,
    *,
    workers: int | None = None,
) -> ComparisonReport:
    """Stationary (same shape pairs, two sample KS) and independent (disjoint pairs, correlation).

    The statistic is the largest of KS / critical value and |r| sqrt(n) / 3 over the pairs, so the
    check passes at 1. Overlapping pairs are reported but not tested for independence.
    """
    compounding = compounding or CompoundParams(kind="normal")
    rects = [rect for pair in rect_pairs for rect in pair]

    def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
        return fields.sample_rect_increments(lam, compounding, rects, rng, k)

    values = fields.sample_batch("increments", draw, n_samples, seed, workers=workers).values
    normalized: list[float] = []
    ks_values: list[float] = []
    correlations: list[float] = []
    for index, (first, second) in enumerate(rect_pairs):
        a, b = values[:, 2 * index], values[:, 2 * index + 1]
        ks = two_sample_ks(a, b) if first.same_shape(second) else 0.0
        r = _correlation(a, b)
        ks_values.append(ks)
        correlations.append(r)
        score = ks / ks_critical(n_samples, n_samples)
        if first.is_disjoint(second):
            score = max(score, abs(r) * math.sqrt(n_samples) / Z_THRESHOLD)
        normalized.append(score)
    return _finish(
        ComparisonReport(
            statistic_name="normalized_max",
            value=max(normalized),
            threshold=1.0,
            n_samples=n_samples,
            details={
                "check": "increments",
                "kind": compounding.kind,
                "ks": ks_values,
                "correlations": correlations,
            },
        )
    )


def check_subordinator(
    variant: str,
    alpha: float,
    n_samples: int = 100_000,
    seed: int = 0,
    *,
    workers: int | None = None,
) -> ComparisonReport:
    """E exp(-H_alpha(1, 1)) against e^-1, or E L_alpha(1) against 1 / Gamma(1 + alpha)."""
    if variant == "stable_sheet":
        grid = GridSpec(t1_max=1.0, t2_max=1.0, n1=4, n2=4)

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return np.exp(-fields.sample_stable_sheet(alpha, grid, rng, k)[:, -1, -1])

        target = math.exp(-1.0)
    elif variant == "inverse_stable":

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return fields.sample_inverse_stable(alpha, 1.0, rng, k)

        target = float(special.rgamma(1.0 + alpha))
    else:
        raise DomainError("check_subordinator", f"unknown variant {variant!r}")

    batch = fields.sample_batch(f"subordinator:{variant}", draw, n_samples, seed, workers=workers)
    estimate, error, score = _z_score(batch.values.astype(np.float64), target)
    return _finish(
        ComparisonReport(
            statistic_name="z_score",
            value=score,
            threshold=Z_THRESHOLD,
            n_samples=n_samples,
            details={
                "check": "subordinator",
                "variant": variant,
                "alpha": alpha,
                "estimate": estimate,
                "target": target,
                "standard_error": error,
            },
        )
    )


def check_stf_laplace(
    params: FieldParams,
    point: Point = DEFAULT_POINT,
    u_grid: Sequence[float] = DEFAULT_U_GRID,
    n_samples: int = 100_000,
    seed: int = 0,
    *,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    workers: int | None = None,
) -> ComparisonReport:
    """Empirical E exp(-u H_beta(L_alpha1(t1), L_alpha2(t2))) against its Wright series."""
    t1, t2 = point

    def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
        return fields.sample_stf_clock(params, t1, t2, rng, k)

    clock = fields.sample_batch("stf_clock", draw, n_samples, seed, workers=workers).values
    targets = np.asarray(dists.stf_subordinator_laplace(u_grid, t1, t2, params, ctrl))
    scores = [
        _z_score(np.exp(-u * clock.astype(np.float64)), float(target))[2]
        for u, target in zip(u_grid, np.atleast_1d(targets), strict=True)
    ]
    return _finish(
        ComparisonReport(
            statistic_name="max_z",
            value=max(scores),
            threshold=Z_THRESHOLD,
            n_samples=n_samples,
            details={
                "check": "stf_laplace",
                "alpha1": params.alpha1,
                "alpha2": params.alpha2,
                "beta": params.beta,
                "z_scores": scores,
            },
        )
    )


def meta_trial(
    check: Callable[[int], ComparisonReport], n_trials: int = 100, seed: int = 0, *, name: str = ""
) -> ComparisonReport:
    """Repeat a seeded check; passes when at most 5 % of the repetitions fail."""
    seeds = np.random.SeedSequence(seed).generate_state(n_trials, dtype=np.uint64)
    failures = sum(not check(int(trial_seed)).passed for trial_seed in seeds)
    return _finish(
        ComparisonReport(
            statistic_name="failure_rate",
            value=failures / n_trials,
            threshold=META_FAILURE_RATE,
            n_samples=n_trials,
            details={"check": "meta_trial", "name": name, "failures": failures},
        )
    )


def check_ml_laplace(
    sweep: Sequence[tuple[float, float, float, float, float]] = ML_LAPLACE_SWEEP,
    ctrl: SeriesControl = DEFAULT_CONTROL,
) -> list[ComparisonReport]:
    """Mittag-Leffler Laplace transform self test at every (alpha, beta, gamma, c, z) of `sweep`."""
    return [_finish(ml_laplace_selftest(*point, ctrl)) for point in sweep]
