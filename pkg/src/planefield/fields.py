"""Seeded samplers of planar Poisson points, compound fields, subordinators and sheets.

Every sampler takes `seed`, either an integer or a `numpy.random.Generator`. An integer seed is
turned into the stream `(seed, descriptor)` with `stream`, the descriptor defaulting to the
sampler name. Samplers with a `size` argument return one value when `size` is None and an
array of `size` i.i.d. values otherwise.
"""

import hashlib
import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Self, overload

import numpy as np
import numpy.typing as npt

from planefield.dists import Point, check_scaled_variant
from planefield.errors import DomainError
from planefield.schemas import (
    CompoundParams,
    FieldParams,
    FloatArray,
    GridSpec,
    PointSet,
    Rect,
    SampleBatch,
)
from planefield.settings import get_settings

LOGGER = logging.getLogger("planefield.fields")

Seed = int | np.random.Generator
IntArray = npt.NDArray[np.int64]
Draw = Callable[[np.random.Generator, int], npt.NDArray[np.generic]]
MLMethod = Literal["marks", "subordinated"]

_SEED_MODULUS = 2**64


####################################################################################################
# Random streams
####################################################################################################


def descriptor_key(descriptor: str) -> int:
    """64 bit key of a descriptor, stable across runs and platforms."""
    digest = hashlib.blake2b(descriptor.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, descriptor: str, chunk: int = 0) -> np.random.Generator:
    """Independent counter-based generator identified by (seed, descriptor, chunk)."""
    sequence = np.random.SeedSequence(
        entropy=seed % _SEED_MODULUS, spawn_key=(descriptor_key(descriptor), chunk)
    )
    return np.random.Generator(np.random.Philox(sequence))


def as_generator(seed: Seed, descriptor: str) -> np.random.Generator:
    """Generator passed as is, integer seeds turned into the (seed, descriptor) stream."""
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, descriptor)


@overload
def _collapse(values: FloatArray, size: None) -> float: ...
@overload
def _collapse(values: FloatArray, size: int) -> FloatArray: ...
def _collapse(values: FloatArray, size: int | None) -> float | FloatArray:
    if size is None:
        return float(values[0])
    return values


def _count(size: int | None) -> int:
    return 1 if size is None else size


def sample_batch(
    descriptor: str,
    draw: Draw,
    n_samples: int,
    seed: int,
    *,
    workers: int | None = None,
    chunk_size: int | None = None,
) -> SampleBatch:
    """Draw `n_samples` values in fixed chunks, chunk i from the stream (seed, descriptor, i).

    Chunks run on a thread pool and are concatenated in order, so the values do not depend on
    the number of workers.
    """
    settings = get_settings()
    workers = workers or settings.workers
    chunk_size = chunk_size or settings.chunk_size
    sizes = [min(chunk_size, n_samples - start) for start in range(0, n_samples, chunk_size)]

    def run(chunk: int) -> npt.NDArray[np.generic]:
        return draw(stream(seed, descriptor, chunk), sizes[chunk])

    if workers == 1 or len(sizes) <= 1:
        parts = [run(chunk) for chunk in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(run, range(len(sizes))))
    values = np.concatenate(parts) if parts else np.empty(0)
    LOGGER.debug(
        "Sampled batch",
        extra={"descriptor": descriptor, "n_samples": n_samples, "chunks": len(sizes)},
    )
    return SampleBatch(seed=seed, values=values, descriptor=descriptor)


####################################################################################################
# Points and compound fields
####################################################################################################


def sample_prf_points(lam: float, rect: Rect, seed: Seed) -> PointSet:
    """Poisson(lambda area) many uniform points in `rect`."""
    rng = as_generator(seed, "prf_points")
    k = int(rng.poisson(lam * rect.area))
    xs = rng.uniform(rect.s1, rect.t1, size=k)
    ys = rng.uniform(rect.s2, rect.t2, size=k)
    return PointSet(points=np.column_stack((xs, ys)), rect=rect, lam=lam)


def count_in(points: PointSet, t1: float, t2: float) -> int:
    """N(t1, t2): points in [0, t1] x [0, t2]."""
    xs, ys = points.points[:, 0], points.points[:, 1]
    return int(np.count_nonzero((xs <= t1) & (ys <= t2)))


def count_grid(points: PointSet, grid: GridSpec) -> IntArray:
    """N at every node of `grid`, indexed [i, j]."""
    cells, _, _ = np.histogram2d(
        points.points[:, 0], points.points[:, 1], bins=(grid.nodes1(), grid.nodes2())
    )
    counts = np.zeros((grid.n1 + 1, grid.n2 + 1), dtype=np.int64)
    counts[1:, 1:] = np.cumsum(np.cumsum(cells.astype(np.int64), axis=0), axis=1)
    return counts


def sample_marks(compounding: CompoundParams, size: int, rng: np.random.Generator) -> FloatArray:
    """i.i.d. marks: N(0, 1), Exp(sigma) or Mittag-Leffler(beta_c, sigma)."""
    if compounding.kind == "normal":
        return rng.standard_normal(size)
    if compounding.kind == "exponential" or compounding.beta_c == 1.0:
        return rng.exponential(1.0 / compounding.sigma, size)
    beta = compounding.beta_c
    exponentials = rng.standard_exponential(size)
    return (
        compounding.sigma ** (-1.0 / beta)
        * exponentials ** (1.0 / beta)
        * sample_stable(beta, rng, size)
    )


def sample_compound_sum(
    counts: npt.ArrayLike, compounding: CompoundParams, rng: np.random.Generator
) -> FloatArray:
    """Sum of counts[i] i.i.d. marks for every i."""
    k = np.asarray(counts, dtype=np.int64)
    if compounding.kind == "normal":
        return np.sqrt(k) * rng.standard_normal(k.shape)
    if compounding.kind == "exponential" or compounding.beta_c == 1.0:
        return rng.gamma(k, 1.0 / compounding.sigma)
    flat = k.reshape(-1)
    owners = np.repeat(np.arange(flat.shape[0]), flat)
    marks = sample_marks(compounding, int(owners.shape[0]), rng)
    sums = np.bincount(owners, weights=marks, minlength=flat.shape[0])
    return sums.reshape(k.shape)


@dataclass(frozen=True)
class CompoundField:
    """One realization of a compound field: points with their marks."""

    points: PointSet
    marks: FloatArray

    def __call__(self: Self, t1: float, t2: float) -> float:
        """X(t1, t2): sum of the marks in [0, t1] x [0, t2]."""
        xs, ys = self.points.points[:, 0], self.points.points[:, 1]
        return float(np.sum(self.marks[(xs <= t1) & (ys <= t2)]))

    def increment(self: Self, rect: Rect) -> float:
        """Sum of the marks in (s1, t1] x (s2, t2]."""
        return float(np.sum(self.marks[_inside(self.points.points, rect)]))


def _inside(points: FloatArray, rect: Rect) -> npt.NDArray[np.bool_]:
    xs, ys = points[:, 0], points[:, 1]
    return (xs > rect.s1) & (xs <= rect.t1) & (ys > rect.s2) & (ys <= rect.t2)


def sample_cprf(points: PointSet, compounding: CompoundParams, seed: Seed) -> CompoundField:
    """Attach i.i.d. marks to `points`."""
    rng = as_generator(seed, "cprf")
    return CompoundField(points=points, marks=sample_marks(compounding, len(points), rng))


def _replicated_marks(
    lam: float, compounding: CompoundParams, rect: Rect, size: int, rng: np.random.Generator
) -> tuple[FloatArray, FloatArray, IntArray]:
    """Points and marks of `size` independent realizations, with the owning realization."""
    counts = rng.poisson(lam * rect.area, size)
    total = int(np.sum(counts))
    points = np.column_stack(
        (rng.uniform(rect.s1, rect.t1, total), rng.uniform(rect.s2, rect.t2, total))
    )
    owners = np.repeat(np.arange(size), counts)
    return points, sample_marks(compounding, total, rng), owners


def sample_field_at(
    lam: float,
    compounding: CompoundParams,
    query: Sequence[Point],
    seed: Seed,
    size: int,
) -> FloatArray:
    """X at several points of the same realization, shape (size, len(query))."""
    rng = as_generator(seed, "field_at")
    cover = Rect(t1=max(p[0] for p in query), t2=max(p[1] for p in query))
    points, marks, owners = _replicated_marks(lam, compounding, cover, size, rng)
    columns = [
        np.bincount(
            owners, weights=marks * ((points[:, 0] <= t1) & (points[:, 1] <= t2)), minlength=size
        )
        for t1, t2 in query
    ]
    return np.column_stack(columns)


def sample_rect_increments(
    lam: float,
    compounding: CompoundParams,
    rects: Sequence[Rect],
    seed: Seed,
    size: int,
) -> FloatArray:
    """Rectangular increments of the same realization, shape (size, len(rects))."""
    rng = as_generator(seed, "rect_increments")
    cover = Rect(t1=max(r.t1 for r in rects), t2=max(r.t2 for r in rects))
    points, marks, owners = _replicated_marks(lam, compounding, cover, size, rng)
    columns = [
        np.bincount(owners, weights=marks * _inside(points, rect), minlength=size)
        for rect in rects
    ]
    return np.column_stack(columns)


####################################################################################################
# Subordinators
####################################################################################################


def _check_order(operation: str, alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise DomainError(operation, f"order must be in (0, 1], got {alpha}")


@overload
def sample_stable(alpha: float, seed: Seed, size: None = None) -> float: ...
@overload
def sample_stable(alpha: float, seed: Seed, size: int) -> FloatArray: ...
def sample_stable(alpha: float, seed: Seed, size: int | None = None) -> float | FloatArray:
    """H_alpha(1), the positive stable law with Laplace transform exp(-u^alpha).

    Kanter's representation from a uniform angle and a unit exponential; alpha = 1 is the
    constant 1.
    """
    _check_order("sample_stable", alpha)
    rng = as_generator(seed, "stable")
    n = _count(size)
    if alpha == 1.0:
        return _collapse(np.ones(n), size)
    angle = rng.uniform(0.0, math.pi, n)
    exponential = rng.standard_exponential(n)
    values = (
        np.sin(alpha * angle)
        / np.sin(angle) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * angle) / exponential) ** ((1.0 - alpha) / alpha)
    )
    return _collapse(values, size)


@overload
def sample_inverse_stable(alpha: float, t: float, seed: Seed, size: None = None) -> float: ...
@overload
def sample_inverse_stable(alpha: float, t: float, seed: Seed, size: int) -> FloatArray: ...
def sample_inverse_stable(
    alpha: float, t: float, seed: Seed, size: int | None = None
) -> float | FloatArray:
    """L_alpha(t), first passage of H_alpha above t, as (t / H_alpha(1))^alpha."""
    _check_order("sample_inverse_stable", alpha)
    if t < 0:
        raise DomainError("sample_inverse_stable", f"t must be nonnegative, got {t}")
    rng = as_generator(seed, "inverse_stable")
    n = _count(size)
    if t == 0:
        return _collapse(np.zeros(n), size)
    if alpha == 1.0:
        return _collapse(np.full(n, float(t)), size)
    return _collapse((t / sample_stable(alpha, rng, n)) ** alpha, size)


def _sheet(increments: FloatArray) -> FloatArray:
    """Node values from cell increments along the last two axes, zero on the axes."""
    cumulative = np.cumsum(np.cumsum(increments, axis=-2), axis=-1)
    return np.pad(cumulative, [(0, 0)] * (increments.ndim - 2) + [(1, 0), (1, 0)])


def sample_brownian_sheet(grid: GridSpec, seed: Seed, size: int | None = None) -> FloatArray:
    """Brownian sheet at the grid nodes, shape (n1 + 1, n2 + 1) or (size, n1 + 1, n2 + 1)."""
    rng = as_generator(seed, "brownian_sheet")
    shape = (grid.n1, grid.n2) if size is None else (size, grid.n1, grid.n2)
    return _sheet(math.sqrt(grid.cell_area) * rng.standard_normal(shape))


def sample_stable_sheet(
    alpha: float, grid: GridSpec, seed: Seed, size: int | None = None
) -> FloatArray:
    """Two parameter stable subordinator at the grid nodes, from i.i.d. stable cell increments."""
    _check_order("sample_stable_sheet", alpha)
    rng = as_generator(seed, "stable_sheet")
    shape = (grid.n1, grid.n2) if size is None else (size, grid.n1, grid.n2)
    draws = sample_stable(alpha, rng, math.prod(shape)).reshape(shape)
    return _sheet(grid.cell_area ** (1.0 / alpha) * draws)


####################################################################################################
# Time changed counts
####################################################################################################


@overload
def sample_sfprf(
    alpha: float, lam: float, t1: float, t2: float, seed: Seed, size: None = None
) -> int: ...
@overload
def sample_sfprf(
    alpha: float, lam: float, t1: float, t2: float, seed: Seed, size: int
) -> IntArray: ...
def sample_sfprf(
    alpha: float, lam: float, t1: float, t2: float, seed: Seed, size: int | None = None
) -> int | IntArray:
    """N(H_alpha(t1, t2)): Poisson counts at the stable sheet value (t1 t2)^(1/alpha) S."""
    rng = as_generator(seed, "sfprf")
    clock = (t1 * t2) ** (1.0 / alpha) * sample_stable(alpha, rng, _count(size))
    counts = rng.poisson(lam * clock)
    return int(counts[0]) if size is None else counts


def _product_clock(
    params: FieldParams, t1: float, t2: float, rng: np.random.Generator, n: int
) -> FloatArray:
    """L_alpha1(t1) L_alpha2(t2) with independent factors."""
    return sample_inverse_stable(params.alpha1, t1, rng, n) * sample_inverse_stable(
        params.alpha2, t2, rng, n
    )


@overload
def sample_tfprf(
    params: FieldParams, t1: float, t2: float, seed: Seed, size: None = None
) -> int: ...
@overload
def sample_tfprf(
    params: FieldParams, t1: float, t2: float, seed: Seed, size: int
) -> IntArray: ...
def sample_tfprf(
    params: FieldParams, t1: float, t2: float, seed: Seed, size: int | None = None
) -> int | IntArray:
    """N(L_alpha1(t1) L_alpha2(t2)): Poisson counts at the product of two inverse stable clocks."""
    rng = as_generator(seed, "tfprf")
    counts = rng.poisson(params.lam * _product_clock(params, t1, t2, rng, _count(size)))
    return int(counts[0]) if size is None else counts


def sample_stf_clock(
    params: FieldParams, t1: float, t2: float, seed: Seed, size: int
) -> FloatArray:
    """H_beta(L_alpha1(t1), L_alpha2(t2)) = (L1 L2)^(1/beta) S_beta."""
    rng = as_generator(seed, "stf_clock")
    clock = _product_clock(params, t1, t2, rng, size)
    return clock ** (1.0 / params.beta) * sample_stable(params.beta, rng, size)


@overload
def sample_stfprf(
    params: FieldParams, t1: float, t2: float, seed: Seed, size: None = None
) -> int: ...
@overload
def sample_stfprf(
    params: FieldParams, t1: float, t2: float, seed: Seed, size: int
) -> IntArray: ...
def sample_stfprf(
    params: FieldParams, t1: float, t2: float, seed: Seed, size: int | None = None
) -> int | IntArray:
    """N(H_beta(L_alpha1(t1), L_alpha2(t2))), the stable sheet run on two inverse stable clocks."""
    rng = as_generator(seed, "stfprf")
    counts = rng.poisson(params.lam * sample_stf_clock(params, t1, t2, rng, _count(size)))
    return int(counts[0]) if size is None else counts


def sample_ml_compound_field(
    t1: float,
    t2: float,
    lam: float,
    sigma: float,
    beta_c: float,
    seed: Seed,
    size: int | None = None,
    *,
    method: MLMethod = "marks",
) -> float | FloatArray:
    """Compound Poisson field with Mittag-Leffler(beta_c, sigma) marks at (t1, t2).

    method "marks" sums explicit marks, method "subordinated" runs the stable subordinator
    H_beta_c on the compound field with Exp(sigma) marks. Both give the same law.
    """
    rng = as_generator(seed, f"ml_compound:{method}")
    n = _count(size)
    counts = rng.poisson(lam * t1 * t2, n)
    if method == "marks":
        compounding = CompoundParams(kind="mittag_leffler", sigma=sigma, beta_c=beta_c)
        values = sample_compound_sum(counts, compounding, rng)
    else:
        exponential_sums = rng.gamma(counts, 1.0 / sigma)
        values = exponential_sums ** (1.0 / beta_c) * sample_stable(beta_c, rng, n)
    return _collapse(values, size)


####################################################################################################
# Scaled compound fields
####################################################################################################


def _scaled_rate(
    variant: str,
    scale: int,
    t1: float,
    t2: float,
    params: FieldParams,
    rng: np.random.Generator,
    n: int,
) -> tuple[FloatArray, float]:
    """Random Poisson mean of the scaled field and the mark scale."""
    if variant == "gaussian_sheet":
        return np.full(n, scale**2 * t1 * t2), float(scale)
    if variant == "tc_one_axis":
        clock = sample_inverse_stable(params.alpha1, t1, rng, n)
        return scale * clock * t2, math.sqrt(scale)
    if variant == "stf_compound":
        return scale**2 * sample_stf_clock(params, t1, t2, rng, n), float(scale)
    return scale**2 * _product_clock(params, t1, t2, rng, n), float(scale)


def sample_scaled_cprf(
    variant: str,
    scale: int,
    t1: float,
    t2: float,
    params: FieldParams,
    seed: Seed,
    size: int,
) -> FloatArray:
    """Unit rate scaled compound field with N(0, 1) marks at (t1, t2), see `dists.scaled_cf`."""
    check_scaled_variant("sample_scaled_cprf", variant)
    rng = as_generator(seed, f"scaled:{variant}")
    rate, mark_scale = _scaled_rate(variant, scale, t1, t2, params, rng, size)
    counts = rng.poisson(rate)
    return np.sqrt(counts) * rng.standard_normal(size) / mark_scale


def sample_limit_field(
    variant: str, t1: float, t2: float, params: FieldParams, seed: Seed, size: int
) -> FloatArray:
    """Limit of `sample_scaled_cprf`: a Brownian sheet or motion run on the matching clock."""
    check_scaled_variant("sample_limit_field", variant)
    rng = as_generator(seed, f"limit:{variant}")
    if variant == "gaussian_sheet":
        variance = np.full(size, t1 * t2)
    elif variant == "tc_one_axis":
        variance = sample_inverse_stable(params.alpha1, t1, rng, size) * t2
    elif variant == "stf_compound":
        variance = sample_stf_clock(params, t1, t2, rng, size)
    else:
        variance = _product_clock(params, t1, t2, rng, size)
    return np.sqrt(variance) * rng.standard_normal(size)
