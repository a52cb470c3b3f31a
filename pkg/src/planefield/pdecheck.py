"""Finite difference residuals of the differential systems solved by the closed form laws.

A residual operation evaluates a law on the nodes of a `GridSpec`, applies the discrete
operators of its system and keeps the residual on the interior nodes of an evaluation window.
The window lower bounds are fractions of the grid extent: the L1 Caputo scheme is inaccurate
next to the t^alpha behaviour of the laws on the axes, so fractional systems skip that strip.

Grid axes: (t1, t2) for the count systems, (x, t1) for the subordinator density and (y, t) for
the exponential compounding.
"""

import logging
from collections.abc import Callable, Sequence
from typing import Literal

import numpy as np
import numpy.typing as npt

from planefield import dists
from planefield.errors import DomainError
from planefield.schemas import (
    ComparisonReport,
    FieldParams,
    FloatArray,
    GridSpec,
    ResidualGrid,
    SeriesControl,
)
from planefield.specfun import DEFAULT_CONTROL, caputo_l1, frac_binom_coeffs

LOGGER = logging.getLogger("planefield.pdecheck")

Window = float | tuple[float, float]
LambdaDerivative = Literal["series", "fd"]
ExpAxis = Literal["t1", "t2"]
PdeCheck = Literal["prf", "fprf", "sfprf", "stfprf", "subordinator", "exp_compound"]
PDE_CHECKS: tuple[PdeCheck, ...] = (
    "prf",
    "fprf",
    "sfprf",
    "stfprf",
    "subordinator",
    "exp_compound",
)

FRACTIONAL_WINDOW = 0.25
LAMBDA_STEP = 1e-4
"""Relative step of the centered lambda difference."""
REFINEMENT_FACTOR = 1.3
"""Smallest accepted norm reduction per grid halving."""

SUBORDINATOR_EXTENT = (4.0, 1.5)
SUBORDINATOR_WINDOW = (0.125, 1.0 / 3.0)
EXP_EXTENT = (2.0, 1.2)
EXP_WINDOW = (0.1, 1.0 / 6.0)


####################################################################################################
# Grid helpers
####################################################################################################


def _bounds(window: Window) -> tuple[float, float]:
    low1, low2 = (window, window) if isinstance(window, float | int) else window
    if not (0 <= low1 < 1 and 0 <= low2 < 1):
        raise DomainError("residual", f"window fractions must lie in [0, 1), got {window}")
    return float(low1), float(low2)


def _interior(nodes: FloatArray, low: float) -> npt.NDArray[np.intp]:
    """Indices of the interior nodes at or above `low`."""
    inner = np.arange(1, nodes.shape[0] - 1)
    return inner[nodes[inner] >= low * (1.0 - 1e-12)]


def _residual_grid(
    name: str,
    grid: GridSpec,
    states: Sequence[int],
    residuals: FloatArray,
    window: Window,
) -> ResidualGrid:
    """Restrict node residuals of shape (states, n1 + 1, n2 + 1) to the window interior."""
    low1, low2 = _bounds(window)
    nodes1, nodes2 = grid.nodes1(), grid.nodes2()
    i = _interior(nodes1, low1 * grid.t1_max)
    j = _interior(nodes2, low2 * grid.t2_max)
    result = ResidualGrid(
        grid=grid,
        name=name,
        states=tuple(states),
        axis1=nodes1[i],
        axis2=nodes2[j],
        values=residuals[:, i[:, None], j[None, :]],
    )
    LOGGER.info(
        "Residual computed",
        extra={"residual": name, "norm": result.norm, "h1": grid.h1, "h2": grid.h2},
    )
    return result


def _mixed_derivative(
    values: FloatArray, grid: GridSpec, alpha1: float, alpha2: float
) -> FloatArray:
    """Caputo derivative of order alpha1 along t1, then of order alpha2 along t2."""
    along_t1 = caputo_l1(values, alpha1, grid.h1, axis=-2)
    return caputo_l1(along_t1, alpha2, grid.h2, axis=-1)


def _check_states(operation: str, n_max: int) -> None:
    if n_max < 0:
        raise DomainError(operation, f"n_max must be nonnegative, got {n_max}")


def _count_grids(
    pmf: Callable[[int, FloatArray, FloatArray], npt.ArrayLike], states: int, grid: GridSpec
) -> FloatArray:
    """pmf(n) on the mesh for n < states, shape (states, n1 + 1, n2 + 1)."""
    t1, t2 = grid.mesh()
    return np.stack([np.broadcast_to(pmf(n, t1, t2), t1.shape) for n in range(states)])


def _birth_rhs(P: FloatArray, n_max: int, lam: float) -> FloatArray:
    """lambda ((n+1) p(n+1) - (2n+1) p(n) + n p(n-1)) for n = 0..n_max."""
    n = np.arange(n_max + 1, dtype=np.float64)[:, None, None]
    below = np.concatenate((np.zeros_like(P[:1]), P[:n_max]))
    return lam * ((n + 1.0) * P[1 : n_max + 2] - (2.0 * n + 1.0) * P[: n_max + 1] + n * below)


def _fractional_difference(P: FloatArray, order: float) -> FloatArray:
    """(I - B)^order p(n) = sum_k c_k p(n - k), p vanishing below 0."""
    coefficients = frac_binom_coeffs(order, P.shape[0] - 1)
    return np.stack(
        [np.tensordot(coefficients[: n + 1], P[n::-1], axes=1) for n in range(P.shape[0])]
    )


def _space_fractional_rhs(P: FloatArray, dP: FloatArray, order: float, lam: float) -> FloatArray:
    """-(lambda^(order+1) / order d/dlambda + lambda^order) (I - B)^order p(n)."""
    return -(
        lam ** (order + 1.0) / order * _fractional_difference(dP, order)
        + lam**order * _fractional_difference(P, order)
    )


####################################################################################################
# Count systems
####################################################################################################


def residual_prf_system(
    n_max: int,
    grid: GridSpec,
    lam: float,
    *,
    method: Literal["fd", "analytic"] = "fd",
    window: Window = 0.0,
) -> ResidualGrid:
    """Residual of d2p/dt2dt1 = lambda ((n+1) p(n+1) - (2n+1) p(n) + n p(n-1)).

    method "fd" takes centered cross differences of the pmf; "analytic" differentiates
    exp(-s) s^n / n! in s = lambda t1 t2, which leaves a rounding level residual.
    """
    _check_states("residual_prf_system", n_max)
    P = _count_grids(lambda n, t1, t2: dists.prf_pmf(n, t1, t2, lam), n_max + 2, grid)
    rhs = _birth_rhs(P, n_max, lam)
    if method == "fd":
        lhs = _mixed_derivative(P[: n_max + 1], grid, 1.0, 1.0)
    else:
        # d2/dt2dt1 = lambda (p' + s p''), p' = p(n-1) - p(n), p'' = p(n-2) - 2 p(n-1) + p(n)
        t1, t2 = grid.mesh()
        s = lam * t1 * t2
        padded = np.concatenate((np.zeros_like(P[:2]), P[: n_max + 1]))
        first = padded[1:-1] - padded[2:]
        second = padded[:-2] - 2.0 * padded[1:-1] + padded[2:]
        lhs = lam * (first + s * second)
    return _residual_grid("prf", grid, range(n_max + 1), lhs - rhs, window)


def residual_fprf_system(
    n_max: int,
    grid: GridSpec,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    *,
    window: Window = FRACTIONAL_WINDOW,
) -> ResidualGrid:
    """Residual of the time fractional system, mixed Caputo derivative of orders alpha1, alpha2."""
    _check_states("residual_fprf_system", n_max)
    P = _count_grids(lambda n, t1, t2: dists.fprf_pmf(n, t1, t2, params, ctrl), n_max + 2, grid)
    lhs = _mixed_derivative(P[: n_max + 1], grid, params.alpha1, params.alpha2)
    rhs = _birth_rhs(P, n_max, params.lam)
    return _residual_grid("fprf", grid, range(n_max + 1), lhs - rhs, window)


def residual_sfprf_system(
    n_max: int,
    grid: GridSpec,
    alpha: float,
    lam: float,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    *,
    lambda_derivative: LambdaDerivative = "series",
    window: Window = 0.0,
) -> ResidualGrid:
    """Residual of the space fractional system.

    d2p/dt2dt1 = -(lambda^(alpha+1) / alpha d/dlambda + lambda^alpha) (I - B)^alpha p(n).

    The lambda derivative comes from `dists.sfprf_pmf_dlambda` ("series") or from a centered
    difference with relative step `LAMBDA_STEP` ("fd").
    """
    _check_states("residual_sfprf_system", n_max)

    def pmf(rate: float) -> FloatArray:
        return _count_grids(
            lambda n, t1, t2: dists.sfprf_pmf(n, t1, t2, alpha, rate, ctrl), n_max + 1, grid
        )

    P = pmf(lam)
    if lambda_derivative == "series":
        dP = _count_grids(
            lambda n, t1, t2: dists.sfprf_pmf_dlambda(n, t1, t2, alpha, lam, ctrl),
            n_max + 1,
            grid,
        )
    else:
        step = LAMBDA_STEP * lam
        dP = (pmf(lam + step) - pmf(lam - step)) / (2.0 * step)
    lhs = _mixed_derivative(P, grid, 1.0, 1.0)
    rhs = _space_fractional_rhs(P, dP, alpha, lam)
    return _residual_grid("sfprf", grid, range(n_max + 1), lhs - rhs, window)


def residual_stfprf_system(
    n_max: int,
    grid: GridSpec,
    params: FieldParams,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    *,
    lambda_derivative: LambdaDerivative = "series",
    window: Window = FRACTIONAL_WINDOW,
) -> ResidualGrid:
    """Residual of the space-time fractional system.

    Mixed Caputo derivative of orders alpha1, alpha2 on the left, the space fractional operator
    of order beta on the right.
    """
    _check_states("residual_stfprf_system", n_max)

    def pmf(rate: float) -> FloatArray:
        shifted = params.model_copy(update={"lam": rate})
        return _count_grids(
            lambda n, t1, t2: dists.stfprf_pmf(n, t1, t2, shifted, ctrl), n_max + 1, grid
        )

    P = pmf(params.lam)
    if lambda_derivative == "series":
        dP = _count_grids(
            lambda n, t1, t2: dists.stfprf_pmf_dlambda(n, t1, t2, params, ctrl),
            n_max + 1,
            grid,
        )
    else:
        step = LAMBDA_STEP * params.lam
        dP = (pmf(params.lam + step) - pmf(params.lam - step)) / (2.0 * step)
    lhs = _mixed_derivative(P, grid, params.alpha1, params.alpha2)
    rhs = _space_fractional_rhs(P, dP, params.beta, params.lam)
    return _residual_grid("stfprf", grid, range(n_max + 1), lhs - rhs, window)


####################################################################################################
# Densities
####################################################################################################


def residual_subordinator_density(
    grid: GridSpec,
    t2: float = 1.0,
    alpha: float = 0.5,
    *,
    window: Window = SUBORDINATOR_WINDOW,
) -> ResidualGrid:
    """Residual of dg/dt1 = -t2 D^alpha_x g for the density g(x; t1, t2) of the stable sheet.

    Only alpha = 1/2, where g is a Levy density. The grid axes are (x, t1); the x window must
    stay away from 0.
    """
    if alpha != 0.5:
        raise DomainError("residual_subordinator_density", "closed form density needs alpha 1/2")
    if _bounds(window)[0] == 0:
        raise DomainError("residual_subordinator_density", "the x window must exclude x = 0")
    x = grid.nodes1()
    g = np.column_stack(
        [np.asarray(dists.levy_subordinator_density(x, t1, t2)) for t1 in grid.nodes2()]
    )
    residual = np.gradient(g, grid.h2, axis=1) + t2 * caputo_l1(g, alpha, grid.h1, axis=0)
    return _residual_grid("subordinator", grid, (0,), residual[None], window)


def residual_exp_compound(
    grid: GridSpec,
    params: FieldParams,
    sigma: float = 1.0,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    *,
    axis: ExpAxis = "t2",
    other: float = 1.0,
    window: Window = EXP_WINDOW,
) -> ResidualGrid:
    """Residual of sigma D^alpha_t f = -(lambda s + D^alpha_t) df/dy for the compound density.

    f is the density of the compound field with Exp(sigma) marks, t runs along `axis` with the
    order of that axis and the other time is fixed to s = `other`, whose order must be 1. The
    grid axes are (y, t).
    """
    fixed_order = params.alpha1 if axis == "t2" else params.alpha2
    if fixed_order != 1.0:
        raise DomainError("residual_exp_compound", f"the axis other than {axis} must have order 1")
    order = params.alpha2 if axis == "t2" else params.alpha1
    y = grid.nodes1()

    def density(t: float) -> FloatArray:
        t1, t2 = (other, t) if axis == "t2" else (t, other)
        return np.asarray(dists.cprf_exp_density(y, t1, t2, params, sigma, ctrl))

    f = np.column_stack([density(float(t)) for t in grid.nodes2()])
    df_dy = np.gradient(f, grid.h1, axis=0)
    residual = (
        sigma * caputo_l1(f, order, grid.h2, axis=1)
        + params.lam * other * df_dy
        + caputo_l1(df_dy, order, grid.h2, axis=1)
    )
    return _residual_grid(f"exp_compound:{axis}", grid, (0,), residual[None], window)


####################################################################################################
# Refinement and reports
####################################################################################################


def refinement_grids(grid: GridSpec, steps: int) -> list[GridSpec]:
    """`grid` and its successive halvings, `steps` refinements."""
    grids = [grid]
    for _ in range(steps):
        grids.append(grids[-1].refined())
    return grids


def _ratios(norms: Sequence[float]) -> list[float]:
    pairs = zip(norms, norms[1:], strict=False)
    return [fine / coarse if coarse else 0.0 for coarse, fine in pairs]


def refinement_ratios(
    op: Callable[[GridSpec], ResidualGrid], grids: Sequence[GridSpec]
) -> list[float]:
    """Norm on each grid divided by the norm on the previous one."""
    return _ratios([op(grid).norm for grid in grids])


def _absolute_report(
    check: str, residuals: Sequence[ResidualGrid], scale: float, order: float, h: float
) -> ComparisonReport:
    """Largest norm against scale * (128 h)^order."""
    return ComparisonReport(
        statistic_name="residual_norm",
        value=max(residual.norm for residual in residuals),
        threshold=scale * (128.0 * h) ** order,
        n_samples=0,
        details={
            "check": "pde",
            "variant": check,
            "h": h,
            "order": order,
            "norms": [residual.norm for residual in residuals],
        },
    )


def _refinement_report(
    check: str, op: Callable[[GridSpec], ResidualGrid], grid: GridSpec, steps: int
) -> tuple[list[ResidualGrid], ComparisonReport]:
    """Largest fine / coarse norm ratio against 1 / `REFINEMENT_FACTOR`."""
    residuals = [op(refined) for refined in refinement_grids(grid, steps)]
    norms = [residual.norm for residual in residuals]
    ratios = _ratios(norms)
    report = ComparisonReport(
        statistic_name="refinement_ratio",
        value=max(ratios),
        threshold=1.0 / REFINEMENT_FACTOR,
        n_samples=0,
        details={
            "check": "pde",
            "variant": check,
            "h": grid.h1,
            "norms": norms,
            "ratios": ratios,
        },
    )
    return residuals, report


def check_residual(
    check: str,
    h: float = 1 / 64,
    params: FieldParams | None = None,
    *,
    sigma: float = 1.0,
    n_max: int = 5,
    ctrl: SeriesControl = DEFAULT_CONTROL,
    steps: int = 2,
) -> tuple[list[ResidualGrid], ComparisonReport]:
    """Run a named residual check on its reference domain and judge it.

    Thresholds:
        prf: 1e-4 (128 h)^2 on [0, 1]^2.
        fprf, sfprf, stfprf: the norm shrinks by `REFINEMENT_FACTOR` per halving of h, over
            `steps` halvings on [0, 1]^2.
        subordinator: 5e-3 (128 h)^1.5 on x in [0.5, 4], t1 in [0.5, 1.5], t2 = 1, alpha 1/2.
        exp_compound: 1e-3 (128 h)^2 for ordinary orders, checked along both axes; otherwise
            the refinement rule along the fractional axis, on y in [0.2, 2], t in [0.2, 1.2].
    """
    params = params or FieldParams()
    unit = GridSpec.from_step(1.0, 1.0, h)
    if check == "prf":
        residual = residual_prf_system(n_max, unit, params.lam)
        residuals, report = [residual], _absolute_report(check, [residual], 1e-4, 2.0, h)
    elif check == "fprf":
        residuals, report = _refinement_report(
            check, lambda grid: residual_fprf_system(n_max, grid, params, ctrl), unit, steps
        )
    elif check == "sfprf":
        residuals, report = _refinement_report(
            check,
            lambda grid: residual_sfprf_system(n_max, grid, params.beta, params.lam, ctrl),
            unit,
            steps,
        )
    elif check == "stfprf":
        residuals, report = _refinement_report(
            check, lambda grid: residual_stfprf_system(n_max, grid, params, ctrl), unit, steps
        )
    elif check == "subordinator":
        grid = GridSpec.from_step(*SUBORDINATOR_EXTENT, h)
        residual = residual_subordinator_density(grid)
        residuals, report = [residual], _absolute_report(check, [residual], 5e-3, 1.5, h)
    elif check == "exp_compound":
        residuals, report = _exp_compound_check(params, sigma, ctrl, h, steps)
    else:
        raise DomainError("check_residual", f"unknown check {check!r}")
    LOGGER.info(
        "Check finished",
        extra={
            "check": "pde",
            "variant": check,
            "statistic": report.statistic_name,
            "value": report.value,
            "threshold": report.threshold,
            "passed": report.passed,
        },
    )
    return residuals, report


def _exp_compound_check(
    params: FieldParams, sigma: float, ctrl: SeriesControl, h: float, steps: int
) -> tuple[list[ResidualGrid], ComparisonReport]:
    grid = GridSpec.from_step(*EXP_EXTENT, h)
    if params.alpha1 == params.alpha2 == 1.0:
        residuals = [
            residual_exp_compound(grid, params, sigma, ctrl, axis=axis) for axis in ("t1", "t2")
        ]
        return residuals, _absolute_report("exp_compound", residuals, 1e-3, 2.0, h)
    axis: ExpAxis = "t2" if params.alpha1 == 1.0 else "t1"
    return _refinement_report(
        "exp_compound",
        lambda refined: residual_exp_compound(refined, params, sigma, ctrl, axis=axis),
        grid,
        steps,
    )
