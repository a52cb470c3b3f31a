"""Command line: evaluate laws, sample fields and run the verification checks.

Every command resolves one `RunConfig` from the defaults, the optional `--config` file of flat
`key=value` lines and the flags, in that order. The artifact starts with a provenance header
echoing that configuration; checks also print a summary table on stderr. The exit status is 0
when every executed check passes, 1 when a check fails or a numerical error stops the run and 2
for usage errors.
"""

import logging
from collections.abc import Callable, Mapping, Sequence
from pathlib import Path
from typing import Annotated

import numpy as np
import numpy.typing as npt
import pydantic
import typer

from planefield import dists, fields, logs, output, pdecheck, verify
from planefield.errors import PlanefieldError
from planefield.output import Table
from planefield.schemas import (
    Command,
    ComparisonReport,
    CompoundParams,
    GridSpec,
    Rect,
    RunConfig,
    SeriesControl,
)
from planefield.settings import get_settings

LOGGER = logging.getLogger("planefield.cli")

cli = typer.Typer(
    name="planefield",
    help="Planar Poisson random fields: distributions, samplers and verification",
    no_args_is_help=True,
)

SIMULATE_FAMILIES = (
    "points",
    "count_grid",
    "cprf",
    "brownian_sheet",
    "stable_sheet",
    "sfprf",
    "tfprf",
    "stfprf",
    "ml_compound",
    "limit",
)
VERIFY_CHECKS = (
    "timechange",
    "covariance",
    "increments",
    "limit",
    "subordinator",
    "stf_laplace",
    "ml_laplace",
)
CONFIG_KEYS = frozenset(
    {
        "family",
        "check",
        "variant",
        "lambda",
        "alpha",
        "alpha1",
        "alpha2",
        "beta",
        "marks",
        "sigma",
        "beta_c",
        "t1",
        "t2",
        "nmax",
        "n",
        "h",
        "seed",
        "scales",
        "u_grid",
        "workers",
        "trials",
        "out",
        "format",
    }
)

####################################################################################################
# Options
####################################################################################################

ConfigOpt = Annotated[
    Path | None, typer.Option("--config", help="Flat key=value file, overridden by flags.")
]
FamilyOpt = Annotated[str | None, typer.Option("--family", help="Field family.")]
CheckOpt = Annotated[str | None, typer.Option("--check", help="Check name.")]
VariantOpt = Annotated[str | None, typer.Option("--variant", help="Check or field variant.")]
LambdaOpt = Annotated[float | None, typer.Option("--lambda", help="Rate.")]
AlphaOpt = Annotated[
    float | None, typer.Option("--alpha", help="Default of every order not given explicitly.")
]
Alpha1Opt = Annotated[float | None, typer.Option("--alpha1", help="Order along t1.")]
Alpha2Opt = Annotated[float | None, typer.Option("--alpha2", help="Order along t2.")]
BetaOpt = Annotated[float | None, typer.Option("--beta", help="Space fractional order.")]
MarksOpt = Annotated[
    str | None, typer.Option("--marks", help="normal, exponential or mittag_leffler.")
]
SigmaOpt = Annotated[float | None, typer.Option("--sigma", help="Mark rate.")]
BetaCOpt = Annotated[float | None, typer.Option("--beta-c", help="Mittag-Leffler mark order.")]
T1Opt = Annotated[float | None, typer.Option("--t1", help="First time coordinate.")]
T2Opt = Annotated[float | None, typer.Option("--t2", help="Second time coordinate.")]
NmaxOpt = Annotated[int | None, typer.Option("--nmax", help="Largest state.")]
SamplesOpt = Annotated[int | None, typer.Option("--n", help="Number of replications.")]
StepOpt = Annotated[float | None, typer.Option("--h", help="Grid step.")]
SeedOpt = Annotated[int | None, typer.Option("--seed", help="Seed (PLANEFIELD_SEED).")]
ScalesOpt = Annotated[str | None, typer.Option("--scales", help="Comma separated scales.")]
UGridOpt = Annotated[str | None, typer.Option("--u-grid", help="Comma separated CF arguments.")]
WorkersOpt = Annotated[int | None, typer.Option("--workers", help="Replication threads.")]
TrialsOpt = Annotated[int | None, typer.Option("--trials", help="Seeded repetitions.")]
OutOpt = Annotated[str | None, typer.Option("--out", help="Output path, - for stdout.")]
FormatOpt = Annotated[str | None, typer.Option("--format", help="csv or json.")]


####################################################################################################
# Configuration
####################################################################################################


def read_config_file(path: Path) -> dict[str, str]:
    """Parse flat `key=value` lines; blank lines and `#` comments are skipped."""
    values: dict[str, str] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            msg = f"{path}:{number}: expected a known key=value entry, got {line!r}"
            raise typer.BadParameter(msg, param_hint="--config")
        values[key] = value.strip()
    return values


def _floats(text: object) -> tuple[float, ...]:
    return tuple(float(item) for item in str(text).split(",") if item.strip())


def _ints(text: object) -> tuple[int, ...]:
    return tuple(int(item) for item in str(text).split(",") if item.strip())


def _present(values: Mapping[str, object], keys: Sequence[str]) -> dict[str, object]:
    return {key: values[key] for key in keys if values.get(key) is not None}


def resolve_config(
    command: Command, config_file: Path | None, flags: Mapping[str, object]
) -> RunConfig:
    """Defaults, then the config file, then the flags that were given."""
    settings = get_settings()
    values: dict[str, object] = {"seed": settings.seed, "workers": settings.workers}
    if config_file is not None:
        values |= read_config_file(config_file)
    values |= {key: value for key, value in flags.items() if value is not None}

    alpha = values.get("alpha")
    orders = {key: values.get(key, alpha) for key in ("alpha1", "alpha2", "beta")}
    params = {"lam": values.get("lambda")} | orders
    marks = _present(values, ("sigma", "beta_c")) | (
        {"kind": values["marks"]} if values.get("marks") is not None else {}
    )
    run: dict[str, object] = {
        "command": command,
        "params": {key: value for key, value in params.items() if value is not None},
        "compounding": marks or None,
        "output_path": values.get("out", "-"),
        "n_samples": values.get("n"),
    }
    run |= _present(
        values,
        ("family", "check", "variant", "seed", "nmax", "t1", "t2", "h", "workers", "trials"),
    )
    run |= _present(values, ("format",))
    try:
        if values.get("scales") is not None:
            run["scales"] = _ints(values["scales"])
        if values.get("u_grid") is not None:
            run["u_grid"] = _floats(values["u_grid"])
        config = RunConfig.model_validate({k: v for k, v in run.items() if v is not None})
        if values.get("h") is not None or command == "simulate":
            config = config.model_copy(
                update={"grid": GridSpec.from_step(config.t1, config.t2, config.h)}
            )
    except (pydantic.ValidationError, ValueError) as exc:
        raise typer.BadParameter(str(exc)) from None
    return config


def _require(value: str | None, choices: Sequence[str], param_hint: str) -> str:
    if value is None or value not in choices:
        msg = f"{value!r} is not one of {', '.join(choices)}"
        raise typer.BadParameter(msg, param_hint=param_hint)
    return value


def _series_control() -> SeriesControl:
    settings = get_settings()
    return SeriesControl(tol=settings.series_tol, max_terms=settings.series_max_terms)


Body = Callable[[], tuple[list[ComparisonReport], Table | None]]


def _finish(config: RunConfig, reports: Sequence[ComparisonReport], table: Table | None) -> None:
    """Write the artifact, print the summary and exit 1 unless every report passed."""
    output.write_artifact(config, reports, table)
    if reports:
        summary = output.format_table(output.report_rows(reports), output.REPORT_FIELDS)
        typer.echo(summary, err=True)
    if not all(report.passed for report in reports):
        raise typer.Exit(code=1)


def _run(config: RunConfig, body: Body) -> None:
    """Run a command body, numerical errors end the run with status 1."""
    try:
        reports, table = body()
    except PlanefieldError as exc:
        LOGGER.error(  # noqa: TRY400
            "Run failed", extra={"command": config.command, "operation": exc.operation}
        )
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(code=1) from None
    _finish(config, reports, table)


####################################################################################################
# Commands
####################################################################################################


@cli.callback()
def _cli(verbose: bool = False) -> None:  # pyright: ignore[reportUnusedFunction]  # noqa: FBT001, FBT002
    """Planar Poisson random fields."""
    settings = get_settings()
    logs.configure(
        level=logging.DEBUG if verbose else settings.log_level, log_file=settings.log_file
    )


@cli.command()
def pmf(  # noqa: PLR0913
    config: ConfigOpt = None,
    family: FamilyOpt = None,
    lam: LambdaOpt = None,
    alpha: AlphaOpt = None,
    alpha1: Alpha1Opt = None,
    alpha2: Alpha2Opt = None,
    beta: BetaOpt = None,
    t1: T1Opt = None,
    t2: T2Opt = None,
    nmax: NmaxOpt = None,
    h: StepOpt = None,
    out: OutOpt = None,
    fmt: FormatOpt = None,
) -> None:
    """Tabulate Pr{N(t1, t2) = n} for n = 0..nmax, at (t1, t2) or on the grid of step h."""
    flags = {
        "family": family,
        "lambda": lam,
        "alpha": alpha,
        "alpha1": alpha1,
        "alpha2": alpha2,
        "beta": beta,
        "t1": t1,
        "t2": t2,
        "nmax": nmax,
        "h": h,
        "out": out,
        "format": fmt,
    }
    run = resolve_config("pmf", config, flags)
    name = _require(run.family, tuple(dists.COUNT_FAMILIES), "--family")
    ctrl = _series_control()

    def body() -> tuple[list[ComparisonReport], Table | None]:
        if run.grid is None:
            nodes1, nodes2 = np.array([[run.t1]]), np.array([[run.t2]])
        else:
            nodes1, nodes2 = run.grid.mesh()
        rows: list[tuple[output.Cell, ...]] = []
        for n in range(run.nmax + 1):
            values = np.broadcast_to(
                dists.count_pmf(name, n, nodes1, nodes2, run.params, ctrl), nodes1.shape
            )
            rows.extend(
                (n, float(a), float(b), float(p))
                for a, b, p in zip(
                    nodes1.reshape(-1), nodes2.reshape(-1), values.reshape(-1), strict=True
                )
            )
        return [], Table(("n", "t1", "t2", "pmf"), rows)

    _run(run, body)


def _simulate_table(run: RunConfig, name: str) -> Table:  # noqa: C901
    params, seed, n = run.params, run.seed, run.n_samples
    grid = run.grid or GridSpec.from_step(run.t1, run.t2, run.h)
    rect = Rect(t1=run.t1, t2=run.t2)
    if name == "points":
        return output.points_table(fields.sample_prf_points(params.lam, rect, seed))
    if name == "count_grid":
        points = fields.sample_prf_points(params.lam, rect, seed)
        return output.grid_table(grid, fields.count_grid(points, grid))
    if name == "cprf":
        points = fields.sample_prf_points(params.lam, rect, seed)
        field = fields.sample_cprf(points, run.compounding or CompoundParams(), seed)
        return output.points_table(points, field.marks)
    if name == "brownian_sheet":
        return output.grid_table(grid, fields.sample_brownian_sheet(grid, seed))
    if name == "stable_sheet":
        return output.grid_table(grid, fields.sample_stable_sheet(params.beta, grid, seed))

    t1, t2 = run.t1, run.t2
    if name == "sfprf":

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return fields.sample_sfprf(params.beta, params.lam, t1, t2, rng, k)
    elif name == "tfprf":

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return fields.sample_tfprf(params, t1, t2, rng, k)
    elif name == "stfprf":

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return fields.sample_stfprf(params, t1, t2, rng, k)
    elif name == "ml_compound":
        marks = run.compounding or CompoundParams(kind="mittag_leffler", beta_c=params.beta)

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return np.asarray(
                fields.sample_ml_compound_field(
                    t1, t2, params.lam, marks.sigma, marks.beta_c, rng, k
                )
            )
    else:
        variant = _require(run.variant, dists.SCALED_VARIANTS, "--variant")

        def draw(rng: np.random.Generator, k: int) -> npt.NDArray[np.generic]:
            return fields.sample_limit_field(variant, t1, t2, params, rng, k)

    batch = fields.sample_batch(f"simulate:{name}", draw, n, seed, workers=run.workers)
    return output.samples_table(batch.values)


@cli.command()
def simulate(  # noqa: PLR0913
    config: ConfigOpt = None,
    family: FamilyOpt = None,
    variant: VariantOpt = None,
    lam: LambdaOpt = None,
    alpha: AlphaOpt = None,
    alpha1: Alpha1Opt = None,
    alpha2: Alpha2Opt = None,
    beta: BetaOpt = None,
    marks: MarksOpt = None,
    sigma: SigmaOpt = None,
    beta_c: BetaCOpt = None,
    t1: T1Opt = None,
    t2: T2Opt = None,
    n: SamplesOpt = None,
    h: StepOpt = None,
    seed: SeedOpt = None,
    workers: WorkersOpt = None,
    out: OutOpt = None,
    fmt: FormatOpt = None,
) -> None:
    """Sample points, compound fields, sheets or time changed counts."""
    flags = {
        "family": family,
        "variant": variant,
        "lambda": lam,
        "alpha": alpha,
        "alpha1": alpha1,
        "alpha2": alpha2,
        "beta": beta,
        "marks": marks,
        "sigma": sigma,
        "beta_c": beta_c,
        "t1": t1,
        "t2": t2,
        "n": n,
        "h": h,
        "seed": seed,
        "workers": workers,
        "out": out,
        "format": fmt,
    }
    run = resolve_config("simulate", config, flags)
    name = _require(run.family, SIMULATE_FAMILIES, "--family")
    _run(run, lambda: ([], _simulate_table(run, name)))


def _verify_reports(run: RunConfig, name: str) -> list[ComparisonReport]:
    """Reports of a named check; `trials` above 1 wraps single reports in a meta trial."""
    ctrl = _series_control()
    point = (run.t1, run.t2)
    n, workers = run.n_samples, run.workers
    if name == "ml_laplace":
        return verify.check_ml_laplace(ctrl=ctrl)
    if name == "limit":
        variant = _require(run.variant or "gaussian_sheet", dists.SCALED_VARIANTS, "--variant")
        return verify.check_limit(
            variant,
            run.scales,
            point,
            run.u_grid,
            n,
            run.seed,
            params=run.params,
            ctrl=ctrl,
            workers=workers,
        )
    if name == "timechange":
        variant = _require(run.variant or "sfprf", verify.TIMECHANGE_VARIANTS, "--variant")

        def single(seed: int) -> ComparisonReport:
            return verify.check_timechange(
                variant,
                run.params,
                point,
                n,
                seed,
                compounding=run.compounding,
                ctrl=ctrl,
                workers=workers,
            )
    elif name == "subordinator":
        variant = _require(run.variant or "stable_sheet", verify.SUBORDINATOR_VARIANTS, "--variant")

        def single(seed: int) -> ComparisonReport:
            return verify.check_subordinator(variant, run.params.beta, n, seed, workers=workers)
    elif name == "covariance":

        def single(seed: int) -> ComparisonReport:
            return verify.check_covariance(n_samples=n, seed=seed, workers=workers)
    elif name == "increments":

        def single(seed: int) -> ComparisonReport:
            return verify.check_increment_properties(
                run.params.lam, run.compounding, n_samples=n, seed=seed, workers=workers
            )
    else:

        def single(seed: int) -> ComparisonReport:
            return verify.check_stf_laplace(
                run.params, point, run.u_grid, n, seed, ctrl=ctrl, workers=workers
            )

    if run.trials > 1:
        return [verify.meta_trial(single, run.trials, run.seed, name=name)]
    return [single(run.seed)]


@cli.command(name="verify")
def verify_command(  # noqa: PLR0913
    config: ConfigOpt = None,
    check: CheckOpt = None,
    variant: VariantOpt = None,
    lam: LambdaOpt = None,
    alpha: AlphaOpt = None,
    alpha1: Alpha1Opt = None,
    alpha2: Alpha2Opt = None,
    beta: BetaOpt = None,
    marks: MarksOpt = None,
    sigma: SigmaOpt = None,
    beta_c: BetaCOpt = None,
    t1: T1Opt = None,
    t2: T2Opt = None,
    n: SamplesOpt = None,
    seed: SeedOpt = None,
    scales: ScalesOpt = None,
    u_grid: UGridOpt = None,
    workers: WorkersOpt = None,
    trials: TrialsOpt = None,
    out: OutOpt = None,
    fmt: FormatOpt = None,
) -> None:
    """Run a Monte Carlo or self test check and write its reports."""
    flags = {
        "check": check,
        "variant": variant,
        "lambda": lam,
        "alpha": alpha,
        "alpha1": alpha1,
        "alpha2": alpha2,
        "beta": beta,
        "marks": marks,
        "sigma": sigma,
        "beta_c": beta_c,
        "t1": t1,
        "t2": t2,
        "n": n,
        "seed": seed,
        "scales": scales,
        "u_grid": u_grid,
        "workers": workers,
        "trials": trials,
        "out": out,
        "format": fmt,
    }
    run = resolve_config("verify", config, flags)
    name = _require(run.check, VERIFY_CHECKS, "--check")
    _run(run, lambda: (_verify_reports(run, name), None))


@cli.command()
def pde(  # noqa: PLR0913
    config: ConfigOpt = None,
    check: CheckOpt = None,
    lam: LambdaOpt = None,
    alpha: AlphaOpt = None,
    alpha1: Alpha1Opt = None,
    alpha2: Alpha2Opt = None,
    beta: BetaOpt = None,
    sigma: SigmaOpt = None,
    nmax: NmaxOpt = None,
    h: StepOpt = None,
    out: OutOpt = None,
    fmt: FormatOpt = None,
) -> None:
    """Residuals of a governing system; fails unless they meet the check threshold."""
    flags = {
        "check": check,
        "lambda": lam,
        "alpha": alpha,
        "alpha1": alpha1,
        "alpha2": alpha2,
        "beta": beta,
        "sigma": sigma,
        "nmax": nmax,
        "h": h,
        "out": out,
        "format": fmt,
    }
    run = resolve_config("pde", config, flags)
    name = _require(run.check, pdecheck.PDE_CHECKS, "--check")
    sigma_value = run.compounding.sigma if run.compounding else 1.0

    def body() -> tuple[list[ComparisonReport], Table | None]:
        residuals, report = pdecheck.check_residual(
            name,
            run.h,
            run.params,
            sigma=sigma_value,
            n_max=run.nmax,
            ctrl=_series_control(),
        )
        finest = min(residual.grid.h1 for residual in residuals)
        return [report], output.residual_table(
            [residual for residual in residuals if residual.grid.h1 == finest]
        )

    _run(run, body)


@cli.command()
def converge(  # noqa: PLR0913
    config: ConfigOpt = None,
    variant: VariantOpt = None,
    lam: LambdaOpt = None,
    alpha: AlphaOpt = None,
    alpha1: Alpha1Opt = None,
    alpha2: Alpha2Opt = None,
    beta: BetaOpt = None,
    t1: T1Opt = None,
    t2: T2Opt = None,
    n: SamplesOpt = None,
    seed: SeedOpt = None,
    scales: ScalesOpt = None,
    u_grid: UGridOpt = None,
    workers: WorkersOpt = None,
    out: OutOpt = None,
    fmt: FormatOpt = None,
) -> None:
    """Sup CF gap of a scaled compound field against its limit, for every scale."""
    flags = {
        "variant": variant,
        "lambda": lam,
        "alpha": alpha,
        "alpha1": alpha1,
        "alpha2": alpha2,
        "beta": beta,
        "t1": t1,
        "t2": t2,
        "n": n,
        "seed": seed,
        "scales": scales,
        "u_grid": u_grid,
        "workers": workers,
        "out": out,
        "format": fmt,
    }
    run = resolve_config("converge", config, flags)
    name = _require(run.variant, dists.SCALED_VARIANTS, "--variant")

    def body() -> tuple[list[ComparisonReport], Table | None]:
        reports = verify.check_limit(
            name,
            run.scales,
            (run.t1, run.t2),
            run.u_grid,
            run.n_samples,
            run.seed,
            params=run.params,
            ctrl=_series_control(),
            workers=run.workers,
        )
        rows: list[tuple[output.Cell, ...]] = [
            (
                int(str(report.details["scale"])),
                report.value,
                float(str(report.details["bias"])),
                report.threshold,
                report.passed,
            )
            for report in reports[:-1]
        ]
        return reports, Table(("scale", "gap", "bias", "threshold", "passed"), rows)

    _run(run, body)
