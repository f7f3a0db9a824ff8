"""
mginf command line.

Every command reads a JSON scenario (--scenario), applies the flag overrides
and writes CSV or JSON to --out or stdout. Logs go to stderr.

Exit codes: 0 success / condition holds, 1 condition violated or comparison
failed, 2 invalid input, 3 numeric failure.
"""

import csv
import io
import json
import logging
import math
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import typer
from pydantic import ValidationError

from src.mginf import logs
from src.mginf.busy_period import busy_cdf_series, busy_law_constant_beta, busy_mean
from src.mginf.errors import CapabilityError, MGInfError, NumericError, ParameterDomainError, ShapeError
from src.mginf.mc_simulator import compare_busy_period, compare_curve, simulate_busy_period, simulate_state
from src.mginf.monotonicity import check_mean_monotone, check_variance_monotone
from src.mginf.numerics import uniform_grid
from src.mginf.scenario import BetaConstantSpec, ExponentialSpec, GridSpec, Scenario
from src.mginf.service_models import hazard
from src.mginf.transient_engine import (
    MomentCurve,
    busy_origin_pmfs,
    mean_busy_origin,
    printed_exponential_variance,
    variance_busy_origin,
)

logger = logging.getLogger(__name__)

EXIT_VIOLATED = 1
EXIT_INVALID = 2
EXIT_NUMERIC = 3

app = typer.Typer(add_completion=False, no_args_is_help=True, help="Transient M|G|∞ analysis from a busy-period start.")


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


class Kind(str, Enum):
    mean = "mean"
    variance = "variance"


class BusyForm(str, Enum):
    closed = "closed"
    series = "series"


ScenarioOpt = Annotated[Path, typer.Option("--scenario", exists=True, dir_okay=False, help="Scenario JSON file.")]
OutOpt = Annotated[Optional[Path], typer.Option("--out", help="Output file (default stdout).")]
GridOpt = Annotated[Optional[str], typer.Option("--grid", help="Time grid as start:stop:points.")]
NMaxOpt = Annotated[Optional[int], typer.Option("--n-max", help="Largest state index of the pmf.")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Simulator seed.")]
ReplicationsOpt = Annotated[Optional[int], typer.Option("--replications", help="Number of replications.")]
WorkersOpt = Annotated[Optional[int], typer.Option("--workers", help="Simulator worker threads.")]
FormatOpt = Annotated[OutputFormat, typer.Option("--format", help="Table format.")]


@app.callback()
def main(verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging on stderr.")] = False):
    logs.configure_logging(logging.DEBUG if verbose else logging.WARNING)


@contextmanager
def _guard():
    """Map library failures onto the exit-code contract."""
    try:
        yield
    except (ValidationError, ParameterDomainError, ShapeError, CapabilityError) as e:
        logger.error("invalid input: %s", e)
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_INVALID)
    except (NumericError, MGInfError, ArithmeticError) as e:
        logger.error("numeric failure: %s", e)
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_NUMERIC)


def _load(
    path: Path,
    grid: Optional[str] = None,
    n_max: Optional[int] = None,
    seed: Optional[int] = None,
    replications: Optional[int] = None,
    workers: Optional[int] = None,
) -> Scenario:
    """Scenario file plus command-line overrides, validated once."""
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ParameterDomainError(f"{path} is not valid JSON: {e}", "scenario is a JSON object")
    if grid is not None:
        raw["grid"] = GridSpec.parse(grid).model_dump()
    if n_max is not None:
        raw["n_max"] = n_max
    sim = dict(raw.get("sim", {}))
    for key, value in (("seed", seed), ("replications", replications), ("workers", workers)):
        if value is not None:
            sim[key] = value
    raw["sim"] = sim
    return Scenario.model_validate(raw)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _render(header: list[str], rows: list[list], fmt: OutputFormat) -> str:
    if fmt is OutputFormat.json:
        records = [dict(zip(header, (_jsonable(v) for v in row))) for row in rows]
        return _dumps(records)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_cell(v) for v in row] for row in rows)
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        typer.echo(text, nl=False)
        return
    with open(out, "w", newline="") as f:
        f.write(text)


def _optional(fn, *args) -> Optional[float]:
    try:
        value = fn(*args)
    except (CapabilityError, ArithmeticError):
        return None
    return value if math.isfinite(value) else None


@app.command()
def dist(scenario: ScenarioOpt, out: OutOpt = None, grid: GridOpt = None, fmt: FormatOpt = OutputFormat.csv):
    """Service law on the grid: t, G, g, h (blank where undefined)."""
    with _guard():
        sc = _load(scenario, grid=grid)
        model = sc.build_model()
        rows = []
        for t in map(float, sc.grid.times()):
            density = _optional(model.density, t) if model.density is not None else None
            rows.append([t, model.cdf(t), density, _optional(hazard, model, t)])
        _emit(_render(["t", "G", "g", "h"], rows, fmt), out)


@app.command()
def transient(
    scenario: ScenarioOpt, out: OutOpt = None, grid: GridOpt = None, n_max: NMaxOpt = None, fmt: FormatOpt = OutputFormat.csv
):
    """p₁′ₙ(t) for every grid time, each followed by its truncation mass."""
    with _guard():
        sc = _load(scenario, grid=grid, n_max=n_max)
        model = sc.build_model()
        pmfs = busy_origin_pmfs(model, sc.lam, sc.grid.times(), sc.n_max)
        rows = []
        for pmf in pmfs:
            rows.extend([pmf.t, n, float(p)] for n, p in enumerate(pmf.probs))
            rows.append([pmf.t, "truncation_mass", pmf.truncation_mass])
        _emit(_render(["t", "n", "probability"], rows, fmt), out)


@app.command()
def moments(scenario: ScenarioOpt, out: OutOpt = None, grid: GridOpt = None, fmt: FormatOpt = OutputFormat.csv):
    """μ(1′,t) and V(1′,t) on the grid."""
    with _guard():
        sc = _load(scenario, grid=grid)
        model = sc.build_model()
        times = sc.grid.times()
        mean = mean_busy_origin(model, sc.lam, times)
        variance = variance_busy_origin(model, sc.lam, times)
        rows = [[float(t), float(m), float(v)] for t, m, v in zip(times, mean.values, variance.values)]
        _emit(_render(["t", "mean", "variance"], rows, fmt), out)


@app.command("check-monotone")
def check_monotone(
    scenario: ScenarioOpt,
    kind: Annotated[Optional[Kind], typer.Option("--kind", help="Which moment to check.")] = None,
    out: OutOpt = None,
    grid: GridOpt = None,
):
    """Hazard condition for a non-decreasing mean or variance; exit 1 when it fails."""
    with _guard():
        sc = _load(scenario, grid=grid)
        model = sc.build_model()
        kind = kind.value if kind is not None else sc.kind
        checker = check_mean_monotone if kind == "mean" else check_variance_monotone
        report = checker(model, sc.lam, sc.grid.times())
        payload = {"model": model.label, "lambda": sc.lam, **report.as_dict()}
        _emit(_dumps(payload), out)
    if not report.condition_holds_everywhere:
        raise typer.Exit(code=EXIT_VIOLATED)


def _busy_law(sc: Scenario, model, form: str):
    if form == "closed":
        if not isinstance(sc.model, BetaConstantSpec):
            raise CapabilityError("the closed-form busy period needs family beta-constant; use --form series")
        return busy_law_constant_beta(sc.model.lam, sc.model.rho, sc.model.beta)
    settings = sc.busy_period
    return busy_cdf_series(
        model, sc.lam, sc.busy_beta(model), uniform_grid(settings.horizon, settings.step), settings.n_terms
    )


@app.command("busy-period")
def busy_period(
    scenario: ScenarioOpt,
    form: Annotated[Optional[BusyForm], typer.Option("--form", help="Closed form or convolution series.")] = None,
    out: OutOpt = None,
    sidecar: Annotated[Optional[Path], typer.Option("--sidecar", help="Diagnostics JSON (default: --out with .json).")] = None,
    grid: GridOpt = None,
    fmt: FormatOpt = OutputFormat.csv,
):
    """Busy-period CDF B(t) on the grid, with the atom and series diagnostics in a JSON sidecar."""
    with _guard():
        sc = _load(scenario, grid=grid)
        model = sc.build_model()
        form = form.value if form is not None else sc.busy_period.form
        law = _busy_law(sc, model, form)
        times = sc.grid.times()
        if law.grid_values is not None and times[-1] > law.grid_values.grid[-1] + 1e-12:
            raise ParameterDomainError(
                f"grid reaches t={times[-1]:g} beyond the series horizon {law.grid_values.grid[-1]:g}",
                "grid stop <= busy_period.horizon",
            )
        rows = [[float(t), law.cdf(float(t))] for t in times]
        _emit(_render(["t", "B"], rows, fmt), out)
        info = law.sidecar()
        try:
            info["mean"] = busy_mean(law)
        except NumericError as e:
            info["mean"] = None
            logger.warning("busy-period mean unavailable: %s", e)
        text = _dumps(info)
        target = sidecar if sidecar is not None else (out.with_suffix(".json") if out is not None else None)
        if target is None:
            typer.echo(text, nl=False, err=True)
        else:
            _emit(text, target)


@app.command()
def simulate(
    scenario: ScenarioOpt,
    out: OutOpt = None,
    seed: SeedOpt = None,
    replications: ReplicationsOpt = None,
    workers: WorkersOpt = None,
    grid: GridOpt = None,
    busy: Annotated[bool, typer.Option("--busy", help="Simulate busy-period lengths instead of the state.")] = False,
    fmt: FormatOpt = OutputFormat.csv,
):
    """Monte Carlo estimates with standard errors (the seed is mandatory)."""
    with _guard():
        sc = _load(scenario, grid=grid, seed=seed, replications=replications, workers=workers)
        model = sc.build_model()
        config = sc.sim_config()
        header = ["t", "statistic", "value", "std_error", "replications"]
        if busy:
            sample = simulate_busy_period(config, model)
            rows = [
                ["", name, est.value, est.std_error, est.replications]
                for name, est in (("mean", sample.mean), ("atom_fraction", sample.atom_fraction))
            ]
            _emit(_render(header, rows, fmt), out)
            return
        estimates = simulate_state(config, model)
        rows = []
        for i, t in enumerate(map(float, estimates.grid)):
            rows.append([t, "mean", estimates.mean[i].value, estimates.mean[i].std_error, config.replications])
            rows.append([t, "variance", estimates.variance[i].value, estimates.variance[i].std_error, config.replications])
            for n, est in enumerate(estimates.pmf[i]):
                rows.append([t, f"p{n}", est.value, est.std_error, config.replications])
            rows.append([t, "overflow", estimates.overflow[i].value, estimates.overflow[i].std_error, config.replications])
        _emit(_render(header, rows, fmt), out)


@app.command()
def compare(
    scenario: ScenarioOpt,
    out: OutOpt = None,
    seed: SeedOpt = None,
    replications: ReplicationsOpt = None,
    workers: WorkersOpt = None,
    grid: GridOpt = None,
):
    """Engine against simulator: z-scores per grid point, KS for busy periods; exit 1 on disagreement."""
    with _guard():
        sc = _load(scenario, grid=grid, seed=seed, replications=replications, workers=workers)
        model = sc.build_model()
        config = sc.sim_config()
        times = np.asarray(config.t_grid)
        estimates = simulate_state(config, model)
        mean = compare_curve(mean_busy_origin(model, sc.lam, times), estimates)
        printed = None
        if isinstance(sc.model, ExponentialSpec):
            alpha = sc.model.alpha
            printed = MomentCurve(
                grid=times,
                values=np.array([printed_exponential_variance(alpha, sc.lam, float(t)) for t in times]),
                kind="variance",
            )
        variance = compare_curve(variance_busy_origin(model, sc.lam, times), estimates, printed=printed)
        report = {
            "model": model.label,
            "lambda": sc.lam,
            "seed": config.seed,
            "replications": config.replications,
            "mean": mean.as_dict(),
            "variance": variance.as_dict(),
        }
        passed = mean.passed and variance.passed
        if sc.busy_period.compare:
            busy = compare_busy_period(_busy_law(sc, model, sc.busy_period.form), simulate_busy_period(config, model))
            report["busy_period"] = busy.as_dict()
            passed = passed and busy.passed
        report["passed"] = passed
        _emit(_dumps(report), out)
    if not passed:
        raise typer.Exit(code=EXIT_VIOLATED)


if __name__ == "__main__":
    app()
