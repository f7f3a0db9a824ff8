"""
HTTP surface for the transient M|G|∞ engine.

Each endpoint takes a scenario document as its JSON body (the same record the
CLI reads from --scenario) and returns the rows the matching CLI command
prints. Invalid scenarios are rejected with 422, numeric failures with 500.
"""

import logging
import math
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from src.mginf import logs
from src.mginf.busy_period import busy_cdf_series, busy_law_constant_beta, busy_mean
from src.mginf.config import get_settings
from src.mginf.errors import CapabilityError, MGInfError, NumericError, ParameterDomainError, ShapeError
from src.mginf.mc_simulator import simulate_state
from src.mginf.monotonicity import check_mean_monotone, check_variance_monotone
from src.mginf.numerics import uniform_grid
from src.mginf.scenario import BetaConstantSpec, Scenario
from src.mginf.service_models import hazard
from src.mginf.transient_engine import busy_origin_pmfs, mean_busy_origin, variance_busy_origin

logger = logging.getLogger(__name__)

settings = get_settings()
logs.configure_logging(settings.log_level)

app = FastAPI(title="mginf")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _fail(e: Exception) -> HTTPException:
    if isinstance(e, (ParameterDomainError, ShapeError, CapabilityError)):
        return HTTPException(status_code=422, detail=str(e))
    logger.error("numeric failure: %s", e)
    return HTTPException(status_code=500, detail=str(e))


def _finite(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


@app.get("/")
def root():
    return {"status": "ok"}


@app.post("/dist")
def dist(scenario: Scenario):
    try:
        model = scenario.build_model()
        rows = []
        for t in map(float, scenario.grid.times()):
            g = _finite(model.density(t)) if model.density is not None else None
            try:
                h = _finite(hazard(model, t))
            except (CapabilityError, ArithmeticError):
                h = None
            rows.append({"t": t, "G": model.cdf(t), "g": g, "h": h})
        return rows
    except MGInfError as e:
        raise _fail(e)


@app.post("/transient")
def transient(scenario: Scenario):
    try:
        model = scenario.build_model()
        pmfs = busy_origin_pmfs(model, scenario.lam, scenario.grid.times(), scenario.n_max)
    except MGInfError as e:
        raise _fail(e)
    return [{"t": p.t, "probs": p.probs.tolist(), "truncation_mass": p.truncation_mass} for p in pmfs]


@app.post("/moments")
def moments(scenario: Scenario):
    try:
        model = scenario.build_model()
        times = scenario.grid.times()
        mean = mean_busy_origin(model, scenario.lam, times)
        variance = variance_busy_origin(model, scenario.lam, times)
    except MGInfError as e:
        raise _fail(e)
    return [
        {"t": float(t), "mean": float(m), "variance": float(v)}
        for t, m, v in zip(times, mean.values, variance.values)
    ]


@app.post("/check-monotone")
def check_monotone(scenario: Scenario, kind: Optional[Literal["mean", "variance"]] = None):
    try:
        model = scenario.build_model()
        kind = kind or scenario.kind
        checker = check_mean_monotone if kind == "mean" else check_variance_monotone
        report = checker(model, scenario.lam, scenario.grid.times())
    except MGInfError as e:
        raise _fail(e)
    return {"model": model.label, "lambda": scenario.lam, **report.as_dict()}


@app.post("/busy-period")
def busy_period(scenario: Scenario, form: Optional[Literal["closed", "series"]] = None):
    form = form or scenario.busy_period.form
    try:
        model = scenario.build_model()
        if form == "closed":
            if not isinstance(scenario.model, BetaConstantSpec):
                raise CapabilityError("the closed-form busy period needs family beta-constant")
            spec = scenario.model
            law = busy_law_constant_beta(spec.lam, spec.rho, spec.beta)
        else:
            options = scenario.busy_period
            grid = uniform_grid(options.horizon, options.step)
            law = busy_cdf_series(model, scenario.lam, scenario.busy_beta(model), grid, options.n_terms)
        rows = [{"t": float(t), "B": law.cdf(float(t))} for t in scenario.grid.times()]
        sidecar = law.sidecar()
        try:
            sidecar["mean"] = busy_mean(law)
        except NumericError:
            sidecar["mean"] = None
    except MGInfError as e:
        raise _fail(e)
    return {"rows": rows, "sidecar": sidecar}


@app.post("/simulate")
def simulate(scenario: Scenario):
    if scenario.sim.replications > settings.max_replications:
        raise HTTPException(
            status_code=422,
            detail=f"replications {scenario.sim.replications} exceed the server cap {settings.max_replications}",
        )
    try:
        model = scenario.build_model()
        config = scenario.sim_config().model_copy(update={"workers": min(scenario.sim.workers, settings.max_workers)})
        estimates = simulate_state(config, model)
    except MGInfError as e:
        raise _fail(e)
    return [
        {
            "t": float(t),
            "mean": {"value": m.value, "std_error": m.std_error},
            "variance": {"value": v.value, "std_error": v.std_error},
            "pmf": [p.value for p in pmf],
        }
        for t, m, v, pmf in zip(estimates.grid, estimates.mean, estimates.variance, estimates.pmf)
    ]
