"""
Scenario records: one JSON document describing a model, an arrival rate, a
time grid and the simulator/busy-period settings. Field validators run the
model constructors' domain checks, so a bad scenario fails at load time with
the violated constraint in the message.
"""

import json
import logging
import math
from pathlib import Path
from typing import Annotated, Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.mginf.errors import CapabilityError, ParameterDomainError
from src.mginf.mc_simulator import SimConfig
from src.mginf.numerics import make_grid
from src.mginf.service_models import (
    BetaConstantFamilyParams,
    ImplicitVarianceParams,
    PiecewiseBeta,
    ServiceModel,
    beta_upper_bound,
    make_beta_constant_family,
    make_beta_lambda_variance_model,
    make_deterministic,
    make_exponential,
    make_implicit_constant_variance,
    make_implicit_variance_family,
    make_riccati_family,
    make_trivial_model,
    make_zero_beta_model,
)

logger = logging.getLogger(__name__)


class _Spec(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    @property
    def rate(self) -> Optional[float]:
        return getattr(self, "lam", None)


class DeterministicSpec(_Spec):
    family: Literal["deterministic"]
    alpha: float = Field(gt=0)

    def build(self) -> ServiceModel:
        return make_deterministic(self.alpha)


class ExponentialSpec(_Spec):
    family: Literal["exponential"]
    alpha: float = Field(gt=0)

    def build(self) -> ServiceModel:
        return make_exponential(self.alpha)


class TrivialSpec(_Spec):
    family: Literal["trivial"]

    def build(self) -> ServiceModel:
        return make_trivial_model()


class ZeroBetaSpec(_Spec):
    family: Literal["zero-beta"]
    lam: float = Field(alias="lambda", gt=0)
    g0: float = Field(ge=0, lt=1)

    def build(self) -> ServiceModel:
        return make_zero_beta_model(self.lam, self.g0)


class BetaConstantSpec(_Spec):
    family: Literal["beta-constant"]
    lam: float = Field(alias="lambda", gt=0)
    rho: float = Field(gt=0)
    beta: float

    @model_validator(mode="after")
    def _in_band(self):
        BetaConstantFamilyParams(self.lam, self.rho, self.beta)
        return self

    def build(self) -> ServiceModel:
        return make_beta_constant_family(BetaConstantFamilyParams(self.lam, self.rho, self.beta))


class RiccatiSpec(_Spec):
    family: Literal["riccati"]
    lam: float = Field(alias="lambda", gt=0)
    rho: float = Field(gt=0)
    # piecewise-constant beta: beta[i] holds on [breaks[i-1], breaks[i])
    beta: list[float] = Field(min_length=1)
    breaks: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _in_band(self):
        low, high = self.schedule().average_extremes()
        upper = beta_upper_bound(self.lam, self.rho)
        if low < -self.lam or high > upper * (1 + 1e-12):
            raise ParameterDomainError(
                f"running average of beta spans [{low:g}, {high:g}], outside [{-self.lam:g}, {upper:.12g}]",
                "-lambda <= (1/t)∫beta <= lambda/(e^rho - 1)",
            )
        return self

    def schedule(self) -> PiecewiseBeta:
        return PiecewiseBeta(tuple(self.beta), tuple(self.breaks))

    def build(self) -> ServiceModel:
        return make_riccati_family(self.lam, self.rho, self.schedule())


class ImplicitConstantVarianceSpec(_Spec):
    family: Literal["implicit-constant-variance"]
    lam: float = Field(alias="lambda", gt=0)
    g0: float

    @model_validator(mode="after")
    def _in_domain(self):
        ImplicitVarianceParams(self.lam, self.g0, 0.0)
        return self

    def build(self) -> ServiceModel:
        return make_implicit_constant_variance(self.lam, self.g0)


class BetaLambdaVarianceSpec(_Spec):
    family: Literal["beta-lambda-variance"]
    lam: float = Field(alias="lambda", gt=0)

    def build(self) -> ServiceModel:
        return make_beta_lambda_variance_model(self.lam)


class ImplicitVarianceSpec(_Spec):
    family: Literal["implicit-variance"]
    lam: float = Field(alias="lambda", gt=0)
    g0: float
    beta: float

    @model_validator(mode="after")
    def _in_domain(self):
        if self.beta == 0:
            raise ParameterDomainError(
                "beta = 0 is the constant-variance law; use family implicit-constant-variance", "beta != 0"
            )
        ImplicitVarianceParams(self.lam, self.g0, self.beta)
        return self

    def build(self) -> ServiceModel:
        return make_implicit_variance_family(ImplicitVarianceParams(self.lam, self.g0, self.beta))


ModelSpec = Annotated[
    Union[
        DeterministicSpec,
        ExponentialSpec,
        TrivialSpec,
        ZeroBetaSpec,
        BetaConstantSpec,
        RiccatiSpec,
        ImplicitConstantVarianceSpec,
        BetaLambdaVarianceSpec,
        ImplicitVarianceSpec,
    ],
    Field(discriminator="family"),
]


class GridSpec(BaseModel):
    start: float = Field(default=0.0, ge=0)
    stop: float = Field(default=10.0, ge=0)
    points: int = Field(default=11, ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if self.stop < self.start or (self.points > 1 and self.stop == self.start):
            raise ValueError("grid needs start <= stop, and stop > start when points > 1")
        return self

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """'start:stop:points', as given on the command line."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterDomainError(f"grid must look like start:stop:points, got {text!r}", "start:stop:points")
        try:
            start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ParameterDomainError(
                f"grid must look like start:stop:points with numeric start/stop and integer points, got {text!r}",
                "start:stop:points",
            ) from None
        return cls(start=start, stop=stop, points=points)

    def times(self) -> np.ndarray:
        return make_grid(self.start, self.stop, self.points)


class SimSettings(BaseModel):
    replications: int = Field(default=10_000, ge=1)
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)
    horizon: Optional[float] = Field(default=None, gt=0)
    n_max: int = Field(default=40, ge=0)


class BusyPeriodSettings(BaseModel):
    form: Literal["closed", "series"] = "closed"
    step: float = Field(default=0.005, gt=0)
    horizon: float = Field(default=10.0, gt=0)
    n_terms: int = Field(default=400, ge=1)
    # also compare simulated busy periods in `compare`
    compare: bool = False


class Scenario(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    model: ModelSpec
    lam: Optional[float] = Field(default=None, alias="lambda", gt=0)
    grid: GridSpec = Field(default_factory=GridSpec)
    n_max: Optional[int] = Field(default=None, ge=0)
    sim: SimSettings = Field(default_factory=SimSettings)
    busy_period: BusyPeriodSettings = Field(default_factory=BusyPeriodSettings)
    kind: Literal["mean", "variance"] = "mean"

    @model_validator(mode="after")
    def _resolve_rate(self):
        family_rate = self.model.rate
        if self.lam is None:
            if family_rate is None:
                raise ParameterDomainError(f"family {self.model.family} needs a top-level lambda", "lambda > 0")
            self.lam = family_rate
        elif family_rate is not None and not math.isclose(family_rate, self.lam, rel_tol=1e-12, abs_tol=0.0):
            raise ParameterDomainError(
                f"scenario lambda {self.lam:g} differs from the {self.model.family} model's lambda {family_rate:g}",
                "top-level lambda equals model.lambda",
            )
        return self

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Scenario":
        return cls.model_validate(json.loads(Path(path).read_text()))

    def build_model(self) -> ServiceModel:
        model = self.model.build()
        logger.info("built %s", model.label)
        return model

    def sim_config(self, grid: Optional[np.ndarray] = None) -> SimConfig:
        if self.sim.seed is None:
            raise ParameterDomainError("simulation needs an explicit seed (--seed)", "seed given")
        grid = self.grid.times() if grid is None else grid
        horizon = self.sim.horizon if self.sim.horizon is not None else float(max(grid[-1], 1e-9))
        return SimConfig(
            lam=self.lam,
            replications=self.sim.replications,
            seed=self.sim.seed,
            horizon=horizon,
            t_grid=tuple(float(t) for t in grid),
            workers=self.sim.workers,
            n_max=self.sim.n_max,
        )

    def busy_beta(self, model: ServiceModel) -> Union[float, PiecewiseBeta, Callable[[float], float]]:
        """β(t) of the Riccati family the model belongs to, for the busy-period series."""
        spec = self.model
        if isinstance(spec, BetaConstantSpec):
            return spec.beta
        if isinstance(spec, RiccatiSpec):
            return spec.schedule()
        if isinstance(spec, TrivialSpec):
            return -self.lam
        raise CapabilityError(
            f"family {spec.family} is not a member of the constant/varying-beta Riccati family; "
            "the busy-period law is only available for beta-constant, riccati and trivial"
        )
