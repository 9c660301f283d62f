"""Experiment configuration and report models (JSON-serializable)."""

from __future__ import annotations

from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import processes as P
from . import scoring as S
from .rng import MAX_SEED


class MAProcess(BaseModel):
    kind: Literal["ma"] = "ma"
    t: int = Field(0, ge=0)
    f: Literal["sin", "zero", "linear"] = "sin"
    covariate: Literal["uniform", "gaussian"] = "uniform"


class MarkovProcess(BaseModel):
    kind: Literal["markov"] = "markov"
    transition: list[list[float]]
    initial: Union[list[float], Literal["stationary"]] = "stationary"


class CyclicProcess(BaseModel):
    kind: Literal["cyclic"] = "cyclic"
    K: int = Field(..., ge=1)
    b: float = Field(..., ge=0, le=1)


ProcessConfig = Annotated[Union[MAProcess, MarkovProcess, CyclicProcess], Field(discriminator="kind")]


class ResidualScoreConfig(BaseModel):
    """Pretrained |y - f(x)|; ``f`` defaults to the process's true regression function."""

    kind: Literal["residual"] = "residual"
    f: Literal["sin", "zero", "linear"] | None = None


class RankScoreConfig(BaseModel):
    kind: Literal["rank"] = "rank"


class LagMatchScoreConfig(BaseModel):
    """Pretrained finite score y + 0.5 * #{context points equal to z}."""

    kind: Literal["lag_match"] = "lag_match"
    memory: int = Field(1, ge=0)


class ARScoreConfig(BaseModel):
    kind: Literal["ar"] = "ar"
    memory: int = Field(0, ge=0)


class FrequencyScoreConfig(BaseModel):
    kind: Literal["frequency"] = "frequency"
    memory: int = Field(0, ge=0)


ScoreConfig = Annotated[
    Union[ResidualScoreConfig, RankScoreConfig, LagMatchScoreConfig, ARScoreConfig, FrequencyScoreConfig],
    Field(discriminator="kind"),
]

PRETRAINED_SCORES = ("residual", "rank", "lag_match")
TRAINED_SCORES = ("ar", "frequency")


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: ProcessConfig
    score: ScoreConfig = Field(default_factory=ResidualScoreConfig)
    mode: Literal["pretrained", "split"] = "pretrained"
    n: int = Field(..., ge=1)
    n0: int | None = None
    alpha: float = Field(0.1, gt=0, lt=1)
    trials: int = Field(10_000, ge=1)
    master_seed: int = Field(0, ge=0, le=MAX_SEED)
    jitter: bool = False

    @model_validator(mode="after")
    def _compatible(self):
        if self.mode == "split" and self.score.kind not in TRAINED_SCORES:
            raise ValueError(f"split mode needs a trained score ({', '.join(TRAINED_SCORES)})")
        if self.mode == "pretrained" and self.score.kind not in PRETRAINED_SCORES:
            raise ValueError(f"pretrained mode needs a pretrained score ({', '.join(PRETRAINED_SCORES)})")
        if self.mode == "split":
            n0 = self.split_point
            if not 1 <= n0 < self.n:
                raise ValueError(f"n0={n0} must satisfy 1 <= n0 < n")
            if self.n - n0 <= self.memory:
                raise ValueError("calibration block too short")
        elif self.n <= self.memory:
            raise ValueError("no calibration scores: n <= L")
        if self.score.kind == "residual" and self.process.kind != "ma" and self.score.f is None:
            raise ValueError("residual score on a finite process needs an explicit f")
        return self

    @property
    def memory(self) -> int:
        return getattr(self.score, "memory", 0)

    @property
    def split_point(self) -> int:
        return self.n // 2 if self.n0 is None else self.n0


# --------------------------------------------------------------------------
# reports


class BoundCheck(BaseModel):
    name: str
    kind: Literal["lower", "upper"]
    value: float
    satisfied: bool
    minimizing_tau: int
    minimizing_tau_star: int = -1
    source: str = ""


class CoverageReport(BaseModel):
    empirical_coverage: float = Field(..., ge=0, le=1)
    trials: int
    standard_error: float
    config: ExperimentConfig
    bounds: list[BoundCheck] = []
    wall_time: float = 0.0
    estimator: str = "indicator"
    notes: list[str] = []


# --------------------------------------------------------------------------
# config -> core objects


def build_process(cfg: ExperimentConfig):
    p = cfg.process
    if p.kind == "ma":
        return P.MAProcessSpec(
            t=p.t, n=cfg.n, f=P.REGRESSION_FUNCTIONS[p.f], covariate_law=P.COVARIATE_LAWS[p.covariate]
        )
    if p.kind == "markov":
        T = np.asarray(p.transition, dtype=float)
        init = P.stationary_distribution(T) if p.initial == "stationary" else np.asarray(p.initial, dtype=float)
        return P.FiniteMarkovSpec(T, init, cfg.n)
    return P.CyclicMixtureSpec(K=p.K, b=p.b, n=cfg.n)


def build_score(cfg: ExperimentConfig):
    """ScoreFunction (pretrained mode) or training algorithm (split mode)."""
    s = cfg.score
    if s.kind == "residual":
        name = s.f if s.f is not None else cfg.process.f
        return S.residual_score_pretrained(P.REGRESSION_FUNCTIONS[name])
    if s.kind == "rank":
        K = cfg.process.K if cfg.process.kind == "cyclic" else len(cfg.process.transition)
        return S.rank_score([(k, k) for k in range(K)])
    if s.kind == "lag_match":
        return lag_match_score(s.memory)
    if s.kind == "ar":
        return S.LeastSquaresAR(s.memory)
    return S.FrequencyAlgorithm(s.memory)


class LagMatchScore(S.ScoreFunction):
    def __init__(self, memory: int):
        self.memory = memory

    def score(self, z, context=()):
        return float(z.y) + 0.5 * sum(1 for c in context if c == z)


def lag_match_score(memory: int) -> LagMatchScore:
    return LagMatchScore(memory)
