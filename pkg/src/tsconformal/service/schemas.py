"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..config import CoverageReport, ExperimentConfig, MarkovProcess, CyclicProcess, ScoreConfig
from ..rng import MAX_SEED
from ..simulate import DEFAULT_NS, DEFAULT_TS


class CoverageSimRequest(ExperimentConfig):
    workers: int = Field(1, ge=1)


class ExactCoverageRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: MarkovProcess | CyclicProcess = Field(..., discriminator="kind")
    score: ScoreConfig
    mode: Literal["pretrained", "split"] = "pretrained"
    n: int = Field(..., ge=1)
    n0: int | None = None
    alpha: float = Field(0.1, gt=0, lt=1)
    jitter: bool = False
    method: Literal["rank", "event"] = "rank"

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig(
            process=self.process,
            score=self.score,
            mode=self.mode,
            n=self.n,
            n0=self.n0,
            alpha=self.alpha,
            jitter=self.jitter,
        )


class ExactCoverageResponse(BaseModel):
    coverage: float
    method: str
    sequences: int


class SwitchExactRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: MarkovProcess | CyclicProcess = Field(..., discriminator="kind")
    n: int = Field(..., ge=1)
    score: ScoreConfig | None = None
    taus: list[int] | None = None


class PsiRow(BaseModel):
    k: int
    tau: int
    psi: float


class BetaRow(BaseModel):
    tau: int
    beta: float | None
    psi_bar: float | None
    beta_bound: float | None = None


class SwitchExactResponse(BaseModel):
    n: int
    law: Literal["data", "scores"]
    provenance: str
    psi: list[PsiRow]
    lags: list[BetaRow]
    notes: list[str] = []


class BoundsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bound: Literal["thm1", "cor1", "cor1_psi", "thm3", "thm4", "cor2", "thm2"]
    alpha: float = Field(0.1, gt=0, lt=1)
    n: int = Field(..., ge=1, description="n, or n1 for the split bounds")
    L: int = Field(0, ge=0)
    table: dict[str, float] | None = Field(
        None, description="tau -> value; keys 'tau,tau_star' for thm4"
    )
    ma_t: int | None = Field(None, ge=0, description="use the analytic MA(t) beta table")
    conservative: bool = False
    b: float | None = Field(None, ge=0, le=1)
    K: int | None = Field(None, ge=1)


class CandidateRow(BaseModel):
    tau: int
    tau_star: int
    gap: float
    coefficient: float
    total: float


class BoundsResponse(BaseModel):
    name: str
    kind: str
    bound_value: float
    minimizing_tau: int
    minimizing_tau_star: int
    vacuous: bool
    components: list[CandidateRow] = []


class Figure1Request(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ts: list[int] = list(DEFAULT_TS)
    ns: list[int] = list(DEFAULT_NS)
    alpha: float = Field(0.1, gt=0, lt=1)
    trials: int = Field(100_000, ge=1)
    seed: int = Field(0, ge=0, le=MAX_SEED)
    estimator: Literal["indicator", "control"] = "indicator"
    workers: int = Field(1, ge=1)


class Figure1Row(BaseModel):
    t: int
    n: int
    coverage: float
    stderr: float
    lower_bound: float
    upper_bound: float


class Figure1Response(BaseModel):
    rows: list[Figure1Row]


class Thm2Request(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(0.1, gt=0, lt=1)
    n: int = Field(9, ge=1)
    b: float = Field(1.0, ge=0, le=1)
    K: int = Field(10_000, ge=1)
    trials: int = Field(1_000_000, ge=1)
    seed: int = Field(0, ge=0, le=MAX_SEED)
    jitter: bool = False
    workers: int = Field(1, ge=1)


class VerifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(0, ge=0, le=MAX_SEED)
    scale: Literal["quick", "full"] = "quick"
    criteria: list[int] | None = None
    workers: int = Field(1, ge=1)


class CheckRow(BaseModel):
    name: str
    passed: bool
    summary: str
    seconds: float


class VerifyResponse(BaseModel):
    passed: bool
    seed: int
    scale: str
    checks: list[CheckRow]


class PredictRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    csv: str = Field(..., description="'x,y' history; the last row's x is the query point")
    alpha: float = Field(0.1, gt=0, lt=1)
    L: int = Field(0, ge=0)
    n0: int | None = Field(None, ge=1)
    f: Literal["sin", "zero", "linear"] | None = None
    beta: dict[int, float] | None = None


class PredictResponse(BaseModel):
    lo: float | None
    hi: float | None
    unbounded: bool
    empty: bool
    threshold: float | None
    m_cal: int
    level: float
    alpha: float
    mode: str
    L: int
    n0: int
    x_next: float
    coverage_lower_bound: float | None = None
    bound_name: str | None = None


__all__ = [
    "CoverageReport",
    "CoverageSimRequest",
    "ExactCoverageRequest",
    "ExactCoverageResponse",
    "SwitchExactRequest",
    "SwitchExactResponse",
    "BoundsRequest",
    "BoundsResponse",
    "Figure1Request",
    "Figure1Response",
    "Thm2Request",
    "VerifyRequest",
    "VerifyResponse",
    "PredictRequest",
    "PredictResponse",
]
