"""Pydantic request/response models for the training service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SyntheticSpec(BaseModel):
    kind: str = Field(pattern="^(blobs|xor)$")
    n_samples: int = Field(default=1000, ge=4)
    n_features: int = Field(default=2, ge=1)
    classes: int = Field(default=2, ge=2)
    separation: float = 6.0
    noise: float = 0.2


class TrainRequest(BaseModel):
    synthetic: SyntheticSpec
    arch: list[int] = Field(min_length=2)
    activation: str = Field(default="relu", pattern="^(relu|hardsig)$")
    gamma: float = Field(default=10.0, gt=0)
    beta: float = Field(default=1.0, gt=0)
    warmup_iters: int = Field(default=10, ge=0)
    train_iters: int = Field(default=100, ge=0)
    workers: int = Field(default=1, ge=1)
    seed: int = 0
    test_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    stop_accuracy: float | None = None


class MetricsRowModel(BaseModel):
    iteration: int
    wall_seconds: float
    objective: float
    train_accuracy: float
    test_accuracy: float | None = None


class RunStatus(BaseModel):
    run_id: str
    state: str  # pending | running | finished | failed
    method: str = "admm"
    error: str | None = None
    iterations_done: int = 0
    final: MetricsRowModel | None = None


class RunList(BaseModel):
    runs: list[RunStatus]


class MetricsResponse(BaseModel):
    run_id: str
    history: list[MetricsRowModel]


class PredictRequest(BaseModel):
    # samples as rows of feature values; transposed internally to columns
    samples: list[list[float]] = Field(min_length=1)


class PredictResponse(BaseModel):
    run_id: str
    classes: list[int]
