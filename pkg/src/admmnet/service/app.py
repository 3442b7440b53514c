"""HTTP front end for long-running training jobs.

Runs are submitted with ``POST /runs`` and executed on a background
thread; status, full metric histories and predictions from the fitted
weights are served while and after the run executes.  State is held in
process memory (one service instance per experiment host).
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import data as data_mod
from .. import distributed, network
from ..activations import HARD_SIGMOID, RELU
from ..metrics import MetricsRow
from ..network import Architecture, Hyperparams
from .schemas import (
    MetricsResponse,
    MetricsRowModel,
    PredictRequest,
    PredictResponse,
    RunList,
    RunStatus,
    TrainRequest,
)


@dataclass
class _Run:
    run_id: str
    request: TrainRequest
    state: str = "pending"
    error: str | None = None
    history: list[MetricsRow] = field(default_factory=list)
    weights: list | None = None
    arch: Architecture | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _row_model(row: MetricsRow) -> MetricsRowModel:
    return MetricsRowModel(
        iteration=row.iteration,
        wall_seconds=row.wall_seconds,
        objective=row.objective,
        train_accuracy=row.train_accuracy,
        test_accuracy=row.test_accuracy,
    )


def _status(run: _Run) -> RunStatus:
    with run.lock:
        return RunStatus(
            run_id=run.run_id,
            state=run.state,
            error=run.error,
            iterations_done=len(run.history),
            final=_row_model(run.history[-1]) if run.history else None,
        )


def _execute(run: _Run) -> None:
    req = run.request
    try:
        spec = req.synthetic
        if spec.kind == "blobs":
            full = data_mod.gen_blobs(
                spec.n_samples, spec.n_features, spec.classes, spec.separation,
                req.seed,
            )
        else:
            full = data_mod.gen_xor(spec.n_samples, spec.noise, req.seed)
        if req.test_fraction > 0:
            n_test = max(1, int(round(req.test_fraction * full.n_samples)))
            train_data, test_data = data_mod.split(full, n_test, req.seed + 1)
        else:
            train_data, test_data = full, None
        act = RELU if req.activation == "relu" else HARD_SIGMOID
        arch = Architecture(tuple(req.arch), act)
        hp = Hyperparams.for_architecture(
            arch, beta=req.beta, gamma=req.gamma, warmup_iters=req.warmup_iters,
            train_iters=req.train_iters, seed=req.seed,
        )
        with run.lock:
            run.state = "running"
            run.arch = arch
        if req.workers == 1:
            result = network.train(
                train_data, arch, hp, test_data=test_data,
                stop_accuracy=req.stop_accuracy,
            )
        else:
            result = distributed.distributed_train(
                train_data, arch, hp, req.workers, test_data=test_data,
                stop_accuracy=req.stop_accuracy,
            )
        with run.lock:
            run.history = result.history
            run.weights = result.weights
            run.state = "finished"
    except Exception as exc:
        with run.lock:
            run.state = "failed"
            run.error = str(exc)


def create_app() -> FastAPI:
    app = FastAPI(title="admmnet", version="0.1.0")
    runs: dict[str, _Run] = {}
    registry_lock = threading.Lock()

    def _get(run_id: str) -> _Run:
        with registry_lock:
            run = runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail=f"no run {run_id}")
        return run

    @app.post("/runs", response_model=RunStatus, status_code=202)
    def submit(request: TrainRequest) -> RunStatus:
        classes = request.synthetic.classes if request.synthetic.kind == "blobs" else 2
        if request.arch[-1] != classes:
            raise HTTPException(
                status_code=422,
                detail="arch output width must equal the class count",
            )
        run = _Run(run_id=uuid.uuid4().hex[:12], request=request)
        with registry_lock:
            runs[run.run_id] = run
        threading.Thread(target=_execute, args=(run,), daemon=True).start()
        return _status(run)

    @app.get("/runs", response_model=RunList)
    def list_runs() -> RunList:
        with registry_lock:
            snapshot = list(runs.values())
        return RunList(runs=[_status(r) for r in snapshot])

    @app.get("/runs/{run_id}", response_model=RunStatus)
    def get_run(run_id: str) -> RunStatus:
        return _status(_get(run_id))

    @app.get("/runs/{run_id}/metrics", response_model=MetricsResponse)
    def get_metrics(run_id: str) -> MetricsResponse:
        run = _get(run_id)
        with run.lock:
            rows = [_row_model(r) for r in run.history]
        return MetricsResponse(run_id=run_id, history=rows)

    @app.post("/runs/{run_id}/predict", response_model=PredictResponse)
    def predict(run_id: str, request: PredictRequest) -> PredictResponse:
        run = _get(run_id)
        with run.lock:
            weights, arch, state = run.weights, run.arch, run.state
        if state != "finished" or weights is None or arch is None:
            raise HTTPException(
                status_code=409, detail=f"run {run_id} is {state}, not finished"
            )
        X = np.asarray(request.samples, dtype=np.float64).T
        if X.shape[0] != arch.layer_dims[0]:
            raise HTTPException(
                status_code=422,
                detail=f"expected {arch.layer_dims[0]} features, got {X.shape[0]}",
            )
        classes = network.predict(weights, X, arch)
        return PredictResponse(run_id=run_id, classes=[int(c) for c in classes])

    return app


app = create_app()
