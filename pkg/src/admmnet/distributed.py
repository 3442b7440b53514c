"""Data-parallel training: sample-sharded workers, Gram-sum reductions.

Workers hold contiguous column blocks of the training variables and run
every activation, output and multiplier update locally.  Only the weight
update needs communication: each worker sends the small Gram products
``z_l a_{l-1}^T`` and ``a_{l-1} a_{l-1}^T`` (whose sizes depend on layer
widths, never on shard sample counts), the coordinator sums them in
worker order, solves, and broadcasts the new weight matrix.

Wire format (all little-endian, documented byte-exactly in README.md):

    frame   := length:u32  header  payload
    header  := iteration:u32  layer:u16  kind:u8  worker:u16
    payload := row-major float64 values

Kinds: 0 control (barrier / stop), 1 Gram contribution (C then G,
concatenated flat), 2 weight broadcast, 3 per-worker metrics triplet
(objective part, correct count, sample count).
"""

from __future__ import annotations

import queue
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg, network
from .data import Dataset
from .metrics import MetricsRow
from .network import Architecture, Hyperparams, NetworkState, TrainResult

HEADER = struct.Struct("<IHBH")
LENGTH = struct.Struct("<I")

KIND_CONTROL = 0
KIND_GRAM = 1
KIND_WEIGHTS = 2
KIND_METRICS = 3

STOP_ITERATION = 0xFFFFFFFF


class ProtocolError(RuntimeError):
    """A message violated the reduce/broadcast protocol."""


class WorkerFailure(RuntimeError):
    """A worker aborted; carries the worker id and original error."""

    def __init__(self, worker_id: int, cause: BaseException):
        self.worker_id = worker_id
        self.cause = cause
        super().__init__(f"worker {worker_id} failed: {cause!r}")


@dataclass(frozen=True)
class WireMessage:
    iteration: int
    layer: int
    kind: int
    worker: int
    payload: np.ndarray  # flat float64


def encode_frame(msg: WireMessage) -> bytes:
    payload = np.ascontiguousarray(msg.payload, dtype="<f8").tobytes()
    body = HEADER.pack(msg.iteration, msg.layer, msg.kind, msg.worker) + payload
    return LENGTH.pack(len(body)) + body


def decode_frame(frame: bytes) -> WireMessage:
    (length,) = LENGTH.unpack_from(frame, 0)
    body = frame[LENGTH.size:]
    if len(body) != length:
        raise ProtocolError(f"frame length {len(body)} != declared {length}")
    iteration, layer, kind, worker = HEADER.unpack_from(body, 0)
    payload = np.frombuffer(body, dtype="<f8", offset=HEADER.size)
    return WireMessage(iteration, layer, kind, worker, payload)


@dataclass(frozen=True)
class GramContribution:
    """One worker's partial sums for a layer's weight update."""

    iteration: int
    layer: int
    worker_id: int
    zc: np.ndarray  # z_l^n (a_{l-1}^n)^T, shape d_l x d_{l-1}
    gram: np.ndarray  # a_{l-1}^n (a_{l-1}^n)^T, shape d_{l-1} x d_{l-1}


def shard_bounds(n_samples: int, n_workers: int) -> list[tuple[int, int]]:
    """Contiguous column ranges; sizes differ by at most 1, remainder first."""
    if n_workers < 1:
        raise ValueError("need at least one worker")
    if n_workers > n_samples:
        raise ValueError(f"{n_workers} workers exceed {n_samples} samples")
    base, extra = divmod(n_samples, n_workers)
    bounds = []
    start = 0
    for i in range(n_workers):
        size = base + (1 if i < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def shard_dataset(data: Dataset, n_workers: int) -> list[Dataset]:
    """Deterministic contiguous column partition of the dataset."""
    return [
        Dataset(data.features[:, lo:hi], data.labels[:, lo:hi])
        for lo, hi in shard_bounds(data.n_samples, n_workers)
    ]


def shard_state(state: NetworkState, n_workers: int) -> list[NetworkState]:
    """Slice a freshly initialized full state into per-worker column blocks.

    The coordinator draws all Gaussians in single-node column order, so a
    run with any worker count reproduces the single-node initialization.
    """
    bounds = shard_bounds(state.n_samples, n_workers)
    shards = []
    for lo, hi in bounds:
        shards.append(
            NetworkState(
                arch=state.arch,
                labels=state.labels[:, lo:hi],
                a=[a[:, lo:hi].copy() for a in state.a],
                z=[z[:, lo:hi].copy() for z in state.z],
                weights=[None] * state.arch.n_layers,
                lam=state.lam[:, lo:hi].copy(),
            )
        )
    return shards


def local_gram_contribution(
    shard: NetworkState, l: int, iteration: int = 0, worker_id: int = 0
) -> GramContribution:
    """The shard's ``(z_l a_{l-1}^T, a_{l-1} a_{l-1}^T)`` partial sums."""
    a_prev = shard.a[l - 1]
    z_l = shard.z[l - 1]
    if a_prev.shape[1] == 0:
        d_out, d_in = z_l.shape[0], a_prev.shape[0]
        return GramContribution(
            iteration, l, worker_id,
            np.zeros((d_out, d_in)), np.zeros((d_in, d_in)),
        )
    return GramContribution(
        iteration, l, worker_id,
        linalg.cross_gram(z_l, a_prev), linalg.gram(a_prev),
    )


def reduce_contributions(
    contribs: list[GramContribution], expected_workers: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Sum partial Gram products in worker-id order (deterministic)."""
    if not contribs:
        raise ProtocolError("no contributions to reduce")
    layer = contribs[0].layer
    iteration = contribs[0].iteration
    for c in contribs:
        if c.layer != layer or c.iteration != iteration:
            raise ProtocolError(
                f"stale contribution from worker {c.worker_id}: "
                f"(iter {c.iteration}, layer {c.layer}) != (iter {iteration}, layer {layer})"
            )
    ordered = sorted(contribs, key=lambda c: c.worker_id)
    ids = [c.worker_id for c in ordered]
    if expected_workers is not None:
        missing = sorted(set(range(expected_workers)) - set(ids))
        if missing:
            raise ProtocolError(f"missing contribution from worker {missing[0]}")
    if len(set(ids)) != len(ids):
        raise ProtocolError("duplicate worker contribution")
    zc = ordered[0].zc.copy()
    gram = ordered[0].gram.copy()
    for c in ordered[1:]:
        zc += c.zc
        gram += c.gram
    return zc, gram


def reduce_and_solve(
    contribs: list[GramContribution],
    ridge: float | None = None,
    expected_workers: int | None = None,
) -> np.ndarray:
    """Coordinator side of the weight update: sum, regularize, solve."""
    zc, gram = reduce_contributions(contribs, expected_workers)
    if ridge is None:
        ridge = linalg.default_ridge(gram)
    factor = linalg.spd_factor_with_retry(gram, ridge)
    return linalg.solve_right(zc, factor)


@dataclass
class MessageRecord:
    """Book-keeping entry for one frame crossing a worker boundary."""

    direction: str  # "to_coordinator" or "to_worker"
    iteration: int
    layer: int
    kind: int
    worker: int
    payload_bytes: int
    frame_bytes: int


@dataclass
class DistributedResult(TrainResult):
    message_log: list[MessageRecord] = field(default_factory=list)


def _worker_main(
    worker_id: int,
    shard: NetworkState,
    hp: Hyperparams,
    inbox: queue.Queue,
    outbox: queue.Queue,
):
    """Worker loop: per layer, ship Gram sums, await weights, update locally."""
    arch = shard.arch
    L = arch.n_layers
    try:
        while True:
            msg = decode_frame(inbox.get())
            if msg.kind != KIND_CONTROL:
                raise ProtocolError(f"expected control frame, got kind {msg.kind}")
            if msg.iteration == STOP_ITERATION:
                return
            it = msg.iteration
            update_lambda = bool(msg.layer)
            for l in range(1, L + 1):
                contrib = local_gram_contribution(shard, l, it, worker_id)
                outbox.put(
                    encode_frame(
                        WireMessage(
                            it, l, KIND_GRAM, worker_id,
                            np.concatenate(
                                [contrib.zc.ravel(), contrib.gram.ravel()]
                            ),
                        )
                    )
                )
                reply = decode_frame(inbox.get())
                if reply.kind != KIND_WEIGHTS or reply.layer != l or reply.iteration != it:
                    raise ProtocolError(
                        f"worker {worker_id}: unexpected frame "
                        f"(iter {reply.iteration}, layer {reply.layer}, kind {reply.kind})"
                    )
                d_out, d_in = arch.layer_dims[l], arch.layer_dims[l - 1]
                shard.weights[l - 1] = reply.payload.reshape(d_out, d_in).copy()
                if l < L:
                    network.activation_update(shard, hp, l)
                    network.output_update(shard, hp, l)
            network.output_update_final(shard, hp)
            if update_lambda:
                network.lagrange_update(shard, hp)
            n_local = shard.n_samples
            if n_local:
                obj = network.objective(shard, hp)
                pred = network.predict(shard.weights, shard.a[0], arch)
                correct = float(np.sum(pred == np.argmax(shard.labels, axis=0)))
            else:
                obj, correct = 0.0, 0.0
            outbox.put(
                encode_frame(
                    WireMessage(
                        it, 0, KIND_METRICS, worker_id,
                        np.array([obj, correct, float(n_local)]),
                    )
                )
            )
    except BaseException as exc:  # propagated to the coordinator
        outbox.put(WorkerFailure(worker_id, exc))


class _Coordinator:
    """Owns the channels, the reductions and the recorded history."""

    def __init__(self, arch: Architecture, hp: Hyperparams, n_workers: int):
        self.arch = arch
        self.hp = hp
        self.n = n_workers
        self.inboxes = [queue.Queue() for _ in range(n_workers)]
        self.outboxes = [queue.Queue() for _ in range(n_workers)]
        self.message_log: list[MessageRecord] = []
        self.layer1_factor: linalg.SpdFactor | None = None
        self.weights: list = [None] * arch.n_layers

    def _log(self, direction: str, msg: WireMessage, frame: bytes):
        self.message_log.append(
            MessageRecord(
                direction, msg.iteration, msg.layer, msg.kind, msg.worker,
                len(frame) - LENGTH.size - HEADER.size, len(frame),
            )
        )

    def broadcast(self, msg: WireMessage):
        frame = encode_frame(msg)
        for worker_id, inbox in enumerate(self.inboxes):
            self._log("to_worker", msg, frame)
            inbox.put(frame)

    def recv_all(self, iteration: int, layer: int, kind: int) -> list[WireMessage]:
        """Collect one frame per worker, in worker-id order."""
        out = []
        for worker_id, outbox in enumerate(self.outboxes):
            item = outbox.get()
            if isinstance(item, WorkerFailure):
                raise item
            msg = decode_frame(item)
            self._log("to_coordinator", msg, item)
            if msg.kind != kind or msg.iteration != iteration or msg.layer != layer:
                raise ProtocolError(
                    f"from worker {worker_id}: expected (iter {iteration}, layer "
                    f"{layer}, kind {kind}), got (iter {msg.iteration}, layer "
                    f"{msg.layer}, kind {msg.kind})"
                )
            out.append(msg)
        return out

    def weight_round(self, iteration: int, l: int):
        """One reduce/solve/broadcast cycle for layer ``l``'s weights."""
        d_out, d_in = self.arch.layer_dims[l], self.arch.layer_dims[l - 1]
        contribs = []
        for msg in self.recv_all(iteration, l, KIND_GRAM):
            flat = msg.payload
            contribs.append(
                GramContribution(
                    msg.iteration, msg.layer, msg.worker,
                    flat[: d_out * d_in].reshape(d_out, d_in),
                    flat[d_out * d_in:].reshape(d_in, d_in),
                )
            )
        zc, gram_sum = reduce_contributions(contribs, expected_workers=self.n)
        if l == 1 and self.layer1_factor is not None:
            factor = self.layer1_factor
        else:
            ridge = self.hp.ridge
            if ridge is None:
                ridge = linalg.default_ridge(gram_sum)
            factor = linalg.spd_factor_with_retry(gram_sum, ridge)
            if l == 1:
                self.layer1_factor = factor  # input activations never change
        W = linalg.solve_right(zc, factor)
        self.weights[l - 1] = W
        self.broadcast(WireMessage(iteration, l, KIND_WEIGHTS, 0, W.ravel()))


def distributed_train(
    data: Dataset,
    arch: Architecture,
    hp: Hyperparams,
    n_workers: int,
    test_data: Dataset | None = None,
    record_weights: bool = False,
    stop_accuracy: float | None = None,
) -> DistributedResult:
    """Run the training loop across ``n_workers`` worker threads.

    Initialization is drawn once in single-node order and sliced into
    column shards, so the weight iterates match a single-node run up to
    floating-point reassociation in the Gram reduction.
    """
    full_state = network.init_state(arch, data, hp)
    shards = shard_state(full_state, n_workers)
    coord = _Coordinator(arch, hp, n_workers)
    threads = [
        threading.Thread(
            target=_worker_main,
            args=(i, shards[i], hp, coord.inboxes[i], coord.outboxes[i]),
            name=f"admmnet-worker-{i}",
            daemon=True,
        )
        for i in range(n_workers)
    ]
    for t in threads:
        t.start()

    history: list[MetricsRow] = []
    snapshots: list | None = [] if record_weights else None
    elapsed = 0.0
    total = hp.warmup_iters + hp.train_iters
    try:
        for it0 in range(total):
            it = it0 + 1
            update_lambda = it0 >= hp.warmup_iters
            t0 = time.perf_counter()
            coord.broadcast(
                WireMessage(it, int(update_lambda), KIND_CONTROL, 0, np.empty(0))
            )
            for l in range(1, arch.n_layers + 1):
                coord.weight_round(it, l)
            metrics = coord.recv_all(it, 0, KIND_METRICS)
            elapsed += time.perf_counter() - t0
            obj = sum(float(m.payload[0]) for m in metrics)
            correct = sum(float(m.payload[1]) for m in metrics)
            counted = sum(float(m.payload[2]) for m in metrics)
            train_acc = correct / counted
            test_acc = (
                network.accuracy(coord.weights, test_data, arch)
                if test_data is not None
                else None
            )
            history.append(
                MetricsRow(it, elapsed, obj, train_acc, test_acc)
            )
            if snapshots is not None:
                snapshots.append([W.copy() for W in coord.weights])
            monitored = test_acc if test_acc is not None else train_acc
            if stop_accuracy is not None and monitored >= stop_accuracy:
                break
    finally:
        stop = WireMessage(STOP_ITERATION, 0, KIND_CONTROL, 0, np.empty(0))
        frame = encode_frame(stop)
        for inbox in coord.inboxes:
            inbox.put(frame)
        for t in threads:
            t.join(timeout=30.0)

    return DistributedResult(
        weights=coord.weights,
        history=history,
        state=full_state,
        weight_snapshots=snapshots,
        message_log=coord.message_log,
    )
