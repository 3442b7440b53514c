"""Command-line interface: train, train-sgd, eval, bench-scaling, compare.

Every command writes machine-readable metric files (CSV plus a JSON
summary) instead of rendering plots.  Exit codes: 0 success, 1 runtime
failure, 2 configuration error.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, config as config_mod, data as data_mod, metrics
from . import distributed, network, sgd
from .activations import HARD_SIGMOID, RELU
from .config import ConfigError, RunConfig
from .network import Architecture, Hyperparams


def _common_options(f):
    opts = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="Flat key=value config file; flags override it."),
        click.option("--dataset", type=click.Path(), default=None,
                     help="Path to a dataset file."),
        click.option("--format", "format_", type=click.Choice(["csv", "libsvm"]),
                     default=None),
        click.option("--label-column", type=int, default=None),
        click.option("--has-header", is_flag=True, default=None),
        click.option("--synthetic", type=click.Choice(["blobs", "xor"]), default=None),
        click.option("--n-samples", type=int, default=None),
        click.option("--n-features", type=int, default=None),
        click.option("--classes", type=int, default=None),
        click.option("--separation", type=float, default=None),
        click.option("--noise", type=float, default=None),
        click.option("--test-fraction", type=float, default=None),
        click.option("--normalize", is_flag=True, default=None),
        click.option("--arch", default=None, help="Comma-separated layer dims."),
        click.option("--activation", type=click.Choice(["relu", "hardsig"]),
                     default=None),
        click.option("--gamma", type=float, default=None),
        click.option("--beta", type=float, default=None),
        click.option("--warmup", type=int, default=None),
        click.option("--iters", type=int, default=None),
        click.option("--ridge", type=float, default=None),
        click.option("--workers", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--threshold", type=float, default=None),
        click.option("--lr", type=float, default=None),
        click.option("--batch-size", type=int, default=None),
        click.option("--epochs", type=int, default=None),
        click.option("--out", type=click.Path(), default=None),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _resolve_config(config_path, **flags) -> RunConfig:
    flags["format"] = flags.pop("format_", None)
    try:
        file_values = (
            config_mod.parse_config_file(config_path) if config_path else {}
        )
        return config_mod.resolve(file_values, flags)
    except (ConfigError, OSError) as exc:
        raise click.UsageError(str(exc)) from exc


def _load_data(cfg: RunConfig):
    """Return (train, test_or_None); test split uses seeded shuffling."""
    if cfg.synthetic == "blobs":
        full = data_mod.gen_blobs(
            cfg.n_samples, cfg.n_features, cfg.classes, cfg.separation, cfg.seed
        )
    elif cfg.synthetic == "xor":
        full = data_mod.gen_xor(cfg.n_samples, cfg.noise, cfg.seed)
    else:
        path = Path(cfg.dataset)
        if not path.exists():
            raise click.UsageError(f"dataset not found: {path}")
        if cfg.format == "csv":
            full = data_mod.load_csv(path, cfg.label_column, cfg.has_header)
        else:
            full = data_mod.load_libsvm(path)
    if cfg.normalize:
        full, _ = data_mod.normalize(full)
    if cfg.test_fraction > 0:
        n_test = max(1, int(round(cfg.test_fraction * full.n_samples)))
        return data_mod.split(full, n_test, cfg.seed + 1)
    return full, None


def _build_model(cfg: RunConfig, train_data):
    dims = config_mod.arch_dims(cfg, train_data.n_features, train_data.n_classes)
    act = RELU if cfg.activation == "relu" else HARD_SIGMOID
    arch = Architecture(tuple(dims), act)
    hp = Hyperparams.for_architecture(
        arch, beta=cfg.beta, gamma=cfg.gamma, warmup_iters=cfg.warmup,
        train_iters=cfg.iters, ridge=cfg.ridge, seed=cfg.seed,
    )
    return arch, hp


def _summary_path(out: str) -> Path:
    return Path(out).with_suffix(".json")


def _model_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + "_model.npz")


def _save_model(path, weights, arch: Architecture) -> None:
    arrays = {f"W{i + 1}": W for i, W in enumerate(weights)}
    np.savez(
        path,
        layer_dims=np.array(arch.layer_dims),
        activation=np.array(arch.activation.kind),
        **arrays,
    )


def _load_model(path):
    with np.load(path) as blob:
        dims = tuple(int(d) for d in blob["layer_dims"])
        kind = str(blob["activation"])
        weights = [blob[f"W{i + 1}"] for i in range(len(dims) - 1)]
    act = RELU if kind == "relu" else HARD_SIGMOID
    return weights, Architecture(dims, act)


def _write_outputs(cfg: RunConfig, result, method: str, load_seconds: float) -> None:
    metrics.write_metrics_csv(cfg.out, result.history)
    final = result.history[-1]
    metrics.write_summary_json(
        _summary_path(cfg.out),
        {
            "method": method,
            "version": __version__,
            "config": config_mod.echo_dict(cfg),
            "iterations": final.iteration,
            "optimize_seconds": final.wall_seconds,
            "data_load_seconds": load_seconds,
            "final_objective": final.objective,
            "final_train_accuracy": final.train_accuracy,
            "final_test_accuracy": final.test_accuracy,
        },
    )
    if hasattr(result, "weights") and result.weights is not None:
        arch = result.state.arch if result.state is not None else None
        if arch is not None:
            _save_model(_model_path(cfg.out), result.weights, arch)


@click.group()
@click.version_option(__version__)
def main():
    """Gradient-free neural network training and benchmarking."""


@main.command("train")
@_common_options
def cmd_train(config_path, **flags):
    """Train with alternating minimization (single- or multi-worker)."""
    cfg = _resolve_config(config_path, **flags)
    t0 = time.perf_counter()
    train_data, test_data = _load_data(cfg)
    load_seconds = time.perf_counter() - t0
    arch, hp = _build_model(cfg, train_data)
    try:
        if cfg.workers == 1:
            result = network.train(train_data, arch, hp, test_data=test_data)
        else:
            result = distributed.distributed_train(
                train_data, arch, hp, cfg.workers, test_data=test_data
            )
    except Exception as exc:
        click.echo(f"training failed: {exc}", err=True)
        sys.exit(1)
    _write_outputs(cfg, result, "admm", load_seconds)
    final = result.history[-1]
    click.echo(
        f"train_acc={final.train_accuracy:.4f} "
        f"test_acc={'' if final.test_accuracy is None else f'{final.test_accuracy:.4f}'} "
        f"seconds={final.wall_seconds:.2f}"
    )


@main.command("train-sgd")
@_common_options
def cmd_train_sgd(config_path, **flags):
    """Train the backpropagation SGD baseline."""
    cfg = _resolve_config(config_path, **flags)
    t0 = time.perf_counter()
    train_data, test_data = _load_data(cfg)
    load_seconds = time.perf_counter() - t0
    arch, _ = _build_model(cfg, train_data)
    lr = cfg.lr if cfg.lr is not None else sgd.search_learning_rate(
        train_data, arch, seed=cfg.seed
    )
    sgd_cfg = sgd.SgdConfig(
        learning_rate=lr, batch_size=cfg.batch_size, epochs=cfg.epochs, seed=cfg.seed
    )
    try:
        result = sgd.sgd_train(train_data, arch, sgd_cfg, test_data=test_data)
    except Exception as exc:
        click.echo(f"training failed: {exc}", err=True)
        sys.exit(1)
    metrics.write_metrics_csv(cfg.out, result.history)
    final = result.history[-1]
    metrics.write_summary_json(
        _summary_path(cfg.out),
        {
            "method": "sgd",
            "version": __version__,
            "config": config_mod.echo_dict(cfg),
            "learning_rate": lr,
            "iterations": final.iteration,
            "optimize_seconds": final.wall_seconds,
            "data_load_seconds": load_seconds,
            "final_objective": final.objective,
            "final_train_accuracy": final.train_accuracy,
            "final_test_accuracy": final.test_accuracy,
        },
    )
    click.echo(f"train_acc={final.train_accuracy:.4f} lr={lr}")


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(), required=True)
@_common_options
def cmd_eval(model_path, config_path, **flags):
    """Evaluate a saved model on a dataset."""
    cfg = _resolve_config(config_path, **flags)
    if not Path(model_path).exists():
        raise click.UsageError(f"model not found: {model_path}")
    train_data, test_data = _load_data(cfg)
    try:
        weights, arch = _load_model(model_path)
        acc = network.accuracy(weights, train_data, arch)
        test_acc = (
            network.accuracy(weights, test_data, arch) if test_data else None
        )
    except Exception as exc:
        click.echo(f"evaluation failed: {exc}", err=True)
        sys.exit(1)
    click.echo(
        f"accuracy={acc:.4f}"
        + ("" if test_acc is None else f" test_accuracy={test_acc:.4f}")
    )


@main.command("bench-scaling")
@click.option("--workers-list", default="1,2,4,8",
              help="Comma-separated worker counts to benchmark.")
@_common_options
def cmd_bench_scaling(workers_list, config_path, **flags):
    """Time-to-threshold for several worker counts; writes a scaling CSV."""
    cfg = _resolve_config(config_path, **flags)
    if cfg.threshold is None:
        raise click.UsageError("bench-scaling requires --threshold")
    try:
        counts = [int(v) for v in workers_list.split(",")]
    except ValueError as exc:
        raise click.UsageError(f"bad --workers-list: {exc}") from exc
    train_data, test_data = _load_data(cfg)
    arch, hp = _build_model(cfg, train_data)
    rows = []
    try:
        for n in counts:
            result = distributed.distributed_train(
                train_data, arch, hp, n, test_data=test_data,
                stop_accuracy=cfg.threshold,
            )
            final = result.history[-1]
            monitored = (
                final.test_accuracy
                if final.test_accuracy is not None
                else final.train_accuracy
            )
            reached = monitored >= cfg.threshold
            rows.append(
                (n, final.wall_seconds if reached else None, final.iteration)
            )
            click.echo(
                f"workers={n} seconds="
                f"{'' if not reached else f'{final.wall_seconds:.3f}'} "
                f"iterations={final.iteration}"
            )
    except Exception as exc:
        click.echo(f"benchmark failed: {exc}", err=True)
        sys.exit(1)
    with open(cfg.out, "w") as fh:
        fh.write("workers,seconds_to_threshold,iterations\n")
        for n, seconds, iters in rows:
            fh.write(f"{n},{'' if seconds is None else repr(seconds)},{iters}\n")


@main.command("compare")
@_common_options
def cmd_compare(config_path, **flags):
    """Run both trainers on the same split; writes a combined CSV."""
    cfg = _resolve_config(config_path, **flags)
    train_data, test_data = _load_data(cfg)
    arch, hp = _build_model(cfg, train_data)
    try:
        admm_result = network.train(train_data, arch, hp, test_data=test_data)
        lr = cfg.lr if cfg.lr is not None else sgd.search_learning_rate(
            train_data, arch, seed=cfg.seed
        )
        sgd_cfg = sgd.SgdConfig(
            learning_rate=lr, batch_size=cfg.batch_size, epochs=cfg.epochs,
            seed=cfg.seed,
        )
        sgd_result = sgd.sgd_train(train_data, arch, sgd_cfg, test_data=test_data)
    except Exception as exc:
        click.echo(f"comparison failed: {exc}", err=True)
        sys.exit(1)
    metrics.write_compare_csv(
        cfg.out, {"admm": admm_result.history, "sgd": sgd_result.history}
    )
    for name, result in (("admm", admm_result), ("sgd", sgd_result)):
        final = result.history[-1]
        shown = (
            final.test_accuracy
            if final.test_accuracy is not None
            else final.train_accuracy
        )
        click.echo(f"{name}: accuracy={shown:.4f} seconds={final.wall_seconds:.2f}")


if __name__ == "__main__":
    main()
