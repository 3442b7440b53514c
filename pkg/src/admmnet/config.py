"""Run configuration: flat key-value files with flag overrides.

Config files are plain ``key = value`` lines (``#`` comments allowed) so
experiment manifests diff cleanly.  Flags passed on the command line win
over file values, which win over defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Bad or missing configuration value."""


@dataclass
class RunConfig:
    # dataset source: exactly one of dataset (a path) or synthetic
    dataset: str | None = None
    format: str = "csv"          # csv | libsvm
    label_column: int = -1
    has_header: bool = False
    synthetic: str | None = None  # blobs | xor
    n_samples: int = 1000
    n_features: int = 2
    classes: int = 2
    separation: float = 6.0
    noise: float = 0.2
    test_fraction: float = 0.1
    normalize: bool = False
    # model
    arch: str = "auto"           # comma-separated hidden+output dims or "auto"
    activation: str = "relu"     # relu | hardsig
    # optimization (defaults: gamma=10, beta=1, warm start 10)
    gamma: float = 10.0
    beta: float = 1.0
    warmup: int = 10
    iters: int = 100
    ridge: float | None = None
    workers: int = 1
    seed: int = 0
    threshold: float | None = None
    # sgd baseline
    lr: float | None = None
    batch_size: int = 32
    epochs: int = 200
    # output
    out: str = "metrics.csv"


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _convert(name: str, kind, raw: str):
    if kind in ("bool", bool):
        low = raw.strip().lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if kind in ("int", int):
            return int(raw)
        if kind in ("float", float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    return raw


def parse_config_file(path) -> dict[str, str]:
    """Read ``key = value`` lines; later keys override earlier ones."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key] = value
    return out


_FIELD_TYPES = {
    "dataset": str, "format": str, "label_column": int, "has_header": bool,
    "synthetic": str, "n_samples": int, "n_features": int, "classes": int,
    "separation": float, "noise": float, "test_fraction": float,
    "normalize": bool, "arch": str, "activation": str, "gamma": float,
    "beta": float, "warmup": int, "iters": int, "ridge": float,
    "workers": int, "seed": int, "threshold": float, "lr": float,
    "batch_size": int, "epochs": int, "out": str,
}


def resolve(file_values: dict[str, str], flag_values: dict) -> RunConfig:
    """Merge defaults, file values and explicit flag values (flags win)."""
    known = {f.name for f in fields(RunConfig)}
    cfg = RunConfig()
    for key, raw in file_values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, _convert(key, _FIELD_TYPES[key], raw))
    for key, value in flag_values.items():
        if value is not None:
            setattr(cfg, key, value)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.dataset is None and cfg.synthetic is None:
        raise ConfigError("no dataset: pass --dataset PATH or --synthetic blobs|xor")
    if cfg.dataset is not None and cfg.synthetic is not None:
        raise ConfigError("--dataset and --synthetic are mutually exclusive")
    if cfg.synthetic not in (None, "blobs", "xor"):
        raise ConfigError(f"unknown synthetic dataset {cfg.synthetic!r}")
    if cfg.format not in ("csv", "libsvm"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    if cfg.activation not in ("relu", "hardsig"):
        raise ConfigError(f"unknown activation {cfg.activation!r}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if not 0.0 <= cfg.test_fraction < 1.0:
        raise ConfigError("test_fraction must be in [0, 1)")
    if cfg.arch != "auto":
        try:
            dims = [int(d) for d in cfg.arch.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad arch {cfg.arch!r}: {exc}") from exc
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ConfigError("arch needs at least two positive dims")


def arch_dims(cfg: RunConfig, n_features: int, n_classes: int) -> list[int]:
    """Concrete layer dims; ``auto`` means one 32-unit hidden layer."""
    if cfg.arch == "auto":
        return [n_features, 32, n_classes]
    dims = [int(d) for d in cfg.arch.split(",")]
    if dims[0] != n_features or dims[-1] != n_classes:
        raise ConfigError(
            f"arch {dims} does not match data ({n_features} features, "
            f"{n_classes} classes)"
        )
    return dims


def echo_dict(cfg: RunConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(RunConfig)}
