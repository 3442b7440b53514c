"""Training history rows and their on-disk CSV/JSON forms."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

METRICS_HEADER = ["iter", "wall_seconds", "objective", "train_acc", "test_acc"]
COMPARE_HEADER = ["method"] + METRICS_HEADER


@dataclass(frozen=True)
class MetricsRow:
    iteration: int
    wall_seconds: float
    objective: float
    train_accuracy: float
    test_accuracy: float | None = None


def _row_fields(row: MetricsRow) -> list[str]:
    return [
        str(row.iteration),
        repr(row.wall_seconds),
        repr(row.objective),
        repr(row.train_accuracy),
        "" if row.test_accuracy is None else repr(row.test_accuracy),
    ]


def write_metrics_csv(path, history: list[MetricsRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for row in history:
            writer.writerow(_row_fields(row))


def write_compare_csv(path, histories: dict[str, list[MetricsRow]]) -> None:
    """Write several methods' histories into one file with a method column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARE_HEADER)
        for method, history in histories.items():
            for row in history:
                writer.writerow([method] + _row_fields(row))


def _parse_row(rec: list[str]) -> MetricsRow:
    return MetricsRow(
        iteration=int(rec[0]),
        wall_seconds=float(rec[1]),
        objective=float(rec[2]),
        train_accuracy=float(rec[3]),
        test_accuracy=float(rec[4]) if rec[4] != "" else None,
    )


def load_metrics_csv(path) -> list[MetricsRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != METRICS_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        return [_parse_row(rec) for rec in reader]


def load_compare_csv(path) -> dict[str, list[MetricsRow]]:
    out: dict[str, list[MetricsRow]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != COMPARE_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for rec in reader:
            out.setdefault(rec[0], []).append(_parse_row(rec[1:]))
    return out


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
