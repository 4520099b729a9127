"""Metrics CSV files with fixed headers.

Floats are written with ``repr`` so identical runs give identical files.
"""
from __future__ import annotations

import csv
from pathlib import Path

LOSS_HEADER = ("step", "total_loss", "l_r", "l_v", "l_p", "l_g", "l_c", "lr")
EVAL_HEADER = ("step", "reward_mean", "reward_std")


class CsvLog:
    """Append-only CSV writer that flushes every row."""

    def __init__(self, path: str | Path, header: tuple[str, ...], truncate_after: int | None = None):
        self.path = Path(path)
        self.header = header
        rows = []
        if truncate_after is not None and self.path.exists():
            rows = [r for r in read_rows(self.path, header) if int(r["step"]) <= truncate_after]
        with self.path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([r[h] for h in header])

    def write(self, *values) -> None:
        if len(values) != len(self.header):
            raise ValueError(f"expected {len(self.header)} values, got {len(values)}")
        with self.path.open("a", newline="") as fh:
            csv.writer(fh).writerow([repr(float(v)) if isinstance(v, float) else v for v in values])


def read_rows(path: str | Path, header: tuple[str, ...] | None = None) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if header is not None and tuple(reader.fieldnames or ()) != header:
            raise ValueError(f"{path}: expected header {','.join(header)}")
        return list(reader)


def final_window(eval_rows: list[dict[str, str]], training_steps: int, window: int) -> tuple[float, float, int]:
    """Mean and std of evaluation rewards recorded in the last ``window`` steps."""
    import numpy as np

    rewards = [float(r["reward_mean"]) for r in eval_rows
               if int(r["step"]) > training_steps - window]
    if not rewards:
        return float("nan"), float("nan"), 0
    return float(np.mean(rewards)), float(np.std(rewards)), len(rewards)
