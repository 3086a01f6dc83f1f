"""
Result serialization - CSV time series and JSON reports.

Floats are written with repr(), the shortest string that parses back to the same
double, so identical results give byte-identical files.
"""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path as FilePath
from typing import Any

import numpy as np

from .control import ControlSignal, HistoryEntry
from .dynamics import EnsembleReport, Path
from .picard import PicardResult

logger = logging.getLogger(__name__)


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class ArtifactWriter:
    """
    Writes result files into one output directory and remembers them.

    rollback() deletes everything written so far; the CLI calls it when a
    subcommand fails so no partial results are left behind.
    """

    def __init__(self, output_dir: str | FilePath):
        self.output_dir = FilePath(output_dir)
        self.written: list[FilePath] = []
        self._created_dir = False

    def _target(self, name: str) -> FilePath:
        if not self.output_dir.exists():
            self.output_dir.mkdir(parents=True)
            self._created_dir = True
        target = self.output_dir / name
        self.written.append(target)
        return target

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> FilePath:
        target = self._target(name)
        with target.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        logger.debug("Wrote %s", target)
        return target

    def write_json(self, name: str, data: Any) -> FilePath:
        target = self._target(name)
        target.write_text(
            json.dumps(data, indent=2, ensure_ascii=False, default=_jsonable) + "\n", encoding="utf-8"
        )
        logger.debug("Wrote %s", target)
        return target

    def rollback(self) -> None:
        for target in reversed(self.written):
            try:
                target.unlink(missing_ok=True)
            except OSError as e:
                logger.warning("Could not remove %s: %s", target, e)
        if self._created_dir and self.output_dir.exists() and not any(self.output_dir.iterdir()):
            self.output_dir.rmdir()
        if self.written:
            logger.info("Removed %d partial output files", len(self.written))
        self.written.clear()


def write_path(writer: ArtifactWriter, path: Path, stem: str = "path") -> None:
    """t, mode_0, ... per node (left limits at jumps) plus a side file of post-jump states."""
    dim = path.states.shape[1]
    modes = [f"mode_{i}" for i in range(dim)]
    writer.write_csv(
        f"{stem}.csv",
        ["t", *modes],
        ([t, *row] for t, row in zip(path.grid, path.states, strict=True)),
    )
    writer.write_csv(
        f"{stem}_jumps.csv",
        ["k", "t_k", *modes],
        ([k, path.grid[node], *path.plus_states[k]] for k, node in enumerate(path.impulse_nodes, start=1)),
    )


def write_ensemble(writer: ArtifactWriter, report: EnsembleReport, name: str = "ensemble.csv") -> None:
    writer.write_csv(
        name,
        ["t", "mean_sq_norm", "standard_error"],
        zip(report.grid, report.mean_sq_norm, report.standard_error, strict=True),
    )


def write_picard(writer: ArtifactWriter, result: PicardResult, name: str = "picard.csv") -> None:
    """One row per sweep; ratio is empty for the first sweep and after a zero distance."""
    d = result.iterate_distances
    rows = []
    for n, distance in enumerate(d, start=1):
        ratio = d[n - 1] / d[n - 2] if n > 1 and d[n - 2] > 0 else ""
        rows.append([n, distance, ratio])
    writer.write_csv(name, ["iteration", "distance", "ratio"], rows)


def write_history(writer: ArtifactWriter, history: list[HistoryEntry], name: str = "history.csv") -> None:
    writer.write_csv(
        name,
        ["iteration", "J_best", "J_current", "step_norm"],
        ([e.iteration, e.J_best, e.J_current, e.step_norm] for e in history),
    )


def write_control(writer: ArtifactWriter, control: ControlSignal, name: str = "control.csv") -> None:
    b = control.breakpoints
    writer.write_csv(
        name,
        ["t_left", "t_right", *(f"u_{i}" for i in range(control.dim))],
        ([b[i], b[i + 1], *control.values[i]] for i in range(control.intervals)),
    )
