"""Line-delimited file formats and the append-only run store.

Every file starts with one schema-version header line.  Numeric values are
written with Python's shortest round-trip repr, which is byte-stable across
platforms, so identical pipelines produce identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .engine import RunRecord
from .errors import StoreError
from .evaluation import ConvergenceCurve, ScoreMatrix
from .racing import TuneResult
from .validation import ValidationReport

RECORDS_SCHEMA = "cmawizard/records/1"
ELITES_SCHEMA = "cmawizard/elites/1"
RACELOG_SCHEMA = "cmawizard/racelog/1"
MATRIX_SCHEMA = "cmawizard/score-matrix/1"
CURVES_SCHEMA = "cmawizard/curves/1"
VALIDATION_SCHEMA = "cmawizard/validation/1"


def json_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False, separators=(", ", ": "))


def _header(schema: str) -> str:
    return json_line({"schema": schema})


def _read_lines(path, schema: str) -> list[str]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise StoreError(f"{path}: empty file")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError:
        raise StoreError(f"{path}: missing schema header") from None
    if head.get("schema") != schema:
        raise StoreError(f"{path}: expected schema {schema}, got {head.get('schema')!r}")
    return lines[1:]


class RunStore:
    """Append-only record log with idempotent resume.

    Keyed by (algorithm, suite, instance hash, seed): re-running a completed
    experiment is a no-op.  A torn trailing line (interrupted writer) is
    truncated away on open; anything else corrupt is an error.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._keys: set[tuple] = set()
        self._records: list[tuple[str, RunRecord]] = []
        if self.path.exists():
            self._load()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(_header(RECORDS_SCHEMA) + "\n")

    @staticmethod
    def _key(suite: str, record: RunRecord) -> tuple:
        return (record.algorithm, suite, record.instance.key(), record.seed)

    def _load(self):
        raw = self.path.read_text()
        lines = raw.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            self.path.write_text(_header(RECORDS_SCHEMA) + "\n")
            return
        try:
            head = json.loads(lines[0])
            ok = head.get("schema") == RECORDS_SCHEMA
        except json.JSONDecodeError:
            ok = False
        if not ok:
            raise StoreError(f"{self.path}: not a run store (bad schema header)")
        good = [lines[0]]
        for i, line in enumerate(lines[1:], start=1):
            try:
                payload = json.loads(line)
            except json.JSONDecodeError:
                if i == len(lines) - 1:
                    break  # torn final line from an interrupted append
                raise StoreError(f"{self.path}: corrupt record on line {i + 1}")
            record = RunRecord.from_dict(payload["record"])
            suite = payload["suite"]
            self._records.append((suite, record))
            self._keys.add(self._key(suite, record))
            good.append(line)
        if len(good) != len(lines):
            self.path.write_text("\n".join(good) + "\n")

    def __contains__(self, key: tuple) -> bool:
        return key in self._keys

    def has(self, suite: str, record: RunRecord) -> bool:
        return self._key(suite, record) in self._keys

    def add(self, suite: str, record: RunRecord) -> bool:
        """Append a record; returns False when the key already exists."""
        key = self._key(suite, record)
        if key in self._keys:
            return False
        with self.path.open("a") as fh:
            fh.write(json_line({"suite": suite, "record": record.to_dict()}) + "\n")
        self._keys.add(key)
        self._records.append((suite, record))
        return True

    def records(self, suite: str | None = None) -> Iterator[RunRecord]:
        for s, record in self._records:
            if suite is None or s == suite:
                yield record

    def __len__(self) -> int:
        return len(self._records)


# ---------------------------------------------------------------------------
# elites / race log
# ---------------------------------------------------------------------------


def save_tune_result(elites_path, racelog_path, result: TuneResult, suite: str, settings) -> None:
    lines = [_header(ELITES_SCHEMA)]
    lines.append(
        json_line(
            {
                "suite": suite,
                "seed": settings.seed,
                "max_experiments": settings.max_experiments,
                "experiments_used": result.state.experiments_used,
                "iterations": result.n_iterations,
            }
        )
    )
    for rank, elite in enumerate(result.elites, start=1):
        lines.append(
            json_line(
                {
                    "rank": rank,
                    "id": elite.id,
                    "params": elite.params,
                    "mean_loss": elite.mean_loss,
                    "n_instances": elite.n_instances,
                }
            )
        )
    Path(elites_path).parent.mkdir(parents=True, exist_ok=True)
    Path(elites_path).write_text("\n".join(lines) + "\n")

    log_lines = [_header(RACELOG_SCHEMA)]
    log_lines.extend(json_line(entry) for entry in result.state.log)
    Path(racelog_path).parent.mkdir(parents=True, exist_ok=True)
    Path(racelog_path).write_text("\n".join(log_lines) + "\n")


def load_elites(path) -> list[dict]:
    lines = _read_lines(path, ELITES_SCHEMA)
    if not lines:
        raise StoreError(f"{path}: missing metadata line")
    return [json.loads(line) for line in lines[1:]]


def load_elites_meta(path) -> dict:
    lines = _read_lines(path, ELITES_SCHEMA)
    return json.loads(lines[0])


# ---------------------------------------------------------------------------
# evaluation outputs (tab-separated, stable column order)
# ---------------------------------------------------------------------------


def save_score_matrix(path, matrix: ScoreMatrix) -> None:
    lines = [_header(MATRIX_SCHEMA)]
    algos = matrix.algorithms
    lines.append("\t".join(["algorithm", "rank", "score", "se"] + list(algos)))
    for i, algo in enumerate(algos):
        row = [algo, str(i + 1), repr(matrix.global_scores[i]), repr(matrix.score_se[i])]
        row.extend(repr(float(v)) for v in matrix.wins[i])
        lines.append("\t".join(row))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def save_curves(path, curves: Iterable[ConvergenceCurve]) -> None:
    lines = [_header(CURVES_SCHEMA)]
    lines.append("\t".join(["algorithm", "checkpoint", "mean_normalized_loss"]))
    for curve in curves:
        for fraction, value in curve.points:
            lines.append("\t".join([curve.algorithm, repr(fraction), repr(value)]))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def save_validation_report(path, report: ValidationReport, suite: str) -> None:
    lines = [_header(VALIDATION_SCHEMA)]
    payload = report.to_dict()
    payload["suite"] = suite
    lines.append(json_line(payload))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def load_validation_report(path) -> dict:
    lines = _read_lines(path, VALIDATION_SCHEMA)
    return json.loads(lines[0])
