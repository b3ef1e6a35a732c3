"""Reading data and set definitions, batch gene-set testing, report output."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import TestResult, TestSpec, run_two_sample
from .errors import DegenerateVarianceError, InvalidInputError
from .matrix import DataMatrix
from .montecarlo import RngSpec, stable_key
from .multiplicity import benjamini_hochberg
from .simulation import (
    CovModel,
    SignalSpec,
    SimReport,
    SimScenario,
    one_sample_model,
    two_sample_models,
)

__all__ = [
    "BatchReport",
    "DataFormatError",
    "GeneSetDef",
    "emit_report",
    "load_matrix",
    "load_scenarios",
    "load_sets",
    "load_vector",
    "run_batch",
]

DEFAULT_FDR = 0.015
DEFAULT_MIN_SET_SIZE = 19


class DataFormatError(InvalidInputError):
    """Unreadable or malformed input file."""


def load_matrix(path, group_column: Optional[str] = None):
    """Read a header-first CSV with one observation per row.

    Without ``group_column`` a single :class:`DataMatrix` is returned.  With
    it, rows are split by the label in that column and a dict
    ``{label: DataMatrix}`` is returned in order of first appearance; the
    label column itself is dropped.  Missing or non-numeric cells are errors.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if group_column is not None:
            if group_column not in header:
                raise DataFormatError(f"{path}: no column named {group_column!r}")
            gcol = header.index(group_column)
        else:
            gcol = None
        names = [h for i, h in enumerate(header) if i != gcol]
        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}:{line_no}: expected {len(header)} fields, found {len(row)}"
                )
            values = []
            for i, cell in enumerate(row):
                if i == gcol:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}:{line_no}: non-numeric value {cell!r} in column {header[i]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataFormatError(f"{path}:{line_no}: non-finite value in column {header[i]!r}")
                values.append(v)
            rows.append(values)
            if gcol is not None:
                labels.append(row[gcol].strip())
    if not rows:
        raise DataFormatError(f"{path}: no observations")
    if not names:
        raise DataFormatError(f"{path}: no feature columns")
    values = np.array(rows, dtype=float)
    if gcol is None:
        if values.shape[0] < 2:
            raise DataFormatError(f"{path}: need at least 2 observations, found {values.shape[0]}")
        return DataMatrix(values, names)
    out = {}
    labels_arr = np.array(labels)
    for label in dict.fromkeys(labels):
        block = values[labels_arr == label]
        if block.shape[0] < 2:
            raise DataFormatError(f"{path}: group {label!r} has fewer than 2 observations")
        out[label] = DataMatrix(block, names)
    return out


def load_vector(path) -> np.ndarray:
    """Numbers from a CSV/text file (any layout); a non-numeric first row is a header."""
    text = Path(path).read_text(encoding="utf-8-sig")
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    values = []
    for i, row in enumerate(rows):
        cells = [c.strip() for c in row if c.strip()]
        try:
            values.extend(float(c) for c in cells)
        except ValueError:
            if i == 0:
                continue
            raise DataFormatError(f"{path}:{i + 1}: non-numeric entry") from None
    if not values:
        raise DataFormatError(f"{path}: no values")
    return np.array(values)


@dataclass(frozen=True)
class GeneSetDef:
    set_id: str
    feature_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(dict.fromkeys(self.feature_names)))
        if not self.feature_names:
            raise InvalidInputError(f"set {self.set_id!r} is empty")


def load_sets(path) -> list:
    """Feature sets from JSON (``{id: [names]}`` or ``[{"set_id", "features"}]``) or GMT.

    GMT lines are tab separated: id, description, then feature names.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    sets = []
    if path.suffix.lower() == ".json":
        raw = json.loads(text)
        if isinstance(raw, dict):
            items = list(raw.items())
        else:
            items = [(d["set_id"], d["features"]) for d in raw]
        sets = [GeneSetDef(str(k), tuple(str(f) for f in v)) for k, v in items]
    else:
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = [s.strip() for s in line.split("\t")]
            if len(parts) < 3:
                raise DataFormatError(f"{path}:{line_no}: expected id, description and features")
            sets.append(GeneSetDef(parts[0], tuple(s for s in parts[2:] if s)))
    ids = [s.set_id for s in sets]
    if len(set(ids)) != len(ids):
        raise DataFormatError(f"{path}: duplicate set ids")
    if not sets:
        raise DataFormatError(f"{path}: no sets")
    return sets


@dataclass
class BatchEntry:
    set_id: str
    size: int
    result: TestResult
    bh_reject: bool = False


@dataclass
class BatchReport:
    entries: list
    skipped: list
    fdr_q: float
    bh_cutoff_index: int
    config: dict = field(default_factory=dict)

    def rejected_ids(self) -> list:
        return [e.set_id for e in self.entries if e.bh_reject]


def _align(matrix_x: DataMatrix, matrix_y: DataMatrix) -> DataMatrix:
    if matrix_x.feature_names is None or matrix_y.feature_names is None:
        raise InvalidInputError("batch mode needs named feature columns")
    if matrix_x.feature_names == matrix_y.feature_names:
        return matrix_y
    pos = {name: i for i, name in enumerate(matrix_y.feature_names)}
    missing = [name for name in matrix_x.feature_names if name not in pos]
    if missing:
        raise InvalidInputError(f"second matrix lacks columns: {', '.join(missing[:10])}")
    return matrix_y.columns([pos[name] for name in matrix_x.feature_names])


def run_batch(
    matrix_x: DataMatrix,
    matrix_y: DataMatrix,
    sets: Sequence[GeneSetDef],
    spec: TestSpec,
    fdr_q: float = DEFAULT_FDR,
    min_set_size: int = DEFAULT_MIN_SET_SIZE,
    workers: int = 1,
) -> BatchReport:
    """Two-sample test on every feature set, then BH across the set p-values.

    Each set draws its Monte Carlo vectors from a stream keyed by its
    ``set_id``, so a set's p-value does not depend on which other sets are
    present or on their order.  Sets smaller than ``min_set_size`` and sets
    with a zero-variance feature on a studentized path are skipped with a
    note.
    """
    matrix_y = _align(matrix_x, matrix_y)
    index = {name: i for i, name in enumerate(matrix_x.feature_names)}
    problems = []
    for s in sets:
        missing = [f for f in s.feature_names if f not in index]
        if missing:
            problems.append(f"{s.set_id}: {', '.join(missing)}")
    if problems:
        raise InvalidInputError("unresolvable feature names\n  " + "\n  ".join(problems))
    def one(s):
        size = len(s.feature_names)
        if size < min_set_size:
            return None, {"set_id": s.set_id, "size": size, "reason": f"set size {size} < {min_set_size}"}
        cols = [index[f] for f in s.feature_names]
        set_spec = replace(spec, family="two_sample", rng=RngSpec(spec.rng.seed, stable_key(s.set_id)))
        try:
            res = run_two_sample(matrix_x.columns(cols), matrix_y.columns(cols), set_spec)
        except DegenerateVarianceError as exc:
            name = s.feature_names[exc.index] if 0 <= exc.index < size else exc.index
            return None, {"set_id": s.set_id, "size": size, "reason": f"zero variance in feature {name}"}
        return BatchEntry(s.set_id, size, res), None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, sets))
    else:
        outcomes = [one(s) for s in sets]
    tested = [e for e, _ in outcomes if e is not None]
    skipped = [k for _, k in outcomes if k is not None]
    cutoff = 0
    if tested:
        decision = benjamini_hochberg([e.result.p_value for e in tested], fdr_q)
        for e, rej in zip(tested, decision.rejected):
            e.bh_reject = bool(rej)
        cutoff = decision.bh_cutoff_index
    tested.sort(key=lambda e: (e.result.p_value, e.set_id))
    config = {
        "test": f"two_sample:{spec.label}",
        "alpha": spec.alpha,
        "M": spec.M,
        "seed": spec.rng.seed,
        "fdr_q": fdr_q,
        "min_set_size": min_set_size,
    }
    return BatchReport(tested, skipped, fdr_q, cutoff, config)


def _model_from(value, family):
    if isinstance(value, dict):
        return CovModel(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in value.items()})
    key = value if value == "perfect" else int(value)
    return one_sample_model(key) if family == "one_sample" else two_sample_models(key)


def load_scenarios(path) -> list:
    """Scenario list from a JSON config.

    Top-level keys other than ``scenarios`` are defaults for every scenario.
    A scenario names a preset via ``"model"`` (1-5 or ``"perfect"``) or gives
    explicit ``"models"`` (a list of CovModel field dicts).  ``"betas"``
    expands one entry into a signal-strength grid.
    """
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(raw, list):
        raw = {"scenarios": raw}
    defaults = {k: v for k, v in raw.items() if k != "scenarios"}
    out = []
    for entry in raw.get("scenarios", []):
        cfg = {**defaults, **entry}
        family = cfg.get("family", "one_sample")
        if "models" in cfg:
            models = tuple(_model_from(m, family) for m in cfg["models"])
        elif "model" in cfg:
            models = _model_from(cfg["model"], family)
            if isinstance(models, CovModel):
                models = (models,)
        else:
            raise DataFormatError(f"scenario {cfg.get('id')!r} names no model")
        sig = dict(cfg.get("signal", {}))
        betas = cfg.get("betas", [sig.get("beta", 0.0)])
        for beta in betas:
            sid = str(cfg["id"]) if "betas" not in cfg else f"{cfg['id']}/beta={beta}"
            out.append(
                SimScenario(
                    id=sid,
                    family=family,
                    models=models,
                    n=int(cfg["n"]),
                    p=int(cfg["p"]),
                    m=cfg.get("m"),
                    signal=SignalSpec(**{**sig, "beta": beta}),
                    tests=tuple(cfg.get("tests", ("ns", "s", "ns_f", "s_f"))),
                    alpha=float(cfg.get("alpha", 0.05)),
                    M=int(cfg.get("M", 1500)),
                    replicates=int(cfg.get("replicates", 1500)),
                    seed=int(cfg.get("seed", 0)),
                    fixed_support=bool(cfg.get("fixed_support", False)),
                )
            )
    if not out:
        raise DataFormatError(f"{path}: no scenarios")
    return out


def _pvalue_note(p: float, M: int) -> str:
    return f"< 1/{M}" if p == 0 else ""


def _batch_rows(report: BatchReport) -> list:
    rows = []
    for e in report.entries:
        r = e.result
        rows.append({
            "set_id": e.set_id,
            "size": e.size,
            "statistic": r.statistic,
            "critical_value": r.critical_value,
            "p_value": r.p_value,
            "p_value_note": _pvalue_note(r.p_value, r.M),
            "reject": r.reject,
            "bh_reject": e.bh_reject,
            "screened_out": r.screened_out,
        })
    return rows


def _to_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _to_csv(rows: list) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def render_report(obj, fmt: str = "json") -> str:
    """Serialize a TestResult, BatchReport, SimReport or list of SimReports."""
    if fmt not in ("json", "csv"):
        raise InvalidInputError(f"unknown format {fmt!r}")
    if isinstance(obj, TestResult):
        d = obj.to_dict()
        if fmt == "json":
            return _to_json(d)
        d = {**d, "retained": None if d["retained"] is None else " ".join(map(str, d["retained"])),
             "notes": "; ".join(d["notes"])}
        return _to_csv([d])
    if isinstance(obj, BatchReport):
        if fmt == "csv":
            return _to_csv(_batch_rows(obj))
        sets = []
        for row, e in zip(_batch_rows(obj), obj.entries):
            sets.append({**row, "alpha": e.result.alpha, "M": e.result.M, "notes": e.result.notes})
        return _to_json({
            "config": obj.config,
            "bh_cutoff_index": obj.bh_cutoff_index,
            "rejected": obj.rejected_ids(),
            "sets": sets,
            "skipped": obj.skipped,
        })
    if isinstance(obj, SimReport):
        obj = [obj]
    if isinstance(obj, (list, tuple)) and all(isinstance(r, SimReport) for r in obj):
        if fmt == "csv":
            return _to_csv([row for r in obj for row in r.rows()])
        return _to_json([r.to_dict() for r in obj])
    raise InvalidInputError(f"cannot render {type(obj).__name__}")


def emit_report(obj, path=None, fmt: str = "json") -> str:
    """Render ``obj`` and write it to ``path`` (if given); returns the text."""
    text = render_report(obj, fmt)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
