"""On-disk result format.

``results.json`` holds the config echo, its hash and every session record;
``metrics.csv`` and ``traces.csv`` are flat sidecars of the same data.
Wall-clock details live in ``provenance.json`` so that the other three files
are byte-identical across reruns with the same seed.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from pathlib import Path

from .config import SCHEMA_VERSION, hash_echo
from .harness import ResultMatrix, RunKey, SessionRecord, TracePoint

RESULTS = "results.json"
METRICS = "metrics.csv"
TRACES = "traces.csv"
PROVENANCE = "provenance.json"


class SchemaVersionError(RuntimeError):
    """Results were written by an incompatible schema version."""


class IntegrityWarning(UserWarning):
    pass


def _record_doc(r: SessionRecord) -> dict:
    doc = {"model": r.key.model, "train_index": r.key.train_index, "test_index": r.key.test_index,
           "session_id": r.key.session_id, "status": r.status}
    if r.ok:
        doc.update(mape=r.mape, rmse=r.rmse, n_points=r.n_points)
    else:
        doc.update(error=r.error, epoch=r.epoch)
    return doc


def _record_from(doc: dict) -> SessionRecord:
    key = RunKey(doc["model"], doc["train_index"], doc["test_index"], int(doc["session_id"]))
    if doc["status"] == "ok":
        return SessionRecord(key, "ok", float(doc["mape"]), float(doc["rmse"]), int(doc["n_points"]))
    return SessionRecord(key, doc["status"], error=doc.get("error"), epoch=doc.get("epoch"))


def metrics_csv(matrix: ResultMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "train_index", "test_index", "session_id", "mape", "rmse"])
    for r in matrix.records:
        k = r.key
        w.writerow([k.model, k.train_index, k.test_index, k.session_id,
                    repr(r.mape) if r.ok else "", repr(r.rmse) if r.ok else ""])
    return buf.getvalue()


def traces_csv(matrix: ResultMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "train_index", "test_index", "session_id", "day", "actual", "forecast"])
    for t in matrix.traces:
        k = t.key
        w.writerow([k.model, k.train_index, k.test_index, k.session_id, t.day, repr(t.actual), repr(t.forecast)])
    return buf.getvalue()


def persist_results(matrix: ResultMatrix, out_dir, provenance: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {k: v for k, v in matrix.meta.items() if k != "provenance"}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "meta": meta,
        "records": [_record_doc(r) for r in matrix.records],
        "traces_file": TRACES if matrix.traces else None,
    }
    (out / RESULTS).write_text(json.dumps(doc, indent=1) + "\n")
    (out / METRICS).write_text(metrics_csv(matrix))
    if matrix.traces:
        (out / TRACES).write_text(traces_csv(matrix))
    prov = provenance if provenance is not None else matrix.meta.get("provenance")
    if prov is not None:
        (out / PROVENANCE).write_text(json.dumps(prov, indent=1) + "\n")
    return out / RESULTS


def load_results(path) -> ResultMatrix:
    """Read results written by :func:`persist_results` (directory or results.json path)."""
    path = Path(path)
    if path.is_dir():
        path = path / RESULTS
    doc = json.loads(path.read_text())
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path}: schema version {version!r} cannot be read by this version ({SCHEMA_VERSION}); "
            "re-run the experiment or migrate the file"
        )
    meta = doc.get("meta", {})
    if "config" in meta and meta.get("config_hash") != hash_echo(meta["config"]):
        warnings.warn(f"{path}: config hash does not match the stored config", IntegrityWarning, stacklevel=2)
    records = [_record_from(r) for r in doc["records"]]
    traces = []
    if doc.get("traces_file"):
        with (path.parent / doc["traces_file"]).open(newline="") as fh:
            for row in csv.DictReader(fh):
                key = RunKey(row["model"], row["train_index"], row["test_index"], int(row["session_id"]))
                traces.append(TracePoint(key, int(row["day"]), float(row["actual"]), float(row["forecast"])))
    prov = path.parent / PROVENANCE
    if prov.is_file():
        meta = {**meta, "provenance": json.loads(prov.read_text())}
    return ResultMatrix(records, traces, meta)
