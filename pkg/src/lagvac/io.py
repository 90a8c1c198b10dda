"""CSV and JSON artifacts: 17-significant-digit decimals, versioned documents."""
import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .errors import ArtifactIOError
from .lagrangian import LagrangianState

__all__ = [
    "FORMAT_VERSION",
    "fmt",
    "write_csv",
    "read_csv",
    "write_document",
    "read_document",
    "state_to_record",
    "state_from_record",
    "checkpoint_roundtrip",
    "save_checkpoint",
    "load_checkpoint",
]

FORMAT_VERSION = 1


def fmt(x):
    """Decimal with 17 significant digits (enough to round-trip a double)."""
    return format(float(x), ".17g")


def write_csv(path, header, columns, comment=None):
    """Write equal-length columns; ``comment`` becomes a leading '# ...' line."""
    cols = [np.asarray(c) for c in columns]
    if len({c.shape[0] for c in cols}) > 1:
        raise ArtifactIOError(f"columns for {path} have different lengths")
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    kinds = [c.dtype.kind for c in cols]
    n = cols[0].shape[0] if cols else 0
    for i in range(n):
        writer.writerow([str(int(c[i])) if k in "iu" else fmt(c[i]) for c, k in zip(cols, kinds)])
    try:
        Path(path).write_bytes(buf.getvalue().encode("ascii"))
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Return (header, 2-D float array, comments)."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc}") from exc
    comments, body = [], []
    for line in text.splitlines():
        (comments if line.startswith("#") else body).append(line.lstrip("# ") if line.startswith("#") else line)
    rows = list(csv.reader(body))
    if not rows:
        raise ArtifactIOError(f"{path} is empty")
    header, data = rows[0], rows[1:]
    if not text.endswith("\n"):
        raise ArtifactIOError(f"{path} is truncated (no final line terminator)")
    if any(len(row) != len(header) for row in data):
        raise ArtifactIOError(f"{path} has rows of inconsistent length")
    try:
        arr = np.array(data, dtype=float).reshape(len(data), len(header))
    except ValueError as exc:
        raise ArtifactIOError(f"{path} contains non-numeric data: {exc}") from exc
    return header, arr, comments


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(doc):
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def write_document(path, kind, payload):
    doc = {"format": "lagvac", "kind": kind, "version": FORMAT_VERSION, "payload": payload}
    try:
        Path(path).write_text(dumps(doc), encoding="ascii")
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc}") from exc


def loads(text, kind=None, source="<string>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactIOError(f"{source} is not a valid document: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != "lagvac" or "payload" not in doc:
        raise ArtifactIOError(f"{source} has a corrupt header")
    if doc.get("version") != FORMAT_VERSION:
        raise ArtifactIOError(f"{source} has format version {doc.get('version')!r}, expected {FORMAT_VERSION}")
    if kind is not None and doc.get("kind") != kind:
        raise ArtifactIOError(f"{source} holds a {doc.get('kind')!r} document, expected {kind!r}")
    return doc["payload"]


def read_document(path, kind=None):
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc}") from exc
    return loads(text, kind, str(path))


def state_to_record(state):
    rec = {"t": float(state.t), "params": state.params.to_record()}
    for name in ("U", "eta", "eta_r", "modal_U", "U_r", "eta_rr"):
        val = getattr(state, name)
        rec[name] = None if val is None else [fmt(v) for v in np.asarray(val)]
    return rec


def state_from_record(rec):
    from .initial_data import PhysicalParams

    try:
        params = PhysicalParams(**rec["params"])
        arr = lambda key: None if rec.get(key) is None else np.array([float(v) for v in rec[key]])
        return LagrangianState(t=float(rec["t"]), U=arr("U"), eta=arr("eta"), eta_r=arr("eta_r"),
                               params=params, modal_U=arr("modal_U"), U_r=arr("U_r"), eta_rr=arr("eta_rr"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactIOError(f"corrupt state record: {exc}") from exc


def checkpoint_roundtrip(state):
    """Serialize to the checkpoint text form and parse it back."""
    text = dumps({"format": "lagvac", "kind": "checkpoint", "version": FORMAT_VERSION,
                  "payload": {"state": state_to_record(state)}})
    return state_from_record(loads(text, "checkpoint")["state"])


def save_checkpoint(path, state, extra=None):
    payload = {"state": state_to_record(state)}
    if extra:
        payload.update(extra)
    write_document(path, "checkpoint", payload)


def load_checkpoint(path):
    payload = read_document(path, "checkpoint")
    if "state" not in payload:
        raise ArtifactIOError(f"{path} holds no state")
    return state_from_record(payload["state"]), payload


def output_root():
    return Path(os.environ.get("LAGVAC_OUTPUT_ROOT", "lagvac_runs"))
