"""Artifact writers: RFC-4180 CSV and UTF-8 JSON, floats with 17 significant digits.

Every file carries the schema version and the config hash (JSON: top-level
fields; CSV: the two leading columns), so any artifact can be traced back
to the configuration that produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def csv_bytes(header, rows, config_hash):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(["schema_version", "config_hash"] + list(header))
    for row in rows:
        w.writerow([str(SCHEMA_VERSION), config_hash] + [_cell(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _json_token(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return _json_token([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return _json_string(obj)
    if isinstance(obj, np.ndarray):
        return _json_token(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_string(str(k))}: {_json_token(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json_token(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _json_token(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json_string(s):
    return json.dumps(s, ensure_ascii=False)


def json_bytes(payload, config_hash, indent=1):
    """JSON document with schema_version and config_hash leading the top-level object."""
    doc = {"schema_version": SCHEMA_VERSION, "config_hash": config_hash}
    doc.update(payload)
    return (_json_token(doc, indent, 0) + "\n").encode("utf-8")


class ArtifactWriter:
    """Single writer for a run directory; records every file with its sha256."""

    def __init__(self, out_dir, config):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.hash = config.hash()
        self.files = {}

    def _write(self, name, data):
        path = self.out / name
        path.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return path

    def csv(self, name, header, rows):
        return self._write(name, csv_bytes(header, rows, self.hash))

    def json(self, name, payload):
        return self._write(name, json_bytes(payload, self.hash))

    def manifest(self, command, summary, warnings=()):
        payload = {"command": command, "config": self.config.semantic_dict(),
                   "files": dict(sorted(self.files.items())), "summary": summary,
                   "warnings": list(warnings)}
        return self._write("artifact.json", json_bytes(payload, self.hash))
