"""Config parsing, atomic output and run manifests."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .prob_core import Channel, Distribution

FLOAT_FMT = "%.9g"


def parse_channel(spec) -> Channel:
    """``bsc:0.11``, ``bec:0.2``, ``identity:3``, ``dmc:<file>`` or a channel dict."""
    if isinstance(spec, dict):
        return Channel.from_dict(spec)
    kind, _, arg = str(spec).partition(":")
    if kind == "bsc":
        return Channel.bsc(float(arg))
    if kind == "bec":
        return Channel.bec(float(arg))
    if kind == "identity":
        return Channel.identity(int(arg))
    if kind == "dmc":
        return Channel.from_json(Path(arg).read_text())
    raise ValueError(f"unknown channel spec {spec!r}")


def parse_dist(spec, size: int | None = None) -> Distribution:
    """``ber:0.5``, ``uniform``, a list of probabilities or a distribution dict."""
    if isinstance(spec, dict):
        return Distribution.from_dict(spec)
    if isinstance(spec, (list, tuple)):
        return Distribution(spec)
    kind, _, arg = str(spec).partition(":")
    if kind == "ber":
        return Distribution.bernoulli(float(arg))
    if kind == "uniform":
        if size is None and not arg:
            raise ValueError("uniform needs an alphabet size")
        return Distribution.uniform(int(arg) if arg else size)
    raise ValueError(f"unknown distribution spec {spec!r}")


def grid(spec) -> list:
    """A list of floats, or ``{"start", "stop", "num"}`` expanded with linspace."""
    if isinstance(spec, dict):
        return [float(v) for v in np.linspace(spec["start"], spec["stop"], spec["num"])]
    return [float(v) for v in spec]


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    if v is None:
        return ""
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(h)) for h in header])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        # JSON has no infinities; unbounded values become null
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def atomic_write(path, text: str):
    """Write via a temp file in the same directory and rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(_jsonable(cfg), sort_keys=True).encode()).hexdigest()


def manifest(cfg: dict, version: str, seed: int, wall: float, counts: dict) -> dict:
    return {
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "tool_version": version,
        "seed": seed,
        "wall_time_s": wall,
        "counts": counts,
    }
