"""Shared helpers: seeded streams, log-log fits, CSV/JSON output, threads."""

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np


def stream(seed, *index):
    """Generator for the (seed, stream-index...) counter.

    Every random draw in the package goes through here so a run is fully
    determined by its seed.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(i) for i in index)]))


def n_threads(threads=None):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("TORUSLAB_THREADS")
    if env:
        return max(1, int(env))
    return 1


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    residual: float
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)


def loglog_fit(x, y, min_points=2):
    """Ordinary least squares of log(y) on log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < min_points:
        raise ValueError(f"need at least {min_points} points for a fit, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    return LogLogFit(float(coef[0]), float(coef[1]), resid, x.tolist(), y.tolist())


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "numerator") and hasattr(obj, "denominator") and not isinstance(obj, int):
        return str(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(to_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
