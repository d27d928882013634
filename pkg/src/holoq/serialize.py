"""JSON and CSV encodings for matrices, loops and reports.

Complex entries are ``[re, im]`` pairs.  Floats go through ``repr`` (shortest
string that round-trips), so a decoded matrix is bit-identical to the input.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid
from .gaugeholo import GaugeFieldSample, ParamLoop


def matrix_to_json(m) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    if m.ndim != 2:
        raise ValueError("only 2-D arrays are serialized as matrices")
    return {"rows": m.shape[0], "cols": m.shape[1],
            "data": [[float(z.real), float(z.imag)] for z in m.ravel()]}


def matrix_from_json(obj) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; plain nested lists of reals are accepted too."""
    if isinstance(obj, list):
        try:
            return np.array(obj, dtype=complex)
        except (TypeError, ValueError) as e:
            raise ConfigInvalid(f"bad matrix literal: {e}") from None
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigInvalid(f"matrix needs rows, cols and data: {e}") from None
    if len(data) != rows * cols or any(len(p) != 2 for p in data):
        raise ConfigInvalid(f"matrix data must hold {rows * cols} [re, im] pairs")
    arr = np.array([complex(re, im) for re, im in data], dtype=complex)
    return arr.reshape(rows, cols)


def loop_to_json(loop: ParamLoop, chart: str | None = None) -> dict:
    return {"chart": chart, "points": loop.points.tolist(), "closed": loop.closed,
            "steps_per_edge": None if loop.steps_per_edge is None else list(loop.steps_per_edge)}


def loop_from_json(obj) -> tuple[ParamLoop, str | None]:
    try:
        pts = np.array(obj["points"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigInvalid(f"loop needs a points list: {e}") from None
    steps = obj.get("steps_per_edge")
    loop = ParamLoop(pts, bool(obj.get("closed", True)), steps)
    return loop, obj.get("chart")


def _clean(x):
    # numpy scalars/arrays -> JSON types; non-finite floats -> strings
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x) and x.ndim == 2:
            return matrix_to_json(x)
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(x.real), _clean(x.imag)]
    return x


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")
    return path


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def gauge_field_rows(samples: list[GaugeFieldSample]):
    """Header and rows: point coordinates, ``mu``, then ``re, im`` per entry (row-major)."""
    if not samples:
        return ["mu"], []
    d = samples[0].point.size
    n = samples[0].components.shape[-1]
    header = [f"x{i}" for i in range(d)] + ["mu"]
    header += [f"A_{b}{a}_{part}" for b in range(n) for a in range(n) for part in ("re", "im")]
    rows = []
    for s in samples:
        for mu, comp in enumerate(s.components):
            flat = [v for z in comp.ravel() for v in (z.real, z.imag)]
            rows.append(list(s.point) + [mu] + flat)
    return header, rows


def trajectory_rows(traj, stride: int = 1):
    """``t``, ``re/im`` of every state component (per column), ``eta_norm`` (per column)."""
    states = traj.states
    block = states.ndim == 3
    k = states.shape[2] if block else 1
    N = states.shape[1]
    header = ["t"]
    for c in range(k):
        tag = f"{c}_" if block else ""
        header += [f"psi{tag}{i}_{part}" for i in range(N) for part in ("re", "im")]
    header += [f"eta_norm_{c}" for c in range(k)] if block else ["eta_norm"]
    idx = np.arange(0, len(traj.times), max(1, int(stride)))
    if idx[-1] != len(traj.times) - 1:
        idx = np.append(idx, len(traj.times) - 1)
    rows = []
    for j in idx:
        s = states[j].reshape(N, k)
        row = [traj.times[j]]
        for c in range(k):
            row += [v for z in s[:, c] for v in (z.real, z.imag)]
        row += list(np.atleast_1d(traj.eta_norms[j]))
        rows.append(row)
    return header, rows
