"""CSV serialization of run traces.

One row per ADMM iteration: ``k, x0, r, s`` then ``x_i, lambda_i,
y_latest_i`` for each agent. Numbers carry 12 significant digits; vector
entries of multi-dimensional runs are joined with ``;`` inside one cell.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from mabo.runtime import RunTrace


def fmt(v) -> str:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    return ";".join(f"{float(x):.12g}" for x in arr)


def trace_header(n_agents: int) -> list[str]:
    cols = ["k", "x0", "r", "s"]
    for i in range(1, n_agents + 1):
        cols += [f"x_{i}", f"lambda_{i}", f"y_latest_{i}"]
    return cols


def trace_rows(trace: RunTrace) -> list[list[str]]:
    rows = []
    for rec in trace.records:
        row = [str(rec.k), fmt(rec.x0), fmt(rec.primal), fmt(rec.dual)]
        for x, lam, y in zip(rec.xs, rec.lambdas, rec.y_latest):
            row += [fmt(x), fmt(lam), fmt(y)]
        rows.append(row)
    return rows


def _write(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def write_trace(trace: RunTrace, path) -> None:
    _write(path, trace_header(trace.n_agents), trace_rows(trace))


def write_comparison(mabo: RunTrace, model: RunTrace, path) -> None:
    """Side-by-side consensus and residual columns of a BO run and its full-model baseline."""
    if len(mabo.records) != len(model.records):
        raise ValueError("traces have different iteration counts")
    header = ["k", "x0_mabo", "r_mabo", "s_mabo", "x0_model", "r_model", "s_model"]
    rows = [[str(a.k), fmt(a.x0), fmt(a.primal), fmt(a.dual), fmt(b.x0), fmt(b.primal), fmt(b.dual)]
            for a, b in zip(mabo.records, model.records)]
    _write(path, header, rows)


def read_csv(path) -> dict[str, np.ndarray]:
    """Parse a trace or comparison file into columns; vector cells become 2-D arrays."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    out = {}
    for j, name in enumerate(header):
        cells = [r[j] for r in rows]
        if name == "k":
            out[name] = np.array([int(c) for c in cells])
            continue
        vals = [[float(v) for v in c.split(";")] for c in cells]
        arr = np.array(vals)
        out[name] = arr[:, 0] if arr.shape[1] == 1 else arr
    return out
