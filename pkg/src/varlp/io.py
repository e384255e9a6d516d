"""Grid arrays on disk.

CSV: an optional header line ``# shape=4,4 cell_side=0.5``, then the values
row by row (row-major).  JSON: ``{"shape": [4, 4], "cell_side": 0.5,
"values": [...]}`` with values flat row-major or nested, or a bare
(possibly nested) list of values.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .grid import Grid


def _parse_header(line: str) -> dict:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            key, val = tok.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def read_array(path) -> tuple[Grid, np.ndarray]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        doc = json.loads(text)
        if isinstance(doc, list):
            doc = {"values": doc}
        if not isinstance(doc, dict) or "values" not in doc:
            raise ValueError(f"{path}: expected a list or an object with 'values'")
        values = np.asarray(doc["values"], dtype=float)
        shape = tuple(doc.get("shape", values.shape))
        cell_side = float(doc.get("cell_side", 1.0))
    else:
        header, rows = {}, []
        for row in csv.reader(io.StringIO(text)):
            if not row or not "".join(row).strip():
                continue
            if row[0].lstrip().startswith("#"):
                header.update(_parse_header(",".join(row)))
                continue
            rows.append([float(x) for x in row if x.strip()])
        values = np.asarray([x for r in rows for x in r], dtype=float)
        if "shape" in header:
            shape = tuple(int(s) for s in header["shape"].split(","))
        elif len(rows) > 1 and len({len(r) for r in rows}) == 1 and len(rows[0]) > 1:
            shape = (len(rows), len(rows[0]))
        else:
            shape = (values.size,)
        cell_side = float(header.get("cell_side", 1.0))
    if int(np.prod(shape)) != values.size:
        raise ValueError(f"{path}: {values.size} values do not fill shape {shape}")
    grid = Grid(len(shape), shape, cell_side)
    return grid, values.reshape(shape)


def write_array(path, grid: Grid, values: np.ndarray) -> None:
    path = Path(path)
    values = np.asarray(values, dtype=float).reshape(grid.shape)
    if path.suffix.lower() == ".json":
        doc = {"shape": list(grid.shape), "cell_side": grid.cell_side,
               "values": values.ravel().tolist()}
        path.write_text(json.dumps(doc) + "\n", encoding="utf-8")
        return
    path.write_text(format_csv(grid, values), encoding="utf-8")


def format_csv(grid: Grid, values: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write(f"# shape={','.join(map(str, grid.shape))} cell_side={grid.cell_side!r}\n")
    rows = values.reshape(1, -1) if grid.dim == 1 else values
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
