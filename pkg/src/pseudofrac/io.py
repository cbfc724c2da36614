"""CSV/JSON serialization with atomic writes (temp file in the target directory, then rename)."""

from __future__ import annotations

import contextlib
import csv
import io
import json
import os
import tempfile

import numpy as np

from .energy import GridFunction
from .errors import GridMismatch


@contextlib.contextmanager
def atomic_writer(path):
    """Text handle whose content appears at ``path`` only if the block finishes."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_json(obj, path):
    with atomic_writer(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def grid_function_csv(u):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ix", "iy", "x", "y", "value"])
    for k in range(u.grid.size):
        x, y = u.grid.nodes[k]
        writer.writerow([int(u.grid.ix[k]), int(u.grid.iy[k]), repr(float(x)), repr(float(y)), repr(float(u.values[k]))])
    return buf.getvalue()


def write_grid_function(u, path, fmt="csv"):
    if fmt == "csv":
        with atomic_writer(path) as fh:
            fh.write(grid_function_csv(u))
    elif fmt == "json":
        write_json(grid_function_to_dict(u), path)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def grid_function_to_dict(u):
    return {
        "grid": u.grid.metadata(),
        "ix": [int(i) for i in u.grid.ix],
        "iy": [int(i) for i in u.grid.iy],
        "values": [float(v) for v in u.values],
    }


def _check_lattice(grid, ix, iy):
    if len(ix) != grid.size or np.any(np.asarray(ix) != grid.ix) or np.any(np.asarray(iy) != grid.iy):
        raise GridMismatch("stored lattice indices do not match the grid")


def grid_function_from_dict(data, grid):
    _check_lattice(grid, data["ix"], data["iy"])
    return GridFunction(grid, data["values"])


def read_grid_function(path, grid):
    """Load a CSV or JSON grid function saved for ``grid`` (lattice indices must match)."""
    with open(path, newline="") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return grid_function_from_dict(json.loads(text), grid)
    rows = list(csv.DictReader(io.StringIO(text)))
    _check_lattice(grid, [int(r["ix"]) for r in rows], [int(r["iy"]) for r in rows])
    return GridFunction(grid, [float(r["value"]) for r in rows])


__all__ = [
    "atomic_writer", "write_json", "grid_function_csv", "write_grid_function", "grid_function_to_dict",
    "grid_function_from_dict", "read_grid_function",
]
