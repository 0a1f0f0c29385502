"""VTK snapshots, CSV error tables, flat config files and run summaries."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, MmsupgError
from .timestepper import METHODS

CSV_HEADER = ("method", "N", "dt", "eps", "h1", "seconds")


@dataclass(frozen=True)
class ExperimentResult:
    method: str
    N: int
    dt: float
    eps: float
    h1: float
    seconds: float


class OutputError(MmsupgError, OSError):
    """A file could not be written or read."""


def _fmt(x):
    return format(float(x), ".17g")


def write_vtk(mesh, u, path):
    """Legacy ASCII unstructured grid with the nodal field ``u``.

    Coordinates and values are written with 17 significant digits so that
    re-reading the file reproduces them exactly.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise InvalidArgumentError(
            f"u has shape {u.shape}, expected ({mesh.n_vertices},)")
    lines = ["# vtk DataFile Version 3.0", "mmsupg solution", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_vertices} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0" for x, y in mesh.vertices]
    ne = mesh.n_elements
    lines.append(f"CELLS {ne} {4 * ne}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {ne}")
    lines += ["5"] * ne
    lines += [f"POINT_DATA {mesh.n_vertices}", "SCALARS u double 1", "LOOKUP_TABLE default"]
    lines += [_fmt(v) for v in u]
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write VTK file {path}: {exc}") from exc
    return path


def read_vtk(path):
    """Parse a file written by :func:`write_vtk`; returns (vertices, triangles, u)."""
    try:
        with open(path) as fh:
            tokens = fh.read().split("\n")
    except OSError as exc:
        raise OutputError(f"cannot read VTK file {path}: {exc}") from exc
    it = iter(tokens)
    verts = tris = u = None
    for line in it:
        if line.startswith("POINTS"):
            n = int(line.split()[1])
            verts = np.array([[float(s) for s in next(it).split()[:2]] for _ in range(n)])
        elif line.startswith("CELLS"):
            n = int(line.split()[1])
            tris = np.array([[int(s) for s in next(it).split()[1:]] for _ in range(n)],
                            dtype=np.int64)
        elif line.startswith("POINT_DATA"):
            n = int(line.split()[1])
            next(it), next(it)
            u = np.array([float(next(it)) for _ in range(n)])
    if verts is None or tris is None or u is None:
        raise OutputError(f"{path} is not a complete VTK solution file")
    return verts, tris, u


def sort_results(results):
    order = {m: i for i, m in enumerate(METHODS)}
    return sorted(results, key=lambda r: (order.get(r.method, len(order)), r.method, r.N, r.dt))


def write_csv(results, path, timing=True):
    """One row per result, methods in table order then ascending N.

    Wall-clock seconds are the only non-reproducible column; with
    ``timing=False`` they are written as 0 so the file is bitwise stable.
    """
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in sort_results(results):
                w.writerow([r.method, int(r.N), _fmt(r.dt), _fmt(r.eps), _fmt(r.h1),
                            f"{r.seconds if timing else 0.0:.3f}"])
    except OSError as exc:
        raise OutputError(f"cannot write CSV file {path}: {exc}") from exc
    return path


def read_config(path):
    """Flat ``key = value`` file; '#' starts a comment. Values stay strings."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise OutputError(f"cannot read config file {path}: {exc}") from exc
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{path}:{no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise InvalidArgumentError(f"{path}:{no}: empty key")
        out[key.replace("-", "_")] = value
    return out


def write_summary(values, path):
    """Plain ``key: value`` lines in insertion order."""
    try:
        with open(path, "w") as fh:
            for k, v in values.items():
                fh.write(f"{k}: {_fmt(v) if isinstance(v, float) else v}\n")
    except OSError as exc:
        raise OutputError(f"cannot write summary {path}: {exc}") from exc
    return path


def read_summary(path):
    with open(path) as fh:
        return dict(line.rstrip("\n").split(": ", 1) for line in fh if ": " in line)


def ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create directory {path}: {exc}") from exc
    return path
