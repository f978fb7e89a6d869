"""Legacy ASCII VTK reader for unstructured grids (points + point-data vectors).

Only what is needed to pull a surface displacement time series out of
simulator snapshots is parsed; cells and other attributes are skipped.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    BadMagic,
    BinaryUnsupported,
    DataIOError,
    InconsistentSurfacePoint,
    NoMatchingPoint,
    NoSuchArray,
    ParseError,
    TruncatedSection,
    UnknownDataset,
)
from .series import TimeSeries

MAGIC = "# vtk DataFile Version"
COORD_RTOL = 1e-9

# attribute keyword -> numbers per point, for sections we skip
_SKIP_WIDTH = {"NORMALS": 3, "TENSORS": 9, "TEXTURE_COORDINATES": None, "COLOR_SCALARS": None}


class SurfacePointTie(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    points: np.ndarray  # (n, 3)
    vectors: dict  # name -> (n, 3)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        pts.setflags(write=False)
        vecs = {}
        for name, arr in self.vectors.items():
            arr = np.array(arr, dtype=np.float64).reshape(-1, 3)
            if arr.shape[0] != pts.shape[0]:
                raise ParseError(f"vector array {name!r} has {arr.shape[0]} tuples for {pts.shape[0]} points")
            arr.setflags(write=False)
            vecs[name] = arr
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "vectors", vecs)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            np.array_equal(self.points, other.points)
            and self.vectors.keys() == other.vectors.keys()
            and all(np.array_equal(v, other.vectors[k]) for k, v in self.vectors.items())
        )

    __hash__ = None


class _Tokens:
    def __init__(self, lines: Sequence[str]):
        self._it = iter(tok for line in lines for tok in line.split())

    def next(self, what: str) -> str:
        try:
            return next(self._it)
        except StopIteration:
            raise TruncatedSection(f"unexpected end of file while reading {what}") from None

    def peek_iter(self) -> Iterator[str]:
        return self._it

    def numbers(self, count: int, what: str) -> np.ndarray:
        out = np.empty(count, dtype=np.float64)
        for i in range(count):
            try:
                tok = next(self._it)
            except StopIteration:
                raise TruncatedSection(f"{what}: expected {count} numbers, found {i}") from None
            try:
                out[i] = float(tok)
            except ValueError:
                raise TruncatedSection(f"{what}: expected {count} numbers, found {i} before {tok!r}") from None
        return out

    def integer(self, what: str) -> int:
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"{what}: expected an integer, got {tok!r}") from None


def parse_legacy_vtk(data) -> Grid:
    """Parse legacy-format VTK text (``str`` or ``bytes``) into a :class:`Grid`."""
    if isinstance(data, (bytes, bytearray)):
        data = bytes(data).decode("latin-1")
    lines = data.splitlines()
    if not lines or not lines[0].startswith(MAGIC):
        raise BadMagic("missing '# vtk DataFile Version' header line")
    if len(lines) < 3:
        raise TruncatedSection("header is shorter than three lines")
    fmt = lines[2].strip().upper()
    if fmt == "BINARY":
        raise BinaryUnsupported("binary legacy VTK is not supported")
    if fmt != "ASCII":
        raise ParseError(f"expected ASCII or BINARY on line 3, got {lines[2].strip()!r}")

    toks = _Tokens(lines[3:])
    if toks.next("DATASET").upper() != "DATASET":
        raise ParseError("expected DATASET keyword after header")
    kind = toks.next("dataset type").upper()
    if kind != "UNSTRUCTURED_GRID":
        raise UnknownDataset(f"unsupported dataset type {kind}")

    points = None
    n_points = None
    n_cells = None
    vectors: dict[str, np.ndarray] = {}
    section = None  # "point" or "cell" attribute block
    it = toks.peek_iter()
    for tok in it:
        key = tok.upper()
        if key == "POINTS":
            n_points = toks.integer("POINTS count")
            toks.next("POINTS type")
            points = toks.numbers(3 * n_points, "POINTS").reshape(n_points, 3)
        elif key == "CELLS":
            n_cells = toks.integer("CELLS count")
            size = toks.integer("CELLS size")
            toks.numbers(size, "CELLS")
        elif key == "CELL_TYPES":
            n = toks.integer("CELL_TYPES count")
            toks.numbers(n, "CELL_TYPES")
        elif key == "POINT_DATA":
            n = toks.integer("POINT_DATA count")
            if n_points is None:
                raise ParseError("POINT_DATA before POINTS")
            if n != n_points:
                raise ParseError(f"POINT_DATA declares {n} values for {n_points} points")
            section = "point"
        elif key == "CELL_DATA":
            n_cells = toks.integer("CELL_DATA count")
            section = "cell"
        elif key in ("VECTORS", "NORMALS", "TENSORS", "SCALARS", "FIELD",
                     "TEXTURE_COORDINATES", "COLOR_SCALARS", "LOOKUP_TABLE"):
            if section is None:
                raise ParseError(f"{key} outside a POINT_DATA/CELL_DATA block")
            count = n_points if section == "point" else n_cells
            name = toks.next(f"{key} name")
            if key == "VECTORS":
                toks.next("VECTORS type")
                arr = toks.numbers(3 * count, f"VECTORS {name}").reshape(count, 3)
                if section == "point":
                    vectors[name] = arr
            elif key in ("NORMALS", "TENSORS"):
                toks.next(f"{key} type")
                toks.numbers(_SKIP_WIDTH[key] * count, f"{key} {name}")
            elif key == "SCALARS":
                _skip_scalars(toks, name, count)
            elif key == "LOOKUP_TABLE":
                # standalone table: n rgba entries
                size = toks.integer("LOOKUP_TABLE size")
                toks.numbers(4 * size, f"LOOKUP_TABLE {name}")
            elif key == "TEXTURE_COORDINATES":
                dim = toks.integer("TEXTURE_COORDINATES dim")
                toks.next("TEXTURE_COORDINATES type")
                toks.numbers(dim * count, f"TEXTURE_COORDINATES {name}")
            elif key == "COLOR_SCALARS":
                width = toks.integer("COLOR_SCALARS width")
                toks.numbers(width * count, f"COLOR_SCALARS {name}")
            else:  # FIELD
                n_arrays = toks.integer("FIELD array count")
                for _ in range(n_arrays):
                    arr_name = toks.next("FIELD array name")
                    ncomp = toks.integer("FIELD components")
                    ntup = toks.integer("FIELD tuples")
                    toks.next("FIELD type")
                    toks.numbers(ncomp * ntup, f"FIELD array {arr_name}")
        elif key == "METADATA":
            raise ParseError("METADATA blocks are not supported")
        else:
            raise ParseError(f"unexpected token {tok!r}")

    if points is None:
        raise TruncatedSection("file has no POINTS section")
    return Grid(points, vectors)


def _skip_scalars(toks: _Tokens, name: str, count: int) -> None:
    toks.next("SCALARS type")
    # the component count is optional; the next token is either it or LOOKUP_TABLE
    tok = toks.next("SCALARS")
    ncomp = 1
    if tok.upper() != "LOOKUP_TABLE":
        try:
            ncomp = int(tok)
        except ValueError:
            raise ParseError(f"SCALARS {name}: bad component count {tok!r}") from None
        tok = toks.next("LOOKUP_TABLE")
    if tok.upper() != "LOOKUP_TABLE":
        raise ParseError(f"SCALARS {name}: expected LOOKUP_TABLE, got {tok!r}")
    toks.next("LOOKUP_TABLE name")
    toks.numbers(ncomp * count, f"SCALARS {name}")


def grid_to_vtk(grid: Grid, title: str = "rominvert grid") -> str:
    """Serialize to legacy ASCII text that :func:`parse_legacy_vtk` reads back exactly."""
    out = [f"{MAGIC} 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {grid.n_points} double"]
    out += [" ".join(repr(float(c)) for c in p) for p in grid.points]
    out += ["CELLS 0 0", "CELL_TYPES 0"]
    if grid.vectors:
        out.append(f"POINT_DATA {grid.n_points}")
        for name, arr in grid.vectors.items():
            out.append(f"VECTORS {name} double")
            out += [" ".join(repr(float(c)) for c in row) for row in arr]
    return "\n".join(out) + "\n"


def _close(a: np.ndarray, target: float, span: float) -> np.ndarray:
    tol = COORD_RTOL * max(abs(target), span, 1e-300)
    return np.abs(a - target) <= tol


def surface_point(grid: Grid) -> tuple[int, int]:
    """Index of the point at (min x, max y) and how many points tie for it."""
    x, y = grid.points[:, 0], grid.points[:, 1]
    if x.size == 0:
        raise NoMatchingPoint("grid has no points")
    match = _close(x, x.min(), float(np.ptp(x))) & _close(y, y.max(), float(np.ptp(y)))
    hits = np.flatnonzero(match)
    if hits.size == 0:
        raise NoMatchingPoint("no point sits at both min x and max y")
    return int(hits[0]), int(hits.size)


def surface_displacement(grid: Grid, vector_name: str) -> float:
    """In-plane magnitude sqrt(u^2 + v^2) of ``vector_name`` at the (min x, max y) point."""
    if vector_name not in grid.vectors:
        raise NoSuchArray(f"no point-data vector named {vector_name!r}; have {sorted(grid.vectors)}")
    idx, ties = surface_point(grid)
    if ties > 1:
        warnings.warn(f"{ties} points tie for (min x, max y); using point {idx}", SurfacePointTie)
    u, v, _ = grid.vectors[vector_name][idx]
    return float(np.sqrt(u * u + v * v))


@dataclass(frozen=True)
class SnapshotSet:
    entries: tuple  # ((time_days, path), ...)
    vector_name: str = "displacement"

    def __post_init__(self):
        entries = tuple((float(t), Path(p)) for t, p in self.entries)
        times = [t for t, _ in entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParseError("snapshot time stamps must be strictly increasing")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_directory(cls, directory, vector_name: str, dt: float, t0: float = 0.0,
                       pattern: str = "*.vtk") -> "SnapshotSet":
        directory = Path(directory)
        if not directory.is_dir():
            raise DataIOError(f"snapshot directory {directory} does not exist")
        files = sorted(directory.glob(pattern), key=_natural_key)
        return cls(tuple((t0 + i * dt, f) for i, f in enumerate(files)), vector_name)


def _natural_key(path: Path):
    return [int(s) if s.isdigit() else s for s in re.split(r"(\d+)", path.name)]


def read_grid(path) -> Grid:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_legacy_vtk(raw)
    except ParseError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def build_series(snapshots: SnapshotSet, label: str = "") -> TimeSeries:
    """Surface displacement magnitude at each snapshot, in time order."""
    if not snapshots.entries:
        raise ParseError("snapshot set is empty")
    times = np.array([t for t, _ in snapshots.entries])
    values = []
    ref = None
    for t, path in snapshots.entries:
        grid = read_grid(path)
        idx, _ = surface_point(grid)
        coord = tuple(grid.points[idx, :2])
        if ref is None:
            ref = (idx, coord)
        elif ref != (idx, coord):
            raise InconsistentSurfacePoint(
                f"{path}: surface point {idx} at {coord} differs from {ref[0]} at {ref[1]}"
            )
        values.append(surface_displacement(grid, snapshots.vector_name))
    dt = float(times[1] - times[0]) if times.size > 1 else 1.0
    if times.size > 2 and not np.allclose(np.diff(times), dt, rtol=1e-9):
        raise ParseError("snapshot times are not uniformly spaced")
    return TimeSeries(float(times[0]), dt, values, label or snapshots.vector_name)
