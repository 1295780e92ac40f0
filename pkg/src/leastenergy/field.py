"""Cell-centred uniform grids on [-L, L]^N and vector-valued fields on them.

Fields are extended by zero outside the cube. Every operation here is a pure
function of its inputs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DomainError, ShapeMismatch

MIN_CELLS = 8


@dataclass(frozen=True)
class Grid:
    dim: int
    half_extent: float
    cells: int

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError(f"grid dimension must be >= 2, got {self.dim}")
        if not self.half_extent > 0:
            raise DomainError(f"half_extent must be positive, got {self.half_extent}")
        if self.cells < MIN_CELLS:
            raise DomainError(f"cells_per_dim must be >= {MIN_CELLS}, got {self.cells}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.cells

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells,) * self.dim

    @property
    def size(self) -> int:
        return self.cells**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis(self) -> np.ndarray:
        h = self.spacing
        return -self.half_extent + (np.arange(self.cells) + 0.5) * h

    def coords(self) -> list[np.ndarray]:
        """Sparse coordinate arrays, broadcastable to ``shape``."""
        x = self.axis()
        return np.meshgrid(*([x] * self.dim), indexing="ij", sparse=True)

    def radius(self, center=None) -> np.ndarray:
        c = np.zeros(self.dim) if center is None else np.asarray(center, float)
        r2 = sum((xj - cj) ** 2 for xj, cj in zip(self.coords(), c))
        return np.sqrt(r2)

    def scaled(self, sigma: float) -> "Grid":
        """The same index lattice with every coordinate multiplied by sigma."""
        return Grid(self.dim, self.half_extent * sigma, self.cells)


@dataclass(frozen=True)
class Field:
    grid: Grid
    values: np.ndarray  # shape (m, n, ..., n)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == self.grid.dim:
            v = v[None]
        if v.shape[1:] != self.grid.shape:
            raise ShapeMismatch(f"values of shape {v.shape[1:]} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field contains non-finite samples")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def component(self, i: int) -> np.ndarray:
        return self.values[i]

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def __neg__(self):
        return Field(self.grid, -self.values)


def from_function(grid: Grid, func, m: int | None = None) -> Field:
    """Sample ``func(*coords)`` at cell centres. ``func`` may return an array or a list of m arrays."""
    x = np.meshgrid(*([grid.axis()] * grid.dim), indexing="ij")
    out = func(*x)
    if isinstance(out, (list, tuple)):
        vals = np.stack([np.broadcast_to(o, grid.shape) for o in out])
    else:
        vals = np.broadcast_to(out, grid.shape)[None]
    if m is not None and vals.shape[0] != m:
        raise ShapeMismatch(f"function produced {vals.shape[0]} components, expected {m}")
    return Field(grid, np.array(vals, dtype=float))


def zeros(grid: Grid, m: int = 1) -> Field:
    return Field(grid, np.zeros((m,) + grid.shape))


# ---------------------------------------------------------------------------
# differentiation


def _shift(a: np.ndarray, axis: int, offset: int) -> np.ndarray:
    """a[i + offset] along ``axis`` with zeros outside."""
    out = np.zeros_like(a)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if offset > 0:
        src[axis] = slice(offset, None)
        dst[axis] = slice(None, -offset)
    else:
        src[axis] = slice(None, offset)
        dst[axis] = slice(-offset, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def gradient(f: Field) -> np.ndarray:
    """Central-difference gradient, shape (m, N, n, ..., n).

    Neighbours outside the cube are taken as zero.
    """
    h = f.grid.spacing
    N = f.grid.dim
    out = np.empty((f.m, N) + f.grid.shape)
    for i in range(f.m):
        u = f.values[i]
        for j in range(N):
            out[i, j] = (_shift(u, j, 1) - _shift(u, j, -1)) / (2 * h)
    return out


def gradient_norm(f: Field) -> np.ndarray:
    """Euclidean |grad u_i| per component, shape (m, n, ..., n)."""
    g = gradient(f)
    return np.sqrt(np.sum(g**2, axis=1))


def forward_difference(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (_shift(u, axis, 1) - u) / h


def backward_difference(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (u - _shift(u, axis, -1)) / h


# ---------------------------------------------------------------------------
# quadrature and inner products


def integrate(grid: Grid, samples) -> float:
    """Midpoint rule h^N * sum(samples)."""
    a = np.asarray(samples, dtype=float)
    if a.shape[-grid.dim :] != grid.shape:
        raise ShapeMismatch(f"samples of shape {a.shape} do not match grid {grid.shape}")
    return float(grid.cell_volume * np.sum(a))


def inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    return float(grid.cell_volume * np.vdot(a, b))


def lp_norm(grid: Grid, a: np.ndarray, p: float = 2.0) -> float:
    return float((grid.cell_volume * np.sum(np.abs(a) ** p)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# interpolation


def _index_coords(grid: Grid, points: np.ndarray) -> np.ndarray:
    # fractional index of a physical coordinate: x = -L + (k + 1/2) h
    return (points + grid.half_extent) / grid.spacing - 0.5


def interpolate_many(f: Field, points, order: int = 1) -> np.ndarray:
    """Interpolate every component at ``points`` of shape (N, ...). Returns (m, ...).

    ``order=1`` is multilinear over the 2^N surrounding cell centres, with the
    exterior ring of ghost centres held at zero. Points outside the cube give 0.
    """
    pts = np.asarray(points, dtype=float)
    N = f.grid.dim
    if pts.shape[0] != N:
        raise ShapeMismatch(f"points must have leading dimension {N}")
    idx = _index_coords(f.grid, pts)
    inside = np.all(np.abs(pts) <= f.grid.half_extent, axis=0)
    out = np.empty((f.m,) + pts.shape[1:])
    for i in range(f.m):
        vals = ndimage.map_coordinates(
            f.values[i], idx, order=order, mode="grid-constant", cval=0.0, prefilter=order > 1
        )
        out[i] = np.where(inside, vals, 0.0)
    return out


def interpolate(f: Field, point, order: int = 1) -> np.ndarray:
    """Values of the m components at a single point of R^N."""
    pt = np.asarray(point, dtype=float).reshape(f.grid.dim, 1)
    return interpolate_many(f, pt, order=order)[:, 0]


def resample(f: Field, mapping, order: int = 1) -> Field:
    """New field on the same grid with samples f(mapping(x)).

    ``mapping`` receives the dense coordinate stack (N, n, ..., n) and returns
    the same shape.
    """
    x = np.stack(np.meshgrid(*([f.grid.axis()] * f.grid.dim), indexing="ij"))
    return Field(f.grid, interpolate_many(f, mapping(x), order=order))


# ---------------------------------------------------------------------------
# serialization: CSV or flat binary, row-major over cells, one column per component


def _header(f: Field) -> dict:
    return {"N": f.grid.dim, "L": f.grid.half_extent, "n": f.grid.cells, "m": f.m}


def save_field(f: Field, path, fmt: str | None = None) -> Path:
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix == ".csv" else "bin")
    table = f.values.reshape(f.m, -1).T
    if fmt == "csv":
        hdr = _header(f)
        with open(path, "w") as fh:
            fh.write("# " + " ".join(f"{k}={v!r}" for k, v in hdr.items()) + "\n")
            fh.write(",".join(f"u{i + 1}" for i in range(f.m)) + "\n")
            np.savetxt(fh, table, delimiter=",", fmt="%.17g")
    elif fmt == "bin":
        with open(path, "wb") as fh:
            fh.write((json.dumps(_header(f), sort_keys=True) + "\n").encode())
            fh.write(np.ascontiguousarray(table, dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown field format {fmt!r}")
    return path


def _parse_header(line: str) -> dict:
    line = line.strip()
    if line.startswith("{"):
        return json.loads(line)
    items = dict(tok.split("=", 1) for tok in line.lstrip("#").split())
    return {"N": int(items["N"]), "L": float(items["L"]), "n": int(items["n"]), "m": int(items["m"])}


def load_field(path) -> Field:
    path = Path(path)
    with open(path, "rb") as fh:
        first = fh.readline().decode()
        hdr = _parse_header(first)
        grid = Grid(int(hdr["N"]), float(hdr["L"]), int(hdr["n"]))
        m = int(hdr["m"])
        if first.startswith("#"):
            fh.readline()  # column names
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
        else:
            table = np.frombuffer(fh.read(), dtype="<f8").reshape(-1, m)
    if table.shape != (grid.size, m):
        raise ShapeMismatch(f"{path}: expected {grid.size} rows x {m} columns, got {table.shape}")
    return Field(grid, table.T.reshape((m,) + grid.shape).copy())


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)
