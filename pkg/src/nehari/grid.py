"""Uniform tensor-product grids with homogeneous Dirichlet boundaries.

Only interior nodes are stored.  A field is identically zero on the boundary
of the box, so the discrete Laplacian uses zero ghost values and the
quadrature is the plain interior rectangle rule with weight h1*...*hd.  The
Dirichlet energy is always evaluated through the stencil, as integrate(w *
(-lap w)); summation by parts then holds exactly and the discrete energy is
an exact quadratic-quartic polynomial along every ray, which the fibering
analysis relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "Pair",
    "laplacian_apply",
    "integrate",
    "l4_norm4",
    "l43_norm",
    "h1_weighted_norm_sq",
    "pair_norm_sq",
    "field_from_function",
    "zero_field",
    "first_eigenvector",
    "field_to_csv",
    "field_from_csv",
    "pair_to_csv",
    "pair_from_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid of interior nodes on the box (0, L1) x ... x (0, Ld).

    Attributes:
        dim: spatial dimension, 1 or 2.
        extents: box side length per axis.
        points: number of interior nodes per axis (>= 3 each).

    The spacing is never stored independently: it is always derived as
    ``extents[k] / (points[k] + 1)``, so the relation spacing*(points+1) ==
    extent cannot drift.  Node i along axis k sits at (i+1)*h_k.
    """

    dim: int
    extents: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        extents = tuple(float(L) for L in self.extents)
        points = tuple(int(n) for n in self.points)
        if len(extents) != self.dim or len(points) != self.dim:
            raise ValueError("extents and points must have one entry per axis")
        if any(L <= 0 for L in extents):
            raise ValueError(f"extents must be positive, got {extents}")
        if any(n < 3 for n in points):
            raise ValueError(f"need at least 3 interior nodes per axis, got {points}")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "points", points)

    @property
    def spacing(self) -> tuple[float, ...]:
        """Mesh width per axis, derived as L/(n+1)."""
        return tuple(L / (n + 1) for L, n in zip(self.extents, self.points))

    @property
    def cell_volume(self) -> float:
        """Quadrature weight of one interior node (product of spacings)."""
        return math.prod(self.spacing)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return math.prod(self.points)

    def axis_coords(self, axis: int) -> np.ndarray:
        """Interior node coordinates along one axis."""
        h = self.spacing[axis]
        return (np.arange(1, self.points[axis] + 1)) * h

    def node_coords(self) -> tuple[np.ndarray, ...]:
        """Coordinates of every interior node, flattened row-major.

        Returns one array of length ``size`` per axis.
        """
        axes = [self.axis_coords(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return tuple(m.ravel() for m in mesh)


@dataclass(frozen=True, eq=False)
class Field:
    """Real values at the interior nodes of a grid, row-major order."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} nodal values, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must all be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def scaled(self, t: float) -> "Field":
        return Field(self.grid, t * self.values)


@dataclass(frozen=True, eq=False)
class Pair:
    """A two-component state (u, v) on one shared grid."""

    u: Field
    v: Field

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ValueError("both components of a Pair must share one grid")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def scaled(self, t: float) -> "Pair":
        return Pair(self.u.scaled(t), self.v.scaled(t))


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.size))


def first_eigenvector(grid: Grid) -> Field:
    """First Dirichlet eigenvector of the box, product of axis sines.

    Sampled, not normalized; the nodal maximum is close to 1.
    """
    coords = grid.node_coords()
    vals = np.ones(grid.size)
    for k, x in enumerate(coords):
        vals = vals * np.sin(math.pi * x / grid.extents[k])
    return Field(grid, vals)


def field_from_function(grid: Grid, fn) -> Field:
    """Sample ``fn(x)`` (1D) or ``fn(x, y)`` (2D) at the interior nodes."""
    coords = grid.node_coords()
    return Field(grid, np.broadcast_to(fn(*coords), (grid.size,)).astype(float))


def _check_on_grid(grid: Grid, w: Field) -> None:
    if w.grid != grid:
        raise ValueError("field does not live on the given grid")


def laplacian_matvec(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Apply -Delta (second-order centered stencil, zero Dirichlet ghosts)."""
    v = values.reshape(grid.shape)
    out = np.zeros_like(v)
    for axis, h in enumerate(grid.spacing):
        pad = [(1, 1) if a == axis else (0, 0) for a in range(v.ndim)]
        p = np.pad(v, pad)
        lo = [slice(0, -2) if a == axis else slice(None) for a in range(v.ndim)]
        hi = [slice(2, None) if a == axis else slice(None) for a in range(v.ndim)]
        out += (2.0 * v - p[tuple(lo)] - p[tuple(hi)]) / h**2
    return out.ravel()


def laplacian_apply(grid: Grid, w: Field) -> Field:
    """-Delta w with zero boundary values; linear in w."""
    _check_on_grid(grid, w)
    return Field(grid, laplacian_matvec(grid, w.values))


def integrate(grid: Grid, w: Field) -> float:
    """Rectangle-rule integral over the box: sum of values times h^dim."""
    _check_on_grid(grid, w)
    return float(w.values.sum() * grid.cell_volume)


def l4_norm4(w: Field) -> float:
    """Fourth power of the L4 norm, integrate(w**4)."""
    return float((w.values**4).sum() * w.grid.cell_volume)


def l43_norm(w: Field) -> float:
    """L^{4/3} norm, integrate(|w|^{4/3}) ** (3/4)."""
    s = float((np.abs(w.values) ** (4.0 / 3.0)).sum() * w.grid.cell_volume)
    return s**0.75


def h1_weighted_norm_sq(w: Field, lam: float) -> float:
    """integral(|grad w|^2 + lam*w^2) for a single component.

    The gradient term is evaluated as integrate(w * (-lap w)) so it stays
    exactly consistent with the stencil.
    """
    vals = w.values
    lap = laplacian_matvec(w.grid, vals)
    vol = w.grid.cell_volume
    return float(((vals * lap).sum() + lam * (vals**2).sum()) * vol)


def pair_norm_sq(p: Pair, params) -> float:
    """Squared energy norm of a pair with the lam1/lam2 weights of params.

    Nonnegative, and zero only for the zero pair.
    """
    return h1_weighted_norm_sq(p.u, params.lam1) + h1_weighted_norm_sq(
        p.v, params.lam2
    )


# --- CSV serialization -----------------------------------------------------
#
# One row per interior node, row-major: integer index per axis, coordinate per
# axis, then one column per field.  Header row included.

_FMT = "%.17g"


def _csv_header(grid: Grid, value_cols: tuple[str, ...]) -> str:
    idx = ("i",) if grid.dim == 1 else ("i", "j")
    xyz = ("x",) if grid.dim == 1 else ("x", "y")
    return ",".join(idx + xyz + value_cols)


def _write_node_csv(grid: Grid, columns: dict[str, np.ndarray], path) -> None:
    coords = grid.node_coords()
    indices = np.unravel_index(np.arange(grid.size), grid.shape)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_csv_header(grid, tuple(columns)) + "\n")
        for row in range(grid.size):
            cells = [str(int(ix[row])) for ix in indices]
            cells += [_FMT % c[row] for c in coords]
            cells += [_FMT % col[row] for col in columns.values()]
            fh.write(",".join(cells) + "\n")


def _read_node_csv(grid: Grid, path, value_cols: tuple[str, ...]):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        want = _csv_header(grid, value_cols).split(",")
        if header != want:
            raise ValueError(f"unexpected CSV header {header!r}, want {want!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if len(rows) != grid.size:
        raise ValueError(f"expected {grid.size} rows, got {len(rows)}")
    out = []
    for k, _name in enumerate(value_cols):
        col = grid.dim * 2 + k
        out.append(np.array([float(r[col]) for r in rows]))
    return out


def field_to_csv(w: Field, path) -> None:
    _write_node_csv(w.grid, {"value": w.values}, path)


def field_from_csv(grid: Grid, path) -> Field:
    (vals,) = _read_node_csv(grid, path, ("value",))
    return Field(grid, vals)


def pair_to_csv(p: Pair, path) -> None:
    _write_node_csv(p.grid, {"u": p.u.values, "v": p.v.values}, path)


def pair_from_csv(grid: Grid, path) -> Pair:
    u, v = _read_node_csv(grid, path, ("u", "v"))
    return Pair(Field(grid, u), Field(grid, v))
