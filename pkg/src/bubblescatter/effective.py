"""Dispersive effective medium and the inverse design of its coefficient b.

Inside the design region the effective model reads

    dU/dt + grad P = 0
    c^-1 dP/dt + div U = -b dY/dt
    d d2Y/dt2 + Y = P

Given a desired pressure ``P0`` on a space-time grid, :func:`solve_susceptibility`
integrates ``d Y'' + Y = P0`` and :func:`recover_b` returns

    b = -[(c^-1 d2/dt2 - Laplacian) P0] / d2Y/dt2

using Gaussian presmoothing of ``P0``, centred second differences and a
mask where the denominator is small.

Arrays are laid out time-first: ``(nt, nx[, ny[, nz]])``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .dynamics import oscillator_response
from .errors import AllMasked, GridMismatch, NonPositiveD
from .scene import minnaert_frequency


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform lattice over the design region times a uniform time grid."""

    shape: tuple          # spatial node counts per axis
    spacing: tuple        # h per axis
    nt: int
    dt: float
    origin: tuple = None
    t0: float = 0.0

    def __post_init__(self):
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        spacing = tuple(float(h) for h in np.atleast_1d(self.spacing))
        if len(shape) != len(spacing) or not 1 <= len(shape) <= 3:
            raise GridMismatch("shape and spacing must describe 1 to 3 spatial axes")
        if any(h <= 0 for h in spacing) or self.dt <= 0:
            raise ValueError("grid spacings and dt must be > 0")
        if any(n < 5 for n in shape) or self.nt < 5:
            raise ValueError("need at least 5 nodes per axis for centred second differences")
        origin = tuple(float(o) for o in (self.origin if self.origin is not None else (0.0,) * len(shape)))
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def full_shape(self) -> tuple:
        return (self.nt,) + self.shape

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def axis(self, k: int) -> np.ndarray:
        return self.origin[k] + self.spacing[k] * np.arange(self.shape[k])

    def mesh(self):
        """Broadcastable (t, x[, y[, z]]) coordinate arrays."""
        axes = [self.times] + [self.axis(k) for k in range(self.ndim)]
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    def to_dict(self) -> dict:
        return {"shape": list(self.shape), "spacing": list(self.spacing), "nt": self.nt, "dt": self.dt,
                "origin": list(self.origin), "t0": self.t0}


@dataclass(frozen=True)
class EffectiveDesign:
    """Inputs and products of one inverse-design run."""

    grid: SpaceTimeGrid
    p0: np.ndarray
    d_coeff: float
    c_coeff: float = 1.0
    region: np.ndarray | None = None   # spatial boolean mask; None means the whole box
    smoothing: float = 1.0             # Gaussian width in grid cells
    eps_mask: float = 1e-3
    y_field: np.ndarray | None = None
    y_tt: np.ndarray | None = None
    b_field: np.ndarray | None = None
    mask: np.ndarray | None = None     # True where b is defined
    b_hat: float | None = None
    extra: dict = field(default_factory=dict)


def dispersion_coefficient(k_c_bar: float, rho_m: float, radius_ref: float = 1.0) -> float:
    """d = 1 / omega_M**2 for bubbles with the given contrast bulk modulus."""
    return 1.0 / minnaert_frequency(k_c_bar, rho_m, radius_ref) ** 2


def _check_shape(arr, grid: SpaceTimeGrid, name: str):
    arr = np.asarray(arr, dtype=float)
    if arr.shape != grid.full_shape:
        raise GridMismatch(f"{name} has shape {arr.shape}, grid expects {grid.full_shape}")
    return arr


def solve_susceptibility(d: float, p0, grid: SpaceTimeGrid, return_derivatives: bool = False):
    """Integrate ``d Y'' + Y = P0`` at every spatial node with zero initial data."""
    if not d > 0:
        raise NonPositiveD(f"dispersion coefficient must be > 0, got {d}")
    p0 = _check_shape(p0, grid, "p0")
    y, y_t, y_tt = oscillator_response(d, p0, grid.dt, axis=0)
    return (y, y_t, y_tt) if return_derivatives else y


def second_difference(f, h: float, axis: int) -> np.ndarray:
    """Second derivative, centred inside and second-order one-sided at both ends."""
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def presmooth(f, sigma: float) -> np.ndarray:
    """Gaussian smoothing of width ``sigma`` cells on every axis.

    The array is extended by odd reflection first, which keeps linear
    trends intact at the boundaries.
    """
    f = np.asarray(f, dtype=float)
    if sigma <= 0:
        return f.copy()
    pad = int(np.ceil(4 * sigma)) + 1
    padded = np.pad(f, pad, mode="reflect", reflect_type="odd")
    smooth = gaussian_filter(padded, sigma, mode="nearest", truncate=4.0)
    return smooth[(slice(pad, -pad),) * f.ndim]


def wave_operator(p, grid: SpaceTimeGrid, c: float) -> np.ndarray:
    """``(c^-1 d2/dt2 - Laplacian) p`` by second differences."""
    out = second_difference(p, grid.dt, 0) / c
    for k, h in enumerate(grid.spacing):
        out -= second_difference(p, h, k + 1)
    return out


def recover_b(design: EffectiveDesign, constant: bool = False) -> EffectiveDesign:
    """Recover ``b(x, t)`` for the desired pressure of ``design``.

    Solves for the susceptibility when ``design.y_field`` is missing.  Nodes
    with ``|Y_tt| < eps_mask * max|Y_tt|`` or outside the region are masked
    (NaN in ``b_field``).  With ``constant=True`` the median over unmasked
    nodes is reported as ``b_hat``.
    """
    grid = design.grid
    p0 = _check_shape(design.p0, grid, "p0")
    if design.y_field is None:
        y, _, y_tt = solve_susceptibility(design.d_coeff, p0, grid, return_derivatives=True)
    else:
        y = _check_shape(design.y_field, grid, "y_field")
        y_tt = (p0 - y) / design.d_coeff
    scale = np.abs(y_tt).max()
    mask = np.abs(y_tt) >= design.eps_mask * scale
    if scale == 0.0:
        mask[...] = False
    if design.region is not None:
        region = np.asarray(design.region, dtype=bool)
        if region.shape != grid.shape:
            raise GridMismatch(f"region has shape {region.shape}, grid expects {grid.shape}")
        mask &= region[None, ...]
    if not mask.any():
        raise AllMasked("denominator d2Y/dt2 vanishes (below the mask threshold) everywhere")
    numerator = wave_operator(presmooth(p0, design.smoothing), grid, design.c_coeff)
    b = np.full(p0.shape, np.nan)
    b[mask] = -numerator[mask] / y_tt[mask]
    b_hat = float(np.median(b[mask])) if constant else None
    return replace(design, y_field=y, y_tt=y_tt, b_field=b, mask=mask, b_hat=b_hat)


def _norms(r, cell):
    return {"max": float(np.abs(r).max()), "l2": float(np.sqrt(np.sum(r**2) * cell))}


def dispersive_residual(p, u, y, b, c: float, d: float, grid: SpaceTimeGrid, region=None) -> dict:
    """Max and L2 norms of the three equations of the dispersive model.

    ``u`` has shape ``(ndim,) + grid.full_shape``; ``b`` is a scalar or a
    field on the grid (NaN entries are treated as 0).  Derivatives are
    second-order finite differences.
    """
    p = _check_shape(p, grid, "p")
    y = _check_shape(y, grid, "y")
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.ndim,) + grid.full_shape:
        raise GridMismatch(f"u has shape {u.shape}, expected {(grid.ndim,) + grid.full_shape}")
    b = np.nan_to_num(np.broadcast_to(np.asarray(b, dtype=float), grid.full_shape))
    chi = np.ones(grid.shape) if region is None else np.asarray(region, dtype=float)
    if chi.shape != grid.shape:
        raise GridMismatch("region mask does not match the spatial grid")

    ddt = lambda f: np.gradient(f, grid.dt, axis=0, edge_order=2)
    ddx = lambda f, k: np.gradient(f, grid.spacing[k], axis=k + 1, edge_order=2)
    momentum = np.stack([ddt(u[k]) + ddx(p, k) for k in range(grid.ndim)])
    divergence = sum(ddx(u[k], k) for k in range(grid.ndim))
    mass = ddt(p) / c + divergence + b * chi * ddt(y)
    susceptibility = d * chi * second_difference(y, grid.dt, 0) + y - p
    cell = grid.dt * float(np.prod(grid.spacing))
    return {"momentum": _norms(momentum, cell), "mass": _norms(mass, cell),
            "susceptibility": _norms(susceptibility, cell)}


# ---------------------------------------------------------------------------
# grid files: data (.npy or .csv) plus a JSON sidecar

def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def save_grid(path, array, grid: SpaceTimeGrid, region=None, extra: dict | None = None):
    """Write ``array`` and its sidecar ``<path>.json``.

    ``.npy`` files hold the array as is; ``.csv`` files hold one time step
    per row with the spatial nodes flattened in C order.
    """
    path = Path(path)
    array = np.asarray(array, dtype=float)
    meta = {"grid": grid.to_dict(), "format": path.suffix.lstrip(".") or "npy"}
    if path.suffix == ".csv":
        np.savetxt(path, array.reshape(grid.nt, -1), delimiter=",", fmt="%.17g")
    else:
        with open(path, "wb") as fh:
            np.save(fh, array)
    if region is not None:
        mask_path = path.with_name(path.stem + "_region.npy")
        np.save(mask_path, np.asarray(region, dtype=bool))
        meta["region_mask"] = mask_path.name
    else:
        meta["region_mask"] = None
    if extra:
        meta.update(extra)
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_grid(path):
    """Read a grid file written by :func:`save_grid`; returns ``(array, grid, region, meta)``."""
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    g = meta["grid"]
    grid = SpaceTimeGrid(tuple(g["shape"]), tuple(g["spacing"]), g["nt"], g["dt"],
                         tuple(g.get("origin") or (0.0,) * len(g["shape"])), g.get("t0", 0.0))
    if meta.get("format") == "csv" or path.suffix == ".csv":
        array = np.loadtxt(path, delimiter=",", ndmin=2).reshape(grid.full_shape)
    else:
        array = np.load(path)
    region = None
    if meta.get("region_mask"):
        region = np.load(path.with_name(meta["region_mask"]))
    return _check_shape(array, grid, "grid file"), grid, region, meta
