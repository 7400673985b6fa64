"""Uniform 2D grids, sampled fields and the differential operators on them.

Two interchangeable backends are provided:

* ``SPECTRAL``: Fourier pseudospectral differentiation on a periodic box,
  samples at ``x_i = i*hx``.
* ``FD``: second-order centred differences. Periodic boxes wrap around;
  Neumann boxes use cell-centred samples ``x_i = (i + 1/2)*hx`` with mirror
  ghost cells.

Arrays are stored with shape ``(ny, nx)`` in C order, so the flattened
sample vector runs with x fastest.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .errors import BadDimension, IncompatibleBackend, NonFiniteField, WrongBackend


class BcKind(str, enum.Enum):
    PERIODIC = "periodic"
    NEUMANN = "neumann"


class BackendKind(str, enum.Enum):
    SPECTRAL = "spectral"
    FD = "fd"


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    Lx: float
    Ly: float
    bc: BcKind = BcKind.PERIODIC
    backend: BackendKind = BackendKind.SPECTRAL

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise BadDimension(f"{name}={n}: sample counts must be even and >= 4")
        if not (self.Lx > 0 and self.Ly > 0) or not np.isfinite([self.Lx, self.Ly]).all():
            raise BadDimension(f"domain lengths must be positive, got Lx={self.Lx}, Ly={self.Ly}")
        object.__setattr__(self, "bc", BcKind(self.bc))
        object.__setattr__(self, "backend", BackendKind(self.backend))
        if self.backend is BackendKind.SPECTRAL and self.bc is not BcKind.PERIODIC:
            raise IncompatibleBackend("the spectral backend requires periodic boundaries")

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def x(self) -> np.ndarray:
        offset = 0.5 if self.bc is BcKind.NEUMANN else 0.0
        return (np.arange(self.nx) + offset) * self.hx

    @property
    def y(self) -> np.ndarray:
        offset = 0.5 if self.bc is BcKind.NEUMANN else 0.0
        return (np.arange(self.ny) + offset) * self.hy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def field(self, values) -> "Field":
        return Field(self, values)

    def constant(self, value: float) -> "Field":
        return Field(self, np.full(self.shape, float(value)))

    def from_function(self, func) -> "Field":
        X, Y = self.mesh()
        return Field(self, np.broadcast_to(func(X, Y), self.shape))

    def inner(self, a, b) -> float:
        """Equal-weight quadrature inner product ``hx*hy*sum(a*b)``."""
        return float(np.sum(_values(a) * _values(b)) * self.cell_area)


def make_grid(nx, ny, Lx, Ly, bc=BcKind.PERIODIC, backend=BackendKind.SPECTRAL) -> Grid:
    return Grid(nx, ny, float(Lx), float(Ly), BcKind(bc), BackendKind(backend))


def _values(f):
    if isinstance(f, Field):
        return f.values
    return np.asarray(f)


def _check_finite(values, what="field"):
    if not np.isfinite(values).all():
        raise NonFiniteField(f"non-finite samples in {what}")


class Field:
    """Immutable real samples over a :class:`Grid`.

    ``dealiased`` records that the samples are already 2/3-filtered, which
    lets :func:`dealias` return them untouched.
    """

    __slots__ = ("grid", "values", "dealiased")

    def __init__(self, grid: Grid, values, *, dealiased: bool = False):
        arr = np.array(values, dtype=np.float64)
        if arr.size != grid.size:
            raise BadDimension(f"expected {grid.size} samples, got {arr.size}")
        arr = arr.reshape(grid.shape)
        _check_finite(arr)
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr
        self.dealiased = dealiased

    def __repr__(self):
        return f"Field({self.grid.nx}x{self.grid.ny}, min={self.values.min():.6g}, max={self.values.max():.6g})"

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def mean(self) -> float:
        return float(self.values.mean())

    def _binary(self, other, op):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise BadDimension("fields live on different grids")
            other = other.values
        return Field(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return Field(self.grid, -self.values)


class VectorField:
    __slots__ = ("grid", "x_values", "y_values")

    def __init__(self, grid: Grid, x_values, y_values):
        xv = np.array(x_values, dtype=np.float64).reshape(grid.shape)
        yv = np.array(y_values, dtype=np.float64).reshape(grid.shape)
        _check_finite(xv, "vector field")
        _check_finite(yv, "vector field")
        xv.setflags(write=False)
        yv.setflags(write=False)
        self.grid = grid
        self.x_values = xv
        self.y_values = yv

    def __mul__(self, other):
        s = _values(other)
        return VectorField(self.grid, self.x_values * s, self.y_values * s)

    __rmul__ = __mul__

    def norm_sq(self) -> np.ndarray:
        return self.x_values**2 + self.y_values**2


# ---------------------------------------------------------------------------
# spectral machinery


@functools.lru_cache(maxsize=32)
def wavenumbers(grid: Grid):
    """Angular wavenumbers ``(kx, ky)`` for the ``rfft2`` layout.

    The Nyquist wavenumber is zeroed so first derivatives of real data stay
    real and ``laplacian`` equals ``divergence(gradient(.))`` exactly.
    """
    kx = 2 * np.pi / grid.Lx * np.fft.rfftfreq(grid.nx, d=1.0 / grid.nx)
    ky = 2 * np.pi / grid.Ly * np.fft.fftfreq(grid.ny, d=1.0 / grid.ny)
    kx[grid.nx // 2] = 0.0
    ky[grid.ny // 2] = 0.0
    kx.setflags(write=False)
    ky.setflags(write=False)
    return kx[None, :], ky[:, None]


@functools.lru_cache(maxsize=32)
def dealias_mask(grid: Grid) -> np.ndarray:
    ix = np.abs(np.fft.rfftfreq(grid.nx, d=1.0 / grid.nx))
    iy = np.abs(np.fft.fftfreq(grid.ny, d=1.0 / grid.ny))
    keep_x = ix <= (2.0 / 3.0) * (grid.nx // 2)
    keep_y = iy <= (2.0 / 3.0) * (grid.ny // 2)
    mask = keep_y[:, None] & keep_x[None, :]
    mask.setflags(write=False)
    return mask


def _fft(grid, values):
    return np.fft.rfft2(values)


def _ifft(grid, coeffs):
    return np.fft.irfft2(coeffs, s=grid.shape)


# ---------------------------------------------------------------------------
# finite differences


def _fd_axis_gradient(f: np.ndarray, h: float, axis: int, bc: BcKind) -> np.ndarray:
    if bc is BcKind.PERIODIC:
        return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)
    # mirror ghosts: f[-1] = f[0], f[n] = f[n-1]
    pad = [(0, 0), (0, 0)]
    pad[axis] = (1, 1)
    g = np.pad(f, pad, mode="edge")
    n = f.shape[axis]
    ahead = np.take(g, np.arange(2, n + 2), axis=axis)
    behind = np.take(g, np.arange(0, n), axis=axis)
    return (ahead - behind) / (2 * h)


def _fd_axis_divergence(v: np.ndarray, h: float, axis: int, bc: BcKind) -> np.ndarray:
    if bc is BcKind.PERIODIC:
        face = 0.5 * (v + np.roll(v, -1, axis))  # flux at i + 1/2
        return (face - np.roll(face, 1, axis)) / h
    n = v.shape[axis]
    lo = np.take(v, np.arange(0, n - 1), axis=axis)
    hi = np.take(v, np.arange(1, n), axis=axis)
    inner = 0.5 * (lo + hi)  # fluxes at interior faces 1/2 .. n-3/2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (1, 1)
    faces = np.pad(inner, pad)  # wall fluxes vanish
    right = np.take(faces, np.arange(1, n + 1), axis=axis)
    left = np.take(faces, np.arange(0, n), axis=axis)
    return (right - left) / h


# ---------------------------------------------------------------------------
# public operators


def gradient(f: Field) -> VectorField:
    grid = f.grid
    if grid.backend is BackendKind.SPECTRAL:
        kx, ky = wavenumbers(grid)
        fh = _fft(grid, f.values)
        gx = _ifft(grid, 1j * kx * fh)
        gy = _ifft(grid, 1j * ky * fh)
    else:
        gx = _fd_axis_gradient(f.values, grid.hx, 1, grid.bc)
        gy = _fd_axis_gradient(f.values, grid.hy, 0, grid.bc)
    return VectorField(grid, gx, gy)


def divergence(v: VectorField) -> Field:
    grid = v.grid
    if grid.backend is BackendKind.SPECTRAL:
        kx, ky = wavenumbers(grid)
        out = _ifft(grid, 1j * kx * _fft(grid, v.x_values) + 1j * ky * _fft(grid, v.y_values))
    else:
        out = _fd_axis_divergence(v.x_values, grid.hx, 1, grid.bc) + _fd_axis_divergence(
            v.y_values, grid.hy, 0, grid.bc
        )
    return Field(grid, out)


def laplacian(f: Field) -> Field:
    grid = f.grid
    if grid.backend is BackendKind.SPECTRAL:
        kx, ky = wavenumbers(grid)
        return Field(grid, _ifft(grid, -(kx**2 + ky**2) * _fft(grid, f.values)))
    return divergence(gradient(f))


def dealias(f: Field) -> Field:
    """Zero every Fourier mode whose index exceeds 2/3 of the Nyquist index on either axis."""
    grid = f.grid
    if grid.backend is not BackendKind.SPECTRAL:
        raise WrongBackend("dealiasing is only defined on the spectral backend")
    if f.dealiased:
        return f
    out = _ifft(grid, dealias_mask(grid) * _fft(grid, f.values))
    return Field(grid, out, dealiased=True)


def dealias_vector(v: VectorField) -> VectorField:
    grid = v.grid
    mask = dealias_mask(grid)
    return VectorField(
        grid,
        _ifft(grid, mask * _fft(grid, v.x_values)),
        _ifft(grid, mask * _fft(grid, v.y_values)),
    )


def product(a: Field, b) -> Field:
    """Pointwise product, 2/3-filtered on spectral grids."""
    out = Field(a.grid, a.values * _values(b))
    if a.grid.backend is BackendKind.SPECTRAL:
        return dealias(out)
    return out


def flux(rho: Field, v: VectorField) -> VectorField:
    """``rho * v``, 2/3-filtered componentwise on spectral grids."""
    out = VectorField(v.grid, rho.values * v.x_values, rho.values * v.y_values)
    if v.grid.backend is BackendKind.SPECTRAL:
        return dealias_vector(out)
    return out
