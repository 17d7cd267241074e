"""
Periodic 2D vector fields stored as Fourier coefficient arrays.

A velocity field w on the torus [0, l)^2, sampled on an n x n grid, is held
as complex coefficients c[comp, j1, j2] in numpy FFT layout, normalized so

    w(x) = sum_k c_k exp(i k . x),   k = (2 pi / l) * (j1, j2).

With this scaling the k = 0 coefficient is the bulk (mean) velocity and all
L2 quantities are exact Parseval sums: no quadrature error enters any norm
or inner product. Everything here is a pure function of its inputs; fields
are treated as immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "NormReport",
    "zero_field",
    "from_physical",
    "to_physical",
    "l2_norm",
    "h1_seminorm",
    "inner",
    "norms",
    "leray_project",
    "dealias",
    "max_divergence",
    "random_band_limited",
]


@dataclass(frozen=True)
class Grid:
    """Square periodic grid: n modes per dimension (even, >= 4), side length l."""

    n: int
    l: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"grid needs even n >= 4, got n={self.n}")
        if self.l <= 0:
            raise ValueError(f"domain side must be positive, got l={self.l}")
        j1d = np.rint(np.fft.fftfreq(self.n, d=1.0 / self.n)).astype(np.int64)
        jx, jy = np.meshgrid(j1d, j1d, indexing="ij")
        scale = 2.0 * math.pi / self.l
        kx = scale * jx
        ky = scale * jy
        k2 = kx * kx + ky * ky
        k2_inv = np.zeros_like(k2)
        k2_inv[k2 > 0] = 1.0 / k2[k2 > 0]
        # 2/3-rule mask: keep modes with max(|j1|, |j2|) <= n/3
        cut = self.n / 3.0
        mask = (np.abs(jx) <= cut) & (np.abs(jy) <= cut)
        x1d = np.arange(self.n) * (self.l / self.n)
        xm, ym = np.meshgrid(x1d, x1d, indexing="ij")
        for name, val in (
            ("jx", jx),
            ("jy", jy),
            ("kx", kx),
            ("ky", ky),
            ("k2", k2),
            ("k2_inv", k2_inv),
            ("dealias_mask", mask),
            ("x", xm),
            ("y", ym),
        ):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def area(self) -> float:
        return self.l * self.l

    @property
    def shape(self) -> tuple[int, int, int]:
        return (2, self.n, self.n)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Two-component field as Fourier coefficients of shape (2, n, n)."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * a)

    __rmul__ = __mul__


@dataclass(frozen=True)
class NormReport:
    """L2 norm, H1 seminorm (full gradient), and their ratio lambda_T = l2/h1."""

    l2: float
    h1semi: float
    lambda_t: float


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a.n != b.n or a.l != b.l:
        raise ValueError(f"grid mismatch: ({a.n}, l={a.l}) vs ({b.n}, l={b.l})")


def _phys(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Coefficient array -> real samples; works on any leading shape."""
    return np.real(np.fft.ifft2(coeffs, axes=(-2, -1))) * (grid.n * grid.n)


def _spec(samples: np.ndarray, grid: Grid) -> np.ndarray:
    """Real samples -> coefficient array; works on any leading shape."""
    return np.fft.fft2(samples, axes=(-2, -1)) / (grid.n * grid.n)


def zero_field(grid: Grid) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=np.complex128))


def from_physical(samples: np.ndarray, grid: Grid) -> SpectralField:
    """Build a field from real point samples of shape (2, n, n)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != grid.shape:
        raise ValueError(
            f"sample shape {samples.shape} does not match grid {grid.shape}"
        )
    return SpectralField(grid, _spec(samples, grid))


def to_physical(f: SpectralField) -> np.ndarray:
    """Point samples of shape (2, n, n) on the uniform grid."""
    return _phys(f.coeffs, f.grid)


def l2_norm(f: SpectralField) -> float:
    return math.sqrt(np.sum(np.abs(f.coeffs) ** 2).real * f.grid.area)


def h1_seminorm(f: SpectralField) -> float:
    return math.sqrt(np.sum(f.grid.k2 * np.abs(f.coeffs) ** 2).real * f.grid.area)


def inner(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product (f, g)."""
    _check_same_grid(f.grid, g.grid)
    return float(np.real(np.sum(f.coeffs * np.conj(g.coeffs))) * f.grid.area)


def norms(f: SpectralField) -> NormReport:
    l2 = l2_norm(f)
    h1 = h1_seminorm(f)
    lam = l2 / h1 if h1 > 0.0 else math.inf
    return NormReport(l2=l2, h1semi=h1, lambda_t=lam)


def leray_project(f: SpectralField) -> SpectralField:
    """Remove the gradient part per mode: c -> c - k (k . c) / |k|^2 (k != 0)."""
    g = f.grid
    c = f.coeffs
    div = g.kx * c[0] + g.ky * c[1]
    corr = div * g.k2_inv
    out = np.empty_like(c)
    out[0] = c[0] - g.kx * corr
    out[1] = c[1] - g.ky * corr
    return SpectralField(g, out)


def dealias(f: SpectralField) -> SpectralField:
    """Zero every coefficient with max(|j1|, |j2|) > n/3."""
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask)


def max_divergence(f: SpectralField) -> float:
    """max_k |k . c_k|, the per-mode divergence residual."""
    g = f.grid
    return float(np.max(np.abs(g.kx * f.coeffs[0] + g.ky * f.coeffs[1])))


def random_band_limited(
    grid: Grid,
    rng: np.random.Generator,
    kmax: int | None = None,
    divergence_free: bool = True,
    mean_zero: bool = True,
) -> SpectralField:
    """
    Random real field band-limited to max(|j1|, |j2|) <= kmax.

    kmax defaults to the 2/3 dealiasing cutoff. Conjugate symmetry holds by
    construction (the field is built from real samples).
    """
    f = from_physical(rng.standard_normal(grid.shape), grid)
    c = f.coeffs
    if kmax is None:
        mask = grid.dealias_mask
    else:
        mask = (np.abs(grid.jx) <= kmax) & (np.abs(grid.jy) <= kmax)
    c = c * mask
    if mean_zero:
        c[:, 0, 0] = 0.0
    out = SpectralField(grid, c)
    if divergence_free:
        out = leray_project(out)
    return out
