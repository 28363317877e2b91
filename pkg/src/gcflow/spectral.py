"""Fourier-space infrastructure on the periodic box [0, L)^d.

Conventions
-----------
Fourier coefficients follow the continuum normalization

    f_hat(k) = integral over the box of f(x) exp(-i k.x) dx,

realized as the DFT scaled by dx^d.  Wavenumbers are k = (2*pi/L) * n with
integer n in {-M/2, ..., M/2 - 1} per dimension.  Differential operators
zero the Nyquist modes (n = -M/2) so odd derivatives of real fields stay
real; this is standard pseudospectral practice and only touches the
resolution floor.

The weighted l1 norms

    ||f||_m = (1/L^d) * sum_k |k|^m |f_hat(k)|

(|k| the Euclidean modulus) are the regularity currency used throughout;
see dnorm().
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, NonHermitianInput, NonpositiveH

_ROUNDTRIP_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform collocation grid on the d-torus of side L with M points per axis.

    M must be a power of two, M >= 8; d in {1, 2}.
    """

    d: int
    L: float
    M: int
    # broadcastable wavenumber components, |k|^2, and the Nyquist mask
    kvec: tuple = field(repr=False, compare=False, default=None)
    k2: np.ndarray = field(repr=False, compare=False, default=None)
    kmod: np.ndarray = field(repr=False, compare=False, default=None)
    nyquist: np.ndarray = field(repr=False, compare=False, default=None)

    @staticmethod
    def make(d: int, L: float, M: int) -> "Grid":
        if d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {d}")
        if M < 8 or (M & (M - 1)) != 0:
            raise ValueError(f"M must be a power of two >= 8, got {M}")
        if L <= 0:
            raise ValueError(f"L must be positive, got {L}")
        k1 = 2.0 * np.pi * np.fft.fftfreq(M, d=L / M)
        shape = [1] * d
        kvec = []
        for ax in range(d):
            s = shape.copy()
            s[ax] = M
            kvec.append(k1.reshape(s))
        k2 = sum(k * k for k in kvec)
        k2 = np.broadcast_to(k2, (M,) * d).copy()
        kmod = np.sqrt(k2)
        nyq_1d = np.zeros(M, dtype=bool)
        nyq_1d[M // 2] = True
        nyquist = np.zeros((M,) * d, dtype=bool)
        for ax in range(d):
            s = [1] * d
            s[ax] = M
            nyquist |= nyq_1d.reshape(s)
        g = Grid(d, float(L), M)
        object.__setattr__(g, "kvec", tuple(kvec))
        object.__setattr__(g, "k2", k2)
        object.__setattr__(g, "kmod", kmod)
        object.__setattr__(g, "nyquist", nyquist)
        return g

    @property
    def dx(self) -> float:
        return self.L / self.M

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.d

    def points(self) -> tuple:
        """Coordinate arrays (broadcastable) of the collocation points."""
        x1 = np.arange(self.M) * self.dx
        out = []
        for ax in range(self.d):
            s = [1] * self.d
            s[ax] = self.M
            out.append(x1.reshape(s))
        return tuple(out)

    def periodic_radius(self) -> np.ndarray:
        """Distance from each collocation point to the origin on the torus."""
        x1 = np.arange(self.M) * self.dx
        x1 = np.minimum(x1, self.L - x1)
        if self.d == 1:
            return x1
        return np.sqrt(x1.reshape(-1, 1) ** 2 + x1.reshape(1, -1) ** 2)


@dataclass(frozen=True)
class RealField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        """Collocation quadrature of the field over the box."""
        return float(np.sum(self.values)) * self.grid.cell_volume


@dataclass(frozen=True)
class Spectrum:
    grid: Grid
    coeffs: np.ndarray


def same_grid(a, b) -> None:
    if a.grid is not b.grid and (a.grid.d, a.grid.L, a.grid.M) != (b.grid.d, b.grid.L, b.grid.M):
        raise GridMismatch(f"{a.grid} vs {b.grid}")


def forward(f: RealField) -> Spectrum:
    """Continuum-normalized Fourier coefficients of a real field."""
    return Spectrum(f.grid, np.fft.fftn(f.values) * f.grid.cell_volume)


def inverse(spec: Spectrum) -> RealField:
    """Back-transform; errors out if the imaginary residue is non-negligible."""
    v = np.fft.ifftn(spec.coeffs) / spec.grid.cell_volume
    scale = max(np.max(np.abs(v.real)), 1e-300)
    if np.max(np.abs(v.imag)) > _ROUNDTRIP_RTOL * max(scale, 1.0):
        raise NonHermitianInput(
            f"imaginary residue {np.max(np.abs(v.imag)):.3e} (field scale {scale:.3e})"
        )
    return RealField(spec.grid, v.real)


def gradient(f: RealField) -> tuple:
    """Spectral gradient, one RealField per dimension.  Nyquist modes zeroed."""
    g = f.grid
    fh = np.fft.fftn(f.values)
    fh[g.nyquist] = 0.0
    out = []
    for ax in range(g.d):
        out.append(RealField(g, np.fft.ifftn(1j * g.kvec[ax] * fh).real))
    return tuple(out)


def laplacian(f: RealField) -> RealField:
    g = f.grid
    fh = np.fft.fftn(f.values)
    fh[g.nyquist] = 0.0
    return RealField(g, np.fft.ifftn(-g.k2 * fh).real)


def divergence(fields: tuple) -> RealField:
    """Spectral divergence of a vector field given componentwise."""
    g = fields[0].grid
    acc = np.zeros(g.shape, dtype=complex)
    for ax, f in enumerate(fields):
        fh = np.fft.fftn(f.values)
        fh[g.nyquist] = 0.0
        acc += 1j * g.kvec[ax] * fh
    return RealField(g, np.fft.ifftn(acc).real)


def convolve(kernel_spectrum: Spectrum, f: RealField) -> RealField:
    """Periodic convolution via the pointwise Fourier product W_hat * f_hat."""
    same_grid(kernel_spectrum, f)
    fh = np.fft.fftn(f.values) * kernel_spectrum.coeffs
    return RealField(f.grid, np.fft.ifftn(fh).real)


def helmholtz_inverse(f: RealField, h: float) -> RealField:
    """Apply (1 - h*laplacian)^{-1}: divide each mode by 1 + h|k|^2.

    Uses the same symbol as `laplacian` (Nyquist modes carry no derivative),
    so (1 - h*laplacian) composed with this map is the exact identity."""
    if h <= 0:
        raise NonpositiveH(f"h must be positive, got {h}")
    g = f.grid
    k2 = np.where(g.nyquist, 0.0, g.k2)
    fh = np.fft.fftn(f.values) / (1.0 + h * k2)
    return RealField(g, np.fft.ifftn(fh).real)


def dnorm(f: RealField, m: int) -> float:
    """Weighted l1 Fourier norm (1/L^d) sum_k |k|^m |f_hat(k)|, m in 0..4."""
    if m not in (0, 1, 2, 3, 4):
        raise ValueError(f"m must be in 0..4, got {m}")
    g = f.grid
    mod = np.abs(np.fft.fftn(f.values)) * g.cell_volume
    if m:
        mod = mod * g.kmod**m
    return float(np.sum(mod)) / g.volume


def l2_norm(f: RealField) -> float:
    """sqrt of the collocation quadrature of f^2."""
    return float(np.sqrt(np.sum(f.values**2) * f.grid.cell_volume))


def inner_l2(f: RealField, g_: RealField) -> float:
    same_grid(f, g_)
    return float(np.sum(f.values * g_.values) * f.grid.cell_volume)
