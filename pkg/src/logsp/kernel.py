"""
Free-space convolution with log r, log(1 + r) and log(1 + 1/r).

Two table constructions are available:

``"spectral"`` (default)
    log r is truncated at a radius D covering every source/target pair in the
    box and its exact Fourier transform,

        2 pi [ D log D J1(kD)/k + (J0(kD) - 1)/k^2 ],

    is sampled on a padded periodic grid whose period exceeds 2L + D, so no
    periodic image reaches the box.  For resolved densities the convolution is
    spectrally accurate.  log(1 + r) is sampled directly (its only defect is a
    cone at r = 0) and log(1 + 1/r) is defined as the difference, so
    N0 = N1 - N2 holds to rounding.

``"lattice"``
    Kernels sampled at displacement cell centres on a 2n x 2n zero-padded grid,
    with the r = 0 cell of log r replaced by its mean over the h x h cell.  The
    midpoint error near the singularity is O(h^2), so this scheme is kept as a
    cross-check, not for production values.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy import integrate as sint
from scipy.special import j0, j1

from . import grid as _grid
from .grid import GridFunction, GridSpec

TWO_PI = 2.0 * np.pi


@functools.lru_cache(maxsize=None)
def unit_cell_log_mean() -> float:
    """Mean of log|x| over the unit square centred at the origin.

    Polar integration over the eighth 0 <= theta <= pi/4, r <= 1/(2 cos theta).
    """

    def radial(theta):
        R = 0.5 / np.cos(theta)
        return R * R / 2.0 * np.log(R) - R * R / 4.0

    val, _ = sint.quad(radial, 0.0, np.pi / 4.0, epsabs=1e-14, epsrel=1e-13)
    return 8.0 * val


def truncated_log_transform(k: np.ndarray, D: float) -> np.ndarray:
    """Fourier transform of log|x| * 1{|x| < D} at radial wavenumber k."""
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    zero = k == 0
    kk = np.where(zero, 1.0, k)
    out[...] = TWO_PI * (D * np.log(D) * j1(kk * D) / kk + (j0(kk * D) - 1.0) / kk**2)
    out[zero] = TWO_PI * (0.5 * D * D * np.log(D) - 0.25 * D * D)
    return out


@dataclass(frozen=True, eq=False)
class KernelTables:
    """rfft2 of the three kernels on the padded grid.

    ``fourier[i]`` multiplies rfft2 of the zero-padded density; the inverse
    transform times h^2 is the convolution.  ``real[i]`` holds the effective
    displacement-grid kernel values (periodic layout, index 0 = zero shift).
    """

    spec: GridSpec
    scheme: str
    padded: int
    fourier: tuple[np.ndarray, np.ndarray, np.ndarray]
    real: tuple[np.ndarray, np.ndarray, np.ndarray]
    truncation: float

    def kernel_at(self, kernel_id: int, di: int, dj: int) -> float:
        """Effective kernel value at displacement (di h, dj h)."""
        M = self.padded
        return float(self.real[kernel_id][di % M, dj % M])


def _displacements(M: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    d = np.arange(M)
    d = np.where(d < (M + 1) // 2, d, d - M) * h
    return np.meshgrid(d, d, indexing="ij")


def _spectral_size(spec: GridSpec, D: float) -> int:
    need = int(np.ceil((2.0 * spec.L + D) / spec.h)) + 2
    M = sfft.next_fast_len(need, real=True)
    while M % 2:
        M = sfft.next_fast_len(M + 1, real=True)
    return M


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)
    return tuple(arrays)


@functools.lru_cache(maxsize=8)
def build_kernel_tables(spec: GridSpec, scheme: str = "spectral") -> KernelTables:
    h = spec.h
    w = _grid.fft_workers()
    if scheme == "spectral":
        D = 2.0 * np.sqrt(2.0) * spec.L * (1.0 + 1e-9)
        M = _spectral_size(spec, D)
        kx = TWO_PI * sfft.fftfreq(M, d=h)
        ky = TWO_PI * sfft.rfftfreq(M, d=h)
        KX, KY = np.meshgrid(kx, ky, indexing="ij")
        F0 = truncated_log_transform(np.hypot(KX, KY), D) / h**2
        DX, DY = _displacements(M, h)
        r = np.hypot(DX, DY)
        k1 = np.where(r < D, np.log1p(r), 0.0)
        F1 = sfft.rfft2(k1, workers=w).real
        F2 = F1 - F0
        R0 = sfft.irfft2(F0, s=(M, M), workers=w)
        R1 = k1
        R2 = sfft.irfft2(F2, s=(M, M), workers=w)
    elif scheme == "lattice":
        M = 2 * spec.n
        D = np.inf
        DX, DY = _displacements(M, h)
        r = np.hypot(DX, DY)
        safe = np.where(r > 0, r, 1.0)
        R0 = np.where(r > 0, np.log(safe), np.log(h) + unit_cell_log_mean())
        R1 = np.log1p(r)
        R2 = R1 - R0
        F0, F1, F2 = (sfft.rfft2(a, workers=w).real for a in (R0, R1, R2))
    else:
        raise ValueError(f"unknown kernel scheme {scheme!r}")
    fourier = _freeze(np.ascontiguousarray(F0), np.ascontiguousarray(F1), np.ascontiguousarray(F2))
    real = _freeze(np.asarray(R0), np.asarray(R1), np.asarray(R2))
    return KernelTables(spec, scheme, M, fourier, real, float(D))


def _check(tables: KernelTables, *fields: GridFunction) -> None:
    for f in fields:
        if f.spec != tables.spec:
            raise ValueError(f"grid mismatch: field on {f.spec}, tables built for {tables.spec}")


def convolve_array(tables: KernelTables, kernel_id: int, density: np.ndarray) -> np.ndarray:
    """w(x) = sum_y K(x - y) density(y) h^2 on the original grid."""
    if kernel_id not in (0, 1, 2):
        raise ValueError(f"kernel_id must be 0, 1 or 2, got {kernel_id}")
    spec, M = tables.spec, tables.padded
    n = spec.n
    w = _grid.fft_workers()
    pad = np.zeros((M, M))
    pad[:n, :n] = density
    out = sfft.irfft2(tables.fourier[kernel_id] * sfft.rfft2(pad, workers=w), s=(M, M), workers=w)
    return out[:n, :n] * spec.h**2


def convolve(tables: KernelTables, kernel_id: int, density: GridFunction) -> GridFunction:
    _check(tables, density)
    return GridFunction(density.spec, convolve_array(tables, kernel_id, density.values))


def b_form(tables: KernelTables, kernel_id: int, f: GridFunction, g: GridFunction) -> float:
    """B_i(f, g) = (1/2pi) int int K_i(x - y) f(x) g(y)."""
    _check(tables, f, g)
    w = convolve_array(tables, kernel_id, g.values)
    return _grid.integrate(w * f.values, f.spec) / TWO_PI


def n_functional(tables: KernelTables, kernel_id: int, u: GridFunction) -> float:
    """N_i(u) = B_i(u^2, u^2)."""
    _check(tables, u)
    rho = u.values**2
    w = convolve_array(tables, kernel_id, rho)
    return _grid.integrate(w * rho, u.spec) / TWO_PI
