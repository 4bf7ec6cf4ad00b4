"""Tensor-product spectral discretization on rectangles.

Fields are plain ``(ny, nx)`` float arrays living on a :class:`SpatialGrid`.
Periodic grids use the Fourier basis on equispaced nodes; Neumann grids use
the cosine basis ``cos(k pi (x - a) / L)`` sampled at cell midpoints, where
the type-II DCT diagonalizes the Laplacian exactly.

Spectral coefficients are normalized so that the ``(0, 0)`` coefficient is
the domain mean of the field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.fft as sfft

BC = Literal["periodic", "neumann"]


@dataclass(frozen=True)
class SpatialGrid:
    nx: int
    ny: int
    domain: tuple[float, float, float, float]
    bc: str = "periodic"

    x: np.ndarray = field(init=False, repr=False, compare=False)
    y: np.ndarray = field(init=False, repr=False, compare=False)
    eig: np.ndarray = field(init=False, repr=False, compare=False)
    _eig_r: np.ndarray = field(init=False, repr=False, compare=False)
    _mode_w: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        a, b, c, d = self.domain
        if self.nx < 2 or self.ny < 2:
            raise ValueError("need at least 2 nodes per direction")
        if not (b > a and d > c):
            raise ValueError(f"degenerate domain {self.domain}")
        if self.bc not in ("periodic", "neumann"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        Lx, Ly = b - a, d - c
        if self.bc == "periodic":
            x = a + Lx * np.arange(self.nx) / self.nx
            y = c + Ly * np.arange(self.ny) / self.ny
            kx = 2 * np.pi * sfft.fftfreq(self.nx, d=1.0 / self.nx) / Lx
            ky = 2 * np.pi * sfft.fftfreq(self.ny, d=1.0 / self.ny) / Ly
            kxr = 2 * np.pi * sfft.rfftfreq(self.nx, d=1.0 / self.nx) / Lx
            eig = ky[:, None] ** 2 + kx[None, :] ** 2
            eig_r = ky[:, None] ** 2 + kxr[None, :] ** 2
            mode_w = np.full(eig.shape, Lx * Ly)
        else:
            x = a + Lx * (np.arange(self.nx) + 0.5) / self.nx
            y = c + Ly * (np.arange(self.ny) + 0.5) / self.ny
            kx = np.pi * np.arange(self.nx) / Lx
            ky = np.pi * np.arange(self.ny) / Ly
            eig = ky[:, None] ** 2 + kx[None, :] ** 2
            eig_r = eig
            # int cos^2 = L/2 except the constant mode
            wx = np.where(np.arange(self.nx) == 0, 1.0, 0.5)
            wy = np.where(np.arange(self.ny) == 0, 1.0, 0.5)
            mode_w = Lx * Ly * wy[:, None] * wx[None, :]
        for name, val in (("x", x), ("y", y), ("eig", eig), ("_eig_r", eig_r), ("_mode_w", mode_w)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def area(self) -> float:
        a, b, c, d = self.domain
        return (b - a) * (d - c)

    @property
    def cell_area(self) -> float:
        return self.area / (self.nx * self.ny)

    @property
    def quad_weights(self) -> np.ndarray:
        return np.full(self.shape, self.cell_area)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as ``(X, Y)`` arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y)

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")
        return f

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    # transforms

    def transform(self, f: np.ndarray) -> np.ndarray:
        """Spectral coefficients of ``f`` (complex for periodic, real for Neumann)."""
        f = self.check(f)
        if self.bc == "periodic":
            return sfft.fft2(f) / f.size
        # unnormalized DCT-II carries a factor 2 per axis; non-constant cosines
        # have discrete norm N/2 instead of N
        coef = sfft.dctn(f, type=2) / (4.0 * f.size)
        coef[1:, :] *= 2.0
        coef[:, 1:] *= 2.0
        return coef

    def inverse_transform(self, coef: np.ndarray) -> np.ndarray:
        coef = np.asarray(coef)
        if coef.shape != self.shape:
            raise ValueError(f"coefficient shape {coef.shape} does not match grid {self.shape}")
        if self.bc == "periodic":
            return sfft.ifft2(coef * coef.size).real
        c = np.array(coef, dtype=float) * (4.0 * coef.size)
        c[1:, :] /= 2.0
        c[:, 1:] /= 2.0
        return sfft.idctn(c, type=2)

    def _fwd(self, f: np.ndarray) -> np.ndarray:
        if self.bc == "periodic":
            return sfft.rfft2(f)
        return sfft.dctn(f, type=2)

    def _bwd(self, c: np.ndarray) -> np.ndarray:
        if self.bc == "periodic":
            return sfft.irfft2(c, s=self.shape)
        return sfft.idctn(c, type=2)

    # operators

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        f = self.check(f)
        return self._bwd(-self._eig_r * self._fwd(f))

    def solve_shifted_poisson(self, c: float, eps2: float, f: np.ndarray) -> np.ndarray:
        """Solve ``(c I - eps2 * Laplacian) u = f``."""
        if not c > 0:
            raise ValueError(f"shift must be positive, got {c}")
        if eps2 < 0:
            raise ValueError(f"diffusion coefficient must be non-negative, got {eps2}")
        f = self.check(f)
        return self._bwd(self._fwd(f) / (c + eps2 * self._eig_r))

    def apply_shifted(self, c: float, eps2: float, u: np.ndarray) -> np.ndarray:
        """``(c I - eps2 * Laplacian) u``; the forward operator of the solve."""
        u = self.check(u)
        return self._bwd(self._fwd(u) * (c + eps2 * self._eig_r))

    # inner products

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        f, g = self.check(f), self.check(g)
        return float(np.vdot(f, g)) * self.cell_area

    def norm_sq(self, f: np.ndarray) -> float:
        return self.inner(f, f)

    def spectral_inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Inner product evaluated from coefficients (Parseval)."""
        cf, cg = self.transform(f), self.transform(g)
        return float(np.sum(self._mode_w * (cf * np.conj(cg)).real))

    def grad_norm_sq(self, f: np.ndarray) -> float:
        """``int |grad f|^2`` computed from the spectrum of ``-Laplacian``."""
        cf = self.transform(f)
        return float(np.sum(self.eig * self._mode_w * np.abs(cf) ** 2))


def periodic_grid(n: int, length: float = 2 * np.pi) -> SpatialGrid:
    return SpatialGrid(n, n, (0.0, length, 0.0, length), "periodic")


def neumann_grid(n: int, half_width: float = 1.0) -> SpatialGrid:
    h = half_width
    return SpatialGrid(n, n, (-h, h, -h, h), "neumann")


def make_grid(n: int, bc: str, domain: tuple[float, float, float, float]) -> SpatialGrid:
    return SpatialGrid(n, n, tuple(float(v) for v in domain), bc)
