"""Free energies, per-step energy reports and the memory-kernel positivity check."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .scheme import SchemeConfig, SchemeState, potential
from .spectral import SpatialGrid

CSV_HEADER = ("n", "t", "E", "E_mod", "R", "phi_min", "phi_max", "step_change")


def original_energy(grid: SpatialGrid, phi: np.ndarray, eps2: float) -> float:
    """``E(phi) = int eps2/2 |grad phi|^2 + (phi^2 - 1)^2 / 4``."""
    phi = grid.check(phi)
    return 0.5 * eps2 * grid.grad_norm_sq(phi) + float(np.sum(potential(phi))) * grid.cell_area


def modified_energy(state: SchemeState, config: SchemeConfig) -> float:
    """The discrete energy each scheme provably dissipates.

    L1: ``(eps2 - theta2)/2 |grad phi^n|^2 + R_n^2``. The Crank-Nicolson
    variants add ``theta2/4 |grad(phi^n - phi^{n-1})|^2``, which vanishes for
    ``theta2 = 0``.
    """
    grid = state.grid
    e = 0.5 * (config.eps2 - config.theta2) * grid.grad_norm_sq(state.phi) + state.R**2
    if config.crank_nicolson and config.theta2 and state.phi_prev is not None:
        e += 0.25 * config.theta2 * grid.grad_norm_sq(state.phi - state.phi_prev)
    return e


@dataclass
class EnergyRow:
    n: int
    t: float
    E: float
    E_mod: float
    R: float
    phi_min: float
    phi_max: float
    step_change: float


@dataclass
class EnergyReport:
    rows: list[EnergyRow] = field(default_factory=list)

    def record(self, state: SchemeState, config: SchemeConfig) -> EnergyRow:
        grid = state.grid
        if self.rows and state.t <= self.rows[-1].t:
            raise ValueError("energy report times must increase")
        change = 0.0
        if state.phi_prev is not None:
            change = math.sqrt(grid.norm_sq(state.phi - state.phi_prev))
        row = EnergyRow(
            state.n,
            state.t,
            original_energy(grid, state.phi, config.eps2),
            modified_energy(state, config),
            state.R,
            float(state.phi.min()),
            float(state.phi.max()),
            change,
        )
        self.rows.append(row)
        return row

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def max_increase(self, name: str = "E_mod", relative: bool = True) -> float:
        """Largest step-to-step increase of a column (relative to ``1 + |value|``)."""
        v = self.column(name)
        if v.size < 2:
            return 0.0
        inc = np.diff(v)
        if relative:
            inc = inc / (1.0 + np.abs(v[:-1]))
        return float(max(inc.max(), 0.0))

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.n, repr(r.t), repr(r.E), repr(r.E_mod), repr(r.R),
                        repr(r.phi_min), repr(r.phi_max), repr(r.step_change)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path) -> "EnergyReport":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != CSV_HEADER:
                raise ValueError(f"unexpected energy report header {header}")
            rows = [EnergyRow(int(r[0]), *map(float, r[1:])) for r in reader]
        return cls(rows)


def bilinear_form(psi: Callable[[np.ndarray], np.ndarray], alpha: float,
                  a: float, b: float, order: int = 40,
                  absolute: bool = False) -> float:
    """``1/Gamma(1-alpha) int_a^b psi(s) int_a^s (s - sigma)^-alpha psi(sigma) dsigma ds``.

    Both integrals use Gauss-Jacobi rules: the inner one absorbs the
    ``(s - sigma)^-alpha`` singularity, the outer one the ``(s - a)^(1-alpha)``
    factor the inner integral produces. Exact for polynomial ``psi`` of
    degree below ``order``.

    With ``absolute=True`` the integrand uses ``|psi|``, giving the natural
    scale of the form.
    """
    f = (lambda x: np.abs(psi(x))) if absolute else psi
    xi, wi = roots_jacobi(order, -alpha, 0.0)  # weight (1 - x)^-alpha
    xo, wo = roots_jacobi(order, 0.0, 1.0 - alpha)  # weight (1 + x)^(1 - alpha)
    L = b - a
    s = a + L * (1.0 + xo) / 2.0
    # inner: sigma = a + (s - a)(1 + x)/2, s - sigma = (s - a)(1 - x)/2
    h = (s - a)[:, None]
    sig = a + h * (1.0 + xi[None, :]) / 2.0
    inner_scaled = (f(sig) * wi[None, :]).sum(axis=1) * 0.5 ** (1.0 - alpha)
    # inner = (s - a)^(1 - alpha) * inner_scaled; (s - a)^(1 - alpha) = (L/2)^(1-alpha) (1 + xo)^(1-alpha)
    outer = np.sum(wo * f(s) * inner_scaled) * (L / 2.0) ** (1.0 - alpha) * (L / 2.0)
    return float(outer / math.gamma(1.0 - alpha))


def bilinear_positivity_check(alpha: float, interval: tuple[float, float],
                              samples: Iterable[Callable[[np.ndarray], np.ndarray]],
                              order: int = 40) -> tuple[float, float]:
    """Minimum of the scaled quadratic form over ``samples``.

    Returns ``(min value / scale, max scale)`` where each sample's scale is
    the form evaluated with ``|psi|``.
    """
    a, b = interval
    worst, worst_scale = np.inf, 0.0
    for psi in samples:
        val = bilinear_form(psi, alpha, a, b, order)
        scale = bilinear_form(psi, alpha, a, b, order, absolute=True)
        rel = val / scale if scale > 0 else 0.0
        worst = min(worst, rel)
        worst_scale = max(worst_scale, scale)
    return float(worst), worst_scale
