"""Energy-stable auxiliary-variable steppers for the time-fractional Allen-Cahn equation.

The unknowns are the phase field ``phi`` and the scalar ``R``, a surrogate of
``sqrt(E_theta + C0)``. Every step costs two shifted-Poisson solves with the
operator ``A = beta I - kappa Laplacian``:

* ``l1``: first order, ``beta = b0 / tau``, ``kappa = eps2``; explicit terms at ``t_n``.
* ``l1cn`` and ``l1plus``: Crank-Nicolson diffusion (``kappa = eps2 / 2``),
  explicit terms at the extrapolated midpoint ``phi^{n+1/2}``.

``alpha = 1`` selects the integer-order limit (``b0 = 1``, no memory).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from .history import make_history
from .spectral import SpatialGrid
from .timegrid import SCHEMES, TimeMesh, local_weight

Source = Optional[Callable[[float], np.ndarray]]


class SchemeError(RuntimeError):
    """A step could not be taken (degenerate auxiliary variable, blow-up)."""


def potential(phi: np.ndarray) -> np.ndarray:
    return 0.25 * (phi**2 - 1.0) ** 2


def potential_prime(phi: np.ndarray) -> np.ndarray:
    return phi**3 - phi


@dataclass(frozen=True)
class SchemeConfig:
    alpha: float
    eps2: float
    theta2: float = 0.0
    C0: float = 0.0
    scheme: str = "l1"
    history: str = "auto"
    soe_tol: float = 1e-10
    r_floor: float = 1e-12

    def __post_init__(self) -> None:
        if not (0 < self.alpha < 1 or self.alpha == 1.0):
            raise ValueError(f"alpha must lie in (0, 1) or equal 1, got {self.alpha}")
        if not self.eps2 > 0:
            raise ValueError(f"eps2 must be positive, got {self.eps2}")
        if not 0 <= self.theta2 <= self.eps2:
            raise ValueError(f"need 0 <= theta2 <= eps2, got theta2={self.theta2}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.history not in ("auto", "direct", "soe"):
            raise ValueError(f"unknown history mode {self.history!r}")

    @property
    def classical(self) -> bool:
        return self.alpha == 1.0

    @property
    def crank_nicolson(self) -> bool:
        return self.scheme != "l1"


@dataclass(frozen=True)
class StepInfo:
    """Quantities of the step that produced a state; used by :func:`residual`."""

    tau: float
    beta: float
    kappa: float
    gamma: np.ndarray
    hist: np.ndarray
    source: np.ndarray
    phi_star: np.ndarray
    R_star: float
    sigma: float


@dataclass(frozen=True)
class SchemeState:
    """``(phi^n, R^n)`` plus what the next step needs.

    The history evaluator is shared between consecutive states and advanced
    in place by each step, so a state must not be stepped twice.
    """

    n: int
    phi: np.ndarray
    R: float
    mesh: TimeMesh
    grid: SpatialGrid
    history: Any
    phi_prev: Optional[np.ndarray] = None
    R_prev: Optional[float] = None
    info: Optional[StepInfo] = field(default=None, repr=False)

    @property
    def t(self) -> float:
        return float(self.mesh.points[self.n])


def theta_energy(grid: SpatialGrid, phi: np.ndarray, theta2: float) -> float:
    """``E_theta = int theta2/2 |grad phi|^2 + F(phi)``."""
    val = float(np.sum(potential(phi))) * grid.cell_area
    if theta2:
        val += 0.5 * theta2 * grid.grad_norm_sq(phi)
    return val


def init_state(phi0: np.ndarray, config: SchemeConfig, mesh: TimeMesh, grid: SpatialGrid) -> SchemeState:
    phi0 = grid.check(phi0).copy()
    if not np.all(np.isfinite(phi0)):
        raise ValueError("initial field has non-finite values")
    e0 = theta_energy(grid, phi0, config.theta2)
    if not e0 + config.C0 > 0:
        raise ValueError(
            f"E_theta(phi0) + C0 = {e0 + config.C0:.6g} is not positive; "
            f"choose C0 > {-e0:.6g}"
        )
    hist = make_history(config.scheme, mesh, config.alpha, grid.shape, config.history, config.soe_tol)
    return SchemeState(0, phi0, float(np.sqrt(e0 + config.C0)), mesh, grid, hist)


def _sample(source: Source, grid: SpatialGrid, t: float) -> np.ndarray:
    if source is None:
        return np.zeros(grid.shape)
    return grid.check(source(t))


def _trapezoid(source: Source, grid: SpatialGrid, t0: float, t1: float) -> np.ndarray:
    """Trapezoidal average of the source over a step; midpoint if ``s(t0)`` is singular."""
    if source is None:
        return np.zeros(grid.shape)
    s0 = grid.check(source(t0))
    if not np.all(np.isfinite(s0)):
        return grid.check(source(0.5 * (t0 + t1)))
    return 0.5 * (s0 + grid.check(source(t1)))


def _advance(state: SchemeState, config: SchemeConfig, source: Source) -> SchemeState:
    mesh, grid = state.mesh, state.grid
    n = state.n
    if n >= mesh.M:
        raise SchemeError(f"already at the final time level {mesh.M}")
    t = mesh.points
    tau = float(t[n + 1] - t[n])
    phi, R = state.phi, state.R
    if abs(R) <= config.r_floor:
        raise SchemeError(f"|R^{n}| = {abs(R):.3e} fell below r_floor = {config.r_floor:.1e}")

    b0 = 1.0 if config.classical else local_weight(config.scheme, tau, config.alpha)
    beta = b0 / tau
    hist = state.history.evaluate(n)
    lap_phi = grid.laplacian(phi)

    if config.scheme == "l1":
        phi_s, R_s = phi, R
        kappa = config.eps2
        lap_s = lap_phi
        src = _sample(source, grid, float(t[n + 1]))
        rhs = beta * phi
        # rho = R^{n+1} / R^n
        K, K_ratio0 = 2.0 * R * R, 2.0 * R * R
    else:
        if state.phi_prev is None:
            phi_s, R_s = phi, R
            lap_s = lap_phi
        else:
            q = tau / (2.0 * float(t[n] - t[n - 1]))
            phi_s = phi + q * (phi - state.phi_prev)
            R_s = R + q * (R - state.R_prev)
            lap_s = grid.laplacian(phi_s)
        if abs(R_s) <= config.r_floor:
            raise SchemeError(f"extrapolated |R| = {abs(R_s):.3e} fell below r_floor")
        kappa = 0.5 * config.eps2
        src = _trapezoid(source, grid, float(t[n]), float(t[n + 1]))
        rhs = beta * phi + kappa * lap_phi
        # rho = (R^{n+1} + R^n) / (2 R^{n+1/2})
        K, K_ratio0 = 4.0 * R_s * R_s, 4.0 * R_s * R

    gamma = potential_prime(phi_s) + hist
    if config.theta2:
        gamma = gamma - config.theta2 * lap_s
        rhs = rhs - config.theta2 * lap_s

    # A phi^{n+1} = rhs + src - rho * gamma, with rho linear in (gamma, phi^{n+1}).
    # Eliminating rho directly keeps the algebra bounded as R -> 0, where the
    # 1 / (1 + sigma) form cancels two O(1 / R^2) terms.
    u = grid.solve_shifted_poisson(beta, kappa, rhs + src)
    v = grid.solve_shifted_poisson(beta, kappa, gamma)
    gv = grid.inner(gamma, v)
    rho = (K_ratio0 + grid.inner(gamma, u - phi)) / (K + gv)
    phi_new = u - rho * v
    if not np.all(np.isfinite(phi_new)):
        raise SchemeError(f"non-finite field at step {n + 1}")
    R_new = rho * R if config.scheme == "l1" else 2.0 * R_s * rho - R
    sigma = gv / K

    state.history.push((phi_new - phi) / tau)
    info = StepInfo(tau, beta, kappa, gamma, hist, src, phi_s, float(R_s), float(sigma))
    return SchemeState(n + 1, phi_new, float(R_new), mesh, grid, state.history, phi, R, info)


def _require(config: SchemeConfig, scheme: str) -> SchemeConfig:
    return config if config.scheme == scheme else replace(config, scheme=scheme)


def step_l1(state: SchemeState, config: SchemeConfig, source: Source = None) -> SchemeState:
    return _advance(state, _require(config, "l1"), source)


def step_l1cn(state: SchemeState, config: SchemeConfig, source: Source = None) -> SchemeState:
    return _advance(state, _require(config, "l1cn"), source)


def step_l1plus(state: SchemeState, config: SchemeConfig, source: Source = None) -> SchemeState:
    return _advance(state, _require(config, "l1plus"), source)


def step(state: SchemeState, config: SchemeConfig, source: Source = None) -> SchemeState:
    return _advance(state, config, source)


def residual(prev: SchemeState, new: SchemeState, config: SchemeConfig) -> float:
    """Relative residual of the scheme equations at the pair ``(prev, new)``.

    The field equation is evaluated in its unreduced form (before ``R^{n+1}``
    is eliminated), so this checks the two-solve shortcut independently.
    """
    info = new.info
    if info is None or new.n != prev.n + 1:
        raise ValueError("residual needs two consecutive states produced by a step")
    grid = new.grid
    dphi = new.phi - prev.phi
    if config.scheme == "l1":
        ratio = new.R / prev.R
    else:
        ratio = (new.R + prev.R) / (2.0 * info.R_star)
    lap_s = grid.laplacian(info.phi_star)
    # beta phi^{n+1} and beta phi^n stay separate so the scale never collapses
    terms = [
        info.beta * new.phi,
        -info.beta * prev.phi,
        -info.kappa * grid.laplacian(new.phi),
        -(config.eps2 - info.kappa) * grid.laplacian(prev.phi),
        (1.0 - ratio) * config.theta2 * lap_s,
        ratio * (potential_prime(info.phi_star) + info.hist),
        -info.source,
    ]
    field_res = np.max(np.abs(sum(terms)))
    field_scale = max(max(float(np.max(np.abs(x))) for x in terms), 1e-300)

    # scalar equation multiplied through by 2 R*, so it stays meaningful as R -> 0;
    # the scale is the size of its operands: R* R^{n+1}, R* R^n and |gamma| |dphi|
    drive = potential_prime(info.phi_star) + info.hist - config.theta2 * lap_s
    lhs = 2.0 * info.R_star * (new.R - prev.R)
    rhs = grid.inner(drive, dphi)
    scalar_scale = max(
        2.0 * abs(info.R_star) * max(abs(new.R), abs(prev.R)),
        math.sqrt(grid.norm_sq(drive) * grid.norm_sq(dphi)),
        1e-300,
    )
    scalar_res = abs(lhs - rhs) / scalar_scale
    return max(field_res / field_scale, scalar_res)
