"""Time meshes and quadrature weights for the discrete Caputo operators.

All three weight families split the Caputo integral at ``t_n`` into a local
part (the step being taken) and a history part (all earlier intervals).
Weights are indexed so that ``b[0]`` multiplies the current difference
quotient and ``b[n - k]`` multiplies the quotient on ``[t_k, t_{k+1}]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

SchemeName = Literal["l1", "l1cn", "l1plus"]
SCHEMES: tuple[str, ...] = ("l1", "l1cn", "l1plus")


@dataclass(frozen=True)
class TimeMesh:
    """A strictly increasing time grid ``0 = t_0 < ... < t_M = T``."""

    points: np.ndarray
    kind: str = "custom"
    r: float | None = None
    segments: tuple = field(default=())

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a mesh needs at least two points")
        if pts[0] != 0.0:
            raise ValueError(f"mesh must start at 0, got {pts[0]}")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("mesh points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def M(self) -> int:
        return self.points.size - 1

    @property
    def T(self) -> float:
        return float(self.points[-1])

    @property
    def tau(self) -> np.ndarray:
        """Step sizes; ``tau[n - 1]`` is the paper-style ``tau_n``."""
        return np.diff(self.points)

    def step(self, n: int) -> float:
        """Size of step ``n`` (``t_n - t_{n-1}``), ``1 <= n <= M``."""
        if not 1 <= n <= self.M:
            raise IndexError(f"step index out of range: {n}")
        return float(self.points[n] - self.points[n - 1])

    @property
    def tau_max(self) -> float:
        return float(self.tau.max())

    @property
    def tau_min(self) -> float:
        return float(self.tau.min())


def build_mesh(M: int, r: float = 1.0, T: float = 1.0) -> TimeMesh:
    """Graded mesh ``t_n = (n / M)**r * T``; ``r = 1`` is uniform."""
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    if r < 1:
        raise ValueError(f"grading exponent must satisfy r >= 1, got {r}")
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    M = int(M)
    pts = (np.arange(M + 1) / M) ** r * T
    pts[-1] = T
    kind = "uniform" if r == 1 else "graded"
    return TimeMesh(pts, kind=kind, r=float(r), segments=(("graded", M, float(r), float(T)),))


def build_composite_mesh(
    graded_part: tuple[int, float, float], uniform_part: tuple[float, float]
) -> TimeMesh:
    """Graded points on ``[0, T1]`` followed by steps of ``dt`` up to ``T``.

    If ``dt`` does not divide ``T - T1`` the final step is shortened.
    """
    M1, r, T1 = graded_part
    dt, T = uniform_part
    if not T1 < T:
        raise ValueError(f"graded segment end {T1} must lie before horizon {T}")
    if not dt > 0:
        raise ValueError(f"uniform step must be positive, got {dt}")
    head = build_mesh(M1, r, T1).points
    ratio = (T - T1) / dt
    nsteps = round(ratio)
    if abs(ratio - nsteps) > 1e-9 * max(1.0, ratio):
        nsteps = math.ceil(ratio)
    tail = T1 + dt * np.arange(1, nsteps + 1)
    tail[-1] = T
    pts = np.concatenate([head, tail])
    segs = (("graded", int(M1), float(r), float(T1)), ("uniform", float(dt), float(T)))
    return TimeMesh(pts, kind="composite", r=float(r), segments=segs)


# {{{ weights


@dataclass(frozen=True)
class QuadWeights:
    """Weights for advancing from ``t_n`` to ``t_{n+1}``."""

    scheme: str
    n: int
    b: np.ndarray

    @property
    def local(self) -> float:
        return float(self.b[0])

    @property
    def history(self) -> np.ndarray:
        return self.b[1:]


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError(f"fractional order must lie in (0, 1), got {alpha}")


def _check_step(mesh: TimeMesh, n: int) -> None:
    if not 0 <= n <= mesh.M - 1:
        raise IndexError(f"step index must satisfy 0 <= n <= {mesh.M - 1}, got {n}")


def powdiff(x: np.ndarray, d: np.ndarray, p: float) -> np.ndarray:
    """``(x + d)**p - x**p`` for ``x >= 0, d > 0`` without cancellation."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    out = np.empty(np.broadcast(x, d).shape)
    x, d = np.broadcast_arrays(x, d)
    zero = x == 0
    out[zero] = d[zero] ** p
    xs, ds = x[~zero], d[~zero]
    out[~zero] = xs**p * np.expm1(p * np.log1p(ds / xs))
    return out


def mixed_powdiff(a: np.ndarray, h: float, d: np.ndarray, p: float) -> np.ndarray:
    """Second difference ``(a+h+d)**p - (a+d)**p - (a+h)**p + a**p``.

    For ``a`` much larger than ``h + d`` the four terms nearly cancel, so the
    difference is rewritten as a product of ``expm1`` factors whose leading
    orders differ only by the factor ``(p - 1) / p``.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    a, d = np.broadcast_arrays(a, d)
    out = np.empty(a.shape)
    near = a < 4.0 * (h + d)
    an, dn = a[near], d[near]
    # difference of first differences, shifted by the larger of h and d so the
    # remaining cancellation is bounded by a / max(h, d)
    big, small = np.maximum(h, dn), np.minimum(h, dn)
    out[near] = powdiff(an + big, small, p) - powdiff(an, small, p)
    af, df = a[~near], d[~near]
    u1 = h / (af + df)
    du = h * df / (af * (af + df))

    def em(u: np.ndarray) -> np.ndarray:
        return np.expm1(p * np.log1p(u))

    first = em(df / af) * em(u1)
    second = (1.0 + u1) ** p * em(du / (1.0 + u1))
    out[~near] = af**p * (first - second)
    return out


def _l1_entries(t: np.ndarray, n: int, k: np.ndarray, alpha: float) -> np.ndarray:
    # int_{t_k}^{t_{k+1}} (t_{n+1} - s)^{-alpha} ds / Gamma(1 - alpha)
    p = 1.0 - alpha
    x = t[n + 1] - t[k + 1]
    return powdiff(x, t[k + 1] - t[k], p) / math.gamma(2.0 - alpha)


def _l1cn_entries(t: np.ndarray, n: int, k: np.ndarray, alpha: float) -> np.ndarray:
    p = 1.0 - alpha
    half = 0.5 * (t[n + 1] - t[n])
    x = (t[n] - t[k + 1]) + half
    return powdiff(x, t[k + 1] - t[k], p) / math.gamma(2.0 - alpha)


def _l1plus_entries(t: np.ndarray, n: int, k: np.ndarray, alpha: float) -> np.ndarray:
    p = 2.0 - alpha
    h = t[n + 1] - t[n]
    a = t[n] - t[k + 1]
    return mixed_powdiff(a, h, t[k + 1] - t[k], p) / (math.gamma(3.0 - alpha) * h)


_ENTRY = {"l1": _l1_entries, "l1cn": _l1cn_entries, "l1plus": _l1plus_entries}


def local_weight(scheme: str, tau: float, alpha: float) -> float:
    """Weight ``b[0]`` of the local operator for a step of size ``tau``."""
    _check_alpha(alpha)
    if scheme == "l1":
        return tau ** (1 - alpha) / math.gamma(2 - alpha)
    if scheme == "l1cn":
        return tau ** (1 - alpha) / (math.gamma(2 - alpha) * 2 ** (1 - alpha))
    if scheme == "l1plus":
        return tau ** (1 - alpha) / math.gamma(3 - alpha)
    raise ValueError(f"unknown scheme {scheme!r}")


def weight_entries(
    scheme: str, mesh: TimeMesh, n: int, alpha: float, j: Sequence[int] | np.ndarray
) -> np.ndarray:
    """Selected entries ``b[j]`` (``j >= 1``) without forming the full vector."""
    _check_alpha(alpha)
    _check_step(mesh, n)
    j = np.asarray(j, dtype=int)
    if np.any((j < 1) | (j > n)):
        raise IndexError(f"history index out of range 1..{n}")
    return _ENTRY[scheme](mesh.points, n, n - j, alpha)


def quad_weights(scheme: str, mesh: TimeMesh, n: int, alpha: float) -> QuadWeights:
    _check_alpha(alpha)
    _check_step(mesh, n)
    if scheme not in _ENTRY:
        raise ValueError(f"unknown scheme {scheme!r}")
    b = np.empty(n + 1)
    b[0] = local_weight(scheme, mesh.step(n + 1), alpha)
    if n > 0:
        k = np.arange(n - 1, -1, -1)  # b[j] <-> k = n - j
        b[1:] = _ENTRY[scheme](mesh.points, n, k, alpha)
    return QuadWeights(scheme, n, b)


def l1_weights(mesh: TimeMesh, n: int, alpha: float) -> QuadWeights:
    return quad_weights("l1", mesh, n, alpha)


def l1cn_weights(mesh: TimeMesh, n: int, alpha: float) -> QuadWeights:
    return quad_weights("l1cn", mesh, n, alpha)


def l1plus_weights(mesh: TimeMesh, n: int, alpha: float) -> QuadWeights:
    return quad_weights("l1plus", mesh, n, alpha)


def classical_weights(n: int) -> QuadWeights:
    """Integer-order limit: the local operator is the plain difference quotient."""
    b = np.zeros(n + 1)
    b[0] = 1.0
    return QuadWeights("classical", n, b)


def graded_l1_weights(M: int, r: float, T: float, n: int, alpha: float) -> np.ndarray:
    """Closed-form L1 weights on ``t_n = (n/M)**r T`` (the graded-mesh formula)."""
    j = np.arange(n + 1)
    c = T ** (1 - alpha) / (math.gamma(2 - alpha) * M ** ((1 - alpha) * r))
    return c * (
        ((n + 1.0) ** r - (n - j) ** r) ** (1 - alpha)
        - ((n + 1.0) ** r - (n - j + 1.0) ** r) ** (1 - alpha)
    )


# }}}
