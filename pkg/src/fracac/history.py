"""History part of the discrete Caputo operators.

Two evaluators share one interface (``push`` a difference quotient after each
step, ``evaluate(n)`` before step ``n``):

* :class:`DirectHistory` stores every difference quotient and applies the
  exact weights, O(n) work per step.
* :class:`SOEHistory` replaces the kernel ``t**-alpha`` by a sum of
  exponentials and carries one running field per exponential, O(1) work per
  step in the number of past steps.

In the fast path the most recent history interval ``[t_{n-1}, t_n]`` is
still applied with its exact weight. For the L1+ operator the kernel argument
on that interval reaches zero, outside the range any exponential sum covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainccinv, roots_jacobi

from .timegrid import QuadWeights, TimeMesh, quad_weights, weight_entries


class SOEFitError(RuntimeError):
    """The kernel approximation did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float) -> None:
        super().__init__(message)
        self.achieved = achieved


# {{{ direct


class HistoryBuffer:
    """Growable store of difference quotients ``(phi^{k+1} - phi^k) / tau_{k+1}``."""

    def __init__(self, shape: tuple[int, ...], capacity: int = 16) -> None:
        self.shape = tuple(shape)
        self._data = np.empty((max(capacity, 1), *self.shape))
        self._n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def diffs(self) -> np.ndarray:
        return self._data[: self._n]

    @property
    def nbytes(self) -> int:
        return self._n * int(np.prod(self.shape)) * 8

    def append(self, diff: np.ndarray) -> None:
        diff = np.asarray(diff, dtype=float)
        if diff.shape != self.shape:
            raise ValueError(f"difference shape {diff.shape} != buffer shape {self.shape}")
        if not np.all(np.isfinite(diff)):
            raise ValueError("non-finite difference quotient")
        if self._n == self._data.shape[0]:
            grown = np.empty((2 * self._data.shape[0], *self.shape))
            grown[: self._n] = self._data[: self._n]
            self._data = grown
        self._data[self._n] = diff
        self._n += 1


def direct_history(buffer: HistoryBuffer, weights: QuadWeights) -> np.ndarray:
    """``sum_{k<n} b[n-k] * diffs[k]``."""
    n = len(buffer)
    if n != weights.n:
        raise ValueError(f"buffer holds {n} steps but weights are for step {weights.n}")
    if n == 0:
        return np.zeros(buffer.shape)
    # b[n-k] for k = 0..n-1 is b[n:0:-1]
    return np.tensordot(weights.b[n:0:-1], buffer.diffs, axes=1)


class DirectHistory:
    def __init__(self, scheme: str, mesh: TimeMesh, alpha: float, shape: tuple[int, int]) -> None:
        self.scheme = scheme
        self.mesh = mesh
        self.alpha = alpha
        self.buffer = HistoryBuffer(shape)
        self.last_eval_terms = 0

    def __len__(self) -> int:
        return len(self.buffer)

    def push(self, diff: np.ndarray) -> None:
        self.buffer.append(diff)

    def evaluate(self, n: int) -> np.ndarray:
        w = quad_weights(self.scheme, self.mesh, n, self.alpha)
        self.last_eval_terms = n
        return direct_history(self.buffer, w)


class NullHistory:
    """Integer-order runs have no memory term."""

    def __init__(self, shape: tuple[int, int]) -> None:
        self.shape = shape
        self._n = 0
        self.last_eval_terms = 0

    def __len__(self) -> int:
        return self._n

    def push(self, diff: np.ndarray) -> None:
        self._n += 1

    def evaluate(self, n: int) -> np.ndarray:
        return np.zeros(self.shape)


# }}}


# {{{ sum of exponentials


@dataclass(frozen=True)
class SOEApprox:
    """``t**-alpha ~ sum_i weights[i] * exp(-nodes[i] * t)`` on ``[delta, T]``."""

    alpha: float
    nodes: np.ndarray
    weights: np.ndarray
    delta: float
    T: float
    tol: float
    achieved: float

    @property
    def size(self) -> int:
        return self.nodes.size

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t, self.nodes)) @ self.weights

    def max_rel_error(self, samples: int = 10_000) -> float:
        t = np.geomspace(self.delta, self.T, samples)
        return float(np.max(np.abs(self(t) * t**self.alpha - 1.0)))


def _soe_rule(alpha: float, delta: float, T: float, tol: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Gamma(alpha) t^-alpha = int_0^inf exp(-t s) s^(alpha - 1) ds
    s0 = 1.0 / T
    smax = gammainccinv(alpha, tol / 4.0) / delta
    nint = max(1, math.ceil(math.log2(smax / s0)))

    x, w = roots_jacobi(n, 0.0, alpha - 1.0)
    nodes = [s0 * (1.0 + x) / 2.0]
    weights = [(s0 / 2.0) ** alpha * w]

    xg, wg = np.polynomial.legendre.leggauss(n)
    for j in range(nint):
        a = s0 * 2.0**j
        s = a * (1.0 + (1.0 + xg) / 2.0)
        nodes.append(s)
        weights.append(a / 2.0 * wg * s ** (alpha - 1.0))

    return np.concatenate(nodes), np.concatenate(weights) / math.gamma(alpha)


def fit_soe(
    alpha: float,
    delta: float,
    T: float,
    tol: float = 1e-10,
    max_modes: int = 512,
    samples: int = 10_000,
) -> SOEApprox:
    """Sum-of-exponentials fit of ``t**-alpha`` with relative error ``tol`` on ``[delta, T]``.

    A Gauss-Jacobi rule covers ``[0, 1/T]`` and Gauss-Legendre rules cover
    dyadic panels up to the cutoff where the incomplete-gamma tail drops
    below ``tol / 4``. The per-panel order is raised until the relative error
    on ``samples`` geometric points is at most ``tol / 2``.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"fractional order must lie in (0, 1), got {alpha}")
    if not 0 < delta < T:
        raise ValueError(f"need 0 < delta < T, got delta={delta}, T={T}")
    if not 1e-14 < tol < 1e-2:
        raise ValueError(f"tolerance must lie in (1e-14, 1e-2), got {tol}")

    t = np.geomspace(delta, T, samples)
    ta = t**alpha
    best = np.inf
    for n in range(2, 64):
        nodes, weights = _soe_rule(alpha, delta, T, tol, n)
        if nodes.size > max_modes:
            break
        err = float(np.max(np.abs((np.exp(-np.outer(t, nodes)) @ weights) * ta - 1.0)))
        best = min(best, err)
        if err <= tol / 2:
            return SOEApprox(alpha, nodes, weights, float(delta), float(T), float(tol), err)
    raise SOEFitError(
        f"sum-of-exponentials fit reached relative error {best:.3e} > {tol:.1e} "
        f"within {max_modes} modes",
        best,
    )


class SOEHistory:
    """Fast history evaluation with running exponential modes.

    ``modes[i]`` holds ``sum_{k <= m-2} D_k int_{t_k}^{t_{k+1}} exp(-s_i (t_{m-1} - s)) ds``
    after ``m`` quotients have been pushed, where ``D_k`` is the quotient on
    ``[t_k, t_{k+1}]``. The newest quotient waits in ``_last`` until the next
    push folds it in.
    """

    def __init__(
        self,
        scheme: str,
        mesh: TimeMesh,
        alpha: float,
        shape: tuple[int, int],
        tol: float = 1e-10,
        approx: SOEApprox | None = None,
    ) -> None:
        self.scheme = scheme
        self.mesh = mesh
        self.alpha = alpha
        self.shape = tuple(shape)
        if approx is None:
            approx = fit_soe(alpha, mesh.tau_min, mesh.T, tol)
        self.approx = approx
        self.modes = np.zeros((approx.size, *self.shape))
        self._last: np.ndarray | None = None
        self._n = 0
        self._scale = approx.weights / math.gamma(1.0 - alpha)
        self.last_eval_terms = 0

    def __len__(self) -> int:
        return self._n

    @property
    def nbytes(self) -> int:
        return self.modes.nbytes + (0 if self._last is None else self._last.nbytes)

    def push(self, diff: np.ndarray) -> None:
        diff = np.asarray(diff, dtype=float)
        if diff.shape != self.shape:
            raise ValueError(f"difference shape {diff.shape} != {self.shape}")
        if self._last is not None:
            # fold D_{m-1} on [t_{m-1}, t_m]; re-reference modes from t_{m-1} to t_m
            tau = self.mesh.step(self._n)
            s = self.approx.nodes
            decay = np.exp(-s * tau)
            gain = -np.expm1(-s * tau) / s
            self.modes *= decay[:, None, None]
            self.modes += gain[:, None, None] * self._last[None]
        self._last = diff.copy()
        self._n += 1

    def _mode_factors(self, n: int) -> np.ndarray:
        t = self.mesh.points
        s = self.approx.nodes
        if self.scheme == "l1":
            return np.exp(-s * (t[n + 1] - t[n - 1]))
        if self.scheme == "l1cn":
            return np.exp(-s * (t[n] - t[n - 1] + 0.5 * (t[n + 1] - t[n])))
        if self.scheme == "l1plus":
            h = t[n + 1] - t[n]
            return np.exp(-s * (t[n] - t[n - 1])) * (-np.expm1(-s * h)) / (s * h)
        raise ValueError(f"unknown scheme {self.scheme!r}")

    def evaluate(self, n: int) -> np.ndarray:
        if n != self._n:
            raise ValueError(f"history holds {self._n} steps, asked for step {n}")
        if n == 0:
            self.last_eval_terms = 0
            return np.zeros(self.shape)
        out = weight_entries(self.scheme, self.mesh, n, self.alpha, [1])[0] * self._last
        self.last_eval_terms = 1
        if n >= 2:
            coef = self._scale * self._mode_factors(n)
            out += np.tensordot(coef, self.modes, axes=1)
            self.last_eval_terms += self.approx.size
        return out


def soe_step_update(hist: SOEHistory, new_diff: np.ndarray) -> SOEHistory:
    hist.push(new_diff)
    return hist


def soe_history_eval(hist: SOEHistory, n: int) -> np.ndarray:
    return hist.evaluate(n)


# }}}


def make_history(
    scheme: str,
    mesh: TimeMesh,
    alpha: float,
    shape: tuple[int, int],
    mode: str = "auto",
    tol: float = 1e-10,
):
    """Pick a history evaluator; ``auto`` uses direct storage up to 2000 steps."""
    if alpha == 1.0:
        return NullHistory(shape)
    if mode == "auto":
        mode = "direct" if mesh.M <= 2000 else "soe"
    if mode == "direct":
        return DirectHistory(scheme, mesh, alpha, shape)
    if mode == "soe":
        return SOEHistory(scheme, mesh, alpha, shape, tol=tol)
    raise ValueError(f"unknown history mode {mode!r}")
