"""Experiment drivers: convergence studies, long-time energy runs, the
shrinking-circle benchmark and coarsening, plus CSV and snapshot output."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .energy import EnergyReport, original_energy
from .scheme import SchemeConfig, SchemeState, init_state, residual, step
from .spectral import SpatialGrid
from .timegrid import TimeMesh, build_composite_mesh, build_mesh

log = logging.getLogger(__name__)

EXPERIMENTS = ("converge1", "converge2", "selfconv", "energy_study", "circle", "coarsen")


class ExperimentError(RuntimeError):
    """An experiment invariant (energy decay, residual, range) was violated."""


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "converge1"
    scheme: str = "l1"
    alpha: float = 0.5
    eps2: float = 0.01
    theta2: float = 0.0
    C0: float = 0.0
    M: int = 100
    r: Optional[float] = None
    T: float = 1.0
    dt: Optional[float] = None
    T1: float = 1.0
    nx: int = 16
    ny: Optional[int] = None
    bc: Optional[str] = None
    history: str = "auto"
    soe_tol: float = 1e-10
    out: Optional[str] = None
    seed: int = 0
    mu: float = 0.5
    Ms: tuple[int, ...] = ()
    snapshot_times: tuple[float, ...] = ()
    check_residual: bool = True
    energy_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.experiment == "converge1" and self.bc not in (None, "periodic"):
            raise ValueError("converge1 runs on the periodic square (0, 2pi)^2")
        if self.experiment in ("converge2", "selfconv", "energy_study") and self.bc not in (None, "neumann"):
            raise ValueError(f"{self.experiment} runs with Neumann conditions on (-1, 1)^2")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(self.alpha, self.eps2, self.theta2, self.C0, self.scheme,
                            self.history, self.soe_tol)

    @property
    def grading(self) -> float:
        """Grading exponent; defaults to the rate-optimal choice for the scheme."""
        if self.r is not None:
            return self.r
        return optimal_grading(self.scheme, self.alpha)

    def grid(self, bc: str, domain: tuple[float, float, float, float]) -> SpatialGrid:
        return SpatialGrid(self.nx, self.ny or self.nx, domain, self.bc or bc)


def optimal_grading(scheme: str, alpha: float, regularity: Optional[float] = None) -> float:
    """``r = p / sigma`` with ``p`` the scheme order and ``sigma`` the solution's
    regularity exponent in time (``alpha`` unless given)."""
    if alpha >= 1:
        return 1.0
    order = {"l1": 1.0, "l1cn": 2.0 - alpha, "l1plus": 2.0}[scheme]
    sigma = alpha if regularity is None else regularity
    return max(1.0, order / sigma)


# {{{ manufactured solutions


def caputo_power(mu: float, alpha: float, t):
    """Caputo derivative of order ``alpha`` of ``t**mu``."""
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    arg = mu + 1.0 - alpha
    if arg <= 0 and float(arg).is_integer():
        raise ValueError(f"Gamma pole at mu + 1 - alpha = {arg}")
    c = math.gamma(mu + 1.0) / math.gamma(arg)
    t = np.asarray(t, dtype=float)
    e = mu - alpha
    if e == 0:
        out = np.full(t.shape, c)
    else:
        with np.errstate(divide="ignore"):
            out = c * t**e
    return out[()] if out.ndim == 0 else out


def exact_solution(example: int, x, y, t: float, mu: float = 0.5):
    if example == 1:
        return 0.2 * t**5 * np.sin(x) * np.cos(y)
    if example == 2:
        return 0.2 * (t**mu + 1.0) * np.cos(np.pi * x) * np.cos(np.pi * y)
    raise ValueError(f"no exact solution for example {example}")


def manufactured_source(example: int, x, y, t: float, alpha: float, eps2: float, mu: float = 0.5):
    """Source ``s`` making :func:`exact_solution` solve ``D^alpha phi - eps2 Lap phi + F'(phi) = s``."""
    phi = exact_solution(example, x, y, t, mu)
    if example == 1:
        dt_part = 0.2 * caputo_power(5.0, alpha, t) * np.sin(x) * np.cos(y)
        lap_factor = 2.0
    else:
        dt_part = 0.2 * caputo_power(mu, alpha, t) * np.cos(np.pi * x) * np.cos(np.pi * y)
        lap_factor = 2.0 * np.pi**2
    return dt_part + eps2 * lap_factor * phi - phi + phi**3


# }}}


# {{{ run loop


@dataclass
class RunStats:
    max_residual: float = 0.0
    min_sigma: float = np.inf
    steps: int = 0
    history_terms: list[int] = field(default_factory=list)


def integrate(
    phi0: np.ndarray,
    config: SchemeConfig,
    mesh: TimeMesh,
    grid: SpatialGrid,
    source: Optional[Callable[[float], np.ndarray]] = None,
    report: Optional[EnergyReport] = None,
    callback: Optional[Callable[[SchemeState], None]] = None,
    check_residual: bool = True,
    stats: Optional[RunStats] = None,
) -> SchemeState:
    """Advance ``phi0`` over the whole mesh; optionally record energies and diagnostics."""
    state = init_state(phi0, config, mesh, grid)
    if report is not None:
        report.record(state, config)
    if callback is not None:
        callback(state)
    while state.n < mesh.M:
        new = step(state, config, source)
        if stats is not None:
            stats.steps += 1
            stats.min_sigma = min(stats.min_sigma, new.info.sigma)
            stats.history_terms.append(new.history.last_eval_terms)
            if check_residual:
                stats.max_residual = max(stats.max_residual, residual(state, new, config))
        state = new
        if report is not None:
            report.record(state, config)
        if callback is not None:
            callback(state)
    return state


def _check_energy(report: EnergyReport, tol: float, label: str) -> None:
    inc = report.max_increase("E_mod")
    if inc > tol:
        v = report.column("E_mod")
        k = int(np.argmax(np.diff(v) / (1 + np.abs(v[:-1]))))
        raise ExperimentError(
            f"{label}: modified energy increased by {inc:.3e} (relative) "
            f"at step {k + 1}, t = {report.rows[k + 1].t:.6g}"
        )


# }}}


# {{{ convergence


@dataclass
class ConvergenceRow:
    M: int
    tau: float
    error: float
    order: float


def convergence_table(Ms: Sequence[int], taus: Sequence[float], errors: Sequence[float]) -> list[ConvergenceRow]:
    rows = []
    for i, (M, tau, err) in enumerate(zip(Ms, taus, errors)):
        p = math.nan
        if i > 0:
            p = math.log(errors[i - 1] / err) / math.log(taus[i - 1] / tau)
        rows.append(ConvergenceRow(M, tau, err, p))
    return rows


def convergence_csv(rows: Sequence[ConvergenceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("M", "tau", "error", "order"))
    for r in rows:
        w.writerow((r.M, repr(r.tau), repr(r.error), "" if math.isnan(r.order) else repr(r.order)))
    return buf.getvalue()


def _example_setup(cfg: RunConfig):
    if cfg.experiment == "converge1":
        grid = cfg.grid("periodic", (0.0, 2 * np.pi, 0.0, 2 * np.pi))
        example = 1
    elif cfg.experiment == "converge2":
        grid = cfg.grid("neumann", (-1.0, 1.0, -1.0, 1.0))
        example = 2
    else:
        raise ValueError(f"{cfg.experiment} has no exact solution")
    return grid, example


def _mesh_for(cfg: RunConfig, M: int, r: float) -> TimeMesh:
    return build_mesh(M, r, cfg.T)


def run_exact_error(cfg: RunConfig, M: int, stats: Optional[RunStats] = None) -> tuple[float, float]:
    """``max_n ||phi^n - phi(t_n)||_inf`` for one mesh; returns ``(tau_max, error)``."""
    grid, example = _example_setup(cfg)
    r = cfg.r if cfg.r is not None else 1.0
    mesh = _mesh_for(cfg, M, r)
    X, Y = grid.mesh()
    scfg = cfg.scheme_config()

    def source(t: float) -> np.ndarray:
        return manufactured_source(example, X, Y, t, cfg.alpha, cfg.eps2, cfg.mu)

    err = 0.0

    def track(state: SchemeState) -> None:
        nonlocal err
        if state.n > 0:
            ex = exact_solution(example, X, Y, state.t, cfg.mu)
            err = max(err, float(np.max(np.abs(state.phi - ex))))

    phi0 = exact_solution(example, X, Y, 0.0, cfg.mu)
    integrate(phi0, scfg, mesh, grid, source, callback=track,
              check_residual=cfg.check_residual, stats=stats)
    return mesh.tau_max, err


def selfconv_initial(grid: SpatialGrid) -> np.ndarray:
    X, Y = grid.mesh()
    return np.cos(4 * np.pi * X) * np.cos(4 * np.pi * Y)


def _trajectory(cfg: RunConfig, M: int, r: float, stats: Optional[RunStats]) -> tuple[TimeMesh, list[np.ndarray]]:
    grid = cfg.grid("neumann", (-1.0, 1.0, -1.0, 1.0))
    mesh = build_mesh(M, r, cfg.T)
    traj: list[np.ndarray] = []
    integrate(selfconv_initial(grid), cfg.scheme_config(), mesh, grid,
              callback=lambda s: traj.append(s.phi), check_residual=cfg.check_residual, stats=stats)
    return mesh, traj


def run_convergence(cfg: RunConfig, stats: Optional[RunStats] = None) -> list[ConvergenceRow]:
    """Error and observed order for a doubling sequence of ``M``.

    The observed order between consecutive meshes is
    ``log(e_1 / e_2) / log(tau_1 / tau_2)`` with ``tau`` the largest step.
    For ``selfconv`` the error of mesh ``M`` is
    ``max_n ||phi^n_M - phi^{2n}_{2M}||_inf``.
    """
    Ms = list(cfg.Ms) or [cfg.M * 2**k for k in range(5)]
    if any(b != 2 * a for a, b in zip(Ms, Ms[1:])):
        raise ValueError(f"M sequence must double: {Ms}")
    taus, errors = [], []
    if cfg.experiment in ("converge1", "converge2"):
        for M in Ms:
            tau, err = run_exact_error(cfg, M, stats)
            taus.append(tau)
            errors.append(err)
    elif cfg.experiment == "selfconv":
        r = cfg.r if cfg.r is not None else 1.0
        mesh, prev = _trajectory(cfg, Ms[0], r, stats)
        for M in Ms[1:] + [2 * Ms[-1]]:
            fine_mesh, traj = _trajectory(cfg, M, r, stats)
            err = max(float(np.max(np.abs(prev[n] - traj[2 * n]))) for n in range(1, len(prev)))
            taus.append(mesh.tau_max)
            errors.append(err)
            mesh, prev = fine_mesh, traj
    else:
        raise ValueError(f"experiment {cfg.experiment!r} is not a convergence study")
    rows = convergence_table(Ms, taus, errors)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.experiment}_{cfg.scheme}_a{cfg.alpha:g}.csv").write_text(convergence_csv(rows))
    return rows


# }}}


# {{{ long-time energy


def energy_study_mesh(cfg: RunConfig) -> TimeMesh:
    dt = cfg.dt if cfg.dt is not None else 1.0
    if cfg.T <= cfg.T1:
        return build_mesh(cfg.M, cfg.grading, cfg.T)
    return build_composite_mesh((cfg.M, cfg.grading, cfg.T1), (dt, cfg.T))


def run_energy_study(cfg: RunConfig, phi0: Optional[np.ndarray] = None,
                     stats: Optional[RunStats] = None) -> EnergyReport:
    """Long run on a graded-then-uniform mesh, recording every step's energies.

    Raises :class:`ExperimentError` if the modified energy ever increases by
    more than ``cfg.energy_tol`` (relative).
    """
    grid = cfg.grid("neumann", (-1.0, 1.0, -1.0, 1.0))
    mesh = energy_study_mesh(cfg)
    if phi0 is None:
        phi0 = selfconv_initial(grid)
    scfg = cfg.scheme_config()
    report = EnergyReport()
    integrate(phi0, scfg, mesh, grid, report=report, check_residual=cfg.check_residual, stats=stats)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        report.to_csv(out / f"energy_{cfg.scheme}_a{cfg.alpha:g}_dt{mesh.tau[-1]:g}.csv")
    _check_energy(report, cfg.energy_tol, f"{cfg.scheme} alpha={cfg.alpha}")
    return report


# }}}


# {{{ shrinking circle


CIRCLE_RADIUS = 8.0
CIRCLE_DOMAIN = (-32.0, 32.0, -32.0, 32.0)


def circle_initial(grid: SpatialGrid, eps2: float, radius: float = CIRCLE_RADIUS) -> np.ndarray:
    X, Y = grid.mesh()
    return np.tanh((radius - np.hypot(X, Y)) / math.sqrt(2.0 * eps2))


def circle_mesh(cfg: RunConfig) -> TimeMesh:
    dt = cfg.dt if cfg.dt is not None else 0.01
    if cfg.alpha == 1.0:
        return build_mesh(max(1, round(cfg.T / dt)), 1.0, cfg.T)
    return build_composite_mesh((cfg.M, cfg.grading, cfg.T1), (dt, cfg.T))


@dataclass
class CircleResult:
    t: np.ndarray
    R2: np.ndarray
    E: np.ndarray
    report: EnergyReport

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t", "R2", "E"))
        for row in zip(self.t, self.R2, self.E):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _positive_length(f: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    """Length of ``{f > 0}`` along each row, ``f`` linear between nodes."""
    if periodic:
        a, b = f, np.roll(f, -1, axis=-1)
    else:
        a, b = f[..., :-1], f[..., 1:]
    mixed = (a > 0) != (b > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        cut = np.where(mixed, np.maximum(a, b) / (np.abs(a) + np.abs(b)), 0.0)
    seg = h * np.where((a > 0) & (b > 0), 1.0, cut)
    out = seg.sum(axis=-1)
    if not periodic:
        # half cells between the outer midpoints and the walls; the field is flat there
        out = out + 0.5 * h * ((f[..., 0] > 0).astype(float) + (f[..., -1] > 0))
    return out


def interface_area(grid: SpatialGrid, phi: np.ndarray) -> float:
    """Area of ``{phi > 0}``, locating the zero crossing on each grid line by
    linear interpolation; rows and columns are averaged."""
    phi = grid.check(phi)
    a, b, c, d = grid.domain
    hx, hy = (b - a) / grid.nx, (d - c) / grid.ny
    periodic = grid.bc == "periodic"
    rows = _positive_length(phi, hx, periodic).sum() * hy
    cols = _positive_length(phi.T, hy, periodic).sum() * hx
    return float(0.5 * (rows + cols))


def run_circle(cfg: RunConfig, stats: Optional[RunStats] = None) -> CircleResult:
    """Shrinking circle of radius 8 in ``(-32, 32)^2``; ``R^2(t)`` is the area of
    ``{phi > 0}`` divided by ``pi``."""
    grid = cfg.grid("neumann", CIRCLE_DOMAIN)
    mesh = circle_mesh(cfg)
    scfg = cfg.scheme_config()
    ts, r2, en = [], [], []

    def track(state: SchemeState) -> None:
        ts.append(state.t)
        r2.append(interface_area(grid, state.phi) / math.pi)
        en.append(original_energy(grid, state.phi, cfg.eps2))

    report = EnergyReport()
    integrate(circle_initial(grid, cfg.eps2), scfg, mesh, grid, report=report, callback=track,
              check_residual=cfg.check_residual, stats=stats)
    res = CircleResult(np.array(ts), np.array(r2), np.array(en), report)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"circle_{cfg.scheme}_a{cfg.alpha:g}.csv").write_text(res.to_csv())
    _check_energy(report, cfg.energy_tol, f"circle alpha={cfg.alpha}")
    return res


# }}}


# {{{ coarsening


def coarsening_initial(grid: SpatialGrid, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.1, 0.1, size=grid.shape)


@dataclass
class CoarseningResult:
    report: EnergyReport
    snapshots: dict[float, np.ndarray]


def run_coarsening(cfg: RunConfig, stats: Optional[RunStats] = None) -> CoarseningResult:
    """Random start, graded mesh on ``[0, 1]`` then uniform steps; snapshots at
    the mesh points nearest ``cfg.snapshot_times``."""
    grid = cfg.grid("neumann", (-1.0, 1.0, -1.0, 1.0))
    dt = cfg.dt if cfg.dt is not None else 0.01
    r = cfg.r if cfg.r is not None else (1.0 if cfg.alpha == 1.0 else 2.0 / cfg.alpha)
    if cfg.T > cfg.T1:
        mesh = build_composite_mesh((cfg.M, r, cfg.T1), (dt, cfg.T))
    else:
        mesh = build_mesh(cfg.M, r, cfg.T)
    want = sorted(t for t in cfg.snapshot_times if 0 <= t <= mesh.T)
    idx = {int(np.argmin(np.abs(mesh.points - t))): t for t in want}
    snaps: dict[float, np.ndarray] = {}
    out = Path(cfg.out) if cfg.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    def track(state: SchemeState) -> None:
        if float(np.max(np.abs(state.phi))) > 1.5:
            raise ExperimentError(f"|phi| exceeded 1.5 at t = {state.t:.6g}")
        if state.n in idx:
            snaps[idx[state.n]] = state.phi.copy()
            if out:
                write_snapshot(state.phi, grid.bc, out / f"snap_a{cfg.alpha:g}_t{idx[state.n]:g}.bin")

    report = EnergyReport()
    integrate(coarsening_initial(grid, cfg.seed), cfg.scheme_config(), mesh, grid,
              report=report, callback=track, check_residual=cfg.check_residual, stats=stats)
    if out:
        report.to_csv(out / f"coarsen_energy_a{cfg.alpha:g}.csv")
    _check_energy(report, cfg.energy_tol, f"coarsening alpha={cfg.alpha}")
    return CoarseningResult(report, snaps)


# }}}


# {{{ snapshots

MAGIC = "FRACPHASE1"


class SnapshotFormatError(ValueError):
    pass


def write_snapshot(phi: np.ndarray, bc: str, path: str | Path) -> None:
    """Text header ``FRACPHASE1 ny nx bc`` then row-major little-endian float64."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2:
        raise ValueError("snapshots hold 2-D fields")
    ny, nx = phi.shape
    header = f"{MAGIC} {ny} {nx} {bc}\n".encode("ascii")
    Path(path).write_bytes(header + phi.astype("<f8").tobytes(order="C"))


def read_snapshot(path: str | Path) -> tuple[np.ndarray, str]:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise SnapshotFormatError("missing header line")
    parts = data[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 4 or parts[0] != MAGIC:
        raise SnapshotFormatError(f"bad snapshot header {data[:nl]!r}")
    try:
        ny, nx = int(parts[1]), int(parts[2])
    except ValueError as exc:
        raise SnapshotFormatError(f"bad dimensions in header {parts}") from exc
    payload = data[nl + 1:]
    if len(payload) != 8 * nx * ny:
        raise SnapshotFormatError(f"payload has {len(payload)} bytes, expected {8 * nx * ny}")
    return np.frombuffer(payload, dtype="<f8").reshape(ny, nx).copy(), parts[3]


# }}}
