"""Semi-implicit time integration of the strongly damped wave equation

    u_tt - lap u - lap u_t = a |u|^p + b |u_t|^q + g(t, x)

on the annular grid, as the first-order system in (u, v = u_t).  One theta
step solves

    (v+ - v)/dt = lap(th u+ + (1-th) u) + lap(th v+ + (1-th) v) + F(u, v) + g(t + th dt)
    (u+ - u)/dt = th v+ + (1-th) v

with the nonlinearity F lagged at the old state.  Eliminating u+ yields the
mass-symmetrized SPD system

    (D + (dt th + dt^2 th^2) S) v+ = D v - dt S u - (dt(1-th) + dt^2 th(1-th)) S v + dt D (F + g)

with D the quadrature mass diagonal and S the stiffness matrix, solved by
Jacobi-preconditioned conjugate gradients warm-started from v.  For th = 1
and F = g = 0 both the classical and the higher-order discrete energies are
nonincreasing step by step, exactly (S is symmetric PSD).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from sdwave.energetics import DiagnosticsRow, diagnostics_row, monitor_scalars
from sdwave.errors import BlowUpError, ConfigError, LinearSolveError
from sdwave.grid import PolarGrid, l2_norm
from sdwave.weight import WeightParams

__all__ = [
    "NonlinearityParams",
    "TimeScheme",
    "State",
    "RunResult",
    "nonlinearity",
    "ThetaStepper",
    "initial_bump",
    "bump_profile",
    "manufactured_solution",
    "manufactured_source",
    "run",
    "MMSRow",
    "mms_joint_study",
    "mms_temporal_study",
]

DEFAULT_BLOWUP_THRESHOLD = 1e6


@dataclass(frozen=True)
class NonlinearityParams:
    """Mixed-power right-hand side a |u|^p + b |u_t|^q; a = b = 0 is a linear run."""

    a: float = 0.0
    b: float = 0.0
    p: float = 9.0
    q: float = 9.0

    def __post_init__(self) -> None:
        if self.a < 0.0 or self.b < 0.0:
            raise ConfigError(f"nonlinearity coefficients must be >= 0, got a={self.a}, b={self.b}")
        if self.p <= 1.0:
            raise ConfigError(f"p must exceed 1, got p={self.p}")
        if self.q <= 1.0:
            raise ConfigError(f"q must exceed 1, got q={self.q}")

    @property
    def linear(self) -> bool:
        return self.a == 0.0 and self.b == 0.0


@dataclass(frozen=True)
class TimeScheme:
    """Implicitness th in [1/2, 1]; th = 1/2 and th = 1 are the tested values."""

    dt: float
    theta: float = 0.5
    linear_solve_tol: float = 1e-10
    max_linear_iters: int = 5000

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not 0.5 <= self.theta <= 1.0:
            raise ConfigError(f"theta must lie in [0.5, 1], got {self.theta}")
        if self.linear_solve_tol <= 0.0 or self.max_linear_iters < 1:
            raise ConfigError("invalid linear solver settings")


@dataclass
class State:
    """Displacement and velocity fields at one time level."""

    u: np.ndarray
    v: np.ndarray
    t: float


def nonlinearity(u: np.ndarray, v: np.ndarray, params: NonlinearityParams) -> np.ndarray:
    """Nodewise a |u|^p + b |v|^q; overflow propagates as inf and is caught
    by the blow-up detection downstream."""
    if params.linear:
        return np.zeros_like(u)
    with np.errstate(over="ignore"):
        out = np.zeros_like(u)
        if params.a != 0.0:
            out += params.a * np.abs(u) ** params.p
        if params.b != 0.0:
            out += params.b * np.abs(v) ** params.q
    return out


class ThetaStepper:
    """One-step advance; owns the assembled SPD matrix and preconditioner."""

    def __init__(
        self,
        grid: PolarGrid,
        scheme: TimeScheme,
        params: NonlinearityParams,
        source=None,
        blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
    ) -> None:
        self.grid = grid
        self.scheme = scheme
        self.params = params
        self.source = source
        self.blowup_threshold = blowup_threshold
        self.mass = grid.mass_vector()
        self.S = grid.stiffness()
        dt, th = scheme.dt, scheme.theta
        coeff = dt * th + dt * dt * th * th
        self.matrix = (sp.diags(self.mass) + coeff * self.S).tocsr()
        self.precond = sp.diags(1.0 / self.matrix.diagonal()).tocsr()

    def step(self, state: State) -> State:
        dt, th = self.scheme.dt, self.scheme.theta
        u, v = state.u.ravel(), state.v.ravel()
        forcing = nonlinearity(state.u, state.v, self.params)
        if self.source is not None:
            forcing = forcing + self.source(state.t + th * dt)

        rhs = self.mass * v - dt * (self.S @ u) + dt * self.mass * forcing.ravel()
        if th < 1.0:
            rhs -= (dt * (1.0 - th) + dt * dt * th * (1.0 - th)) * (self.S @ v)
        if not np.all(np.isfinite(rhs)):
            raise BlowUpError(state.t + dt, "non-finite right-hand side")

        v_new, info = cg(
            self.matrix,
            rhs,
            x0=v,
            rtol=self.scheme.linear_solve_tol,
            atol=0.0,
            maxiter=self.scheme.max_linear_iters,
            M=self.precond,
        )
        if info != 0:
            raise LinearSolveError(state.t, self.scheme.max_linear_iters)
        u_new = u + dt * (th * v_new + (1.0 - th) * v)

        if (
            not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new)))
            or np.max(np.abs(u_new)) > self.blowup_threshold
            or np.max(np.abs(v_new)) > self.blowup_threshold
        ):
            raise BlowUpError(state.t + dt)
        return State(
            u=u_new.reshape(self.grid.shape),
            v=v_new.reshape(self.grid.shape),
            t=state.t + dt,
        )


def bump_profile(r, r1: float, r2: float, amplitude: float = 1.0):
    """Radial C-infinity bump A exp(-1/(1-s^2)) on s = (2r - (r1+r2))/(r2-r1),
    identically zero (all derivatives) outside (r1, r2)."""
    r = np.asarray(r, dtype=float)
    s = (2.0 * r - (r1 + r2)) / (r2 - r1)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = amplitude * np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def initial_bump(grid: PolarGrid, amplitude: float, support: tuple[float, float]) -> np.ndarray:
    """Radially symmetric bump field with compact support inside the annulus."""
    r1, r2 = support
    if not (grid.r_inner < r1 < r2 < grid.r_outer):
        raise ConfigError(
            f"bump support ({r1}, {r2}) must sit strictly inside ({grid.r_inner}, {grid.r_outer})"
        )
    return bump_profile(grid.r, r1, r2, amplitude)[:, None] * np.ones((1, grid.ntheta))


def _mms_radial_parts(grid: PolarGrid, k: int):
    span = grid.r_outer - grid.r_inner
    arg = math.pi * (grid.r - grid.r_inner) / span
    phi = np.sin(arg)
    dphi = (math.pi / span) * np.cos(arg)
    d2phi = -((math.pi / span) ** 2) * np.sin(arg)
    lap_radial = d2phi + dphi / grid.r - (k**2) * phi / grid.r**2
    return phi, lap_radial


def manufactured_solution(grid: PolarGrid, t: float, k: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Exact fields u = e^{-t} sin(pi (r - r_in)/(r_out - r_in)) cos(k theta)
    and v = u_t = -u; both satisfy the Dirichlet rings."""
    phi, _ = _mms_radial_parts(grid, k)
    shape = phi[:, None] * np.cos(k * grid.theta)[None, :]
    u = math.exp(-t) * shape
    return u, -u


def manufactured_source(
    grid: PolarGrid, t: float, params: NonlinearityParams, k: int = 2
) -> np.ndarray:
    """Source g making the manufactured fields exact: since u_t = -u the
    damping and stiffness terms cancel, g = u - a|u|^p - b|u_t|^q with the
    Laplacian handled analytically."""
    u, v = manufactured_solution(grid, t, k)
    return u - nonlinearity(u, v, params)


@dataclass
class RunResult:
    """Outcome of a time integration: status, diagnostics rows at the output
    stride, scalar monitor series, and a thinned list of retained states."""

    status: str                      # completed | blew_up | solver_failed
    t_final: float
    rows: list[DiagnosticsRow]
    series: dict[str, np.ndarray]
    states: list[State] = field(default_factory=list)

    @property
    def blew_up(self) -> bool:
        return self.status == "blew_up"


def run(
    grid: PolarGrid,
    scheme: TimeScheme,
    params: NonlinearityParams,
    weight_params: WeightParams,
    u0: np.ndarray,
    u1: np.ndarray,
    t_end: float,
    stride: int = 1,
    source=None,
    keep_states: int = 0,
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
) -> RunResult:
    """Integrate from (u0, u1) to t_end or blow-up, recording diagnostics.

    Diagnostics rows are emitted at t = 0, every ``stride`` steps, and at the
    final step.  ``keep_states`` > 0 retains that many full states, evenly
    thinned across the recorded rows, for snapshot-based monitors.
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    n_steps = int(round(t_end / scheme.dt))
    if n_steps < 1 or abs(n_steps * scheme.dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ConfigError(f"t_end={t_end} is not an integer number of steps dt={scheme.dt}")

    row_steps = list(range(0, n_steps + 1, stride))
    if row_steps[-1] != n_steps:
        row_steps.append(n_steps)
    keep_set: set[int] = set()
    if keep_states > 0:
        every = max(1, math.ceil(len(row_steps) / keep_states))
        keep_set = set(row_steps[::every])
        keep_set.add(row_steps[-1])

    stepper = ThetaStepper(grid, scheme, params, source=source, blowup_threshold=blowup_threshold)
    state = State(u=np.array(u0, dtype=float), v=np.array(u1, dtype=float), t=0.0)

    rows: list[DiagnosticsRow] = []
    mon: dict[str, list[float]] = {"w_lap_v_sq": [], "w_forcing_sq": [], "w_v_sq": []}
    states: list[State] = []

    def record(st: State, step_index: int) -> None:
        forcing = nonlinearity(st.u, st.v, params)
        if source is not None:
            forcing = forcing + source(st.t)
        rows.append(diagnostics_row(grid, st, weight_params))
        for key, val in monitor_scalars(grid, st, forcing, weight_params).items():
            mon[key].append(val)
        if step_index in keep_set:
            states.append(st)

    record(state, 0)
    status, t_final = "completed", 0.0
    row_cursor = 1
    for n in range(1, n_steps + 1):
        try:
            state = stepper.step(state)
        except BlowUpError as err:
            status, t_final = "blew_up", err.t
            break
        except LinearSolveError as err:
            status, t_final = "solver_failed", err.t
            break
        if row_cursor < len(row_steps) and n == row_steps[row_cursor]:
            record(state, n)
            row_cursor += 1
        t_final = state.t

    series = {key: np.asarray(vals) for key, vals in mon.items()}
    series["t"] = np.asarray([row.t for row in rows])
    series["wfirst"] = np.asarray([row.Wfirst for row in rows])
    series["wsecond"] = np.asarray([row.Wsecond for row in rows])
    series["W"] = np.asarray([row.W for row in rows])
    return RunResult(status=status, t_final=t_final, rows=rows, series=series, states=states)


@dataclass(frozen=True)
class MMSRow:
    """One line of a manufactured-solution convergence table."""

    study: str
    nr: int
    ntheta: int
    h: float
    dt: float
    error: float
    order: float


def _integrate_against_manufactured(
    grid: PolarGrid, scheme: TimeScheme, params: NonlinearityParams, t_end: float, k: int
) -> np.ndarray:
    n_steps = int(round(t_end / scheme.dt))
    if n_steps < 1 or abs(n_steps * scheme.dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ConfigError(f"dt={scheme.dt} does not divide the horizon t_end={t_end}")
    stepper = ThetaStepper(
        grid, scheme, params, source=lambda t: manufactured_source(grid, t, params, k)
    )
    u0, v0 = manufactured_solution(grid, 0.0, k)
    state = State(u=u0, v=v0, t=0.0)
    for _ in range(n_steps):
        state = stepper.step(state)
    return state.u


def mms_joint_study(
    base_nr: int = 32,
    base_ntheta: int = 64,
    levels: int = 3,
    r_inner: float = 1.0,
    r_outer: float = 2.0,
    t_end: float = 0.5,
    theta: float = 0.5,
    cfl: float = 1.0,
    k: int = 2,
    params: NonlinearityParams | None = None,
) -> list[MMSRow]:
    """Dyadic space-time refinement with dt tied to dr; the observed order is
    the minimum of the spatial and temporal orders, so >= 2 certifies both."""
    from sdwave.grid import build_annulus

    params = params or NonlinearityParams()
    rows: list[MMSRow] = []
    prev: tuple[float, float] | None = None
    for level in range(levels):
        nr = base_nr * 2**level
        ntheta = base_ntheta * 2**level
        grid = build_annulus(r_inner, r_outer, nr, ntheta)
        n_steps = max(1, int(round(t_end / (cfl * grid.dr))))
        scheme = TimeScheme(dt=t_end / n_steps, theta=theta)
        u_final = _integrate_against_manufactured(grid, scheme, params, t_end, k)
        u_exact, _ = manufactured_solution(grid, t_end, k)
        error = l2_norm(grid, u_final - u_exact)
        order = float("nan")
        if prev is not None:
            order = math.log(prev[1] / error) / math.log(prev[0] / grid.dr)
        rows.append(
            MMSRow("joint", nr, ntheta, grid.dr, scheme.dt, error, order)
        )
        prev = (grid.dr, error)
    return rows


def mms_temporal_study(
    nr: int = 48,
    ntheta: int = 96,
    dts: tuple[float, ...] | None = None,
    ref_refine: int = 8,
    r_inner: float = 1.0,
    r_outer: float = 2.0,
    t_end: float = 0.5,
    theta: float = 0.5,
    k: int = 2,
    params: NonlinearityParams | None = None,
) -> list[MMSRow]:
    """Fixed grid, dt-only refinement against a same-grid fine-dt reference,
    so the spatial error cancels and the temporal order shows cleanly.

    Default dt ladder: t_end / (5 * 2^k) for k = 0..3, dyadic and exactly
    dividing the horizon.
    """
    from sdwave.grid import build_annulus

    params = params or NonlinearityParams()
    if dts is None:
        dts = tuple(t_end / (5 * 2**level) for level in range(4))
    grid = build_annulus(r_inner, r_outer, nr, ntheta)
    ref_scheme = TimeScheme(dt=min(dts) / ref_refine, theta=theta)
    u_ref = _integrate_against_manufactured(grid, ref_scheme, params, t_end, k)

    rows: list[MMSRow] = []
    prev_error: float | None = None
    for dt in dts:
        scheme = TimeScheme(dt=dt, theta=theta)
        u_final = _integrate_against_manufactured(grid, scheme, params, t_end, k)
        error = l2_norm(grid, u_final - u_ref)
        order = float("nan") if prev_error is None else math.log2(prev_error / error)
        rows.append(MMSRow("temporal", nr, ntheta, grid.dr, dt, error, order))
        prev_error = error
    return rows
