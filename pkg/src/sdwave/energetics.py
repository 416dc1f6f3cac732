"""Energies, weighted energies, combined norm and initial-data functionals.

All quantities are quadrature sums over one state (u, v = u_t, t).  Gradient
norms use the energy-consistent nodewise density of :func:`sdwave.grid.gradient_sq`
(equivalently f^T S f), Laplacian norms apply the discrete operator nodewise.
Exponentially weighted norms multiply squared fields by e^{2 w(t, r)} through
a log-sum-exp so that large exponents on zero or tiny entries never overflow.

Pure functions over immutable snapshots; safe for concurrent evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sdwave.grid import PolarGrid, gradient_sq, log_weight
from sdwave.weight import WeightParams, weight_exponent

__all__ = [
    "CSV_HEADER",
    "DiagnosticsRow",
    "DataFunctionals",
    "energies",
    "weighted_energies",
    "weighted_sq_norm",
    "w_functional",
    "diagnostics_row",
    "monitor_scalars",
    "data_functionals",
    "fit_decay_exponent",
]

CSV_HEADER = "t,E_classical,E_higher,L2_u,Wfirst,Wsecond,W,sup_u,sup_v,outer_ring_amp"


@dataclass(frozen=True)
class DiagnosticsRow:
    """One time sample of every monitored functional (all squared norms)."""

    t: float
    E_classical: float
    E_higher: float
    L2_u: float
    Wfirst: float
    Wsecond: float
    W: float
    sup_u: float
    sup_v: float
    outer_ring_amp: float

    def to_csv(self) -> str:
        return ",".join(
            format(getattr(self, name), ".17e") for name in CSV_HEADER.split(",")
        )


@dataclass(frozen=True)
class DataFunctionals:
    """Initial-data functionals; i2 is the decay-scale constant, j_total the
    full data norm whose smallness defines the global regime."""

    i0: float
    i1: float
    i2: float
    j_total: float
    i_exp: float
    c0: float


def _sq(grid: PolarGrid, f: np.ndarray) -> float:
    return float(np.sum(grid.weights * f * f))


def _grad_energy(grid: PolarGrid, f: np.ndarray) -> float:
    v = f.ravel()
    return float(v @ (grid.stiffness() @ v))


def _lap_field(grid: PolarGrid, f: np.ndarray) -> np.ndarray:
    return -(grid.stiffness() @ f.ravel()).reshape(grid.shape) / grid.weights


def energies(grid: PolarGrid, state) -> tuple[float, float, float]:
    """(E_classical, E_higher, L2_u) for one state.

    E_classical = (|v|^2 + |grad u|^2)/2, E_higher adds (|grad v|^2 + |lap u|^2)/2,
    L2_u is the squared L2 norm of u.
    """
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v))):
        from sdwave.errors import BlowUpError

        raise BlowUpError(state.t, "non-finite state in energy evaluation")
    e_classical = 0.5 * (_sq(grid, state.v) + _grad_energy(grid, state.u))
    e_higher = e_classical + 0.5 * (
        _grad_energy(grid, state.v) + _sq(grid, _lap_field(grid, state.u))
    )
    return e_classical, e_higher, _sq(grid, state.u)


def weighted_sq_norm(grid: PolarGrid, values: np.ndarray, wexp: np.ndarray) -> float:
    """sum_ij w_ij e^{2 wexp_ij} values_ij^2 without intermediate overflow.

    Zero-valued nodes are skipped; the rest is summed in log space, so the
    result overflows only when the true value does.
    """
    vals = np.asarray(values, dtype=float)
    wexp_full = np.broadcast_to(wexp, vals.shape)
    mask = vals != 0.0
    if not np.any(mask):
        return 0.0
    logs = (
        2.0 * wexp_full[mask]
        + 2.0 * np.log(np.abs(vals[mask]))
        + np.log(grid.weights[mask])
    )
    shift = float(np.max(logs))
    return float(np.exp(shift) * np.sum(np.exp(logs - shift)))


def _weight_exponent_field(grid: PolarGrid, t: float, params: WeightParams) -> np.ndarray:
    return np.asarray(weight_exponent(t, grid.r, params.rho))[:, None]


def weighted_energies(grid: PolarGrid, state, params: WeightParams) -> tuple[float, float]:
    """(Wfirst, Wsecond): weighted first- and second-derivative energies.

    Wfirst  = |e^w v|^2 + |e^w grad u|^2
    Wsecond = |e^w grad v|^2 + |e^w lap u|^2
    """
    wexp = _weight_exponent_field(grid, state.t, params)
    wfirst = weighted_sq_norm(grid, state.v, wexp) + weighted_sq_norm(
        grid, np.sqrt(gradient_sq(grid, state.u)), wexp
    )
    wsecond = weighted_sq_norm(
        grid, np.sqrt(gradient_sq(grid, state.v)), wexp
    ) + weighted_sq_norm(grid, _lap_field(grid, state.u), wexp)
    return wfirst, wsecond


def w_functional(grid: PolarGrid, state, params: WeightParams) -> float:
    """Weighted energies plus (1+t) times the four unweighted derivative
    norms plus |u|^2; the quantity whose running sup defines the global norm."""
    wfirst, wsecond = weighted_energies(grid, state, params)
    e_classical, e_higher, l2_u = energies(grid, state)
    return wfirst + wsecond + (1.0 + state.t) * 2.0 * e_higher + l2_u


def diagnostics_row(grid: PolarGrid, state, params: WeightParams) -> DiagnosticsRow:
    e_classical, e_higher, l2_u = energies(grid, state)
    wfirst, wsecond = weighted_energies(grid, state, params)
    w_val = wfirst + wsecond + (1.0 + state.t) * 2.0 * e_higher + l2_u
    return DiagnosticsRow(
        t=state.t,
        E_classical=e_classical,
        E_higher=e_higher,
        L2_u=l2_u,
        Wfirst=wfirst,
        Wsecond=wsecond,
        W=w_val,
        sup_u=float(np.max(np.abs(state.u))),
        sup_v=float(np.max(np.abs(state.v))),
        outer_ring_amp=float(np.max(np.abs(state.u[-1, :]))),
    )


def monitor_scalars(
    grid: PolarGrid, state, forcing: np.ndarray, params: WeightParams
) -> dict[str, float]:
    """Weighted scalars consumed by the budget and forcing-integral monitors."""
    wexp = _weight_exponent_field(grid, state.t, params)
    return {
        "w_lap_v_sq": weighted_sq_norm(grid, _lap_field(grid, state.v), wexp),
        "w_forcing_sq": weighted_sq_norm(grid, forcing, wexp),
        "w_v_sq": weighted_sq_norm(grid, state.v, wexp),
    }


def data_functionals(
    grid: PolarGrid,
    u0: np.ndarray,
    u1: np.ndarray,
    params: WeightParams,
    c0: float = 1.0,
) -> DataFunctionals:
    """Initial-data functionals; c0 is the Hardy-type constant (config input)."""
    if c0 <= 0.0:
        raise ValueError(f"c0 must be positive, got {c0}")
    d = log_weight(grid.r, grid)[:, None]
    lap_u0 = _lap_field(grid, u0)
    sq_u0, sq_u1 = _sq(grid, u0), _sq(grid, u1)
    grad_u0, grad_u1 = _grad_energy(grid, u0), _grad_energy(grid, u1)
    sq_lap_u0 = _sq(grid, lap_u0)

    i0 = (
        2.0 * sq_u0
        + sq_u1
        + 0.5 * grad_u0
        + 3.0 * c0 * _sq(grid, d * (u1 - lap_u0))
    )
    i1 = sq_lap_u0 + grad_u1 + 1.5 * grad_u0 + sq_u1
    i2 = 0.5 * (i0 + i1 + sq_u1 + grad_u0 + grad_u1 + sq_lap_u0)

    wexp0 = _weight_exponent_field(grid, 0.0, params)
    i_exp = (
        weighted_sq_norm(grid, np.sqrt(gradient_sq(grid, u1)), wexp0)
        + weighted_sq_norm(grid, lap_u0, wexp0)
        + weighted_sq_norm(grid, u1, wexp0)
        + weighted_sq_norm(grid, np.sqrt(gradient_sq(grid, u0)), wexp0)
    )
    j_total = (
        sq_u0
        + grad_u0
        + sq_u1
        + grad_u1
        + sq_lap_u0
        + _sq(grid, d * lap_u0)
        + _sq(grid, d * u1)
        + i_exp
    )
    return DataFunctionals(i0=i0, i1=i1, i2=i2, j_total=j_total, i_exp=i_exp, c0=c0)


def fit_decay_exponent(
    t: np.ndarray,
    values: np.ndarray,
    window: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Least-squares fit values ~ c (1+t)^(-alpha) on a time window.

    Returns (alpha, c).  Requires at least 10 strictly positive samples in
    the window; nonpositive values indicate blow-up or an identically zero
    series and raise a ValueError.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, values = t[mask], values[mask]
    if t.size < 10:
        raise ValueError(f"decay fit needs at least 10 samples in the window, got {t.size}")
    if np.any(values <= 0.0):
        raise ValueError("decay fit window contains nonpositive values")
    x = np.log1p(t)
    y = np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    return float(-slope), float(np.exp(intercept))
