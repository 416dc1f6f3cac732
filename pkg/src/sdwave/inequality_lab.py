"""Verification layer for the inequality machinery behind the global bound.

Contents:

* interpolation-ratio samplers (plain and weighted) over seeded random fields;
* the pointwise bound on the weighted acceleration, reconstructed from the PDE;
* integrated energy-budget monitors at the recorded output stride;
* forcing-integral monitors whose checkable content is ratio boundedness;
* the exponent calculus beta1..beta6 with its four strict threshold gates;
* the convolution decay integral (1+t-s)^(-a) (1+s)^(-b).

Everything operates on immutable snapshots or recorded scalar series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from sdwave.energetics import weighted_sq_norm
from sdwave.grid import PolarGrid, gradient_sq, laplacian
from sdwave.solver import NonlinearityParams, RunResult, State, bump_profile, nonlinearity
from sdwave.weight import (
    WeightParams,
    forcing_constants,
    rho_critical,
    weight_derivatives,
    weight_exponent,
)

__all__ = [
    "ExponentReport",
    "interpolation_exponent",
    "exponent_report",
    "gn_ratio",
    "gn_ratio_parts",
    "weighted_gn_ratio",
    "FieldMode",
    "random_field_modes",
    "sample_field",
    "acceleration_bound_slack",
    "BudgetReport",
    "energy_budget_monitor",
    "ForcingIntegralReport",
    "forcing_integral_monitor",
    "convolution_decay",
]


def interpolation_exponent(m: float) -> float:
    """Interpolation exponent 1 - 2/m in [0, 1), strictly increasing in m >= 2."""
    if m < 2.0:
        raise ValueError(f"interpolation exponent needs m >= 2, got {m}")
    return 1.0 - 2.0 / m


@dataclass(frozen=True)
class ExponentReport:
    """Decay exponents beta1..beta6 and the strict threshold gates.

    Gates: square_integral_ok  <=> p, q > 4 + rho
           cross_integral_ok   <=> p, q > 5 + rho
           velocity_tail_ok    <=> q > 6 + 2 rho
           global_ok           <=> p, q > 6 + 2 rho_critical()
    """

    p: float
    q: float
    rho: float
    eta: float
    eps1: float
    delta: float
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    beta6: float
    square_integral_ok: bool
    cross_integral_ok: bool
    velocity_tail_ok: bool
    global_ok: bool


def exponent_report(
    p: float,
    q: float,
    rho: float,
    eta: float = 0.1,
    eps1: float = 0.01,
    delta: float = 0.01,
) -> ExponentReport:
    """Evaluate the exponent calculus at given auxiliary constants.

    beta1/beta2 govern the squared forcing integral, beta3/beta4 the mixed
    forcing-velocity integral, beta5/beta6 the velocity tail; negativity of
    the relevant betas at admissible constants is what each gate buys.
    """
    if p <= 1.0 or q <= 1.0:
        raise ValueError(f"p and q must exceed 1, got p={p}, q={q}")
    if rho <= 0.0 or eta <= 0.0 or eps1 <= 0.0 or delta <= 0.0:
        raise ValueError("rho, eta, eps1, delta must all be positive")
    beta1 = (eta - (p - 4.0 - rho)) / p
    beta2 = (eta - (q - 4.0 - rho)) / q
    beta3 = eta / p - (p - 5.0 - rho) / (2.0 * p)
    beta4 = eta / q - (q - 5.0 - rho) / (2.0 * q)
    beta5 = (2.0 + rho) * (1.0 + eps1) / (2.0 * q) + (1.0 + eta) / q
    beta6 = (
        (eps1 * (2.0 + rho) + 2.0 * eta) / (2.0 * q)
        + delta / 2.0
        - (0.5 - (6.0 + 2.0 * rho) / (2.0 * q))
    )
    global_threshold = 6.0 + 2.0 * rho_critical()
    return ExponentReport(
        p=p,
        q=q,
        rho=rho,
        eta=eta,
        eps1=eps1,
        delta=delta,
        beta1=beta1,
        beta2=beta2,
        beta3=beta3,
        beta4=beta4,
        beta5=beta5,
        beta6=beta6,
        square_integral_ok=(p > 4.0 + rho and q > 4.0 + rho),
        cross_integral_ok=(p > 5.0 + rho and q > 5.0 + rho),
        velocity_tail_ok=(q > 6.0 + 2.0 * rho),
        global_ok=(p > global_threshold and q > global_threshold),
    )


def _lm_norm(grid: PolarGrid, v: np.ndarray, m: float) -> float:
    return float(np.sum(grid.weights * np.abs(v) ** m) ** (1.0 / m))


def gn_ratio_parts(grid: PolarGrid, v: np.ndarray, m: float) -> tuple[float, float]:
    """(numerator, denominator) of the interpolation ratio at exponent m."""
    th = interpolation_exponent(m)
    norm2 = math.sqrt(float(np.sum(grid.weights * v * v)))
    grad2 = math.sqrt(float(np.sum(grid.weights * gradient_sq(grid, v))))
    denom = norm2 ** (1.0 - th) * grad2**th
    if denom == 0.0:
        raise ValueError("undefined interpolation ratio: zero denominator")
    return _lm_norm(grid, v, m), denom


def gn_ratio(grid: PolarGrid, v: np.ndarray, m: float) -> float:
    """Interpolation ratio |v|_m / (|v|_2^(1-th) |grad v|_2^th), th = 1 - 2/m.

    Boundedness of this ratio over smooth fields and refinements is the
    checkable content of the interpolation inequality; at m = 2 the ratio
    is identically 1.
    """
    num, denom = gn_ratio_parts(grid, v, m)
    return num / denom


def weighted_gn_ratio(
    grid: PolarGrid,
    v: np.ndarray,
    t: float,
    m: float,
    sigma: float,
    params: WeightParams,
) -> float:
    """Weighted interpolation ratio

        |e^{sigma w} v|_m / ((1+t)^{(2+rho)(1-th)/2} |grad v|_2^{1-sigma} |e^w grad v|_2^{sigma}).
    """
    if not 0.0 < sigma <= 1.0:
        raise ValueError(f"sigma must lie in (0, 1], got {sigma}")
    th = interpolation_exponent(m)
    wexp = np.asarray(weight_exponent(t, grid.r, params.rho))[:, None]
    wexp_full = np.broadcast_to(wexp, v.shape)

    mask = v != 0.0
    if not np.any(mask):
        raise ValueError("undefined interpolation ratio: zero field")
    logs = (
        m * sigma * wexp_full[mask]
        + m * np.log(np.abs(v[mask]))
        + np.log(grid.weights[mask])
    )
    shift = float(np.max(logs))
    num = math.exp(shift / m) * float(np.sum(np.exp(logs - shift))) ** (1.0 / m)

    grad_density = gradient_sq(grid, v)
    grad2 = math.sqrt(float(np.sum(grid.weights * grad_density)))
    wgrad2 = math.sqrt(weighted_sq_norm(grid, np.sqrt(grad_density), wexp))
    denom = (
        (1.0 + t) ** ((2.0 + params.rho) * (1.0 - th) / 2.0)
        * grad2 ** (1.0 - sigma)
        * wgrad2**sigma
    )
    if denom == 0.0:
        raise ValueError("undefined interpolation ratio: zero denominator")
    return num / denom


@dataclass(frozen=True)
class FieldMode:
    """One radial-angular bump mode of a random smooth test field."""

    coeff: float
    r1: float
    r2: float
    angular_k: int
    phase: float


def random_field_modes(
    rng: np.random.Generator,
    r_inner: float,
    r_outer: float,
    n_modes: int = 5,
    max_angular: int = 6,
) -> list[FieldMode]:
    """Draw bump-mode parameters with unit-normal coefficients; the returned
    mode list is grid-free so refinements evaluate the same analytic field."""
    span = r_outer - r_inner
    modes = []
    for _ in range(n_modes):
        center = rng.uniform(r_inner + 0.15 * span, r_outer - 0.15 * span)
        width = rng.uniform(0.2 * span, 0.6 * span)
        r1 = max(r_inner + 0.02 * span, center - width / 2.0)
        r2 = min(r_outer - 0.02 * span, center + width / 2.0)
        modes.append(
            FieldMode(
                coeff=float(rng.standard_normal()),
                r1=float(r1),
                r2=float(r2),
                angular_k=int(rng.integers(0, max_angular + 1)),
                phase=float(rng.uniform(0.0, 2.0 * np.pi)),
            )
        )
    return modes


def sample_field(grid: PolarGrid, modes: list[FieldMode]) -> np.ndarray:
    """Evaluate a mode superposition on a grid (compactly supported, smooth)."""
    out = grid.zero_field()
    for mode in modes:
        radial = bump_profile(grid.r, mode.r1, mode.r2, mode.coeff)
        out += radial[:, None] * np.cos(mode.angular_k * grid.theta + mode.phase)[None, :]
    return out


def acceleration_bound_slack(
    grid: PolarGrid,
    state: State,
    params: NonlinearityParams,
    weight_params: WeightParams,
    source=None,
) -> float:
    """Worst normalized nodewise slack of the weighted acceleration bound.

    The acceleration is reconstructed from the PDE, u_tt = lap u + lap v + F,
    and the bound

        (|gw|^2/(-w_t)) |u_tt|^2 <= (-w_t) |lap u|^2 + eps |lap v|^2 + c_accel |F|^2

    is checked node by node (the common factor e^{2w} > 0 cancels).  Returns
    min over nodes of (rhs - lhs)/max(rhs, lhs, floor); values at or above
    -1e-12 mean the bound holds to rounding.
    """
    eps = weight_params.require_window()
    c_accel, _ = forcing_constants(weight_params)
    forcing = nonlinearity(state.u, state.v, params)
    if source is not None:
        forcing = forcing + source(state.t)
    lap_u = laplacian(grid, state.u)
    lap_v = laplacian(grid, state.v)
    u_tt = lap_u + lap_v + forcing

    w_t, grad, _ = weight_derivatives(state.t, grid.r, weight_params.rho)
    ratio = (np.asarray(grad) ** 2 / (-np.asarray(w_t)))[:, None]
    lhs = ratio * u_tt**2
    rhs = (-np.asarray(w_t))[:, None] * lap_u**2 + eps * lap_v**2 + c_accel * forcing**2
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
    return float(np.min((rhs - lhs) / scale))


@dataclass(frozen=True)
class BudgetReport:
    """Trajectory budget check: lhs(t) <= rhs(t) with a discretization allowance."""

    order: str
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    max_violation: float


def _left_riemann_cumulative(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    out = np.zeros_like(f)
    if t.size > 1:
        out[1:] = np.cumsum(f[:-1] * np.diff(t))
    return out


def energy_budget_monitor(
    result: RunResult, weight_params: WeightParams, order: str = "higher"
) -> BudgetReport:
    """Check one of the two integrated weighted-energy budgets on a recorded run.

    order="higher":  Wsecond(t) + (1-eps) int |e^w lap v|^2 <= Wsecond(0) + c_budget int |e^w F|^2
    order="lower":   Wfirst(t) <= Wfirst(0) + 2 int |e^w F| |e^w v|

    Time integrals are left-endpoint Riemann sums at the recorded stride.
    Violations are relative to max(rhs, 1e-14).
    """
    t = result.series["t"]
    if order == "higher":
        eps = weight_params.require_window()
        _, c_budget = forcing_constants(weight_params)
        lhs = result.series["wsecond"] + (1.0 - eps) * _left_riemann_cumulative(
            t, result.series["w_lap_v_sq"]
        )
        rhs = result.series["wsecond"][0] + c_budget * _left_riemann_cumulative(
            t, result.series["w_forcing_sq"]
        )
    elif order == "lower":
        lhs = result.series["wfirst"]
        cross = np.sqrt(result.series["w_forcing_sq"] * result.series["w_v_sq"])
        rhs = result.series["wfirst"][0] + 2.0 * _left_riemann_cumulative(t, cross)
    else:
        raise ValueError(f"order must be 'higher' or 'lower', got {order!r}")
    violation = (lhs - rhs) / np.maximum(rhs, 1e-14)
    return BudgetReport(
        order=order, t=t, lhs=lhs, rhs=rhs, max_violation=float(np.max(violation))
    )


@dataclass(frozen=True)
class ForcingIntegralReport:
    """Ratio series for the two forcing integrals against powers of the
    running sup M(t) of the combined norm; boundedness of the final ratios
    over refinements and horizons is the checkable content."""

    t: np.ndarray
    a_lhs: np.ndarray
    b_lhs: np.ndarray
    m_running: np.ndarray
    ratio_a: np.ndarray
    ratio_b: np.ndarray


def forcing_integral_monitor(
    result: RunResult,
    params: NonlinearityParams,
    weight_params: WeightParams,
) -> ForcingIntegralReport:
    """Monitor int |e^w F|^2 and int |e^w F| |e^w v| against M-powers.

    Refuses when the exponent gates fail: the squared integral needs
    p, q > 4 + rho and the mixed integral needs p, q > 5 + rho.
    """
    report = exponent_report(params.p, params.q, weight_params.rho)
    if not report.square_integral_ok:
        raise ValueError(
            f"squared forcing integral needs p, q > {4.0 + weight_params.rho} "
            f"(got p={params.p}, q={params.q})"
        )
    if not report.cross_integral_ok:
        raise ValueError(
            f"mixed forcing integral needs p, q > {5.0 + weight_params.rho} "
            f"(got p={params.p}, q={params.q})"
        )
    t = result.series["t"]
    a_lhs = _left_riemann_cumulative(t, result.series["w_forcing_sq"])
    cross = np.sqrt(result.series["w_forcing_sq"] * result.series["w_v_sq"])
    b_lhs = _left_riemann_cumulative(t, cross)
    m_running = np.maximum.accumulate(result.series["W"])
    p, q = params.p, params.q
    denom_a = np.maximum(m_running**p + m_running**q, 1e-300)
    denom_b = np.maximum(
        m_running ** ((p + 1.0) / 2.0) + m_running ** ((q + 1.0) / 2.0), 1e-300
    )
    return ForcingIntegralReport(
        t=t,
        a_lhs=a_lhs,
        b_lhs=b_lhs,
        m_running=m_running,
        ratio_a=a_lhs / denom_a,
        ratio_b=b_lhs / denom_b,
    )


def convolution_decay(
    a_exp: float, b_exp: float, t_values
) -> list[tuple[float, float, float]]:
    """Rows (t, I(t), (1+t)^a I(t)) for I(t) = int_0^t (1+t-s)^(-a) (1+s)^(-b) ds.

    Adaptive quadrature at absolute tolerance 1e-10.  Restricted to the
    regime a in (0, 1], b > 1, where the integral decays like (1+t)^(-a)
    and the scaled column plateaus.
    """
    if not 0.0 < a_exp <= 1.0:
        raise ValueError(f"a_exp must lie in (0, 1], got {a_exp}")
    if not b_exp > 1.0:
        raise ValueError(f"b_exp must exceed 1, got {b_exp}")
    rows = []
    for t in np.atleast_1d(np.asarray(t_values, dtype=float)):
        if t < 0.0:
            raise ValueError(f"t must be nonnegative, got {t}")
        if t == 0.0:
            val = 0.0
        else:
            val, _ = quad(
                lambda s: (1.0 + t - s) ** (-a_exp) * (1.0 + s) ** (-b_exp),
                0.0,
                float(t),
                epsabs=1e-10,
                epsrel=1e-12,
                limit=400,
            )
        rows.append((float(t), float(val), float((1.0 + t) ** a_exp * val)))
    return rows
