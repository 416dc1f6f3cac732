"""Closed-form time-space weight used by the exponentially weighted diagnostics.

The weight exponent is radial and strictly decreasing in time,

    w(t, r) = 1 / (rho (1+t)^rho) + r^2 / (2 (1+t)^(2+rho)),      rho > 0,

and it enters every weighted quantity through the factor e^{2 w}.  Its decay
exponent ``rho`` must exceed a critical value (the positive root of
2 x^2 + 3 x - 8) before the auxiliary constant ``eps`` admits a nonempty
window; only then do the higher-order pointwise bounds close.

Everything in this module is exact scalar/array arithmetic: no grids, no
state, safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightParams",
    "PointwiseReport",
    "rho_critical",
    "epsilon_window",
    "default_eps",
    "weight_exponent",
    "weight_derivatives",
    "inequality_sides",
    "inequality_margins",
    "check_pointwise",
    "forcing_constants",
]


def rho_critical() -> float:
    """Positive root of 2 x^2 + 3 x - 8 = 0, approximately 1.386.

    Below this value the eps-window of :func:`epsilon_window` is empty and
    the higher-order weighted bounds are not available.
    """
    return (-3.0 + math.sqrt(73.0)) / 4.0


def epsilon_window(rho: float) -> tuple[float, float] | None:
    """Admissible half-open interval [lo, 1) for the auxiliary constant.

    lo = (4 rho + 14) / ((2 + rho)(2 rho + 3)).  Returns None when lo >= 1,
    which happens exactly for rho <= rho_critical().
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    lo = (4.0 * rho + 14.0) / ((2.0 + rho) * (2.0 * rho + 3.0))
    if lo >= 1.0:
        return None
    return (lo, 1.0)


def default_eps(rho: float) -> float | None:
    """Midpoint of the eps-window, or None when the window is empty."""
    window = epsilon_window(rho)
    if window is None:
        return None
    return 0.5 * (window[0] + 1.0)


@dataclass(frozen=True)
class WeightParams:
    """Weight parameters (rho, eps).

    ``rho`` must be positive.  ``eps`` is optional; the higher-order checks
    and constants require it to sit in the window [lo, 1) of
    :func:`epsilon_window`, which is only nonempty for rho > rho_critical().
    """

    rho: float
    eps: float | None = None

    def __post_init__(self) -> None:
        if not self.rho > 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @property
    def window(self) -> tuple[float, float] | None:
        return epsilon_window(self.rho)

    @property
    def in_window(self) -> bool:
        """True iff rho exceeds the critical value and eps lies in the window."""
        window = self.window
        return (
            window is not None
            and self.eps is not None
            and window[0] <= self.eps < 1.0
        )

    def require_window(self) -> float:
        """Return eps, raising when the window gate is not satisfied."""
        if not self.in_window:
            raise ValueError(
                f"weight params (rho={self.rho}, eps={self.eps}) do not satisfy the "
                f"window gate: need rho > {rho_critical():.6f} and eps in "
                f"{self.window if self.window else 'the (empty) window'}"
            )
        return float(self.eps)  # type: ignore[arg-type]


def weight_exponent(t, r, rho: float):
    """Value of the weight exponent at time t and radius r (vectorized)."""
    one_t = 1.0 + np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    val = 1.0 / (rho * one_t**rho) + r**2 / (2.0 * one_t ** (2.0 + rho))
    return val if val.ndim else float(val)


def weight_derivatives(t, r, rho: float):
    """Time derivative, gradient magnitude and Laplacian of the exponent.

    Returns (w_t, |grad w|, lap w) with

        w_t   = -1/(1+t)^(1+rho) - (2+rho) r^2 / (2 (1+t)^(3+rho))  < 0,
        |gw|  = r / (1+t)^(2+rho),
        lap w = 2 / (1+t)^(2+rho)   (independent of r).
    """
    one_t = 1.0 + np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    w_t = -1.0 / one_t ** (1.0 + rho) - (2.0 + rho) * r**2 / (2.0 * one_t ** (3.0 + rho))
    grad = r / one_t ** (2.0 + rho)
    lap = 2.0 / one_t ** (2.0 + rho) * np.ones_like(r)
    if w_t.ndim == 0:
        return float(w_t), float(grad), float(lap)
    return w_t, grad, lap


def _normalized(lhs, rhs):
    """Margin of the inequality lhs <= rhs, normalized by 1 + |lhs| + |rhs|."""
    return (rhs - lhs) / (1.0 + np.abs(lhs) + np.abs(rhs))


def inequality_sides(t, r, params: WeightParams):
    """(lhs, rhs) pairs of the four pointwise weight inequalities lhs <= rhs.

    Vectorized over t, r.  Entries:

      lower_order     |gw|^2 - w_t |gw|^2  <=  w_t^2
      higher_order    ((e(2+rho)+6)/(e(2+rho)-2)) |gw|^2  <=  w_t^2,
                      or None when the eps window gate fails
      grad_ratio      |gw|^2 / (-w_t)  <=  2/(2+rho)
      log_derivative  (-w_t)(1+t)  <=  (2+rho) w
    """
    rho = params.rho
    one_t = 1.0 + np.asarray(t, dtype=float)
    w = np.asarray(weight_exponent(t, r, rho))
    w_t, grad, _ = weight_derivatives(t, r, rho)
    grad_sq = np.asarray(grad) ** 2
    w_t = np.asarray(w_t)

    sides = {
        "lower_order": (grad_sq - w_t * grad_sq, w_t**2),
        "grad_ratio": (grad_sq / (-w_t), 2.0 / (2.0 + rho) * np.ones_like(grad_sq)),
        "log_derivative": ((-w_t) * one_t, (2.0 + rho) * w),
    }
    if params.in_window:
        eps = float(params.eps)  # type: ignore[arg-type]
        coeff = (eps * (2.0 + rho) + 6.0) / (eps * (2.0 + rho) - 2.0)
        sides["higher_order"] = (coeff * grad_sq, w_t**2)
    else:
        sides["higher_order"] = None
    return sides


def inequality_margins(t, r, params: WeightParams):
    """Normalized margins of the four pointwise weight inequalities.

    A margin >= 0 means the inequality holds; slight negatives within
    rounding are expected at boundary-tight points.  The window-gated entry
    is None when (rho, eps) fail the gate.
    """
    return {
        name: None if pair is None else _normalized(pair[0], pair[1])
        for name, pair in inequality_sides(t, r, params).items()
    }


@dataclass(frozen=True)
class PointwiseReport:
    """Outcome of the pointwise weight-inequality checks at one (t, r).

    ``higher_order_ok`` is None when the eps-window gate failed (reported,
    not raised).  ``worst_margin`` is the most negative normalized margin
    among the checks that were evaluated.
    """

    lower_order_ok: bool
    higher_order_ok: bool | None
    grad_ratio_ok: bool
    log_derivative_ok: bool
    worst_margin: float


def check_pointwise(t: float, r: float, params: WeightParams, tol: float = 1e-12) -> PointwiseReport:
    """Evaluate the four pointwise inequalities at a single sample point."""
    margins = inequality_margins(t, r, params)
    evaluated = [float(m) for m in margins.values() if m is not None]
    higher = margins["higher_order"]
    return PointwiseReport(
        lower_order_ok=bool(margins["lower_order"] >= -tol),
        higher_order_ok=None if higher is None else bool(higher >= -tol),
        grad_ratio_ok=bool(margins["grad_ratio"] >= -tol),
        log_derivative_ok=bool(margins["log_derivative"] >= -tol),
        worst_margin=min(evaluated),
    )


def forcing_constants(params: WeightParams) -> tuple[float, float]:
    """Constants multiplying the squared forcing in the weighted bounds.

    Returns (c_accel, c_budget):

      c_accel  = (2/(2+rho)) (1 + (e(2+rho)-2)/4 + 4/(e(2+rho)-2))
                 closes the pointwise bound on the weighted acceleration;
      c_budget = c_accel + 1/(2(1-e))
                 closes the integrated higher-order energy budget.

    Requires eps in the window (so e(2+rho) - 2 > 0) and eps < 1.
    """
    eps = params.require_window()
    rho = params.rho
    gap = eps * (2.0 + rho) - 2.0
    c_accel = (2.0 / (2.0 + rho)) * (1.0 + gap / 4.0 + 4.0 / gap)
    c_budget = c_accel + 1.0 / (2.0 * (1.0 - eps))
    return c_accel, c_budget
