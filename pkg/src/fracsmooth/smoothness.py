"""Fractional smoothness diagnostics of a payoff under GBM.

Three quadrature-based views of the same index theta:

* the conditional-L2 decay D(t) = || h(S_T) - H(t, S_t) ||_{L2},
* the growth of the mean-square log-coordinate gradient of the price,
* the growth of the mean-square log-coordinate Hessian,

plus finiteness verdicts for the integral-type criteria obtained from
octave-wise truncated integrals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import payoffs as po
from .errors import ConfigError, DegenerateCurveError
from .model import MarketModel
from .payoffs import Payoff, kink_feature
from .quadrature import lognormal_grid

__all__ = [
    "DecayCurve",
    "ThetaEstimate",
    "default_t_grid",
    "conditional_l2_decay",
    "estimate_theta_sup",
    "grad_growth_curve",
    "hessian_growth_curve",
    "b22_integral",
    "integral_criteria_verdicts",
    "growth_criteria_exponents",
    "curves_to_csv",
]

#: octave ratio below which truncated-integral increments count as decaying
RATIO_FINITE = 0.95


@dataclass(frozen=True)
class DecayCurve:
    t_grid: np.ndarray
    D: np.ndarray
    payoff: Payoff
    model: MarketModel


@dataclass(frozen=True)
class ThetaEstimate:
    """Clamped smoothness index with the underlying log-log fit."""

    theta_hat: float
    slope: float
    residual_rms: float


def default_t_grid(model: MarketModel, depth: int = 20) -> np.ndarray:
    """Geometric grid T - t_j = T 2^-j, j = 0..depth (t_0 = 0)."""
    j = np.arange(depth + 1)
    return model.T - model.T * 2.0 ** -j.astype(float)


def _outer_law(model: MarketModel, t: float):
    x0 = math.log(model.s0)
    return x0 - 0.5 * model.sigma ** 2 * t, model.sigma * math.sqrt(t)


def _outer_expect(p: Payoff, model: MarketModel, t: float, integrand,
                  tail_depth: int = 40) -> float:
    """E[f(S_t)] over the lognormal law of S_t, kink-aware grading."""
    if t == 0.0:
        return float(np.asarray(integrand(np.array([model.s0])))[0])
    mean, std = _outer_law(model, t)
    ft = kink_feature(p, model, t)
    x, w = lognormal_grid(mean, std, features=(ft,) if ft else (),
                          tail_depth=tail_depth)
    return float(w @ np.asarray(integrand(np.exp(x))))


def conditional_l2_decay(p: Payoff, model: MarketModel, t_grid) -> DecayCurve:
    """D(t) = sqrt E[ Var(h(S_T) | S_t) ] on the given grid.

    The conditional-variance form is algebraically identical to
    E[Z^2] - E[H(t,S_t)^2] but avoids the catastrophic cancellation of
    the two outer moments close to maturity.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0.0) or np.any(t_grid >= model.T):
        raise ConfigError("t_grid must lie in [0, T)")
    d = np.empty_like(t_grid)
    for i, t in enumerate(t_grid):
        val = _outer_expect(p, model, float(t),
                            lambda s: po.conditional_variance(p, model, float(t), s))
        if val < -1e-10:
            warnings.warn(f"negative decay value {val:.3e} clamped at t={t:.6g}")
        d[i] = math.sqrt(max(val, 0.0))
    return DecayCurve(t_grid=t_grid, D=d, payoff=p, model=model)


def _loglog_slope(u: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log y vs log u, dropping 2 ends each side."""
    keep = slice(2, -2)
    lu, ly = np.log(u[keep]), np.log(y[keep])
    A = np.vstack([lu, np.ones_like(lu)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def estimate_theta_sup(curve: DecayCurve) -> ThetaEstimate:
    """theta from the decay rate: 2 x slope of log D against log(T-t)."""
    u = curve.model.T - curve.t_grid
    if curve.t_grid.size < 8 or u.max() / u.min() < 1e3:
        raise ConfigError("need >= 8 points spanning 3 decades of T-t")
    if np.all(curve.D == 0.0):
        raise DegenerateCurveError(
            "decay curve is identically zero: infinitely smooth payoff")
    slope, rms = _loglog_slope(u, curve.D)
    theta = min(1.0, 2.0 * slope)
    return ThetaEstimate(theta_hat=theta, slope=slope, residual_rms=rms)


def grad_growth_curve(p: Payoff, model: MarketModel, t_grid) -> np.ndarray:
    """E |x-gradient of the log-coordinate price|^2 = E (s dH/ds)^2."""
    t_grid = np.asarray(t_grid, dtype=float)
    out = np.empty_like(t_grid)
    for i, t in enumerate(t_grid):
        out[i] = _outer_expect(
            p, model, float(t),
            lambda s: (s * np.asarray(po.delta(p, model, float(t), s))) ** 2)
    return out


def hessian_growth_curve(p: Payoff, model: MarketModel, t_grid) -> np.ndarray:
    """E |D^2 u|^2 with D^2 u = s^2 d2H/ds2 + s dH/ds (log coordinates)."""
    t_grid = np.asarray(t_grid, dtype=float)
    out = np.empty_like(t_grid)
    for i, t in enumerate(t_grid):
        def integrand(s, t=float(t)):
            g = np.asarray(po.gamma(p, model, t, s))
            d = np.asarray(po.delta(p, model, t, s))
            return (s * s * g + s * d) ** 2
        out[i] = _outer_expect(p, model, float(t), integrand)
    return out


def _octave_integrals(p, model, weight_exp: float, curve_fn,
                      depth: int, order: int = 8) -> np.ndarray:
    """I_j = int over T-t in [T 2^-j-1, T 2^-j] of (T-t)^weight_exp f(t) dt."""
    gx, gw = np.polynomial.legendre.leggauss(order)
    vals = np.empty(depth)
    for j in range(depth):
        hi, lo = model.T * 2.0 ** -j, model.T * 2.0 ** -(j + 1)
        # integrate in log(T-t) for resolution across the octave
        la, lb = math.log(lo), math.log(hi)
        lt = 0.5 * (la + lb) + 0.5 * (lb - la) * gx
        u = np.exp(lt)
        w = 0.5 * (lb - la) * gw * u
        acc = 0.0
        for uu, ww in zip(u, w):
            acc += ww * uu ** weight_exp * curve_fn(model.T - uu)
        vals[j] = acc
    return vals


def _verdict(increments: np.ndarray) -> str:
    """finite if the deepest octave increments decay geometrically."""
    tail = increments[-4:]
    if np.any(tail <= 0.0):
        return "finite"
    ratios = tail[1:] / tail[:-1]
    return "finite" if float(np.max(ratios)) < RATIO_FINITE else "divergent"


def b22_integral(p: Payoff, model: MarketModel, theta: float,
                 depth: int = 18) -> tuple[float, str, np.ndarray]:
    """Truncated integral of (T-t)^(-1-theta) D(t)^2 and its verdict.

    Returns (value up to T - T 2^-depth, verdict, octave increments).
    """
    if not (0.0 < theta < 1.0):
        raise ConfigError("theta must lie in (0, 1)")

    def d2(t):
        return _outer_expect(p, model, t,
                             lambda s: po.conditional_variance(p, model, t, s))

    inc = _octave_integrals(p, model, -1.0 - theta, d2, depth)
    return float(inc.sum()), _verdict(inc), inc


def integral_criteria_verdicts(p: Payoff, model: MarketModel, theta: float,
                      depth: int = 18) -> dict[str, str]:
    """Finiteness verdicts of the three equivalent integral criteria."""
    if not (0.0 < theta < 1.0):
        raise ConfigError("theta must lie in (0, 1)")

    def d2(t):
        return _outer_expect(p, model, t,
                             lambda s: po.conditional_variance(p, model, t, s))

    def grad2(t):
        return _outer_expect(
            p, model, t,
            lambda s: (s * np.asarray(po.delta(p, model, t, s))) ** 2)

    def hess2(t):
        def integrand(s):
            g = np.asarray(po.gamma(p, model, t, s))
            d = np.asarray(po.delta(p, model, t, s))
            return (s * s * g + s * d) ** 2
        return _outer_expect(p, model, t, integrand)

    return {
        "decay": _verdict(_octave_integrals(p, model, -1.0 - theta, d2, depth)),
        "grad": _verdict(_octave_integrals(p, model, -theta, grad2, depth)),
        "hess": _verdict(_octave_integrals(p, model, 1.0 - theta, hess2, depth)),
    }


def growth_criteria_exponents(p: Payoff, model: MarketModel,
                       depth: int = 20) -> dict[str, float]:
    """Implied smoothness index from each sup-type growth criterion.

    decay: slope of log D^2;  grad: 1 + slope of log E|grad u|^2;
    hess: 2 + slope of log E|D^2 u|^2 -- all against log(T-t) and
    clamped into (0, 1].
    """
    grid = default_t_grid(model, depth)
    u = model.T - grid
    curve = conditional_l2_decay(p, model, grid)
    s_d, _ = _loglog_slope(u, np.maximum(curve.D ** 2, 1e-300))
    s_g, _ = _loglog_slope(u, np.maximum(grad_growth_curve(p, model, grid), 1e-300))
    s_h, _ = _loglog_slope(u, np.maximum(hessian_growth_curve(p, model, grid), 1e-300))
    clamp = lambda x: min(1.0, x)
    return {"decay": clamp(s_d), "grad": clamp(1.0 + s_g),
            "hess": clamp(2.0 + s_h)}


def curves_to_csv(path, p: Payoff, model: MarketModel, t_grid) -> None:
    """Write (t, T_minus_t, decay, grad_sq, hess_sq) rows."""
    t_grid = np.asarray(t_grid, dtype=float)
    curve = conditional_l2_decay(p, model, t_grid)
    g = grad_growth_curve(p, model, t_grid)
    h = hessian_growth_curve(p, model, t_grid)
    rows = np.column_stack([t_grid, model.T - t_grid, curve.D, g, h])
    np.savetxt(path, rows, fmt="%.17g", delimiter=",",
               header="t,T_minus_t,decay,grad_sq,hess_sq", comments="")
