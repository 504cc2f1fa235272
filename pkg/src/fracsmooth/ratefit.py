"""Convergence-rate estimation for discrete-hedging L2 errors.

Weighted log-log regression of the error against the interval count n,
plus the sweep driver that simulates the errors across a geometric list
of n values with per-n derived seeds and path counts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ExactHedgeError
from .hedging import L2ErrorEstimate, l2_tracking_error
from .model import MarketModel, child_seed
from .payoffs import Payoff
from .timenets import make_theta_net

__all__ = [
    "RateFit",
    "SweepResult",
    "fit_rate",
    "sweep",
    "sweep_to_csv",
    "fit_summary",
]


@dataclass(frozen=True)
class RateFit:
    """WLS fit of log error vs log n with a 95% slope interval."""

    pairs: tuple
    slope: float
    intercept: float
    r_squared: float
    slope_ci: tuple

    def __post_init__(self):
        if not math.isfinite(self.slope):
            raise ConfigError("fitted slope must be finite")


def fit_rate(pairs) -> RateFit:
    """Fit error ~ C n^slope from (n, l2_error, stderr_of_mean_square).

    Weights are delta-method standard errors of log error,
    se(log e) = stderr / (2 e^2); points with zero stderr get the
    smallest positive weight present (exact synthetic inputs fit too).
    """
    pairs = [(int(n), float(e), float(se)) for n, e, se in pairs]
    ns = sorted({n for n, _, _ in pairs})
    if len(ns) < 4:
        raise ConfigError("need at least 4 distinct n values")
    if ns[-1] < 4 * ns[0]:
        raise ConfigError("n values must span at least 2 octaves")
    errors = np.array([e for _, e, _ in pairs])
    if np.all(errors == 0.0):
        raise ExactHedgeError("all errors vanish: the hedge is exact")
    if np.any(errors <= 0.0):
        raise ExactHedgeError("zero error in a rate fit: exact hedge point")

    x = np.log([n for n, _, _ in pairs])
    y = np.log(errors)
    se_log = np.array([se / (2.0 * e * e) for _, e, se in pairs])
    if np.any(~np.isfinite(se_log)):
        raise ConfigError("non-finite fit weight from a reported stderr")
    floor = se_log[se_log > 0.0].min() if np.any(se_log > 0.0) else 1.0
    se_log = np.maximum(se_log, floor)
    w = 1.0 / se_log ** 2

    A = np.vstack([x, np.ones_like(x)]).T
    aw = A * w[:, None]
    cov = np.linalg.inv(A.T @ aw)
    coef = cov @ (aw.T @ y)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = y - A @ coef
    ybar = float(np.average(y, weights=w))
    ss_res = float(w @ resid ** 2)
    ss_tot = float(w @ (y - ybar) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    half = 1.96 * math.sqrt(max(cov[0, 0], 0.0))
    return RateFit(pairs=tuple(pairs), slope=slope, intercept=intercept,
                   r_squared=r2, slope_ci=(slope - half, slope + half))


@dataclass(frozen=True)
class SweepResult:
    estimates: tuple
    fit: RateFit
    payoff: Payoff
    model: MarketModel
    net_theta: float
    seed: int
    measure: str


def sweep(p: Payoff, model: MarketModel, theta: float, n_list, m: int,
          seed: int, measure: str = "martingale",
          threads: int = 1) -> SweepResult:
    """Estimate L2 errors over n_list and fit the rate exponent.

    Per-n path counts scale like sqrt(n / n_min) capped at 4 m, per-n
    seeds derive from the master seed, and the fit drops the smallest n
    (documented pre-asymptotic transient).
    """
    n_list = sorted(int(n) for n in n_list)
    if len(n_list) < 5:
        raise ConfigError("sweep needs at least 5 n values (one is dropped)")
    n_min = n_list[0]
    estimates = []
    for n in n_list:
        m_n = min(4 * m, int(round(m * math.sqrt(n / n_min))))
        net = make_theta_net(n, theta, model.T)
        est = l2_tracking_error(p, model, net, m_n, child_seed(seed, n),
                                measure=measure, threads=threads)
        estimates.append(est)
    fit = fit_rate([(e.n, e.l2_error, e.stderr) for e in estimates[1:]])
    return SweepResult(estimates=tuple(estimates), fit=fit, payoff=p,
                       model=model, net_theta=theta, seed=seed,
                       measure=measure)


def sweep_to_csv(path, result: SweepResult, header_lines=()) -> None:
    """CSV rows (n, l2_error, stderr, m), after optional # comments."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["n", "l2_error", "stderr", "m"])
        for e in result.estimates:
            w.writerow([e.n, repr(e.l2_error), repr(e.stderr), e.m])


def fit_summary(fit: RateFit) -> str:
    """Machine-readable summary with stable field names."""
    return json.dumps({
        "slope": fit.slope,
        "slope_lo": fit.slope_ci[0],
        "slope_hi": fit.slope_ci[1],
        "r2": fit.r_squared,
    }, sort_keys=True)
