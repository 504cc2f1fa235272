"""European payoffs and their prices/Greeks under zero-rate GBM.

Call, put, binary and affine payoffs have Black-Scholes closed forms.
Power-Holder payoffs ``(s - K)_+**theta`` and chaos payoffs (a Hermite
series in the normalized terminal log-price of the unit GBM) are priced
by Gauss-Hermite quadrature against the lognormal transition kernel;
their Greeks differentiate the kernel, not the payoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from .chaos import ChaosExpansion, hermite_series
from .errors import ConfigError, QuadratureError
from .model import MarketModel
from .quadrature import Feature, gauss_normal_nodes

__all__ = [
    "Payoff",
    "PriceSurface",
    "payoff_eval",
    "price",
    "delta",
    "gamma",
    "second_moment",
    "conditional_variance",
    "kink_feature",
]

_TAU_FLOOR = 1e-12
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_CLOSED_FORM = frozenset({"call", "put", "binary", "affine"})
_KINDS = frozenset({"call", "put", "binary", "power_holder", "affine", "chaos"})


@dataclass(frozen=True)
class Payoff:
    """Terminal payoff h(s); build instances through the classmethods."""

    kind: str
    strike: float | None = None
    holder_theta: float | None = None
    c0: float | None = None
    c1: float | None = None
    expansion: ChaosExpansion | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown payoff kind {self.kind!r}")
        if self.kind in ("call", "put", "binary", "power_holder"):
            if self.strike is None or not (self.strike > 0.0):
                raise ConfigError("strike must be > 0")
        if self.kind == "power_holder":
            if self.holder_theta is None or not (0.0 < self.holder_theta < 1.0):
                raise ConfigError("holder exponent must lie in (0, 1)")
        if self.kind == "affine" and (self.c0 is None or self.c1 is None):
            raise ConfigError("affine payoff needs c0 and c1")
        if self.kind == "chaos" and self.expansion is None:
            raise ConfigError("chaos payoff needs an expansion")

    @classmethod
    def call(cls, strike: float) -> "Payoff":
        return cls(kind="call", strike=strike)

    @classmethod
    def put(cls, strike: float) -> "Payoff":
        return cls(kind="put", strike=strike)

    @classmethod
    def binary(cls, strike: float) -> "Payoff":
        return cls(kind="binary", strike=strike)

    @classmethod
    def power_holder(cls, strike: float, holder_theta: float) -> "Payoff":
        return cls(kind="power_holder", strike=strike, holder_theta=holder_theta)

    @classmethod
    def affine(cls, c0: float, c1: float) -> "Payoff":
        return cls(kind="affine", c0=c0, c1=c1)

    @classmethod
    def chaos(cls, expansion: ChaosExpansion) -> "Payoff":
        return cls(kind="chaos", expansion=expansion)

    @property
    def closed_form(self) -> bool:
        return self.kind in _CLOSED_FORM


def payoff_eval(p: Payoff, s):
    """h(s) per kind; the binary uses the closed-right convention h(K)=1."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0.0):
        raise ConfigError("payoff argument s must be > 0")
    if p.kind == "call":
        out = np.maximum(s_arr - p.strike, 0.0)
    elif p.kind == "put":
        out = np.maximum(p.strike - s_arr, 0.0)
    elif p.kind == "binary":
        out = np.where(s_arr >= p.strike, 1.0, 0.0)
    elif p.kind == "power_holder":
        out = np.maximum(s_arr - p.strike, 0.0) ** p.holder_theta
    elif p.kind == "affine":
        out = p.c0 + p.c1 * s_arr
    else:
        # chaos: series in the normalized terminal log-price of the unit
        # GBM (s0 = sigma = T = 1, zero drift), x = ln s + 1/2
        out = hermite_series(p.expansion.alpha, np.log(s_arr) + 0.5)
    return out if np.ndim(s) else float(out)


def _tau(model: MarketModel, t: float, greek: bool) -> float:
    if t < 0.0 or t > model.T:
        raise ConfigError("valuation time t must lie in [0, T]")
    if greek and t >= model.T:
        raise ConfigError("Greeks are not defined at t = T")
    return max(model.T - t, _TAU_FLOOR)


def _d12(model: MarketModel, tau: float, s, strike: float):
    v = model.sigma * math.sqrt(tau)
    d1 = (np.log(s / strike) + 0.5 * v * v) / v
    return v, d1, d1 - v


def _phi(x):
    return np.exp(-0.5 * np.asarray(x) ** 2) / _SQRT_2PI


def _quad_values(model: MarketModel, tau: float, s: np.ndarray, h, order: int):
    """h evaluated on kernel nodes: returns (values, z) of shape (ns, order)."""
    z, w = gauss_normal_nodes(order)
    v = model.sigma * math.sqrt(tau)
    st = s[:, None] * np.exp(v * z[None, :] - 0.5 * v * v)
    return np.asarray(h(st)), z, w, v


def _quad_converged(model, tau, s, h, weight_fn, order, rtol, atol):
    vals = []
    for n in (order, 2 * order + 1):
        hv, z, w, v = _quad_values(model, tau, s, h, n)
        vals.append(hv @ (w * weight_fn(z, v)))
    a, b = vals
    scale = np.maximum(np.abs(b), 1.0)
    if np.any(np.abs(a - b) > atol + rtol * scale):
        raise QuadratureError(
            "lognormal-kernel quadrature did not converge under node doubling")
    return b


_kink_panel_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _kink_panels(y_max: float, n_gl: int, depth: int = 48):
    """Graded Gauss-Legendre nodes on [-y_max, y_max], refined toward 0.

    Panels shrink geometrically to width 2^-depth at the origin, so a
    root- or step-type singularity there is integrated to near machine
    precision with a fixed low panel order.
    """
    key = (round(y_max, 6), n_gl, depth)
    if key not in _kink_panel_cache:
        edges = [0.0]
        h = 2.0 ** -depth
        while edges[-1] < y_max:
            edges.append(min(edges[-1] + h, y_max))
            h = min(2.0 * h, 0.5)
        eg = np.array(edges)
        eg = np.concatenate([-eg[::-1], eg[1:]])
        gx, gw = leggauss(n_gl)
        a, b = eg[:-1], eg[1:]
        y = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * gx[None, :]).ravel()
        w = (0.5 * (b - a)[:, None] * gw[None, :]).ravel()
        _kink_panel_cache[key] = (y, w)
    return _kink_panel_cache[key]


def _kinked_quad(p: Payoff, model: MarketModel, tau: float, s: np.ndarray,
                 which: str, n_gl: int, square: bool = False) -> np.ndarray:
    """Kernel quadrature for payoffs with a kink at the strike.

    Works in y = ln(S_T/K)/v where the kink sits at y = 0 for every spot;
    spots whose kink lies far outside the Gaussian kernel's support use a
    plain Gauss-Hermite rule instead.
    """
    v = model.sigma * math.sqrt(tau)
    K = p.strike
    d2 = (np.log(s / K) - 0.5 * v * v) / v
    out = np.empty_like(s)
    near = np.abs(d2) <= 8.0

    h = _payoff_fn(p)
    if square:
        g = lambda st: h(st) ** 2
    else:
        g = h

    if np.any(near):
        y, wq = _kink_panels(8.0 + 12.0, n_gl)
        gy = np.asarray(g(K * np.exp(v * y)))
        zz = y[None, :] - d2[near, None]
        kern = np.exp(-0.5 * zz * zz) / _SQRT_2PI
        if which == "price":
            wz = kern
        elif which == "delta":
            wz = kern * zz
        else:
            wz = kern * ((zz * zz - 1.0) / v - zz)
        out[near] = wz @ (wq * gy)
    if np.any(~near):
        far = ~near
        z, w = gauss_normal_nodes(201)
        st = s[far, None] * np.exp(v * z[None, :] - 0.5 * v * v)
        gv = np.asarray(g(st))
        if which == "price":
            wz = np.broadcast_to(w, gv.shape)
        elif which == "delta":
            wz = w * z[None, :]
        else:
            wz = w * ((z * z - 1.0) / v - z)[None, :]
        out[far] = (gv * wz).sum(axis=1)
    if which == "delta":
        out /= s * v
    elif which == "gamma":
        out /= s * s * v
    return out


def _kinked_converged(p, model, tau, s, which, rtol, atol, square=False):
    a = _kinked_quad(p, model, tau, s, which, n_gl=8, square=square)
    b = _kinked_quad(p, model, tau, s, which, n_gl=12, square=square)
    scale = np.maximum(np.abs(b), 1.0)
    if np.any(np.abs(a - b) > atol + rtol * scale):
        raise QuadratureError(
            "graded kernel quadrature did not converge under refinement")
    return b


def _payoff_fn(p: Payoff):
    if p.kind == "power_holder":
        K, th = p.strike, p.holder_theta
        return lambda st: np.maximum(st - K, 0.0) ** th
    alpha = p.expansion.alpha
    return lambda st: hermite_series(alpha, np.log(st) + 0.5)


def _chaos_closed(p, model, tau, s, which):
    """Closed-form chaos price/Greeks via Q_k = E[H_k(N(m, v^2))].

    Q satisfies Q_{k+1} = (m Q_k + (v^2-1) sqrt(k) Q_{k-1}) / sqrt(k+1),
    stable and geometrically convergent for v <= 1; derivatives in m
    follow from d/dm Q_k = sqrt(k) Q_{k-1}.
    """
    alpha = p.expansion.alpha
    v = model.sigma * math.sqrt(tau)
    m = np.log(s) + 0.5 - 0.5 * v * v
    c = v * v - 1.0
    q_pp = None
    q_prev = np.ones_like(m)
    q = m.copy()
    f = alpha[0] * q_prev
    f1 = np.zeros_like(m)
    f2 = np.zeros_like(m)
    if alpha.size > 1:
        f = f + alpha[1] * q
        f1 = f1 + alpha[1] * q_prev
    for k in range(1, alpha.size - 1):
        q_pp, q_prev, q = (q_prev, q,
                           (m * q + c * math.sqrt(k) * q_prev) / math.sqrt(k + 1))
        a = alpha[k + 1]
        f = f + a * q
        f1 = f1 + a * math.sqrt(k + 1) * q_prev
        f2 = f2 + a * math.sqrt((k + 1) * k) * q_pp
    if which == "price":
        return f
    if which == "delta":
        return f1 / s
    return (f2 - f1) / (s * s)


def _dispatch(p, model, t, s, which, order, rtol, atol):
    s_in = s
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0.0):
        raise ConfigError("price argument s must be > 0")
    tau = _tau(model, t, greek=(which != "price"))
    if which == "price" and t >= model.T and not p.closed_form:
        out = payoff_eval(p, s)
    elif p.closed_form:
        out = _closed_form(p, model, tau, s, which)
    elif p.kind == "power_holder":
        out = _kinked_converged(p, model, tau, s, which, rtol, atol)
    elif p.kind == "chaos" and model.sigma ** 2 * tau <= 1.0:
        out = _chaos_closed(p, model, tau, s, which)
    else:
        h = _payoff_fn(p)
        if which == "price":
            weight = lambda z, v: np.ones_like(z)
            post = lambda r, v: r
        elif which == "delta":
            weight = lambda z, v: z
            post = lambda r, v: r / (s * v)
        else:
            weight = lambda z, v: (z * z - 1.0) / v - z
            post = lambda r, v: r / (s * s * v)
        v = model.sigma * math.sqrt(tau)
        raw = _quad_converged(model, tau, s, h, weight, order, rtol, atol)
        out = post(raw, v)
    return out if np.ndim(s_in) else float(out[0])


def _closed_form(p, model, tau, s, which):
    if p.kind == "affine":
        if which == "price":
            return p.c0 + p.c1 * s
        if which == "delta":
            return np.full_like(s, p.c1)
        return np.zeros_like(s)
    v, d1, d2 = _d12(model, tau, s, p.strike)
    K = p.strike
    if p.kind == "call":
        if which == "price":
            return s * ndtr(d1) - K * ndtr(d2)
        if which == "delta":
            return ndtr(d1)
        return _phi(d1) / (s * v)
    if p.kind == "put":
        if which == "price":
            return K * ndtr(-d2) - s * ndtr(-d1)
        if which == "delta":
            return ndtr(d1) - 1.0
        return _phi(d1) / (s * v)
    # binary
    if which == "price":
        return ndtr(d2)
    if which == "delta":
        return _phi(d2) / (s * v)
    return -_phi(d2) * d1 / (s * s * v * v)


def price(p: Payoff, model: MarketModel, t: float, s, *,
          order: int = 201, rtol: float = 1e-6, atol: float = 1e-10):
    """H(t, s) = E[h(S_T) | S_t = s] under the martingale measure."""
    return _dispatch(p, model, t, s, "price", order, rtol, atol)


def delta(p: Payoff, model: MarketModel, t: float, s, *,
          order: int = 201, rtol: float = 1e-5, atol: float = 1e-9):
    """dH/ds, for t strictly before maturity."""
    return _dispatch(p, model, t, s, "delta", order, rtol, atol)


def gamma(p: Payoff, model: MarketModel, t: float, s, *,
          order: int = 201, rtol: float = 1e-4, atol: float = 1e-8):
    """d^2 H / ds^2, for t strictly before maturity."""
    return _dispatch(p, model, t, s, "gamma", order, rtol, atol)


def second_moment(p: Payoff, model: MarketModel, t: float, s, *,
                  order: int = 201):
    """E[h(S_T)^2 | S_t = s]; closed form where the payoff has one."""
    s_in = s
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0.0):
        raise ConfigError("price argument s must be > 0")
    tau = _tau(model, t, greek=False)
    if t >= model.T and not p.closed_form:
        out = payoff_eval(p, s) ** 2
    elif p.kind == "binary":
        _, _, d2 = _d12(model, tau, s, p.strike)
        out = ndtr(d2)
    elif p.kind == "affine":
        ev2 = math.exp((model.sigma ** 2) * tau)
        out = p.c0 ** 2 + 2.0 * p.c0 * p.c1 * s + p.c1 ** 2 * s * s * ev2
    elif p.kind in ("call", "put"):
        v, d1, d2 = _d12(model, tau, s, p.strike)
        d3 = d1 + v
        K = p.strike
        ev2 = math.exp(v * v)
        if p.kind == "call":
            out = s * s * ev2 * ndtr(d3) - 2.0 * K * s * ndtr(d1) + K * K * ndtr(d2)
        else:
            out = K * K * ndtr(-d2) - 2.0 * K * s * ndtr(-d1) + s * s * ev2 * ndtr(-d3)
        out = np.maximum(out, 0.0)
    elif p.kind == "power_holder":
        out = _kinked_converged(p, model, tau, s, "price", 1e-6, 1e-10,
                                square=True)
    else:
        h = _payoff_fn(p)
        h2 = lambda st: h(st) ** 2
        hv, z, w, v = _quad_values(model, tau, s, h2, order)
        out = hv @ w
    return out if np.ndim(s_in) else float(out[0])


def conditional_variance(p: Payoff, model: MarketModel, t: float, s, *,
                         order: int = 201):
    """Var(h(S_T) | S_t = s); exact p(1-p) form for the binary."""
    s_in = s
    s = np.atleast_1d(np.asarray(s, dtype=float))
    tau = _tau(model, t, greek=False)
    if p.kind == "binary" and t < model.T:
        _, _, d2 = _d12(model, tau, s, p.strike)
        pr = ndtr(d2)
        out = pr * ndtr(-d2)
    else:
        m2 = np.atleast_1d(np.asarray(second_moment(p, model, t, s, order=order)))
        m1 = np.atleast_1d(np.asarray(price(p, model, t, s, order=order)))
        out = np.maximum(m2 - m1 * m1, 0.0)
    return out if np.ndim(s_in) else float(out[0])


def kink_feature(p: Payoff, model: MarketModel, t: float) -> Feature | None:
    """Location/width hint of the payoff's kink in log-price at time t.

    Used by downstream quadratures to grade nodes around the region where
    delta or gamma localizes as t approaches maturity; strength 1 for a
    single density factor, callers may square it for squared integrands.
    """
    if p.kind in ("affine", "chaos"):
        return None
    tau = max(model.T - t, _TAU_FLOOR)
    width = model.sigma * math.sqrt(tau)
    return Feature(center=math.log(p.strike), width=width, strength=1.0)


@dataclass(frozen=True)
class PriceSurface:
    """Bundle of a payoff, a model and a quadrature order.

    Convenience facade: ``H``, ``dH`` and ``d2H`` close over the pricing
    functions with a fixed configuration.
    """

    payoff: Payoff
    model: MarketModel
    order: int = 201

    def H(self, t, s):
        return price(self.payoff, self.model, t, s, order=self.order)

    def dH(self, t, s):
        return delta(self.payoff, self.model, t, s, order=self.order)

    def d2H(self, t, s):
        return gamma(self.payoff, self.model, t, s, order=self.order)
