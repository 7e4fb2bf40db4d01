"""Doob transforms, time reversal, and the mixture limit.

The h-transform R K(x,y) h(y)/h(x) is the chain conditioned to survive
forever; the time reversal mu(z) K(z,x) / (theta mu(x)) runs the chain
backwards with respect to a theta-invariant measure.  Boundary weights
are obtained from the h-transform's two-sided hitting problem, and the
limiting conditioned law is the corresponding convex mixture of the two
extremal invariant probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import Window
from .measures import Mixture, c_max
from .spectral import TwoSidedParams, quadratic_roots

__all__ = [
    "TransformedKernel",
    "ReversedKernel",
    "BoundaryWeights",
    "HhatEstimate",
    "h_transform",
    "time_reversal",
    "hitting_split",
    "estimate_hhat",
    "closed_form_hhat",
    "mixture_limit",
]


def _as_log_fn(h):
    """Accept an evaluable with .log_value, or a positive callable."""
    if hasattr(h, "log_value"):
        return h.log_value
    return lambda x: np.log(h(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class TransformedKernel:
    """h-transform of a kernel: rows R K(x,y) h(y)/h(x).

    Stochastic (rows sum to one) exactly when h is rho-harmonic with
    rho = 1/R; the deviation is reported by ``stochastic_residual``.
    """

    base: object
    log_h: object
    R: float

    def rows(self, lo: int, hi: int):
        up, stay, down = self.base.rows(lo, hi)
        lh = np.asarray(self.log_h(np.arange(lo - 1, hi + 2)), dtype=float)
        up = self.R * up * np.exp(lh[2:] - lh[1:-1])
        down = self.R * down * np.exp(lh[:-2] - lh[1:-1])
        stay = self.R * stay
        return up, stay, down

    def row(self, x: int):
        up, stay, down = self.rows(x, x)
        return float(up[0]), float(stay[0]), float(down[0])

    def stochastic_residual(self, window: Window) -> float:
        up, stay, down = self.rows(window.lo, window.hi)
        return float(np.max(np.abs(up + stay + down - 1.0)))


def h_transform(kernel, h, R: float) -> TransformedKernel:
    """Transform ``kernel`` by a positive function h at weight R."""
    if R <= 0.0:
        raise ValueError("need R > 0")
    return TransformedKernel(kernel, _as_log_fn(h), R)


@dataclass(frozen=True)
class ReversedKernel:
    """Time reversal of a kernel with respect to a positive measure.

    Rows are mu(z) K(z,x) / (theta mu(x)); they sum to one exactly when
    mu is theta-invariant.
    """

    base: object
    log_mu: object
    theta: float

    def rows(self, lo: int, hi: int):
        b_up, b_stay, b_down = self.base.rows(lo - 1, hi + 1)
        lm = np.asarray(self.log_mu(np.arange(lo - 1, hi + 2)), dtype=float)
        # reversed up-step at x comes from base down-step out of x+1
        up = b_down[2:] * np.exp(lm[2:] - lm[1:-1]) / self.theta
        down = b_up[:-2] * np.exp(lm[:-2] - lm[1:-1]) / self.theta
        stay = b_stay[1:-1] / self.theta
        return up, stay, down

    def row(self, x: int):
        up, stay, down = self.rows(x, x)
        return float(up[0]), float(stay[0]), float(down[0])

    def stochastic_residual(self, window: Window) -> float:
        up, stay, down = self.rows(window.lo, window.hi)
        return float(np.max(np.abs(up + stay + down - 1.0)))


def time_reversal(kernel, measure, theta: float) -> ReversedKernel:
    """Reverse ``kernel`` with respect to ``measure`` at eigenvalue theta."""
    if theta <= 0.0:
        raise ValueError("need theta > 0")
    return ReversedKernel(kernel, _as_log_fn(measure), theta)


@dataclass(frozen=True)
class BoundaryWeights:
    """Escape weights (w_minus, w_plus) of the conditioned chain."""

    w_minus: float
    w_plus: float
    converged: bool = True
    delta: float = 0.0
    horizon: int = 0

    def __post_init__(self):
        if abs(self.w_minus + self.w_plus - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


def _ruin_w_plus(tk, x: int, M: int) -> float:
    """P_x(hit +M before -M) for a birth-death chain, in log space."""
    up, _, down = tk.rows(-M + 1, M - 1)
    log_ratio = np.log(down) - np.log(up)
    # phi(j) = prod_{k=-M+1..j} down_k/up_k, phi(-M) = 1
    log_phi = np.concatenate([[0.0], np.cumsum(log_ratio)])
    log_phi -= log_phi.max()
    phi = np.exp(log_phi)
    return float(phi[: x + M].sum() / phi.sum())


def hitting_split(
    tk: TransformedKernel,
    x: int,
    M_start: int = 64,
    M_cap: int = 4096,
    tol: float = 1e-9,
    residual_tol: float = 1e-9,
) -> BoundaryWeights:
    """Boundary weights by the gambler's-ruin system with doubling horizon.

    Solves the two-point hitting problem on [-M, M] and doubles M until
    the answer moves by less than ``tol`` (or the cap is reached, in which
    case ``converged`` is False and ``delta`` reports the last change).
    """
    check = Window(-min(M_start, 64), min(M_start, 64))
    resid = tk.stochastic_residual(check)
    if resid > residual_tol:
        raise ValueError(f"transformed kernel not stochastic: residual {resid:g}")
    M = max(M_start, 2 * abs(x) + 2)
    w = _ruin_w_plus(tk, x, M)
    delta = math.inf
    while M < M_cap:
        M *= 2
        w_next = _ruin_w_plus(tk, x, M)
        delta = abs(w_next - w)
        w = w_next
        if delta < tol:
            return BoundaryWeights(1.0 - w, w, True, delta, M)
    return BoundaryWeights(1.0 - w, w, delta < tol, delta, M)


def _target_series(kernel, start: int, target: int, n_max: int):
    """Per-step (log K^n(start,S), K^n(start,target)/K^n(start,S))."""
    lo, hi = start - n_max, start + n_max
    lo, hi = min(lo, target - 1), max(hi, target + 1)
    up, stay, down = kernel.rows(lo, hi)
    v = np.zeros(hi - lo + 1)
    v[start - lo] = 1.0
    logm = np.zeros(n_max + 1)
    val = np.zeros(n_max + 1)
    val[0] = 1.0 if start == target else 0.0
    acc = 0.0
    for n in range(1, n_max + 1):
        w = v * stay
        w[1:] += v[:-1] * up[:-1]
        w[:-1] += v[1:] * down[1:]
        s = float(w.sum())
        v = w / s
        acc += math.log(s)
        logm[n] = acc
        val[n] = v[target - lo]
    return logm, val


@dataclass
class HhatEstimate:
    """Ratio series K^n(x, x0)/K^n(x0, x0) with convergence diagnostics."""

    x0: int
    table: dict[int, float]
    converged: dict[int, bool]
    spreads: dict[int, float]
    series: dict[int, np.ndarray]

    def verdict(self) -> bool:
        return all(self.converged.values())


def _window_cauchy(series: np.ndarray, width: int = 50, rel_tol: float = 1e-3):
    """Max sliding-window spread over the last half, relative to the level."""
    half = series[len(series) // 2 :]
    half = half[np.isfinite(half)]
    if len(half) < width + 1:
        return math.inf, False
    level = abs(float(np.median(half))) or 1.0
    windows = np.lib.stride_tricks.sliding_window_view(half, width)
    spread = float((windows.max(axis=1) - windows.min(axis=1)).max()) / level
    return spread, spread <= rel_tol


def estimate_hhat(
    kernel,
    x0: int,
    sites,
    n_max: int,
    rel_tol: float = 1e-3,
) -> HhatEstimate:
    """Estimate hhat(x)/hhat(x0) from the ratio series K^n(x,x0)/K^n(x0,x0).

    Killing is assumed confined to x0.  Non-convergence (the Kesten case)
    is a verdict per site, decided by a sliding Cauchy window over the
    last half of the series, not an exception.
    """
    logm0, val0 = _target_series(kernel, x0, x0, n_max)
    out: dict[int, float] = {}
    conv: dict[int, bool] = {}
    spreads: dict[int, float] = {}
    series: dict[int, np.ndarray] = {}
    for x in sites:
        if x == x0:
            ratio = np.ones(n_max + 1)
        else:
            logmx, valx = _target_series(kernel, x, x0, n_max)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.exp(logmx - logm0) * valx / val0
            ratio[~np.isfinite(ratio)] = np.nan
        series[x] = ratio
        finite = ratio[np.isfinite(ratio)]
        out[x] = float(finite[-1]) if len(finite) else math.nan
        spread, ok = _window_cauchy(ratio, rel_tol=rel_tol)
        spreads[x] = spread
        conv[x] = ok
    return HhatEstimate(x0, out, conv, spreads, series)


def closed_form_hhat(params: TwoSidedParams, x) -> float | np.ndarray:
    """hhat of the two-sided walk: t0^{-x} for x < 0, (1+c1 x)(q/p)^{x/2}
    for x >= 0, with c1 = sqrt(1 - ab/pq).  Equals mu_plus/gamma pointwise."""
    t0, _ = quadratic_roots(params)
    c1 = c_max(params)
    x = np.asarray(x, dtype=float)
    s = math.sqrt(params.q / params.p)
    out = np.where(x < 0, t0**-x, (1.0 + c1 * np.maximum(x, 0.0)) * s**x)
    return out if out.ndim else float(out)


def mixture_limit(weights: BoundaryWeights, pi_minus, pi_plus) -> Mixture:
    """Convex mixture w_minus pi_minus + w_plus pi_plus (a probability)."""
    return Mixture(weights.w_minus, weights.w_plus, pi_minus, pi_plus)
