"""Power iteration of a kernel: Yaglom distributions and ratio series.

The central quantity is the conditioned law K^n(x0,.)/K^n(x0,S) together
with the survival-factor series s_n = K^{n+1}(x0,S)/K^n(x0,S) and, for a
designated finite set of sites, the pointwise ratio series
K^{n+1}(x0,y)/K^n(x0,y).  A fraction-exact path enumeration serves as the
ground-truth oracle at small n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chain import DegenerateKernelError, MassState, Window

__all__ = [
    "YaglomTrace",
    "evolve_trace",
    "taboo_first_return",
    "brute_force_distribution",
    "total_variation",
    "mass_outside",
]


@dataclass
class YaglomTrace:
    """Time series produced by iterating a kernel from a point mass.

    ``survival_factors[k]`` is K^{k+1}(x0,S)/K^k(x0,S).  For each tracked
    site y, ``tracked_ratios[y][k]`` is K^{k+1}(x0,y)/K^k(x0,y), with NaN
    while y is unreachable (parity or range).  ``distribution`` is the
    conditioned law at step n; ``snapshots`` holds optional intermediate
    conditioned laws keyed by step.
    """

    start: int
    steps: int
    survival_factors: np.ndarray
    distribution: MassState
    tracked_ratios: dict[int, np.ndarray] = field(default_factory=dict)
    tracked_values: dict[int, np.ndarray] = field(default_factory=dict)
    snapshots: dict[int, MassState] = field(default_factory=dict)


def evolve_trace(
    kernel,
    x0: int,
    n: int,
    tracked: tuple[int, ...] = (),
    clip: float = 0.0,
    snapshot_at: tuple[int, ...] = (),
    max_halfwidth: int | None = None,
) -> YaglomTrace:
    """Iterate ``kernel`` for ``n`` steps from a point mass at ``x0``.

    Parameters
    ----------
    kernel
        Anything with ``rows(lo, hi) -> (up, stay, down)`` arrays.
    tracked
        Sites whose pointwise ratio series are recorded.
    clip
        Optional relative tail threshold; discarded mass is accumulated in
        the returned distribution's ``clipped`` field.
    snapshot_at
        Steps at which to store intermediate conditioned distributions.
    max_halfwidth
        Optional cap on the window half-width; mass stepping beyond the
        capped window is discarded into the ``clipped`` accumulator.  The
        default grows the window exactly (one site per side per step).

    Raises
    ------
    DegenerateKernelError
        If the chain goes extinct (total mass reaches zero).
    """
    if n < 1:
        raise ValueError("need at least one step")
    half = n if max_halfwidth is None else min(n, int(max_halfwidth))
    lo, hi = x0 - half, x0 + half
    up, stay, down = kernel.rows(lo, hi)
    v = np.zeros(hi - lo + 1)
    v[x0 - lo] = 1.0
    log_mass = 0.0
    clipped = 0.0
    surv = np.empty(n)
    snaps: dict[int, MassState] = {}
    want = set(snapshot_at)
    tracked = tuple(tracked)
    tracked_vals = {y: np.full(n + 1, np.nan) for y in tracked}
    for y in tracked:
        if not lo <= y <= hi:
            raise ValueError(f"tracked site {y} outside the capped window")
        tracked_vals[y][0] = 1.0 if y == x0 else 0.0
    for k in range(n):
        w = v * stay
        w[1:] += v[:-1] * up[:-1]
        w[:-1] += v[1:] * down[1:]
        # up-flow out of hi and down-flow out of lo fall off the window
        edge = v[0] * down[0] + v[-1] * up[-1]
        s = float(w.sum())
        if s <= 0.0:
            raise DegenerateKernelError(f"total extinction at step {k + 1}")
        if edge > 0.0:
            clipped += edge / s
        if clip > 0.0:
            small = w < clip * s
            lost = float(w[small].sum())
            if lost > 0.0:
                w[small] = 0.0
                clipped += lost / s
                s = float(w.sum())
        v = w / s
        surv[k] = s
        log_mass += math.log(s)
        for y in tracked:
            tracked_vals[y][k + 1] = v[y - lo]
        if (k + 1) in want:
            snaps[k + 1] = MassState(Window(lo, hi), v.copy(), log_mass, clipped)

    dist = MassState(Window(lo, hi), v, log_mass, clipped)
    ratios: dict[int, np.ndarray] = {}
    for y in tracked:
        vals = tracked_vals[y]
        r = np.full(n, np.nan)
        prev = vals[:-1]
        cur = vals[1:]
        ok = (prev > 0) & np.isfinite(prev) & np.isfinite(cur)
        # K^{k+1}(x0,y)/K^k(x0,y) = s_k * v_{k+1}(y) / v_k(y)
        r[ok] = surv[ok] * cur[ok] / prev[ok]
        ratios[y] = r
    return YaglomTrace(x0, n, surv, dist, ratios, tracked_vals, snaps)


def taboo_first_return(kernel, x0: int, n_max: int) -> np.ndarray:
    """First-return probabilities f_k = P_{x0}(return to x0 first at step k).

    Taboo convention: a path counts for f_k when it sits at x0 at step k
    having avoided x0 at steps 1..k-1 (so f_1 is the stay rate at x0 and
    G = 1/(1-F) holds for the associated transforms).
    """
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    lo, hi = x0 - n_max, x0 + n_max
    up, stay, down = kernel.rows(lo, hi)
    i0 = x0 - lo
    v = np.zeros(hi - lo + 1)
    v[i0] = 1.0
    f = np.empty(n_max)
    for k in range(n_max):
        w = v * stay
        w[1:] += v[:-1] * up[:-1]
        w[:-1] += v[1:] * down[1:]
        f[k] = w[i0]
        w[i0] = 0.0
        v = w
    return f


def brute_force_distribution(
    kernel, x0: int, n: int
) -> tuple[dict[int, Fraction], Fraction]:
    """Exact K^n(x0,.) and K^n(x0,S) by dynamic programming in Fractions.

    Kernel rates are taken at their exact binary-float values, so the
    result is the exact measure the floating-point iteration approximates.
    Intended as the small-n oracle; cost grows with the window, so n is
    capped at 14.
    """
    if n < 0 or n > 14:
        raise ValueError("oracle supports 0 <= n <= 14")
    dist: dict[int, Fraction] = {x0: Fraction(1)}
    for _ in range(n):
        nxt: dict[int, Fraction] = {}
        for x, m in dist.items():
            p, r, q = kernel.row(x)
            for target, rate in ((x + 1, p), (x, r), (x - 1, q)):
                if rate:
                    nxt[target] = nxt.get(target, Fraction(0)) + m * Fraction(rate)
        dist = nxt
    survival = sum(dist.values(), Fraction(0))
    return dist, survival


def total_variation(a: MassState, b: MassState) -> float:
    """TV distance between two conditioned laws, aligning their windows."""
    lo = min(a.window.lo, b.window.lo)
    hi = max(a.window.hi, b.window.hi)
    va = np.zeros(hi - lo + 1)
    vb = np.zeros(hi - lo + 1)
    va[a.window.lo - lo : a.window.hi - lo + 1] = a.values
    vb[b.window.lo - lo : b.window.hi - lo + 1] = b.values
    return 0.5 * float(np.abs(va - vb).sum())


def mass_outside(state: MassState, radius: int) -> float:
    """Mass of the conditioned law outside [-radius, radius]."""
    sites = state.window.sites()
    return float(state.values[np.abs(sites) > radius].sum())
