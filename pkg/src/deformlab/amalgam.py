"""Mixed-norm window norms on the periodic grid.

The (p, q, r) norm takes an inner L^p norm over the sliding closed window
{y : |y| <= r} and an outer weighted l^q norm over all window centers. Both
exponents may be math.inf. The p = inf inner norm is a sliding-window maximum
computed in O(N) with a monotone queue; finite p uses prefix sums.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .signals import Grid, SampledSignal


@dataclass(frozen=True)
class AmalgamParams:
    """Exponent pair and window radius for a mixed window norm."""

    p: float
    q: float
    radius: float

    def __post_init__(self) -> None:
        for name, value in (("p", self.p), ("q", self.q)):
            if not (value >= 1.0):
                raise ValueError(f"exponent {name} must satisfy {name} >= 1")
            if math.isnan(value):
                raise ValueError(f"exponent {name} must not be NaN")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("window radius must be positive and finite")


def _window_half_width(grid: Grid, radius: float) -> int:
    if radius < grid.spacing * (1 - 1e-12):
        raise ValueError("window radius must be at least one grid spacing")
    # closed window {|y| <= r}; tiny slack absorbs float noise in r/spacing
    return int(math.floor(radius / grid.spacing + 1e-9))


def sliding_max(values: np.ndarray, half_width: int) -> np.ndarray:
    """Periodic sliding maximum over windows of 2*half_width+1 samples.

    Monotone double-ended queue, one push and at most one pop per element.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    m = int(half_width)
    if m < 0:
        raise ValueError("half width must be nonnegative")
    if 2 * m + 1 >= n:
        return np.full(n, float(values.max()))
    ext = np.concatenate([values, values[: 2 * m]])
    out = np.empty(n, dtype=float)
    dq: deque[int] = deque()
    for j in range(n + 2 * m):
        v = ext[j]
        while dq and ext[dq[-1]] <= v:
            dq.pop()
        dq.append(j)
        start = j - 2 * m
        if dq[0] < start:
            dq.popleft()
        if start >= 0:
            out[(start + m) % n] = ext[dq[0]]
    return out


def window_sup(f: SampledSignal, radius: float) -> SampledSignal:
    """Sliding supremum of |f| over the closed window of the given radius."""
    m = _window_half_width(f.grid, radius)
    return SampledSignal(f.grid, sliding_max(np.abs(f.samples), m))


def _window_power_sums(values: np.ndarray, half_width: int) -> np.ndarray:
    n = values.shape[0]
    m = int(half_width)
    if 2 * m + 1 >= n:
        return np.full(n, values.sum())
    ext = np.concatenate([values[-m:], values, values[:m]])
    cs = np.concatenate([[0.0], np.cumsum(ext)])
    return cs[2 * m + 1:] - cs[: n]


def amalgam_norm(f: SampledSignal, params: AmalgamParams) -> float:
    """Mixed (p, q) norm with sliding window radius params.radius."""
    grid = f.grid
    m = _window_half_width(grid, params.radius)
    absf = np.abs(f.samples)
    if math.isinf(params.p):
        inner = sliding_max(absf, m)
    else:
        sums = _window_power_sums(absf ** params.p, m)
        inner = (grid.spacing * sums) ** (1.0 / params.p)
    if math.isinf(params.q):
        return float(inner.max())
    return float((grid.spacing * np.sum(inner ** params.q)) ** (1.0 / params.q))


def amalgam_norm_discrete(f: SampledSignal, p: float, q: float) -> float:
    """Unit-cell variant: L^p over cells [k, k+1), plain l^q across cells."""
    grid = f.grid
    per_cell = 1.0 / grid.spacing
    if abs(per_cell - round(per_cell)) > 1e-9:
        raise ValueError("unit cells need 1/spacing to be an integer")
    per_cell = int(round(per_cell))
    n_cells = grid.n_samples // per_cell
    if n_cells * per_cell != grid.n_samples:
        raise ValueError("period must be an integer number of unit cells")
    cells = np.abs(f.samples).reshape(n_cells, per_cell)
    if math.isinf(p):
        inner = cells.max(axis=1)
    else:
        inner = (grid.spacing * np.sum(cells ** p, axis=1)) ** (1.0 / p)
    if math.isinf(q):
        return float(inner.max())
    return float(np.sum(inner ** q) ** (1.0 / q))


def dilate(f: SampledSignal, factor: float) -> SampledSignal:
    """Dilation (D_a f)(x) = f(a x) as exact re-striding onto a new grid.

    The samples are unchanged; only the grid metadata moves, since
    f(a * j * (spacing/a)) = f(j * spacing).
    """
    if not (factor > 0 and math.isfinite(factor)):
        raise ValueError("dilation factor must be positive and finite")
    return SampledSignal(Grid(f.grid.n_samples, f.grid.spacing / factor), f.samples)


def check_rescaling(f: SampledSignal, p: float, q: float, radius: float) -> dict:
    """Relative gap in ||f||_{p,q,r} = r^(1/p + 1/q) ||D_r f||_{p,q,1}."""
    grid = f.grid
    ratio = radius / grid.spacing
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError("radius/spacing must be an integer for exact re-striding")
    lhs = amalgam_norm(f, AmalgamParams(p, q, radius))
    exponent = (0.0 if math.isinf(p) else 1.0 / p) + (0.0 if math.isinf(q) else 1.0 / q)
    rhs = radius ** exponent * amalgam_norm(dilate(f, radius), AmalgamParams(p, q, 1.0))
    gap = abs(lhs - rhs) / lhs if lhs > 0 else abs(lhs - rhs)
    return {"lhs": lhs, "rhs": rhs, "relative_gap": gap}


def check_embedding_const(signals: list[SampledSignal], p1: float, p2: float,
                          q: float, radius: float) -> dict:
    """Fitted constant in ||f||_{p1,q,r} <= C r^(1/p1 - 1/p2) ||f||_{p2,q,r}.

    Requires p1 <= p2 (the window embedding direction).
    """
    if p1 > p2:
        raise ValueError("embedding requires p1 <= p2")
    inv1 = 0.0 if math.isinf(p1) else 1.0 / p1
    inv2 = 0.0 if math.isinf(p2) else 1.0 / p2
    scale = radius ** (inv1 - inv2)
    ratios = []
    for f in signals:
        rhs = amalgam_norm(f, AmalgamParams(p2, q, radius))
        if rhs == 0:
            continue
        lhs = amalgam_norm(f, AmalgamParams(p1, q, radius))
        ratios.append(lhs / (scale * rhs))
    if not ratios:
        raise ValueError("all probe signals were zero")
    return {"fitted_constant": float(max(ratios)), "n_signals": len(ratios),
            "skipped": len(signals) - len(ratios)}


def _young_ok(a: float, b: float, c: float) -> bool:
    inv = lambda t: 0.0 if math.isinf(t) else 1.0 / t
    return abs(inv(a) + inv(b) - 1.0 - inv(c)) < 1e-12


def check_convolution_dilation(pairs: list[tuple[SampledSignal, SampledSignal]],
                               p: float, q: float,
                               p1: float, q1: float, p2: float, q2: float,
                               radius: float,
                               dilation_factors: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0),
                               ) -> dict:
    """Empirical constants for the convolution and dilation inequalities.

    Convolution: ||f*g||_{p,q,r} <= C r^-1 ||f||_{p1,q1,r} ||g||_{p2,q2,r}
    under the Young relations on both exponent triples. Dilation:
    ||D_a f||_{p,q,r} <= C a^-max(1/p,1/q) (a<=1) or a^-min(1/p,1/q) (a>=1).
    """
    from .signals import convolve

    if not (_young_ok(p1, p2, p) and _young_ok(q1, q2, q)):
        raise ValueError("exponents do not satisfy the Young relations")
    conv_ratios = []
    for f, g in pairs:
        nf = amalgam_norm(f, AmalgamParams(p1, q1, radius))
        ng = amalgam_norm(g, AmalgamParams(p2, q2, radius))
        if nf == 0 or ng == 0:
            continue
        nc = amalgam_norm(convolve(f, g), AmalgamParams(p, q, radius))
        conv_ratios.append(nc * radius / (nf * ng))
    inv = lambda t: 0.0 if math.isinf(t) else 1.0 / t
    hi, lo = max(inv(p), inv(q)), min(inv(p), inv(q))
    dil_ratios = {}
    for f, _ in pairs:
        base = amalgam_norm(f, AmalgamParams(p, q, radius))
        if base == 0:
            continue
        for a in dilation_factors:
            envelope = a ** (-hi) if a <= 1 else a ** (-lo)
            # same physical window radius on the dilated signal's grid
            value = amalgam_norm(dilate(f, a), AmalgamParams(p, q, radius))
            dil_ratios.setdefault(a, []).append(value / (envelope * base))
    return {
        "convolution_constant": float(max(conv_ratios)),
        "dilation_constants": {a: float(max(v)) for a, v in sorted(dil_ratios.items())},
    }
