"""Random-warp error sweeps, weighted cubic regression, scale estimation.

The estimator pipeline: sweep the warp amplitude, record squared relative
feature errors per realization, fit a weighted cubic through each
realization's curve, and read the signal scale off the inflection point
-a2/(3 a3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .signals import Grid, SampledSignal, l2_norm
from .mra import MraCoefficients, MraSpace, synthesize
from .deform import RandomFieldSpec, deform, draw_random_field
from .scattering import (ScatteringNetwork, LayerModule, extract_features,
                         feature_distance, shannon_bank)


def tent_profile_coefficients(space: MraSpace, half_width: float,
                              center: float | None = None,
                              normalized: bool = True) -> MraCoefficients:
    """Tent of the given half-width written in a degree-1 spline space.

    Knots of the tent must land on the coefficient lattice, so half_width
    has to be a multiple of the space scale. normalized scales the peak to
    half_width^-1/2, otherwise the peak is 1.
    """
    filt = space.filter
    if not (filt.kind == "bspline" and filt.degree == 1):
        raise ValueError("tent profiles need the degree-1 spline space")
    s = space.scale
    ratio = half_width / s
    if abs(ratio - round(ratio)) > 1e-9 or ratio < 1 - 1e-9:
        raise ValueError("half-width must be a positive multiple of the scale")
    if center is None:
        center = 0.5 * space.grid.period
    n0 = center / s
    if abs(n0 - round(n0)) > 1e-9:
        raise ValueError("center must sit on the coefficient lattice")
    n0 = int(round(n0))
    m = space.n_coefficients
    peak = half_width ** -0.5 if normalized else 1.0
    idx = np.arange(m)
    u = (idx - n0 + m // 2) % m - m // 2  # signed lattice distance to center
    knot_values = peak * np.maximum(0.0, 1.0 - np.abs(u) * s / half_width)
    return MraCoefficients(space, np.sqrt(s) * knot_values.astype(complex))


def _support_length(c: MraCoefficients) -> float | None:
    """Physical support of the synthesized signal; None when unbounded."""
    sup = c.space.filter.support
    if sup is None:
        return None
    nz = np.nonzero(np.abs(c.values) > 0)[0]
    if nz.size == 0:
        return 0.0
    span = (nz.max() - nz.min()) * c.space.scale
    return float(span + (sup[1] - sup[0]) * c.space.scale)


def amplitude_grid(a_min: float, a_max: float, points: int,
                   spacing: str = "log", include_zero: bool = True) -> np.ndarray:
    if spacing == "log":
        grid = np.geomspace(a_min, a_max, points)
    elif spacing == "linear":
        grid = np.linspace(a_min, a_max, points)
    else:
        raise ValueError("spacing must be 'log' or 'linear'")
    return np.concatenate([[0.0], grid]) if include_zero else grid


def build_network(config: dict, grid: Grid) -> ScatteringNetwork:
    """Network from {J, Q, depth}: Q sub-bands in layer 1, dyadic below."""
    if "layers" in config:
        from .scattering import network_from_config
        return network_from_config(config, grid)
    depth = int(config.get("depth", 2))
    j = int(config["J"])
    q = int(config["Q"])
    layers = [LayerModule(shannon_bank(j, q, grid))]
    layers += [LayerModule(shannon_bank(j, 1, grid)) for _ in range(depth - 1)]
    return ScatteringNetwork(tuple(layers), depth,
                             float(config.get("eps_path", 1e-6)))


@dataclass(frozen=True, eq=False)
class SweepResult:
    amplitudes: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)  # (n_amplitudes, n_realizations)
    variances: np.ndarray = field(repr=False)
    variance_floor: float
    seed: int
    network_config: dict
    signal_norm: float
    metadata: dict

    @property
    def n_realizations(self) -> int:
        return self.errors.shape[1]

    def means(self) -> np.ndarray:
        return self.errors.mean(axis=1)


def stability_sweep(c: MraCoefficients, a_values, n_real: int,
                    net: ScatteringNetwork, seed: int,
                    variance_floor: float = 1e-12,
                    n_jobs: int = 1) -> SweepResult:
    """Squared relative feature error under iid uniform warps, per (A, draw).

    Streams are keyed by (amplitude index, realization), so the result is
    bit-identical for every n_jobs.
    """
    if n_real < 2:
        raise ValueError("need at least two realizations per amplitude")
    a_values = np.asarray(a_values, dtype=float)
    grid = c.space.grid
    extent = _support_length(c)
    if extent is not None and np.max(a_values) + 0.5 * extent >= 0.5 * grid.period:
        raise ValueError("amplitude would wrap the signal around the torus")
    f = synthesize(c)
    fnorm2 = l2_norm(f) ** 2
    base = extract_features(net, f)

    def cell(amp: float, stream: int) -> float:
        fld = draw_random_field(RandomFieldSpec(amp, seed, stream), grid)
        warped = deform(c, fld)
        return feature_distance(extract_features(net, warped), base) ** 2 / fnorm2

    cells = [(float(amp), i * 1048576 + r)
             for i, amp in enumerate(a_values) for r in range(n_real)]
    if n_jobs == 1:
        flat = [cell(amp, stream) for amp, stream in cells]
    else:
        from joblib import Parallel, delayed
        flat = Parallel(n_jobs=n_jobs)(
            delayed(cell)(amp, stream) for amp, stream in cells)
    errors = np.asarray(flat, dtype=float).reshape(a_values.size, n_real)
    variances = np.maximum(np.var(errors, axis=1, ddof=1), variance_floor)
    return SweepResult(a_values, errors, variances, variance_floor, seed,
                       net.to_config(), math.sqrt(fnorm2),
                       {"n_realizations": n_real,
                        "rng": "philox4x64, stream = amplitude_index * 2^20 + realization"})


def sweep_to_csv(sweep: SweepResult, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("A,realization,e\n")
        for i, amp in enumerate(sweep.amplitudes):
            for r in range(sweep.n_realizations):
                fh.write("%.17g,%d,%.17g\n" % (amp, r, sweep.errors[i, r]))


# ---------------------------------------------------------------------------
# weighted regression and the inflection-point estimator

def inflection_scale(a2: float, a3: float) -> float:
    """Inflection point -a2/(3 a3) of a cubic; the scale read-out."""
    if a3 == 0:
        raise ValueError("cubic coefficient is zero: no inflection point")
    return -a2 / (3.0 * a3)


@dataclass(frozen=True)
class RegressionFit:
    coefficients: tuple
    standard_errors: tuple
    adj_r_squared: float
    s_hat: float | None
    reliable: bool
    degree: int
    n_points: int
    realization: int | None

    def to_dict(self) -> dict:
        return {"coefficients": list(self.coefficients),
                "standard_errors": list(self.standard_errors),
                "adj_r_squared": self.adj_r_squared, "s_hat": self.s_hat,
                "reliable": self.reliable, "degree": self.degree,
                "n_points": self.n_points, "realization": self.realization}


def wls_cubic_fit(sweep: SweepResult, realization: int | None = None,
                  degree: int = 3) -> RegressionFit:
    """Weighted least squares, weights 1/sample-variance per amplitude.

    Fits the mean curve by default, or a single realization's curve; the
    design is column-scaled before the orthogonal solve to keep the normal
    equations well conditioned across the wide amplitude range.
    """
    a = sweep.amplitudes
    uniq = np.unique(a)
    if uniq.size < 8:
        raise ValueError("need at least 8 distinct amplitudes")
    y = sweep.means() if realization is None else sweep.errors[:, realization]
    w = 1.0 / sweep.variances
    p = degree + 1
    design = np.vander(a, p, increasing=True)
    sw = np.sqrt(w)
    xw = design * sw[:, None]
    yw = y * sw
    col = np.linalg.norm(xw, axis=0)
    col[col == 0] = 1.0
    basis = xw / col
    sol, _, rank, _ = np.linalg.lstsq(basis, yw, rcond=None)
    if rank < p:
        raise ValueError("rank-deficient design")
    beta = sol / col
    resid = yw - basis @ sol
    dof = a.size - p
    if dof <= 0:
        raise ValueError("not enough rows for standard errors")
    ssr = float(resid @ resid)
    sigma2 = ssr / dof
    gram_inv = np.linalg.inv(basis.T @ basis)
    cov = sigma2 * (gram_inv / col[:, None]) / col[None, :]
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    ybar = float(np.sum(w * y) / np.sum(w))
    sst = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else 0.0
    adj = 1.0 - (1.0 - r2) * (a.size - 1) / dof
    s_hat, reliable = None, False
    if degree == 3:
        a3, se3 = beta[3], se[3]
        if a3 != 0:
            s_hat = inflection_scale(beta[2], a3)
            reliable = bool(abs(a3) > 2.0 * se3)
    return RegressionFit(tuple(map(float, beta)), tuple(map(float, se)),
                         float(adj), s_hat, reliable, degree, int(a.size),
                         realization)


@dataclass(frozen=True)
class ScaleEstimate:
    mean: float
    standard_error: float
    ci_low: float
    ci_high: float
    t_factor: float
    n_used: int
    n_excluded: int
    estimates: tuple
    seed: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "standard_error": self.standard_error,
                "ci": [self.ci_low, self.ci_high], "t_factor": self.t_factor,
                "n_used": self.n_used, "n_excluded": self.n_excluded,
                "estimates": list(self.estimates), "seed": self.seed}


def scale_estimate_from_sweep(sweep: SweepResult,
                              min_realizations: int = 10,
                              max_excluded_fraction: float = 0.2) -> ScaleEstimate:
    """Per-realization cubic fits aggregated into mean, stderr, and t-CI."""
    n_real = sweep.n_realizations
    if n_real < min_realizations:
        raise ValueError("need at least %d realizations" % min_realizations)
    values = []
    excluded = 0
    for r in range(n_real):
        fit = wls_cubic_fit(sweep, realization=r)
        if fit.reliable and fit.s_hat is not None:
            values.append(fit.s_hat)
        else:
            excluded += 1
    if excluded > max_excluded_fraction * n_real:
        raise RuntimeError("%d of %d fits unreliable: estimate rejected"
                           % (excluded, n_real))
    n = len(values)
    mean = float(np.mean(values))
    se = math.sqrt(float(np.sum((np.asarray(values) - mean) ** 2)) / (n * (n - 1)))
    tf = float(stats.t.ppf(0.975, n - 1))
    return ScaleEstimate(mean, se, mean - tf * se, mean + tf * se, tf,
                         n, excluded, tuple(values), sweep.seed)


def scale_estimate(c: MraCoefficients, config: dict) -> ScaleEstimate:
    """Full pipeline: sweep per config, fit every realization, aggregate.

    config: {"network": {J, Q, depth}, "sweep": {A_min, A_max, points,
    n_real, spacing?}, "seed": int}.
    """
    sweep_cfg = config["sweep"]
    net = build_network(config["network"], c.space.grid)
    a_values = amplitude_grid(float(sweep_cfg["A_min"]), float(sweep_cfg["A_max"]),
                              int(sweep_cfg["points"]),
                              sweep_cfg.get("spacing", "log"))
    sweep = stability_sweep(c, a_values, int(sweep_cfg["n_real"]), net,
                            int(config.get("seed", 0)))
    return scale_estimate_from_sweep(sweep)


def theoretical_envelope(amplitude: float, scale: float) -> float:
    """Moment envelope of the uniform law, both regimes, constants dropped."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    ratio = amplitude / scale
    if ratio <= 1.0:
        return ratio ** 2
    return 1.5 * ratio - 0.5 / ratio


def leave_one_out_spread(sweep: SweepResult) -> dict:
    """Refit the mean curve dropping one amplitude row at a time."""
    baseline = wls_cubic_fit(sweep).s_hat
    changes = []
    for i in range(sweep.amplitudes.size):
        keep = np.arange(sweep.amplitudes.size) != i
        reduced = SweepResult(sweep.amplitudes[keep], sweep.errors[keep],
                              sweep.variances[keep], sweep.variance_floor,
                              sweep.seed, sweep.network_config,
                              sweep.signal_norm, sweep.metadata)
        try:
            s_i = wls_cubic_fit(reduced).s_hat
        except ValueError:
            continue
        if s_i is not None and baseline:
            changes.append(abs(s_i - baseline) / abs(baseline))
    return {"baseline": baseline,
            "max_relative_change": max(changes) if changes else float("nan"),
            "n_refits": len(changes)}


def plot_sweep(sweep: SweepResult, fit: RegressionFit, path: str,
               scale_hint: float | None = None) -> None:
    """SVG of the error cloud, mean curve, cubic fit, and moment envelope."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    a = sweep.amplitudes
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for r in range(sweep.n_realizations):
        ax.plot(a, sweep.errors[:, r], ".", color="0.75", ms=2.5,
                zorder=1, label="realizations" if r == 0 else None)
    means = sweep.means()
    ax.plot(a, means, "o-", color="tab:blue", ms=3.5, lw=1.0,
            zorder=3, label="mean error")
    dense = np.linspace(a.min(), a.max(), 400)
    curve = sum(co * dense ** k for k, co in enumerate(fit.coefficients))
    ax.plot(dense, curve, color="tab:red", lw=1.5, zorder=4, label="cubic fit")
    s_ref = scale_hint if scale_hint is not None else fit.s_hat
    if s_ref:
        env = np.array([theoretical_envelope(x, s_ref) for x in dense])
        mask = env > 0
        anchor = np.array([theoretical_envelope(x, s_ref) for x in a])
        pos = anchor > 0
        k = (np.sum(anchor[pos] * means[pos]) / np.sum(anchor[pos] ** 2)
             if pos.any() else 1.0)
        ax.plot(dense[mask], k * env[mask], "--", color="tab:green", lw=1.2,
                zorder=2, label="moment envelope")
    if fit.s_hat:
        ax.axvline(fit.s_hat, color="tab:red", ls=":", lw=1.0,
                   label="inflection %.2f" % fit.s_hat)
    ax.set_xlabel("deformation amplitude A")
    ax.set_ylabel("squared relative feature error")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
