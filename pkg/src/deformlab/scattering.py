"""Sharp-band filter banks and the layered modulus feature extractor.

Banks are built from frequency-bin indicators, so the frame function is
exactly 1 on the tiled range, band projections are unitary on their bands,
and every energy identity used by the stability checks holds to rounding.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .signals import Grid, SampledSignal, convolve, l2_norm


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Indicator band-pass atoms tiling (low-pass edge, Nyquist] on |omega|.

    band_masks has one row per atom; together with low_mask the rows
    partition the frequency bins, so sum of all masks is the all-ones
    vector (tight frame, bounds A = B = 1).
    """

    grid: Grid
    coarsest_octave: int
    bands_per_octave: int
    band_masks: np.ndarray = field(repr=False)
    low_mask: np.ndarray = field(repr=False)
    band_edges: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "band_masks", _freeze(self.band_masks))
        object.__setattr__(self, "low_mask", _freeze(self.low_mask))
        object.__setattr__(self, "band_edges", _freeze(self.band_edges))

    @property
    def n_atoms(self) -> int:
        return self.band_masks.shape[0]

    def frame_function(self) -> np.ndarray:
        """Sum of squared transfer functions at every frequency bin."""
        return self.low_mask ** 2 + np.sum(self.band_masks ** 2, axis=0)


def shannon_bank(coarsest_octave: int, bands_per_octave: int,
                 grid: Grid) -> FilterBank:
    """Dyadic indicator bank, `bands_per_octave` sub-bands per octave.

    The low-pass holds |omega| <= nyquist * 2^-coarsest_octave; sub-band
    edges follow the geometric ladder edge * 2^(t/Q) up to the Nyquist
    frequency. Requested sub-bands that contain no frequency bin are
    dropped (at coarse octaves the ladder outruns the bin resolution),
    which keeps the surviving masks an exact partition.
    """
    if bands_per_octave < 1:
        raise ValueError("need at least one band per octave")
    if coarsest_octave < 1:
        raise ValueError("octave count must be positive")
    if 2 ** (coarsest_octave + 1) > grid.n_samples:
        raise ValueError("low-pass band is thinner than one frequency bin")
    edge0 = grid.nyquist * 2.0 ** (-coarsest_octave)
    n_steps = coarsest_octave * bands_per_octave
    # t multiples of Q give exact powers of two, so the top edge is Nyquist
    edges = edge0 * np.exp2(np.arange(n_steps + 1) / bands_per_octave)
    absw = np.abs(grid.omega)
    low = (absw <= edge0).astype(float)
    masks, kept = [], []
    for t in range(n_steps):
        m = (absw > edges[t]) & (absw <= edges[t + 1])
        if m.any():
            masks.append(m.astype(float))
            kept.append((edges[t], edges[t + 1]))
    if not masks:
        raise ValueError("no band-pass atom contains a frequency bin")
    return FilterBank(grid, coarsest_octave, bands_per_octave,
                      np.array(masks), low, np.array(kept))


@dataclass(frozen=True)
class LayerModule:
    """One network layer: a bank, a modulus nonlinearity, identity pooling."""

    bank: FilterBank
    nonlinearity: str = "modulus"
    lipschitz_bound: float = 1.0
    pooling_factor: float = 1.0
    pooling_op: str = "identity"
    pooling_bound: float = 1.0

    def __post_init__(self) -> None:
        if self.nonlinearity != "modulus":
            raise ValueError("only the modulus nonlinearity is supported")
        if self.pooling_op != "identity" or self.pooling_factor != 1.0:
            raise ValueError("only identity pooling is supported")

    @property
    def admissible(self) -> bool:
        b = float(np.max(self.bank.frame_function()))
        return max(b, b * self.lipschitz_bound ** 2 * self.pooling_bound ** 2) <= 1.0 + 1e-12


@dataclass(frozen=True)
class ScatteringNetwork:
    layers: tuple[LayerModule, ...]
    max_depth: int
    eps_path: float = 1e-6

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("network needs at least one layer")
        if not (0 <= self.max_depth <= len(self.layers)):
            raise ValueError("depth must lie in [0, number of layers]")
        if self.eps_path < 0:
            raise ValueError("pruning threshold must be nonnegative")
        g = self.layers[0].bank.grid
        for layer in self.layers:
            if layer.bank.grid != g:
                raise ValueError("all banks must share one grid")
            if not layer.admissible:
                raise ValueError("layer violates the admissibility bound")

    @property
    def grid(self) -> Grid:
        return self.layers[0].bank.grid

    def smoothing_mask(self, depth: int) -> np.ndarray:
        """Low-pass emitting the features of depth-`depth` nodes.

        Nodes below the last bank reuse its low-pass; output energy can
        only shrink, so the non-expansive bound survives.
        """
        return self.layers[min(depth, len(self.layers) - 1)].bank.low_mask

    def to_config(self) -> dict:
        return {"layers": [{"J": l.bank.coarsest_octave, "Q": l.bank.bands_per_octave}
                           for l in self.layers],
                "max_depth": self.max_depth, "eps_path": self.eps_path}


def network_from_config(config: Mapping, grid: Grid) -> ScatteringNetwork:
    layers = tuple(LayerModule(shannon_bank(int(row["J"]), int(row["Q"]), grid))
                   for row in config["layers"])
    return ScatteringNetwork(layers, int(config["max_depth"]),
                             float(config.get("eps_path", 1e-6)))


def network_config_roundtrip(net: ScatteringNetwork) -> ScatteringNetwork:
    return network_from_config(json.loads(json.dumps(net.to_config())), net.grid)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Path-indexed smoothed signals with the l2-over-paths norm."""

    grid: Grid
    entries: dict[tuple[int, ...], SampledSignal]
    eps_path: float

    def norm(self) -> float:
        return float(np.sqrt(sum(l2_norm(s) ** 2 for s in self.entries.values())))

    def paths(self) -> list[tuple[int, ...]]:
        return sorted(self.entries, key=lambda p: (len(p), p))

    def __add__(self, other: "FeatureVector") -> "FeatureVector":
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        merged = {}
        for p in set(self.entries) | set(other.entries):
            a = self.entries.get(p)
            b = other.entries.get(p)
            if a is None:
                merged[p] = b
            elif b is None:
                merged[p] = a
            else:
                merged[p] = SampledSignal(self.grid, a.samples + b.samples)
        return FeatureVector(self.grid, merged, max(self.eps_path, other.eps_path))


def _as_signal(f, net: ScatteringNetwork) -> SampledSignal:
    if isinstance(f, SampledSignal):
        if f.grid != net.grid:
            raise ValueError("signal grid does not match network grid")
        return f
    from .mra import MraCoefficients, synthesize
    if isinstance(f, MraCoefficients):
        return _as_signal(synthesize(f), net)
    raise TypeError("expected a SampledSignal or MraCoefficients")


def propagate(net: ScatteringNetwork, f, path: tuple[int, ...]) -> SampledSignal:
    """Iterated band-filter-then-modulus along one path; empty path is f."""
    sig = _as_signal(f, net)
    if len(path) > len(net.layers):
        raise ValueError("path longer than the layer stack")
    vals = sig.samples
    for depth, atom in enumerate(path):
        bank = net.layers[depth].bank
        if not (0 <= atom < bank.n_atoms):
            raise ValueError(f"atom {atom} out of range at depth {depth}")
        vals = np.abs(np.fft.ifft(np.fft.fft(vals) * bank.band_masks[atom]))
    return SampledSignal(sig.grid, vals)


def extract_features(net: ScatteringNetwork, f, max_depth: int | None = None,
                     eps_path: float | None = None) -> FeatureVector:
    """Breadth-first propagation emitting a smoothed output at every node.

    A child whose energy falls below eps_path times the input energy is
    dropped together with its subtree; the root always survives, so the
    path set stays downward-closed.
    """
    sig = _as_signal(f, net)
    depth = net.max_depth if max_depth is None else int(max_depth)
    if not (0 <= depth <= len(net.layers)):
        raise ValueError("depth must lie in [0, number of layers]")
    eps = net.eps_path if eps_path is None else float(eps_path)
    if eps < 0:
        raise ValueError("pruning threshold must be nonnegative")
    grid = sig.grid
    n = grid.n_samples
    threshold = eps * l2_norm(sig) ** 2
    entries: dict[tuple[int, ...], SampledSignal] = {}

    paths = [()]
    spectra = np.fft.fft(sig.samples[None, :])
    for level in range(depth + 1):
        low = net.smoothing_mask(level)
        smoothed = np.fft.ifft(spectra * low)
        for p, row in zip(paths, smoothed):
            entries[p] = SampledSignal(grid, row)
        if level == depth or not paths:
            break
        bank = net.layers[level].bank
        # band energies straight from the spectra: cheap pre-prune
        energies = (grid.spacing / n) * (np.abs(spectra) ** 2 @ bank.band_masks.T)
        keep = np.argwhere(energies >= threshold)
        if keep.size == 0:
            break
        child_spectra = spectra[keep[:, 0]] * bank.band_masks[keep[:, 1]]
        moduli = np.abs(np.fft.ifft(child_spectra))
        paths = [paths[i] + (int(j),) for i, j in keep]
        spectra = np.fft.fft(moduli)
    return FeatureVector(grid, entries, eps)


def feature_distance(a: FeatureVector, b: FeatureVector) -> float:
    """l2-over-paths distance; a path missing on one side counts as zero."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    total = 0.0
    for p in set(a.entries) | set(b.entries):
        sa = a.entries.get(p)
        sb = b.entries.get(p)
        if sa is None:
            total += l2_norm(sb) ** 2
        elif sb is None:
            total += l2_norm(sa) ** 2
        else:
            total += float(a.grid.spacing * np.sum(np.abs(sa.samples - sb.samples) ** 2))
    return float(np.sqrt(total))


def features_to_csv(fv: FeatureVector, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("path,l2_norm\n")
        for p in fv.paths():
            fh.write("%s,%.17g\n" % ("/".join(map(str, p)), l2_norm(fv.entries[p])))


# ---------------------------------------------------------------------------
# contract checks

def check_translation_covariance(net: ScatteringNetwork, f,
                                 shift_samples: int) -> float:
    """Worst relative gap between shift-then-extract and extract-then-shift."""
    if shift_samples != int(shift_samples):
        raise ValueError("shift must be an integer number of samples")
    sig = _as_signal(f, net)
    shifted = SampledSignal(sig.grid, np.roll(sig.samples, int(shift_samples)))
    ref = extract_features(net, sig, eps_path=0.0)
    moved = extract_features(net, shifted, eps_path=0.0)
    scale = l2_norm(sig)
    worst = 0.0
    for level in range(net.max_depth + 1):
        gap2 = 0.0
        for p, s in ref.entries.items():
            if len(p) != level:
                continue
            rolled = np.roll(s.samples, int(shift_samples))
            gap2 += float(sig.grid.spacing
                          * np.sum(np.abs(moved.entries[p].samples - rolled) ** 2))
        worst = max(worst, np.sqrt(gap2) / scale)
    return worst


def estimate_lipschitz(net: ScatteringNetwork, pair_count: int,
                       rng: np.random.Generator) -> float:
    """Empirical sup of feature distance over signal distance, random pairs."""
    from .signals import random_signal

    worst = 0.0
    for _ in range(pair_count):
        f = random_signal(net.grid, rng)
        h = random_signal(net.grid, rng)
        denom = l2_norm(SampledSignal(net.grid, f.samples - h.samples))
        if denom == 0.0:
            continue
        d = feature_distance(extract_features(net, f, eps_path=0.0),
                             extract_features(net, h, eps_path=0.0))
        worst = max(worst, d / denom)
    return worst


def root_feature_limit(c, fld, mu_values) -> dict:
    """Deformation error seen through ever-narrower triangular smoothing.

    e(mu) = ||(Wf - f) * k_mu|| with k_mu >= 0 the unit-mass triangle of
    half-width mu; as mu shrinks to one grid step the kernel becomes the
    discrete delta and e(mu) reaches ||Wf - f|| exactly.
    """
    from .deform import deform
    from .mra import synthesize

    f = synthesize(c)
    grid = f.grid
    err = SampledSignal(grid, deform(c, fld).samples - f.samples)
    limit = l2_norm(err)
    rows = []
    previous = None
    violations = 0
    for mu in mu_values:
        mu = float(mu)
        if mu < grid.spacing * (1 - 1e-9):
            raise ValueError("kernel narrower than one grid step")
        u = grid.wrapped_offset(grid.x, 0.0)
        kernel = np.maximum(0.0, 1.0 - np.abs(u) / mu) / mu
        kernel /= grid.spacing * kernel.sum()
        value = l2_norm(convolve(err, SampledSignal(grid, kernel)))
        ratio = value / limit if limit > 0 else 0.0
        if previous is not None and value < previous - 1e-3 * max(limit, 1.0):
            violations += 1
        previous = value
        rows.append({"mu": mu, "value": value, "ratio": ratio})
    return {"limit": limit, "rows": rows, "monotone_violations": violations}
