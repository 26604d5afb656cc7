"""Shift-invariant spaces on the torus built from a generator filter.

A space is spanned by the periodized, scaled integer translates
phi_{s,n}(x) = s^{-1/2} phi((x - n s)/s). Three generators are provided:
the unit box, cardinal B-splines of degree n >= 1, and the Shannon sinc.
Projection and synthesis are exact discrete linear algebra in frequency
cosets; evaluation between grid points uses the closed-form generator, so
warping a signal in one of these spaces samples the underlying continuous
function exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import binom, polygamma

from .signals import Grid, SampledSignal, l2_norm, spectrum


# ---------------------------------------------------------------------------
# generators

def _bspline_symmetric(degree: int, t: np.ndarray) -> np.ndarray:
    """Centered cardinal B-spline of the given degree, support width degree+1."""
    t = np.asarray(t, dtype=float)
    if degree == 0:
        return ((t >= -0.5) & (t < 0.5)).astype(float)
    acc = np.zeros_like(t)
    half = 0.5 * (degree + 1)
    for k in range(degree + 2):
        acc += (-1.0) ** k * binom(degree + 1, k) * np.maximum(t + half - k, 0.0) ** degree
    return acc / math.factorial(degree)


@dataclass(frozen=True)
class MraFilter:
    """Generator with closed-form spatial and spectral evaluators."""

    kind: str
    degree: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("box", "bspline", "shannon"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "bspline" and self.degree < 1:
            raise ValueError("bspline degree must be >= 1")

    # spline center offset: even degrees sit at 1/2 so the transform phase
    # is exp(-i w/2), odd degrees are symmetric about the origin
    @property
    def _shift(self) -> float:
        if self.kind == "bspline" and self.degree % 2 == 0:
            return 0.5
        return 0.0

    @property
    def support(self) -> tuple[float, float] | None:
        """Closed support interval, or None when not compact."""
        if self.kind == "box":
            return (0.0, 1.0)
        if self.kind == "bspline":
            half = 0.5 * (self.degree + 1)
            return (-half + self._shift, half + self._shift)
        return None

    @property
    def has_derivative(self) -> bool:
        return self.kind != "box"

    def phi(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            return ((x >= 0.0) & (x < 1.0)).astype(float)
        if self.kind == "bspline":
            return _bspline_symmetric(self.degree, x - self._shift)
        return np.sinc(x)

    def phi_hat(self, omega: np.ndarray) -> np.ndarray:
        """Transform with the convention integral phi(x) exp(-i w x) dx."""
        omega = np.asarray(omega, dtype=float)
        core = np.sinc(omega / (2.0 * np.pi))
        if self.kind == "box":
            return np.exp(-0.5j * omega) * core
        if self.kind == "bspline":
            phase = np.exp(-1j * omega * self._shift)
            return phase * core ** (self.degree + 1)
        # half-open band so the 2 pi shifts tile exactly; the negative
        # endpoint is kept because the grid stores Nyquist as -pi
        return ((omega >= -np.pi) & (omega < np.pi)).astype(complex)

    def phi_prime(self, x: np.ndarray) -> np.ndarray:
        if not self.has_derivative:
            raise ValueError(f"{self.kind} generator has no usable derivative")
        x = np.asarray(x, dtype=float)
        if self.kind == "bspline":
            t = x - self._shift
            return _bspline_symmetric(self.degree - 1, t + 0.5) - \
                _bspline_symmetric(self.degree - 1, t - 0.5)
        out = np.zeros_like(x)
        nz = x != 0
        xn = x[nz]
        out[nz] = (np.cos(np.pi * xn) - np.sinc(xn)) / xn
        return out

    @property
    def label(self) -> str:
        return f"bspline{self.degree}" if self.kind == "bspline" else self.kind


def box_filter() -> MraFilter:
    return MraFilter("box")


def bspline_filter(degree: int) -> MraFilter:
    return MraFilter("bspline", degree)


def shannon_filter() -> MraFilter:
    return MraFilter("shannon")


def filter_by_name(name: str) -> MraFilter:
    name = name.strip().lower()
    if name == "box":
        return box_filter()
    if name == "shannon":
        return shannon_filter()
    if name.startswith("bspline"):
        return bspline_filter(int(name[len("bspline"):]))
    raise ValueError(f"unknown filter name {name!r}")


# ---------------------------------------------------------------------------
# lattice sums

def _power_tail(exponent: int, k_max: int, offsets: np.ndarray) -> np.ndarray:
    """Sum over |k| > k_max of |offset - 2 pi k|^-exponent, exactly.

    Uses polygamma: sum_{k>=0} (a+k)^-m = psi^(m-1)(a) / (m-1)! for even m.
    """
    a_plus = k_max + 1.0 - offsets / (2.0 * np.pi)
    a_minus = k_max + 1.0 + offsets / (2.0 * np.pi)
    m = exponent
    fact = math.factorial(m - 1)
    s = polygamma(m - 1, a_plus) + polygamma(m - 1, a_minus)
    return s / fact / (2.0 * np.pi) ** m


def periodization(filt: MraFilter, omega: np.ndarray, k_max: int = 64) -> np.ndarray:
    """sum_k |phi_hat(omega - 2 pi k)|^2 with an exact analytic tail."""
    omega = np.asarray(omega, dtype=float)
    if filt.kind == "shannon":
        total = np.zeros_like(omega)
        for k in range(-2, 3):
            total += np.abs(filt.phi_hat(omega - 2.0 * np.pi * k)) ** 2
        return total
    p = 1 if filt.kind == "box" else filt.degree + 1
    ks = np.arange(-k_max, k_max + 1)
    shifted = omega[:, None] - 2.0 * np.pi * ks[None, :]
    total = np.sum(np.abs(filt.phi_hat(shifted)) ** 2, axis=1)
    # |phi_hat(u)|^2 = (2 sin(u/2))^(2p) / u^(2p); the numerator is 2pi-periodic
    numerator = (2.0 * np.sin(0.5 * omega)) ** (2 * p)
    return total + numerator * _power_tail(2 * p, k_max, omega)


def riesz_bounds(filt: MraFilter, omega_resolution: int = 2048) -> tuple[float, float]:
    """Essential inf and sup of the periodization over one period.

    The grid includes 0 and pi, where the extrema of the provided
    generators sit.
    """
    if omega_resolution < 1024:
        raise ValueError("need at least 1024 frequency samples")
    if omega_resolution % 2:
        omega_resolution += 1
    omega = 2.0 * np.pi * np.arange(omega_resolution) / omega_resolution
    values = periodization(filt, omega)
    return float(values.min()), float(values.max())


@dataclass(frozen=True)
class BranchResult:
    """Outcome of a summability check: value if finite, divergence flag."""

    converged: bool
    value: float | None
    tail_estimate: float | None


def wiener_cell_norm(filt: MraFilter, max_octave: int = 18,
                     samples_per_cell: int = 64) -> BranchResult:
    """Sum over unit cells of the cell supremum of |phi|.

    Compact generators terminate exactly; otherwise octave blocks of cells
    must decay geometrically or the sum is reported divergent.
    """
    def cell_sups(lo: int, hi: int) -> float:
        ks = np.arange(lo, hi)
        offs = np.arange(samples_per_cell) / samples_per_cell
        pts = ks[:, None] + offs[None, :]
        return float(np.sum(np.abs(filt.phi(pts)).max(axis=1)))

    if filt.support is not None:
        lo = int(math.floor(filt.support[0]))
        hi = int(math.ceil(filt.support[1]))
        ks = np.arange(lo, hi)
        offs = np.arange(samples_per_cell) / samples_per_cell
        pts = ks[:, None] + offs[None, :]
        sups = np.abs(filt.phi(pts)).max(axis=1)
        return BranchResult(True, float(np.sum(sups)), 0.0)

    total = 2.0 * cell_sups(0, 1)  # cells [0,1) and [-1,0), even generator
    blocks = []
    for t in range(max_octave):
        block = 2.0 * cell_sups(2 ** t, 2 ** (t + 1))
        blocks.append(block)
        total += block
        if len(blocks) >= 3:
            r1 = blocks[-1] / blocks[-2] if blocks[-2] > 0 else 0.0
            r2 = blocks[-2] / blocks[-3] if blocks[-3] > 0 else 0.0
            if max(r1, r2) < 0.6:
                tail = blocks[-1] * r1 / (1.0 - r1) if r1 > 0 else 0.0
                return BranchResult(True, total + tail, tail)
            if len(blocks) >= 4 and min(r1, r2) > 0.8:
                return BranchResult(False, None, None)
    return BranchResult(False, None, None)


def weighted_periodization_bound(filt: MraFilter, alpha: float,
                                 omega_resolution: int = 1024,
                                 max_octave: int = 16) -> BranchResult:
    """sup over omega of sum_k <u>^(2 alpha) |phi_hat(u)|^2 at u = omega-2 pi k.

    Octave blocks in k decide convergence; a converged sum carries a
    power-law tail estimate from the last block ratio.
    """
    omega = 2.0 * np.pi * np.arange(omega_resolution) / omega_resolution

    def block(lo: int, hi: int) -> np.ndarray:
        acc = np.zeros_like(omega)
        for start in range(lo, hi, 4096):
            stop = min(start + 4096, hi)
            ks = np.concatenate([np.arange(start, stop), -np.arange(start, stop)])
            shifted = omega[:, None] - 2.0 * np.pi * ks[None, :]
            w = (1.0 + shifted ** 2) ** alpha
            acc += np.sum(w * np.abs(filt.phi_hat(shifted)) ** 2, axis=1)
        return acc

    ks0 = np.arange(-1, 2)
    shifted0 = omega[:, None] - 2.0 * np.pi * ks0[None, :]
    totals = np.sum((1.0 + shifted0 ** 2) ** alpha
                    * np.abs(filt.phi_hat(shifted0)) ** 2, axis=1)
    if filt.kind == "shannon":
        return BranchResult(True, float(totals.max()), 0.0)
    block_maxes = []
    for t in range(1, max_octave):
        b = block(2 ** t, 2 ** (t + 1))
        totals = totals + b
        block_maxes.append(float(b.max()))
        if len(block_maxes) >= 3:
            r1 = block_maxes[-1] / block_maxes[-2] if block_maxes[-2] > 0 else 0.0
            r2 = block_maxes[-2] / block_maxes[-3] if block_maxes[-3] > 0 else 0.0
            if max(r1, r2) < 0.75:
                tail = block_maxes[-1] * r1 / (1.0 - r1) if r1 > 0 else 0.0
                return BranchResult(True, float(totals.max()) + tail, tail)
            if len(block_maxes) >= 4 and min(r1, r2) > 0.9:
                return BranchResult(False, None, None)
    return BranchResult(False, None, None)


def _derivative_spectral_proxy(filt: MraFilter) -> MraFilter | None:
    """Filter-like object whose phi_hat is i w phi_hat(w) for branch (ii)."""

    class _Derivative(MraFilter):
        def phi_hat(self, omega):  # type: ignore[override]
            omega = np.asarray(omega, dtype=float)
            return 1j * omega * MraFilter.phi_hat(self, omega)

        def phi(self, x):  # type: ignore[override]
            return MraFilter.phi_prime(self, x)

    if not filt.has_derivative:
        return None
    return _Derivative(filt.kind, filt.degree)


@dataclass(frozen=True)
class AssumptionReport:
    """Summability report for a generator at a given weight exponent."""

    filter_label: str
    alpha: float
    wiener: BranchResult
    weighted: BranchResult
    derivative_ok: bool

    @property
    def satisfied(self) -> bool:
        return self.wiener.converged or self.weighted.converged


def verify_assumption_b(filt: MraFilter, alpha: float) -> AssumptionReport:
    """Check the two summability routes for the generator and its derivative.

    Route (i) is the cell-sup sum of |phi|; route (ii) is the weighted
    periodization with weight <w>^(2 alpha), alpha > 1/2. The derivative flag
    reports whether either route holds for phi' (computed spectrally for
    route (ii)).
    """
    if alpha <= 0.5:
        raise ValueError("weight exponent must exceed 1/2")
    wiener = wiener_cell_norm(filt)
    weighted = weighted_periodization_bound(filt, alpha)
    deriv_ok = False
    proxy = _derivative_spectral_proxy(filt)
    if proxy is not None:
        d_weighted = weighted_periodization_bound(proxy, alpha)
        if d_weighted.converged:
            deriv_ok = True
        else:
            d_wiener = wiener_cell_norm(proxy)
            deriv_ok = d_wiener.converged
    return AssumptionReport(filt.label, alpha, wiener, weighted, deriv_ok)


def verify_assumption_c(filt: MraFilter, alpha: float = 1.0) -> bool:
    return verify_assumption_b(filt, alpha).derivative_ok


# ---------------------------------------------------------------------------
# spaces, projection, synthesis, evaluation

@dataclass(frozen=True)
class MraSpace:
    """Scaled shift-invariant space on a grid.

    scale must be a positive integer multiple of the grid spacing and divide
    the period, leaving at least two coefficients.
    """

    filter: MraFilter
    scale: float
    grid: Grid
    _basis_spectrum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        stride = self.scale / self.grid.spacing
        if self.scale <= 0 or abs(stride - round(stride)) > 1e-9:
            raise ValueError("scale must be a positive multiple of the spacing")
        stride = int(round(stride))
        if self.grid.n_samples % stride:
            raise ValueError("scale must divide the period")
        if self.grid.n_samples // stride < 2:
            raise ValueError("space needs at least two coefficients")
        if self.filter.support is not None:
            width = self.filter.support[1] - self.filter.support[0]
            if width * self.scale > self.grid.period:
                raise ValueError("generator support exceeds the period")
        object.__setattr__(self, "_basis_spectrum", self._build_basis_spectrum())

    @property
    def stride(self) -> int:
        return int(round(self.scale / self.grid.spacing))

    @property
    def n_coefficients(self) -> int:
        return self.grid.n_samples // self.stride

    def _build_basis_spectrum(self) -> np.ndarray:
        grid, s = self.grid, self.scale
        if self.filter.kind == "shannon":
            # closed band: both edge bins carry weight, so real coefficient
            # vectors synthesize to real signals (the edge mode is a cosine)
            m = self.n_coefficients
            mask = 2 * np.abs(grid.k) <= m
            return np.where(mask, np.sqrt(s) / grid.spacing, 0.0).astype(complex)
        u = grid.wrapped_offset(grid.x, 0.0) / s
        b0 = self.filter.phi(u) / np.sqrt(s)
        # wrapped_offset folds to [-L/2, L/2); a support reaching exactly L/2
        # is guarded against in __post_init__
        return np.fft.fft(b0)

    def coset_denominators(self) -> np.ndarray:
        b = self._basis_spectrum.reshape(self.stride, self.n_coefficients)
        return np.sum(np.abs(b) ** 2, axis=0)


@dataclass(frozen=True, eq=False)
class MraCoefficients:
    """Expansion coefficients of a signal in an MraSpace basis."""

    space: MraSpace
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.complex128)
        if arr.shape != (self.space.n_coefficients,):
            raise ValueError("coefficient count does not match the space")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def project(f: SampledSignal, space: MraSpace) -> MraCoefficients:
    """Orthogonal projection coefficients via the dual generator.

    Computed per frequency coset: a_hat = sum_m conj(B) F / sum_m |B|^2,
    the discrete form of dividing by the periodization.
    """
    if f.grid != space.grid:
        raise ValueError("signal and space grids differ")
    sigma, m = space.stride, space.n_coefficients
    fhat = np.fft.fft(f.samples).reshape(sigma, m)
    b = space._basis_spectrum.reshape(sigma, m)
    den = np.sum(np.abs(b) ** 2, axis=0)
    if np.any(den <= 1e-12 * den.max()):
        raise ValueError("degenerate generator: a frequency coset has no energy")
    a_hat = np.sum(np.conj(b) * fhat, axis=0) / den
    return MraCoefficients(space, np.fft.ifft(a_hat))


def synthesize(c: MraCoefficients) -> SampledSignal:
    """Grid samples of sum_n a_n phi_{s,n} (periodized)."""
    space = c.space
    a_hat = np.fft.fft(c.values)
    g_hat = space._basis_spectrum * np.tile(a_hat, space.stride)
    return SampledSignal(space.grid, np.fft.ifft(g_hat))


def eval_at(c: MraCoefficients, x: np.ndarray) -> np.ndarray:
    """Exact values of the continuous representative at arbitrary positions.

    Compact generators sum the few overlapping translates in closed form;
    the Shannon space evaluates its band-limited trigonometric polynomial,
    which is the periodized Dirichlet interpolation.
    """
    space = c.space
    x = np.asarray(x, dtype=float)
    s, m = space.scale, space.n_coefficients
    if space.filter.kind == "shannon":
        a_hat = np.fft.fft(c.values)
        k = space.grid.k
        kb = k[2 * np.abs(k) <= m]
        omega = 2.0 * np.pi * kb / space.grid.period
        coeffs = np.sqrt(s) * a_hat[np.mod(kb, m)]
        phases = np.exp(1j * np.outer(x, omega))
        return phases @ coeffs / space.grid.period
    lo, hi = space.filter.support
    t = x / s
    n_min = np.ceil(t - hi).astype(int)
    n_max = np.floor(t - lo).astype(int)
    width = int((n_max - n_min).max()) + 1 if x.size else 0
    out = np.zeros(x.shape, dtype=np.complex128)
    for j in range(width):
        n = n_min + j
        valid = n <= n_max
        contrib = c.values[np.mod(n, m)] * space.filter.phi(t - n)
        out += np.where(valid, contrib, 0.0)
    return out / np.sqrt(s)


def gradient(c: MraCoefficients) -> SampledSignal:
    """Grid samples of the derivative of the continuous representative."""
    space = c.space
    if space.filter.kind == "shannon":
        g_hat = np.fft.fft(synthesize(c).samples)
        omega = space.grid.omega
        return SampledSignal(space.grid, np.fft.ifft(1j * omega * g_hat))
    if not space.filter.has_derivative:
        raise ValueError("generator has no usable derivative")
    return SampledSignal(space.grid, gradient_at(c, space.grid.x))


def gradient_at(c: MraCoefficients, x: np.ndarray) -> np.ndarray:
    space = c.space
    if space.filter.kind == "shannon":
        a_hat = np.fft.fft(c.values)
        m = space.n_coefficients
        k = space.grid.k
        kb = k[2 * np.abs(k) <= m]
        omega = 2.0 * np.pi * kb / space.grid.period
        coeffs = np.sqrt(space.scale) * a_hat[np.mod(kb, m)] * 1j * omega
        phases = np.exp(1j * np.outer(np.asarray(x, float), omega))
        return phases @ coeffs / space.grid.period
    if not space.filter.has_derivative:
        raise ValueError("generator has no usable derivative")
    x = np.asarray(x, dtype=float)
    s, m = space.scale, space.n_coefficients
    lo, hi = space.filter.support
    t = x / s
    n_min = np.ceil(t - hi).astype(int)
    n_max = np.floor(t - lo).astype(int)
    width = int((n_max - n_min).max()) + 1 if x.size else 0
    out = np.zeros(x.shape, dtype=np.complex128)
    for j in range(width):
        n = n_min + j
        valid = n <= n_max
        contrib = c.values[np.mod(n, m)] * space.filter.phi_prime(t - n)
        out += np.where(valid, contrib, 0.0)
    return out / (np.sqrt(s) * s)


# ---------------------------------------------------------------------------
# multiscale decomposition

def dyadic_space(filt: MraFilter, j: int, grid: Grid) -> MraSpace:
    return MraSpace(filt, float(2 ** j), grid)


def _project_samples(f: SampledSignal, space: MraSpace) -> np.ndarray:
    if space.filter.kind == "shannon":
        # band-limiting projector with both edge bins; the coefficient
        # lattice cannot hold the edge sine mode, but the dyadic detail
        # bands are stated symmetrically, so the sample-space projector
        # uses the full closed band
        mask = 2 * np.abs(space.grid.k) <= space.n_coefficients
        return np.fft.ifft(np.fft.fft(f.samples) * mask)
    return synthesize(project(f, space)).samples


def detail_projection(f: SampledSignal, filt: MraFilter, j: int) -> SampledSignal:
    """Component in the complement of V_j inside V_{j-1} (scales 2^j, 2^{j-1})."""
    fine = MraSpace(filt, float(2 ** (j - 1)), f.grid)
    coarse = MraSpace(filt, float(2 ** j), f.grid)
    return SampledSignal(f.grid, _project_samples(f, fine) - _project_samples(f, coarse))


@dataclass(frozen=True)
class BesovNorm:
    """Weighted detail sum with the coarse remainder kept separate."""

    sigma: float
    j_range: tuple[int, int]
    detail_sum: float
    coarse_remainder: float
    terms: tuple[tuple[int, float], ...]


def besov_norm(f: SampledSignal, filt: MraFilter, sigma: float,
               j_range: tuple[int, int]) -> BesovNorm:
    """sum_j 2^(-j sigma) ||detail_j f|| over j in (j_min, j_max].

    The term at scale index j uses the detail between scales 2^(j-1) and 2^j.
    The coarsest-scale component 2^(-j_max sigma) ||P_{V_jmax} f|| is returned
    separately, not folded into the sum.
    """
    j_min, j_max = j_range
    if j_min >= j_max:
        raise ValueError("need j_min < j_max")
    terms = []
    total = 0.0
    for j in range(j_min + 1, j_max + 1):
        w = 2.0 ** (-j * sigma)
        norm = l2_norm(detail_projection(f, filt, j))
        terms.append((j, w * norm))
        total += w * norm
    coarse = MraSpace(filt, float(2 ** j_max), f.grid)
    remainder = 2.0 ** (-j_max * sigma) * l2_norm(
        SampledSignal(f.grid, _project_samples(f, coarse)))
    return BesovNorm(sigma, j_range, total, remainder, tuple(terms))


def h_alpha_tensor_norm(f: SampledSignal, alpha: float) -> float:
    """Sobolev-type norm || <w>^alpha f_hat ||_L2 on the grid spectrum."""
    s = spectrum(f)
    weight = (1.0 + s.omega ** 2) ** alpha
    return float(np.sqrt(np.sum(weight * np.abs(s.coefficients) ** 2) / f.grid.period))


def reverse_holder_check(space: MraSpace, radii: tuple[float, ...],
                         n_signals: int = 20, seed: int = 0,
                         use_gradient: bool = False) -> dict:
    """Fitted constant in the window-norm bound on the space.

    Plain form: ||f||_{inf,2,r} <= C (1 + r/s)^(1/2) ||f||_2 for f in U_s.
    Gradient form: ||f'||_{inf,2,r} <= C s^-1 (1 + r/s)^(1/2) ||f||_2, which
    requires a generator with a usable derivative.
    """
    from .amalgam import AmalgamParams, amalgam_norm

    if use_gradient and not space.filter.has_derivative:
        raise ValueError("gradient variant needs a differentiable generator")
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_signals):
        coeffs = MraCoefficients(space, rng.standard_normal(space.n_coefficients)
                                 + 1j * rng.standard_normal(space.n_coefficients))
        f = synthesize(coeffs)
        base = l2_norm(f)
        if base == 0:
            continue
        g = gradient(coeffs) if use_gradient else f
        for r in radii:
            envelope = (1.0 + r / space.scale) ** 0.5 * base
            if use_gradient:
                envelope = envelope / space.scale
            value = amalgam_norm(g, AmalgamParams(math.inf, 2.0, r))
            rows.append({"radius": r, "ratio": value / envelope})
    ratios = [row["ratio"] for row in rows]
    return {"fitted_constant": float(max(ratios)), "rows": rows}
