"""Signals on a uniform periodic grid.

Everything lives on the torus [0, L) with L = n_samples * spacing. Integrals
are Riemann sums with weight `spacing`, and the spectrum uses the transform
convention F(w) = integral f(x) exp(-i w x) dx discretized on the grid
frequencies w_k = 2*pi*k/L with k in {-floor(N/2), ..., ceil(N/2)-1}. Under
this convention Parseval reads ||f||^2 = (1/L) * sum |c_k|^2 and the
convolution theorem spectrum(f * g) = spectrum(f) * spectrum(g) holds exactly
for every grid spacing.

All operations are pure: signals are immutable value objects and functions
return fresh instances.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

_BINARY_MAGIC = b"DFL1"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic sampling of the torus [0, L)."""

    n_samples: int
    spacing: float = 1.0

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValueError("grid needs at least two samples")
        if not (self.spacing > 0 and np.isfinite(self.spacing)):
            raise ValueError("grid spacing must be positive and finite")

    @property
    def period(self) -> float:
        return self.n_samples * self.spacing

    @property
    def x(self) -> np.ndarray:
        """Sample positions x_j = j * spacing."""
        return np.arange(self.n_samples) * self.spacing

    @property
    def omega(self) -> np.ndarray:
        """Grid frequencies in FFT order (rad per space unit)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_samples, d=self.spacing)

    @property
    def k(self) -> np.ndarray:
        """Signed frequency indices in FFT order."""
        return np.fft.fftfreq(self.n_samples, d=1.0 / self.n_samples).astype(int)

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Reduce positions to the fundamental period [0, L)."""
        return np.mod(x, self.period)

    def wrapped_offset(self, x: np.ndarray, center: float) -> np.ndarray:
        """Signed displacement from `center`, reduced to [-L/2, L/2)."""
        half = 0.5 * self.period
        return np.mod(np.asarray(x) - center + half, self.period) - half


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Complex samples of a function on a Grid."""

    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.shape != (self.grid.n_samples,):
            raise ValueError("sample count does not match grid")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", _freeze(arr))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Discrete spectrum c_k = spacing * DFT(samples), stored in FFT order."""

    grid: Grid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.coefficients, dtype=np.complex128)
        if arr.shape != (self.grid.n_samples,):
            raise ValueError("coefficient count does not match grid")
        object.__setattr__(self, "coefficients", _freeze(arr))

    @property
    def k(self) -> np.ndarray:
        return self.grid.k

    @property
    def omega(self) -> np.ndarray:
        return 2.0 * np.pi * self.k / self.grid.period


def l2_norm(f: SampledSignal) -> float:
    """Riemann-sum L2 norm sqrt(spacing * sum |f_j|^2)."""
    return float(np.sqrt(f.grid.spacing * np.sum(np.abs(f.samples) ** 2)))


def inner(f: SampledSignal, g: SampledSignal) -> complex:
    """Riemann-sum L2 inner product with the second argument conjugated."""
    if f.grid != g.grid:
        raise ValueError("signals live on different grids")
    return complex(f.grid.spacing * np.sum(f.samples * np.conj(g.samples)))


def spectrum(f: SampledSignal) -> Spectrum:
    return Spectrum(f.grid, f.grid.spacing * np.fft.fft(f.samples))


def signal_from_spectrum(s: Spectrum) -> SampledSignal:
    return SampledSignal(s.grid, np.fft.ifft(s.coefficients) / s.grid.spacing)


def convolve(f: SampledSignal, g: SampledSignal) -> SampledSignal:
    """Periodic convolution (f*g)_j = spacing * sum_m f_m g_{j-m}."""
    if f.grid != g.grid:
        raise ValueError("convolution operands live on different grids")
    prod = np.fft.fft(f.samples) * np.fft.fft(g.samples) * f.grid.spacing
    return SampledSignal(f.grid, np.fft.ifft(prod))


def circular_shift(f: SampledSignal, n: int) -> SampledSignal:
    """Translate by n samples: output_j = f_{j-n}."""
    return SampledSignal(f.grid, np.roll(f.samples, n))


def make_tent(scale: float, grid: Grid, normalized: bool = True,
              center: float | None = None) -> SampledSignal:
    """Triangular bump of half-width `scale`, centered mid-period.

    With normalized=True the peak is scale**-0.5 (the shape used by the
    sharpness constructions); otherwise the peak is 1 (the experiment
    variant). `scale` must be a positive multiple of the grid spacing with
    2*scale <= period.
    """
    ratio = scale / grid.spacing
    if scale <= 0 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ValueError("tent scale must be a positive multiple of the spacing")
    if 2.0 * scale > grid.period:
        raise ValueError("tent support exceeds the period")
    if center is None:
        center = 0.5 * grid.period
    u = grid.wrapped_offset(grid.x, center)
    vals = np.maximum(0.0, 1.0 - np.abs(u) / scale)
    if normalized:
        vals = vals / np.sqrt(scale)
    return SampledSignal(grid, vals)


def make_sinc_packet(band: float, grid: Grid, center: float | None = None) -> SampledSignal:
    """Unit-norm packet with a flat spectrum on the band (-band, band].

    The spectrum is constant on the included frequency bins (half-open band
    edge convention, so the bin count equals the dimension of the matching
    band-limited space) and the amplitude is chosen so the L2 norm is exactly
    one. The packet peaks at `center` (mid-period by default) with peak value
    close to sqrt(band/pi).
    """
    if not (0 < band <= grid.nyquist):
        raise ValueError("band must lie in (0, nyquist]")
    if center is None:
        center = 0.5 * grid.period
    omega = 2.0 * np.pi * grid.k / grid.period
    mask = (omega > -band) & (omega <= band)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise ValueError("band narrower than one frequency bin")
    amp = np.sqrt(grid.period / count)
    coeff = np.where(mask, amp * np.exp(-1j * omega * center), 0.0)
    return signal_from_spectrum(Spectrum(grid, coeff))


def random_signal(grid: Grid, rng: np.random.Generator, real: bool = False) -> SampledSignal:
    """Gaussian noise signal, mostly for tests and empirical constants."""
    vals = rng.standard_normal(grid.n_samples)
    if not real:
        vals = vals + 1j * rng.standard_normal(grid.n_samples)
    return SampledSignal(grid, vals)


# ---------------------------------------------------------------------------
# serialization

def signal_to_csv(f: SampledSignal, path: str) -> None:
    rows = np.column_stack([
        np.arange(f.grid.n_samples), f.grid.x, f.samples.real, f.samples.imag,
    ])
    header = "index,x,re,im"
    np.savetxt(path, rows, delimiter=",", header=header, comments="",
               fmt=["%d", "%.17g", "%.17g", "%.17g"])


def signal_from_csv(path: str, spacing: float | None = None) -> SampledSignal:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != 4:
        raise ValueError("signal CSV must have columns index,x,re,im")
    n = rows.shape[0]
    if spacing is None:
        spacing = float(rows[1, 1] - rows[0, 1]) if n > 1 else 1.0
    return SampledSignal(Grid(n, spacing), rows[:, 2] + 1j * rows[:, 3])


def spectrum_to_csv(s: Spectrum, path: str) -> None:
    order = np.argsort(s.k)
    rows = np.column_stack([
        s.k[order], s.omega[order],
        s.coefficients[order].real, s.coefficients[order].imag,
    ])
    np.savetxt(path, rows, delimiter=",", header="k,omega,re,im", comments="",
               fmt=["%d", "%.17g", "%.17g", "%.17g"])


def signal_to_binary(f: SampledSignal, path: str) -> None:
    """Little-endian dump: magic, n_samples, spacing, interleaved re/im."""
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<qd", f.grid.n_samples, f.grid.spacing))
        inter = np.empty(2 * f.grid.n_samples, dtype="<f8")
        inter[0::2] = f.samples.real
        inter[1::2] = f.samples.imag
        fh.write(inter.tobytes())


def signal_from_binary(path: str) -> SampledSignal:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BINARY_MAGIC:
            raise ValueError("not a deformlab binary signal file")
        n, spacing = struct.unpack("<qd", fh.read(16))
        inter = np.frombuffer(fh.read(16 * n), dtype="<f8")
    return SampledSignal(Grid(int(n), spacing), inter[0::2] + 1j * inter[1::2])
