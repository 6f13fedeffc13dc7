"""Wavelength grids, binned spectra, spectral densities and transmission models.

Everything lives on a wavelength axis in nm. All containers are frozen
dataclasses holding read-only numpy arrays so they can be shared between
worker processes without copies going stale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    EmptyMeasurementError,
    GridMismatchError,
    InvalidDensityError,
    InvalidParameterError,
    InvalidROIError,
    OutOfRangeError,
)

# Default simulation window: 790-820 nm sampled every 0.25 nm, endpoints included.
DEFAULT_GRID_START = 790.0
DEFAULT_GRID_STOP = 820.0
DEFAULT_GRID_BINS = 121


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WavelengthGrid:
    """Ordered bin centres of the spectral axis (nm)."""

    bin_centers: np.ndarray

    def __post_init__(self):
        lam = _frozen(self.bin_centers, float)
        if lam.ndim != 1 or lam.size < 2:
            raise InvalidParameterError("a wavelength grid needs at least 2 bins")
        if not np.all(np.isfinite(lam)):
            raise InvalidParameterError("wavelengths must be finite")
        if not np.all(np.diff(lam) > 0):
            raise InvalidParameterError("wavelengths must be strictly increasing")
        object.__setattr__(self, "bin_centers", lam)

    @classmethod
    def uniform(cls, start=DEFAULT_GRID_START, stop=DEFAULT_GRID_STOP, n_bins=DEFAULT_GRID_BINS):
        """Evenly spaced grid with both endpoints included."""
        if n_bins < 2:
            raise InvalidParameterError("n_bins must be >= 2")
        if not stop > start:
            raise InvalidParameterError("stop must exceed start")
        return cls(np.linspace(start, stop, int(n_bins)))

    @classmethod
    def default(cls):
        return cls.uniform()

    def __len__(self):
        return self.bin_centers.size

    def __eq__(self, other):
        if not isinstance(other, WavelengthGrid):
            return NotImplemented
        return np.array_equal(self.bin_centers, other.bin_centers)

    def __hash__(self):
        return hash(self.bin_centers.tobytes())

    @property
    def start(self) -> float:
        return float(self.bin_centers[0])

    @property
    def stop(self) -> float:
        return float(self.bin_centers[-1])

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.bin_centers)

    @property
    def is_uniform(self) -> bool:
        d = self.spacing
        return bool(np.allclose(d, d[0], rtol=1e-9, atol=0.0))

    @property
    def center(self) -> float:
        return 0.5 * (self.start + self.stop)


def check_same_grid(a: WavelengthGrid, b: WavelengthGrid):
    if a != b:
        raise GridMismatchError(
            f"grids differ: {len(a)} bins [{a.start}, {a.stop}] vs "
            f"{len(b)} bins [{b.start}, {b.stop}]"
        )


@dataclass(frozen=True, eq=False)
class BinnedSpectrum:
    """Photon counts per wavelength bin."""

    grid: WavelengthGrid
    counts: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        raw = np.asarray(self.counts)
        if raw.ndim != 1 or raw.size != len(self.grid):
            raise InvalidParameterError(
                f"counts length {raw.size} does not match grid length {len(self.grid)}"
            )
        if raw.dtype.kind == "f":
            if not np.all(np.isfinite(raw)) or not np.all(raw == np.round(raw)):
                raise InvalidParameterError("counts must be integers")
        elif raw.dtype.kind not in "iu":
            raise InvalidParameterError("counts must be integers")
        counts = _frozen(raw, np.int64)
        if np.any(counts < 0):
            raise InvalidParameterError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other):
        if not isinstance(other, BinnedSpectrum):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Expected relative intensity per bin (Poisson means up to a scale)."""

    grid: WavelengthGrid
    intensity: np.ndarray

    def __post_init__(self):
        inten = _frozen(self.intensity, float)
        if inten.ndim != 1 or inten.size != len(self.grid):
            raise InvalidDensityError(
                f"intensity length {inten.size} does not match grid length {len(self.grid)}"
            )
        if not np.all(np.isfinite(inten)) or np.any(inten < 0):
            raise InvalidDensityError("intensity must be finite and non-negative")
        if not np.any(inten > 0):
            raise InvalidDensityError("intensity is zero everywhere")
        object.__setattr__(self, "intensity", inten)

    def normalized(self) -> np.ndarray:
        """Shape normalised to unit sum over the grid."""
        return self.intensity / self.intensity.sum()


@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    grid: WavelengthGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, float))


# --------------------------------------------------------------------------
# Transmission profiles


@dataclass(frozen=True)
class Identity:
    def transmittance(self, lam):
        return np.ones_like(np.asarray(lam, dtype=float))


@dataclass(frozen=True)
class LinearSlope:
    """``clamp(1 - alpha * (lam - lam_ref), 0, 1)``; alpha in 1/nm."""

    alpha: float
    lam_ref: float = DEFAULT_GRID_START

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.lam_ref)):
            raise InvalidParameterError("alpha and lam_ref must be finite")

    def transmittance(self, lam):
        lam = np.asarray(lam, dtype=float)
        return np.clip(1.0 - self.alpha * (lam - self.lam_ref), 0.0, 1.0)


@dataclass(frozen=True)
class GaussianDip:
    """``1 - depth * exp(-(lam - center)^2 / (2 sigma^2))``.

    ``sigma == 0`` is the zero-width limit and transmits everything.
    """

    depth: float
    center: float
    sigma: float

    def __post_init__(self):
        if not 0.0 <= self.depth <= 1.0:
            raise InvalidParameterError(f"dip depth must lie in [0, 1], got {self.depth}")
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise InvalidParameterError(f"sigma must be >= 0, got {self.sigma}")
        if not math.isfinite(self.center):
            raise InvalidParameterError("center must be finite")

    def transmittance(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.sigma == 0.0:
            return np.ones_like(lam)
        g = np.exp(-((lam - self.center) ** 2) / (2.0 * self.sigma**2))
        return np.clip(1.0 - self.depth * g, 0.0, 1.0)


@dataclass(frozen=True)
class SuperGaussian:
    """Flat-topped bandpass of order ``order`` parametrised by its FWHM.

    ``exp(-ln2 * (4 (lam - center)^2 / fwhm^2) ** order)``, which is exactly
    one half at ``center +/- fwhm / 2``.
    """

    center: float
    fwhm: float
    order: int = 4

    def __post_init__(self):
        if not self.fwhm > 0:
            raise InvalidParameterError("fwhm must be positive")
        if not self.order > 0:
            raise InvalidParameterError("order must be positive")

    def transmittance(self, lam):
        lam = np.asarray(lam, dtype=float)
        u = 4.0 * (lam - self.center) ** 2 / self.fwhm**2
        return np.exp(-math.log(2.0) * u**self.order)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Measured transmittance, linearly interpolated, never extrapolated."""

    wavelengths: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lam = _frozen(self.wavelengths, float)
        val = _frozen(self.values, float)
        if lam.ndim != 1 or lam.size < 2 or lam.shape != val.shape:
            raise InvalidParameterError("table needs >= 2 matching wavelength/value pairs")
        if not np.all(np.diff(lam) > 0):
            raise InvalidParameterError("table wavelengths must be strictly increasing")
        if np.any(val < 0) or np.any(val > 1) or not np.all(np.isfinite(val)):
            raise InvalidParameterError("tabulated transmittance must lie in [0, 1]")
        object.__setattr__(self, "wavelengths", lam)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_absorbance(cls, wavelengths, absorbance):
        """Build from decadic absorbance, ``T = 10 ** -A``."""
        a = np.asarray(absorbance, dtype=float)
        if np.any(a < 0):
            raise InvalidParameterError("absorbance must be non-negative")
        return cls(wavelengths, 10.0 ** (-a))

    def transmittance(self, lam):
        lam = np.asarray(lam, dtype=float)
        lo, hi = self.wavelengths[0], self.wavelengths[-1]
        if np.any(lam < lo) or np.any(lam > hi):
            raise OutOfRangeError(
                f"wavelength outside tabulated range [{lo}, {hi}] nm"
            )
        return np.interp(lam, self.wavelengths, self.values)


TransmissionProfile = Union[Identity, LinearSlope, GaussianDip, SuperGaussian, Tabulated]


def transmittance_at(profile: TransmissionProfile, lam) -> float | np.ndarray:
    """Transmittance of ``profile`` at wavelength(s) ``lam`` (nm), in [0, 1]."""
    lam_arr = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam_arr)):
        raise InvalidParameterError("wavelength must be finite")
    t = profile.transmittance(lam_arr)
    if lam_arr.ndim == 0:
        return float(t)
    return t


# --------------------------------------------------------------------------
# Operations


def make_gaussian_reference(grid: WavelengthGrid, center: float, sigma: float) -> SpectralDensity:
    """Unit-peak Gaussian lineshape centred at ``center`` nm."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    if not math.isfinite(center):
        raise InvalidParameterError("center must be finite")
    lam = grid.bin_centers
    return SpectralDensity(grid, np.exp(-((lam - center) ** 2) / (2.0 * sigma**2)))


def make_flat_reference(grid: WavelengthGrid) -> SpectralDensity:
    return SpectralDensity(grid, np.ones(len(grid)))


def apply_transmission(density: SpectralDensity, profile: TransmissionProfile) -> SpectralDensity:
    t = transmittance_at(profile, density.grid.bin_centers)
    return SpectralDensity(density.grid, density.intensity * t)


def empirical_cdf(spectrum: BinnedSpectrum) -> EmpiricalCDF:
    total = spectrum.total
    if total <= 0:
        raise EmptyMeasurementError("cannot build a CDF from a spectrum with no counts")
    return EmpiricalCDF(spectrum.grid, np.cumsum(spectrum.counts) / total)


def integrate_roi(image, roi, grid: WavelengthGrid) -> BinnedSpectrum:
    """Sum the rows ``roi = (start, stop)`` (half-open) of a count image.

    Rows are the spatial axis, columns the spectral axis.
    """
    img = np.asarray(image)
    if img.ndim != 2:
        raise InvalidROIError("image must be 2-D (spatial rows x spectral columns)")
    if img.shape[1] != len(grid):
        raise GridMismatchError(
            f"image has {img.shape[1]} spectral columns, grid has {len(grid)} bins"
        )
    try:
        start, stop = (int(v) for v in roi)
    except (TypeError, ValueError):
        raise InvalidROIError(f"roi must be a (start, stop) row pair, got {roi!r}") from None
    if not 0 <= start < stop <= img.shape[0]:
        raise InvalidROIError(
            f"roi rows [{start}, {stop}) empty or outside image with {img.shape[0]} rows"
        )
    return BinnedSpectrum(grid, img[start:stop].sum(axis=0))
