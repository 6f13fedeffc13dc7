"""Poissonian photon-count simulation for reference and object measurements.

Random numbers come from numpy's Philox counter-based bit generator. Each
draw is keyed by a :class:`numpy.random.SeedSequence` built from an integer
seed plus a spawn key, so a trial can be regenerated in isolation from
``(seed, trial index)`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidDensityError, InvalidParameterError
from .spectra import (
    BinnedSpectrum,
    GaussianDip,
    LinearSlope,
    SpectralDensity,
    SuperGaussian,
    Tabulated,
    TransmissionProfile,
    WavelengthGrid,
    apply_transmission,
    make_flat_reference,
    make_gaussian_reference,
)

RNG_NAME = "numpy.random.Philox(SeedSequence)"

BROAD_CENTER_NM = 805.0
BROAD_SIGMA_NM = 4.0
BROAD_N_REFERENCE = 350_000
BROAD_MAX_ALPHA = 0.02

NARROW_DEPTH = 0.2
NARROW_N_REFERENCE = 600_000
NARROW_MAX_SIGMA = 10.0
# The flat-window gap between object and reference CDFs must keep growing
# with the dip width over the swept sigma range; on a 30 nm window it peaks
# near sigma = 5 nm, so the narrow-dip family uses 50 nm.
NARROW_GRID = (780.0, 830.0, 201)

# Bench objects: 810 nm bandpass as the reference, 4th-order super-Gaussian
# filter (807 nm, 7.5 nm FWHM) as the object.
BANDPASS_CENTER_NM = 810.0
BANDPASS_FWHM_NM = 10.0
FILTER_CENTER_NM = 807.0
FILTER_FWHM_NM = 7.5
FILTER_ORDER = 4
BENCH_N_REFERENCE = 350_000

_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def make_rng(seed, *key) -> np.random.Generator:
    """Philox generator for ``seed`` and an optional integer spawn key."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key) -> int:
    """Deterministic 64-bit child seed for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def fresh_seed() -> int:
    """64 bits of OS entropy, for runs where the caller gave no seed."""
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Scenario:
    """Reference lineshape, object, resource budgets and seed of one setup."""

    reference: SpectralDensity
    object: TransmissionProfile
    n_reference: int
    n_signal: int
    seed: int = 0
    name: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        for label in ("n_reference", "n_signal"):
            v = getattr(self, label)
            if int(v) != v or v < 1:
                raise InvalidParameterError(f"{label} must be a positive integer, got {v}")
            object.__setattr__(self, label, int(v))
        # fail early if the object is not defined over the grid
        apply_transmission(self.reference, self.object)

    @property
    def grid(self) -> WavelengthGrid:
        return self.reference.grid

    def with_seed(self, seed) -> "Scenario":
        return replace(self, seed=int(seed))

    def with_n_signal(self, n_signal) -> "Scenario":
        return replace(self, n_signal=int(n_signal))

    def expected_detected(self) -> float:
        """Mean detected total of the object measurement (<= n_signal)."""
        p = self.reference.normalized()
        return float(self.n_signal * np.sum(p * self.object.transmittance(self.grid.bin_centers)))


def sample_poisson_counts(density: SpectralDensity, n_resources, seed) -> BinnedSpectrum:
    """Independent Poisson counts with means ``n_resources * density / sum(density)``.

    ``seed`` is an integer or a ready :class:`numpy.random.Generator`.
    """
    if int(n_resources) != n_resources or n_resources < 1:
        raise InvalidParameterError(f"n_resources must be a positive integer, got {n_resources}")
    total = float(np.sum(density.intensity))
    if not total > 0:
        raise InvalidDensityError("density is zero everywhere")
    rng = make_rng(seed)
    lam = n_resources * (density.intensity / total)
    counts = rng.poisson(lam)
    return BinnedSpectrum(density.grid, counts)


def _signal_means(scenario: Scenario) -> np.ndarray:
    p = scenario.reference.normalized()
    t = scenario.object.transmittance(scenario.grid.bin_centers)
    return scenario.n_signal * p * t


def simulate_signal(scenario: Scenario, rng=None) -> BinnedSpectrum:
    """Object measurement: counts ~ Poisson(N_T * p_i * T(lambda_i))."""
    rng = make_rng(scenario.seed if rng is None else rng)
    return BinnedSpectrum(scenario.grid, rng.poisson(_signal_means(scenario)))


def simulate_reference(scenario: Scenario, rng=None) -> BinnedSpectrum:
    """Calibration measurement with ``n_reference`` resources and no object."""
    rng = make_rng(scenario.seed if rng is None else rng)
    return sample_poisson_counts(scenario.reference, scenario.n_reference, rng)


# --------------------------------------------------------------------------
# Scenario constructors


def scenario_broad_absorber(alpha, n_signal, seed=0, grid=None, n_reference=BROAD_N_REFERENCE):
    """Gaussian reference (805 nm, sigma 4 nm) seen through a linear slope."""
    if not 0.0 <= alpha <= BROAD_MAX_ALPHA:
        raise InvalidParameterError(f"alpha must lie in [0, {BROAD_MAX_ALPHA}] 1/nm, got {alpha}")
    grid = WavelengthGrid.default() if grid is None else grid
    ref = make_gaussian_reference(grid, BROAD_CENTER_NM, BROAD_SIGMA_NM)
    obj = LinearSlope(float(alpha), grid.start)
    return Scenario(ref, obj, n_reference, n_signal, seed, "broad", (("alpha", float(alpha)),))


def scenario_narrow_dip(sigma, n_signal, seed=0, grid=None, n_reference=NARROW_N_REFERENCE):
    """Flat reference with a Gaussian dip of depth 0.2 at the window centre."""
    if not 0.0 <= sigma <= NARROW_MAX_SIGMA:
        raise InvalidParameterError(f"sigma must lie in [0, {NARROW_MAX_SIGMA}] nm, got {sigma}")
    grid = WavelengthGrid.uniform(*NARROW_GRID) if grid is None else grid
    ref = make_flat_reference(grid)
    obj = GaussianDip(NARROW_DEPTH, grid.center, float(sigma))
    return Scenario(ref, obj, n_reference, n_signal, seed, "narrow", (("sigma", float(sigma)),))


def bandpass_reference(grid=None, center=BANDPASS_CENTER_NM, fwhm=BANDPASS_FWHM_NM):
    grid = WavelengthGrid.default() if grid is None else grid
    return make_gaussian_reference(grid, center, fwhm * _FWHM_TO_SIGMA)


def scenario_supergaussian_filter(n_signal, seed=0, grid=None, n_reference=BENCH_N_REFERENCE):
    """810 nm Gaussian bandpass reference, super-Gaussian filter as object."""
    ref = bandpass_reference(grid)
    obj = SuperGaussian(FILTER_CENTER_NM, FILTER_FWHM_NM, FILTER_ORDER)
    return Scenario(ref, obj, n_reference, n_signal, seed, "supergaussian", ())


def scenario_tabulated(table: Tabulated, n_signal, seed=0, grid=None, n_reference=BENCH_N_REFERENCE):
    """810 nm Gaussian bandpass reference seen through a measured transmittance table."""
    ref = bandpass_reference(grid)
    return Scenario(ref, table, n_reference, n_signal, seed, "tabulated", ())


def n_signal_for_detected(scenario: Scenario, detected: float) -> int:
    """Resource budget whose expected detected total is ``detected``."""
    p = scenario.reference.normalized()
    eff = float(np.sum(p * scenario.object.transmittance(scenario.grid.bin_centers)))
    return max(1, int(round(detected / eff)))


FAMILIES = {
    "broad": scenario_broad_absorber,
    "narrow": scenario_narrow_dip,
}


def family_scenario(family, axis_value, n_signal, seed=0, grid=None, n_reference=None):
    """Scenario of a named one-parameter family (``broad``: alpha, ``narrow``: sigma)."""
    try:
        ctor = FAMILIES[family]
    except KeyError:
        raise InvalidParameterError(
            f"unknown scenario family {family!r}; choose from {sorted(FAMILIES)}"
        ) from None
    kw = {} if n_reference is None else {"n_reference": n_reference}
    return ctor(axis_value, n_signal, seed, grid=grid, **kw)

