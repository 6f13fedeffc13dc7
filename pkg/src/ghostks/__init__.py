"""Photon-counting spectra, two-sample KS threat discrimination and Monte Carlo sweeps."""

from .errors import (
    EmptyMeasurementError,
    GhostKSError,
    GridMismatchError,
    InvalidParameterError,
    OutOfRangeError,
)
from .ks import KsOutcome, decide, kolmogorov_sf, ks_statistic, two_sample_test
from .montecarlo import (
    SweepResult,
    TrialBatch,
    permutation_oracle,
    pvalue_stats,
    rejection_rate,
    run_trials,
    sweep,
)
from .simulate import (
    Scenario,
    sample_poisson_counts,
    scenario_broad_absorber,
    scenario_narrow_dip,
    scenario_supergaussian_filter,
    scenario_tabulated,
    simulate_reference,
    simulate_signal,
)
from .spectra import (
    BinnedSpectrum,
    EmpiricalCDF,
    GaussianDip,
    Identity,
    LinearSlope,
    SpectralDensity,
    SuperGaussian,
    Tabulated,
    WavelengthGrid,
    apply_transmission,
    empirical_cdf,
    integrate_roi,
    make_flat_reference,
    make_gaussian_reference,
    transmittance_at,
)

__version__ = "0.1.0"
