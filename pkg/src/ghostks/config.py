"""Scenario configuration dataclasses and their INI-style file form.

Schema (version 1)::

    [scenario]
    schema_version = 1
    family = broad            # broad | narrow | supergaussian | tabulated
    alpha = 0.016             # broad only, 1/nm
    sigma = 6.0               # narrow only, nm
    n_signal = 30000          # N_T
    n_reference = 350000      # N_R; family default when omitted
    seed = 7
    table_wavelengths = 790 805 820   # tabulated only
    table_values = 0.95 0.975 1.0     # tabulated only, transmittance

    [grid]                    # optional; family default window when omitted
    start = 790.0
    stop = 820.0
    n_bins = 121
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .errors import FileFormatError, InvalidParameterError, SchemaVersionError
from .simulate import (
    FAMILIES,
    Scenario,
    scenario_supergaussian_filter,
    scenario_tabulated,
)
from .spectra import (
    DEFAULT_GRID_BINS,
    DEFAULT_GRID_START,
    DEFAULT_GRID_STOP,
    Tabulated,
    WavelengthGrid,
)

CONFIG_SCHEMA_VERSION = 1
SCENARIO_NAMES = ("broad", "narrow", "supergaussian", "tabulated")


@dataclass(frozen=True)
class GridConfig:
    start: float = DEFAULT_GRID_START
    stop: float = DEFAULT_GRID_STOP
    n_bins: int = DEFAULT_GRID_BINS

    def build(self) -> WavelengthGrid:
        return WavelengthGrid.uniform(self.start, self.stop, self.n_bins)


@dataclass(frozen=True)
class ScenarioConfig:
    family: str = "broad"
    n_signal: int = 10_000
    seed: int = 0
    alpha: float | None = None
    sigma: float | None = None
    n_reference: int | None = None
    table_wavelengths: tuple = ()
    table_values: tuple = ()
    grid: GridConfig | None = None

    def validate(self):
        """Raise InvalidParameterError for anything build() would reject."""
        self.build()

    def build(self) -> Scenario:
        grid = None if self.grid is None else self.grid.build()
        kw = {} if self.n_reference is None else {"n_reference": self.n_reference}
        if self.family == "broad":
            if self.alpha is None:
                raise InvalidParameterError("broad scenario needs alpha")
            return FAMILIES["broad"](self.alpha, self.n_signal, self.seed, grid=grid, **kw)
        if self.family == "narrow":
            if self.sigma is None:
                raise InvalidParameterError("narrow scenario needs sigma")
            return FAMILIES["narrow"](self.sigma, self.n_signal, self.seed, grid=grid, **kw)
        if self.family == "supergaussian":
            return scenario_supergaussian_filter(self.n_signal, self.seed, grid=grid, **kw)
        if self.family == "tabulated":
            if not self.table_wavelengths:
                raise InvalidParameterError("tabulated scenario needs a transmittance table")
            table = Tabulated(self.table_wavelengths, self.table_values)
            return scenario_tabulated(table, self.n_signal, self.seed, grid=grid, **kw)
        raise InvalidParameterError(
            f"unknown scenario {self.family!r}; choose from {', '.join(SCENARIO_NAMES)}"
        )


def _floats(text):
    return tuple(float(v) for v in text.split())


def read_scenario_config(path) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise FileFormatError(str(exc), path=path) from None
    if "scenario" not in cp:
        raise FileFormatError("missing [scenario] section", path=path)
    sc = cp["scenario"]
    version = sc.getint("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"config schema_version {version} not supported (expected {CONFIG_SCHEMA_VERSION})",
            path=path,
        )
    try:
        grid = None
        if "grid" in cp:
            g = cp["grid"]
            grid = GridConfig(
                g.getfloat("start", DEFAULT_GRID_START),
                g.getfloat("stop", DEFAULT_GRID_STOP),
                g.getint("n_bins", DEFAULT_GRID_BINS),
            )
        return ScenarioConfig(
            family=sc.get("family", "broad"),
            n_signal=sc.getint("n_signal", 10_000),
            seed=sc.getint("seed", 0),
            alpha=sc.getfloat("alpha") if "alpha" in sc else None,
            sigma=sc.getfloat("sigma") if "sigma" in sc else None,
            n_reference=sc.getint("n_reference") if "n_reference" in sc else None,
            table_wavelengths=_floats(sc.get("table_wavelengths", "")),
            table_values=_floats(sc.get("table_values", "")),
            grid=grid,
        )
    except ValueError as exc:
        raise FileFormatError(f"bad value: {exc}", path=path) from None


def write_scenario_config(cfg: ScenarioConfig, path):
    cp = configparser.ConfigParser()
    sc = {"schema_version": str(CONFIG_SCHEMA_VERSION), "family": cfg.family,
          "n_signal": str(cfg.n_signal), "seed": str(cfg.seed)}
    if cfg.alpha is not None:
        sc["alpha"] = repr(float(cfg.alpha))
    if cfg.sigma is not None:
        sc["sigma"] = repr(float(cfg.sigma))
    if cfg.n_reference is not None:
        sc["n_reference"] = str(cfg.n_reference)
    if cfg.table_wavelengths:
        sc["table_wavelengths"] = " ".join(repr(float(v)) for v in cfg.table_wavelengths)
        sc["table_values"] = " ".join(repr(float(v)) for v in cfg.table_values)
    cp["scenario"] = sc
    if cfg.grid is not None:
        cp["grid"] = {"start": repr(float(cfg.grid.start)), "stop": repr(float(cfg.grid.stop)),
                      "n_bins": str(cfg.grid.n_bins)}
    with open(path, "w") as fh:
        cp.write(fh)


def table_from_arrays(wavelengths, values):
    """Tuples suitable for ScenarioConfig.table_* from array-likes."""
    return tuple(np.asarray(wavelengths, float).tolist()), tuple(np.asarray(values, float).tolist())
