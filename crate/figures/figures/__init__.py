"""Plots of ebamr output CSVs: mass ledgers, Sod profiles and schlieren images."""

from .plots import (
    LEDGER_COLUMNS,
    PROFILE_COLUMNS,
    SCHLIEREN_COLUMNS,
    MissingColumn,
    plot_mass_ledger,
    plot_schlieren,
    plot_sod_profiles,
)

__all__ = [
    "LEDGER_COLUMNS",
    "PROFILE_COLUMNS",
    "SCHLIEREN_COLUMNS",
    "MissingColumn",
    "plot_mass_ledger",
    "plot_schlieren",
    "plot_sod_profiles",
]
