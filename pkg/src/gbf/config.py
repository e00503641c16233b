"""Global numerical settings.

The defaults are what every checker uses unless a caller overrides them,
either per call or temporarily through :func:`override`.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, fields


@dataclass
class Settings:
    #: absolute tolerance on residuals
    tol: float = 1e-9
    #: relative singular-value threshold for rank decisions
    rank_rtol: float = 1e-8
    #: sparse Fock coefficients below this magnitude are dropped
    coeff_drop: float = 1e-14
    #: default bosonic Fock truncation
    nmax: int = 6
    #: default bosonic degree cap for anomaly sums
    mmax: int = 12


settings = Settings()


@contextmanager
def override(**changes):
    """Temporarily change fields of the global :data:`settings`."""
    names = {f.name for f in fields(Settings)}
    unknown = set(changes) - names
    if unknown:
        raise KeyError(f"unknown settings: {sorted(unknown)}")
    saved = {k: getattr(settings, k) for k in changes}
    try:
        for k, v in changes.items():
            setattr(settings, k, v)
        yield settings
    finally:
        for k, v in saved.items():
            setattr(settings, k, v)
