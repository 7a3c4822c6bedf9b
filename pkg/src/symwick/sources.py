"""Source-term value types shared by the exact oracle and the trajectory engine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Kick:
    """Instantaneous source spike: amplitude eps on one site at one time.

    A kick adds i*eps to the kicked mode; an observable evaluated exactly
    at the kick time sees the pre-kick state.
    """

    site: int
    time: float
    amplitude: complex


@dataclass(frozen=True)
class SmoothSource:
    """Tabulated smooth drive, linearly interpolated, zero outside the table."""

    times: np.ndarray            # (n_times,), strictly increasing
    values: np.ndarray           # (n_times, n_sites), complex

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or v.ndim != 2 or v.shape[0] != t.size:
            raise ValueError("times must be (n,), values (n, n_sites)")
        if t.size >= 2 and not np.all(np.diff(t) > 0):
            raise ValueError("source times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def n_sites(self) -> int:
        return self.values.shape[1]

    def value(self, t: float) -> np.ndarray:
        if t < self.times[0] or t > self.times[-1]:
            return np.zeros(self.n_sites, dtype=complex)
        re = np.array([np.interp(t, self.times, self.values[:, k].real)
                       for k in range(self.n_sites)])
        im = np.array([np.interp(t, self.times, self.values[:, k].imag)
                       for k in range(self.n_sites)])
        return re + 1j * im


@dataclass(frozen=True)
class SourceProfile:
    """Delta kicks plus an optional smooth tabulated drive."""

    kicks: tuple = ()
    smooth: Optional[SmoothSource] = None

    def __post_init__(self):
        object.__setattr__(self, "kicks", tuple(self.kicks))
