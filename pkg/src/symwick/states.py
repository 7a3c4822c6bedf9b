"""Small shared value types: per-site initial states and ring parameters.

Kept free of heavy imports so both the exact oracle and the trajectory
engine can depend on them without depending on each other.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnsupportedState

COHERENT = "coherent"
THERMAL = "thermal"
VACUUM = "vacuum"

_KINDS = (COHERENT, THERMAL, VACUUM)


@dataclass(frozen=True)
class SiteState:
    """Initial state of one mode.

    kind      one of "coherent" (amplitude ``alpha``), "thermal"
              (occupation ``nbar``) or "vacuum".
    """

    kind: str
    alpha: complex = 0j
    nbar: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise UnsupportedState(f"unknown initial-state kind {self.kind!r}")
        if self.kind == THERMAL and self.nbar < 0:
            raise UnsupportedState(f"thermal occupation must be >= 0, got {self.nbar}")


def coherent(alpha: complex) -> SiteState:
    return SiteState(COHERENT, alpha=complex(alpha))


def thermal(nbar: float) -> SiteState:
    return SiteState(THERMAL, nbar=float(nbar))


def vacuum() -> SiteState:
    return SiteState(VACUUM)


@dataclass(frozen=True)
class RingParams:
    """Ring of coupled anharmonic modes: frequency, self-interaction, hopping.

    The neighbour sum is taken mod n_sites; a single site has no hopping
    term at all (self-hopping is excluded).  Note that for n_sites == 2 the
    ring sum visits each bond twice — this is intentional and shared by the
    exact Hamiltonian and the trajectory drift.
    """

    n_sites: int
    omega0: float
    kappa: float
    hop_J: float

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
