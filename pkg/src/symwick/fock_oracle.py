"""Exact dense Fock-space oracle for small anharmonic rings.

Everything here is meant to be slow-but-exact: dense matrices over a
truncated number basis, propagators from a Hermitian eigendecomposition
(time-dependent source segments by per-substep matrix exponentials), delta
kicks as exact displacement unitaries.  Dimensions are capped so nothing
here silently turns approximate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import (DimensionLimit, DuplicateTime, MissingBranchTag,
                     OrderViolation)
from .operator_algebra import LadderFactor, schwinger_enumerate
from .sources import Kick, SmoothSource, SourceProfile
from .states import COHERENT, THERMAL, VACUUM, RingParams, SiteState

# arrangements for multitime_average
EXPLICIT = "explicit"
DOUBLE_TIME = "double_time"
TIME_SYMMETRIC = "time_symmetric"
TIME_NORMAL = "time_normal"

_ARRANGEMENTS = (EXPLICIT, DOUBLE_TIME, TIME_SYMMETRIC, TIME_NORMAL)

DEFAULT_DIM_LIMIT = 4096


@dataclass(frozen=True)
class BHParams:
    """Ring parameters plus the per-site number cutoff for the dense basis."""

    n_sites: int
    omega0: float
    kappa: float
    hop_J: float
    cutoff: int
    dim_limit: int = DEFAULT_DIM_LIMIT

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.dim > self.dim_limit:
            raise DimensionLimit(
                f"Fock dimension {self.dim} exceeds the limit {self.dim_limit}")

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.n_sites

    def ring(self) -> RingParams:
        return RingParams(self.n_sites, self.omega0, self.kappa, self.hop_J)


class FockBasis:
    """Number basis |n_0 ... n_{N-1}> in mixed-radix order (site 0 most significant)."""

    def __init__(self, n_sites: int, cutoff: int):
        self.n_sites = n_sites
        self.cutoff = cutoff
        self.size = (cutoff + 1) ** n_sites

    def occupations(self, index: int) -> tuple:
        occ = []
        radix = self.cutoff + 1
        for _ in range(self.n_sites):
            occ.append(index % radix)
            index //= radix
        return tuple(reversed(occ))

    def index_of(self, occ: Sequence[int]) -> int:
        if len(occ) != self.n_sites:
            raise ValueError(f"expected {self.n_sites} occupation numbers")
        idx = 0
        for n in occ:
            if not 0 <= n <= self.cutoff:
                raise ValueError(f"occupation {n} outside [0, {self.cutoff}]")
            idx = idx * (self.cutoff + 1) + n
        return idx


@dataclass
class DenseOperator:
    """Thin wrapper over a dense complex matrix."""

    mat: np.ndarray

    def dag(self) -> "DenseOperator":
        return DenseOperator(self.mat.conj().T)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.mat @ other.mat)

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.mat + other.mat)

    def __rmul__(self, scalar: complex) -> "DenseOperator":
        return DenseOperator(scalar * self.mat)

    def expect(self, rho: np.ndarray) -> complex:
        return complex(np.trace(rho @ self.mat))


def _single_mode_a(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(complex)


def site_annihilators(p: BHParams) -> list:
    """Dense a_k for every site, kron-embedded to the full basis."""
    d = p.cutoff + 1
    a1 = _single_mode_a(d)
    eye = np.eye(d, dtype=complex)
    ops = []
    for k in range(p.n_sites):
        m = np.array([[1.0 + 0j]])
        for j in range(p.n_sites):
            m = np.kron(m, a1 if j == k else eye)
        ops.append(m)
    return ops


def build_hamiltonian(p: BHParams) -> DenseOperator:
    """H = sum_k [w0 n_k + (kappa/2) a†_k² a_k² - J (a†_k a_{k+1} + h.c.)].

    Neighbour indices run mod n_sites; a single site carries no hopping.
    """
    if p.dim > p.dim_limit:
        raise DimensionLimit(
            f"Fock dimension {p.dim} exceeds the limit {p.dim_limit}")
    ann = site_annihilators(p)
    h = np.zeros((p.dim, p.dim), dtype=complex)
    for k in range(p.n_sites):
        ak = ann[k]
        adk = ak.conj().T
        h += p.omega0 * (adk @ ak)
        h += 0.5 * p.kappa * (adk @ adk @ ak @ ak)
    if p.n_sites > 1:
        for k in range(p.n_sites):
            ak1 = ann[(k + 1) % p.n_sites]
            h -= p.hop_J * (ann[k].conj().T @ ak1 + ak1.conj().T @ ann[k])
    return DenseOperator(h)


# -- initial states ---------------------------------------------------------


def _coherent_vector(alpha: complex, dim: int) -> np.ndarray:
    # called with alpha != 0 only; renormalized after truncation
    n = np.arange(dim)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    amps = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact)
    return amps / np.linalg.norm(amps)


def _site_density(state: SiteState, dim: int) -> np.ndarray:
    if state.kind == VACUUM or (state.kind == COHERENT and state.alpha == 0):
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    if state.kind == COHERENT:
        v = _coherent_vector(state.alpha, dim)
        return np.outer(v, v.conj())
    if state.kind == THERMAL:
        if state.nbar == 0:
            rho = np.zeros((dim, dim), dtype=complex)
            rho[0, 0] = 1.0
            return rho
        q = state.nbar / (1.0 + state.nbar)
        w = q ** np.arange(dim)
        return np.diag(w / w.sum()).astype(complex)
    raise AssertionError(f"unreachable kind {state.kind}")   # guarded in SiteState


@dataclass
class InitialDensity:
    """Product density matrix over the truncated basis (trace renormalized)."""

    rho: np.ndarray
    n_sites: int
    cutoff: int

    @classmethod
    def from_sites(cls, sites: Sequence[SiteState], p: BHParams) -> "InitialDensity":
        if len(sites) != p.n_sites:
            raise ValueError(f"need {p.n_sites} site states, got {len(sites)}")
        d = p.cutoff + 1
        rho = np.array([[1.0 + 0j]])
        for s in sites:
            rho = np.kron(rho, _site_density(s, d))
        rho /= np.trace(rho).real
        cls._validate(rho)
        return cls(rho=rho, n_sites=p.n_sites, cutoff=p.cutoff)

    @staticmethod
    def _validate(rho: np.ndarray, tol: float = 1e-12) -> None:
        if abs(np.trace(rho) - 1.0) > tol:
            raise ValueError("density trace deviates from 1")
        if np.abs(rho - rho.conj().T).max() > tol:
            raise ValueError("density is not Hermitian")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density is not positive semidefinite")

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.rho))


def _tie_break_variants(factors):
    """Strict-rank refinements of a factor tuple with possibly tied times.

    The symmetric arrangement is continuous in its time arguments, so at a
    tie it equals the average over every infinitesimal way of breaking the
    tie.  Each variant stamps consecutive ``generic_order`` ranks (the
    physical times, which drive the propagators, stay untouched); ties
    contribute one variant per within-group permutation.
    """
    groups: dict = {}
    for f in factors:
        groups.setdefault(f.time, []).append(f)
    if all(len(g) == 1 for g in groups.values()):
        yield tuple(factors)
        return
    blocks = [groups[t] for t in sorted(groups)]
    for combo in itertools.product(*(itertools.permutations(b) for b in blocks)):
        flat = [f for block in combo for f in block]
        yield tuple(replace(f, generic_order=k) for k, f in enumerate(flat))


# -- evolution ---------------------------------------------------------------


class OracleSession:
    """Exact evolution + multitime averages for one (params, state, source).

    Propagators U(0 -> t) are cached; kicks strictly before t are included,
    a kick exactly at t is not (so an observable AT the kick time sees the
    pre-kick state).
    """

    def __init__(self, p: BHParams, rho0: InitialDensity,
                 src: Optional[SourceProfile] = None,
                 substep_dt: float = 1e-3):
        if rho0.n_sites != p.n_sites or rho0.cutoff != p.cutoff:
            raise ValueError("initial density basis does not match params")
        self.p = p
        self.rho0 = rho0.rho
        self.src = src or SourceProfile()
        self.substep_dt = float(substep_dt)
        self.ann = site_annihilators(p)
        h = build_hamiltonian(p).mat
        self._evals, self._evecs = np.linalg.eigh(h)
        self._u_cache: dict = {0.0: np.eye(p.dim, dtype=complex)}
        self._heis_cache: dict = {}
        self._kick_u: dict = {}
        for kick in self.src.kicks:
            if not 0 <= kick.site < p.n_sites:
                raise ValueError(f"kick site {kick.site} out of range")

    # propagator pieces ----------------------------------------------------

    def _free_segment(self, ta: float, tb: float) -> np.ndarray:
        """U for [ta, tb] with no kicks inside; handles the smooth drive."""
        if tb == ta:
            return np.eye(self.p.dim, dtype=complex)
        smooth = self.src.smooth
        if smooth is None:
            phase = np.exp(-1j * self._evals * (tb - ta))
            return (self._evecs * phase) @ self._evecs.conj().T
        n = max(1, int(np.ceil((tb - ta) / self.substep_dt)))
        delta = (tb - ta) / n
        h0 = (self._evecs * self._evals) @ self._evecs.conj().T
        u = np.eye(self.p.dim, dtype=complex)
        for i in range(n):
            tm = ta + (i + 0.5) * delta
            s = smooth.value(tm)
            hs = h0.copy()
            for k in range(self.p.n_sites):
                hs -= self.ann[k].conj().T * s[k] + self.ann[k] * np.conj(s[k])
            u = scipy.linalg.expm(-1j * hs * delta) @ u
        return u

    def _kick_unitary(self, kick: Kick) -> np.ndarray:
        key = (kick.site, kick.amplitude)
        if key not in self._kick_u:
            ak = self.ann[kick.site]
            gen = ak.conj().T * kick.amplitude + ak * np.conj(kick.amplitude)
            self._kick_u[key] = scipy.linalg.expm(1j * gen)
        return self._kick_u[key]

    def propagator(self, t: float) -> np.ndarray:
        """U(0 -> t) including kicks at times strictly below t."""
        t = float(t)
        if t < 0:
            raise ValueError("propagator times must be >= 0")
        if t in self._u_cache:
            return self._u_cache[t]
        events = sorted({k.time for k in self.src.kicks if 0.0 < k.time < t})
        u = np.eye(self.p.dim, dtype=complex)
        prev = 0.0
        for te in events + [t]:
            u = self._free_segment(prev, te) @ u
            for kick in self.src.kicks:
                if kick.time == te and te < t:
                    u = self._kick_unitary(kick) @ u
            prev = te
        # kicks exactly at time 0 fire before any evolution
        for kick in self.src.kicks:
            if kick.time == 0.0 and t > 0.0:
                u = u @ self._kick_unitary(kick)
        self._u_cache[t] = u
        return u

    def unitarity_defect(self, t: float) -> float:
        u = self.propagator(t)
        return float(np.abs(u.conj().T @ u - np.eye(self.p.dim)).max())

    def heisenberg(self, site: int, dagger: bool, t: float) -> np.ndarray:
        key = (site, dagger, float(t))
        if key not in self._heis_cache:
            u = self.propagator(t)
            op = self.ann[site].conj().T if dagger else self.ann[site]
            self._heis_cache[key] = u.conj().T @ op @ u
        return self._heis_cache[key]

    def state_at(self, t: float) -> np.ndarray:
        u = self.propagator(t)
        return u @ self.rho0 @ u.conj().T

    # averages ---------------------------------------------------------------

    def _word_average(self, word: Sequence[LadderFactor]) -> complex:
        m = None
        for f in word:
            h = self.heisenberg(f.mode, f.dagger, f.time)
            m = h if m is None else m @ h
        if m is None:
            return 1.0 + 0j
        return complex(np.trace(self.rho0 @ m))

    def average(self, factors: Sequence[LadderFactor], arrangement: str) -> complex:
        """Multitime average of the given factors in the given arrangement."""
        factors = tuple(factors)
        for f in factors:
            if not 0 <= f.mode < self.p.n_sites:
                raise ValueError(f"site {f.mode} out of range")
        if arrangement not in _ARRANGEMENTS:
            raise ValueError(f"unknown arrangement {arrangement!r}")
        if arrangement == EXPLICIT:
            return self._word_average(factors)
        if arrangement == DOUBLE_TIME:
            minus = [f for f in factors if f.branch == "-"]
            plus = [f for f in factors if f.branch == "+"]
            if len(minus) + len(plus) != len(factors):
                raise MissingBranchTag(
                    "double-time arrangement needs a branch tag on every factor")
            for group in (minus, plus):
                times = [f.time for f in group]
                if len(set(times)) != len(times):
                    raise DuplicateTime("equal times on one branch are ambiguous")
            word = sorted(minus, key=lambda f: f.time) \
                + sorted(plus, key=lambda f: -f.time)
            return self._word_average(word)
        if arrangement == TIME_SYMMETRIC:
            acc = 0j
            count = 0
            for variant in _tie_break_variants(factors):
                for mono in schwinger_enumerate(variant):
                    acc += self._word_average(mono.factors)
                    count += 1
            return acc / count
        # TIME_NORMAL: creations (ascending) left of annihilations (descending)
        cre = sorted((f for f in factors if f.dagger), key=lambda f: f.time)
        ann = sorted((f for f in factors if not f.dagger), key=lambda f: -f.time)
        return self._word_average(tuple(cre) + tuple(ann))

    def kubo_response(self, probe_site: int, t_probe: float,
                      source_site: int, t_source: float) -> complex:
        """Exact linear response i <[A_probe(t_probe), A†_source(t_source)]>.

        Defined for t_probe > t_source only (the equal-time point belongs
        to neither ordering); earlier probes raise OrderViolation.
        """
        if t_probe <= t_source:
            raise OrderViolation(
                f"response needs t_probe > t_source, got {t_probe} <= {t_source}")
        ap = self.heisenberg(probe_site, False, t_probe)
        ads = self.heisenberg(source_site, True, t_source)
        comm = ap @ ads - ads @ ap
        return 1j * complex(np.trace(self.rho0 @ comm))


def evolve(rho: InitialDensity, t0: float, t1: float, p: BHParams,
           src: Optional[SourceProfile] = None,
           substep_dt: float = 1e-3) -> InitialDensity:
    """Advance a density matrix from t0 to t1 (kicks in [t0, t1) included)."""
    if t1 < t0:
        raise ValueError("evolve runs forward in time")
    session = OracleSession(p, rho, src, substep_dt)
    u0 = session.propagator(t0)
    u1 = session.propagator(t1)
    u = u1 @ u0.conj().T
    return InitialDensity(u @ rho.rho @ u.conj().T, p.n_sites, p.cutoff)


def multitime_average(rho: InitialDensity, factors: Sequence[LadderFactor],
                      arrangement: str, p: BHParams,
                      src: Optional[SourceProfile] = None,
                      substep_dt: float = 1e-3) -> complex:
    """One-shot multitime average (see :meth:`OracleSession.average`)."""
    return OracleSession(p, rho, src, substep_dt).average(factors, arrangement)


def kubo_response_exact(probe_site: int, t_probe: float,
                        source_site: int, t_source: float,
                        p: BHParams, rho: InitialDensity) -> complex:
    """One-shot exact Kubo response (see :meth:`OracleSession.kubo_response`)."""
    return OracleSession(p, rho).kubo_response(probe_site, t_probe,
                                               source_site, t_source)
