"""Truncated-Wigner trajectory engine for the anharmonic ring.

Randomness enters only through the initial phase-space samples; the flow
itself is the deterministic cubic drift, integrated with fixed-step RK4.
Deterministic reproduction is a hard contract here: trajectory j is seeded
from (master_seed, j), all stepping arithmetic is elementwise, and parallel
runs split the ensemble into contiguous index chunks whose results are
concatenated in index order — so serial and parallel runs agree bit for bit.

Symmetrically-ordered correlators are plain trajectory moments.  The
normally-ordered two-point function is assembled from the symmetric moment
plus a response correction measured by kicking the source and taking
common-random-number central differences in the kick amplitude.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EqualTime, StepMismatch, TimeOffGrid, UnsupportedState
from .operator_algebra import LadderFactor
from .sources import Kick, SmoothSource
from .states import COHERENT, THERMAL, VACUUM, RingParams, SiteState

TIME_SYMMETRIC = "time_symmetric"
TIME_NORMAL_TWO_POINT = "time_normal_two_point"

_LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class InitialStateSpec:
    """Per-site initial states; every kind here has a positive Wigner function."""

    sites: tuple

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        if not self.sites:
            raise UnsupportedState("need at least one site state")
        for s in self.sites:
            if not isinstance(s, SiteState):
                raise UnsupportedState(f"not a site state: {s!r}")

    @property
    def n_sites(self) -> int:
        return len(self.sites)


def sample_initial(spec: InitialStateSpec, rng: np.random.Generator) -> np.ndarray:
    """One phase-space sample per site.

    Coherent states draw alpha + eta with E|eta|^2 = 1/2 (quadrature
    variance 1/4 each); thermal states are centered with E|eta|^2 =
    nbar + 1/2.  Two normal draws per site, real then imaginary.
    """
    out = np.empty(spec.n_sites, dtype=complex)
    for k, s in enumerate(spec.sites):
        x, y = rng.standard_normal(2)
        if s.kind == COHERENT:
            out[k] = s.alpha + 0.5 * (x + 1j * y)
        elif s.kind == VACUUM:
            out[k] = 0.5 * (x + 1j * y)
        elif s.kind == THERMAL:
            sigma = math.sqrt(0.5 * (s.nbar + 0.5))
            out[k] = sigma * (x + 1j * y)
        else:                       # guarded already in SiteState
            raise UnsupportedState(f"cannot sample kind {s.kind!r}")
    return out


def _on_lattice(t: float, t0: float, dt: float) -> bool:
    steps = round((t - t0) / dt)
    return abs(t - (t0 + steps * dt)) <= _LATTICE_TOL


@dataclass(frozen=True)
class EnsembleSpec:
    """Everything needed to (re)build one trajectory ensemble."""

    ring: RingParams
    init: InitialStateSpec
    n_traj: int
    master_seed: int
    dt: float
    t_grid: tuple
    kicks: tuple = ()
    smooth: Optional[SmoothSource] = None
    n_workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        object.__setattr__(self, "kicks", tuple(self.kicks))
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.init.n_sites != self.ring.n_sites:
            raise ValueError("initial state and ring disagree on n_sites")
        grid = self.t_grid
        if len(grid) < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_grid must be non-empty and strictly increasing")
        t0 = grid[0]
        for t in grid:
            if not _on_lattice(t, t0, self.dt):
                raise StepMismatch(f"grid time {t} is not a multiple of dt={self.dt}")
        for k in self.kicks:
            if not 0 <= k.site < self.ring.n_sites:
                raise ValueError(f"kick site {k.site} out of range")
            if not grid[0] <= k.time <= grid[-1]:
                raise ValueError(f"kick time {k.time} outside the evolution window")
            if not _on_lattice(k.time, t0, self.dt):
                raise StepMismatch(f"kick time {k.time} is not on the step lattice")

    def with_extra_kick(self, kick: Kick) -> "EnsembleSpec":
        return EnsembleSpec(self.ring, self.init, self.n_traj, self.master_seed,
                            self.dt, self.t_grid, self.kicks + (kick,),
                            self.smooth, self.n_workers)


@dataclass
class TrajectoryEnsemble:
    """Stored phase-space paths of one ensemble at the grid times."""

    spec: EnsembleSpec
    t_grid: np.ndarray           # (n_t,)
    paths: np.ndarray            # (n_traj, n_t, n_sites) complex

    @property
    def n_traj(self) -> int:
        return self.spec.n_traj

    @property
    def master_seed(self) -> int:
        return self.spec.master_seed

    @property
    def dt(self) -> float:
        return self.spec.dt

    @property
    def kicks(self) -> tuple:
        return self.spec.kicks

    def grid_index(self, t: float) -> int:
        hits = np.nonzero(np.abs(self.t_grid - t) <= _LATTICE_TOL)[0]
        if hits.size == 0:
            raise TimeOffGrid(f"time {t} is not on the stored grid")
        return int(hits[0])


def _drift(a: np.ndarray, ring: RingParams, s: Optional[np.ndarray]) -> np.ndarray:
    """RHS of i da/dt = (w0 - kappa) a + kappa |a|^2 a - J (a_+1 + a_-1) - s."""
    rhs = (ring.omega0 - ring.kappa) * a + ring.kappa * (np.abs(a) ** 2) * a
    if ring.n_sites > 1:
        rhs = rhs - ring.hop_J * (np.roll(a, -1, axis=-1) + np.roll(a, 1, axis=-1))
    if s is not None:
        rhs = rhs - s
    return -1j * rhs


def _advance(a: np.ndarray, ring: RingParams, kicks: Sequence[Kick],
             smooth: Optional[SmoothSource], t_from: float, t_to: float,
             dt: float, record_steps: dict, out: Optional[np.ndarray] = None
             ) -> np.ndarray:
    """March `a` from t_from to t_to in fixed RK4 steps of dt (in place).

    ``record_steps`` maps step index (0 at t_from) to a row of ``out``;
    recording at a node happens before any kick at that node, and kicks at
    t_to itself are left for the next leg.
    """
    n_steps = round((t_to - t_from) / dt)
    kick_steps: dict = {}
    for k in kicks:
        step = round((k.time - t_from) / dt)
        if 0 <= step < n_steps:
            kick_steps.setdefault(step, []).append(k)
    half = 0.5 * dt
    for step in range(n_steps + 1):
        t = t_from + step * dt
        if step in record_steps and out is not None:
            out[:, record_steps[step], :] = a
        if step == n_steps:
            break
        for k in kick_steps.get(step, ()):
            a[..., k.site] += 1j * k.amplitude
        if smooth is None:
            s1 = s2 = s3 = None
        else:
            s1 = smooth.value(t)
            s2 = smooth.value(t + half)
            s3 = smooth.value(t + dt)
        k1 = _drift(a, ring, s1)
        k2 = _drift(a + half * k1, ring, s2)
        k3 = _drift(a + half * k2, ring, s2)
        k4 = _drift(a + dt * k3, ring, s3)
        a += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return a


def _sample_block(spec: EnsembleSpec, indices: range) -> np.ndarray:
    block = np.empty((len(indices), spec.ring.n_sites), dtype=complex)
    for row, j in enumerate(indices):
        seq = np.random.SeedSequence(entropy=spec.master_seed, spawn_key=(j,))
        block[row] = sample_initial(spec.init, np.random.default_rng(seq))
    return block


def build_ensemble(spec: EnsembleSpec) -> TrajectoryEnsemble:
    """Sample, integrate and store every trajectory of ``spec``.

    With n_workers > 1 the ensemble is split into contiguous index chunks
    integrated on a thread pool; results land in preallocated rows, so the
    stored paths are identical to a serial run.
    """
    grid = np.asarray(spec.t_grid)
    t0, t_end = grid[0], grid[-1]
    record_steps = {round((t - t0) / spec.dt): i for i, t in enumerate(grid)}
    paths = np.empty((spec.n_traj, grid.size, spec.ring.n_sites), dtype=complex)

    def run_chunk(indices: range) -> None:
        a = _sample_block(spec, indices)
        out = paths[indices.start:indices.stop]
        _advance(a, spec.ring, spec.kicks, spec.smooth, t0, t_end,
                 spec.dt, record_steps, out)

    chunks = _index_chunks(spec.n_traj, spec.n_workers)
    if len(chunks) == 1:
        run_chunk(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(run_chunk, chunks))
    return TrajectoryEnsemble(spec=spec, t_grid=grid, paths=paths)


def _index_chunks(n: int, n_workers: int) -> list:
    n_workers = max(1, min(n_workers, n))
    bounds = np.linspace(0, n, n_workers + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def integrate_trajectory(alpha0: np.ndarray, ring: RingParams,
                         kicks: Sequence[Kick], smooth: Optional[SmoothSource],
                         t_grid: Sequence[float], dt: float) -> np.ndarray:
    """Integrate a single trajectory; returns (n_t, n_sites) grid values."""
    grid = np.asarray([float(t) for t in t_grid])
    t0 = grid[0]
    for t in grid:
        if not _on_lattice(t, t0, dt):
            raise StepMismatch(f"grid time {t} is not a multiple of dt={dt}")
    for k in kicks:
        if not _on_lattice(k.time, t0, dt):
            raise StepMismatch(f"kick time {k.time} is not on the step lattice")
    record_steps = {round((t - t0) / dt): i for i, t in enumerate(grid)}
    out = np.empty((1, grid.size, len(alpha0)), dtype=complex)
    a = np.asarray(alpha0, dtype=complex).reshape(1, -1).copy()
    _advance(a, ring, kicks, smooth, t0, grid[-1], dt, record_steps, out)
    return out[0]


# -- estimators --------------------------------------------------------------


@dataclass(frozen=True)
class CorrelatorRequest:
    """A moment request: ladder factors plus the ordering they stand in."""

    factors: tuple
    ordering: str

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.ordering not in (TIME_SYMMETRIC, TIME_NORMAL_TWO_POINT):
            raise ValueError(f"unknown ordering {self.ordering!r}")


@dataclass(frozen=True)
class EstimatorResult:
    """Ensemble mean with a componentwise (real/imag) standard error."""

    mean: complex
    std_error: complex
    n_traj: int


def _mean_se(values: np.ndarray) -> "EstimatorResult":
    n = values.size
    mean = complex(values.mean())
    if n > 1:
        se = complex(values.real.std(ddof=1), values.imag.std(ddof=1)) / math.sqrt(n)
    else:
        se = 0j
    return EstimatorResult(mean=mean, std_error=se, n_traj=n)


def _moment_values(ens: TrajectoryEnsemble,
                   factors: Sequence[LadderFactor]) -> np.ndarray:
    v = np.ones(ens.n_traj, dtype=complex)
    for f in factors:
        if not 0 <= f.mode < ens.spec.ring.n_sites:
            raise ValueError(f"site {f.mode} out of range")
        col = ens.paths[:, ens.grid_index(f.time), f.mode]
        v = v * (np.conj(col) if f.dagger else col)
    return v


def estimate_time_symmetric(ens: TrajectoryEnsemble,
                            req: CorrelatorRequest) -> EstimatorResult:
    """Symmetrically-ordered moment: the plain product of path values.

    Equal times are fine here — the trajectory moment is exactly the
    equal-time limit of the symmetric ordering.
    """
    if req.ordering != TIME_SYMMETRIC:
        raise ValueError("estimate_time_symmetric handles time_symmetric requests")
    return _mean_se(_moment_values(ens, req.factors))


# -- response via kicked ensembles -------------------------------------------


@dataclass(frozen=True)
class ResponseEstimate:
    """Kick-derivative estimate with its Richardson diagnostics."""

    value: complex               # Richardson-extrapolated derivative
    std_error: complex
    value_eps: complex           # plain central difference at epsilon
    value_eps_half: complex      # ... and at epsilon/2
    bias_estimate: float         # |value_eps_half - value_eps| / 3
    epsilon: float
    n_traj: int


def amplitude_scale(init: InitialStateSpec) -> float:
    """Typical |alpha| of the initial state (>= 1), used to size kicks."""
    scale = 1.0
    for s in init.sites:
        if s.kind == COHERENT:
            scale = max(scale, abs(s.alpha))
        elif s.kind == THERMAL:
            scale = max(scale, math.sqrt(s.nbar + 0.5))
    return scale


def response_derivative(spec: EnsembleSpec, kick_site: int, kick_time: float,
                        observe_site: int, observe_time: float,
                        observe_dagger: bool,
                        epsilon: Optional[float] = None) -> ResponseEstimate:
    """Functional derivative of a one-point average w.r.t. the source.

    Observing the plain amplitude gives d<a_obs(t_obs)>/ds_kick(t_kick);
    observing the conjugate gives d<a*_obs(t_obs)>/ds*_kick(t_kick).  Both
    come from central differences over kick amplitudes ±eps and ±i eps with
    common random numbers, Richardson-extrapolated from eps and eps/2
    (plain central differences carry an O(eps^2) bias).

    A probe later than the observation cannot influence it: the paths then
    agree exactly and the derivative comes out identically zero.
    """
    ring, dt = spec.ring, spec.dt
    t0 = spec.t_grid[0]
    if epsilon is None:
        epsilon = 1e-3 * amplitude_scale(spec.init)
    for t, what in ((kick_time, "kick"), (observe_time, "observation")):
        if not t0 <= t <= spec.t_grid[-1]:
            raise ValueError(f"{what} time {t} outside the evolution window")
        if not _on_lattice(t, t0, dt):
            raise StepMismatch(f"{what} time {t} is not on the step lattice")
    if not 0 <= kick_site < ring.n_sites or not 0 <= observe_site < ring.n_sites:
        raise ValueError("site index out of range")

    if observe_time <= kick_time:
        # the kick cannot influence an earlier (or simultaneous) observation:
        # kicked paths agree with the base exactly, so the difference is a
        # hard zero — no simulation needed
        return ResponseEstimate(value=0j, std_error=0j, value_eps=0j,
                                value_eps_half=0j, bias_estimate=0.0,
                                epsilon=epsilon, n_traj=spec.n_traj)

    # march the shared base once to the branch point, then fork per amplitude
    base = _sample_block(spec, range(spec.n_traj))
    _advance(base, ring, spec.kicks, spec.smooth, t0, kick_time, dt, {})

    def observed(amp: complex) -> np.ndarray:
        a = base.copy()
        a[:, kick_site] += 1j * amp
        rec = {round((observe_time - kick_time) / dt): 0}
        snap = np.empty((spec.n_traj, 1, ring.n_sites), dtype=complex)
        late = [k for k in spec.kicks if k.time >= kick_time]
        _advance(a, ring, late, spec.smooth, kick_time, observe_time, dt, rec, snap)
        col = snap[:, 0, observe_site]
        return np.conj(col) if observe_dagger else col

    def central(eps: float) -> np.ndarray:
        dx = (observed(eps) - observed(-eps)) / (2.0 * eps)
        dy = (observed(1j * eps) - observed(-1j * eps)) / (2.0 * eps)
        if observe_dagger:
            return 0.5 * (dx + 1j * dy)     # d/ds*
        return 0.5 * (dx - 1j * dy)         # d/ds

    d_coarse = central(epsilon)
    d_fine = central(0.5 * epsilon)
    rich = (4.0 * d_fine - d_coarse) / 3.0
    est = _mean_se(rich)
    coarse = _mean_se(d_coarse)
    fine = _mean_se(d_fine)
    return ResponseEstimate(value=est.mean, std_error=est.std_error,
                            value_eps=coarse.mean, value_eps_half=fine.mean,
                            bias_estimate=abs(fine.mean - coarse.mean) / 3.0,
                            epsilon=epsilon, n_traj=spec.n_traj)


# -- assembled two-point reordering ------------------------------------------


@dataclass(frozen=True)
class TwoPointResult:
    """Normally-ordered two-point value assembled from symmetric + response."""

    value: complex
    std_error: complex
    symmetric: EstimatorResult
    correction: complex
    response: ResponseEstimate


def time_normal_two_point(spec: EnsembleSpec, dag_site: int, dag_time: float,
                          ann_site: int, ann_time: float,
                          epsilon: Optional[float] = None,
                          ens: Optional[TrajectoryEnsemble] = None
                          ) -> TwoPointResult:
    """<A†_dag(t) A_ann(t')> from symmetric moments plus a response term.

    The correction is +(i/2) d<a_ann(t')>/ds_dag(t) when t' > t and
    -(i/2) d<a*_dag(t)>/ds*_ann(t') when t > t'; the opposite-order
    response vanishes by causality and is not simulated.  Equal times are
    rejected — the reordering identity does not hold there.
    """
    if dag_time == ann_time:
        raise EqualTime("the two-point reordering needs distinct times")
    if ens is None:
        ens = build_ensemble(spec)
    sym = estimate_time_symmetric(ens, CorrelatorRequest(
        factors=(LadderFactor(dag_site, True, dag_time),
                 LadderFactor(ann_site, False, ann_time)),
        ordering=TIME_SYMMETRIC))
    if ann_time > dag_time:
        resp = response_derivative(spec, dag_site, dag_time,
                                   ann_site, ann_time, False, epsilon)
        correction = 0.5j * resp.value
    else:
        resp = response_derivative(spec, ann_site, ann_time,
                                   dag_site, dag_time, True, epsilon)
        correction = -0.5j * resp.value
    # (i/2) swaps the roles of the response's component errors
    corr_se = 0.5 * complex(resp.std_error.imag, resp.std_error.real)
    se = complex(math.hypot(sym.std_error.real, corr_se.real),
                 math.hypot(sym.std_error.imag, corr_se.imag))
    return TwoPointResult(value=sym.mean + correction, std_error=se,
                          symmetric=sym, correction=correction, response=resp)


# -- odd-order noise data ------------------------------------------------------


def third_order_cumulants(alpha, kappa: float):
    """Third-order drift cumulants (kappa a / 2, kappa a* / 2).

    Data only: the engine never simulates these — they quantify what the
    quadratic-noise truncation drops.
    """
    alpha = np.asarray(alpha, dtype=complex)
    return 0.5 * kappa * alpha, 0.5 * kappa * np.conj(alpha)


# -- conservation diagnostics ---------------------------------------------------


def classical_energy(a: np.ndarray, ring: RingParams) -> np.ndarray:
    """Classical energy functional per sample (last axis = sites)."""
    n = np.abs(a) ** 2
    e = (ring.omega0 - ring.kappa) * n + 0.5 * ring.kappa * n ** 2
    total = e.sum(axis=-1)
    if ring.n_sites > 1:
        hop = (np.conj(a) * np.roll(a, -1, axis=-1)).sum(axis=-1)
        total = total - 2.0 * ring.hop_J * hop.real
    return total


def conservation_drift(ens: TrajectoryEnsemble) -> tuple:
    """Max |norm(t) - norm(0)| and |energy(t) - energy(0)| over the ensemble.

    Meaningful for source-free ensembles, where both are conserved by the
    exact flow and any drift is integrator error.
    """
    ring = ens.spec.ring
    norms = (np.abs(ens.paths) ** 2).sum(axis=-1)
    energies = classical_energy(ens.paths, ring)
    norm_drift = np.abs(norms - norms[:, :1]).max()
    energy_drift = np.abs(energies - energies[:, :1]).max()
    return float(norm_drift), float(energy_drift)
