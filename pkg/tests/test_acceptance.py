"""Acceptance gate: nine end-to-end checks, one printed verdict line each.

Every check prints ``ACCEPTANCE <n> <name>: PASS/FAIL (<detail>)`` past the
capture plumbing, so a plain ``pytest tests/test_acceptance.py`` doubles as
a report.  The trajectory checks share a single 10^4-trajectory ensemble
and two exact-diagonalization sessions, built lazily so the first check
that needs them pays (and times) the construction.

Randomized checks run from fixed seeds: the whole gate is deterministic,
and the statistical bands (3 standard errors + finite-difference bias)
were sized against the frozen draws, not tuned per case.
"""

import time

import numpy as np
import pytest

from symwick import (
    BHParams,
    ContractionKernel,
    CorrelatorRequest,
    EnsembleSpec,
    FreeFieldConvention,
    InitialDensity,
    InitialStateSpec,
    KernelSet,
    OperatorMonomial,
    OperatorSum,
    OracleSession,
    Regularization,
    RingParams,
    a,
    adag,
    branch_ordered_product,
    build_ensemble,
    coherent,
    conjugation_check,
    conservation_drift,
    decompose_check,
    estimate_time_symmetric,
    max_coeff_deviation,
    normal_form,
    reduce_free_field,
    response_derivative,
    retarded_green,
    schwinger_enumerate,
    time_normal_two_point,
    time_symmetric_expand,
    vacuum,
    wick_expand,
)
from symwick.contractions import RETARDED
from symwick.fock_oracle import EXPLICIT, TIME_NORMAL
from symwick.fock_oracle import TIME_SYMMETRIC as ORACLE_SYMMETRIC
from symwick.wigner_engine import TIME_SYMMETRIC

# The two-site ring every trajectory check runs on: one coherent site, one
# empty, weak Kerr, unit hopping.
RING = RingParams(n_sites=2, omega0=0.0, kappa=0.1, hop_J=1.0)
INIT = InitialStateSpec(sites=(coherent(1.2), vacuum()))
GRID = tuple(np.round(np.linspace(0.0, 2.0, 21), 12))
SPEC = EnsembleSpec(ring=RING, init=INIT, n_traj=10_000, master_seed=314,
                    dt=1e-3, t_grid=GRID)

_CACHE: dict = {}


def _ens():
    if "ens" not in _CACHE:
        _CACHE["ens"] = build_ensemble(SPEC)
    return _CACHE["ens"]


def _oracle(cutoff: int) -> OracleSession:
    key = ("oracle", cutoff)
    if key not in _CACHE:
        p = BHParams(n_sites=2, omega0=0.0, kappa=0.1, hop_J=1.0,
                     cutoff=cutoff)
        rho = InitialDensity.from_sites((coherent(1.2), vacuum()), p)
        _CACHE[key] = OracleSession(p, rho)
    return _CACHE[key]


def _report(capsys, num: int, name: str, ok: bool, detail: str):
    with capsys.disabled():
        verdict = "PASS" if ok else "FAIL"
        print(f"ACCEPTANCE {num} {name}: {verdict} ({detail})", flush=True)


# -- 1: symmetric-contraction expansion vs literal branch product ------------

def test_1_wick_equivalence(capsys):
    rng = np.random.default_rng(20260819)
    t0 = time.perf_counter()
    worst = 0.0
    for case in range(500):
        omega0 = (0.0, 1.0, 2.7)[case % 3]
        conv = FreeFieldConvention(omega0=omega0)
        n = int(rng.integers(2, 7))
        times = rng.uniform(0.0, 5.0, size=n)
        while len(set(times.tolist())) < n:
            times = rng.uniform(0.0, 5.0, size=n)
        k = int(rng.integers(0, n + 1))
        minus = [a(0, t, "-") if rng.integers(0, 2) else adag(0, t, "-")
                 for t in times[:k]]
        plus = [a(0, t, "+") if rng.integers(0, 2) else adag(0, t, "+")
                for t in times[k:]]
        lhs = wick_expand(minus, plus, KernelSet(omega0))
        rhs = branch_ordered_product(minus, plus)
        worst = max(worst, max_coeff_deviation(lhs, rhs, conv))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 30.0
    _report(capsys, 1, "wick equivalence", ok,
            f"500 cases <=6 factors, max dev {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-12
    assert elapsed < 30.0


# -- 2: the ordering recursion is the equal-weight branch average ------------

def test_2_ordering_identities(capsys):
    rng = np.random.default_rng(77)
    checked = 0
    for n in range(1, 7):
        for _ in range(8):
            times = rng.uniform(0.0, 5.0, size=n)
            while len(set(times.tolist())) < n:
                times = rng.uniform(0.0, 5.0, size=n)
            factors = tuple(
                a(0, t) if rng.integers(0, 2) else adag(0, t) for t in times)
            words = schwinger_enumerate(factors)
            assert len(words) == 2 ** (n - 1)
            mean = OperatorSum(
                [OperatorMonomial(w.coeff / len(words), w.factors)
                 for w in words])
            # exact coefficient equality, not a tolerance
            assert time_symmetric_expand(factors) == mean
            checked += 1

    # two pinned three-factor cases with their full word sets
    fs = (a(0, 3.0), a(0, 2.0), adag(0, 1.0))
    got = {tuple(w.factors) for w in schwinger_enumerate(fs)}
    want_desc = {
        (a(0, 3.0), a(0, 2.0), adag(0, 1.0)),
        (a(0, 2.0), a(0, 3.0), adag(0, 1.0)),
        (adag(0, 1.0), a(0, 3.0), a(0, 2.0)),
        (adag(0, 1.0), a(0, 2.0), a(0, 3.0)),
    }
    fs2 = (a(0, 3.0), a(0, 1.0), adag(0, 2.0))
    got2 = {tuple(w.factors) for w in schwinger_enumerate(fs2)}
    want_mix = {
        (a(0, 3.0), adag(0, 2.0), a(0, 1.0)),
        (a(0, 1.0), a(0, 3.0), adag(0, 2.0)),
        (adag(0, 2.0), a(0, 3.0), a(0, 1.0)),
        (a(0, 1.0), adag(0, 2.0), a(0, 3.0)),
    }
    ok = got == want_desc and got2 == want_mix
    _report(capsys, 2, "ordering identities", ok,
            f"{checked} random lists N<=6 exact, 2 pinned word sets")
    assert got == want_desc
    assert got2 == want_mix


# -- 3: free-field closed form ------------------------------------------------

def test_3_free_field_reduction(capsys):
    rng = np.random.default_rng(31)
    worst = 0.0
    for case in range(200):
        omega0 = (0.0, 1.1, 2.7)[case % 3]
        conv = FreeFieldConvention(omega0=omega0)
        n = int(rng.integers(1, 6))
        times = rng.uniform(0.0, 5.0, size=n)
        while len(set(times.tolist())) < n:
            times = rng.uniform(0.0, 5.0, size=n)
        factors = [a(0, t) if rng.integers(0, 2) else adag(0, t)
                   for t in times]
        phase, weyl = reduce_free_field(factors, conv)
        worst = max(worst, max_coeff_deviation(
            time_symmetric_expand(factors), phase * weyl, conv))

    # equal-time cross-check: (A A A† + A† A A)/2 == A† A A + A
    conv = FreeFieldConvention(omega0=1.1)
    sym = 0.5 * (OperatorSum.monomial(1.0, (a(0), a(0), adag(0)))
                 + OperatorSum.monomial(1.0, (adag(0), a(0), a(0))))
    want = (OperatorSum.monomial(1.0, (adag(0), a(0), a(0)))
            + OperatorSum.monomial(1.0, (a(0),)))
    mixed_dev = max_coeff_deviation(sym, want, conv)
    ok = worst < 1e-12 and mixed_dev < 1e-14
    _report(capsys, 3, "free-field reduction", ok,
            f"200 cases max dev {worst:.2e}, mixed-order dev {mixed_dev:.1e}")
    assert worst < 1e-12
    assert mixed_dev < 1e-14


# -- 4: kernel decomposition, conjugation, regularized limit ------------------

def test_4_contraction_identities(capsys):
    # 1000 points, exact origin included, none pathologically close to it
    ts = np.concatenate([-np.linspace(5.0, 0.01, 499), [0.0],
                         np.linspace(0.01, 5.0, 500)])
    worst = 0.0
    for omega0 in (0.0, 1.3, 2.7):
        worst = max(worst, decompose_check(ts, omega0),
                    conjugation_check(ts, omega0))

    sharp = ContractionKernel(RETARDED, 1.3)
    sharp_vals = np.asarray(retarded_green(ts, sharp))
    errs = []
    for gamma in (10.0, 100.0, 1000.0):
        reg = ContractionKernel(RETARDED, 1.3, Regularization(gamma, m=2))
        assert retarded_green(0.0, reg) == 0.0
        errs.append(float(np.abs(np.asarray(retarded_green(ts, reg))
                                 - sharp_vals).max()))
    decreasing = errs[0] > errs[1] > errs[2]
    ok = worst < 1e-14 and decreasing and errs[2] < 1e-3
    _report(capsys, 4, "contraction identities", ok,
            f"max dev {worst:.2e}; ramp errors "
            f"{errs[0]:.2f} > {errs[1]:.2f} > {errs[2]:.1e}")
    assert worst < 1e-14
    assert decreasing
    assert errs[2] < 1e-3


# -- 5: the symmetric ordering is continuous as times cross -------------------

def test_5_crossing_continuity(capsys):
    t0 = time.perf_counter()
    p = BHParams(n_sites=1, omega0=1.0, kappa=0.3, hop_J=0.0, cutoff=10)
    sess = OracleSession(p, InitialDensity.from_sites((coherent(0.6),), p))
    t1, t3, d = 1.5, 0.7, 1e-6

    def f(t2):
        return sess.average((a(0, t1), a(0, t2), adag(0, t3)),
                            ORACLE_SYMMETRIC)

    # linear extrapolation from each side onto the crossing point
    left = 2.0 * f(t3 - d) - f(t3 - 2 * d)
    right = 2.0 * f(t3 + d) - f(t3 + 2 * d)
    gap = abs(left - right)
    elapsed = time.perf_counter() - t0
    ok = gap < 1e-8 and elapsed < 60.0 and abs(right) > 0.1
    _report(capsys, 5, "crossing continuity", ok,
            f"one-sided gap {gap:.2e} at |value| {abs(right):.2f}, "
            f"{elapsed:.1f}s")
    assert gap < 1e-8
    assert abs(right) > 0.1        # the quantity being continuous is nonzero
    assert elapsed < 60.0


# -- 6: trajectory moments vs exact diagonalization ---------------------------

def test_6_trajectories_vs_oracle(capsys):
    t0 = time.perf_counter()
    ens = _ens()
    o8, o10 = _oracle(8), _oracle(10)
    conv_gap = 0.0
    rows = []

    for t in (0.0, 0.5, 1.0, 1.5, 2.0):
        for k in (0, 1):
            req = CorrelatorRequest(factors=(adag(k, t), a(k, t)),
                                    ordering=TIME_SYMMETRIC)
            est = estimate_time_symmetric(ens, req)
            tw = est.mean.real - 0.5          # subtract the half quantum
            band = 3.0 * est.std_error.real
            word = (adag(k, t), a(k, t))
            exact = o8.average(word, EXPLICIT).real
            conv_gap = max(conv_gap,
                           abs(exact - o10.average(word, EXPLICIT).real))
            rows.append((abs(tw - exact), band))

    for (ta, tb) in ((0.5, 1.5), (1.0, 2.0), (0.5, 2.0), (2.0, 1.0)):
        req = CorrelatorRequest(factors=(adag(0, ta), a(0, tb)),
                                ordering=TIME_SYMMETRIC)
        est = estimate_time_symmetric(ens, req)
        word = (adag(0, ta), a(0, tb))
        exact = o8.average(word, ORACLE_SYMMETRIC)
        conv_gap = max(conv_gap,
                       abs(exact - o10.average(word, ORACLE_SYMMETRIC)))
        rows.append((abs(est.mean.real - exact.real),
                     3.0 * est.std_error.real))
        rows.append((abs(est.mean.imag - exact.imag),
                     3.0 * est.std_error.imag))

    elapsed = time.perf_counter() - t0
    inside = all(d <= band and d <= 0.05 for d, band in rows)
    worst = max(d / band for d, band in rows)
    ok = inside and conv_gap < 1e-3 and elapsed < 300.0
    _report(capsys, 6, "trajectories vs oracle", ok,
            f"{len(rows)} comparisons, worst |d|/3se {worst:.2f}, "
            f"cutoff 8-vs-10 gap {conv_gap:.1e}, {elapsed:.1f}s")
    for d, band in rows:
        assert d <= band
        assert d <= 0.05
    assert conv_gap < 1e-3          # cutoff 8 is converged at this tolerance
    assert elapsed < 300.0


# -- 7: kick response vs exact commutator, causality --------------------------

def test_7_response_and_causality(capsys):
    oracle = _oracle(10)
    rng = np.random.default_rng(20260819)
    pairs = []
    while len(pairs) < 10:
        i = int(rng.integers(50, 1900))
        j = int(rng.integers(i + 100, 2001))
        ks = int(rng.integers(0, 2))
        osite = int(rng.integers(0, 2))
        pairs.append((ks, round(i * 1e-3, 12), osite, round(j * 1e-3, 12)))

    worst = 0.0
    for ks, tk, osite, tob in pairs:
        est = response_derivative(SPEC, ks, tk, osite, tob, False)
        exact = oracle.kubo_response(osite, tob, ks, tk)
        se = np.hypot(est.std_error.real, est.std_error.imag)
        band = 3.0 * se + est.bias_estimate
        worst = max(worst, abs(est.value - exact) / band)
        assert abs(est.value - exact) <= band

    # a probe later than the observation produces exactly nothing
    for ks, tk, osite, tob in (pairs[0], pairs[3]):
        back = response_derivative(SPEC, ks, tob, osite, tk, False)
        assert back.value == 0j
        assert back.std_error == 0j

    # t' just above t: unit response on the kicked site, none across
    same = response_derivative(SPEC, 0, 0.5, 0, 0.505, False)
    cross = response_derivative(SPEC, 0, 0.5, 1, 0.505, False)
    lim_same = abs(same.value - 1j)
    lim_cross = abs(cross.value)
    ok = worst <= 1.0 and lim_same <= 0.02 and lim_cross <= 0.02
    _report(capsys, 7, "kick response", ok,
            f"10 pairs worst |d|/band {worst:.2f}, reversed exactly 0, "
            f"limit gaps {lim_same:.1e}/{lim_cross:.1e}")
    assert lim_same <= 0.02
    assert lim_cross <= 0.02


# -- 8: assembled normal order vs oracle and vs the coherent closed form ------

def test_8_two_point_reordering(capsys):
    ens = _ens()
    o8 = _oracle(8)
    worst = 0.0
    for (td, ta_) in ((0.5, 1.5), (1.5, 0.5)):
        tn = time_normal_two_point(SPEC, 0, td, 0, ta_, ens=ens)
        exact = o8.average((adag(0, td), a(0, ta_)), TIME_NORMAL)
        dre = abs(tn.value.real - exact.real)
        dim = abs(tn.value.imag - exact.imag)
        worst = max(worst, dre / (3.0 * tn.std_error.real),
                    dim / (3.0 * tn.std_error.imag))
        assert dre <= 3.0 * tn.std_error.real
        assert dim <= 3.0 * tn.std_error.imag

    # no interaction: the coherent value and the half-quantum offset are exact
    ring0 = RingParams(n_sites=1, omega0=1.3, kappa=0.0, hop_J=0.0)
    spec0 = EnsembleSpec(ring=ring0,
                         init=InitialStateSpec(sites=(coherent(1.2),)),
                         n_traj=4000, master_seed=2024, dt=1e-3, t_grid=GRID)
    ens0 = build_ensemble(spec0)
    offset_err = 0.0
    for (td, ta_) in ((0.5, 1.5), (1.5, 0.5)):
        tn = time_normal_two_point(spec0, 0, td, 0, ta_, ens=ens0)
        want = 1.44 * np.exp(1.3j * (td - ta_))
        assert abs(tn.value.real - want.real) <= 3.0 * tn.std_error.real
        assert abs(tn.value.imag - want.imag) <= 3.0 * tn.std_error.imag
        # symmetric minus normal should be half a quantum, rotated
        half = -0.5 * np.exp(1.3j * (td - ta_))
        offset_err = max(offset_err, abs(tn.correction - half) / 0.5)

    ok = worst <= 1.0 and offset_err < 0.01
    _report(capsys, 8, "two-point reordering", ok,
            f"oracle worst |d|/3se {worst:.2f}, "
            f"half-quantum offset err {offset_err:.1e}")
    assert offset_err < 0.01


# -- 9: conserved quantities and bitwise reproducibility ----------------------

def test_9_conservation_determinism(capsys):
    long_spec = EnsembleSpec(ring=RING, init=INIT, n_traj=300, master_seed=99,
                             dt=1e-3,
                             t_grid=tuple(float(k) for k in range(11)))
    norm_drift, energy_drift = conservation_drift(build_ensemble(long_spec))

    base = dict(ring=RING, init=INIT, n_traj=2001, master_seed=314, dt=1e-3,
                t_grid=GRID)
    serial = build_ensemble(EnsembleSpec(n_workers=1, **base))
    quad = build_ensemble(EnsembleSpec(n_workers=4, **base))
    bitwise = bool(np.array_equal(serial.paths, quad.paths))

    ok = norm_drift < 1e-8 and energy_drift < 1e-8 and bitwise
    _report(capsys, 9, "conservation and determinism", ok,
            f"norm drift {norm_drift:.1e}, energy drift {energy_drift:.1e}, "
            f"serial==4 workers {bitwise}")
    assert norm_drift < 1e-8
    assert energy_drift < 1e-8
    assert bitwise
