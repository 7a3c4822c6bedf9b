"""Branch contraction kernels, the retarded kernel and their identities.

The four branch kernels are returned as the contraction values -iG(t),
with t the annihilation time minus the creation time and the step function
vanishing at zero argument.  Optional regularization (only meaningful for
the retarded kernel and the diagonal branch pair built from it) multiplies
the retarded kernel by (1 - e^{-gamma t})^m, which kills the t -> 0+ jump
while converging pointwise to the sharp kernel as gamma grows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import EqualRank, KindMismatch

PP = "PP"
MM = "MM"
MP = "MP"
PM = "PM"
RETARDED = "Retarded"

_BRANCH_KINDS = (PP, MM, MP, PM)
_ALL_KINDS = _BRANCH_KINDS + (RETARDED,)

#: kinds whose step structure admits regularization
_REGULARIZABLE = (PP, MM, RETARDED)


@dataclass(frozen=True)
class Regularization:
    """Smoothing parameters: (1 - e^{-gamma t})^m ramp on the retarded kernel."""

    gamma: float
    m: int = 2

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")


def default_regularization(omega0: float) -> Regularization:
    """Stiff default: gamma = 1e3 * max(|omega0|, 1), quadratic ramp."""
    return Regularization(gamma=1e3 * max(abs(omega0), 1.0), m=2)


@dataclass(frozen=True)
class ContractionKernel:
    """A kernel kind at frequency ``omega0``, optionally regularized."""

    kind: str
    omega0: float
    regularization: Optional[Regularization] = None

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise KindMismatch(f"unknown kernel kind {self.kind!r}")
        if self.regularization is not None and self.kind not in _REGULARIZABLE:
            raise KindMismatch(
                f"regularization does not apply to the {self.kind} kernel")


def _theta(t):
    """Unit step with theta(0) = 0, elementwise."""
    return np.where(np.asarray(t) > 0, 1.0, 0.0)


def _eps(t):
    """Odd half-step: +1/2 for t > 0, -1/2 for t < 0, 0 at 0."""
    t = np.asarray(t)
    return 0.5 * (np.where(t > 0, 1.0, 0.0) - np.where(t < 0, 1.0, 0.0))


def _maybe_scalar(arr, scalar_in: bool):
    return complex(arr.reshape(-1)[0]) if scalar_in else arr


def retarded_green(t, kernel: ContractionKernel):
    """Retarded kernel i theta(t) e^{-i omega0 t}, optionally ramp-regularized.

    Accepts scalars or arrays; the value at t = 0 is exactly 0 either way.
    """
    if kernel.kind != RETARDED:
        raise KindMismatch(f"retarded_green needs a Retarded kernel, got {kernel.kind}")
    t_arr = np.asarray(t, dtype=float)
    scalar_in = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    out = np.zeros(t_arr.shape, dtype=complex)
    pos = t_arr > 0
    tp = t_arr[pos]
    val = 1j * np.exp(-1j * kernel.omega0 * tp)
    if kernel.regularization is not None:
        reg = kernel.regularization
        val = val * (1.0 - np.exp(-reg.gamma * tp)) ** reg.m
    out[pos] = val
    return _maybe_scalar(out, scalar_in)


def symmetric_contraction(t, kernel: ContractionKernel):
    """Branch contraction value -iG_kind(t) for t = t_annih - t_creat.

    Sharp forms: PP -> eps(t) e^{-i w t}, MM its negative, MP -> e^{-i w t}/2,
    PM its negative.  A regularized PP/MM kernel is built from the
    regularized retarded kernel through the half-sum decomposition.
    """
    if kernel.kind not in _BRANCH_KINDS:
        raise KindMismatch(
            f"symmetric_contraction needs a branch kernel, got {kernel.kind}")
    t_arr = np.asarray(t, dtype=float)
    scalar_in = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    w = kernel.omega0
    if kernel.kind in (MP, PM):
        out = 0.5 * np.exp(-1j * w * t_arr)
        if kernel.kind == PM:
            out = -out
    elif kernel.regularization is None:
        out = _eps(t_arr) * np.exp(-1j * w * t_arr)
        if kernel.kind == MM:
            out = -out
    else:
        gr = ContractionKernel(RETARDED, w, kernel.regularization)
        half_sum = 0.5 * (np.asarray(retarded_green(t_arr, gr))
                          + np.conj(retarded_green(-t_arr, gr)))
        out = -1j * half_sum          # -i G_pp
        if kernel.kind == MM:
            out = -out
    return _maybe_scalar(np.asarray(out, dtype=complex), scalar_in)


def decompose_check(ts, omega0: float) -> float:
    """Max pointwise deviation of the retarded half-sum/half-difference split.

    Checks, on the sharp kernels,
        G_pp = -G_mm = [G_R(t) + G_R*(-t)] / 2
        G_mp = -G_pm = [G_R(t) - G_R*(-t)] / 2
    and returns the largest absolute violation over ``ts``.

    At t = 0 exactly the split is read in the regularized limit, where every
    kernel vanishes: with theta(0) = 0 both retarded terms are zero there,
    while the sharp undirected kernels keep their +-1/2 ordering constant,
    which is fixed by the equal-time convention rather than by this
    identity.  The origin therefore compares 0 against 0.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    gr = ContractionKernel(RETARDED, omega0)
    g_r = np.asarray(retarded_green(ts, gr))
    g_r_rev = np.conj(np.asarray(retarded_green(-ts, gr)))
    half_sum = 0.5 * (g_r + g_r_rev)
    half_diff = 0.5 * (g_r - g_r_rev)
    off_origin = ts != 0

    def g(kind):
        # G = i * (-iG): recover G from the contraction value
        vals = 1j * np.asarray(symmetric_contraction(ts, ContractionKernel(kind, omega0)))
        if kind in (MP, PM):
            vals = np.where(off_origin, vals, 0.0)
        return vals

    devs = [
        np.abs(g(PP) - half_sum),
        np.abs(g(MM) + half_sum),
        np.abs(g(MP) - half_diff),
        np.abs(g(PM) + half_diff),
    ]
    return float(max(d.max() for d in devs))


def conjugation_check(ts, omega0: float) -> float:
    """Max pointwise deviation of the kernel conjugation identities.

    -iG_mm(t) = [-iG_pp(-t)]* and the MP/PM kernels are Hermitian,
    -iG_mp(t) = [-iG_mp(-t)]* (same for PM).
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))

    def val(kind, arg):
        return np.asarray(symmetric_contraction(arg, ContractionKernel(kind, omega0)))

    devs = [
        np.abs(val(MM, ts) - np.conj(val(PP, -ts))),
        np.abs(val(MP, ts) - np.conj(val(MP, -ts))),
        np.abs(val(PM, ts) - np.conj(val(PM, -ts))),
    ]
    return float(max(d.max() for d in devs))


def generalized_contraction(tau, tau_p, phi: Callable, order: Optional[Callable] = None):
    """Contraction kernel over an arbitrary linearly ordered coordinate set.

    ``order(x, y)`` is a strict "x succeeds y" comparator (numeric ``>`` by
    default); ``phi`` maps a coordinate to its phase angle.  Returns
    (i/2) e^{-i phi(tau) + i phi(tau_p)} [theta(tau,tau_p) - theta(tau_p,tau)],
    raising EqualRank when the comparator orders neither way.
    """
    if order is None:
        order = lambda x, y: x > y
    if order(tau, tau_p):
        sign = 1.0
    elif order(tau_p, tau):
        sign = -1.0
    else:
        raise EqualRank(f"coordinates {tau!r} and {tau_p!r} are not strictly ordered")
    return 0.5j * sign * np.exp(-1j * phi(tau) + 1j * phi(tau_p))


def contour_order(x, y) -> bool:
    """Strict succession on the two-branch contour for (time, branch) pairs.

    Every reverse-branch point succeeds every forward-branch point; the
    forward branch runs with time, the reverse branch against it.
    """
    tx, bx = x
    ty, by = y
    if bx != by:
        return bx == "-"
    if bx == "+":
        return tx > ty
    return tx < ty


@dataclass(frozen=True)
class KernelSet:
    """The four branch kernels at one frequency, addressed by branch pair.

    ``minus_i_g(c_ann, c_cre, dt)`` picks the kernel whose first index is
    the annihilation branch and second the creation branch, and evaluates
    it at dt = t_annih - t_creat.  Regularization, when given, touches only
    the diagonal (PP/MM) pair.
    """

    omega0: float
    regularization: Optional[Regularization] = None

    _KIND_BY_PAIR = {("+", "+"): PP, ("-", "-"): MM, ("-", "+"): MP, ("+", "-"): PM}

    def kernel(self, kind: str) -> ContractionKernel:
        reg = self.regularization if kind in (PP, MM) else None
        return ContractionKernel(kind, self.omega0, reg)

    def minus_i_g(self, c_ann: str, c_cre: str, dt: float) -> complex:
        kind = self._KIND_BY_PAIR.get((c_ann, c_cre))
        if kind is None:
            raise KindMismatch(f"unknown branch pair ({c_ann!r}, {c_cre!r})")
        return complex(symmetric_contraction(dt, self.kernel(kind)))
