"""Symbolic ladder-operator algebra with time-symmetric ordering.

Monomials are products of mode ladder factors tagged with a time coordinate
(and optionally a contour-branch tag and an integer ordering rank).  Sums of
monomials support the machinery needed for double-time correlation work:

* time-symmetric expansion (nested symmetrized products, latest pair first),
* enumeration of the 2^(N-1) branch-ordered ("hump") products,
* canonical normal form for free fields at frequency omega0,
* Weyl-symmetric forms and the free-field reduction onto them,
* the symmetric Wick expansion over branch contraction kernels,
* a round-trippable text serialization.

Times are compared exactly; callers own the choice of distinct coordinates.
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from math import comb
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import DuplicateTime, MissingBranchTag, SizeLimit
from .states import RingParams

BRANCH_FORWARD = "+"
BRANCH_REVERSE = "-"

#: coefficients within this of zero are dropped when sums merge
MERGE_TOL = 1e-12

#: largest total ladder-power accepted by weyl_symmetric_form
WEYL_MAX_POWER = 8


@dataclass(frozen=True)
class LadderFactor:
    """One ladder operator: mode index, dagger flag and a time coordinate.

    ``branch`` tags the contour branch ("+" forward / "-" reverse) where an
    operation needs it.  ``generic_order`` is an integer rank that replaces
    the time in every ordering decision when present (the time is then
    carried along but ignored for ordering and, absent a phase function,
    for phases).
    """

    mode: int
    dagger: bool
    time: float
    branch: Optional[str] = None
    generic_order: Optional[int] = None

    def __post_init__(self):
        if self.mode < 0:
            raise ValueError(f"mode index must be >= 0, got {self.mode}")
        if self.branch not in (None, BRANCH_FORWARD, BRANCH_REVERSE):
            raise ValueError(f"unknown branch tag {self.branch!r}")

    @property
    def rank(self) -> float:
        """Ordering coordinate: the integer rank when set, else the time."""
        if self.generic_order is not None:
            return float(self.generic_order)
        return self.time

    def conjugate(self) -> "LadderFactor":
        return LadderFactor(self.mode, not self.dagger, self.time,
                            self.branch, self.generic_order)

    def with_branch(self, branch: Optional[str]) -> "LadderFactor":
        return LadderFactor(self.mode, self.dagger, self.time,
                            branch, self.generic_order)


def a(mode: int, time: float = 0.0, branch: Optional[str] = None,
      order: Optional[int] = None) -> LadderFactor:
    """Annihilation factor for ``mode`` at ``time``."""
    return LadderFactor(mode, False, float(time), branch, order)


def adag(mode: int, time: float = 0.0, branch: Optional[str] = None,
         order: Optional[int] = None) -> LadderFactor:
    """Creation factor for ``mode`` at ``time``."""
    return LadderFactor(mode, True, float(time), branch, order)


def _factor_key(f: LadderFactor):
    return (f.mode, f.dagger, f.generic_order is not None, f.rank,
            f.branch or "", f.time)


def _term_key(factors: tuple) -> tuple:
    return (len(factors), tuple(_factor_key(f) for f in factors))


@dataclass(frozen=True)
class OperatorMonomial:
    """A complex coefficient times an ordered product of ladder factors."""

    coeff: complex
    factors: tuple


class OperatorSum:
    """Finite complex-weighted sum of ladder monomials.

    Structurally a mapping factor-tuple -> coefficient; like terms merge on
    construction and arithmetic, and coefficients within ``MERGE_TOL`` of
    zero are dropped.  ``==`` is *structural* (identical factor tuples and
    coefficients); semantic operator equality lives in :func:`equals`, which
    compares normal forms under a free-field convention.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable = ()):
        data: dict = {}
        for item in terms:
            if isinstance(item, OperatorMonomial):
                coeff, factors = item.coeff, item.factors
            else:
                coeff, factors = item
            factors = tuple(factors)
            data[factors] = data.get(factors, 0j) + complex(coeff)
        self._terms = {k: v for k, v in data.items() if abs(v) > MERGE_TOL}

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "OperatorSum":
        return OperatorSum()

    @staticmethod
    def identity(coeff: complex = 1.0) -> "OperatorSum":
        return OperatorSum([(coeff, ())])

    @staticmethod
    def monomial(coeff: complex, factors: Sequence[LadderFactor]) -> "OperatorSum":
        return OperatorSum([(coeff, tuple(factors))])

    # -- views ---------------------------------------------------------

    @property
    def terms(self) -> tuple:
        """Monomials in a deterministic canonical order."""
        items = sorted(self._terms.items(), key=lambda kv: _term_key(kv[0]))
        return tuple(OperatorMonomial(c, f) for f, c in items)

    def coefficient(self, factors: Sequence[LadderFactor]) -> complex:
        return self._terms.get(tuple(factors), 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self.terms)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        items = [(c, f) for f, c in self._terms.items()]
        items += [(c, f) for f, c in other._terms.items()]
        return OperatorSum(items)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + (-1.0) * other

    def __neg__(self) -> "OperatorSum":
        return (-1.0) * self

    def __rmul__(self, scalar: complex) -> "OperatorSum":
        return OperatorSum([(scalar * c, f) for f, c in self._terms.items()])

    def __mul__(self, other):
        """Operator product: concatenates factor strings termwise."""
        if isinstance(other, (int, float, complex)):
            return other * self
        out = []
        for f1, c1 in self._terms.items():
            for f2, c2 in other._terms.items():
                out.append((c1 * c2, f1 + f2))
        return OperatorSum(out)

    def dagger(self) -> "OperatorSum":
        """Hermitian conjugate: reverses each product, conjugates factors/coeffs."""
        return OperatorSum([
            (c.conjugate(), tuple(f.conjugate() for f in reversed(factors)))
            for factors, c in self._terms.items()
        ])

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorSum):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"OperatorSum({to_text(self)!r})"

    def __str__(self) -> str:
        return to_text(self)


def _as_sum(x) -> OperatorSum:
    if isinstance(x, OperatorSum):
        return x
    if isinstance(x, OperatorMonomial):
        return OperatorSum([x])
    # a bare factor sequence is a unit-coefficient monomial
    return OperatorSum([(1.0, tuple(x))])


# -- free-field convention ----------------------------------------------


@dataclass(frozen=True)
class FreeFieldConvention:
    """Phase convention for interaction-picture ladder factors.

    An annihilation factor at coordinate tau carries e^{-i phi(tau)}, a
    creation factor e^{+i phi(tau)}.  By default phi(tau) = omega0 * t for
    time-tagged factors and 0 for rank-tagged ones; ``phase_fn`` overrides
    phi entirely (it receives the ordering coordinate).
    """

    omega0: float = 0.0
    phase_fn: Optional[Callable[[float], float]] = None

    def phase_angle(self, f: LadderFactor) -> float:
        if self.phase_fn is not None:
            return float(self.phase_fn(f.rank))
        if f.generic_order is not None:
            return 0.0
        return self.omega0 * f.time


# -- normal form ---------------------------------------------------------


@lru_cache(maxsize=None)
def _normal_word(word: tuple) -> tuple:
    """Normal-order a single-mode dagger-flag word with [a, a†] = 1.

    Returns ((n_dag, n_ann), integer_coeff) pairs for the expansion into
    a†^p a^q blocks.
    """
    for i in range(len(word) - 1):
        if not word[i] and word[i + 1]:
            swapped = word[:i] + (True, False) + word[i + 2:]
            dropped = word[:i] + word[i + 2:]
            acc: dict = {}
            for w in (swapped, dropped):
                for key, c in _normal_word(w):
                    acc[key] = acc.get(key, 0) + c
            return tuple(acc.items())
    return (((sum(word), len(word) - sum(word)), 1),)


def _canonical_factors(mode: int, n_dag: int, n_ann: int) -> tuple:
    return tuple(adag(mode) for _ in range(n_dag)) + tuple(a(mode) for _ in range(n_ann))


def normal_form(x, conv: FreeFieldConvention) -> OperatorSum:
    """Canonical form: phases extracted, modes ascending, creations left.

    The result contains only bare (time-0, untagged) factors; two
    expressions represent the same operator iff their normal forms agree
    termwise.  Idempotent.
    """
    out: list = []
    for mono in _as_sum(x).terms:
        angle = 0.0
        mode_words: dict = {}
        for f in mono.factors:
            ang = conv.phase_angle(f)
            angle += ang if f.dagger else -ang
            mode_words.setdefault(f.mode, []).append(f.dagger)
        base = mono.coeff * cmath.exp(1j * angle)
        partial = [(base, ())]
        for mode in sorted(mode_words):
            expanded = _normal_word(tuple(mode_words[mode]))
            partial = [
                (c * wc, facs + _canonical_factors(mode, p, q))
                for c, facs in partial
                for (p, q), wc in expanded
            ]
        out.extend(partial)
    return OperatorSum(out)


def max_coeff_deviation(x, y, conv: FreeFieldConvention) -> float:
    """Largest termwise coefficient difference between two normal forms."""
    nx, ny = normal_form(x, conv), normal_form(y, conv)
    keys = set(nx._terms) | set(ny._terms)
    if not keys:
        return 0.0
    return max(abs(nx._terms.get(k, 0j) - ny._terms.get(k, 0j)) for k in keys)


def equals(x, y, conv: FreeFieldConvention, tol: float = 1e-12) -> bool:
    """Semantic operator equality: normal forms agree termwise within tol."""
    return max_coeff_deviation(x, y, conv) <= tol


# -- ordering expansions -------------------------------------------------


def _require_distinct(factors: Sequence[LadderFactor], what: str = "time") -> None:
    ranks = [f.rank for f in factors]
    if len(set(ranks)) != len(ranks):
        raise DuplicateTime(
            f"factors must carry pairwise distinct {what} coordinates, got {ranks}")


def time_symmetric_expand(factors: Sequence[LadderFactor]) -> OperatorSum:
    """Expand the time-symmetric product of ``factors``.

    Built by symmetrizing pairwise from the latest coordinate down: with
    the factors sorted so tau_1 > tau_2 > ... > tau_N, the result is
    2^{1-N} times the nested symmetrized product
    {...{{X_1, X_2}, X_3}, ..., X_N} — equivalently the equal-weight
    average of all 2^{N-1} branch-ordered products.  Coordinates must be
    pairwise distinct (the equal-time product is defined only as a limit).
    """
    factors = tuple(factors)
    if not factors:
        return OperatorSum.identity()
    _require_distinct(factors)
    ordered = sorted(factors, key=lambda f: -f.rank)
    acc = OperatorSum.monomial(1.0, (ordered[0],))
    for f in ordered[1:]:
        unit = OperatorSum.monomial(1.0, (f,))
        acc = 0.5 * (acc * unit + unit * acc)
    return acc


def schwinger_enumerate(factors: Sequence[LadderFactor]) -> list:
    """All 2^{N-1} branch-ordered products of ``factors`` as unit monomials.

    Each product reads, left to right, as coordinates that first increase
    then decrease (the latest factor is the hump).  Equivalently: some
    subset of the non-latest factors sits left of the hump in increasing
    order, the rest sit right of it in decreasing order.
    """
    factors = tuple(factors)
    if not factors:
        return [OperatorMonomial(1.0, ())]
    _require_distinct(factors)
    by_rank = sorted(factors, key=lambda f: f.rank)
    latest, others = by_rank[-1], by_rank[:-1]
    out = []
    for mask in range(1 << len(others)):
        left = [f for i, f in enumerate(others) if mask >> i & 1]
        right = [f for i, f in enumerate(others) if not mask >> i & 1]
        word = tuple(left) + (latest,) + tuple(sorted(right, key=lambda f: -f.rank))
        out.append(OperatorMonomial(1.0, word))
    return out


# -- Weyl forms and free-field reduction ---------------------------------


def weyl_symmetric_form(n_dag: int, n_ann: int, mode: int = 0) -> OperatorSum:
    """Weyl (symmetric) form of a†^n_dag a^n_ann on one mode.

    The equal-weight average of all distinct arrangements of the factors;
    total power above ``WEYL_MAX_POWER`` raises SizeLimit.
    """
    if n_dag < 0 or n_ann < 0:
        raise ValueError("powers must be non-negative")
    total = n_dag + n_ann
    if total > WEYL_MAX_POWER:
        raise SizeLimit(
            f"weyl_symmetric_form supports total power <= {WEYL_MAX_POWER}, "
            f"got {total}")
    if total == 0:
        return OperatorSum.identity()
    arrangements = sorted(set(permutations((True,) * n_dag + (False,) * n_ann)))
    weight = 1.0 / comb(total, n_dag)
    return OperatorSum([
        (weight, tuple(adag(mode) if d else a(mode) for d in arr))
        for arr in arrangements
    ])


def reduce_free_field(factors: Sequence[LadderFactor],
                      conv: FreeFieldConvention):
    """Reduce a free-field time-symmetric product to (phase, Weyl form).

    Returns ``(phase, weyl)`` with ``phase`` the scalar
    e^{-i sum(phi_annih) + i sum(phi_creat)} and ``weyl`` the mode-wise
    Weyl-symmetric product of the bare ladder powers, so that
    ``time_symmetric_expand(factors) == phase * weyl`` as operators.
    """
    factors = tuple(factors)
    _require_distinct(factors)
    angle = 0.0
    powers: dict = {}
    for f in factors:
        ang = conv.phase_angle(f)
        angle += ang if f.dagger else -ang
        ndag, nann = powers.get(f.mode, (0, 0))
        powers[f.mode] = (ndag + 1, nann) if f.dagger else (ndag, nann + 1)
    phase = cmath.exp(1j * angle)
    weyl = OperatorSum.identity()
    for mode in sorted(powers):
        ndag, nann = powers[mode]
        weyl = weyl * weyl_symmetric_form(ndag, nann, mode)
    return phase, weyl


def bh_interaction_weyl(params: RingParams) -> OperatorSum:
    """Interaction of the anharmonic ring in Weyl-symmetric form.

    Per site: kappa/2 W{a†²a²} - kappa W{a†a} + kappa/4, plus the hopping
    bilinears -J (a†_k a_{k+1} + a†_{k+1} a_k) mod n_sites (none for a
    single site).  Normal-ordering the result recovers the bare
    kappa/2 a†²a² + hopping interaction exactly.
    """
    total = OperatorSum.zero()
    kappa = params.kappa
    for k in range(params.n_sites):
        total = total + (0.5 * kappa) * weyl_symmetric_form(2, 2, k)
        total = total + (-kappa) * weyl_symmetric_form(1, 1, k)
        total = total + OperatorSum.identity(0.25 * kappa)
    if params.n_sites > 1:
        for k in range(params.n_sites):
            nxt = (k + 1) % params.n_sites
            total = total + OperatorSum([
                (-params.hop_J, (adag(k), a(nxt))),
                (-params.hop_J, (adag(nxt), a(k))),
            ])
    return total


# -- symmetric Wick expansion ---------------------------------------------


def _check_branch(factors: Sequence[LadderFactor], branch: str) -> None:
    for f in factors:
        if f.branch is None:
            raise MissingBranchTag(
                f"factor {factor_to_text(f)} lacks a branch tag (expected {branch!r})")
        if f.branch != branch:
            raise MissingBranchTag(
                f"factor {factor_to_text(f)} carries branch {f.branch!r} but was "
                f"passed on the {branch!r} side")


def wick_expand(minus_branch: Sequence[LadderFactor],
                plus_branch: Sequence[LadderFactor],
                kernels) -> OperatorSum:
    """Expand a double-branch-ordered product over symmetric contractions.

    ``minus_branch``/``plus_branch`` hold the reverse- and forward-branch
    factors (tags checked).  The result sums, over all partial pairings of
    annihilation with creation factors of the same mode, the product of
    branch-kernel values ``kernels.minus_i_g(c_ann, c_cre, t_ann - t_cre)``
    times the time-symmetric expansion of whatever stays unpaired.  As an
    operator identity this equals the literal branch-ordered product.
    """
    minus_branch = tuple(minus_branch)
    plus_branch = tuple(plus_branch)
    _check_branch(minus_branch, BRANCH_REVERSE)
    _check_branch(plus_branch, BRANCH_FORWARD)
    allf = minus_branch + plus_branch
    _require_distinct(allf)

    ann_idx = [i for i, f in enumerate(allf) if not f.dagger]
    cre_idx = [i for i, f in enumerate(allf) if f.dagger]

    pairings: list = []

    def _extend(ai: int, used: frozenset, chosen: tuple) -> None:
        if ai == len(ann_idx):
            pairings.append(chosen)
            return
        i = ann_idx[ai]
        _extend(ai + 1, used, chosen)          # leave this annihilation free
        for j in cre_idx:
            if j in used or allf[j].mode != allf[i].mode:
                continue
            _extend(ai + 1, used | {j}, chosen + ((i, j),))

    _extend(0, frozenset(), ())

    total = OperatorSum.zero()
    for chosen in pairings:
        weight = 1.0 + 0j
        taken = set()
        for i, j in chosen:
            fa, fc = allf[i], allf[j]
            weight *= kernels.minus_i_g(fa.branch, fc.branch, fa.time - fc.time)
            taken.update((i, j))
        rest = [f for idx, f in enumerate(allf) if idx not in taken]
        total = total + weight * time_symmetric_expand(rest)
    return total


def branch_ordered_product(minus_branch: Sequence[LadderFactor],
                           plus_branch: Sequence[LadderFactor]) -> OperatorSum:
    """The literal double-branch-ordered product as a single monomial.

    Reverse-branch factors first, coordinates increasing left to right;
    then forward-branch factors, coordinates decreasing — so the full word
    reads as a hump.  This is what :func:`wick_expand` reproduces.
    """
    minus_branch = tuple(minus_branch)
    plus_branch = tuple(plus_branch)
    _check_branch(minus_branch, BRANCH_REVERSE)
    _check_branch(plus_branch, BRANCH_FORWARD)
    _require_distinct(minus_branch + plus_branch)
    word = tuple(sorted(minus_branch, key=lambda f: f.rank)) \
        + tuple(sorted(plus_branch, key=lambda f: -f.rank))
    return OperatorSum.monomial(1.0, word)


# -- text serialization ----------------------------------------------------

_FACTOR_RE = re.compile(r"^a(\d+)(†?)\(([^)]*)\)$")


def _format_coeff(c: complex) -> str:
    if c.imag == 0.0:
        return repr(c.real)
    return repr(c)


def factor_to_text(f: LadderFactor) -> str:
    parts = [repr(float(f.time))]
    if f.branch is not None:
        parts.append(f.branch)
    if f.generic_order is not None:
        parts.append(f"r{f.generic_order}")
    return f"a{f.mode}{'†' if f.dagger else ''}({'|'.join(parts)})"


def factor_from_text(text: str) -> LadderFactor:
    m = _FACTOR_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse ladder factor from {text!r}")
    mode, dag, inner = int(m.group(1)), m.group(2) == "†", m.group(3)
    parts = inner.split("|")
    time = float(parts[0])
    branch = None
    order = None
    for p in parts[1:]:
        if p in (BRANCH_FORWARD, BRANCH_REVERSE):
            branch = p
        elif p.startswith("r"):
            order = int(p[1:])
        else:
            raise ValueError(f"unknown factor annotation {p!r} in {text!r}")
    return LadderFactor(mode, dag, time, branch, order)


def to_text(x) -> str:
    """Serialize to the documented one-line form, e.g. ``0.5 * a2†(1.3) a1(0.7)``.

    Terms are emitted in canonical order joined by " + "; the empty product
    prints as ``1`` and the zero sum as ``0``.  Round-trips exactly through
    :func:`from_text` (float repr is shortest-round-trip).
    """
    s = _as_sum(x)
    if len(s) == 0:
        return "0"
    parts = []
    for mono in s.terms:
        facs = " ".join(factor_to_text(f) for f in mono.factors) or "1"
        parts.append(f"{_format_coeff(mono.coeff)} * {facs}")
    return " + ".join(parts)


def from_text(text: str) -> OperatorSum:
    """Parse the serialization produced by :func:`to_text`."""
    text = text.strip()
    if text == "0":
        return OperatorSum.zero()
    terms = []
    for chunk in text.split(" + "):
        head, _, tail = chunk.partition(" * ")
        if not tail:
            raise ValueError(f"malformed term {chunk!r}")
        coeff = complex(head)
        tokens = tail.split()
        if tokens == ["1"]:
            factors: tuple = ()
        else:
            factors = tuple(factor_from_text(tok) for tok in tokens)
        terms.append((coeff, factors))
    return OperatorSum(terms)
