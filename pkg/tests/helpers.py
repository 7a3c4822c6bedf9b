"""Shared test utilities.

`dense_realization` maps an OperatorSum onto explicit truncated-Fock
matrices (one tensor slot per mode that appears).  It shares no code with
`normal_form` — factors are multiplied out numerically — so agreement
between the two is a real check, not a tautology.

Truncation corrupts the bottom-right of a product of ladder matrices, so
comparisons go through `safe_block`, which keeps only per-mode indices
below ``dim - margin`` where the product is exact.
"""

import numpy as np

from symwick.operator_algebra import FreeFieldConvention, OperatorSum


def _ladder(dim: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        m[n - 1, n] = np.sqrt(n)
    return m


def dense_realization(x: OperatorSum, conv: FreeFieldConvention, dim: int,
                      modes=None) -> np.ndarray:
    """Evaluate the sum as an explicit matrix on (dim)^n_modes."""
    if modes is None:
        modes = sorted({f.mode for t in x.terms for f in t.factors})
    modes = list(modes)
    if not modes:
        modes = [0]
    slot = {m: i for i, m in enumerate(modes)}
    n = len(modes)
    a_mat = _ladder(dim)
    eye = np.eye(dim, dtype=complex)

    def embedded(mode, mat):
        ops = [eye] * n
        ops[slot[mode]] = mat
        out = ops[0]
        for o in ops[1:]:
            out = np.kron(out, o)
        return out

    total = np.zeros((dim ** n, dim ** n), dtype=complex)
    for term in x.terms:
        acc = np.eye(dim ** n, dtype=complex) * term.coeff
        for f in term.factors:
            ang = conv.phase_angle(f)
            if f.dagger:
                acc = acc @ embedded(f.mode, a_mat.conj().T) * np.exp(1j * ang)
            else:
                acc = acc @ embedded(f.mode, a_mat) * np.exp(-1j * ang)
        total += acc
    return total


def safe_block(mat: np.ndarray, dim: int, n_modes: int, margin: int) -> np.ndarray:
    keep = dim - margin
    assert keep > 0, "margin eats the whole matrix; raise dim"
    idx = [i for i in range(mat.shape[0])
           if all((i // dim ** k) % dim < keep for k in range(n_modes))]
    return mat[np.ix_(idx, idx)]


def max_factor_count(*sums) -> int:
    counts = [len(t.factors) for x in sums for t in x.terms]
    return max(counts, default=0)


def realized_dev(x: OperatorSum, y: OperatorSum, conv: FreeFieldConvention,
                 dim: int = 12) -> float:
    """Max entrywise deviation between matrix realizations, safe block only."""
    modes = sorted({f.mode for s in (x, y) for t in s.terms for f in t.factors})
    if not modes:
        modes = [0]
    margin = max_factor_count(x, y)
    mx = dense_realization(x, conv, dim, modes)
    my = dense_realization(y, conv, dim, modes)
    d = safe_block(mx - my, dim, len(modes), margin)
    return float(np.abs(d).max()) if d.size else 0.0


def random_factors(rng, n, modes=(0,), t_lo=0.0, t_hi=5.0):
    """n ladder factors with pairwise distinct times."""
    from symwick.operator_algebra import LadderFactor
    while True:
        times = rng.uniform(t_lo, t_hi, size=n)
        if len(set(times.tolist())) == n:
            break
    return tuple(LadderFactor(int(rng.choice(modes)), bool(rng.integers(2)),
                              float(t)) for t in times)
