"""Meany-type determinant constants and the worst-case rate of block cycles.

For orthonormal bases ``Q_0, ..., Q_l`` the Meany constant is the minimum
of ``det(G^T G)`` over matrices ``G`` whose columns form a maximal linearly
independent subset of all the basis vectors. A projection window whose
ranges are spanned by these bases shrinks every error vector lying in
their sum by the factor ``1 - constant`` at least.

The constant depends on the chosen bases. The best (largest) value over
all bases is estimated by random search plus a few deterministic
candidate bases built from principal vectors; the result is a lower bound
on the supremum, so the derived rate ``gamma = 1 - sup`` is conservative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from ._io import atomic_write_text, render_csv
from .engine import selector_range
from .linalg import _haar_orthogonal, numerical_rank, orthonormal_basis
from .system import LinearSystem, Partition

#: Independence and duplicate tolerance for unit vectors.
INDEP_TOL = 1e-10
#: Largest collection enumerated exhaustively.
DEFAULT_CAP = 20
QUANTILE_LEVELS = (0.001, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999)
_CHUNK = 20000


class CombinatorialCapError(ValueError):
    """Too many vectors for exhaustive subset enumeration."""


def _as_columns(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return np.asarray(vectors, dtype=np.float64)
    return np.column_stack([np.asarray(v, dtype=np.float64).reshape(-1) for v in vectors])


def collapse_duplicates(V: np.ndarray, tol: float = INDEP_TOL) -> np.ndarray:
    """Drop columns equal (up to sign) to an earlier column."""
    keep = []
    for j in range(V.shape[1]):
        v = V[:, j]
        if all(abs(abs(float(v @ V[:, i])) - 1.0) > tol for i in keep):
            keep.append(j)
    return V[:, keep]


def maximal_independent_gram_min(vectors, tol: float = INDEP_TOL, cap: int = DEFAULT_CAP) -> float:
    """Minimum of ``det(G^T G)`` over maximal linearly independent subsets.

    Parameters
    ----------
    vectors : ndarray of shape (d, m) or sequence of unit vectors
    tol : float
        Duplicate collapse and independence tolerance (a subset is
        independent when its smallest singular value exceeds ``tol``).
    cap : int
        Maximum number of distinct vectors enumerated exhaustively.

    Returns
    -------
    float
        A value in ``[0, 1]``; 1.0 for an empty collection.
    """
    V = _as_columns(vectors)
    if V.shape[1] == 0:
        return 1.0
    norms = np.linalg.norm(V, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise ValueError("all vectors must have unit 2-norm")
    V = collapse_duplicates(V, tol)
    m = V.shape[1]
    if m > cap:
        raise CombinatorialCapError(
            f"{m} distinct vectors exceed the enumeration cap of {cap}; use a random-search estimate instead")
    s = np.linalg.svd(V, compute_uv=False)
    r = int(np.sum(s > tol))
    if r == 0:
        return 1.0
    if r == m:
        return float(np.prod(s**2))
    best = np.inf
    it = combinations(range(m), r)
    total = comb(m, r)
    done = 0
    while done < total:
        idx = np.array([c for _, c in zip(range(_CHUNK), it)], dtype=np.intp)
        done += idx.shape[0]
        G = np.moveaxis(V[:, idx], 1, 0)  # (batch, d, r)
        sv = np.linalg.svd(G, compute_uv=False)
        ok = sv[:, -1] > tol
        if np.any(ok):
            best = min(best, float(np.min(np.prod(sv[ok] ** 2, axis=1))))
    return float(min(best, 1.0))


def meany_constant(bases, tol: float = INDEP_TOL, cap: int = DEFAULT_CAP) -> float:
    """Meany constant of fixed orthonormal bases (``(d, k_i)`` arrays)."""
    bases = [np.asarray(Q, dtype=np.float64) for Q in bases]
    if not bases:
        return 1.0
    dims = {Q.shape[0] for Q in bases}
    if len(dims) != 1:
        raise ValueError("bases must share one ambient dimension")
    return maximal_independent_gram_min(np.hstack(bases), tol, cap)


def principal_candidates(spans) -> list:
    """Deterministic basis choices aligned with principal vectors.

    For each pair of subspaces both bases are replaced by their principal
    vectors with respect to each other, so directions shared by the pair
    coincide exactly and the remaining ones are as close to orthogonal as
    the geometry allows. Other subspaces keep their given basis.

    Parameters
    ----------
    spans : list of ndarray
        Orthonormal bases.

    Returns
    -------
    list of list of ndarray
    """
    out = []
    for i in range(len(spans)):
        for j in range(i + 1, len(spans)):
            U, _, Vt = np.linalg.svd(spans[i].T @ spans[j])
            cand = list(spans)
            cand[i] = spans[i] @ U
            cand[j] = spans[j] @ Vt.T
            out.append(cand)
    if len(spans) == 1:
        out.append(list(spans))
    return out


@dataclass
class MeanyEstimate:
    """Distribution of Meany constants over random basis choices.

    Attributes
    ----------
    samples : ndarray
        One constant per random draw.
    candidates : ndarray
        Constants of the deterministic principal-vector candidates.
    sup_observed : float
        Largest value seen over samples and candidates; a lower bound on
        the supremum over all bases.
    seed : int
    sampling : str
    """

    samples: np.ndarray
    candidates: np.ndarray
    sup_observed: float
    seed: int
    sampling: str

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def std(self) -> float:
        return float(np.std(self.samples, ddof=1)) if self.samples.size > 1 else 0.0

    @property
    def median(self) -> float:
        return float(np.median(self.samples))

    @property
    def sample_max(self) -> float:
        return float(np.max(self.samples))

    def quantiles(self) -> dict:
        return {q: float(np.quantile(self.samples, q)) for q in QUANTILE_LEVELS}

    def table_row(self) -> list:
        return list(self.quantiles().values()) + [self.sup_observed, self.mean, self.std, int(self.samples.size)]

    @staticmethod
    def table_header() -> list:
        return [repr(q) for q in QUANTILE_LEVELS] + ["sup", "mean", "std", "n_samples"]

    def to_csv(self, path, label: str = "") -> None:
        text = render_csv("meany-table", ["label"] + self.table_header(), [[label] + self.table_row()],
                          {"seed": self.seed, "sampling": self.sampling})
        atomic_write_text(path, text)


def sample_seed_sequence(seed: int, index: int) -> np.random.SeedSequence:
    """Per-sample seed derived from ``(seed, index)``, independent of evaluation order."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def meany_sup_estimate(subspaces, n_samples: int = 10_000, seed: int | None = None,
                       sampling: str = "span", align: bool = True,
                       cap: int = DEFAULT_CAP) -> MeanyEstimate:
    """Estimate the supremum over bases of the Meany constant.

    Parameters
    ----------
    subspaces : list of ndarray
        One ``(d, m_i)`` matrix per subspace whose columns span it: an
        orthonormal basis, or the transposed equations of a block.
    n_samples : int
    seed : int, optional
        Drawn from OS entropy (and recorded) when omitted.
    sampling : {"span", "haar"}
        ``"span"`` applies a Haar rotation to the coordinates of the given
        spanning columns and orthonormalizes them in order. For orthonormal
        input this is exactly Haar sampling; for a block of equations it
        samples the bases obtained from random combinations of those
        equations. ``"haar"`` first orthonormalizes each subspace and then
        draws Haar bases regardless of how it was given.
    align : bool
        Also evaluate the principal-vector candidates.
    cap : int
        Enumeration cap passed to :func:`maximal_independent_gram_min`.

    Returns
    -------
    MeanyEstimate
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if sampling not in ("span", "haar"):
        raise ValueError("sampling must be 'span' or 'haar'")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    gens = []
    for V in subspaces:
        V = np.asarray(V, dtype=np.float64)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        r = numerical_rank(V)
        if r == 0:
            continue
        if sampling == "haar":
            V = orthonormal_basis(V)
        gens.append((V, r))
    if not gens:
        raise ValueError("all subspaces are trivial")

    samples = np.empty(n_samples)
    for i in range(n_samples):
        rng = np.random.Generator(np.random.PCG64(sample_seed_sequence(seed, i)))
        bases = []
        for V, r in gens:
            mixed = V @ _haar_orthogonal(V.shape[1], rng)[:, :r]
            bases.append(np.linalg.qr(mixed)[0])
        samples[i] = meany_constant(bases, cap=cap)

    cands = np.array([])
    if align:
        spans = [orthonormal_basis(V) for V, _ in gens]
        cands = np.array([meany_constant(c, cap=cap) for c in principal_candidates(spans)])
    sup = float(max(samples.max(), cands.max() if cands.size else -np.inf))
    return MeanyEstimate(samples=samples, candidates=cands, sup_observed=sup, seed=int(seed), sampling=sampling)


@dataclass
class GammaReport:
    """Worst-case per-window contraction factor of a cyclic block family.

    Attributes
    ----------
    partition_id : str
    gamma : float
        ``1 - sup_observed``; an upper bound on the true rate.
    basis_samples : int
        Random draws used (0 for the exact one-dimensional case).
    method : {"random_search", "exact_1d"}
    seed : int or None
    sup_observed : float
    """

    partition_id: str
    gamma: float
    basis_samples: int
    method: str
    seed: int | None
    sup_observed: float
    estimate: MeanyEstimate | None = field(default=None, repr=False)


def gamma_for_partition(sys: LinearSystem, partition: Partition, n_samples: int = 10_000,
                        seed: int | None = 0, label: str = "", sampling: str = "span") -> GammaReport:
    """Rate ``gamma = 1 - sup min det`` for cycling through a row partition.

    The union of all blocks is the largest family a window can realize and
    adding subspaces never raises the Meany constant, so the whole family
    gives the worst case. Blocks of rank at most one admit only sign
    changes of their basis, which leave the constant unchanged, so that
    case is evaluated exactly.
    """
    if partition.side != "row":
        raise ValueError("gamma_for_partition expects a row partition")
    if partition.size != sys.n:
        raise ValueError("partition does not match the number of equations")
    spans = [sys.A[b].T for b in partition.blocks]
    ranks = [numerical_rank(V) for V in spans]
    if max(ranks) <= 1:
        bases = [orthonormal_basis(V) for V, r in zip(spans, ranks) if r == 1]
        sup = meany_constant(bases)
        return GammaReport(label, float(max(0.0, 1.0 - sup)), 0, "exact_1d", None, sup)
    est = meany_sup_estimate([V for V, r in zip(spans, ranks) if r > 0], n_samples, seed, sampling)
    return GammaReport(label, float(max(0.0, 1.0 - est.sup_observed)), n_samples, "random_search",
                       est.seed, est.sup_observed, est)


def gamma_table_csv(reports, path, meta: dict | None = None) -> None:
    rows = [(g.partition_id, g.gamma, g.sup_observed, g.method, g.basis_samples,
             "" if g.seed is None else g.seed) for g in reports]
    text = render_csv("gamma-table", ["partition", "gamma", "sup_observed", "method", "basis_samples", "seed"],
                      rows, meta)
    atomic_write_text(path, text)


# ------------------------------------------------------ bound verification

def realized_basis(sys: LinearSystem, sel) -> np.ndarray:
    """Orthonormal basis of the range of the projector a selector induces.

    Row selectors give ``col(A^T W)`` in ``R^d``; column selectors give
    ``col(A W)`` in ``R^n``.
    """
    return orthonormal_basis(selector_range(sys, sel))


def meany_bound_holds(y_start, y_end, bases, slack: float = 1e-8) -> bool:
    """Check ``||y_end||^2 <= (1 - c) ||y_start||^2 + slack ||y_start||^2``."""
    y0 = float(np.dot(y_start, y_start))
    if y0 == 0.0:
        return True
    c = meany_constant(bases)
    return bool(float(np.dot(y_end, y_end)) / y0 <= 1.0 - c + slack)


def verify_meany_bound(sys: LinearSystem, history, j: int, nu: int, slack: float = 1e-8) -> bool:
    """Check the window ``[j, j + nu]`` of a stored history against its Meany constant.

    Only steps with nonzero progress flag contribute a basis. The error is
    measured relative to ``||y_j||^2``, which is the scale-free form of the
    bound.
    """
    if history.ys is None or history.selector_objs is None:
        raise ValueError("history was recorded without iterates")
    bases = [realized_basis(sys, history.selector_objs[i]) for i in range(j, j + nu + 1) if history.chi[i]]
    bases = [Q for Q in bases if Q.shape[1] > 0]
    return meany_bound_holds(history.ys[j], history.ys[j + nu + 1], bases, slack)
