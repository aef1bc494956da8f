"""Dense numerical kernels shared by the solver and certificate modules.

Matrices are plain ``numpy.ndarray`` objects of dtype ``float64`` in
row-major (C) order. Orthonormal bases are stored as ``(ambient_dim, k)``
arrays whose columns are the basis vectors.

All randomness in the package flows through :func:`make_rng`, which wraps
the PCG64 bit generator so that every experiment replays bit for bit from
its integer seed.
"""

from __future__ import annotations

import numpy as np

#: Relative singular-value cutoff used for pseudo-inverses and ranks.
RANK_RTOL = 1e-12
#: Absolute tolerance on orthonormality of basis vectors.
ORTHO_TOL = 1e-10


def make_rng(seed=None) -> np.random.Generator:
    """Return a PCG64-backed generator.

    Parameters
    ----------
    seed : int, sequence of int, numpy.random.SeedSequence or Generator, optional
        Anything accepted by ``numpy.random.PCG64``. A ``Generator`` is
        returned unchanged so callers can thread one stream through.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and convert ``M`` to a finite 2-D float64 array."""
    arr = np.array(M, dtype=np.float64, order="C", copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    arr.setflags(write=False)
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Validate and convert ``v`` to a finite 1-D float64 array."""
    arr = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def pinv_apply(M: np.ndarray, r: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Apply the Moore-Penrose pseudo-inverse of ``M`` to ``r``.

    Parameters
    ----------
    M : ndarray, shape (m, n)
    r : ndarray, shape (m,) or (m, k)
    rtol : float
        Singular values below ``rtol * sigma_max`` are treated as zero.

    Returns
    -------
    ndarray, shape (n,) or (n, k)
        The minimum-norm least-squares solution of ``M z = r``.
    """
    M = np.asarray(M, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError("M must be 2-dimensional")
    if r.shape[0] != M.shape[0]:
        raise ValueError(f"dimension mismatch: M has {M.shape[0]} rows, r has length {r.shape[0]}")
    out_shape = (M.shape[1],) + r.shape[1:]
    if M.size == 0:
        return np.zeros(out_shape)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros(out_shape)
    keep = s > rtol * s[0]
    coef = U[:, keep].T @ r
    coef = coef / (s[keep] if coef.ndim == 1 else s[keep, None])
    return Vt[keep].T @ coef


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank of ``M`` with singular values below ``rtol * sigma_max`` dropped."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def orthonormal_basis(M: np.ndarray, tol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis for the column space of ``M``.

    Parameters
    ----------
    M : ndarray, shape (d, m)
    tol : float
        Relative singular-value threshold defining the numerical rank.

    Returns
    -------
    ndarray, shape (d, r)
        Columns are orthonormal and span ``col(M)``; ``r`` is the numerical
        rank (possibly zero).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((M.shape[0], 0))
    return np.ascontiguousarray(U[:, s > tol * s[0]])


def _haar_orthogonal(k: int, rng: np.random.Generator) -> np.ndarray:
    # QR of a Gaussian matrix with the sign convention that makes Q Haar.
    G = rng.standard_normal((k, k))
    Q, R = np.linalg.qr(G)
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def random_orthonormal_basis(Q: np.ndarray, seed=None) -> np.ndarray:
    """Haar-uniform random orthonormal basis of ``span(Q)``.

    Parameters
    ----------
    Q : ndarray, shape (d, k)
        Orthonormal basis of the subspace, ``k >= 1``.
    seed : int or Generator, optional

    Returns
    -------
    ndarray, shape (d, k)
        ``Q @ O`` with ``O`` a Haar-distributed ``k x k`` orthogonal matrix.
    """
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] == 0:
        raise ValueError("subspace must be a nonempty (d, k) basis")
    rng = make_rng(seed)
    return Q @ _haar_orthogonal(Q.shape[1], rng)


def random_span_basis(V: np.ndarray, seed=None, tol: float = RANK_RTOL) -> np.ndarray:
    """Random orthonormal basis of ``span(V)`` built from its spanning set.

    The columns of ``V`` are mixed by a Haar rotation of their coordinates
    and then orthonormalized by Gram-Schmidt (thin QR) in order. When ``V``
    is itself orthonormal this coincides in distribution with
    :func:`random_orthonormal_basis`. For a general spanning set the law
    depends on the geometry of ``V``, which is the law of the bases a block
    solver realizes from random combinations of a block's equations.

    Parameters
    ----------
    V : ndarray, shape (d, m)
        Spanning vectors (for example the transposed rows of a block).
    seed : int or Generator, optional
    tol : float
        Rank tolerance.

    Returns
    -------
    ndarray, shape (d, r)
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[1] == 0:
        raise ValueError("V must be a nonempty (d, m) matrix")
    rng = make_rng(seed)
    r = numerical_rank(V, tol)
    if r == 0:
        raise ValueError("V spans the zero subspace")
    m = V.shape[1]
    mixed = V @ _haar_orthogonal(m, rng)[:, :r]
    Qm, R = np.linalg.qr(mixed)
    if r < m and np.min(np.abs(np.diag(R))) <= tol * np.max(np.abs(np.diag(R))):
        # Degenerate draw for a rank-deficient V; fall back to the SVD basis.
        return orthonormal_basis(mixed, tol)
    return Qm


def gram_det(G: np.ndarray) -> float:
    """``det(G^T G)`` as the product of squared diagonal entries of R in ``G = QR``."""
    G = np.asarray(G, dtype=np.float64)
    if G.ndim == 1:
        G = G.reshape(-1, 1)
    if G.shape[1] < 1:
        raise ValueError("G must have at least one column")
    if G.shape[1] > G.shape[0]:
        return 0.0
    R = np.linalg.qr(G, mode="r")
    return float(np.prod(np.diag(R) ** 2))


class SpanTracker:
    """Incrementally grown orthonormal basis with a relative membership test.

    Parameters
    ----------
    ambient_dim : int
    tol : float
        ``v`` is contained when ``||v - Q Q^T v|| <= tol * ||v||``.
    """

    def __init__(self, ambient_dim: int, tol: float = 1e-10):
        self.ambient_dim = int(ambient_dim)
        self.tol = float(tol)
        self._Q = np.zeros((self.ambient_dim, 0))

    @property
    def basis(self) -> np.ndarray:
        return self._Q

    @property
    def dim(self) -> int:
        return self._Q.shape[1]

    def _remainder(self, v: np.ndarray) -> np.ndarray:
        w = v.copy()
        # Two passes of classical Gram-Schmidt.
        for _ in range(2):
            w -= self._Q @ (self._Q.T @ w)
        return w

    def contains(self, v) -> bool:
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.ambient_dim:
            raise ValueError("vector length does not match ambient dimension")
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return True
        if self.dim == self.ambient_dim:
            return True
        return bool(np.linalg.norm(self._remainder(v)) <= self.tol * nv)

    def insert(self, v) -> bool:
        """Add ``v`` to the span; return True if the dimension grew."""
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        if self.contains(v):
            return False
        w = self._remainder(v)
        self._Q = np.column_stack([self._Q, w / np.linalg.norm(w)])
        return True


def span_contains(tracker: SpanTracker, v) -> bool:
    return tracker.contains(v)


def span_insert(tracker: SpanTracker, v) -> bool:
    return tracker.insert(v)
