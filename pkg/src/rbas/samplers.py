"""Selection rules producing the next projection selector.

Every method is a :class:`Sampler` whose :meth:`Sampler.next` receives the
current iterate and its residual ``A x - b`` and returns a
:class:`Selector` together with a snapshot of its bounded internal state.

Row-action methods return row selectors (the update projects onto the
selected equations). Column-action methods return column selectors (the
update minimizes the residual over the selected directions).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .linalg import RANK_RTOL, make_rng
from .sketch import JlParams, SketchEnsemble, draw_ensemble
from .system import InconsistentSystemError, LinearSystem, Partition, make_partition


class SamplerError(RuntimeError):
    """Base class for sampler failures."""


class ZeroResidualError(SamplerError):
    """The selection rule is undefined because the relevant residual vanished."""


class StreamExhaustedError(SamplerError):
    """A finite equation stream ran out."""


# ---------------------------------------------------------------- selectors

ROW_KINDS = ("row_indices", "dense_rows", "stream")
COL_KINDS = ("col_indices", "dense_cols")


@dataclass(frozen=True, eq=False)
class Selector:
    """The matrix ``W_k`` of one update, in one of several encodings.

    Attributes
    ----------
    kind : str
        ``"row_indices"`` or ``"col_indices"`` (``W`` is a set of identity
        columns), ``"dense_rows"`` (``W`` is ``n x p``), ``"dense_cols"``
        (``W`` is ``d x p``) or ``"stream"`` (only ``alpha = A^T W`` and
        ``beta = W^T b`` are observed).
    indices : ndarray of int, optional
    matrix : ndarray, optional
        ``W`` for dense kinds, ``alpha`` for streams.
    rhs : ndarray, optional
        ``beta`` for streams.
    """

    kind: str
    indices: np.ndarray | None = None
    matrix: np.ndarray | None = None
    rhs: np.ndarray | None = None

    def __post_init__(self):
        if self.kind in ("row_indices", "col_indices"):
            idx = np.asarray(self.indices, dtype=np.intp).reshape(-1)
            if idx.size == 0:
                raise ValueError("index selector must be nonempty")
            if idx.min() < 0:
                raise ValueError("negative index in selector")
            if np.unique(idx).size != idx.size:
                raise ValueError("duplicate index in selector")
            object.__setattr__(self, "indices", idx)
        elif self.kind in ("dense_rows", "dense_cols", "stream"):
            W = np.asarray(self.matrix, dtype=np.float64)
            if W.ndim == 1:
                W = W.reshape(-1, 1)
            if W.shape[1] < 1:
                raise ValueError("dense selector needs at least one column")
            if self.kind != "stream" and not np.any(W):
                raise ValueError("dense selector is identically zero")
            object.__setattr__(self, "matrix", W)
            if self.kind == "stream":
                beta = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
                if beta.shape[0] != W.shape[1]:
                    raise ValueError("stream alpha and beta widths differ")
                object.__setattr__(self, "rhs", beta)
        else:
            raise ValueError(f"unknown selector kind {self.kind!r}")

    @classmethod
    def rows(cls, idx) -> "Selector":
        return cls("row_indices", indices=np.atleast_1d(idx))

    @classmethod
    def cols(cls, idx) -> "Selector":
        return cls("col_indices", indices=np.atleast_1d(idx))

    @classmethod
    def dense_rows(cls, W) -> "Selector":
        return cls("dense_rows", matrix=W)

    @classmethod
    def dense_cols(cls, W) -> "Selector":
        return cls("dense_cols", matrix=W)

    @classmethod
    def stream(cls, alpha, beta) -> "Selector":
        return cls("stream", matrix=alpha, rhs=beta)

    @property
    def side(self) -> str:
        return "row" if self.kind in ROW_KINDS else "col"

    def summary(self) -> str:
        """Short text label, stable across runs for identical selectors."""
        if self.indices is not None:
            tag = "R" if self.kind == "row_indices" else "C"
            return tag + "[" + " ".join(str(int(i)) for i in self.indices) + "]"
        tag = {"dense_rows": "DR", "dense_cols": "DC", "stream": "S"}[self.kind]
        return f"{tag}({self.matrix.shape[0]}x{self.matrix.shape[1]})"

    def key(self):
        """Hashable identity used to count selector changes."""
        if self.indices is not None:
            return (self.kind, tuple(int(i) for i in self.indices))
        return (self.kind, self.matrix.tobytes())


@dataclass(frozen=True)
class SamplerState:
    """Bounded memory carried between iterations.

    Attributes
    ----------
    kind : str
        ``"empty"``, ``"cycle"``, ``"permutation"``, ``"ensemble"`` or
        ``"stream"``.
    payload : tuple
        Integers and fixed-size arrays.
    """

    kind: str
    payload: tuple = ()

    @property
    def size(self) -> int:
        """Number of scalar slots; independent of the iteration count."""
        return sum(np.asarray(p).size for p in self.payload)


# --------------------------------------------------------------- specs

@dataclass
class SamplerSpec:
    """Which selection rule to use and its parameters.

    Attributes
    ----------
    name : str
        A key of :data:`REGISTRY`.
    side : {"row", "col"}, optional
        Checked against the method's side when given.
    partition : Partition or int or list of list of int, optional
        Block structure for block methods. An integer asks for that many
        contiguous blocks.
    p : float
        Exponent of Steinerberger weights.
    sample_size : int, optional
        Subset size of the sampling Kaczmarz-Motzkin method.
    block_size : int, optional
        Width of Gaussian and streaming sketches.
    sketch : JlParams, optional
        Ensemble parameters for adaptive sketch-and-project.
    distribution : str
        Sketch distribution, ``"achlioptas"`` or ``"gaussian"``.
    ensemble : SketchEnsemble, optional
        Pre-drawn ensemble; overrides ``sketch``.
    source : iterable of (alpha, beta), optional
        Equation stream for streaming methods. Defaults to Gaussian mixing
        of the system handed to :func:`make_sampler`.
    seed : int, optional
    """

    name: str
    side: str | None = None
    partition: object = None
    p: float = 2.0
    sample_size: int | None = None
    block_size: int | None = None
    sketch: JlParams | None = None
    distribution: str = "achlioptas"
    ensemble: SketchEnsemble | None = None
    source: Iterable | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.name not in REGISTRY:
            raise ValueError(f"unknown sampler {self.name!r}; known: {', '.join(sorted(REGISTRY))}")
        entry = REGISTRY[self.name]
        if self.side is None:
            self.side = entry.side
        elif self.side != entry.side:
            raise ValueError(f"sampler {self.name!r} is {entry.side}-action, not {self.side}-action")
        for req in entry.required:
            if getattr(self, req) is None:
                raise ValueError(f"sampler {self.name!r} requires parameter {req!r}")
        if self.p < 1:
            raise ValueError("Steinerberger exponent p must be at least 1")
        if self.sample_size is not None and self.sample_size < 1:
            raise ValueError("sample_size must be at least 1")
        if self.block_size is not None and self.block_size < 1:
            raise ValueError("block_size must be at least 1")


# ------------------------------------------------------------- helpers

def _argmax_first(scores: np.ndarray) -> int:
    # np.argmax already returns the first maximizer.
    return int(np.argmax(scores))


def _weighted_choice(rng: np.random.Generator, weights: np.ndarray) -> int:
    total = weights.sum()
    if not total > 0:
        raise ZeroResidualError("all selection weights vanish")
    return int(rng.choice(weights.size, p=weights / total))


def _block_scores(r: np.ndarray, blocks) -> np.ndarray:
    return np.array([np.dot(r[b], r[b]) for b in blocks])


def greedy_threshold_set(r, sys: LinearSystem, partition: Partition | None = None,
                         side: str = "row") -> np.ndarray:
    """Candidate set of the greedy randomized methods.

    The normalized score of row ``j`` is ``r_j^2 / (||r||^2 ||a_j||^2)``
    (block analogue: ``||r_I||^2 / (||r||^2 ||A_I||_F^2)``) and the set
    holds every index whose score reaches ``max/2 + 1/(2 ||A||_F^2)``.
    For ``side="col"`` the residual is replaced by ``A^T r`` and row norms
    by column norms.

    Returns
    -------
    ndarray of int
        Sorted indices (of rows, columns or blocks). Always nonempty: the
        maximizer is kept even if rounding pushes it below the threshold.
    """
    r = np.asarray(r, dtype=np.float64)
    if side == "row":
        v, norms = r, sys.row_norms_sq
    elif side == "col":
        v, norms = sys.A.T @ r, sys.col_norms_sq
    else:
        raise ValueError("side must be 'row' or 'col'")
    vv = float(v @ v)
    if vv == 0.0:
        raise ZeroResidualError("zero residual: the caller should have stopped")
    if partition is None:
        num, den = v * v, norms
    else:
        num = _block_scores(v, partition.blocks)
        den = np.array([norms[b].sum() for b in partition.blocks])
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(den > 0, num / (vv * np.where(den > 0, den, 1.0)), 0.0)
    thresh = 0.5 * score.max() + 0.5 / sys.fro_norm_sq
    keep = score >= thresh * (1.0 - 1e-12)
    keep[_argmax_first(score)] = True
    return np.flatnonzero(keep)


def skm_select(r, sample_size: int, seed=None) -> Selector:
    """Sampling Kaczmarz-Motzkin choice: largest ``|r_j|`` in a uniform subset."""
    r = np.asarray(r, dtype=np.float64)
    n = r.shape[0]
    if not 1 <= sample_size <= n:
        raise ValueError(f"sample_size must lie in [1, {n}]")
    rng = make_rng(seed)
    subset = np.sort(rng.choice(n, size=sample_size, replace=False))
    return Selector.rows(int(subset[_argmax_first(np.abs(r[subset]))]))


def sketch_project_score(x, S: np.ndarray, sys: LinearSystem) -> float:
    """``f = r^T S (S^T A A^T S)^+ S^T r`` with ``r = A x - b``."""
    r = sys.A @ np.asarray(x, dtype=np.float64) - sys.b
    return _sketch_score(np.asarray(S, dtype=np.float64).T @ r, *_sketch_factor(S, sys.A))


def _sketch_factor(S: np.ndarray, A: np.ndarray):
    return _left_factor(S.T @ A)


def _left_factor(M: np.ndarray):
    # Left singular vectors and values of M above the rank cutoff.
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return U[:, :0], s[:0]
    keep = s > RANK_RTOL * s[0]
    return U[:, keep], s[keep]


def _sketch_score(Str: np.ndarray, U: np.ndarray, s: np.ndarray) -> float:
    c = (U.T @ Str) / s
    return float(c @ c)


def streaming_source(base: LinearSystem, block_width: int = 1, seed=None) -> Iterator[tuple]:
    """Endless i.i.d. stream ``(alpha, beta) = (A^T W, W^T b)`` with Gaussian ``W``.

    Every solution of ``base`` satisfies ``alpha^T x = beta``.
    """
    if not base.consistent:
        raise InconsistentSystemError("streaming source needs a consistent base system")
    if block_width < 1:
        raise ValueError("block_width must be at least 1")
    rng = make_rng(seed)
    A, b = base.A, base.b
    while True:
        W = rng.standard_normal((base.n, block_width))
        yield A.T @ W, W.T @ b


def sketch_project_transform(sys: LinearSystem, B) -> tuple:
    """Rewrite ``min ||x||_B`` sketch-and-project as a Euclidean problem.

    Returns ``(transformed, to_x, to_z)`` where ``transformed`` has matrix
    ``A B^{-1/2}``, ``to_x(z) = B^{-1/2} z`` recovers the original
    variable and ``to_z(x) = B^{1/2} x`` maps into the new one.

    Raises
    ------
    ValueError
        If ``B`` is not symmetric positive definite.
    """
    B = np.asarray(B, dtype=np.float64)
    if B.shape != (sys.d, sys.d) or not np.allclose(B, B.T, rtol=0, atol=1e-12 * max(1.0, np.abs(B).max())):
        raise ValueError("B must be a symmetric d x d matrix")
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise ValueError("B is not positive definite") from exc
    lam, V = np.linalg.eigh(B)
    half = (V * np.sqrt(lam)) @ V.T
    inv_half = (V / np.sqrt(lam)) @ V.T
    transformed = LinearSystem(sys.A @ inv_half, sys.b)
    return transformed, (lambda z: inv_half @ z), (lambda x: half @ x)


# --------------------------------------------------------- base sampler

class Sampler:
    """Stateful selection rule. Subclasses implement :meth:`_select`."""

    side = "row"
    state_kind = "empty"

    def __init__(self, spec: SamplerSpec, sys: LinearSystem):
        self.spec = spec
        self.sys = sys
        self.rng = make_rng(spec.seed)
        self.k = 0

    @property
    def name(self) -> str:
        return self.spec.name

    def next(self, x, r) -> tuple:
        """Return ``(selector, state)`` for residual ``r = A x - b``."""
        sel = self._select(np.asarray(x), np.asarray(r))
        self.k += 1
        return sel, self.state

    @property
    def state(self) -> SamplerState:
        return SamplerState(self.state_kind)

    def _select(self, x, r) -> Selector:
        raise NotImplementedError

    def _partition(self) -> Partition:
        part = self.spec.partition
        if isinstance(part, Partition):
            if part.side != self.side:
                raise ValueError(f"partition side {part.side!r} does not match sampler side {self.side!r}")
            if part.size != (self.sys.n if self.side == "row" else self.sys.d):
                raise ValueError("partition does not match the system dimensions")
            return part
        if isinstance(part, (int, np.integer)):
            return make_partition(self.sys, self.side, equal_blocks=int(part))
        return make_partition(self.sys, self.side, explicit=part)


def _col_gradient(sys: LinearSystem, r: np.ndarray) -> np.ndarray:
    return sys.A.T @ r


# ----------------------------------------------------- vector row methods

class CyclicVectorKaczmarz(Sampler):
    state_kind = "cycle"

    def _select(self, x, r):
        return Selector.rows(self.k % self.sys.n)

    @property
    def state(self):
        return SamplerState("cycle", (self.k % self.sys.n,))


class GaussianVectorKaczmarz(Sampler):
    def _select(self, x, r):
        return Selector.dense_rows(self.rng.standard_normal((self.sys.n, 1)))


class StrohmerVershynin(Sampler):
    def _select(self, x, r):
        return Selector.rows(_weighted_choice(self.rng, self.sys.row_norms_sq))


class SteinerbergerVector(Sampler):
    def _select(self, x, r):
        return Selector.rows(_weighted_choice(self.rng, np.abs(r) ** self.spec.p))


class Motzkin(Sampler):
    def _select(self, x, r):
        norms = self.sys.row_norms_sq
        score = np.divide(np.abs(r), norms, out=np.zeros_like(r, dtype=float), where=norms > 0)
        if not np.any(score):
            raise ZeroResidualError("zero residual")
        return Selector.rows(_argmax_first(score))


class Agmon(Sampler):
    def _select(self, x, r):
        if not np.any(r):
            raise ZeroResidualError("zero residual")
        return Selector.rows(_argmax_first(np.abs(r)))


class GreedyRandomizedVector(Sampler):
    def _select(self, x, r):
        cand = greedy_threshold_set(r, self.sys, None, "row")
        return Selector.rows(int(cand[_weighted_choice(self.rng, r[cand] ** 2)]))


class SamplingKaczmarzMotzkin(Sampler):
    def _select(self, x, r):
        return skm_select(r, self.spec.sample_size, self.rng)


class _Streaming(Sampler):
    state_kind = "stream"

    def __init__(self, spec, sys, width):
        super().__init__(spec, sys)
        if spec.source is not None:
            self._it = iter(spec.source)
        else:
            self._it = streaming_source(sys, width, self.rng)

    def _select(self, x, r):
        try:
            alpha, beta = next(self._it)
        except StopIteration:
            raise StreamExhaustedError("equation stream exhausted") from None
        return Selector.stream(alpha, beta)

    @property
    def state(self):
        return SamplerState("stream", (self.k,))


class StreamingVector(_Streaming):
    def __init__(self, spec, sys):
        super().__init__(spec, sys, 1)


class StreamingBlock(_Streaming):
    def __init__(self, spec, sys):
        super().__init__(spec, sys, spec.block_size)


# -------------------------------------------------- vector column methods

class CyclicVectorCD(Sampler):
    side = "col"
    state_kind = "cycle"

    def _select(self, x, r):
        return Selector.cols(self.k % self.sys.d)

    @property
    def state(self):
        return SamplerState("cycle", (self.k % self.sys.d,))


class GaussianVectorCS(Sampler):
    side = "col"

    def _select(self, x, r):
        return Selector.dense_cols(self.rng.standard_normal((self.sys.d, 1)))


class ZouziasFrerisVectorCD(Sampler):
    side = "col"

    def _select(self, x, r):
        return Selector.cols(_weighted_choice(self.rng, self.sys.col_norms_sq))


class MaxResidualVectorCD(Sampler):
    side = "col"

    def _select(self, x, r):
        g = np.abs(_col_gradient(self.sys, r))
        if not np.any(g):
            raise ZeroResidualError("residual is orthogonal to every column")
        return Selector.cols(_argmax_first(g))


class MaxDistanceVectorCD(Sampler):
    side = "col"

    def __init__(self, spec, sys):
        super().__init__(spec, sys)
        AtA = sys.A.T @ sys.A
        self._den = np.einsum("ij,ij->j", AtA, AtA)

    def _select(self, x, r):
        g = np.abs(_col_gradient(self.sys, r))
        score = np.divide(g, self._den, out=np.zeros_like(g), where=self._den > 0)
        if not np.any(score):
            raise ZeroResidualError("residual is orthogonal to every column")
        return Selector.cols(_argmax_first(score))


# ------------------------------------------------------- block methods

class _BlockSampler(Sampler):
    def __init__(self, spec, sys):
        super().__init__(spec, sys)
        self.partition = self._partition()
        self.blocks = self.partition.blocks

    def _pick(self, j: int) -> Selector:
        b = self.blocks[j]
        return Selector.rows(b) if self.side == "row" else Selector.cols(b)


class CyclicBlock(_BlockSampler):
    state_kind = "cycle"

    def _select(self, x, r):
        return self._pick(self.k % len(self.blocks))

    @property
    def state(self):
        return SamplerState("cycle", (self.k % len(self.blocks),))


class CyclicBlockCD(CyclicBlock):
    side = "col"


class RandomPermutationBlock(_BlockSampler):
    state_kind = "permutation"

    def __init__(self, spec, sys):
        super().__init__(spec, sys)
        self._perm = np.arange(len(self.blocks))
        self._cursor = len(self.blocks)

    def _select(self, x, r):
        if self._cursor == len(self.blocks):
            self._perm = self.rng.permutation(len(self.blocks))
            self._cursor = 0
        j = int(self._perm[self._cursor])
        self._cursor += 1
        return self._pick(j)

    @property
    def state(self):
        return SamplerState("permutation", (self._perm.copy(), self._cursor))


class RandomPermutationBlockCD(RandomPermutationBlock):
    side = "col"


class SteinerbergerBlock(_BlockSampler):
    def _select(self, x, r):
        w = np.array([np.sum(np.abs(r[b]) ** self.spec.p) for b in self.blocks])
        return self._pick(_weighted_choice(self.rng, w))


class AgmonBlock(_BlockSampler):
    def _select(self, x, r):
        score = _block_scores(r, self.blocks)
        if not np.any(score):
            raise ZeroResidualError("zero residual")
        return self._pick(_argmax_first(score))


class MotzkinBlock(_BlockSampler):
    def __init__(self, spec, sys):
        super().__init__(spec, sys)
        # (A_I A_I^T)^+ = U diag(s^-2) U^T from the thin SVD of A_I.
        self._factors = [_left_factor(sys.A[b]) for b in self.blocks]

    def _select(self, x, r):
        score = np.empty(len(self.blocks))
        for j, (b, (U, s)) in enumerate(zip(self.blocks, self._factors)):
            score[j] = np.linalg.norm(U @ ((U.T @ r[b]) / s**2))
        if not np.any(score):
            raise ZeroResidualError("zero residual")
        return self._pick(_argmax_first(score))


class GreedyRandomizedBlock(_BlockSampler):
    def _select(self, x, r):
        cand = greedy_threshold_set(r, self.sys, self.partition, "row")
        w = _block_scores(r, [self.blocks[j] for j in cand])
        return self._pick(int(cand[_weighted_choice(self.rng, w)]))


class AdaptiveSketchProject(Sampler):
    state_kind = "ensemble"

    def __init__(self, spec, sys):
        super().__init__(spec, sys)
        if spec.ensemble is not None:
            ens = spec.ensemble
            if ens.n != sys.n:
                raise ValueError("sketch ensemble does not match the number of equations")
        else:
            params = spec.sketch or JlParams.achlioptas()
            ens = draw_ensemble(sys.n, params, spec.distribution, self.rng)
        self.ensemble = ens
        self._factors = [_sketch_factor(S, sys.A) for S in ens.matrices]

    def _select(self, x, r):
        scores = np.array([_sketch_score(S.T @ r, U, s)
                           for S, (U, s) in zip(self.ensemble.matrices, self._factors)])
        if not np.any(scores):
            raise ZeroResidualError("every sketch annihilates the residual")
        return Selector.dense_rows(self.ensemble.matrices[_argmax_first(scores)])

    @property
    def state(self):
        return SamplerState("ensemble", (id(self.ensemble) & 0xFFFFFFFF,))


class GaussianBlockCS(Sampler):
    side = "col"

    def _select(self, x, r):
        return Selector.dense_cols(self.rng.standard_normal((self.sys.d, self.spec.block_size)))


class ZouziasFrerisBlockCD(_BlockSampler):
    side = "col"

    def _select(self, x, r):
        w = np.array([self.sys.col_norms_sq[b].sum() for b in self.blocks])
        return self._pick(_weighted_choice(self.rng, w))


class MaxResidualBlockCD(_BlockSampler):
    side = "col"

    def _select(self, x, r):
        score = _block_scores(_col_gradient(self.sys, r), self.blocks)
        if not np.any(score):
            raise ZeroResidualError("residual is orthogonal to every column")
        return self._pick(_argmax_first(score))


class MaxDistanceBlockCD(_BlockSampler):
    side = "col"

    def __init__(self, spec, sys):
        super().__init__(spec, sys)
        # (A_J^T A_J)^+ = V diag(s^-2) V^T from the thin SVD of A_J.
        self._factors = [_left_factor(sys.A[:, b].T) for b in self.blocks]

    def _select(self, x, r):
        g = _col_gradient(self.sys, r)
        score = np.empty(len(self.blocks))
        for j, (b, (V, s)) in enumerate(zip(self.blocks, self._factors)):
            score[j] = np.linalg.norm(V @ ((V.T @ g[b]) / s**2))
        if not np.any(score):
            raise ZeroResidualError("residual is orthogonal to every column")
        return self._pick(_argmax_first(score))


# -------------------------------------------------------------- registry

@dataclass(frozen=True)
class _Entry:
    cls: Callable
    side: str
    required: tuple = field(default=())
    exploratory: tuple | None = None  # (N, pi) as functions of (n, d, blocks)


def _entry(cls, required=(), exploratory=None):
    return _Entry(cls, cls.side, tuple(required), exploratory)


_ONE = lambda n, d, e: (1, 1.0)  # noqa: E731

REGISTRY: dict[str, _Entry] = {
    "cyclic_vector_kaczmarz": _entry(CyclicVectorKaczmarz, exploratory=lambda n, d, e: (n, 1.0)),
    "gaussian_vector_kaczmarz": _entry(GaussianVectorKaczmarz, exploratory=_ONE),
    "strohmer_vershynin": _entry(StrohmerVershynin),
    "steinerberger_vector": _entry(SteinerbergerVector, exploratory=_ONE),
    "motzkin": _entry(Motzkin, exploratory=_ONE),
    "agmon": _entry(Agmon, exploratory=_ONE),
    "greedy_randomized_vector": _entry(GreedyRandomizedVector, exploratory=_ONE),
    "sampling_kaczmarz_motzkin": _entry(SamplingKaczmarzMotzkin, ("sample_size",),
                                        exploratory=lambda n, d, e: (1, 1.0 / n)),
    "streaming_vector": _entry(StreamingVector),
    "cyclic_vector_cd": _entry(CyclicVectorCD, exploratory=lambda n, d, e: (d, 1.0)),
    "gaussian_vector_cs": _entry(GaussianVectorCS, exploratory=_ONE),
    "zouzias_freris_vector_cd": _entry(ZouziasFrerisVectorCD),
    "max_residual_vector_cd": _entry(MaxResidualVectorCD, exploratory=_ONE),
    "max_distance_vector_cd": _entry(MaxDistanceVectorCD, exploratory=_ONE),
    "random_permutation_block_kaczmarz": _entry(RandomPermutationBlock, ("partition",),
                                                exploratory=lambda n, d, e: (1, 1.0 / e)),
    "steinerberger_block": _entry(SteinerbergerBlock, ("partition",), exploratory=_ONE),
    "motzkin_block": _entry(MotzkinBlock, ("partition",), exploratory=_ONE),
    "agmon_block": _entry(AgmonBlock, ("partition",), exploratory=_ONE),
    "adaptive_sketch_project": _entry(AdaptiveSketchProject),
    "greedy_randomized_block": _entry(GreedyRandomizedBlock, ("partition",), exploratory=_ONE),
    "streaming_block": _entry(StreamingBlock, ("block_size",)),
    "random_permutation_block_cd": _entry(RandomPermutationBlockCD, ("partition",),
                                          exploratory=lambda n, d, e: (1, 1.0 / e)),
    "gaussian_block_cs": _entry(GaussianBlockCS, ("block_size",), exploratory=_ONE),
    "zouzias_freris_block_cd": _entry(ZouziasFrerisBlockCD, ("partition",)),
    "max_residual_block_cd": _entry(MaxResidualBlockCD, ("partition",), exploratory=_ONE),
    "max_distance_block_cd": _entry(MaxDistanceBlockCD, ("partition",), exploratory=_ONE),
    "greedy_block_selection": _entry(AgmonBlock, ("partition",), exploratory=_ONE),
    # Deterministic block cycling, used for the partition comparisons.
    "cyclic_block_kaczmarz": _entry(CyclicBlock, ("partition",),
                                    exploratory=lambda n, d, e: (e, 1.0)),
    "cyclic_block_cd": _entry(CyclicBlockCD, ("partition",),
                              exploratory=lambda n, d, e: (e, 1.0)),
}

#: The methods of the catalogue proper (the cyclic block pair are extras).
CATALOGUE = tuple(k for k in REGISTRY if k not in ("cyclic_block_kaczmarz", "cyclic_block_cd"))


def make_sampler(spec: SamplerSpec, sys: LinearSystem) -> Sampler:
    """Instantiate the sampler named by ``spec`` for ``sys``."""
    if not isinstance(spec, SamplerSpec):
        spec = SamplerSpec(**spec)
    return REGISTRY[spec.name].cls(spec, sys)


def exploratory_constants(name: str, n: int, d: int, n_blocks: int = 1):
    """``(N, pi)`` exploratory constants of a method, or None when not closed-form."""
    f = REGISTRY[name].exploratory
    return None if f is None else f(n, d, n_blocks)


def selector_stream(sampler: Sampler, xs: Iterable, residual: Callable) -> Iterator[Selector]:
    """Feed a fixed iterate sequence through ``sampler``; for determinism checks."""
    for x in xs:
        yield sampler.next(x, residual(x))[0]

