"""Linear systems, reference targets, partitions and file I/O.

Indices are 0-based throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.io

from .linalg import RANK_RTOL, as_matrix, as_vector

CONSISTENCY_RTOL = 1e-10


class InconsistentSystemError(ValueError):
    """Raised when an operation needs a nonempty solution set."""


class LinearSystem:
    """The pair ``(A, b)`` with cached SVD-based metadata.

    Parameters
    ----------
    A : array_like, shape (n, d)
    b : array_like, shape (n,)

    Attributes
    ----------
    n, d : int
    rank : int
        Numerical rank at ``1e-12 * sigma_max``.
    consistent : bool
        Whether ``||A x_ls - b|| <= 1e-10 * max(1, ||b||)``.
    """

    def __init__(self, A, b):
        self.A = as_matrix(A, "A")
        bb = as_vector(b, "b")
        if bb.shape[0] != self.A.shape[0]:
            raise ValueError(
                f"dimension mismatch: A has {self.A.shape[0]} rows but b has length {bb.shape[0]}"
            )
        bb.setflags(write=False)
        self.b = bb

    def __repr__(self):
        return f"LinearSystem(n={self.n}, d={self.d}, rank={self.rank}, consistent={self.consistent})"

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @cached_property
    def _svd(self):
        U, s, Vt = np.linalg.svd(self.A, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            r = 0
        else:
            r = int(np.sum(s > RANK_RTOL * s[0]))
        return U[:, :r], s[:r], Vt[:r].T

    @property
    def rank(self) -> int:
        return self._svd[1].shape[0]

    @property
    def row_basis(self) -> np.ndarray:
        """Orthonormal basis of ``row(A)``, shape ``(d, rank)``."""
        return self._svd[2]

    @property
    def col_basis(self) -> np.ndarray:
        """Orthonormal basis of ``col(A)``, shape ``(n, rank)``."""
        return self._svd[0]

    @cached_property
    def x_ls(self) -> np.ndarray:
        """Minimum-norm least-squares solution."""
        U, s, V = self._svd
        return V @ ((U.T @ self.b) / s)

    @cached_property
    def r_star(self) -> np.ndarray:
        U = self._svd[0]
        # -(I - U U^T) b, evaluated without forming A x_ls.
        return U @ (U.T @ self.b) - self.b

    @cached_property
    def consistent(self) -> bool:
        return bool(np.linalg.norm(self.r_star) <= CONSISTENCY_RTOL * max(1.0, np.linalg.norm(self.b)))

    @cached_property
    def row_norms_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.A, self.A)

    @cached_property
    def col_norms_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->j", self.A, self.A)

    @cached_property
    def fro_norm_sq(self) -> float:
        return float(self.row_norms_sq.sum())

    @cached_property
    def spectral_norm(self) -> float:
        s = self._svd[1]
        return float(s[0]) if s.size else 0.0

    def residual(self, x) -> np.ndarray:
        return self.A @ x - self.b


def solution_projection(sys: LinearSystem, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto ``{z : A z = b}``."""
    if not sys.consistent:
        raise InconsistentSystemError("solution set empty: the system is inconsistent")
    x = np.asarray(x, dtype=np.float64)
    U, s, V = sys._svd
    return x - V @ ((U.T @ (sys.A @ x - sys.b)) / s)


def residual_star(sys: LinearSystem) -> np.ndarray:
    """Residual of any least-squares solution, ``-P_{ker(A^T)} b``."""
    return sys.r_star.copy()


@dataclass(frozen=True)
class SolveTargets:
    """Reference points used only to measure error, never to select updates.

    Attributes
    ----------
    mode : {"row", "col"}
    x0 : ndarray
    projected_x0 : ndarray or None
        ``P_H x0`` in row mode.
    r_star : ndarray
        ``-P_{ker(A^T)} b``.
    """

    mode: str
    x0: np.ndarray
    projected_x0: np.ndarray | None
    r_star: np.ndarray


def make_targets(sys: LinearSystem, x0, mode: str) -> SolveTargets:
    if mode not in ("row", "col"):
        raise ValueError("mode must be 'row' or 'col'")
    x0 = as_vector(x0, "x0")
    if x0.shape[0] != sys.d:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {sys.d}")
    proj = solution_projection(sys, x0) if mode == "row" else None
    return SolveTargets(mode=mode, x0=x0, projected_x0=proj, r_star=residual_star(sys))


@dataclass(frozen=True)
class Partition:
    """Ordered disjoint blocks of row or column indices covering all of them.

    Attributes
    ----------
    blocks : tuple of ndarray
    side : {"row", "col"}
    """

    blocks: tuple
    side: str
    size: int = field(default=0)

    def __post_init__(self):
        if self.side not in ("row", "col"):
            raise ValueError("side must be 'row' or 'col'")
        blocks = tuple(np.asarray(b, dtype=np.intp).reshape(-1) for b in self.blocks)
        if not blocks:
            raise ValueError("partition needs at least one block")
        for i, blk in enumerate(blocks):
            if blk.size == 0:
                raise ValueError(f"block {i} is empty")
        flat = np.concatenate(blocks)
        total = self.size or flat.size
        counts = np.bincount(flat, minlength=total) if flat.min() >= 0 else None
        if counts is None or flat.max() >= total:
            raise ValueError(f"block indices must lie in [0, {total})")
        if np.any(counts > 1):
            raise ValueError(f"overlapping blocks: index {int(np.argmax(counts > 1))} appears more than once")
        if np.any(counts == 0):
            raise ValueError(f"blocks do not cover index {int(np.argmin(counts))}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "size", total)

    def __len__(self):
        return len(self.blocks)

    def as_lists(self) -> list[list[int]]:
        return [b.tolist() for b in self.blocks]


def make_partition(sys: LinearSystem, side: str, *, equal_blocks: int | None = None,
                   explicit: Sequence[Sequence[int]] | None = None) -> Partition:
    """Build a row or column partition.

    Parameters
    ----------
    sys : LinearSystem
    side : {"row", "col"}
    equal_blocks : int, optional
        Split the indices into this many contiguous blocks whose sizes differ
        by at most one.
    explicit : list of list of int, optional
        Blocks given directly; order is preserved.
    """
    total = sys.n if side == "row" else sys.d
    if (equal_blocks is None) == (explicit is None):
        raise ValueError("give exactly one of equal_blocks or explicit")
    if equal_blocks is not None:
        k = int(equal_blocks)
        if not 1 <= k <= total:
            raise ValueError(f"cannot split {total} indices into {k} nonempty blocks")
        blocks = np.array_split(np.arange(total), k)
    else:
        blocks = [list(b) for b in explicit]
    return Partition(blocks=tuple(blocks), side=side, size=total)


# --------------------------------------------------------------------- I/O

def _read_matrix(path: Path, fmt: str) -> np.ndarray:
    try:
        if fmt == "mtx":
            M = scipy.io.mmread(str(path))
            M = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
        else:
            M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise ValueError(f"could not parse {path}: {exc}") from exc
    return np.asarray(M, dtype=np.float64)


def _guess_format(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = "mtx" if path.suffix.lower() == ".mtx" else "csv"
    fmt = fmt.lower()
    if fmt in ("matrixmarket", "mm", "mtx"):
        return "mtx"
    if fmt == "csv":
        return "csv"
    raise ValueError(f"unknown format {fmt!r}")


def load_system(path, b_path=None, format: str | None = None) -> LinearSystem:
    """Read ``A`` and ``b`` from MatrixMarket or CSV files.

    Parameters
    ----------
    path : path-like
        File holding ``A``. CSV layout is one matrix row per line.
    b_path : path-like, optional
        File holding ``b`` as a single column. Defaults to a sibling named
        ``<stem>_b<suffix>``; when absent ``b`` is taken as zero.
    format : {"csv", "mtx"}, optional
        Inferred from the suffix when omitted.
    """
    path = Path(path)
    fmt = _guess_format(path, format)
    A = _read_matrix(path, fmt)
    if b_path is None:
        cand = path.with_name(f"{path.stem}_b{path.suffix}")
        b_path = cand if cand.exists() else None
    if b_path is None:
        b = np.zeros(A.shape[0])
    else:
        bm = _read_matrix(Path(b_path), _guess_format(Path(b_path), format))
        if min(bm.shape) != 1:
            raise ValueError(f"{b_path}: right-hand side must be a single column, got shape {bm.shape}")
        b = bm.reshape(-1)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A has {A.shape[0]} rows but b has length {b.shape[0]}")
    return LinearSystem(A, b)


def save_system(sys: LinearSystem, path, b_path=None, format: str | None = None) -> None:
    """Write ``A`` and ``b`` in the format read by :func:`load_system`."""
    path = Path(path)
    fmt = _guess_format(path, format)
    if b_path is None:
        b_path = path.with_name(f"{path.stem}_b{path.suffix}")
    if fmt == "mtx":
        scipy.io.mmwrite(str(path), np.asarray(sys.A), precision=17)
        scipy.io.mmwrite(str(b_path), sys.b.reshape(-1, 1), precision=17)
    else:
        np.savetxt(path, sys.A, delimiter=",", fmt="%.17g")
        np.savetxt(b_path, sys.b.reshape(-1, 1), delimiter=",", fmt="%.17g")
