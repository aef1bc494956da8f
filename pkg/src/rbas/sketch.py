"""Johnson-Lindenstrauss sketch ensembles for adaptive sketch-and-project.

Two distributions are provided:

* ``"gaussian"``: i.i.d. ``N(0, 1/p)`` entries.
* ``"achlioptas"``: entries ``+sqrt(3/p)``, ``0``, ``-sqrt(3/p)`` with
  probabilities 1/6, 2/3, 1/6.

Both are scaled so that ``E ||S^T r||^2 = ||r||^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import make_rng

#: JL constants (C, w) of the Achlioptas distribution.
ACHLIOPTAS_C = 0.23467
ACHLIOPTAS_W = 0.1127

DISTRIBUTIONS = ("gaussian", "achlioptas")


def _jl_threshold(C: float, w: float, rho: float) -> float:
    return (rho + 1.0) * math.log(2.0) / (0.999 * C) * max(1.0 / 0.999, w)


def jl_min_embedding_dim(C: float, w: float, rho: float) -> int:
    """Smallest integer ``p`` with ``p > (rho+1) ln 2 / (0.999 C) * max(1/0.999, w)``.

    Examples
    --------
    >>> jl_min_embedding_dim(ACHLIOPTAS_C, ACHLIOPTAS_W, 4)
    15
    """
    if C <= 0 or w <= 0 or rho <= 0:
        raise ValueError("C, w and rho must be positive")
    return math.floor(_jl_threshold(C, w, rho)) + 1


def jl_failure_bound(rho: float, epsilon: float) -> float:
    """Probability bound ``2**(-epsilon*rho)`` that every sketch annihilates a vector.

    With ``rho = 4`` and ``epsilon = 20`` this is ``2**-80``, about
    ``8.27e-25``.
    """
    if rho < 0 or epsilon < 0:
        raise ValueError("rho and epsilon must be nonnegative")
    return 2.0 ** (-(epsilon * rho))


@dataclass(frozen=True)
class JlParams:
    """Parameters of a fixed sketch ensemble.

    Attributes
    ----------
    C, w : float
        JL constants of the distribution.
    rho : float
    p : int
        Sketch width (columns per matrix).
    epsilon : int
        Number of matrices in the ensemble.
    """

    C: float
    w: float
    rho: float
    p: int
    epsilon: int

    def __post_init__(self):
        if self.C <= 0 or self.w <= 0 or self.rho <= 0:
            raise ValueError("C, w and rho must be positive")
        if self.p < 1 or self.epsilon < 1:
            raise ValueError("p and epsilon must be at least 1")

    @classmethod
    def from_constants(cls, C: float, w: float, rho: float, epsilon: int) -> "JlParams":
        return cls(C=C, w=w, rho=rho, p=jl_min_embedding_dim(C, w, rho), epsilon=int(epsilon))

    @classmethod
    def achlioptas(cls, rho: float = 4, epsilon: int = 20) -> "JlParams":
        return cls.from_constants(ACHLIOPTAS_C, ACHLIOPTAS_W, rho, epsilon)

    @property
    def failure_bound(self) -> float:
        return jl_failure_bound(self.rho, self.epsilon)


@dataclass(frozen=True)
class SketchEnsemble:
    """A fixed, immutable list of ``n x p`` sketch matrices."""

    matrices: tuple
    distribution: str
    seed: int | None

    def __len__(self):
        return len(self.matrices)

    def __getitem__(self, j):
        return self.matrices[j]

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def p(self) -> int:
        return self.matrices[0].shape[1]

    def save(self, path) -> None:
        """Dump to a ``.npz`` archive."""
        np.savez(path, matrices=np.stack(self.matrices), distribution=self.distribution,
                 seed=-1 if self.seed is None else self.seed)

    @classmethod
    def load(cls, path) -> "SketchEnsemble":
        with np.load(Path(path)) as data:
            mats = tuple(np.array(m) for m in data["matrices"])
            seed = int(data["seed"])
            return cls(mats, str(data["distribution"]), None if seed < 0 else seed)


def sample_sketch(n: int, p: int, distribution: str, rng: np.random.Generator) -> np.ndarray:
    """Draw one ``n x p`` sketch matrix."""
    if distribution == "gaussian":
        return rng.standard_normal((n, p)) / math.sqrt(p)
    if distribution == "achlioptas":
        vals = np.array([-1.0, 0.0, 0.0, 0.0, 0.0, 1.0]) * math.sqrt(3.0 / p)
        return vals[rng.integers(0, 6, size=(n, p))]
    raise ValueError(f"unknown sketch distribution {distribution!r}; expected one of {DISTRIBUTIONS}")


def draw_ensemble(n: int, params: JlParams, distribution: str = "achlioptas", seed=None) -> SketchEnsemble:
    """Draw ``params.epsilon`` independent ``n x params.p`` sketches."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    mats = []
    for _ in range(params.epsilon):
        S = sample_sketch(n, params.p, distribution, rng)
        S.setflags(write=False)
        mats.append(S)
    return SketchEnsemble(tuple(mats), distribution, seed if isinstance(seed, (int, np.integer)) else None)
