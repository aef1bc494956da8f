"""Projection updates, the iteration loop and stopping-time diagnostics.

Both solver families are tracked through one error variable ``y``:

* row action: ``y_k = x_k - P_H x_0`` (distance to the solution set);
* column action: ``y_k = A x_k - b - r*`` (excess residual).

Each update maps ``y_k`` to ``(I - P_k) y_k`` for an orthogonal projector
``P_k``, so ``||y_k||^2`` never increases.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_write_text, render_csv
from .linalg import SpanTracker, pinv_apply
from .samplers import Sampler, Selector, ZeroResidualError
from .system import LinearSystem, SolveTargets, make_targets

#: Relative gate for the progress flag chi.
CHI_RTOL = 1e-12


class NumericalFailure(RuntimeError):
    """The maintained residual drifted beyond tolerance."""


def row_step(sys: LinearSystem, x, sel: Selector, r=None) -> np.ndarray:
    """Row-action update ``x - A^T W (W^T A A^T W)^+ W^T (A x - b)``.

    Parameters
    ----------
    sys : LinearSystem
    x : ndarray, shape (d,)
    sel : Selector
        A row, dense-row or stream selector.
    r : ndarray, optional
        Current residual ``A x - b`` when already known.
    """
    x = np.asarray(x, dtype=np.float64)
    if sel.kind == "row_indices":
        idx = sel.indices
        if idx.max() >= sys.n:
            raise IndexError("row index out of range")
        AI = sys.A[idx]
        rI = r[idx] if r is not None else AI @ x - sys.b[idx]
        return x - pinv_apply(AI, rI)
    if sel.kind == "dense_rows":
        W = sel.matrix
        if W.shape[0] != sys.n:
            raise ValueError("dense row selector has the wrong height")
        rr = r if r is not None else sys.A @ x - sys.b
        return x - pinv_apply(W.T @ sys.A, W.T @ rr)
    if sel.kind == "stream":
        alpha, beta = sel.matrix, sel.rhs
        return x - pinv_apply(alpha.T, alpha.T @ x - beta)
    raise ValueError(f"row_step cannot apply a {sel.kind} selector")


def col_step(sys: LinearSystem, x, sel: Selector, r=None) -> np.ndarray:
    """Column-action update ``x - W (W^T A^T A W)^+ W^T A^T (A x - b)``."""
    x = np.asarray(x, dtype=np.float64)
    rr = r if r is not None else sys.A @ x - sys.b
    if sel.kind == "col_indices":
        idx = sel.indices
        if idx.max() >= sys.d:
            raise IndexError("column index out of range")
        out = x.copy()
        out[idx] -= pinv_apply(sys.A[:, idx], rr)
        return out
    if sel.kind == "dense_cols":
        W = sel.matrix
        if W.shape[0] != sys.d:
            raise ValueError("dense column selector has the wrong height")
        return x - W @ pinv_apply(sys.A @ W, rr)
    raise ValueError(f"col_step cannot apply a {sel.kind} selector")


def error_vector(targets: SolveTargets, x, sys: LinearSystem) -> np.ndarray:
    """The common error variable ``y`` for the targets' mode."""
    x = np.asarray(x, dtype=np.float64)
    if targets.mode == "row":
        if targets.projected_x0 is None:
            raise ValueError("row-mode targets need a consistent system")
        return x - targets.projected_x0
    return sys.A @ x - sys.b - targets.r_star


@dataclass
class SolveHistory:
    """Record of one solver run.

    Attributes
    ----------
    mode : {"row", "col"}
    error_sq : ndarray
        ``||y_k||^2`` for ``k = 0..K``.
    chi : ndarray of bool
        Progress flag of step ``k -> k+1``, length ``K``.
    selectors : list of str
        Summary of the selector used at each step.
    changes : ndarray of int
        Cumulative count of steps whose selector differed from the previous one.
    nu_records : list of (int, int or None)
        ``(j, nu(j))`` along the checkpoint chain; ``None`` marks a window
        that hit the horizon undetected.
    stop_reason : str
    x : ndarray
        Final iterate.
    ys : ndarray, optional
        All error vectors when ``store_iterates`` was requested.
    selector_objs : list of Selector, optional
    """

    mode: str
    error_sq: np.ndarray
    chi: np.ndarray
    selectors: list
    changes: np.ndarray
    nu_records: list
    stop_reason: str
    x: np.ndarray
    sampler: str = ""
    ys: np.ndarray | None = None
    selector_objs: list | None = None
    max_residual_drift: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.chi)

    @property
    def tau_points(self) -> list:
        return tau_schedule(self)

    def to_csv(self, path) -> None:
        """Write ``k, error_sq, chi, selector, selector_changes``, one line per step."""
        rows = [(k + 1, float(self.error_sq[k + 1]), bool(self.chi[k]), self.selectors[k], int(self.changes[k]))
                for k in range(self.iterations)]
        meta = {"sampler": self.sampler, "mode": self.mode,
                "initial_error_sq": repr(float(self.error_sq[0])), "stop_reason": self.stop_reason}
        meta.update(self.meta)
        text = render_csv("solve-history", ["k", "error_sq", "chi", "selector", "selector_changes"], rows, meta)
        atomic_write_text(path, text)


def selector_range(sys: LinearSystem, sel: Selector) -> np.ndarray:
    """Columns spanning the range of the projector a selector induces.

    Row selectors give ``A^T W`` (in ``R^d``); column selectors give ``A W``
    (in ``R^n``). The columns are not orthonormalized.
    """
    if sel.kind == "row_indices":
        return sys.A[sel.indices].T
    if sel.kind == "dense_rows":
        return sys.A.T @ sel.matrix
    if sel.kind == "stream":
        return sel.matrix
    if sel.kind == "col_indices":
        return sys.A[:, sel.indices]
    return sys.A @ sel.matrix


class _NuTracker:
    """Online stopping-time detection along the checkpoint chain.

    A window opened at ``j`` closes at the first productive step after which
    ``y_j`` lies in the sum of the ranges realized so far in the window.
    """

    def __init__(self, sys: LinearSystem, basis: np.ndarray, horizon: int, tol: float, floor: float):
        self.sys = sys
        self.basis = basis
        self.horizon = horizon
        self.tol = tol
        self.floor = floor
        self.records: list = []
        self.active = basis.shape[1] > 0
        self.start = 0
        self.target = None
        self.tracker = None

    def begin(self, j: int, y: np.ndarray, err_sq: float) -> None:
        self.start = j
        if err_sq <= self.floor:
            self.active = False
            return
        self.target = self.basis.T @ y
        self.tracker = SpanTracker(self.basis.shape[1], self.tol)

    def step(self, k: int, chi: bool, sel: Selector, y_next: np.ndarray, err_sq_next: float) -> None:
        # Called with y_{k+1} after step k.
        if not self.active:
            return
        if chi:
            for c in (self.basis.T @ selector_range(self.sys, sel)).T:
                self.tracker.insert(c)
            if self.tracker.contains(self.target):
                self.records.append((self.start, k - self.start))
                self.begin(k + 1, y_next, err_sq_next)
                return
        if k - self.start + 1 >= self.horizon:
            self.records.append((self.start, None))
            self.active = False


def _default_horizon(sys: LinearSystem) -> int:
    return max(1, 50 * sys.rank)


def run(sys: LinearSystem, sampler: Sampler, x0=None, *, max_iter: int = 1000, error_tol: float = 0.0,
        max_seconds: float | None = None, targets: SolveTargets | None = None,
        track_nu: bool = True, nu_horizon: int | None = None, nu_tol: float = 1e-10,
        nu_floor: float = 1e-12, store_iterates: bool = False,
        recompute_every: int = 1000) -> SolveHistory:
    """Iterate ``sampler`` from ``x0`` until a stopping rule fires.

    Parameters
    ----------
    sys : LinearSystem
    sampler : Sampler
    x0 : array_like, optional
        Defaults to the zero vector.
    max_iter : int
    error_tol : float
        Stop once ``||y_k||^2 <= error_tol``.
    max_seconds : float, optional
        Wall-clock budget.
    targets : SolveTargets, optional
        Computed from ``x0`` when omitted.
    track_nu : bool
        Compute stopping times along the checkpoint chain.
    nu_horizon : int, optional
        Window cap for stopping-time detection; defaults to ``50 * rank``.
    nu_tol : float
        Relative tolerance of the span membership test.
    nu_floor : float
        Detection stops once ``||y||^2`` falls below ``nu_floor * ||y_0||^2``,
        where rounding noise dominates membership tests.
    store_iterates : bool
        Keep every error vector and selector (memory ``O(K d)``).
    recompute_every : int
        Residual refresh period.

    Returns
    -------
    SolveHistory
    """
    mode = sampler.side
    x = np.zeros(sys.d) if x0 is None else np.array(x0, dtype=np.float64).reshape(-1)
    if x.shape[0] != sys.d:
        raise ValueError(f"x0 has length {x.shape[0]}, expected {sys.d}")
    if targets is None:
        targets = make_targets(sys, x, mode)
    elif targets.mode != mode:
        raise ValueError(f"targets are in {targets.mode} mode but the sampler is {mode}-action")
    step = row_step if mode == "row" else col_step

    r = sys.A @ x - sys.b
    y = error_vector(targets, x, sys)
    err = [float(y @ y)]
    chis, sels, changes = [], [], []
    ys = [y.copy()] if store_iterates else None
    objs = [] if store_iterates else None
    basis = sys.row_basis if mode == "row" else sys.col_basis
    nu = _NuTracker(sys, basis, nu_horizon or _default_horizon(sys), nu_tol, nu_floor * err[0])
    if track_nu:
        nu.begin(0, y, err[0])
    else:
        nu.active = False
    scale = sys.spectral_norm
    drift = 0.0
    n_changes = 0
    last_key = None
    t0 = time.monotonic()
    reason = "max_iter"

    for k in range(max_iter):
        if err[-1] <= error_tol:
            reason = "error_tol"
            break
        if max_seconds is not None and time.monotonic() - t0 > max_seconds:
            reason = "max_seconds"
            break
        try:
            sel, _ = sampler.next(x, r)
        except ZeroResidualError:
            reason = "zero_residual"
            break
        x_new = step(sys, x, sel, r)
        dx = x_new - x
        dr = sys.A @ dx
        if mode == "row":
            chi = bool(np.linalg.norm(dx) > CHI_RTOL * max(1.0, np.linalg.norm(x)))
        else:
            chi = bool(np.linalg.norm(dr) > CHI_RTOL * max(1.0, np.linalg.norm(r)))
        x = x_new
        r = r + dr
        if (k + 1) % recompute_every == 0:
            fresh = sys.A @ x - sys.b
            gap = float(np.linalg.norm(fresh - r))
            bound = 1e-8 * (scale * np.linalg.norm(x) + np.linalg.norm(sys.b))
            drift = max(drift, gap / bound if bound > 0 else 0.0)
            if gap > bound:
                raise NumericalFailure(f"maintained residual drifted by {gap:.3e} (bound {bound:.3e})")
            r = fresh
        y = error_vector(targets, x, sys)
        err.append(float(y @ y))
        chis.append(chi)
        sels.append(sel.summary())
        key = sel.key()
        if last_key is not None and key != last_key:
            n_changes += 1
        last_key = key
        changes.append(n_changes)
        if store_iterates:
            ys.append(y.copy())
            objs.append(sel)
        nu.step(k, chi, sel, y, err[-1])
    else:
        if err[-1] <= error_tol:
            reason = "error_tol"

    return SolveHistory(
        mode=mode,
        error_sq=np.array(err),
        chi=np.array(chis, dtype=bool),
        selectors=sels,
        changes=np.array(changes, dtype=np.int64),
        nu_records=nu.records,
        stop_reason=reason,
        x=x,
        sampler=getattr(sampler, "name", ""),
        ys=None if ys is None else np.array(ys),
        selector_objs=objs,
        max_residual_drift=drift,
    )


def track_nu(history: SolveHistory, j: int, horizon: int | None = None, tol: float = 1e-10,
             basis: np.ndarray | None = None, sys: LinearSystem | None = None, rule: str = "membership"):
    """Stopping time ``nu(j)`` from a stored history.

    With ``rule="membership"`` (needs ``sys``) this is the first ``k >= 0``
    such that ``y_j`` lies in the sum of the ranges realized by the
    productive steps ``j, ..., j+k``. With ``rule="iterate_span"`` it is the
    first ``k`` such that step ``j+k`` made progress and ``y_{j+k+1}`` lies
    in ``span{y_j, ..., y_{j+k}}``. The second rule is cheaper but does not
    certify membership in general; it is kept for comparison. ``None`` means
    no such ``k`` appears within ``horizon`` steps or before the history ends.

    Parameters
    ----------
    history : SolveHistory
        Must have been run with ``store_iterates=True``.
    j : int
    horizon : int, optional
    tol : float
    basis : ndarray, optional
        Orthonormal basis of the space the iterates live in; membership is
        tested in its coordinates to discard rounding outside it.
    sys : LinearSystem, optional
        Required for the membership rule.
    rule : {"membership", "iterate_span"}
    """
    if history.ys is None:
        raise ValueError("history was recorded without iterates")
    if rule not in ("membership", "iterate_span"):
        raise ValueError(f"unknown rule {rule!r}")
    if rule == "membership" and (sys is None or history.selector_objs is None):
        raise ValueError("the membership rule needs the system and stored selectors")
    ys = history.ys
    P = np.eye(ys.shape[1]) if basis is None else basis
    ys = ys @ P
    K = history.iterations
    horizon = K if horizon is None else horizon
    tracker = SpanTracker(ys.shape[1], tol)
    if rule == "iterate_span":
        tracker.insert(ys[j])
    for k in range(0, min(horizon, K - j)):
        if not history.chi[j + k]:
            continue
        if rule == "membership":
            for c in (P.T @ selector_range(sys, history.selector_objs[j + k])).T:
                tracker.insert(c)
            if tracker.contains(ys[j]):
                return k
        else:
            nxt = ys[j + k + 1]
            if tracker.contains(nxt):
                return k
            tracker.insert(nxt)
    return None


def tau_schedule(history: SolveHistory) -> list:
    """Checkpoints ``tau_{j+1} = tau_j + nu(tau_j) + 1`` with observed ratios.

    Returns
    -------
    list of (int, float or None)
        ``(tau_j, ||y_{tau_{j+1}}||^2 / ||y_{tau_j}||^2)``; the final entry has
        ratio ``None``.
    """
    taus = [0]
    for j, v in history.nu_records:
        if v is None or j != taus[-1]:
            break
        taus.append(j + v + 1)
    err = history.error_sq
    out = []
    for a, b in zip(taus[:-1], taus[1:]):
        out.append((a, float(err[b] / err[a]) if err[a] > 0 else 0.0))
    out.append((taus[-1], None))
    return out
