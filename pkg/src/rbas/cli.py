"""Command line experiment runner.

Usage::

    rbas solve --config run.ini --out results/
    rbas meany-table --samples 10000 --out results/
    rbas gamma-table --out results/
    rbas locality --out results/
    rbas jl-dim

Configuration files use INI syntax (``[section]`` headers and
``key = value`` lines, ``#`` or ``;`` comments). Every command accepts
``--seed``; without it a seed is derived from a hash of the configuration
text and printed to stderr so the run can be replayed.

Exit status is 0 on success, 2 on configuration errors and 3 on numerical
failures.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import re
import sys
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_text, render_csv
from .engine import NumericalFailure, run, tau_schedule
from .linalg import make_rng
from .meany import (
    QUANTILE_LEVELS,
    CombinatorialCapError,
    MeanyEstimate,
    gamma_for_partition,
    gamma_table_csv,
    meany_sup_estimate,
)
from .samplers import REGISTRY, SamplerError, SamplerSpec, make_sampler
from .sketch import ACHLIOPTAS_C, ACHLIOPTAS_W, JlParams, jl_failure_bound, jl_min_embedding_dim
from .system import LinearSystem, load_system, make_partition

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

#: 4 x 3 system whose two 2-row blocks give the basis-sampling table.
MEANY_EXAMPLE = np.array([[2.0, 1.0, 0.0], [-1.0, 2.0, 3.0], [1.0, -3.0, 6.0], [0.0, 1.0, -5.0]])
#: 4 x 3 system with two nearly parallel rows, used for partition comparisons.
PARTITION_EXAMPLE = np.array([[1.0, -1.0, 1.0], [1.0, -1.0, 1.0 + 1e-5], [3.0, -1.0, 3.0], [0.0, 1.0, 6.0]])
#: Row partitions of PARTITION_EXAMPLE, from worst to best rate.
PARTITIONS = {"I": [[0, 1], [2, 3]], "II": [[0, 2], [1, 3]], "III": [[0, 3], [1, 2]]}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# ------------------------------------------------------------------ config

class Config:
    """Parsed INI configuration that remembers key line numbers for errors."""

    def __init__(self, text: str = "", path: str = "<config>"):
        self.text = text
        self.path = path
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        self.parser.optionxform = str
        try:
            self.parser.read_string(text, source=path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        self._lines = self._index_lines(text)

    @classmethod
    def from_file(cls, path) -> "Config":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls(text, str(path))

    @staticmethod
    def _index_lines(text: str) -> dict:
        out, section = {}, None
        for no, line in enumerate(text.splitlines(), 1):
            s = line.strip()
            m = re.match(r"^\[(.+)\]$", s)
            if m:
                section = m.group(1).strip()
                out[(section, None)] = no
                continue
            m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", s)
            if m and section is not None:
                out[(section, m.group(1).strip())] = no
        return out

    def where(self, section: str, key: str | None = None) -> str:
        no = self._lines.get((section, key)) or self._lines.get((section, None))
        return f"{self.path}:{no}" if no else self.path

    def error(self, section: str, key: str | None, msg: str) -> ConfigError:
        label = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{self.where(section, key)}: {label}: {msg}")

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def get(self, section: str, key: str, default=None, type=str, choices=None):
        if not self.parser.has_option(section, key):
            return default
        raw = self.parser.get(section, key).strip()
        try:
            val = type(raw)
        except (TypeError, ValueError) as exc:
            raise self.error(section, key, f"invalid value {raw!r} ({exc})") from None
        if choices is not None and val not in choices:
            raise self.error(section, key, f"{raw!r} is not one of {', '.join(map(str, choices))}")
        return val

    def keys(self, section: str) -> list:
        return list(self.parser[section].keys()) if self.parser.has_section(section) else []

    @property
    def digest(self) -> int:
        h = hashlib.sha256(self.text.encode()).digest()
        return int.from_bytes(h[:8], "little") & (2**63 - 1)


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _floats(raw: str) -> np.ndarray:
    return np.array([float(t) for t in re.split(r"[,\s]+", raw.strip()) if t])


def parse_blocks(raw: str) -> list:
    """``"0,1 | 2,3"`` or ``"0 1; 2 3"`` to ``[[0, 1], [2, 3]]``."""
    out = []
    for part in re.split(r"[|;]", raw):
        toks = [t for t in re.split(r"[,\s]+", part.strip()) if t]
        if toks:
            out.append([int(t) for t in toks])
    if not out:
        raise ValueError("no blocks given")
    return out


def derive_seed(master: int, tag: str) -> int:
    """Stable sub-seed for a named component."""
    ss = np.random.SeedSequence([master, zlib.crc32(tag.encode())])
    return int(ss.generate_state(1, np.uint64)[0] & np.uint64(2**63 - 1))


# --------------------------------------------------------------- systems

def anova_design(treatments: int = 50, replicates: int = 20, extra_cols: int = 0, seed=None) -> np.ndarray:
    """Balanced one-way design: one indicator column per treatment.

    ``extra_cols`` Gaussian columns are appended when requested.
    """
    X = np.kron(np.eye(treatments), np.ones((replicates, 1)))
    if extra_cols:
        rng = make_rng(seed)
        X = np.hstack([X, rng.standard_normal((X.shape[0], extra_cols))])
    return X


def random_system(n: int, d: int, rank: int | None = None, consistent: bool = True, seed=None) -> LinearSystem:
    """Gaussian system of a prescribed rank, consistent or not."""
    rng = make_rng(seed)
    rank = min(n, d) if rank is None else rank
    A = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, d)) if rank < min(n, d) \
        else rng.standard_normal((n, d))
    b = A @ rng.standard_normal(d)
    if not consistent:
        b = b + rng.standard_normal(n)
    return LinearSystem(A, b)


def build_system(cfg: Config, master: int) -> LinearSystem:
    sec = "system"
    source = cfg.get(sec, "source", "random",
                     choices=("identity", "meany_example", "partition_example", "anova", "random", "file"))
    seed = cfg.get(sec, "seed", derive_seed(master, "system"), int)
    if source == "file":
        path = cfg.get(sec, "path")
        if path is None:
            raise cfg.error(sec, "path", "required when source = file")
        base = Path(cfg.path).parent
        try:
            return load_system(base / path, (base / cfg.get(sec, "b_path")) if cfg.has(sec, "b_path") else None,
                               cfg.get(sec, "format"))
        except ValueError as exc:
            raise cfg.error(sec, "path", str(exc)) from None
    if source == "identity":
        n = cfg.get(sec, "n", 2, int)
        return LinearSystem(np.eye(n), np.ones(n))
    if source in ("meany_example", "partition_example"):
        A = MEANY_EXAMPLE if source == "meany_example" else PARTITION_EXAMPLE
        return LinearSystem(A, A @ np.ones(3))
    if source == "anova":
        X = anova_design(cfg.get(sec, "treatments", 50, int), cfg.get(sec, "replicates", 20, int),
                         cfg.get(sec, "extra_cols", 0, int), seed)
        b = make_rng(derive_seed(seed, "rhs")).standard_normal(X.shape[0])
        return LinearSystem(X, b)
    n = cfg.get(sec, "n", 20, int)
    d = cfg.get(sec, "d", 5, int)
    if n < 1 or d < 1:
        raise cfg.error(sec, "n", "dimensions must be positive")
    return random_system(n, d, cfg.get(sec, "rank", None, int), cfg.get(sec, "consistent", True, _bool), seed)


def build_sampler_spec(cfg: Config, sys: LinearSystem, master: int) -> SamplerSpec:
    sec = "sampler"
    name = cfg.get(sec, "name", None)
    if name is None:
        raise cfg.error(sec, None, "missing required key 'name'")
    if name not in REGISTRY:
        raise cfg.error(sec, "name", f"unknown sampler {name!r}")
    partition = None
    if cfg.has(sec, "partition"):
        raw = cfg.get(sec, "partition")
        if raw in PARTITIONS:
            partition = PARTITIONS[raw]
        elif raw.isdigit():
            partition = int(raw)
        else:
            partition = cfg.get(sec, "partition", type=parse_blocks)
    sketch = None
    if cfg.has(sec, "rho") or cfg.has(sec, "epsilon"):
        sketch = JlParams.from_constants(cfg.get(sec, "C", ACHLIOPTAS_C, float), cfg.get(sec, "w", ACHLIOPTAS_W, float),
                                         cfg.get(sec, "rho", 4.0, float), cfg.get(sec, "epsilon", 20, int))
    try:
        spec = SamplerSpec(
            name=name,
            partition=partition,
            p=cfg.get(sec, "p", 2.0, float),
            sample_size=cfg.get(sec, "sample_size", None, int),
            block_size=cfg.get(sec, "block_size", None, int),
            sketch=sketch,
            distribution=cfg.get(sec, "distribution", "achlioptas", choices=("achlioptas", "gaussian")),
            seed=cfg.get(sec, "seed", derive_seed(master, "sampler"), int),
        )
        make_sampler(spec, sys)  # validates partition against the system
    except ValueError as exc:
        raise cfg.error(sec, None, str(exc)) from None
    return spec


def build_x0(cfg: Config, sys: LinearSystem, master: int) -> np.ndarray:
    sec = "start"
    kind = cfg.get(sec, "x0", "zero")
    if kind == "zero":
        return np.zeros(sys.d)
    if kind == "random":
        return make_rng(cfg.get(sec, "seed", derive_seed(master, "x0"), int)).standard_normal(sys.d)
    vals = cfg.get(sec, "x0", type=_floats)
    if vals.shape[0] != sys.d:
        raise cfg.error(sec, "x0", f"expected {sys.d} values, got {vals.shape[0]}")
    return vals


# ---------------------------------------------------------- locality model

@dataclass
class ChunkCostModel:
    """Out-of-core access model: one chunk resident, each switch costs one load.

    Attributes
    ----------
    chunk_size : int
        Rows per chunk.
    load_cost : float
        Cost charged per chunk fetch.
    resident_chunk : int or None
    loads : int
    """

    chunk_size: int
    load_cost: float = 1.0
    resident_chunk: int | None = None
    loads: int = 0

    def touch_row(self, row: int) -> None:
        self.touch(row // self.chunk_size)

    def touch(self, chunk: int) -> None:
        if chunk != self.resident_chunk:
            self.resident_chunk = chunk
            self.loads += 1

    @property
    def cost(self) -> float:
        return self.loads * self.load_cost


def block_step_flops(m: int, d: int) -> int:
    """Operation count of one least-squares block projection via Householder QR."""
    return 2 * m * d + (2 * m * d * d - (2 * d**3) // 3) + 4 * m * d + d * d + d


@dataclass
class LocalityResult:
    method: str
    iterations: int
    chunk_loads: int
    load_cost: float
    arithmetic_ops: int
    final_error_sq: float
    access: list = field(default_factory=list, repr=False)


def simulate_locality(n: int = 100_000, d: int = 50, chunk: int = 10_000, load_cost: float = 1.0,
                      seed=None, tol: float = 1e-16, max_block_iter: int = 100) -> list:
    """Compare an oracle solver and block Kaczmarz under the chunk cost model.

    The system is Gaussian with ``d`` rows replaced by the identity rows
    ``e_1..e_d`` at uniformly random positions. The oracle solver knows
    where they are and projects onto each once (``d`` iterations, two
    operations apiece) but jumps between chunks. Block Kaczmarz projects
    onto whole chunks in storage order until the error drops below
    ``tol * ||x*||^2``.

    Returns
    -------
    list of LocalityResult
        Oracle first, then block Kaczmarz.
    """
    if chunk < 1 or n < d:
        raise ValueError("need chunk >= 1 and n >= d")
    rng = make_rng(seed)
    A = rng.standard_normal((n, d))
    pos = rng.choice(n, size=d, replace=False)
    A[pos] = np.eye(d)
    x_star = rng.standard_normal(d)
    b = A @ x_star
    scale = float(x_star @ x_star)

    model = ChunkCostModel(chunk, load_cost)
    x = np.zeros(d)
    ops = 0
    order = rng.permutation(d)
    for i in order:
        row = int(pos[i])
        model.touch_row(row)
        x[i] -= x[i] - b[row]
        ops += 2
    oracle = LocalityResult("oracle", d, model.loads, model.cost, ops,
                            float(np.sum((x - x_star) ** 2)), [int(p) // chunk for p in pos[order]])

    model = ChunkCostModel(chunk, load_cost)
    x = np.zeros(d)
    ops = 0
    n_chunks = -(-n // chunk)
    it = 0
    access = []
    while it < max_block_iter:
        c = it % n_chunks
        lo, hi = c * chunk, min(n, (c + 1) * chunk)
        model.touch(c)
        access.append(c)
        AI = A[lo:hi]
        x = x - np.linalg.lstsq(AI, AI @ x - b[lo:hi], rcond=None)[0]
        ops += block_step_flops(hi - lo, d)
        it += 1
        if np.sum((x - x_star) ** 2) <= tol * scale:
            break
    block = LocalityResult("block_kaczmarz", it, model.loads, model.cost, ops,
                           float(np.sum((x - x_star) ** 2)), access)
    return [oracle, block]


# --------------------------------------------------------------- commands

def _out_path(out_dir: Path, cfg: Config, key: str, default: str) -> Path:
    return out_dir / cfg.get("output", key, default)


def cmd_solve(cfg: Config, master: int, out_dir: Path) -> dict:
    sys_ = build_system(cfg, master)
    spec = build_sampler_spec(cfg, sys_, master)
    x0 = build_x0(cfg, sys_, master)
    sec = "stop"
    sampler = make_sampler(spec, sys_)
    if sampler.side == "row" and not sys_.consistent:
        raise cfg.error("system", None, "row-action samplers need a consistent system")
    hist = run(sys_, sampler, x0,
               max_iter=cfg.get(sec, "max_iter", 1000, int),
               error_tol=cfg.get(sec, "error_tol", 0.0, float),
               max_seconds=cfg.get(sec, "max_seconds", None, float))
    hist.meta["seed"] = master
    hist.to_csv(_out_path(out_dir, cfg, "history", "history.csv"))
    taus = tau_schedule(hist)
    nus = dict((j, v) for j, v in hist.nu_records)
    rows = [(i, t, nus.get(t), g) for i, (t, g) in enumerate(taus)]
    atomic_write_text(_out_path(out_dir, cfg, "tau", "tau.csv"),
                      render_csv("tau-schedule", ["j", "tau", "nu", "gamma_observed"], rows, {"seed": master}))
    summary = {"sampler": spec.name, "iterations": hist.iterations, "final_error_sq": float(hist.error_sq[-1]),
               "stop_reason": hist.stop_reason, "checkpoints": len(taus), "seed": master}
    atomic_write_text(_out_path(out_dir, cfg, "summary", "summary.csv"),
                      render_csv("solve-summary", ["key", "value"], list(summary.items())))
    return summary


def cmd_meany_table(cfg: Config, master: int, out_dir: Path, samples: int | None) -> MeanyEstimate:
    sec = "meany"
    if cfg.has("system"):
        A = build_system(cfg, master).A
    else:
        A = MEANY_EXAMPLE
    blocks = cfg.get(sec, "blocks", [[0, 1], [2, 3]], parse_blocks)
    for blk in blocks:
        if max(blk) >= A.shape[0] or min(blk) < 0:
            raise cfg.error(sec, "blocks", f"row index out of range for {A.shape[0]} equations")
    n = samples if samples is not None else cfg.get(sec, "samples", 10_000, int)
    if n < 1:
        raise cfg.error(sec, "samples", "must be at least 1")
    est = meany_sup_estimate([A[b].T for b in blocks], n, cfg.get(sec, "seed", master, int),
                             cfg.get(sec, "sampling", "span", choices=("span", "haar")))
    label = " | ".join(",".join(map(str, b)) for b in blocks)
    est.to_csv(_out_path(out_dir, cfg, "meany_table", "meany_table.csv"), label)
    return est


def cmd_gamma_table(cfg: Config, master: int, out_dir: Path, samples: int | None) -> list:
    sys_ = build_system(cfg, master) if cfg.has("system") else \
        LinearSystem(PARTITION_EXAMPLE, PARTITION_EXAMPLE @ np.ones(3))
    parts = {k: cfg.get("partitions", k, type=parse_blocks) for k in cfg.keys("partitions")} or dict(PARTITIONS)
    n = samples if samples is not None else cfg.get("gamma", "samples", 10_000, int)
    reports = []
    for label, blocks in parts.items():
        try:
            part = make_partition(sys_, "row", explicit=blocks)
        except ValueError as exc:
            raise cfg.error("partitions", label, str(exc)) from None
        reports.append(gamma_for_partition(sys_, part, n, cfg.get("gamma", "seed", master, int), label))
    gamma_table_csv(reports, _out_path(out_dir, cfg, "gamma_table", "gamma_table.csv"), {"seed": master})
    return reports


def cmd_locality(cfg: Config, master: int, out_dir: Path) -> list:
    sec = "locality"
    res = simulate_locality(cfg.get(sec, "n", 100_000, int), cfg.get(sec, "d", 50, int),
                            cfg.get(sec, "chunk", 10_000, int), cfg.get(sec, "load_cost", 1.0, float),
                            cfg.get(sec, "seed", master, int))
    rows = [(r.method, r.iterations, r.chunk_loads, r.load_cost, r.arithmetic_ops, r.final_error_sq) for r in res]
    atomic_write_text(_out_path(out_dir, cfg, "locality", "locality.csv"),
                      render_csv("locality", ["method", "iterations", "chunk_loads", "load_cost",
                                              "arithmetic_ops", "final_error_sq"], rows, {"seed": master}))
    return res


def cmd_jl_dim(cfg: Config, out_dir: Path | None) -> tuple:
    sec = "jl"
    C = cfg.get(sec, "C", ACHLIOPTAS_C, float)
    w = cfg.get(sec, "w", ACHLIOPTAS_W, float)
    rho = cfg.get(sec, "rho", 4.0, float)
    eps = cfg.get(sec, "epsilon", 20.0, float)
    if min(C, w, rho) <= 0:
        raise cfg.error(sec, None, "C, w and rho must be positive")
    p, bound = jl_min_embedding_dim(C, w, rho), jl_failure_bound(rho, eps)
    if out_dir is not None:
        atomic_write_text(out_dir / cfg.get("output", "jl", "jl_dim.csv"),
                          render_csv("jl-dim", ["C", "w", "rho", "epsilon", "p", "failure_bound"],
                                     [(C, w, rho, eps, p, bound)]))
    return p, bound


# ----------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbas", description="Randomized block projection solver experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [("solve", "run one solver and write its history"),
                           ("meany-table", "quantiles of Meany constants over random bases"),
                           ("gamma-table", "worst-case rates of block partitions"),
                           ("locality", "chunk-load comparison of an oracle and a block solver"),
                           ("jl-dim", "sketch width and failure bound")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", type=Path, help="INI configuration file")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--samples", type=int, help="number of random basis draws")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = Config.from_file(args.config) if args.config else Config()
        if args.command == "solve" and args.config is None:
            raise ConfigError("solve requires --config")
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            master = args.seed
        else:
            master = cfg.digest
            print(f"seed={master}", file=sys.stderr)
        if args.samples is not None and args.samples < 1:
            raise ConfigError("--samples must be at least 1")
        out = args.out
        if args.command == "solve":
            s = cmd_solve(cfg, master, out)
            print(f"{s['sampler']}: {s['iterations']} iterations, error_sq={s['final_error_sq']:.3e} ({s['stop_reason']})")
        elif args.command == "meany-table":
            est = cmd_meany_table(cfg, master, out, args.samples)
            q = est.quantiles()
            print("  ".join(f"{lvl}:{q[lvl]:.3g}" for lvl in QUANTILE_LEVELS) + f"  sup:{est.sup_observed:.4f}")
        elif args.command == "gamma-table":
            for g in cmd_gamma_table(cfg, master, out, args.samples):
                print(f"{g.partition_id}: gamma={g.gamma:.3f}")
        elif args.command == "locality":
            for r in cmd_locality(cfg, master, out):
                print(f"{r.method}: loads={r.chunk_loads} ops={r.arithmetic_ops} error_sq={r.final_error_sq:.2e}")
        else:
            p, bound = cmd_jl_dim(cfg, out if args.config or args.out != Path(".") else None)
            print(f"p={p} failure_bound={bound:.6g}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, np.linalg.LinAlgError, SamplerError, CombinatorialCapError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
