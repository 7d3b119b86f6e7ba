"""Perturbed primal-dual gradient descent-ascent for binary optimization.

The binary problem ``min F(x), x in {0,1}^n`` is relaxed to the multilinear
extension ``f`` on the unit cube with one equality constraint ``g(x_i) = 0``
per coordinate.  The solver runs simultaneous projected gradient
descent-ascent on the Lagrangian

    L(x, y) = f(x) + sum_i y_i g(x_i)

starting from ``y = y0 * 1`` with ``y0 > 0``.  Because ``g <= 0`` on the cube
the duals only decrease, gradually turning the convexifying penalty into an
integrality-enforcing one.  Coordinates that stall at the fractional point
1/2 (small partial derivative, non-positive dual) are pushed out of the band
``(1/2 - delta, 1/2 + delta)``.

``solve`` runs ``batch`` independent restarts as rows of one array.  Every
row is computed independently of the others, so results depend only on
``(seed, run index)`` and not on batching or thread count.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .constraints import ENTROPY_CLAMP, ConstraintFunction
from .poly import DimensionError, MultilinearPolynomial

__all__ = [
    "ConfigError", "NumericFailure", "SolverConfig", "RunState", "RunSummary",
    "TraceRow", "SolveReport", "PROBLEM_DEFAULTS", "run_rng", "init_run",
    "project_unit", "project_punctured", "gda_step", "binarity_gap", "snap",
    "solve", "dual_lower_bound",
]

GRADIENT_GUARD = 1e12

# Per-problem defaults: restarts, initial dual, primal and dual step sizes.
PROBLEM_DEFAULTS = {
    "maxcut": dict(batch=100, y0=6.0, alpha=0.025, beta=0.025),
    "mis": dict(batch=10, y0=5.0, alpha=0.02, beta=0.02),
    "maxksat": dict(batch=10, y0=2.0, alpha=0.01, beta=0.005),
    "maxkcut": dict(batch=100, y0=6.0, alpha=0.01, beta=0.01, t_max=40_000),
}


class ConfigError(ValueError):
    """Invalid solver configuration."""


class NumericFailure(ArithmeticError):
    """A gradient became non-finite or exceeded the magnitude guard."""


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.025
    beta: float = 0.025
    delta: float = 0.01
    epsilon: float | None = None  # None means 1e-3 * n
    y0: float = 6.0
    batch: int = 100
    t_max: int = 20_000
    time_limit: float = 180.0
    seed: int = 0
    g_kind: ConstraintFunction = field(default_factory=ConstraintFunction)
    checkpoint_stride: int = 10
    perturb: bool = True

    def __post_init__(self):
        if isinstance(self.g_kind, str):
            object.__setattr__(self, "g_kind", ConstraintFunction.parse(self.g_kind))
        if not (self.alpha > 0 and self.beta > 0 and self.y0 > 0):
            raise ConfigError("alpha, beta and y0 must be positive")
        if not 0 < self.delta < 0.5:
            raise ConfigError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")
        if self.checkpoint_stride < 1:
            raise ConfigError("checkpoint_stride must be >= 1")
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigError("epsilon must be non-negative")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    @classmethod
    def for_problem(cls, problem: str, **overrides) -> SolverConfig:
        """Defaults for ``problem`` with keyword overrides (``None`` values ignored)."""
        try:
            base = dict(PROBLEM_DEFAULTS[problem])
        except KeyError:
            raise ConfigError(f"unknown problem {problem!r}") from None
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def eps_for(self, n: int) -> float:
        return 1e-3 * n if self.epsilon is None else self.epsilon

    def to_dict(self) -> dict:
        d = asdict(self)
        d["g_kind"] = self.g_kind.name
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class RunState:
    x: np.ndarray
    y: np.ndarray
    t: int = 0
    rng: np.random.Generator | None = field(default=None, repr=False, compare=False)


class TraceRow(NamedTuple):
    t: int
    wall_s: float
    best: float
    gap: float
    min_dual: float

    def as_record(self) -> dict:
        return {"t": self.t, "wall_s": self.wall_s, "best": self.best,
                "gap": self.gap, "min_dual": self.min_dual}


@dataclass
class RunSummary:
    run_index: int
    best_value: float
    best_t: int
    best_wall: float
    iterations: int
    eps_binary_iteration: int | None
    status: str
    final_gap: float
    min_dual: float
    avg_gap_slack: float  # max over checkpoints of (average gap - dual bound)
    best_binary: np.ndarray = field(repr=False)


@dataclass
class SolveReport:
    best_binary: np.ndarray
    best_value: float
    time_to_best: float
    iterations_run: int
    eps_binary_iteration: int | None
    trace: list[TraceRow]
    runs: list[RunSummary]
    status: str = "ok"
    sense: str = "min"
    timed_out: bool = False

    def trace_records(self) -> list[dict]:
        return [row.as_record() for row in self.trace]

    def write_trace(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.trace_records():
                fh.write(json.dumps(rec) + "\n")


# -- primitives ---------------------------------------------------------------

def run_rng(seed: int, run_index: int) -> np.random.Generator:
    """Counter-based stream for one restart, keyed by ``(seed, run_index)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run_index])))


def init_run(n: int, cfg: SolverConfig, run_index: int) -> RunState:
    if n < 1:
        raise ConfigError("need at least one variable")
    rng = run_rng(cfg.seed, run_index)
    x = rng.random(n)
    if cfg.g_kind.kind == "entropy":
        np.clip(x, ENTROPY_CLAMP, 1.0 - ENTROPY_CLAMP, out=x)
    return RunState(x=x, y=np.full(n, float(cfg.y0)), t=0, rng=rng)


def project_unit(v):
    out = np.clip(v, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def project_punctured(v, delta: float, rng: np.random.Generator | None = None):
    """Nearest point of ``[0, 1/2 - delta] U [1/2 + delta, 1]``.

    A value exactly at 1/2 goes to either side with probability 1/2 using
    ``rng``; one draw is consumed per tie, in array order.
    """
    arr = np.asarray(v, dtype=float)
    n_ties = int(np.count_nonzero(arr == 0.5))
    if n_ties and rng is None:
        raise ValueError("a value at exactly 1/2 needs an rng for the tie break")
    coins = rng.random(n_ties) < 0.5 if n_ties else np.zeros(0, bool)
    out = _punctured(arr.reshape(-1), delta, coins).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def _punctured(v: np.ndarray, delta: float, up_coins: np.ndarray) -> np.ndarray:
    lo, hi = 0.5 - delta, 0.5 + delta
    out = v.copy()
    out[(v > lo) & (v < 0.5)] = lo
    out[(v > 0.5) & (v < hi)] = hi
    ties = np.flatnonzero(v == 0.5)
    out[ties] = np.where(up_coins, hi, lo)
    return out


def binarity_gap(x, c: ConstraintFunction | None = None):
    """``-sum_i g(x_i)`` over the last axis."""
    c = c or ConstraintFunction()
    vals = np.asarray(c.value(x), dtype=float)
    out = -vals.sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def snap(x) -> np.ndarray:
    return (np.asarray(x) >= 0.5).astype(np.int8)


def dual_lower_bound(theta: float, cfg: SolverConfig) -> float | None:
    """Lower bound on every dual iterate, or ``None`` for the entropy kind.

    ``(1 + theta) / g'(1/2 - delta) + (2 + ceil(1 / (2 alpha))) * beta * g(1/2)``
    """
    g = cfg.g_kind
    if not g.finite_endpoint_slope:
        return None
    slope = g.deriv(0.5 - cfg.delta)
    # round before ceil so 1/(2*alpha) = 20.000000000000004 counts as 20
    steps = math.ceil(round(1.0 / (2.0 * cfg.alpha), 9))
    return (1.0 + theta) / slope + (2 + steps) * cfg.beta * g.value(0.5)


# -- the update ---------------------------------------------------------------

def _update(X: np.ndarray, Y: np.ndarray, gX: np.ndarray, poly: MultilinearPolynomial,
            cfg: SolverConfig, rngs: list[np.random.Generator]):
    """One simultaneous step for a block of rows.

    ``gX`` holds ``g(X)``.  Returns ``(X_next, Y_next, failed_rows)``; failed
    rows are returned unchanged.
    """
    g = cfg.g_kind
    grad_f = poly.gradient(X)
    failed = ~np.all(np.abs(grad_f) <= GRADIENT_GUARD, axis=1)
    dL = grad_f + Y * g._deriv(X)
    X_next = np.clip(X - cfg.alpha * dL, 0.0, 1.0)
    if cfg.perturb:
        stuck = (np.abs(X - 0.5) <= cfg.delta) & (np.abs(dL) <= 2 * cfg.delta) & (Y <= 0)
        stuck[failed] = False
        if stuck.any():
            rows, cols = np.nonzero(stuck)
            vals = X[rows, cols]
            # one draw per exact tie, in row-major order, from that row's stream
            coins = np.array([rngs[rows[k]].random() < 0.5
                              for k in np.flatnonzero(vals == 0.5)], dtype=bool)
            X_next[rows, cols] = _punctured(vals, cfg.delta, coins)
    if g.kind == "entropy":
        np.clip(X_next, ENTROPY_CLAMP, 1.0 - ENTROPY_CLAMP, out=X_next)
    Y_next = Y + cfg.beta * gX
    if failed.any():
        X_next[failed] = X[failed]
        Y_next[failed] = Y[failed]
    return X_next, Y_next, failed


def gda_step(s: RunState, p: MultilinearPolynomial, cfg: SolverConfig) -> RunState:
    """One iteration for a single run; raises ``NumericFailure`` on a bad gradient."""
    if s.x.shape != (p.n,) or s.y.shape != (p.n,):
        raise DimensionError(f"state does not match polynomial with n={p.n}")
    rng = s.rng if s.rng is not None else run_rng(cfg.seed, 0)
    X, Y = s.x[None, :], s.y[None, :]
    X_next, Y_next, failed = _update(X, Y, cfg.g_kind._value(X), p, cfg, [rng])
    if failed[0]:
        raise NumericFailure(f"non-finite or huge gradient at t={s.t}")
    return RunState(x=X_next[0], y=Y_next[0], t=s.t + 1, rng=rng)


# -- multi-start driver ---------------------------------------------------------

Callback = Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]


def _run_block(p: MultilinearPolynomial, cfg: SolverConfig, run_ids: np.ndarray,
               x0: np.ndarray | None, y0: np.ndarray | None, start: float,
               callback: Callback | None):
    """Run the restarts ``run_ids`` in lockstep; returns (summaries, checkpoints)."""
    n, b = p.n, len(run_ids)
    g = cfg.g_kind
    eps = cfg.eps_for(n)
    rngs = []
    X = np.empty((b, n))
    for r, run in enumerate(run_ids):
        st = init_run(n, cfg, int(run))
        rngs.append(st.rng)
        X[r] = st.x
    Y = np.full((b, n), float(cfg.y0))
    if x0 is not None:
        X[:] = x0
    if y0 is not None:
        Y[:] = y0
    Y_init = Y.copy()

    best_val = np.full(b, np.inf)
    best_t = np.zeros(b, dtype=int)
    best_wall = np.zeros(b)
    best_bin = np.zeros((b, n), dtype=np.int8)
    eps_iter = np.full(b, -1)
    cum_gap = np.zeros(b)
    slack = np.full(b, -np.inf)
    stable = np.zeros(b, dtype=int)
    prev_snap = np.full((b, n), -1, dtype=np.int8)
    iters = np.zeros(b, dtype=int)
    status = ["running"] * b
    final_gap = np.zeros(b)
    # final state of stopped rows is written back into these
    Y_all = Y.copy()

    act = np.arange(b)  # chunk-local indices of active rows
    Xa, Ya = X, Y
    checkpoints = []
    timed_out = False
    trivial = p.is_constant()
    t = 0
    while True:
        gX = g._value(Xa)
        gap = -gX.sum(axis=1)
        newly = (gap <= eps) & (eps_iter[act] < 0)
        eps_iter[act[newly]] = t

        if t % cfg.checkpoint_stride == 0 or t >= cfg.t_max or trivial:
            wall = time.perf_counter() - start
            S = snap(Xa)
            vals = p.evaluate(S)
            better = vals < best_val[act]
            rows = act[better]
            best_val[rows] = vals[better]
            best_t[rows] = t
            best_wall[rows] = wall
            best_bin[rows] = S[better]
            if t > 0:
                bound = (Y_init[act] - Ya).sum(axis=1) / (cfg.beta * t)
                slack[act] = np.maximum(slack[act], cum_gap[act] / t - bound)
            same = np.all(S == prev_snap[act], axis=1)
            ok = gap <= eps
            stable[act] = np.where(ok & same, stable[act] + 1, 0)
            prev_snap[act] = S
            Y_all[act] = Ya
            final_gap[act] = gap
            iters[act] = t

            done = (stable[act] >= 2) | trivial
            timed_out = wall >= cfg.time_limit
            halt = timed_out or t >= cfg.t_max
            for r in act[done]:
                status[r] = "converged"
            if halt:
                for r in act[~done]:
                    status[r] = "time_limit" if timed_out else "t_max"
                done[:] = True
            checkpoints.append((t, wall, float(best_val.min()), float(final_gap.min()),
                                float(Y_all.min())))
            if done.any():
                keep = ~done
                act, Xa, Ya, gX, gap = act[keep], Xa[keep], Ya[keep], gX[keep], gap[keep]
            if act.size == 0:
                break

        X_next, Y_next, failed = _update(Xa, Ya, gX, p, cfg, [rngs[r] for r in act])
        cum_gap[act] += gap
        if failed.any():
            for r in act[failed]:
                status[r] = "numeric_failure"
                iters[r] = t
            Y_all[act[failed]] = Ya[failed]
            keep = ~failed
            act, X_next, Y_next = act[keep], X_next[keep], Y_next[keep]
        Xa, Ya = X_next, Y_next
        t += 1
        if callback is not None and act.size:
            callback(t, Xa, Ya, run_ids[act])
        if act.size == 0:
            checkpoints.append((t, time.perf_counter() - start, float(best_val.min()),
                                float(final_gap.min()), float(Y_all.min())))
            break

    summaries = []
    for r, run in enumerate(run_ids):
        summaries.append(RunSummary(
            run_index=int(run), best_value=float(best_val[r]), best_t=int(best_t[r]),
            best_wall=float(best_wall[r]), iterations=int(iters[r]),
            eps_binary_iteration=int(eps_iter[r]) if eps_iter[r] >= 0 else None,
            status=status[r], final_gap=float(final_gap[r]),
            min_dual=float(Y_all[r].min()), avg_gap_slack=float(slack[r]),
            best_binary=best_bin[r].copy()))
    return summaries, checkpoints, timed_out


def _merge_checkpoints(blocks: list[list[tuple]]) -> list[tuple]:
    """Combine per-block checkpoint rows, carrying finished blocks forward."""
    ts = sorted({row[0] for rows in blocks for row in rows})
    merged = []
    pos = [0] * len(blocks)
    for t in ts:
        cur = []
        for k, rows in enumerate(blocks):
            while pos[k] + 1 < len(rows) and rows[pos[k] + 1][0] <= t:
                pos[k] += 1
            cur.append(rows[pos[k]])
        merged.append((t, max(r[1] for r in cur), min(r[2] for r in cur),
                       min(r[3] for r in cur), min(r[4] for r in cur)))
    return merged


def solve(p: MultilinearPolynomial, cfg: SolverConfig, *, sense: str = "min",
          threads: int = 1, init: tuple | None = None,
          callback: Callback | None = None) -> SolveReport:
    """Multi-start primal-dual descent-ascent on ``min p`` over ``{0,1}^n``.

    ``sense="max"`` marks ``p`` as the negation of a maximization objective;
    reported values are then negated back.  ``init=(x0, y0)`` overrides the
    random start (either entry may be ``None``; arrays of shape ``(n,)`` or
    ``(batch, n)``).  ``callback(t, X, Y, run_indices)`` is invoked after every
    step with the active rows; with ``threads > 1`` it runs on worker threads.
    """
    if cfg.t_max <= 0 or cfg.time_limit <= 0:
        raise ConfigError("t_max and time_limit must be positive")
    if p.n < 1:
        raise ConfigError("need at least one variable")
    if sense not in ("min", "max"):
        raise ConfigError(f"sense must be 'min' or 'max', got {sense!r}")
    sign = 1.0 if sense == "min" else -1.0
    x0, y0 = init if init is not None else (None, None)
    if x0 is not None:
        x0 = np.broadcast_to(np.asarray(x0, float), (cfg.batch, p.n))
    if y0 is not None:
        y0 = np.broadcast_to(np.asarray(y0, float), (cfg.batch, p.n))

    start = time.perf_counter()
    parts = np.array_split(np.arange(cfg.batch), max(1, min(threads, cfg.batch)))

    def work(ids):
        sl = slice(ids[0], ids[-1] + 1)
        return _run_block(p, cfg, ids, None if x0 is None else x0[sl],
                          None if y0 is None else y0[sl], start, callback)

    if len(parts) == 1:
        results = [work(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(work, parts))

    runs = [s for res in results for s in res[0]]
    checkpoints = _merge_checkpoints([res[1] for res in results])
    best = min(runs, key=lambda s: (s.best_value, s.best_t, s.run_index))
    trace = [TraceRow(t, wall, sign * b, gap, md) for t, wall, b, gap, md in checkpoints]
    eps_hits = [s.eps_binary_iteration for s in runs if s.eps_binary_iteration is not None]
    all_failed = all(s.status == "numeric_failure" for s in runs)
    for s in runs:
        s.best_value *= sign
    return SolveReport(
        best_binary=best.best_binary.copy(), best_value=best.best_value,
        time_to_best=best.best_wall, iterations_run=max(s.iterations for s in runs),
        eps_binary_iteration=min(eps_hits) if eps_hits else None, trace=trace,
        runs=runs, status="numeric_failure" if all_failed else "ok", sense=sense,
        timed_out=any(res[2] for res in results))
