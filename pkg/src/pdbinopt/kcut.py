"""Max-k-Cut by primal-dual descent-ascent over softmax-parameterized simplices.

Each node ``i`` carries a column ``X[:, i]`` of class probabilities obtained as
``softmax(Z[:, i])``.  The Lagrangian

    L(X, y) = Tr(X W X^T) + sum_i y_i g(X[:, i])

is minimized over the logits ``Z`` (plain gradient steps, no projection needed)
and maximized over ``y`` with the same simultaneous scheme as the binary
solver.  A column stuck near the uniform distribution with a small gradient
and a non-positive dual gets a random kick to its logits.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintFunction
from .problems import WeightedGraph
from .solver import (GRADIENT_GUARD, ConfigError, NumericFailure, RunSummary, SolverConfig,
                     TraceRow, _merge_checkpoints, run_rng)

__all__ = ["KCutState", "KCutReport", "softmax_cols", "kcut_lagrangian", "kcut_step",
           "kcut_solve", "cut_value"]

_QUADRATIC = ConstraintFunction("quadratic")
_LOG_FLOOR = 1e-300
INIT_SPREAD = 0.1


@dataclass
class KCutState:
    Z: np.ndarray  # (k, n) logits
    y: np.ndarray
    t: int = 0
    rng: np.random.Generator | None = field(default=None, repr=False, compare=False)


@dataclass
class KCutReport:
    assignment: np.ndarray
    cut_value: float
    time_to_best: float
    iterations_run: int
    eps_binary_iteration: int | None
    trace: list[TraceRow]
    runs: list[RunSummary]
    k: int
    status: str = "ok"
    timed_out: bool = False

    def trace_records(self) -> list[dict]:
        return [row.as_record() for row in self.trace]

    def assignment_lines(self) -> list[str]:
        return [f"{i} {int(c)}" for i, c in enumerate(self.assignment)]

    def summary_record(self) -> dict:
        return {"k": self.k, "cut": self.cut_value, "time_to_best": self.time_to_best,
                "iterations": self.iterations_run, "status": self.status}

    def write_assignment(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.assignment_lines()) + "\n")
            fh.write(json.dumps(self.summary_record()) + "\n")


def softmax_cols(Z) -> np.ndarray:
    """Column-wise softmax of a ``(k, n)`` matrix (or a ``(B, k, n)`` stack)."""
    Z = np.asarray(Z, dtype=float)
    E = np.exp(Z - Z.max(axis=-2, keepdims=True))
    return E / E.sum(axis=-2, keepdims=True)


def cut_value(assignment, G: WeightedGraph) -> float:
    a = np.asarray(assignment)
    u, v, w = G.edge_arrays()
    return float(w[a[u] != a[v]].sum())


def _check_g(c: ConstraintFunction) -> None:
    if c.kind == "even_poly":
        raise ConfigError("the even-polynomial constraint has no simplex form")


def kcut_lagrangian(X, y, G: WeightedGraph, c: ConstraintFunction | None = None) -> float:
    """``Tr(X W X^T) + sum_i y_i g(X[:, i])`` for a column-stochastic ``X``."""
    c = c or _QUADRATIC
    _check_g(c)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != G.n or y.shape != (G.n,):
        raise ValueError(f"expected X of shape (k, {G.n}) and y of length {G.n}")
    u, v, w = G.edge_arrays()
    trace = float((2.0 * w * (X[:, u] * X[:, v]).sum(axis=0)).sum())
    penalty = sum(y[i] * c.simplex_value(X[:, i]) for i in range(G.n))
    return trace + float(penalty)


def _grads(Z: np.ndarray, Y: np.ndarray, A, c: ConstraintFunction):
    """Softmax columns and ``dL/dZ`` for a ``(B, k, n)`` stack; also the ``Tr`` part."""
    B, k, n = Z.shape
    X = softmax_cols(Z)
    XW = np.asarray(A @ X.reshape(B * k, n).T).T.reshape(B, k, n)
    if c.kind == "entropy":
        dg = 1.0 + np.log(np.maximum(X, _LOG_FLOOR))
    else:
        dg = 2.0 * X
    GX = 2.0 * XW + Y[:, None, :] * dg
    GZ = X * (GX - (X * GX).sum(axis=1, keepdims=True))
    return X, GZ, XW


def _update(Z, Y, X, GZ, XW, gX, cfg, rngs):
    # gX holds the active constraint's value per column, shape (B, n)
    k = Z.shape[1]
    failed = ~(np.all(np.isfinite(GZ), axis=(1, 2))
               & np.all(np.abs(XW) <= GRADIENT_GUARD, axis=(1, 2)))
    Z_next = Z - cfg.alpha * GZ
    if cfg.perturb:
        stuck = ((X.max(axis=1) - 1.0 / k <= cfg.delta)
                 & (np.abs(GZ).max(axis=1) <= 2 * cfg.delta) & (Y <= 0))
        stuck[failed] = False
        for r, j in zip(*np.nonzero(stuck)):
            Z_next[r, :, j] = Z[r, :, j] + rngs[r].uniform(-1.0, 1.0, k)
    Y_next = Y + cfg.beta * gX
    if failed.any():
        Z_next[failed] = Z[failed]
        Y_next[failed] = Y[failed]
    return Z_next, Y_next, failed


def kcut_step(s: KCutState, G: WeightedGraph, cfg: SolverConfig,
              c: ConstraintFunction | None = None) -> KCutState:
    c = c or cfg.g_kind
    _check_g(c)
    k, n = s.Z.shape
    if n != G.n or s.y.shape != (n,):
        raise ValueError(f"state does not match graph with n={G.n}")
    rng = s.rng if s.rng is not None else run_rng(cfg.seed, 0)
    Z, Y = s.Z[None], s.y[None]
    X, GZ, XW = _grads(Z, Y, G.adjacency(), c)
    gX = c._simplex_value(X, axis=1)
    Z_next, Y_next, failed = _update(Z, Y, X, GZ, XW, gX, cfg, [rng])
    if failed[0]:
        raise NumericFailure(f"non-finite or huge gradient at t={s.t}")
    return KCutState(Z=Z_next[0], y=Y_next[0], t=s.t + 1, rng=rng)


def init_kcut(n: int, k: int, cfg: SolverConfig, run_index: int) -> KCutState:
    rng = run_rng(cfg.seed, run_index)
    Z = rng.uniform(-INIT_SPREAD, INIT_SPREAD, size=(k, n))
    return KCutState(Z=Z, y=np.full(n, float(cfg.y0)), t=0, rng=rng)


def _run_block(G, k, cfg, c, A, run_ids, start, callback):
    n, b = G.n, len(run_ids)
    eps = cfg.eps_for(n)
    u, v, w = G.edge_arrays()
    states = [init_kcut(n, k, cfg, int(r)) for r in run_ids]
    rngs = [s.rng for s in states]
    Za = np.stack([s.Z for s in states])
    Ya = np.full((b, n), float(cfg.y0))

    # values are stored negated (minus cut) so the shared merge logic applies
    best_val = np.full(b, np.inf)
    best_t = np.zeros(b, dtype=int)
    best_wall = np.zeros(b)
    best_lab = np.zeros((b, n), dtype=np.int8)
    eps_iter = np.full(b, -1)
    stable = np.zeros(b, dtype=int)
    prev = np.full((b, n), -1, dtype=np.int8)
    iters = np.zeros(b, dtype=int)
    status = ["running"] * b
    final_gap = np.zeros(b)
    Y_all = Ya.copy()
    act = np.arange(b)
    checkpoints = []
    timed_out = False
    t = 0
    while True:
        X, GZ, XW = _grads(Za, Ya, A, c)
        gq = _QUADRATIC._simplex_value(X, axis=1)
        gX = gq if c.kind == "quadratic" else c._simplex_value(X, axis=1)
        gap = -gq.sum(axis=1)
        newly = (gap <= eps) & (eps_iter[act] < 0)
        eps_iter[act[newly]] = t

        if t % cfg.checkpoint_stride == 0 or t >= cfg.t_max:
            wall = time.perf_counter() - start
            lab = X.argmax(axis=1).astype(np.int8)
            vals = -((lab[:, u] != lab[:, v]) * w).sum(axis=1)
            better = vals < best_val[act]
            rows = act[better]
            best_val[rows] = vals[better]
            best_t[rows] = t
            best_wall[rows] = wall
            best_lab[rows] = lab[better]
            same = np.all(lab == prev[act], axis=1)
            stable[act] = np.where((gap <= eps) & same, stable[act] + 1, 0)
            prev[act] = lab
            Y_all[act] = Ya
            final_gap[act] = gap
            iters[act] = t
            done = stable[act] >= 2
            timed_out = wall >= cfg.time_limit
            for r in act[done]:
                status[r] = "converged"
            if timed_out or t >= cfg.t_max:
                for r in act[~done]:
                    status[r] = "time_limit" if timed_out else "t_max"
                done[:] = True
            checkpoints.append((t, wall, float(best_val.min()), float(final_gap.min()),
                                float(Y_all.min())))
            if done.any():
                keep = ~done
                act, Za, Ya, X, GZ, XW, gX = (act[keep], Za[keep], Ya[keep], X[keep],
                                              GZ[keep], XW[keep], gX[keep])
            if act.size == 0:
                break

        Z_next, Y_next, failed = _update(Za, Ya, X, GZ, XW, gX, cfg, [rngs[r] for r in act])
        if failed.any():
            for r in act[failed]:
                status[r] = "numeric_failure"
                iters[r] = t
            Y_all[act[failed]] = Ya[failed]
            keep = ~failed
            act, Z_next, Y_next = act[keep], Z_next[keep], Y_next[keep]
        Za, Ya = Z_next, Y_next
        t += 1
        if callback is not None and act.size:
            callback(t, Za, Ya, run_ids[act])
        if act.size == 0:
            checkpoints.append((t, time.perf_counter() - start, float(best_val.min()),
                                float(final_gap.min()), float(Y_all.min())))
            break

    summaries = [
        RunSummary(run_index=int(run), best_value=-float(best_val[r]), best_t=int(best_t[r]),
                   best_wall=float(best_wall[r]), iterations=int(iters[r]),
                   eps_binary_iteration=int(eps_iter[r]) if eps_iter[r] >= 0 else None,
                   status=status[r], final_gap=float(final_gap[r]),
                   min_dual=float(Y_all[r].min()), avg_gap_slack=float("nan"),
                   best_binary=best_lab[r].copy())
        for r, run in enumerate(run_ids)]
    return summaries, checkpoints, timed_out


def kcut_solve(G: WeightedGraph, k: int, cfg: SolverConfig, *, threads: int = 1,
               callback=None) -> KCutReport:
    """Multi-start Max-k-Cut; the assignment takes the argmax class of each column."""
    if k < 2:
        raise ConfigError("k must be at least 2")
    if cfg.t_max <= 0 or cfg.time_limit <= 0:
        raise ConfigError("t_max and time_limit must be positive")
    if G.n < 1:
        raise ConfigError("graph has no nodes")
    c = cfg.g_kind
    _check_g(c)
    A = G.adjacency()
    start = time.perf_counter()
    parts = np.array_split(np.arange(cfg.batch), max(1, min(threads, cfg.batch)))

    def work(ids):
        return _run_block(G, k, cfg, c, A, ids, start, callback)

    if len(parts) == 1:
        results = [work(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(work, parts))
    runs = [s for res in results for s in res[0]]
    checkpoints = _merge_checkpoints([res[1] for res in results])
    best = min(runs, key=lambda s: (-s.best_value, s.best_t, s.run_index))
    trace = [TraceRow(t, wall, -b, gap, md) for t, wall, b, gap, md in checkpoints]
    hits = [s.eps_binary_iteration for s in runs if s.eps_binary_iteration is not None]
    all_failed = all(s.status == "numeric_failure" for s in runs)
    return KCutReport(
        assignment=best.best_binary.astype(int), cut_value=best.best_value,
        time_to_best=best.best_wall, iterations_run=max(s.iterations for s in runs),
        eps_binary_iteration=min(hits) if hits else None, trace=trace, runs=runs, k=k,
        status="numeric_failure" if all_failed else "ok",
        timed_out=any(res[2] for res in results))
