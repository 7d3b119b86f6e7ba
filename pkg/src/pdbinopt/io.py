"""Instance parsers, generators and result files.

Formats:

* Gset edge lists: header ``n m`` then ``u v w`` per edge, 1-indexed.
* DIMACS CNF: ``c`` comment lines, header ``p cnf n m``, clauses as signed
  1-based integers terminated by ``0`` (a clause may span lines).
* Results: JSON lines, one ``ResultRecord`` per line, plus an optional CSV
  summary with columns ``instance,obj,time``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .problems import CnfError, CnfFormula, GraphError, WeightedGraph

__all__ = [
    "ParseError", "ResultRecord", "parse_gset", "format_gset", "read_gset",
    "parse_dimacs_cnf", "format_dimacs_cnf", "read_dimacs_cnf", "gen_rrg", "gnp_graph",
    "random_kcnf", "write_results", "read_results",
]

RRG_MAX_RESTARTS = 1000


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _text(data) -> str:
    if isinstance(data, (bytes, bytearray)):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8 text ({exc.reason})") from None
    return data


def _numbered(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line:
            yield no, line


# -- Gset ----------------------------------------------------------------------

def parse_gset(data) -> WeightedGraph:
    lines = _numbered(_text(data))
    try:
        no, header = next(lines)
    except StopIteration:
        raise ParseError("empty input") from None
    parts = header.split()
    try:
        if len(parts) != 2:
            raise ValueError
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(f"expected header 'n m', got {header!r}", no) from None
    if n < 0 or m < 0:
        raise ParseError("negative counts in header", no)
    edges = []
    seen = set()
    for no, line in lines:
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"expected 'u v w', got {line!r}", no) from None
        if not (1 <= u <= n and 1 <= v <= n):
            raise ParseError(f"node index outside [1, {n}]", no)
        if u == v:
            raise ParseError(f"self-loop at node {u}", no)
        if not np.isfinite(w):
            raise ParseError("non-finite weight", no)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(f"duplicate edge {key}", no)
        seen.add(key)
        edges.append((u - 1, v - 1, w))
    if len(edges) != m:
        raise ParseError(f"declared {m} edges, found {len(edges)}")
    try:
        return WeightedGraph(n, tuple(edges))
    except GraphError as exc:
        raise ParseError(str(exc)) from None


def _fmt_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def format_gset(G: WeightedGraph) -> str:
    rows = [f"{G.n} {G.m}"]
    rows += [f"{u + 1} {v + 1} {_fmt_weight(w)}" for u, v, w in G.edges]
    return "\n".join(rows) + "\n"


def read_gset(path) -> WeightedGraph:
    return parse_gset(Path(path).read_bytes())


# -- DIMACS CNF ----------------------------------------------------------------

def parse_dimacs_cnf(data) -> CnfFormula:
    n = m = None
    clauses: list[list[int]] = []
    current: list[int] = []
    last_no = 0
    for no, line in _numbered(_text(data)):
        last_no = no
        if line.startswith("c"):
            continue
        if line.startswith("%"):
            break  # SATLIB end marker
        if line.startswith("p"):
            parts = line.split()
            if n is not None:
                raise ParseError("second header", no)
            try:
                if len(parts) != 4 or parts[1] != "cnf":
                    raise ValueError
                n, m = int(parts[2]), int(parts[3])
                if n < 0 or m < 0:
                    raise ValueError
            except ValueError:
                raise ParseError(f"expected 'p cnf n m', got {line!r}", no) from None
            continue
        if n is None:
            raise ParseError("clause before the 'p cnf' header", no)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", no) from None
            if lit == 0:
                if not current:
                    raise ParseError("empty clause", no)
                clauses.append(current)
                current = []
            elif abs(lit) > n:
                raise ParseError(f"literal {lit} exceeds {n} variables", no)
            else:
                current.append(lit)
    if n is None:
        raise ParseError("missing 'p cnf' header")
    if current:
        raise ParseError("last clause is not terminated by 0", last_no)
    if len(clauses) != m:
        raise ParseError(f"declared {m} clauses, found {len(clauses)}")
    try:
        return CnfFormula.from_clauses(n, clauses)
    except CnfError as exc:
        raise ParseError(str(exc)) from None


def format_dimacs_cnf(F: CnfFormula) -> str:
    rows = [f"p cnf {F.n_vars} {F.m}"]
    for clause in F.clauses:
        lits = [-(v + 1) if neg else v + 1 for v, neg in clause]
        rows.append(" ".join(map(str, lits)) + " 0")
    return "\n".join(rows) + "\n"


def read_dimacs_cnf(path) -> CnfFormula:
    return parse_dimacs_cnf(Path(path).read_bytes())


# -- generators ------------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _has_free_pair(nodes: np.ndarray, edges: set[tuple[int, int]]) -> bool:
    nodes = np.unique(nodes)
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if (int(a), int(b)) not in edges:
                return True
    return False


def gen_rrg(n: int, d: int, seed=0) -> WeightedGraph:
    """Uniformly-weighted simple d-regular graph by stub pairing.

    Stubs are shuffled and paired; pairs forming a self-loop or repeating an
    edge are rejected and their stubs re-paired in the next round.  When the
    leftover stubs admit no valid pair the pairing restarts from scratch.
    """
    if n < 1 or d < 0 or (n * d) % 2 or d >= n:
        raise ValueError(f"no simple {d}-regular graph on {n} nodes (need n*d even, d < n)")
    rng = _rng(seed)
    for _ in range(RRG_MAX_RESTARTS):
        edges: set[tuple[int, int]] = set()
        stubs = np.repeat(np.arange(n), d)
        while stubs.size:
            rng.shuffle(stubs)
            a, b = stubs[0::2], stubs[1::2]
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            accept = np.zeros(lo.size, bool)
            for i, (p, q) in enumerate(zip(lo.tolist(), hi.tolist())):
                if p != q and (p, q) not in edges:
                    edges.add((p, q))
                    accept[i] = True
            stubs = np.concatenate([a[~accept], b[~accept]])
            if not accept.any() and not _has_free_pair(stubs, edges):
                break
        if not stubs.size:
            return WeightedGraph(n, tuple((u, v, 1.0) for u, v in sorted(edges)))
    raise RuntimeError(f"no {d}-regular graph after {RRG_MAX_RESTARTS} restarts")


def gnp_graph(n: int, p: float, seed=0, weights=None) -> WeightedGraph:
    """Erdos-Renyi graph; ``weights`` is an optional sequence of values sampled per edge."""
    rng = _rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    iu, ju = iu[keep], ju[keep]
    if weights is None:
        w = np.ones(iu.size)
    else:
        w = rng.choice(np.asarray(weights, dtype=float), size=iu.size)
    return WeightedGraph(n, tuple(zip(iu.tolist(), ju.tolist(), w.tolist())))


def random_kcnf(n: int, m: int, k: int = 3, seed=0) -> CnfFormula:
    """``m`` clauses over ``k`` distinct variables each, uniform random signs."""
    rng = _rng(seed)
    clauses = []
    for _ in range(m):
        vars_ = rng.choice(n, size=k, replace=False)
        signs = rng.random(k) < 0.5
        clauses.append([(int(v), bool(s)) for v, s in zip(vars_, signs)])
    return CnfFormula.from_clauses(n, clauses)


# -- results -----------------------------------------------------------------

@dataclass
class ResultRecord:
    instance: str
    problem: str
    objective: float
    time_to_best: float
    iterations: int
    config: str  # configuration fingerprint
    feasible: bool | None = None

    def __post_init__(self):
        if not np.isfinite(self.objective):
            raise ValueError("objective must be finite")


def write_results(records, path, csv_path=None) -> None:
    path = Path(path)
    try:
        with path.open("w") as fh:
            for rec in records:
                fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")
        if csv_path is not None:
            with Path(csv_path).open("w", newline="") as fh:
                out = csv.writer(fh)
                out.writerow(["instance", "obj", "time"])
                for rec in records:
                    out.writerow([rec.instance, rec.objective, f"{rec.time_to_best:.3f}"])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> list[ResultRecord]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
    return [ResultRecord(**json.loads(line)) for line in text.splitlines() if line.strip()]
