"""Generators, flat-file formats and the command-line front end.

Graph files: a "vertices N" header, then one "e u v" line per edge;
"#" starts a comment.  Instance files: "points N", optional "rank d",
then a "metric explicit" section with N*(N-1)/2 lines "d i j value"
(value an integer or num/den) and a "mu explicit" section with lines
"m i j k v".  Sections left out of an instance file are filled from a
graph when one is supplied alongside.

Exit status is 0 only when every requested check passed; failures
print one JSON object naming the violated rule.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import coarse_median
from .coarse_median import (
    CoarseMedianInstance,
    CoarseWitnessProvider,
    check_lemma_6_2,
    check_lemma_6_5,
    coarsened_grid,
    find_deep_point,
    from_median_graph,
    l_constants,
    measured_h5,
)
from .cube_complex import hyperplanes, normal_cube_path, rank, separators
from .errors import (
    BudgetExceeded,
    ConditionViolation,
    MedianCertError,
    MedianViolation,
)
from .median_core import MedianGraph
from .propa_engine import (
    CSV_HEADER,
    Cat0WitnessProvider,
    certify,
    eligible_sample,
)

GRAPH_KINDS = ("hypercube", "grid", "tree", "staircase", "median-closure")


# -- generators --------------------------------------------------------


def _hypercube(d: int) -> MedianGraph:
    edges = [
        (v, v | (1 << i))
        for v in range(1 << d)
        for i in range(d)
        if not v >> i & 1
    ]
    return MedianGraph(1 << d, edges)


def _grid(w: int, h: int) -> MedianGraph:
    # w and h count edges per side, so the grid has (w+1)*(h+1) vertices
    cols, rows = w + 1, h + 1
    edges = []
    for i in range(cols):
        for j in range(rows):
            if i + 1 < cols:
                edges.append((i * rows + j, (i + 1) * rows + j))
            if j + 1 < rows:
                edges.append((i * rows + j, i * rows + j + 1))
    return MedianGraph(cols * rows, edges)


def _tree(branching: int, depth: int) -> MedianGraph:
    if branching < 1:
        raise ValueError("branching must be at least 1")
    edges = []
    frontier = [0]
    nxt = 1
    for _ in range(depth):
        grown = []
        for parent in frontier:
            for _ in range(branching):
                edges.append((parent, nxt))
                grown.append(nxt)
                nxt += 1
        frontier = grown
    return MedianGraph(nxt, edges)


def _staircase(n: int) -> MedianGraph:
    # n unit squares glued corner to corner along a diagonal
    edges = []
    for k in range(n):
        a = 3 * k
        edges += [(a, a + 1), (a, a + 2), (a + 1, a + 3), (a + 2, a + 3)]
    return MedianGraph(3 * n + 1, edges)


def _majority_closure(points, cap: int) -> list[int]:
    cur = set(int(p) for p in points)
    while True:
        fresh = set()
        lst = sorted(cur)
        for i, a in enumerate(lst):
            for b in lst[i + 1:]:
                both = a & b
                either = a | b
                for c in lst:
                    m = both | (either & c)
                    if m not in cur:
                        fresh.add(m)
        if not fresh:
            return sorted(cur)
        cur |= fresh
        if len(cur) > cap:
            raise BudgetExceeded(
                "majority closure exceeded its cap", cap=cap, size=len(cur)
            )


def _closure_graph(n_pts: int, d: int, seed: int, cap: int = 4096) -> MedianGraph:
    """Sample n_pts hypercube vertices, close under bitwise majority,
    take the induced subgraph.  Retries seeds that land on a
    disconnected or degenerate induced graph."""
    rng = random.Random(seed)
    space = 1 << d
    for _ in range(64):
        pts = rng.sample(range(space), min(n_pts, space))
        closure = _majority_closure(pts, cap)
        idx = {v: i for i, v in enumerate(closure)}
        edges = [
            (idx[u], idx[v])
            for i, u in enumerate(closure)
            for v in closure[i + 1:]
            if (u ^ v).bit_count() == 1
        ]
        try:
            g = MedianGraph(len(closure), edges)
            g.median_table()
        except (ValueError, MedianViolation, BudgetExceeded):
            continue
        return g
    raise BudgetExceeded(
        "no usable closure graph in 64 attempts", points=n_pts, dim=d
    )


_PARAM_COUNT = {
    "hypercube": 1, "grid": 2, "tree": 2, "staircase": 1,
    "median-closure": 2, "coarse-grid": 2,
}


def generate(kind: str, params, seed: int = 0) -> MedianGraph:
    """Deterministic generator for the five graph kinds; only
    median-closure consumes the seed."""
    p = [int(v) for v in params]
    if kind in _PARAM_COUNT and len(p) != _PARAM_COUNT[kind]:
        raise ValueError(f"{kind} takes {_PARAM_COUNT[kind]} parameter(s)")
    if kind == "hypercube":
        return _hypercube(p[0])
    if kind == "grid":
        return _grid(p[0], p[1])
    if kind == "tree":
        return _tree(p[0], p[1])
    if kind == "staircase":
        return _staircase(p[0])
    if kind == "median-closure":
        return _closure_graph(p[0], p[1], seed)
    raise ValueError(f"unknown kind {kind!r}")


def is_median_graph(g: MedianGraph):
    """(True, None), or (False, witness) where the witness names the
    first triple without a unique geodesic meeting point."""
    try:
        g.median_table()
    except MedianViolation as exc:
        return False, exc.report()
    return True, None


# -- file formats ------------------------------------------------------


def write_graph_text(g: MedianGraph) -> str:
    lines = [f"vertices {g.n}"]
    lines.extend(f"e {u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def parse_graph_text(text: str) -> MedianGraph:
    n = None
    edges: list[tuple[int, int]] = []
    seen = set()
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "vertices" and len(parts) == 2:
            n = int(parts[1])
        elif parts[0] == "e" and len(parts) == 3:
            u, v = int(parts[1]), int(parts[2])
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"line {no}: duplicate edge {key}")
            seen.add(key)
            edges.append((u, v))
        else:
            raise ValueError(f"line {no}: cannot parse {raw!r}")
    if n is None:
        raise ValueError("missing 'vertices N' header")
    return MedianGraph(n, edges)


def _frac_str(f) -> str:
    f = Fraction(f)
    return f"{f.numerator}/{f.denominator}"


def write_instance_text(inst: CoarseMedianInstance) -> str:
    out = io.StringIO()
    out.write(f"points {inst.n}\n")
    out.write(f"rank {inst.d}\n")
    out.write("metric explicit\n")
    for i in range(inst.n):
        for j in range(i + 1, inst.n):
            v = Fraction(inst.rho(i, j))
            val = str(v.numerator) if v.denominator == 1 else _frac_str(v)
            out.write(f"d {i} {j} {val}\n")
    out.write("mu explicit\n")
    mu = inst.mu
    for i in range(inst.n):
        for j in range(inst.n):
            row = mu[i, j]
            for k in range(inst.n):
                out.write(f"m {i} {j} {k} {int(row[k])}\n")
    return out.getvalue()


def parse_instance_text(text: str, graph: MedianGraph | None = None) -> CoarseMedianInstance:
    n = None
    d = None
    metric: dict[tuple[int, int], Fraction] = {}
    mu_entries: dict[tuple[int, int, int], int] = {}
    have_metric = have_mu = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "points" and len(parts) == 2:
            n = int(parts[1])
        elif parts[0] == "rank" and len(parts) == 2:
            d = int(parts[1])
        elif line == "metric explicit":
            have_metric = True
        elif line == "mu explicit":
            have_mu = True
        elif parts[0] == "d" and len(parts) == 4:
            metric[(int(parts[1]), int(parts[2]))] = Fraction(parts[3])
        elif parts[0] == "m" and len(parts) == 5:
            mu_entries[tuple(int(x) for x in parts[1:4])] = int(parts[4])
        else:
            raise ValueError(f"line {no}: cannot parse {raw!r}")
    if n is None:
        raise ValueError("missing 'points N' header")
    if graph is not None and graph.n != n:
        raise ValueError("graph and instance point counts differ")
    if have_metric:
        dist = [[Fraction(0)] * n for _ in range(n)]
        for (i, j), v in metric.items():
            dist[i][j] = v
            dist[j][i] = v
        for i in range(n):
            for j in range(i + 1, n):
                if (i, j) not in metric and (j, i) not in metric:
                    raise ValueError(f"missing distance for pair ({i},{j})")
    elif graph is not None:
        dist = graph.dist.tolist()
    else:
        raise ValueError("no metric section and no graph to derive one from")
    if have_mu:
        mu = np.empty((n, n, n), dtype=np.int32)
        if len(mu_entries) != n ** 3:
            raise ValueError("mu section must list every triple once")
        for (i, j, k), v in mu_entries.items():
            mu[i, j, k] = v
    elif graph is not None:
        mu = graph.median_table()
    else:
        raise ValueError("no mu section and no graph to derive one from")
    if d is None:
        d = rank(graph) if graph is not None else 2
    return CoarseMedianInstance(dist, mu, d=d)


def _read_text(path: str) -> str:
    with open(path, "r") as fh:
        return fh.read()


def load_input(path: str):
    """Graph or instance, keyed off the header word."""
    text = _read_text(path)
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0]
        if head == "vertices":
            return parse_graph_text(text)
        if head == "points":
            return parse_instance_text(text)
        raise ValueError(f"unrecognized header {head!r}")
    raise ValueError("empty input file")


# -- plumbing ----------------------------------------------------------


def _thread_count() -> int:
    raw = os.environ.get("MEDIANCERT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    workers = _thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_atomic(path: str, text: str) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".mediancert-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, default=str) + "\n"


def _emit(cfg: "RunConfig", text: str) -> None:
    if cfg.output:
        _write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    seed: int = 0
    budget: int = 200_000
    sample: int | None = None
    basepoint: int = 0
    n_list: list[int] = field(default_factory=lambda: [2, 4])
    m_list: list[int] = field(default_factory=lambda: [1])
    provider: str = "cat0"
    t: int = 1
    r: int | None = None
    src: int = 0
    dst: int = 0
    kind: str | None = None
    params: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.sample is not None and self.sample <= 0:
            raise ValueError("sample must be positive")


def _require_graph(obj) -> MedianGraph:
    if not isinstance(obj, MedianGraph):
        raise ValueError("this command needs a graph input")
    return obj


def _as_instance(obj) -> CoarseMedianInstance:
    if isinstance(obj, CoarseMedianInstance):
        return obj
    return from_median_graph(obj)


# -- subcommands -------------------------------------------------------


def cmd_gen(cfg: RunConfig) -> int:
    if cfg.kind == "coarse-grid":
        if len(cfg.params) != 2:
            raise ValueError("coarse-grid takes 2 parameter(s)")
        inst = coarsened_grid(cfg.params[0], cfg.params[1])
        _emit(cfg, write_instance_text(inst))
        return 0
    g = generate(cfg.kind, cfg.params, cfg.seed)
    _emit(cfg, write_graph_text(g))
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    obj = load_input(cfg.input)
    if isinstance(obj, MedianGraph):
        ok, witness = is_median_graph(obj)
        payload = {
            "input": cfg.input,
            "kind": "graph",
            "vertices": obj.n,
            "edges": len(obj.edges),
            "median": ok,
        }
        if not ok:
            payload["witness"] = witness
        _emit(cfg, _dump(payload))
        return 0 if ok else 1
    payload = {
        "input": cfg.input,
        "kind": "instance",
        "points": obj.n,
        "rank_bound": obj.d,
        "m1_defect": _frac_str(obj.m1_defect),
        "m2_defect": _frac_str(obj.m2_defect),
    }
    _emit(cfg, _dump(payload))
    return 0


def cmd_hyperplanes(cfg: RunConfig) -> int:
    g = _require_graph(load_input(cfg.input))
    walls = hyperplanes(g)
    payload = {
        "count": len(walls),
        "walls": [
            {
                "index": w.index,
                "edges": len(w.edges),
                "minus": len(w.minus_side),
                "plus": len(w.plus_side),
            }
            for w in walls
        ],
    }
    _emit(cfg, _dump(payload))
    return 0


def cmd_rank(cfg: RunConfig) -> int:
    g = _require_graph(load_input(cfg.input))
    r = rank(g)
    if cfg.output:
        _write_atomic(cfg.output, _dump({"rank": r}))
    print(r)
    return 0


def cmd_ncp(cfg: RunConfig) -> int:
    g = _require_graph(load_input(cfg.input))
    path = normal_cube_path(g, cfg.src, cfg.dst)
    crossed: list[int] = []
    for step in path.steps:
        crossed.extend(step)
    seps = separators(g, cfg.src, cfg.dst)
    if len(crossed) != len(set(crossed)) or set(crossed) != seps:
        raise ConditionViolation(
            "path does not cross each separating wall exactly once",
            source=cfg.src, target=cfg.dst,
        )
    payload = {
        "from": cfg.src,
        "to": cfg.dst,
        "length": len(path),
        "distance": g.distance(cfg.src, cfg.dst),
        "vertices": list(path.vertices),
        "steps": [sorted(s) for s in path.steps],
    }
    _emit(cfg, _dump(payload))
    return 0


def cmd_propa(cfg: RunConfig) -> int:
    obj = load_input(cfg.input)
    if cfg.provider == "cat0":
        g = _require_graph(obj)
        if not 0 <= cfg.basepoint < g.n:
            raise ValueError("basepoint out of range")
        provider = Cat0WitnessProvider(g, cfg.basepoint)
    else:
        inst = _as_instance(obj)
        if not 0 <= cfg.basepoint < inst.n:
            raise ValueError("basepoint out of range")
        provider = CoarseWitnessProvider(
            inst, cfg.basepoint, t=cfg.t, r_floor=cfg.r or 0
        )
    sample = eligible_sample(
        provider, max(cfg.n_list), limit=cfg.sample, seed=cfg.seed
    )
    certs = []
    for batch in _pmap(
        lambda n: certify(provider, [n], cfg.m_list, sample), cfg.n_list
    ):
        certs.extend(batch)
    payload = {
        "input": cfg.input,
        "provider": provider.name,
        "basepoint": cfg.basepoint,
        "sample_size": len(sample),
        "certificates": [c.to_json_dict() for c in certs],
    }
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for c in certs:
        writer.writerows(c.csv_rows())
    if cfg.output:
        _write_atomic(cfg.output + ".json", _dump(payload))
        _write_atomic(cfg.output + ".csv", buf.getvalue())
    else:
        sys.stdout.write(_dump(payload))
    return 0


def _lemma_sweeps(inst: CoarseMedianInstance, samples: int, seed: int) -> dict:
    params = inst.params
    rng = random.Random(seed)
    n = inst.n
    tuples = [
        (
            rng.randrange(n), rng.randrange(n), rng.randrange(n),
            rng.randrange(n), (0, 1, 2)[i % 3],
        )
        for i in range(samples)
    ]

    def one(tup):
        a, b, z, w_pt, r = tup
        x = inst.med(a, b, z)
        ok_62, _ = check_lemma_6_2(inst, a, b, x, r)
        h = x
        cs = l_constants(params, r, 1, inst.d)
        m = inst.med(a, h, w_pt)
        ok_65 = None
        if (
            inst.rho(inst.med(a, b, h), h) <= cs.L1
            and inst.rho(inst.med(a, h, m), m) <= cs.L2
        ):
            ok_65, _, _ = check_lemma_6_5(inst, a, b, h, m, r)
        return ok_62, ok_65

    results = _pmap(one, tuples)
    return {
        "interval_absorption": {
            "checked": len(results),
            "violations": sum(1 for ok, _ in results if not ok),
        },
        "projection_bound": {
            "checked": sum(1 for _, ok in results if ok is not None),
            "violations": sum(1 for _, ok in results if ok is False),
        },
    }


def cmd_coarse_check(cfg: RunConfig) -> int:
    inst = _as_instance(load_input(cfg.input))
    params = coarse_median.estimate_params(
        inst, budget=cfg.budget, seed=cfg.seed
    )
    payload = {
        "input": cfg.input,
        "points": inst.n,
        "rank_bound": inst.d,
        "K": _frac_str(params.K),
        "H0": _frac_str(params.H0),
        "gamma": _frac_str(params.gamma),
        "lam": _frac_str(params.lam),
        "m1_defect": _frac_str(inst.m1_defect),
        "m2_defect": _frac_str(inst.m2_defect),
    }
    ok = True
    h5 = measured_h5(inst, samples=min(cfg.sample or 40, 200), seed=cfg.seed)
    if h5 is not None:
        formula = 3 * params.K * (3 * params.K + 2) * h5 \
            + (3 * params.K + 2) * params.H0
        payload["h5"] = _frac_str(h5)
        payload["gamma_formula"] = _frac_str(formula)
        payload["gamma_dominated"] = params.gamma <= formula
        ok = ok and params.gamma <= formula
    sweeps = _lemma_sweeps(inst, samples=cfg.sample or 200, seed=cfg.seed)
    payload["sweeps"] = sweeps
    ok = ok and all(v["violations"] == 0 for v in sweeps.values())
    payload["ok"] = ok
    _emit(cfg, _dump(payload))
    return 0 if ok else 1


def cmd_deep_point(cfg: RunConfig) -> int:
    inst = _as_instance(load_input(cfg.input))
    if inst.params is None:
        coarse_median.estimate_params(inst, budget=cfg.budget, seed=cfg.seed)
    params = inst.params
    scales = [cfg.r] if cfg.r is not None else list(range(1, 17))
    found = None
    used = None
    for r in scales:
        h = find_deep_point(inst, cfg.src, cfg.dst, r, cfg.t, params.lam)
        if h is not None:
            found, used = h, r
            break
    payload = {
        "from": cfg.src,
        "to": cfg.dst,
        "t": cfg.t,
        "scales_tried": scales if found is None else scales[: scales.index(used) + 1],
        "r": used,
        "deep_point": found,
    }
    if found is not None:
        cs = l_constants(params, used, cfg.t, inst.d)
        payload["distance_from_source"] = _frac_str(Fraction(inst.rho(cfg.src, found)))
        payload["l3"] = _frac_str(cs.L3)
    _emit(cfg, _dump(payload))
    return 0 if found is not None else 1


HANDLERS = {
    "gen": cmd_gen,
    "validate": cmd_validate,
    "hyperplanes": cmd_hyperplanes,
    "rank": cmd_rank,
    "ncp": cmd_ncp,
    "propa": cmd_propa,
    "coarse-check": cmd_coarse_check,
    "deep-point": cmd_deep_point,
}


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v != ""]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mediancert",
        description="median graph checks and witness-set certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--input", required=True)
        sp.add_argument("--output")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--budget", type=int, default=200_000)

    sp = sub.add_parser("gen", help="write a generated graph or instance")
    sp.add_argument("kind", choices=GRAPH_KINDS + ("coarse-grid",))
    sp.add_argument("params", type=int, nargs="*")
    common(sp, needs_input=False)

    for name in ("validate", "hyperplanes", "rank"):
        common(sub.add_parser(name))

    sp = sub.add_parser("ncp", help="normal cube path between two vertices")
    sp.add_argument("--from", dest="src", type=int, required=True)
    sp.add_argument("--to", dest="dst", type=int, required=True)
    common(sp)

    sp = sub.add_parser("propa", help="emit a witness-family certificate")
    sp.add_argument("--provider", choices=("cat0", "coarse"), default="cat0")
    sp.add_argument("--basepoint", type=int, default=0)
    sp.add_argument("--n", dest="n_list", type=_int_list, default=[2, 4])
    sp.add_argument("--m", dest="m_list", type=_int_list, default=[1])
    sp.add_argument("--sample", type=int)
    sp.add_argument("--t", type=int, default=1)
    sp.add_argument("--r", type=int)
    common(sp)

    sp = sub.add_parser("coarse-check", help="parameter report and lemma sweeps")
    sp.add_argument("--sample", type=int)
    common(sp)

    sp = sub.add_parser("deep-point", help="search one deep point")
    sp.add_argument("--from", dest="src", type=int, required=True)
    sp.add_argument("--to", dest="dst", type=int, required=True)
    sp.add_argument("--t", type=int, default=1)
    sp.add_argument("--r", type=int)
    common(sp)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {
        k: v
        for k, v in vars(args).items()
        if k in RunConfig.__dataclass_fields__ and v is not None
    }
    return RunConfig(**fields)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return HANDLERS[cfg.command](cfg)
    except MedianCertError as exc:
        sys.stdout.write(_dump(exc.report()))
        return 1
    except (ValueError, OSError) as exc:
        sys.stdout.write(_dump({"error": "invalid-input", "message": str(exc)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
