"""Command-line harness: ``mcrank <subcommand> [flags]``.

Every CSV written here starts with a header row, followed by a ``#``
comment row recording the run configuration.  Figure-style experiments
also write a small gnuplot script next to their data.  Failures exit
with status 2 and print a single ``error<TAB>kind<TAB>message`` line on
stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments as ex
from . import linkpred
from .engine import EngineConfig, MonteCarloEngine
from .graph import Graph, read_graph
from .oracle import exact_personalized_pagerank, power_iteration_pagerank
from .query import QueryConfig, top_k
from .synth import (ArrivalStream, community_powerlaw_graph, degree_cdfs, fit_powerlaw,
                    mx_statistic, personalized_fit_window, powerlaw_graph,
                    update_work_bound)
from .walks import WalkStore


@dataclass
class RunConfig:
    subcommand: str
    epsilon: float = 0.2
    R: int = 10
    mode: str = "pagerank"
    alpha: float = 0.76
    c: float = 5.0
    k: int = 100
    seed: int = 0
    inputs: list = field(default_factory=list)
    out: str = "."
    stream: Optional[str] = None
    n: Optional[int] = None
    m: Optional[int] = None
    trials: int = 5
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("--epsilon must lie in (0, 1]")
        if self.R < 1:
            raise ValueError("--walks-per-node must be >= 1")
        if self.k < 1:
            raise ValueError("--k must be >= 1")
        if self.c < 1:
            raise ValueError("--cc must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("--alpha must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("--trials must be >= 1")
        if self.stream == "file" and not self.inputs:
            raise ValueError("--stream file needs an input arrivals file")

    def comment(self) -> str:
        items = []
        for key, val in asdict(self).items():
            if key == "extra":
                items += [f"{k}={v}" for k, v in sorted(val.items())]
            elif key == "inputs":
                items.append("inputs=" + ";".join(str(p) for p in val))
            else:
                items.append(f"{key}={val}")
        return "# RunConfig " + " ".join(items)

    def engine(self) -> EngineConfig:
        return EngineConfig(epsilon=self.epsilon, walks_per_node=self.R, mode=self.mode,
                            rng_seed=self.seed)


class CsvOut:
    """Writes ``header``, the config comment, then rows."""

    def __init__(self, path: Path, header, cfg: RunConfig):
        self.path = path
        self.fh = open(path, "w")
        self.fh.write(",".join(header) + "\n")
        self.fh.write(cfg.comment() + "\n")

    def row(self, *values) -> None:
        self.fh.write(",".join(_fmt(v) for v in values) + "\n")

    def close(self) -> None:
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def _gnuplot(path: Path, data: str, title: str, xlabel: str, ylabel: str,
             plots: list[str], logscale: str = "") -> None:
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logscale:
        lines.append(f"set logscale {logscale}")
    lines.append("set key left top")
    lines.append("plot " + ", \\\n     ".join(p.format(data=data) for p in plots))
    path.write_text("\n".join(lines) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# subcommands


def cmd_build(cfg: RunConfig) -> None:
    g = read_graph(cfg.inputs[0])
    eng = MonteCarloEngine(g, cfg.engine())
    eng.build()
    out = _outdir(cfg)
    _write_scores(out, eng, cfg)
    eng.store.dump(out / "segments.tsv")


def _write_scores(out: Path, eng: MonteCarloEngine, cfg: RunConfig) -> None:
    if eng.salsa:
        hub, auth = eng.hubs_authorities()
        with CsvOut(out / "salsa.csv", ["node", "hub", "authority"], cfg) as w:
            for v in range(eng.graph.n):
                w.row(v, hub[v], auth[v])
    else:
        pr = eng.pagerank()
        with CsvOut(out / "pagerank.csv", ["node", "score"], cfg) as w:
            for v in range(eng.graph.n):
                w.row(v, pr[v])


def cmd_ingest(cfg: RunConfig) -> None:
    """Load graph and segment dump, apply an arrivals (and removals) file."""
    if len(cfg.inputs) < 3:
        raise ValueError("ingest needs EDGES SEGMENTS ADDS [REMOVES]")
    g = read_graph(cfg.inputs[0])
    store = WalkStore.load(cfg.inputs[1], graph=g)
    stream = ArrivalStream.from_files(cfg.inputs[2], cfg.inputs[3] if len(cfg.inputs) > 3 else None)
    stream.validate(g)
    eng = MonteCarloEngine(g, cfg.engine())
    eng.store = store
    out = _outdir(cfg)
    with CsvOut(out / "ingest_costs.csv",
                ["t", "op", "src", "dst", "segments_rerouted", "rewalk_steps"], cfg) as w:
        for ev in stream:
            cost = (eng.add_edge(ev.src, ev.dst) if ev.op == "add"
                    else eng.remove_edge(ev.src, ev.dst))
            w.row(eng.graph.t, ev.op, ev.src, ev.dst, cost.segments_rerouted, cost.rewalk_steps)
    _write_scores(out, eng, cfg)
    eng.store.dump(out / "segments.tsv")


def cmd_query_topk(cfg: RunConfig) -> None:
    g = read_graph(cfg.inputs[0])
    node = int(cfg.extra.get("node", 0))
    if not 0 <= node < g.n:
        raise IndexError(f"query node {node} outside [0, {g.n})")
    rng = np.random.default_rng(cfg.seed)
    if len(cfg.inputs) > 1:
        store = WalkStore.load(cfg.inputs[1], graph=g)
    else:
        eng = MonteCarloEngine(g, cfg.engine(), rng)
        eng.build()
        store = eng.store
    qcfg = QueryConfig(epsilon=cfg.epsilon, alpha=cfg.alpha, c=cfg.c, mode=cfg.mode)
    exclude = set(g.out_adj[node]) if cfg.extra.get("exclude_neighbors", True) else set()
    L = cfg.extra.get("length")
    res, stats = top_k(g, store, node, cfg.k, qcfg, exclude, rng, int(L) if L else None)
    out = _outdir(cfg)
    with CsvOut(out / "topk.csv", ["rank", "node", "count"], cfg) as w:
        for i, (v, c) in enumerate(res.items, start=1):
            w.row(i, v, c)
    with CsvOut(out / "fetch_stats.csv",
                ["fetches", "cache_hits", "segment_reuses", "walk_length", "truncated"], cfg) as w:
        w.row(stats.fetches, stats.cache_hits, stats.segment_reuses, res.walk_length,
              int(res.truncated))


def _stream_for(cfg: RunConfig, rng) -> tuple[ArrivalStream, int]:
    kind = cfg.stream or "permutation"
    if kind == "file":
        stream = ArrivalStream.from_files(cfg.inputs[0], cfg.inputs[1] if len(cfg.inputs) > 1 else None)
        top = max((max(e.src, e.dst) for e in stream), default=-1) + 1
        return stream, max(top, cfg.n or 0)
    n = cfg.n or 1000
    m = cfg.m or 20 * n
    return ex.make_stream(kind, n, m, rng, N=int(cfg.extra.get("N", 100)))


def cmd_bench_updates(cfg: RunConfig) -> None:
    out = _outdir(cfg)
    header = ["trial", "t", "segments_rerouted", "rewalk_steps", "cumulative", "theory"]
    summary = []
    eps, R = cfg.epsilon, cfg.R
    with CsvOut(out / "bench_updates.csv", header, cfg) as w:
        for trial in range(cfg.trials):
            rng = np.random.default_rng([cfg.seed, trial])
            stream, n = _stream_for(cfg, rng)
            eng, costs = ex.replay_costs(stream, n, cfg.engine(), rng)
            cum = 0
            for c in costs:
                cum += c.rewalk_steps
                w.row(trial, c.t, c.segments_rerouted, c.rewalk_steps, cum,
                      n * R / (max(c.t, 1) * eps ** 2))
            m = len(costs)
            summary.append((trial, n, m, cum, max((c.segments_rerouted for c in costs), default=0),
                            costs[-1].segments_rerouted if costs else 0))
    with CsvOut(out / "bench_updates_summary.csv",
                ["trial", "n", "m", "cumulative_steps", "max_rerouted", "last_rerouted",
                 "bound_permutation", "bound_dirichlet"], cfg) as w:
        for trial, n, m, cum, peak, last in summary:
            w.row(trial, n, m, cum, peak, last, update_work_bound(n, R, eps, max(m, 2)),
                  n * R / eps ** 2 * np.log((m + n) / n))
    _gnuplot(out / "bench_updates.gp", "bench_updates.csv", "update work per arrival",
             "t", "rewalk steps", [
                 "'{data}' using 2:4 with points pt 7 ps 0.3 title 'measured'",
                 "'{data}' using 2:6 with lines lw 2 title 'nR/(t eps^2)'"], logscale="xy")


def cmd_bench_fetches(cfg: RunConfig) -> None:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n or 10_000
    g = read_graph(cfg.inputs[0]) if cfg.inputs else powerlaw_graph(n, cfg.alpha, rng)
    seeds = ex.pick_seeds(g, int(cfg.extra.get("query_seeds", 20)), rng)
    R_values = cfg.extra.get("R_values") or (5, 10, 20)
    s_max = int(cfg.extra.get("s_max", 50_000))
    s_values = np.unique(np.geomspace(100, s_max, 12).astype(int))
    curves = ex.fetch_curves(g, seeds, R_values, s_values, cfg.epsilon, rng_seed=cfg.seed)
    out = _outdir(cfg)
    with CsvOut(out / "bench_fetches.csv", ["R", "s", "measured_fetches", "theoretical_bound"],
                cfg) as w:
        for cur in curves:
            for s, m_, b in zip(cur.s, cur.measured, cur.bound):
                w.row(cur.R, int(s), m_, b)
    plots = []
    for cur in curves:
        sel = f"($1=={cur.R}?${{col}}:1/0)"
        plots.append(f"'{{data}}' using 2:{sel.format(col=3)} with lines lw 1 title 'R={cur.R} observed'")
        plots.append(f"'{{data}}' using 2:{sel.format(col=4)} with lines lw 3 title 'R={cur.R} bound'")
    _gnuplot(out / "bench_fetches.gp", "bench_fetches.csv", "fetches vs walk length",
             "walk length s", "fetches", plots, logscale="xy")


def cmd_fit_powerlaw(cfg: RunConfig) -> None:
    """Fit rank-value exponents of in-degree, PageRank or a personalized vector."""
    g = read_graph(cfg.inputs[0])
    what = cfg.extra.get("what", "pagerank")
    window = None
    if what == "indegree":
        vals = np.sort(np.asarray(g.in_degrees(), dtype=float))[::-1]
    elif what == "pagerank":
        vals = np.sort(power_iteration_pagerank(g, cfg.epsilon))[::-1]
    elif what == "personalized":
        node = int(cfg.extra.get("node", 0))
        vals = np.sort(exact_personalized_pagerank(g, node, cfg.epsilon))[::-1]
        window = personalized_fit_window(g.out_degree(node))
    else:
        raise ValueError(f"unknown fit target {what!r}")
    fit = fit_powerlaw(vals, window)
    out = _outdir(cfg)
    with CsvOut(out / "powerlaw_fit.csv",
                ["target", "alpha", "r_squared", "window_lo", "window_hi", "degenerate"], cfg) as w:
        w.row(what, fit.alpha, fit.r_squared, fit.window[0], fit.window[1], int(fit.degenerate))
    with CsvOut(out / "powerlaw_values.csv", ["rank", "value"], cfg) as w:
        for i, v in enumerate(vals, start=1):
            if v > 0:
                w.row(i, v)
    _gnuplot(out / "powerlaw.gp", "powerlaw_values.csv", f"{what} by rank", "rank", "value",
             ["'{data}' using 1:2 with lines title 'values'"], logscale="xy")


def cmd_verify_stream(cfg: RunConfig) -> None:
    """mX statistic on the late half of a stream plus arrival/existing degree CDFs."""
    rng = np.random.default_rng(cfg.seed)
    stream, n = _stream_for(cfg, rng)
    adds = [e for e in stream if e.op == "add"]
    half = len(adds) // 2
    base = ArrivalStream(adds[:half]).replay(Graph(n))
    late = ArrivalStream(adds[half:])
    mx = mx_statistic(late, base=base, epsilon=cfg.epsilon)
    final = late.replay(base.copy())
    window = float(cfg.extra.get("recent_fraction", 0.2))
    recent = adds[-max(1, int(len(adds) * window)):]
    cdfs = degree_cdfs(final, recent)
    out = _outdir(cfg)
    with CsvOut(out / "stream_summary.csv", ["arrivals", "mx_late_half", "cdf_sup_distance"],
                cfg) as w:
        w.row(len(adds), mx, cdfs.sup_distance())
    with CsvOut(out / "degree_cdfs.csv", ["d", "a", "e"], cfg) as w:
        for d, a, e in cdfs.rows():
            w.row(d, a, e)
    _gnuplot(out / "degree_cdfs.gp", "degree_cdfs.csv", "arrival vs existing degree cdf",
             "out-degree d", "cdf", ["'{data}' using 1:2 with lines title 'arrival'",
                                     "'{data}' using 1:3 with lines title 'existing'"],
             logscale="x")


def cmd_eval_linkpred(cfg: RunConfig) -> None:
    rng = np.random.default_rng(cfg.seed)
    if cfg.inputs:
        g = read_graph(cfg.inputs[0])
    else:
        g, _ = community_powerlaw_graph(cfg.n or 2000, rng, target_alpha=cfg.alpha)
    split = linkpred.holdout_split(g, rng, n_seeds=int(cfg.extra.get("query_seeds", 20)))
    ks = (cfg.k, 10 * cfg.k)
    table = linkpred.evaluate(split, ks=ks, epsilon=cfg.epsilon)
    ceiling = linkpred.evaluate(split, ["oracle"], ks, scorer=linkpred.oracle_scorer(split))
    rand = linkpred.evaluate(split, ["random"], ks, scorer=linkpred.random_scorer(rng))
    out = _outdir(cfg)
    methods = list(table.per_seed)
    with CsvOut(out / "linkpred.csv", ["cutoff"] + methods + ["oracle", "random"], cfg) as w:
        for k in ks:
            w.row(f"Top {k}", *[table.mean(m, k) for m in methods],
                  ceiling.mean("oracle", k), rand.mean("random", k))
    with CsvOut(out / "linkpred_per_seed.csv",
                ["seed", "held_out"] + [f"{m}@{k}" for m in methods for k in ks], cfg) as w:
        for i, (s, held) in enumerate(split.held_out.items()):
            w.row(s, len(held), *[table.per_seed[m][i][j] for m in methods for j in range(len(ks))])


COMMANDS = {
    "build": cmd_build,
    "ingest": cmd_ingest,
    "query-topk": cmd_query_topk,
    "bench-updates": cmd_bench_updates,
    "bench-fetches": cmd_bench_fetches,
    "fit-powerlaw": cmd_fit_powerlaw,
    "verify-stream": cmd_verify_stream,
    "eval-linkpred": cmd_eval_linkpred,
}


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--epsilon", type=float, default=0.2, help="reset probability")
    common.add_argument("--walks-per-node", type=int, default=10, dest="R",
                        help="stored segments per node (R)")
    common.add_argument("--mode", choices=("pagerank", "salsa"), default="pagerank")
    common.add_argument("--alpha", type=float, default=0.76, help="power-law exponent")
    common.add_argument("--cc", type=float, default=5.0, dest="c",
                        help="visit-count constant c for walk sizing")
    common.add_argument("--k", type=int, default=100)
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--stream", choices=ex.STREAM_KINDS, default=None)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--n", type=int, default=None, help="node count for synthetic inputs")
    common.add_argument("--m", type=int, default=None, help="edge count for synthetic streams")
    common.add_argument("--trials", type=int, default=5, help="independent repetitions")

    p = _Parser(prog="mcrank", description="Monte Carlo ranking on evolving graphs")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    s = sub.add_parser("build", parents=[common], help="build walks and estimates")
    s.add_argument("inputs", nargs=1, metavar="EDGES")

    s = sub.add_parser("ingest", parents=[common], help="apply arrivals to a stored build")
    s.add_argument("inputs", nargs="+", metavar="FILE",
                   help="EDGES SEGMENTS ADDS [REMOVES]")

    s = sub.add_parser("query-topk", parents=[common], help="personalized top-k by stitching")
    s.add_argument("inputs", nargs="+", metavar="FILE", help="EDGES [SEGMENTS]")
    s.add_argument("--node", type=int, default=0, help="query seed node")
    s.add_argument("--length", type=int, default=None, help="walk length override")

    s = sub.add_parser("bench-updates", parents=[common], help="incremental update cost")
    s.add_argument("inputs", nargs="*", metavar="FILE", help="ADDS [REMOVES] for --stream file")
    s.add_argument("--N", type=int, default=100, help="adversarial construction size")

    s = sub.add_parser("bench-fetches", parents=[common], help="fetches vs walk length")
    s.add_argument("inputs", nargs="*", metavar="EDGES")
    s.add_argument("--query-seeds", type=int, default=20)
    s.add_argument("--s-max", type=int, default=50_000)
    s.add_argument("--R-values", type=int, nargs="+", default=None)

    s = sub.add_parser("fit-powerlaw", parents=[common], help="rank-value exponent fit")
    s.add_argument("inputs", nargs=1, metavar="EDGES")
    s.add_argument("--what", choices=("indegree", "pagerank", "personalized"), default="pagerank")
    s.add_argument("--node", type=int, default=0)

    s = sub.add_parser("verify-stream", parents=[common], help="random-order diagnostics")
    s.add_argument("inputs", nargs="*", metavar="FILE", help="ADDS [REMOVES] for --stream file")
    s.add_argument("--N", type=int, default=100)
    s.add_argument("--recent-fraction", type=float, default=0.2)

    s = sub.add_parser("eval-linkpred", parents=[common], help="held-out link prediction")
    s.add_argument("inputs", nargs="*", metavar="EDGES")
    s.add_argument("--query-seeds", type=int, default=20)
    return p


_BASE = ("subcommand", "epsilon", "R", "mode", "alpha", "c", "k", "seed", "inputs", "out",
         "stream", "n", "m", "trials")


def parse_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    extra = {k: v for k, v in ns.items() if k not in _BASE and v is not None}
    cfg = RunConfig(**{k: ns[k] for k in _BASE if k in ns}, extra=extra)
    cfg.validate()
    return cfg


def _one_line(text: str) -> str:
    return " ".join(str(text).split())


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"error\tusage\t{_one_line(exc)}", file=sys.stderr)
        return 2
    except Exception as exc:  # reported as one machine-readable line
        print(f"error\t{type(exc).__name__}\t{_one_line(exc)}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
