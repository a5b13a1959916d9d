"""Command-line front end.

Every run writes one table (CSV with ``#`` provenance lines, or a JSON
object) to ``--out`` or stdout.  Floats use 17 significant digits.  Exit
status: 0 success, 2 invalid input, 1 internal failure.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
# flags that never change the numbers and stay out of the config echo
_NOT_ECHOED = {"out", "threads", "func", "format"}


def fmt_num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def to_json(obj) -> str:
    """Deterministic JSON with 17-digit floats; non-finite floats become strings."""
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        s = fmt_num(obj)
        return s if math.isfinite(obj) else f'"{s}"'
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{to_json(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    extra: dict = field(default_factory=dict)  # scalar results carried alongside


@dataclass(frozen=True)
class RunConfig:
    command: str
    options: dict
    seed: int
    out: str | None
    format: str


def render(cfg: RunConfig, table: Table) -> str:
    meta = {"version": __version__, "command": cfg.command, "config": cfg.options, "seed": cfg.seed}
    if cfg.format == "json":
        obj = {"meta": meta, **table.extra}
        if table.columns:
            obj["columns"] = table.columns
            obj["rows"] = table.rows
        return to_json(obj) + "\n"
    buf = io.StringIO()
    buf.write(f"# gelation {__version__}\n")
    buf.write(f"# command: {cfg.command}\n")
    buf.write(f"# config: {to_json(cfg.options)}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    for k, v in table.extra.items():
        buf.write(f"# {k}: {to_json(v)}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(v if isinstance(v, str) else fmt_num(v) for v in row) + "\n")
    return buf.getvalue()


def _threads(args) -> int:
    from .simulate import default_threads

    return default_threads() if args.threads is None else max(1, args.threads)


def _ordered_map(threads: int):
    if threads == 1:
        return map
    ex = ThreadPoolExecutor(max_workers=threads)
    return ex.map


def _theta(value: str):
    return "auto" if value == "auto" else float(value)


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


# --------------------------------------------------------------------------
# Subcommands


def cmd_duality(args) -> Table:
    from .duality import borel_moments, conjugate, solve_duality

    pair = solve_duality(args.c)
    extra = {"c": pair.c, "T": pair.T, "t": pair.t, "giant_fraction": pair.giant_fraction}
    if args.c < 1.0:
        extra["conjugate"] = conjugate(args.c).c
    if args.c != 1.0:
        m = borel_moments(args.c, args.K)
        extra["borel_sums"] = list(m.sums)
        extra["borel_limits"] = list(m.limits)
        extra["borel_tail_bounds"] = list(m.tail_bounds)
    return Table([], [], extra)


def cmd_mu(args) -> Table:
    from .connectivity import mu_exact

    p = args.p if args.p is not None else args.c / args.n
    K = args.K if args.K is not None else args.n
    if K is None:
        raise ValueError("give --K or --n")
    table = mu_exact(p, K, exact_rational=False)
    rows = [[k, float(np.exp(lm)), float(lm)] for k, lm in enumerate(table.log_mu, start=1)]
    return Table(["k", "mu", "log_mu"], rows, {"p": p})


def cmd_jumplaw(args) -> Table:
    from .ensemble import auto_theta, ensemble_moments, jump_law

    theta = auto_theta(args.c) if args.theta == "auto" else args.theta
    law = jump_law(args.n, args.c, theta)
    m = ensemble_moments(law)
    rows = [[k, float(np.exp(lp)), float(lp)] for k, lp in enumerate(law.logp, start=1)]
    extra = {"theta": theta, "Z": m.Z, "mean": m.mean, "second": m.second, "variance": m.variance}
    return Table(["k", "p", "log_p"], rows, extra)


def cmd_panjer(args) -> Table:
    from . import panjer
    from .exactgraph import PARTITION_N_MAX

    what = args.what
    if what.startswith("fra:"):
        m = int(what[4:])
        return Table([], [], {"m": m, "residual": panjer.ratio_identity_fra(args.n, m, args.c)})
    ens = panjer.conditional_ensemble(args.n, args.c, args.theta)
    extra = {"theta": ens.law.theta, "log_P_hit": ens.logP_hit}
    if what == "hit":
        if args.n <= PARTITION_N_MAX:
            extra["identity_residual"] = panjer.hit_probability_identity(args.n, args.c, args.theta)
        return Table([], [], extra)
    if what == "max":
        pmf = panjer.conditional_max_pmf(ens)
        return Table(["m", "prob"], [[m, p] for m, p in pmf.items()], extra)
    if what.startswith("count:"):
        pmf = panjer.conditional_count_pmf(ens, int(what[6:]))
        return Table(["j", "prob"], [[j, p] for j, p in enumerate(pmf)], extra)
    if what == "N":
        pmf = panjer.conditional_N_pmf(ens)
        return Table(["j", "prob"], [[j, p] for j, p in enumerate(pmf)], extra)
    if what.startswith("knbeta:"):
        from .mdpcheck import parse_an_rule

        parts = what.split(":", 2)
        beta = float(parts[1])
        rule = parts[2] if len(parts) > 2 else "pow:0.25"
        a = parse_an_rule(rule)(args.n)
        extra.update(
            beta=beta,
            a_n=a,
            k=panjer.giant_shift_index(args.n, args.c, beta, a),
            ratio=panjer.knbeta_ratio(args.n, args.c, beta, a, ens=ens),
            limit=panjer.giant_shift_limit(args.c, beta),
        )
        return Table([], [], extra)
    raise ValueError(f"unknown --what {what!r}")


def cmd_exact(args) -> Table:
    from .exactgraph import brute_force_law, law_by_partitions, signature

    law = brute_force_law(args.n, args.c) if args.method == "brute" else law_by_partitions(args.n, args.c)
    rows = [[signature(g), float(np.exp(lp))] for g, lp in law.entries.items()]
    return Table(["profile", "prob"], rows, {"total_mass": law.total_mass()})


def cmd_simulate(args) -> Table:
    from .simulate import jackknife_variance_se, parse_track, run_replicas

    track = parse_track(args.track)
    table = run_replicas(args.n, args.c, args.replicas, args.seed, track, _threads(args))
    rows = []
    for name in track:
        x = table.column(name)
        acc = table.accumulator(name)
        rows.append([name, acc.mean, acc.variance, acc.variance / args.n, jackknife_variance_se(x) / args.n])
    return Table(["statistic", "mean", "variance", "variance_over_n", "variance_over_n_se"], rows)


def cmd_rates(args) -> Table:
    from . import rates

    c, what = args.c, args.what
    if what == "mdp":
        out = {}
        if c > 1.0:
            r = rates.mdp_rate("I_max", c)
            out["I_max"] = {"kappa": r.kappa, "reciprocal_form": r.params["reciprocal_form"]}
        out["iota_k"] = {str(k): rates.mdp_rate("iota_k", c, k).kappa for k in range(1, args.k_max + 1)}
        out["j_total"] = rates.mdp_rate("j_total", c).kappa
        return Table([], [], out)
    if what == "grand":
        return Table([], [], {r.name: r.kappa for r in rates.grand_rates(c, k=args.k)})
    if what.startswith("ldp:"):
        x = float(what[4:])
        return Table([], [], {"x": x, "I": rates.ldp_rate(c, x, args.k_max)})
    if what.startswith("thresholds:"):
        return Table([], [], {"thresholds": rates.ldp_thresholds(c, int(what[11:]))})
    if what.startswith("empirical:"):
        sigma = np.loadtxt(what[10:], dtype=float, ndmin=1, comments="#", delimiter=",")
        e = rates.empirical_rates(sigma, c)
        return Table([], [], {"H": e.H, "I_Mi": e.I_Mi, "Lambda": e.Lambda})
    raise ValueError(f"unknown --what {what!r}")


def cmd_mdp_scan(args) -> Table:
    from .mdpcheck import ScanSpec, conditional_mdp_scan

    stat, k = args.stat, 1
    if stat.startswith("count:"):
        stat, k = "count", int(stat[6:])
    spec = ScanSpec(
        c=args.c,
        n_grid=tuple(_ints(args.n)),
        an_rule=args.an,
        statistic=stat,
        k=k,
        betas=tuple(_floats(args.beta)),
        delta=args.delta,
        theta=args.theta,
    )
    rows = conditional_mdp_scan(spec, _ordered_map(_threads(args)))
    cols = ["n", "beta", "a_n", "log_prob", "scaled", "rate_at_beta", "rate_ball_inf"]
    return Table(cols, [[getattr(r, c) for c in cols] for r in rows], {"kappa": spec.rate().kappa})


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--threads", type=int, default=None, help="worker threads (env GELATION_THREADS)")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="gelation", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gelation {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("duality", parents=[common], help="T and t for a given c")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--K", type=int, default=10_000)
    s.set_defaults(func=cmd_duality, default_format="json")

    s = sub.add_parser("mu", parents=[common], help="connectivity probabilities mu_k")
    s.add_argument("--p", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--c", type=float)
    s.add_argument("--K", type=int)
    s.set_defaults(func=cmd_mu, default_format="csv")

    s = sub.add_parser("jumplaw", parents=[common], help="truncated jump law")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--theta", type=_theta, default=1.0)
    s.set_defaults(func=cmd_jumplaw, default_format="csv")

    s = sub.add_parser("panjer", parents=[common], help="compound Poisson laws given the sum")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--theta", type=_theta, default=1.0)
    s.add_argument("--what", required=True, help="hit | max | count:<k> | N | fra:<m> | knbeta:<beta>[:<a_n rule>]")
    s.set_defaults(func=cmd_panjer, default_format="csv")

    s = sub.add_parser("exact", parents=[common], help="exact component profile law")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--method", choices=("partition", "brute"), default="partition")
    s.set_defaults(func=cmd_exact, default_format="csv")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo component statistics")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--replicas", type=int, required=True)
    s.add_argument("--track", default="cmax,cn,t:1,t:2")
    s.set_defaults(func=cmd_simulate, default_format="csv")

    s = sub.add_parser("rates", parents=[common], help="rate function constants")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--what", required=True, help="mdp | grand | ldp:<x> | thresholds:<kmax> | empirical:<file>")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--k-max", type=int, default=50)
    s.set_defaults(func=cmd_rates, default_format="json")

    s = sub.add_parser("mdp-scan", parents=[common], help="exact conditional ball probabilities")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--stat", required=True, help="max | count:<k> | N | grand_sum")
    s.add_argument("--beta", default="0.5,1")
    s.add_argument("--n", required=True, help="comma-separated increasing n grid")
    s.add_argument("--an", default="pow:0.25")
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--theta", type=_theta, default=1.0)
    s.set_defaults(func=cmd_mdp_scan, default_format="csv")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED | {"default_format", "seed"}}
    cfg = RunConfig(args.command, opts, args.seed, args.out, args.format or args.default_format)
    try:
        table = args.func(args)
        text = render(cfg, table)
    except (ValueError, OSError) as e:
        print(f"gelation {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"gelation {args.command}: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
