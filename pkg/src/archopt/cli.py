"""Command-line interface: ``archopt <subcommand> ...``.

Exit codes: 0 success, 1 user error (bad arguments, files or spaces),
2 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .bench import (plot_data, rank_records, rank_report_csv, rank_report_text, run_matrix,
                    write_json)
from .bo import BO_LEVELS, BoAbort, BoConfig, bo_run
from .correction import MODES, CorrectionFailed, Corrector
from .design_space import DesignSpace, EnumerationUnavailable, SpaceDefinitionError
from .metrics import hierarchy_stats
from .moea import INTEGRATION_LEVELS, MoeaConfig, nsga2_run
from .problems import PROBLEMS, get_problem
from .record import RunRecord, SchemaError
from .sampling import GROUPINGS, WEIGHTINGS, group_vectors, group_weights, apportion
from .sampling import sample_hierarchical, sample_nonhierarchical
from .spaces import gnc_space, table2_space, table4_space, toy_space, turbofan_space

log = logging.getLogger("archopt")

SPACES = {
    "toy": toy_space,
    "table2": table2_space,
    "table4": table4_space,
    "turbofan": turbofan_space,
    "gnc": gnc_space,
}


class UserError(Exception):
    """Invalid input from the user (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserError(f"{self.prog}: {message}")


def load_space(ref: str) -> DesignSpace:
    """Built-in space or problem by name, or a JSON space file."""
    if ref in SPACES:
        return SPACES[ref]()
    if ref in PROBLEMS:
        return get_problem(ref).space
    if os.path.exists(ref):
        return DesignSpace.from_json(ref)
    raise UserError(f"unknown space {ref!r}: not a built-in name ({', '.join(sorted(SPACES))}, "
                    f"problems: {', '.join(sorted(PROBLEMS))}) and no such file")


def _dump(obj, fmt, rows=None, header=None) -> str:
    if fmt == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out=None):
    if out:
        tmp = f"{out}.tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    else:
        sys.stdout.write(text)


def _meta(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _fmt_row(x):
    return [repr(float(v)) for v in x]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_metrics(args):
    space = load_space(args.space)
    stats = hierarchy_stats(space, cap=args.cap)
    if args.format == "text":
        _emit(stats.table() + "\n", args.out)
        return
    d = stats.to_dict()
    if args.format == "csv":
        rows = [[v["name"], v["inactive_rate"], v["rd_all"], v["rd"]] for v in d["rates"]]
        _emit(_dump(d, "csv", rows, ["variable", "inactive_rate", "rd_all", "rd"]), args.out)
        return
    d["meta"] = _meta(args)
    _emit(_dump(d, "json"), args.out)


def cmd_sample(args):
    space = load_space(args.space)
    rng = np.random.default_rng(args.seed)
    info = {}
    if args.method == "hierarchical":
        X_valid, A_valid = space.enumerate_valid(args.cap)
        groups = group_vectors(space, X_valid, A_valid, args.grouping, args.rd_min)
        w = group_weights(groups, A_valid, args.weighting)
        info = {"group_sizes": [len(g) for g in groups],
                "group_weights": [float(v) for v in w],
                "group_quotas": [int(v) for v in apportion(args.n, w)]}
        X = sample_hierarchical(space, args.n, args.grouping, args.weighting, args.rd_min, rng, args.cap)
    else:
        corrector = None if args.no_correct else Corrector(space).fit()
        X = sample_nonhierarchical(space, args.n, corrector, rng)
    if args.format == "csv":
        _emit(_dump(None, "csv", [_fmt_row(x) for x in X], space.names), args.out)
        return
    doc = {"meta": _meta(args), "names": space.names, "X": X.tolist(), **info}
    if args.format == "text":
        lines = [f"{len(X)} samples of {space.n_x} variables"]
        for k, v in info.items():
            lines.append(f"{k}: {v}")
        _emit("\n".join(lines) + "\n", args.out)
        return
    _emit(_dump(doc, "json"), args.out)


def _read_vectors(path, space):
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
        X = data["X"] if isinstance(data, dict) else data
    except json.JSONDecodeError:
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if rows and any(not _is_number(c) for c in rows[0]):
            rows = rows[1:]
        X = [[float(c) for c in r] for r in rows]
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != space.n_x:
        raise UserError(f"{path}: expected rows of {space.n_x} values")
    return X


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def cmd_correct(args):
    space = load_space(args.space)
    X = _read_vectors(args.input, space)
    hook = None
    if args.space in PROBLEMS and args.mode in ("default", "problem_specific"):
        prob = get_problem(args.space)
        hook = prob.correction_hook if prob.has_hook else None
    c = Corrector(space, mode=args.mode, metric=args.metric, order=args.order,
                  randomized=args.randomized, hook=hook).fit()
    Y = c.transform(X, seed=args.seed)
    if args.format == "csv":
        _emit(_dump(None, "csv", [_fmt_row(x) for x in Y], space.names), args.out)
        return
    _emit(_dump({"meta": _meta(args), "mode": c.mode_, "names": space.names, "X": Y.tolist(),
                 "valid": space.is_valid(Y).tolist()}, "json"), args.out)


def _summary(record: RunRecord, problem) -> dict:
    F = record.F
    viable = ~np.isnan(F).any(axis=1)
    out = {"problem": problem.name, "n_evaluations": len(record),
           "n_failed": int((~viable).sum())}
    if problem.n_f == 1 and viable.any():
        G = record.G
        feas = viable & (np.all(np.nan_to_num(G, nan=np.inf) <= 0, axis=1) if G.shape[1] else True)
        if feas.any():
            i = int(np.flatnonzero(feas)[np.argmin(F[feas, 0])])
            out.update(best_f=float(F[i, 0]), best_x=record.X[i].tolist())
    return out


def cmd_optimize(args):
    problem = get_problem(args.problem)
    resume = None
    if args.resume:
        resume = RunRecord.read(args.resume)
    if args.algo == "bo":
        if args.integration not in BO_LEVELS:
            raise UserError(f"BO supports integration levels {BO_LEVELS}")
        cfg = BoConfig(n_doe=args.n_doe, n_doe_mult=args.n_doe_mult, n_infill=args.n_infill,
                       n_batch=args.batch, integration=args.integration, constraint=args.constraint,
                       pov_min=args.pov_min, seed=args.seed)
        record = bo_run(problem, cfg, resume=resume, out=args.out, threads=args.threads)
    else:
        cfg = MoeaConfig(pop_size=args.pop_size, n_gen=args.n_gen, n_eval=args.n_eval,
                         integration=args.integration, seed=args.seed)
        record = nsga2_run(problem, cfg, resume=resume, out=args.out, threads=args.threads)
    summary = _summary(record, problem)
    summary["meta"] = _meta(args)
    if args.format == "text":
        sys.stdout.write("".join(f"{k}: {v}\n" for k, v in sorted(summary.items()) if k != "meta"))
    else:
        sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")


def cmd_bench(args):
    with open(args.config) as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as e:
            raise UserError(f"{args.config}: line {e.lineno}: {e.msg}") from None
    if "seed" not in config:
        config["seed"] = args.seed
    paths = run_matrix(config, args.out_dir, threads=args.threads)
    if args.emit_plot:
        _emit(plot_data(paths), args.emit_plot)
    sys.stdout.write(json.dumps({"runs": [os.path.relpath(p, args.out_dir) for p in paths]},
                                sort_keys=True) + "\n")


def _collect(paths):
    files = []
    for p in paths:
        if os.path.isdir(p):
            files += [os.path.join(dp, f) for dp, _, fs in os.walk(p) for f in fs if f.endswith(".jsonl")]
        elif os.path.exists(p):
            files.append(p)
        else:
            raise UserError(f"no such file or directory: {p}")
    if not files:
        raise UserError("no record files found")
    return sorted(files)


def cmd_rank(args):
    result = rank_records(_collect(args.paths), start=args.start)
    if args.csv:
        _emit(rank_report_csv(result), args.csv)
    if args.format == "csv":
        _emit(rank_report_csv(result), args.out)
    elif args.format == "text":
        _emit(rank_report_text(result), args.out)
    else:
        doc = {"stats": {p: {c: list(v) for c, v in s.items()} for p, s in result["stats"].items()},
               "ranks": result["ranks"], "aggregate": result["aggregate"]}
        _emit(_dump(doc, "json"), args.out)


def cmd_export_space(args):
    space = load_space(args.space)
    _emit(space.to_json() + "\n", args.out)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, defaults):
        # subcommands accept the global flags too, without overriding values
        # given before the subcommand name
        d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
        parser.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
        parser.add_argument("--threads", type=int, default=d(1), help="parallel evaluations / runs")
        parser.add_argument("--format", choices=("json", "csv", "text"), default=d("json"))
        parser.add_argument("--verbose", "-v", action="store_true", default=d(False))
        return parser

    top = global_flags(_Parser(add_help=False), True)
    common = global_flags(_Parser(add_help=False), False)

    p = _Parser(prog="archopt", description="Hierarchical design-space analysis and optimization.",
                parents=[top])
    p.add_argument("--version", action="version", version=f"archopt {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("metrics", parents=[common], help="hierarchy statistics of a space")
    s.add_argument("space")
    s.add_argument("--cap", type=int, default=None, help="enumeration cap (declared size)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("sample", parents=[common], help="design of experiments")
    s.add_argument("space")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--method", choices=("hierarchical", "nonhierarchical"), default="hierarchical")
    s.add_argument("--grouping", choices=GROUPINGS, default="xact")
    s.add_argument("--weighting", choices=WEIGHTINGS, default="uniform")
    s.add_argument("--rd-min", type=float, default=0.8)
    s.add_argument("--cap", type=int, default=None)
    s.add_argument("--no-correct", action="store_true", help="non-hierarchical: keep raw vectors")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("correct", parents=[common], help="correct and impute design vectors")
    s.add_argument("space")
    s.add_argument("--input", required=True, help="JSON list of vectors or CSV file")
    s.add_argument("--mode", choices=MODES, default="default")
    s.add_argument("--metric", choices=("manhattan", "euclidean"), default="manhattan")
    s.add_argument("--order", choices=("depth_first", "distance_first"), default="depth_first")
    s.add_argument("--randomized", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_correct)

    s = sub.add_parser("optimize", parents=[common], help="run BO or NSGA-II on a built-in problem")
    s.add_argument("problem", choices=sorted(PROBLEMS) + ["gnc"])
    s.add_argument("--algo", choices=("bo", "nsga2"), default="bo")
    s.add_argument("--integration", choices=INTEGRATION_LEVELS, default="activeness")
    s.add_argument("--n-doe", type=int, default=None)
    s.add_argument("--n-doe-mult", type=float, default=None)
    s.add_argument("--n-infill", type=int, default=20)
    s.add_argument("--batch", type=int, default=1)
    s.add_argument("--constraint", choices=("mean", "pof"), default="mean")
    s.add_argument("--pov-min", type=float, default=0.25)
    s.add_argument("--pop-size", type=int, default=None)
    s.add_argument("--n-gen", type=int, default=None)
    s.add_argument("--n-eval", type=int, default=None)
    s.add_argument("--out", help="record file (line-delimited JSON)")
    s.add_argument("--resume", help="record file of an interrupted run")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("bench", parents=[common], help="run a configuration matrix")
    s.add_argument("config", help="JSON benchmark configuration")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--emit-plot", metavar="CSV", help="write median/quartile distance-ratio series")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("rank", parents=[common], help="rank configurations from record files")
    s.add_argument("paths", nargs="+", help="record files or directories")
    s.add_argument("--start", type=int, default=None, help="evaluation count where regret starts")
    s.add_argument("--csv", help="also write the aggregate table as CSV")
    s.add_argument("--out")
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("export-space", parents=[common], help="write a space as JSON")
    s.add_argument("space")
    s.add_argument("--out")
    s.set_defaults(func=cmd_export_space)
    return p


USER_ERRORS = (UserError, SpaceDefinitionError, EnumerationUnavailable, CorrectionFailed, BoAbort,
               SchemaError, FileNotFoundError, IsADirectoryError, PermissionError, KeyError, ValueError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UserError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    if args.threads < 1:
        sys.stderr.write("error: --threads must be at least 1\n")
        return 1
    try:
        args.func(args)
    except USER_ERRORS as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        sys.stderr.write(f"error: {msg}\n")
        return 1
    except Exception as e:  # noqa: BLE001 - reported as internal error
        log.debug("internal error", exc_info=True)
        sys.stderr.write(f"internal error: {type(e).__name__}: {e}\n")
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
