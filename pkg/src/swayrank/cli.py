"""Command-line interface.

Commands: simulate, extract, rank, train, predict, loo, study.  Seeds are
mandatory for every stochastic command so runs are reproducible; reports are
JSON, tabular data is CSV.  Exit codes: 0 success, 1 usage error, 2 data
error.  ``--threads`` (or the SWAYRANK_THREADS environment variable) caps
worker counts without changing any output byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import features, simgen, tmle
from .classify import (
    EvalConfig,
    PluginClassifier,
    fit_plugin,
    loo_evaluate,
    simulation_study,
    study_report,
    write_loo_detail,
)
from .errors import DataFormatError, MissingTrajectory, SwayrankError
from .parallel import worker_count


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"ERROR[usage]: {message}\n")
        sys.exit(1)


def _write_json(path, obj) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _add_common(p, seed=True, library=True):
    if seed:
        p.add_argument("--seed", type=int, required=True, help="master seed (required)")
    if library:
        p.add_argument("--library", choices=["full", "reduced"], default="full")
        p.add_argument("--folds", type=int, default=None, help="cross-validation folds")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: 1 or SWAYRANK_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swayrank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw a synthetic dataset CSV")
    p.add_argument("--scenario", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, choices=[3, 8], default=3)
    p.add_argument("--raw-logit", action="store_true", help="no covariate standardization in the class-probability formulas")
    p.add_argument("--out", required=True)
    _add_common(p, library=False)

    p = sub.add_parser("extract", help="summarize per-subject trajectory files into a dataset CSV")
    p.add_argument("--meta", required=True, help="subjects CSV: id,age,gender,laterality,height,weight[,class]")
    p.add_argument("--traj-dir", required=True, help="directory holding <id>_<protocol>.csv trajectory files")
    p.add_argument("--dim", type=int, choices=[3, 8], default=3)
    p.add_argument("--trim-start", type=float, default=0.0, help="drop samples before this time (seconds)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("rank", help="rank the four protocols of a labeled dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--dim", type=int, choices=[3, 8], default=None)
    p.add_argument("--out", default="-", help="ranking report JSON (default: stdout)")
    p.add_argument("--scores-csv", default=None, help="also write criterion values as CSV")
    _add_common(p)

    p = sub.add_parser("train", help="fit a plug-in classifier on a labeled dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--j", type=int, choices=[1, 2, 3, 4], required=True, help="number of top protocols to use")
    p.add_argument("--ranking", default=None, help="reuse a ranking report instead of re-ranking")
    p.add_argument("--out", required=True, help="model JSON")
    _add_common(p)

    p = sub.add_parser("predict", help="classify subjects with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="predictions CSV: id,h,pred")

    p = sub.add_parser("loo", help="leave-one-out evaluation of the full pipeline")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default="-", help="performance report JSON (default: stdout)")
    p.add_argument("--detail", default=None, help="per-subject predictions CSV")
    _add_common(p)

    p = sub.add_parser("study", help="replicated simulation study")
    p.add_argument("--scenario", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--dim", type=int, choices=[3, 8], default=3)
    p.add_argument("--out", default="-", help="study report JSON (default: stdout)")
    _add_common(p)

    return parser


def _read_meta(path):
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        base = ["id", "age", "gender", "laterality", "height", "weight"]
        if header not in (base, base + ["class"]):
            raise DataFormatError(f"{path}: unexpected metadata header {header}")
        has_class = header is not None and len(header) == 7
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ident = int(row[0])
                w = simgen.Covariates(
                    age=float(row[1]),
                    gender=int(row[2]),
                    laterality=int(row[3]),
                    height=float(row[4]),
                    weight=float(row[5]),
                )
                label = int(row[6]) if has_class and row[6] != "" else None
            except (ValueError, IndexError) as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            rows.append((ident, w, label))
    if not rows:
        raise DataFormatError(f"{path}: no subjects")
    return rows


def cmd_extract(args) -> int:
    meta = _read_meta(args.meta)
    traj_dir = Path(args.traj_dir)
    records, ids = [], []
    schedule = features.PhaseSchedule()
    for ident, w, label in meta:
        per_protocol = []
        for j in range(1, 5):
            path = traj_dir / f"{ident}_{j}.csv"
            if not path.exists():
                raise MissingTrajectory(f"no trajectory file {path}")
            traj = features.read_trajectory(path, trim_start=args.trim_start)
            if args.dim == 3:
                per_protocol.append(features.basic_summary(traj, schedule).y)
            else:
                per_protocol.append(features.extended_summary(traj, schedule).y)
        records.append(simgen.SubjectRecord(w=w, a=label, y=np.stack(per_protocol)))
        ids.append(ident)
    data = simgen.Dataset.from_records(records, ids=np.array(ids))
    simgen.write_dataset(args.out, data)
    return 0


def cmd_simulate(args) -> int:
    config = simgen.SimConfig(
        scenario=args.scenario,
        sigma=args.sigma,
        n=args.n,
        seed=args.seed,
        logit_standardize=not args.raw_logit,
    )
    simgen.write_dataset(args.out, simgen.draw_dataset(config, args.dim))
    return 0


def _load_labeled(path, dim=None):
    data = simgen.read_dataset(path)
    if dim is not None and data.dim != dim:
        raise DataFormatError(f"{path}: dataset is {data.dim}-dim, expected {dim}")
    if not data.labeled:
        raise DataFormatError(f"{path}: all subjects must be labeled")
    return data


def cmd_rank(args) -> int:
    data = _load_labeled(args.infile, args.dim)
    config = tmle.TmleConfig(
        library=args.library, v=args.folds, seed=args.seed, threads=worker_count(args.threads)
    )
    ranking = tmle.rank_protocols(data, config=config)
    _write_json(args.out, tmle.ranking_report(ranking, data.dim))
    if args.scores_csv:
        tmle.write_scores_csv(args.scores_csv, ranking)
    return 0


def cmd_train(args) -> int:
    data = _load_labeled(args.infile)
    if args.ranking:
        report = json.loads(Path(args.ranking).read_text())
        order = [int(j) for j in report["order"]]
        if sorted(order) != [1, 2, 3, 4]:
            raise DataFormatError(f"{args.ranking}: order is not a permutation of 1..4")
        ranking = tmle.ProtocolRanking(
            order=tuple(order),
            scores=np.array([report["scores"][str(j)] for j in range(1, 5)]),
            estimates=(),
        )
    else:
        config = tmle.TmleConfig(
            library=args.library, v=args.folds, seed=args.seed, threads=worker_count(args.threads)
        )
        ranking = tmle.rank_protocols(data, config=config)
    clf = fit_plugin(data, ranking, args.j, args.library, args.folds, seed=args.seed)
    _write_json(args.out, clf.to_dict())
    return 0


def cmd_predict(args) -> int:
    clf = PluginClassifier.from_dict(json.loads(Path(args.model).read_text()))
    data = simgen.read_dataset(args.infile)
    if data.dim != clf.dim:
        raise DataFormatError(f"{args.infile}: dataset is {data.dim}-dim, model wants {clf.dim}")
    with open(args.out, "w", newline="") as fh:
        fh.write("id,h,pred\n")
        for ell in range(data.n):
            h = clf.prob(data.w[ell], data.y[ell])
            fh.write(f"{int(data.ids[ell])},{h!r},{int(h >= clf.threshold)}\n")
    return 0


def cmd_loo(args) -> int:
    data = _load_labeled(args.infile)
    config = EvalConfig(
        library=args.library, v=args.folds, seed=args.seed, threads=worker_count(args.threads)
    )
    report = loo_evaluate(data, config)
    _write_json(
        args.out,
        {
            "n": data.n,
            "perf": [float(v) for v in report.perf],
            "degenerate_splits": list(report.degenerate),
        },
    )
    if args.detail:
        write_loo_detail(args.detail, data, report)
    return 0


def cmd_study(args) -> int:
    sim_config = simgen.SimConfig(scenario=args.scenario, sigma=args.sigma, n=args.n, seed=args.seed)
    eval_config = EvalConfig(
        library=args.library, v=args.folds, seed=args.seed, threads=worker_count(args.threads)
    )
    result = simulation_study(sim_config, eval_config, B=args.B, summary_dim=args.dim)
    _write_json(args.out, study_report(result))
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "extract": cmd_extract,
    "rank": cmd_rank,
    "train": cmd_train,
    "predict": cmd_predict,
    "loo": cmd_loo,
    "study": cmd_study,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (SwayrankError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(f"ERROR[data]: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
