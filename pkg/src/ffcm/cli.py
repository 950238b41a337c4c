"""Command-line entry point: ``ffcm {gen,run,g2,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import datagen
from .experiment import (
    METHODS,
    Case,
    ExperimentSpec,
    emit_report,
    load_report,
    run_experiment,
    run_g2_suite,
)

log = logging.getLogger("ffcm")

REDUCED_G2_DIMS = (2, 4, 8, 16, 32, 64, 128)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-k", type=int, help="number of clusters (default: ground-truth count)")
    p.add_argument("-m", type=float, help="fuzziness exponent (default 2, 1.1 for case2)")
    p.add_argument("--formula", choices=["paper", "bezdek"], help="membership update variant")
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--reps", type=int, help="repetitions (default 10)")
    p.add_argument("--seed", type=int, help="base seed; repetition r uses seed+r")
    p.add_argument("--local-epochs", type=int, help="client FCM passes per round (default 5)")
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--round-eps", type=float, help="center-drift tolerance")
    p.add_argument("--init", choices=["bbox", "client_sample"], help="server initialisation")
    p.add_argument("--sse-distance", choices=["sqeuclidean", "euclidean"])
    p.add_argument("--gap-reduction", choices=["sum", "mean"])
    p.add_argument("--out", type=Path, help="output directory")


def _overrides(args) -> dict:
    mapping = {
        "k": args.k, "m": args.m, "membership_formula": args.formula,
        "methods": tuple(args.methods.split(",")) if args.methods else None,
        "repetitions": args.reps, "base_seed": args.seed, "local_epochs": args.local_epochs,
        "max_rounds": args.max_rounds, "round_epsilon": args.round_eps, "init_strategy": args.init,
        "sse_distance": args.sse_distance, "gap_reduction": args.gap_reduction,
    }
    return {k: v for k, v in mapping.items() if v is not None}


def _print_summary(report) -> None:
    print(f"{'cell':<24} {'method':<8} {'gap':>10} {'wsse':>10} {'osse':>10} {'failed':>6}")
    for rec in report.summary:
        vals = [rec[f"{n}_mean"] for n in ("gap", "wsse", "osse")]
        cells = " ".join(f"{v:10.4f}" if v is not None else f"{'-':>10}" for v in vals)
        print(f"{rec['cell']:<24} {rec['method']:<8} {cells} {rec['n_failed']:>6}")


def cmd_gen(args) -> int:
    if args.case == "case1_equal":
        fd = datagen.build_case1("equal", args.seed)
    elif args.case == "case1_unequal":
        fd = datagen.build_case1("unequal", args.seed)
    elif args.case == "case2":
        fd = datagen.build_case2(args.seed)
    elif args.case == "case3":
        fd = datagen.build_case3(_int_list(args.points), args.seed)
    else:
        fd = datagen.build_g2(args.dim, args.sigma, args.clients, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    for cid, shard in fd.shards:
        datagen.save_dataset(shard, args.out / f"client_{cid}.txt")
    datagen.save_dataset(fd.ground_truth_centers, args.out / "truth.txt")
    print(f"wrote {len(fd.shards)} shards and truth.txt to {args.out}")
    return 0


def cmd_run(args) -> int:
    if args.spec:
        spec = ExperimentSpec.from_json(args.spec)
        spec = ExperimentSpec.from_dict({**spec.to_dict(), **_overrides(args)})
    else:
        if not args.case:
            log.error("either --case or --spec is required")
            return 2
        params = {}
        if args.case == "case3":
            params["points_per_client"] = _int_list(args.points)
        elif args.case == "g2":
            params.update(dim=args.dim, sigma=args.sigma, n_clients=args.clients)
        elif args.case == "custom":
            params["shards"] = [str(p) for p in args.shards or []]
            if args.truth:
                params["truth"] = str(args.truth)
        spec = ExperimentSpec(case=Case(args.case), params=params, **_overrides(args))
    report = run_experiment(spec)
    _print_summary(report)
    out = args.out or (Path(spec.output_dir) if spec.output_dir else None)
    if out:
        emit_report(report, out)
        print(f"report written to {out}")
    if report.failed:
        log.error("%d run(s) failed", len(report.failed))
        return 1
    return 0


def cmd_g2(args) -> int:
    dims = _int_list(args.dims) if args.dims else (REDUCED_G2_DIMS if args.reduced else datagen.G2_DIMS)
    sigmas = _int_list(args.sigmas) if args.sigmas else datagen.G2_SIGMAS
    overrides = _overrides(args)
    reps = overrides.pop("repetitions", 10)
    seed = overrides.pop("base_seed", 0)
    report = run_g2_suite(dims, sigmas, args.clients, reps, seed, **overrides)
    print(f"{'method':<8} {'q25':>8} {'median':>8} {'q75':>8} {'min':>8} {'max':>8}")
    for method, q in report.extras["gap_quantiles"].items():
        print(f"{method:<8} " + " ".join(f"{q[n]:8.2f}" for n in ("q25", "median", "q75", "min", "max")))
    if args.out:
        emit_report(report, args.out)
        print(f"report written to {args.out}")
    if report.failed:
        log.error("%d run(s) failed", len(report.failed))
        return 1
    return 0


def cmd_report(args) -> int:
    report = load_report(args.input)
    formats = tuple(args.format.split(","))
    for path in emit_report(report, args.out, formats):
        print(path)
    _print_summary(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ffcm", description="Federated fuzzy c-means experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a federated dataset as text files")
    g.add_argument("--case", required=True, choices=[c.value for c in Case if c is not Case.CUSTOM])
    g.add_argument("--points", default="1000,1000,1000", help="case3 client sizes")
    g.add_argument("--dim", type=int, default=2, help="g2 dimension")
    g.add_argument("--sigma", type=float, default=10, help="g2 standard deviation")
    g.add_argument("--clients", type=int, default=10, help="g2 client count")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one experiment case")
    r.add_argument("--case", choices=[c.value for c in Case])
    r.add_argument("--spec", type=Path, help="JSON experiment spec")
    r.add_argument("--points", default="1000,1000,1000", help="case3 client sizes")
    r.add_argument("--dim", type=int, default=2)
    r.add_argument("--sigma", type=float, default=10)
    r.add_argument("--clients", type=int, default=10)
    r.add_argument("--shards", type=Path, nargs="*", help="custom case: one text file per client")
    r.add_argument("--truth", type=Path, help="custom case: ground-truth centers file")
    _add_common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("g2", help="run the G2 grid")
    s.add_argument("--dims", help="comma-separated dimensions")
    s.add_argument("--sigmas", help="comma-separated standard deviations")
    s.add_argument("--reduced", action="store_true", help="only d <= 128")
    s.add_argument("--clients", type=int, default=10)
    _add_common(s)
    s.set_defaults(func=cmd_g2)

    p = sub.add_parser("report", help="re-emit a saved report.json")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--format", default="csv,json,plot", help="comma-separated: csv,json,plot")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
