"""Command-line entry point: run, gen-synth, compare."""

from __future__ import annotations

import argparse
import sys

from .ingestion import SyntheticConfig
from .reports import cmd_compare, cmd_gen_synth, cmd_run, load_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stabselect",
        description="Stability-aware model selection over multi-cohort feature tables",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a configured sweep and write reports")
    run.add_argument("--config", required=True, help="JSON run configuration")
    run.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    run.add_argument(
        "--allow-failures",
        action="store_true",
        help="exit 0 even when some pipelines were quarantined",
    )

    gen = sub.add_parser("gen-synth", help="generate a seeded synthetic cohort CSV")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument("--cohorts", type=int, default=4)
    gen.add_argument("--subjects", type=int, default=100, help="subjects per cohort")
    gen.add_argument("--features", type=int, default=30)
    gen.add_argument("--informative", type=int, default=8)
    gen.add_argument("--balance", type=float, default=0.5, help="class-1 probability")
    gen.add_argument("--shift", type=float, default=0.3, help="cohort offset SD")
    gen.add_argument("--noise", type=float, default=1.0, help="noise SD")
    gen.add_argument("--seed", type=int, default=0)

    cmp_ = sub.add_parser("compare", help="pairwise significance tests on a run dir")
    cmp_.add_argument("--dir", required=True, help="run output directory")
    cmp_.add_argument("--top", type=int, default=10)
    cmp_.add_argument("--alpha", type=float, default=0.05)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            code = cmd_run(cfg, workers=args.workers, allow_failures=args.allow_failures)
            if code != 0:
                print(
                    "some pipelines were quarantined; see manifest.json "
                    "(use --allow-failures to exit 0)",
                    file=sys.stderr,
                )
            return code
        if args.command == "gen-synth":
            cfg = SyntheticConfig(
                n_cohorts=args.cohorts,
                subjects_per_cohort=args.subjects,
                n_features=args.features,
                n_informative=args.informative,
                class_balance=args.balance,
                cohort_shift=args.shift,
                noise_sd=args.noise,
                seed=args.seed,
            )
            cmd_gen_synth(cfg, args.out)
            print(f"wrote {args.cohorts * args.subjects} subjects to {args.out}")
            return 0
        if args.command == "compare":
            report = cmd_compare(args.dir, top_n=args.top, alpha=args.alpha)
            print(
                f"{len(report.pairs)} comparisons, "
                f"{report.n_significant} significant at alpha={report.alpha}"
            )
            for pair in report.pairs:
                flag = "*" if pair.reject else " "
                print(
                    f"{flag} {pair.label_a} vs {pair.label_b}: "
                    f"p={pair.p_raw:.4g} adj={pair.p_adjusted:.4g}"
                )
            return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
