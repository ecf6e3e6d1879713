"""Command-line entry point: ``lydroo simulate`` and ``lydroo sweep``."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError
from .engine import SCHEMES, FeasibilityError
from .harness import run_experiment
from .queueing import CausalityError


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lydroo", description="Online MEC offloading simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scheme", choices=SCHEMES, default="lydroo")
        p.add_argument("--frames", type=int, default=10000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="key = value config file (default: built-in 10-WD network)")
        p.add_argument("--sequential", action="store_true",
                       help="train inline and omit wall times, for byte-identical reruns")

    sim = sub.add_parser("simulate", help="run one scheme and write per-frame metrics")
    common(sim)
    sim.add_argument("--out", help="CSV path for per-frame metrics")
    sim.add_argument("--lambda-scale", type=float, default=1.0, help="multiply every arrival mean")

    sweep = sub.add_parser("sweep", help="run one scheme over several arrival scales")
    common(sweep)
    sweep.add_argument("--lambda-scale", type=float, nargs="+", required=True, dest="lambda_scales")
    sweep.add_argument("--out-prefix", help="write <prefix>_<scale>.csv per point")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "simulate":
            result = run_experiment(args.config, args.scheme, args.frames, args.seed, out=args.out,
                                    sequential=args.sequential, lambda_scale=args.lambda_scale)
            print("\n".join(result.summary.lines()))
        else:
            print("lambda_scale,avg_weighted_rate_bps,max_avg_power_w,tail_total_queue_bits,stability")
            for scale in args.lambda_scales:
                out = f"{args.out_prefix}_{scale:g}.csv" if args.out_prefix else None
                s = run_experiment(args.config, args.scheme, args.frames, args.seed, out=out,
                                   sequential=args.sequential, lambda_scale=scale).summary
                print(f"{scale:g},{s.weighted_rate:.10g},{float(s.avg_power.max()):.6g},"
                      f"{s.tail_queue:.10g},{s.verdict}", flush=True)
    except (ConfigError, OSError, ValueError, FeasibilityError, CausalityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
