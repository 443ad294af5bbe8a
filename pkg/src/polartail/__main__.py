"""Command line interface: ``polartail {run,test,fig1,oracle-check}``."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .oracle import fig1_curve


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_config(cfg, args) -> int:
    workers = args.threads
    rows = harness.run(cfg, workers=workers, cell_workers=args.cell_workers,
                       timing=not args.no_timing)
    _emit(harness.rows_to_csv(rows), args.out)
    failed = [r for r in rows if r.status != "ok"]
    for r in failed:
        print(f"{r.name} {r.estimator} gamma={r.gamma!r}: {r.status}", file=sys.stderr)
    return 1 if failed else 0


def cmd_run(args) -> int:
    with open(args.config) as fh:
        record = json.load(fh)
    if args.seed is not None:
        record["seed"] = args.seed
    return _run_config(harness.ExperimentConfig.from_dict(record), args)


def cmd_test(args) -> int:
    cfg = harness.builtin_test(args.n, R=args.R, seed=args.seed)
    if args.pilot_R is not None:
        cfg.pilot_R = args.pilot_R
    if args.dump_config:
        _emit(cfg.to_json() + "\n", args.out)
        return 0
    return _run_config(cfg, args)


def cmd_fig1(args) -> int:
    lines = ["neg_log10_ell,gamma,ell,one_term_ratio,two_term_ratio\n"]
    for row in fig1_curve(args.points, args.lo, args.hi):
        lines.append(",".join(repr(float(v)) for v in row) + "\n")
    _emit("".join(lines), args.out)
    return 0


def cmd_oracle_check(args) -> int:
    ok = True
    for name, passed, detail in harness.oracle_checks():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polartail", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write CSV here instead of stdout")
        sp.add_argument("--threads", type=int, help="replication threads (overrides $POLARTAIL_THREADS)")
        sp.add_argument("--cell-workers", type=int, default=1, help="cells run concurrently")
        sp.add_argument("--no-timing", action="store_true",
                        help="write wall time as 0 for byte-identical reruns")

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    common(r)
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("test", help="run built-in test 1..10")
    t.add_argument("--n", type=int, required=True, choices=range(1, 11), metavar="K")
    t.add_argument("--R", type=int, default=100_000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--pilot-R", type=int, help="pilot size for threshold resolution")
    t.add_argument("--dump-config", action="store_true", help="print the JSON config and exit")
    common(t)
    t.set_defaults(func=cmd_test)

    f = sub.add_parser("fig1", help="asymptotic-to-exact ratios for the lognormal pair")
    f.add_argument("--points", type=int, default=15)
    f.add_argument("--lo", type=float, default=1.0, help="smallest -log10 of the tail probability")
    f.add_argument("--hi", type=float, default=14.0, help="largest -log10 of the tail probability")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fig1)

    o = sub.add_parser("oracle-check", help="verify the closed-form and quadrature oracles")
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
