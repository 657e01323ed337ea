"""``noisyot`` command line: simulate, optimize, bound, tradeoff, verify.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 protocol
abort (``simulate --fail-on-abort`` only). Relative output paths are
resolved against ``$NOISYOT_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .attack_opt import optimize_delta
from .codes import hamming74, load_parity_check
from .protocol import Honest, Params, load_config, parse_bob, run, run_batch
from .security import (min_n_for_security, security_report, tradeoff_grid,
                       write_tradeoff_csv)
from .verify import SUITES, run_suite

OUTPUT_DIR_ENV = "NOISYOT_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_ABORT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def output_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` inclusive of ``stop``; a bare number is a single point."""
    parts = text.split(":")
    try:
        values = [float(v) for v in parts]
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}") from exc
    if len(values) == 1:
        return np.array(values)
    if len(values) != 3 or values[2] <= 0 or values[1] < values[0]:
        raise UsageError(f"range must be start:stop:step with step > 0, got {text!r}")
    start, stop, step = values
    count = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(count), 12)


PARAM_FLAGS = (("n", int), ("ell", int), ("T", float), ("r", float), ("p_erase", float),
               ("p_error", float), ("mu", float), ("c_abort", float), ("seed", int), ("mode", str))


def _params(args) -> Params:
    values = load_config(args.config) if args.config else {}
    for name, _ in PARAM_FLAGS:
        v = getattr(args, name)
        if v is not None:
            values[name] = v
    values.setdefault("n", 1024)
    values.setdefault("ell", min(128, int(values["n"])))
    return Params.from_mapping(values)


def cmd_simulate(args) -> int:
    p = _params(args)
    bob = parse_bob(args.bob)
    code = load_parity_check(args.code) if args.code else hamming74()
    if args.runs == 1:
        t = run(p, bob, code)
        if args.out:
            output_path(args.out).write_text(t.to_json())
        if t.aborted:
            print(f"ABORTED seed={p.seed} m+={t.index_plus.size} mx={t.index_times.size} "
                  f"threshold={t.threshold}")
            return EXIT_ABORT if args.fail_on_abort else EXIT_OK
        if isinstance(bob, Honest):
            print(f"{'CORRECT' if t.correct else 'INCORRECT'} seed={p.seed} bob={t.bob}")
        else:
            a = t.adversary
            print(f"DISHONEST seed={p.seed} bob={t.bob} cprime={a['cprime']} "
                  f"other_correct={a['other_correct_bits']}/{a['other_bits']} "
                  f"expected={a['other_expected_correct_bits']:.2f} "
                  f"log2_guess={a['other_log2_guess_probability']:.3f}")
        return EXIT_OK

    runs = run_batch(p, bob, args.runs, workers=args.workers, code=code)
    if args.out:
        with output_path(args.out).open("w") as fh:
            for t in runs:
                fh.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")
    aborted = sum(t.aborted for t in runs)
    line = f"runs={len(runs)} aborted={aborted}"
    if isinstance(bob, Honest):
        correct = sum(bool(t.correct) for t in runs)
        line = f"CORRECT {correct}/{len(runs)} " + line
    else:
        done = [t.adversary for t in runs if not t.aborted]
        if done:
            rate = sum(a["other_correct_bits"] for a in done) / max(1, sum(a["other_bits"] for a in done))
            line += f" other_bit_guess_rate={rate:.4f}"
    print(line)
    if aborted and args.fail_on_abort:
        return EXIT_ABORT
    return EXIT_OK


def cmd_optimize(args) -> int:
    if (args.r is None) == (args.sweep is None):
        raise UsageError("give exactly one of --r or --sweep")
    r_values = [args.r] if args.r is not None else parse_range(args.sweep)
    rows = []
    for r in r_values:
        if not 0 <= r <= 1:
            raise UsageError(f"r must lie in [0, 1], got {r}")
        res = optimize_delta(float(r), grid_step=args.grid_step, refine_tol=args.tolerance)
        b = res.best
        rows.append((res.r, res.delta_max, res.regime, b.alpha, b.x, b.y, b.z))
        print(f"r={res.r:g} delta_max={res.delta_max:.5f} regime={res.regime} "
              f"alpha={b.alpha:.5f} phi=({b.x:.5f},{b.y:.5f},{b.z:.5f})")
    if args.csv:
        with output_path(args.csv).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("r", "delta_max", "regime", "alpha", "x", "y", "z"))
            for r, d, regime, a, x, y, z in rows:
                w.writerow((f"{r:.6g}", f"{d:.12g}", regime, f"{a:.9g}", f"{x:.9g}", f"{y:.9g}", f"{z:.9g}"))
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.r is None and args.delta_max is None and args.mu is None:
        raise UsageError("give one of --r, --delta-max or --mu")
    code = load_parity_check(args.code) if args.code else None
    rep = security_report(args.ell, args.n, mode=args.mode, r=args.r, delta_max=args.delta_max,
                          p_error=args.p_error, p_erase=args.p_erase, accounting=args.accounting,
                          mu=args.mu, code=code)
    print(rep.summary())
    if not rep.rigorous:
        print(f"warning: {rep.note}")
    if args.epsilon is not None:
        mode = "perfect" if args.mode == "perfect" else args.accounting
        k = min_n_for_security(args.epsilon, args.ell, rep.delta_max, args.p_error, mode, code)
        print("min_slots=none (no finite size reaches epsilon)" if k is None else f"min_slots={k}")
    if args.json:
        output_path(args.json).write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_tradeoff(args) -> int:
    rows = tradeoff_grid(parse_range(args.r), parse_range(args.a))
    secure = sum(row[3] for row in rows)
    if args.csv:
        write_tradeoff_csv(rows, output_path(args.csv))
        print(f"points={len(rows)} secure={secure}")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("r", "a", "value", "secure"))
        for r, a, v, s in rows:
            w.writerow((f"{r:.6g}", f"{a:.6g}", f"{v:.12g}", s))
    return EXIT_OK


def cmd_verify(args) -> int:
    failed = 0
    for check in run_suite(args.suite):
        print(check.line(), flush=True)
        failed += not check.passed
    print(f"{'FAILED' if failed else 'OK'}: {failed} failing checks")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> Parser:
    parser = Parser(prog="noisyot", description="Oblivious transfer from noisy quantum storage.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    sim = sub.add_parser("simulate", help="run the protocol and write a transcript")
    sim.add_argument("--config", help="key = value parameter file; flags override it")
    for name, kind in PARAM_FLAGS:
        flag = "--" + name.replace("_", "-")
        if name == "mode":
            sim.add_argument(flag, choices=("perfect", "practical"))
        else:
            sim.add_argument(flag, type=kind, dest=name)
    sim.add_argument("--bob", default="honest:+",
                     help="honest:+|honest:x or a strategy such as store:r=0.7, breidbart, basis:b=+, "
                          "partial:alpha=0.3,r=0.9, beamsplit:mu=0.2, erase-all")
    sim.add_argument("--code", help="parity-check matrix file (default Hamming(7,4))")
    sim.add_argument("--runs", type=int, default=1, help="independent runs with derived seeds")
    sim.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    sim.add_argument("--out", help="transcript file (JSON; JSON lines for several runs)")
    sim.add_argument("--fail-on-abort", action="store_true", help="exit 3 if the protocol aborts")
    sim.set_defaults(func=cmd_simulate)

    opt = sub.add_parser("optimize", help="maximize the uncertainty quantity over partial attacks")
    opt.add_argument("--r", type=float, help="storage survival probability")
    opt.add_argument("--sweep", help="start:stop:step range of r")
    opt.add_argument("--tolerance", type=float, default=1e-9, help="refinement tolerance")
    opt.add_argument("--grid-step", type=float, default=0.01)
    opt.add_argument("--csv", help="write one row per r")
    opt.set_defaults(func=cmd_optimize)

    bnd = sub.add_parser("bound", help="closed-form sender-security bound")
    bnd.add_argument("--mode", choices=("perfect", "practical"), default="perfect")
    bnd.add_argument("--ell", type=int, default=128)
    bnd.add_argument("--n", type=int, default=10000)
    bnd.add_argument("--r", type=float)
    bnd.add_argument("--delta-max", type=float)
    bnd.add_argument("--mu", type=float, help="beam-splitting estimate (heuristic)")
    bnd.add_argument("--p-error", type=float, default=0.0)
    bnd.add_argument("--p-erase", type=float, default=0.0)
    bnd.add_argument("--accounting", choices=("asymptotic", "concrete"), default="asymptotic")
    bnd.add_argument("--code", help="parity-check matrix file for concrete accounting")
    bnd.add_argument("--epsilon", type=float, help="also report the smallest size reaching epsilon")
    bnd.add_argument("--json", help="write the report as JSON")
    bnd.set_defaults(func=cmd_bound)

    tr = sub.add_parser("tradeoff", help="noise trade-off surface as CSV")
    tr.add_argument("--r", default="0.02:1:0.02")
    tr.add_argument("--a", default="1:2:0.05")
    tr.add_argument("--csv", help="output file (default: stdout)")
    tr.set_defaults(func=cmd_tradeoff)

    ver = sub.add_parser("verify", help="run the built-in oracle checks")
    ver.add_argument("--suite", choices=("all",) + tuple(SUITES), default="all")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"noisyot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
