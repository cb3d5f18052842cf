"""Command line: ``epda construct | verify | simulate | compare | show``.

Exit codes: 0 success, 1 verification or simulation failure, 2 invalid
parameters, unreadable input or malformed files.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from . import constructions as C
from .analysis import delivery_summary, subpack_formulas
from .array import emit_array, metrics, parse_array, verify_epda, verify_pda
from .errors import EpdaError, FormatError, InvalidEpda, ParameterInfeasible
from .sim import EPS_DECODE, run_round

log = logging.getLogger("epda")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

KINDS = {
    "man-pda": (("K", "t"), C.man_pda),
    "const1": (("K", "Z"), C.construction_one),
    "const2": (("K", "Z", "n"), C.construction_two),
    "theorem-a": (("K", "t"), C.scheme_theorem_a),
    "theorem-b": (("K", "t", "n"), C.scheme_theorem_b),
    "lae": (("K", "L", "t"), C.lae_epda),
}


class UsageError(EpdaError):
    pass


def _read_array(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_array(text)


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_construct(args) -> int:
    if args.kind == "concat":
        if args.input is None or args.u is None:
            raise UsageError("concat needs --input FILE and --u")
        A = C.row_concat(_read_array(args.input), args.u)
    else:
        names, fn = KINDS[args.kind]
        missing = [f"--{n}" for n in names if getattr(args, n) is None]
        if missing:
            raise UsageError(f"{args.kind} needs {' '.join(missing)}")
        A = fn(*(getattr(args, n) for n in names))
    log.info("constructed %s array with (K,L,F,Z,S) = %s", args.kind, A.params)
    _write(emit_array(A), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    A = _read_array(args.file)
    report = verify_pda(A) if args.as_pda else verify_epda(A, require_regular=args.regular)
    if args.format == "json":
        _write(json.dumps(report.to_dict(), indent=2) + "\n", args.output)
    else:
        _write("\n".join(report.lines()) + "\n", args.output)
    return EXIT_OK if report.passed else EXIT_FAIL


def _demands(choice: str, K: int, N: int) -> tuple[int, ...]:
    if choice == "distinct":
        if N < K:
            raise UsageError(f"distinct demands need N >= K (N={N}, K={K}); pass an explicit list")
        return tuple(range(1, K + 1))
    if choice == "equal":
        return (1,) * K
    try:
        return tuple(int(x) for x in choice.split(","))
    except ValueError as exc:
        raise UsageError(f"cannot parse demand list {choice!r}") from exc


def _trial(seed, A, d, N, P):
    return run_round(A, seed, d, N, P, strict=False).to_dict()


def cmd_simulate(args) -> int:
    A = _read_array(args.file)
    report = verify_epda(A)
    if not report.passed:
        raise InvalidEpda(f"array fails {sorted(report.failed)}; run verify for witnesses")
    N = args.N if args.N is not None else A.K
    d = _demands(args.demands, A.K, N)
    seeds = list(range(args.seed, args.seed + args.trials))
    work = partial(_trial, A=A, d=d, N=N, P=args.P)
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            trials = list(pool.map(work, seeds))
    else:
        trials = [work(s) for s in seeds]
    m = metrics(A)
    ok = all(t["pass"] for t in trials)
    out = {
        "array": dict(zip("KLFZS", A.params)),
        "seed": args.seed,
        "trials": args.trials,
        "N": N,
        "P": args.P,
        "demands": list(d),
        "slots": A.S,
        "delivery_time": str(m.delivery_time),
        "dof": None if m.dof is None else str(m.dof),
        "max_rel_error": max(t["max_rel_error"] for t in trials),
        "tolerance": EPS_DECODE,
        "pass": ok,
        "reports": trials,
    }
    if args.format == "pretty":
        text = (f"(K,L,F,Z,S) = {A.params}\ntrials {args.trials} from seed {args.seed}\n"
                f"slots {A.S}, T = {m.delivery_time}, DoF {m.dof}\n"
                f"max relative error {out['max_rel_error']:.3e}\n{'pass' if ok else 'FAIL'}\n")
    else:
        text = json.dumps(out, indent=2) + "\n"
    _write(text, args.output)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compare(args) -> int:
    params = C.SchemeParams(args.K, args.t, args.L, args.n)
    table = subpack_formulas(params)
    if args.format == "csv":
        text = table.to_csv()
    elif args.format == "json":
        text = table.to_json()
    else:
        T, dof, gain = delivery_summary(params)
        text = f"K={args.K} t={args.t} L={args.L}: T* = {T}, DoF {dof}, local gain {gain}\n"
        text += table.pretty() + "\n"
    _write(text, args.output)
    return EXIT_OK


def cmd_show(args) -> int:
    A = _read_array(args.file)
    _write(f"(K,L,F,Z,S) = {A.params}\n{A.pretty()}\n", args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="epda", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def out(sp):
        sp.add_argument("-o", "--output", help="output file (default: stdout)")

    c = sub.add_parser("construct", help="generate an array family member")
    c.add_argument("kind", choices=sorted([*KINDS, "concat"]))
    for name in ("K", "t", "L", "Z", "n", "u"):
        c.add_argument(f"--{name}", type=int)
    c.add_argument("--input", help="array file to concatenate (concat only)")
    out(c)
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="check EPDA (or PDA) conditions")
    v.add_argument("file")
    v.add_argument("--as-pda", action="store_true", help="check D1-D3 instead of C1-C4")
    v.add_argument("--regular", action="store_true", help="also require C2' regularity")
    v.add_argument("--format", choices=("pretty", "json"), default="pretty")
    out(v)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="run zero-forcing delivery over seeded channels")
    s.add_argument("file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--demands", default="distinct", help="distinct | equal | comma-separated list")
    s.add_argument("--N", type=int, help="number of files (default: K)")
    s.add_argument("--P", type=int, default=8, help="symbols per subfile")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--format", choices=("json", "pretty"), default="json")
    out(s)
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("compare", help="subpacketization table against literature schemes")
    for name in ("K", "t", "L"):
        m.add_argument(f"--{name}", type=int, required=True)
    m.add_argument("--n", type=int)
    m.add_argument("--format", choices=("csv", "json", "pretty"), default="csv")
    out(m)
    m.set_defaults(func=cmd_compare)

    w = sub.add_parser("show", help="pretty-print an array")
    w.add_argument("file")
    out(w)
    w.set_defaults(func=cmd_show)
    return p


def main(argv=None) -> int:
    level = os.environ.get("LOG_LEVEL", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParameterInfeasible, FormatError, InvalidEpda, UsageError) as exc:
        print(f"epda {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EpdaError as exc:
        print(f"epda {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
