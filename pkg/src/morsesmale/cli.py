"""Command line entry point.

Exit status: 0 when every theorem verdict is PASS, 2 on FAIL, 1 when the map
is outside the Morse-Smale scope, 3 for other analysis errors and 64 for
command line usage errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .catalog import CATALOG
from .errors import MorseSmaleError, OutOfScope
from .pipeline import ALL_FORMATS, AnalysisOptions, AnalysisReport, emit_outputs, run_analyze
from .svg import quotient_svg

EXIT_PASS, EXIT_OUT_OF_SCOPE, EXIT_FAIL, EXIT_ERROR, EXIT_USAGE = 0, 1, 2, 3, 64


class _Parser(argparse.ArgumentParser):
    # argparse uses status 2 for usage errors, which would read as a theorem FAIL
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _formats(text: str) -> tuple[str, ...]:
    out = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in out if f not in ALL_FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {','.join(ALL_FORMATS)}")
    return out


def _flip(text: str) -> tuple[str, int]:
    name, _, idx = text.rpartition(":")
    try:
        return name, int(idx)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME:INDEX, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="morsesmale", description="Morse-Smale surface diffeomorphisms: orientability, beh and orbit spaces")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="run the full analysis on a catalog map or a TOML config")
    a.add_argument("name", nargs="?", help="catalog entry (see 'examples --list')")
    a.add_argument("--config", type=Path, help="TOML map definition")
    a.add_argument("--max-period", type=int)
    a.add_argument("--grid", type=int)
    a.add_argument("--budget", type=float, help="arclength budget per separatrix")
    a.add_argument("--out", type=Path, help="output directory (default out/<map name>)")
    a.add_argument("--formats", type=_formats, default=ALL_FORMATS, help="comma list of json,csv,dot,svg")
    a.add_argument("--flip", type=int, action="append", default=[], metavar="INDEX",
                   help="fault injection: invert the sign of heteroclinic point INDEX")

    v = sub.add_parser("verify-theorem", help="check 'orientable implies beh <= 1' on catalog maps")
    v.add_argument("names", nargs="*")
    v.add_argument("--all", action="store_true")
    v.add_argument("--flip", type=_flip, action="append", default=[], metavar="NAME:INDEX",
                   help="fault injection on one map")

    e = sub.add_parser("examples", help="describe the built-in catalog")
    e.add_argument("--list", action="store_true", help="names only")

    o = sub.add_parser("orbit-space", help="project separatrices into the orbit space of one sink basin")
    o.add_argument("name")
    o.add_argument("--sink", type=int, required=True)
    o.add_argument("--out", type=Path, default=Path("."))
    return p


def _summary(r: AnalysisReport) -> str:
    counts = {k: sum(o.kind == k for o in r.orbits) for k in ("sink", "saddle", "source")}
    return (f"{r.m.name}: {counts['sink']} sink(s), {counts['saddle']} saddle(s), {counts['source']} source(s); "
            f"heteroclinic orbits {sum(len(p.reps) for p in r.pairs)}; {r.orientability}; beh={r.beh}; "
            f"theorem {r.theorem.verdict}")


def cmd_analyze(args) -> int:
    if (args.name is None) == (args.config is None):
        raise SystemExit(_usage("analyze needs exactly one of NAME or --config"))
    opts = {"max_period": args.max_period, "grid": args.grid, "budget": args.budget}
    if args.flip:
        opts["flip"] = tuple(args.flip)
    r = run_analyze(args.name, opts, config=args.config)
    out = args.out or Path("out") / r.m.name
    for path in emit_outputs(r, out, args.formats):
        print(f"wrote {path}")
    print(_summary(r))
    for line in r.theorem.diagnostics:
        print(f"  {line}")
    return EXIT_PASS if r.theorem.verdict == "PASS" else EXIT_FAIL


def cmd_verify(args) -> int:
    names = list(CATALOG) if args.all or not args.names else args.names
    unknown = [n for n in names if n not in CATALOG]
    if unknown:
        raise SystemExit(_usage(f"unknown example(s) {unknown}"))
    flips: dict[str, list[int]] = {}
    for name, idx in args.flip:
        flips.setdefault(name, []).append(idx)
    status = EXIT_PASS
    for n in names:
        e = CATALOG[n]
        try:
            r = run_analyze(n, AnalysisOptions(**e.options, flip=tuple(flips.get(n, ()))))
        except OutOfScope as exc:
            print(f"{n:24s} OUT-OF-SCOPE {exc}")
            status = max(status, EXIT_OUT_OF_SCOPE)
            continue
        expect = e.expected
        mismatch = [k for k in ("orientability", "beh") if k in expect and expect[k] != getattr(r, k)]
        note = f"  (expected {', '.join(f'{k}={expect[k]}' for k in mismatch)})" if mismatch and n not in flips else ""
        print(f"{n:24s} {r.theorem.verdict}  {r.orientability:15s} beh={r.beh}{note}")
        for line in r.theorem.diagnostics:
            print(f"    {line}")
        if r.theorem.verdict != "PASS" or note:
            status = EXIT_FAIL
    return status


def cmd_examples(args) -> int:
    for n, e in CATALOG.items():
        if args.list:
            print(n)
        else:
            exp = ", ".join(f"{k}={v}" for k, v in e.expected.items() if k != "counts")
            print(f"{n:24s} {e.description}\n{'':24s} expected {exp}")
    return EXIT_PASS


def cmd_orbit_space(args) -> int:
    if args.name not in CATALOG and not Path(args.name).is_file():
        raise SystemExit(_usage(f"unknown example {args.name!r}"))
    r = run_analyze(args.name)
    try:
        q = r.quotient(args.sink)
    except KeyError as exc:
        raise SystemExit(_usage(str(exc.args[0])))
    if q.chart is not None:
        print(f"sink {q.sink.id}: m_omega={q.chart.m_omega} m_V={q.chart.m_V} r={q.chart.r:g} "
              f"trapping margin {q.chart.trapping_margin:.4g}")
    for s, c in q.curves:
        print(f"  {s.id}: m_gamma={s.period} winding {c.winding} crossings {c.crossings} "
              f"{'closed' if c.closed else 'open'} gap {c.gap:.3g}")
    for k, why in sorted(q.skipped.items()):
        print(f"  {k}: skipped, {why}")
    for err in q.errors:
        print(f"  error: {err}")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"quotient_{q.sink.id}.svg"
    path.write_text(quotient_svg(q.sink.id, [c for _, c in q.curves]))
    print(f"wrote {path}")
    return EXIT_ERROR if q.errors else EXIT_PASS


def _usage(msg: str) -> int:
    print(f"morsesmale: error: {msg}", file=sys.stderr)
    return EXIT_USAGE


COMMANDS = {"analyze": cmd_analyze, "verify-theorem": cmd_verify, "examples": cmd_examples,
            "orbit-space": cmd_orbit_space}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except OutOfScope as exc:
        print(f"out of scope: {exc}", file=sys.stderr)
        return EXIT_OUT_OF_SCOPE
    except (MorseSmaleError, KeyError, IndexError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
