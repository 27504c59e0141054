"""Command line front end.

Exit codes: 0 certified (or the check passed), 1 malformed input,
2 refuted or failed, 3 budget or fuel exhausted.
"""
from __future__ import annotations

import argparse
import enum
import itertools
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import bwsc
from .formats import (
    FormatError, Pattern, format_certificate, format_term, format_trs, parse_certificate,
    parse_term, parse_trs,
)
from .orders import (
    VARIANTS, CertificateError, IncompatibleRule, check_compatibility, replay,
)
from .predicative import BoundViolation, EmbeddingViolation, Slow, check_slow_bound, verify_embedding
from .rewriting import DEFAULT_FUEL, FuelExceeded, derivation_height, values_up_to
from .synthesis import SearchBudget, gen_family, synthesize
from .terms import Fun, InadmissiblePrecedence, ensure_recursion_limit, subterms

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REFUTED = 2
EXIT_BUDGET = 3


class Verdict(str, enum.Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted-in-space"
    UNKNOWN = "unknown"


@dataclass
class Report:
    verdict: Verdict
    degree: Optional[int] = None
    bound: Optional[str] = None
    rules: list = field(default_factory=list)
    time_ms: float = 0.0
    certificate: Optional[str] = None
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        data = asdict(self)
        data["verdict"] = self.verdict.value
        return json.dumps(data, indent=2, sort_keys=True)


class InputError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _load(path: str, parse, *extra):
    try:
        return parse(_read(path), *extra)
    except (FormatError, bwsc.BwscError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _splits(cert) -> dict:
    """Prefix normal/safe splits for printing rules."""
    out = {}
    for f, sym in cert.symbols.items():
        if sym.defined and sym.normal == frozenset(range(len(sym.normal))):
            out[f] = len(sym.normal)
    return out


def _emit(args, report: Report, text: str) -> None:
    if args.json:
        print(report.to_json())
    elif text:
        print(text)


def _elapsed(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1000, 3)


# -- subcommands -------------------------------------------------------------

def cmd_check(args) -> int:
    """Orient every rule with a given certificate."""
    trs = _load(args.trs, parse_trs)
    cert = _load(args.cert, parse_certificate, trs)
    if args.variant:
        cert = cert.with_variant(args.variant)
    t0 = time.perf_counter()
    try:
        result = check_compatibility(trs, cert)
    except IncompatibleRule as exc:
        report = Report(Verdict.REFUTED, time_ms=_elapsed(t0), detail=str(exc),
                        extra={"rule": str(exc.rule), "obligation": exc.reason})
        _emit(args, report, f"refuted: {exc}")
        return EXIT_REFUTED
    except ValueError as exc:
        raise InputError(str(exc)) from None
    splits = _splits(cert)
    rules = []
    for rule, proof in result.proofs:
        replay(cert, proof)
        rules.append({"rule": f"{format_term(rule.lhs, splits)} -> {format_term(rule.rhs, splits)}",
                      "clause": proof.clause})
    report = Report(Verdict.CERTIFIED, result.degree, result.bound, rules, _elapsed(t0),
                    format_certificate(cert), extra={"recursion_depths": result.recursion_depths})
    lines = [f"certified: {result.bound} (degree {result.degree}, variant {cert.variant})"]
    for (rule, proof), entry in zip(result.proofs, rules):
        lines.append(f"  {entry['rule']}  [{entry['clause']}]")
        if args.proofs:
            lines.append(proof.render(2))
    _emit(args, report, "\n".join(lines))
    return EXIT_OK


def cmd_synth(args) -> int:
    """Search for a certificate of minimal degree."""
    trs = _load(args.trs, parse_trs)
    budget = SearchBudget(max_candidates=args.max_candidates,
                          time_limit=args.budget_ms / 1000.0,
                          max_degree=args.max_degree)
    t0 = time.perf_counter()
    try:
        result = synthesize(trs, args.variant, budget, respect_declared=not args.free_splits)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if not result:
        verdict = Verdict.UNKNOWN if result.budget_exhausted else Verdict.REFUTED
        report = Report(verdict, time_ms=_elapsed(t0), detail=result.reason,
                        extra={"candidates": result.candidates})
        label = "unknown (budget)" if result.budget_exhausted else "refuted"
        _emit(args, report, "")
        print(f"{label}: {result.reason} after {result.candidates} candidates", file=sys.stderr)
        return EXIT_BUDGET if result.budget_exhausted else EXIT_REFUTED
    cert = result.certificate
    text = format_certificate(cert)
    report = Report(Verdict.CERTIFIED, result.report.degree, result.report.bound,
                    [{"rule": str(r), "clause": p.clause} for r, p in result.report.proofs],
                    _elapsed(t0), text, extra={"candidates": result.candidates})
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.json:
        print(report.to_json())
    elif not args.output:
        sys.stdout.write(text)
    print(f"certified: {report.bound} (degree {report.degree}) after {result.candidates} candidates",
          file=sys.stderr)
    return EXIT_OK


def cmd_measure(args) -> int:
    """Derivation heights of a term family, as CSV."""
    trs = _load(args.trs, parse_trs)
    try:
        pattern = Pattern(args.pattern)
    except FormatError as exc:
        raise InputError(f"pattern: {exc}") from None
    rows = []
    for n in range(args.start, args.stop + 1):
        t = pattern(n)
        if not trs.is_basic(t):
            raise InputError(f"pattern instance {t} is not a basic term")
        try:
            rows.append((n, derivation_height(trs, t, args.fuel), "ok"))
        except FuelExceeded:
            rows.append((n, "", "fuel"))
    if args.json:
        print(json.dumps([{"n": n, "dh": dh, "status": st} for n, dh, st in rows], indent=2))
    else:
        print("n,dh,status")
        for n, dh, st in rows:
            print(f"{n},{dh},{st}")
    return EXIT_BUDGET if any(st != "ok" for _, _, st in rows) else EXIT_OK


def cmd_embed_check(args) -> int:
    """Check that innermost steps embed into the sequence order."""
    trs = _load(args.trs, parse_trs)
    cert = _load(args.cert, parse_certificate, trs)
    try:
        start = parse_term(args.term)
    except FormatError as exc:
        raise InputError(f"term: {exc}") from None
    unknown = sorted({f for f in _symbols(start) if f not in trs.signature})
    if unknown:
        raise InputError(f"term uses unknown symbols: {', '.join(unknown)}")
    t0 = time.perf_counter()
    try:
        result = verify_embedding(trs, cert, start, fuel=args.fuel, width=args.width)
    except IncompatibleRule as exc:
        _emit(args, Report(Verdict.REFUTED, detail=str(exc)), f"refuted: {exc}")
        return EXIT_REFUTED
    except EmbeddingViolation as exc:
        _emit(args, Report(Verdict.REFUTED, detail=str(exc)), f"violation: {exc}")
        return EXIT_REFUTED
    except FuelExceeded as exc:
        _emit(args, Report(Verdict.UNKNOWN, detail=str(exc)), f"unknown: {exc}")
        return EXIT_BUDGET
    steps = [{"source": str(s.source), "target": str(s.target), "clause": s.proof.clause}
             for s in result.steps]
    report = Report(Verdict.CERTIFIED, time_ms=_elapsed(t0), certificate=format_certificate(cert),
                    extra={"width": result.width, "steps": steps,
                           "terms_explored": result.terms_explored})
    lines = [f"all {len(steps)} steps embed (width {result.width}, "
             f"{result.terms_explored} terms explored)"]
    if args.verbose_steps:
        for s in result.steps:
            lines.append(f"  {s.source} -> {s.target}  [{s.proof.clause}]")
    _emit(args, report, "\n".join(lines))
    return EXIT_OK


def _symbols(t):
    return {u.name for u in subterms(t) if isinstance(u, Fun)}


def cmd_slow(args) -> int:
    """Check the Slow bound for every defined symbol on small values."""
    trs = _load(args.trs, parse_trs)
    cert = _load(args.cert, parse_certificate, trs)
    values = values_up_to({c: trs.signature[c] for c in trs.constructors}, args.depth)
    calc = Slow(cert, args.k, args.fuel)
    rows = []
    try:
        for f in sorted(trs.defined):
            for vs in itertools.product(values, repeat=len(cert.symbols[f].normal)):
                b = check_slow_bound(cert, args.k, f, list(vs), calculator=calc)
                rows.append({"term": str(b.term), "slow": b.slow, "bound": b.bound})
    except BoundViolation as exc:
        _emit(args, Report(Verdict.REFUTED, detail=str(exc)), f"violation: {exc}")
        return EXIT_REFUTED
    except FuelExceeded as exc:
        _emit(args, Report(Verdict.UNKNOWN, detail=str(exc)), f"unknown: {exc}")
        return EXIT_BUDGET
    report = Report(Verdict.CERTIFIED, extra={"k": args.k, "rows": rows})
    lines = ["term,slow,bound"] + [f"\"{r['term']}\",{r['slow']},{r['bound']}" for r in rows]
    _emit(args, report, "\n".join(lines))
    return EXIT_OK


def _word(text: str) -> str:
    return "" if text in ("", "ε", "eps") else text


def _show_word(w: str) -> str:
    return w if w else "ε"


def cmd_bwsc(args) -> int:
    """Evaluate, compile or check a program over binary words."""
    expr = _load(args.program, bwsc.parse_program)
    if args.action == "eval":
        try:
            value = bwsc.evaluate(expr, [_word(w) for w in args.normal],
                                  [_word(w) for w in args.safe])
        except bwsc.BwscError as exc:
            raise InputError(str(exc)) from None
        if args.json:
            print(json.dumps({"value": value}))
        else:
            print(_show_word(value))
        return EXIT_OK
    trs, cert = bwsc.compile_to_trs(expr)
    normal = {f: s.normal for f, s in cert.symbols.items() if s.defined}
    trs_text = format_trs(trs, normal)
    cert_text = format_certificate(cert)
    if args.action == "compile":
        if args.trs_out:
            with open(args.trs_out, "w", encoding="utf-8") as fh:
                fh.write(trs_text)
        if args.cert_out:
            with open(args.cert_out, "w", encoding="utf-8") as fh:
                fh.write(cert_text)
        if args.json:
            print(json.dumps({"trs": trs_text, "certificate": cert_text,
                              "root": bwsc.symbol_name(expr)}, indent=2))
        else:
            if not args.trs_out:
                sys.stdout.write(trs_text)
            if not args.cert_out:
                sys.stdout.write(("\n" if not args.trs_out else "") + cert_text)
        return EXIT_OK
    depth = bwsc.nesting_depth(expr)
    t0 = time.perf_counter()
    try:
        result = check_compatibility(trs, cert)
    except IncompatibleRule as exc:
        _emit(args, Report(Verdict.REFUTED, detail=str(exc)), f"refuted: {exc}")
        return EXIT_REFUTED
    report = Report(Verdict.CERTIFIED, result.degree, result.bound, time_ms=_elapsed(t0),
                    certificate=cert_text, extra={"nesting_depth": depth})
    _emit(args, report, f"certified: {result.bound} (degree {result.degree}, nesting depth {depth})")
    return EXIT_OK if result.degree == depth else EXIT_REFUTED


def cmd_family(args) -> int:
    """Print the rewrite system of the degree-d family."""
    if args.d < 0:
        raise InputError("degree must be non-negative")
    sys.stdout.write(format_trs(gen_family(args.d)))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are input errors, so they must not look like a refutation."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine readable output")
    parser = _ArgumentParser(
        prog="spop",
        description="Certify polynomial runtime bounds of rewrite systems.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="check a certificate")
    p.add_argument("trs", help="rewrite system file ('-' for stdin)")
    p.add_argument("cert", help="certificate file")
    p.add_argument("--variant", choices=VARIANTS, help="override the certificate's variant")
    p.add_argument("--proofs", action="store_true", help="print full orientation proofs")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synth", parents=[common], help="search for a certificate")
    p.add_argument("trs")
    p.add_argument("--variant", choices=VARIANTS, default=VARIANTS[0])
    p.add_argument("--max-degree", type=int, default=None)
    p.add_argument("--budget-ms", type=int, default=60_000, help="time limit in milliseconds")
    p.add_argument("--max-candidates", type=int, default=1_000_000)
    p.add_argument("--free-splits", action="store_true",
                   help="ignore normal/safe splits written in the input")
    p.add_argument("-o", "--output", help="write the certificate to this file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("measure", parents=[common], help="derivation heights as CSV")
    p.add_argument("trs")
    p.add_argument("pattern", help="term pattern such as 'square(S^n(Z))'")
    p.add_argument("--from", dest="start", type=int, default=1)
    p.add_argument("--to", dest="stop", type=int, default=10)
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("embed-check", parents=[common], help="check the step embedding")
    p.add_argument("trs")
    p.add_argument("cert")
    p.add_argument("term", help="ground start term")
    p.add_argument("--fuel", type=int, default=100_000, help="maximal number of terms explored")
    p.add_argument("--width", type=int, default=None, help="override the width")
    p.add_argument("--steps", dest="verbose_steps", action="store_true", help="list every step")
    p.set_defaults(func=cmd_embed_check)

    p = sub.add_parser("slow", parents=[common], help="check the Slow bound on small values")
    p.add_argument("trs")
    p.add_argument("cert")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--depth", type=int, default=3, help="maximal value depth")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.set_defaults(func=cmd_slow)

    p = sub.add_parser("bwsc", parents=[common], help="programs over binary words")
    p.add_argument("action", choices=("eval", "compile", "check"))
    p.add_argument("program", help="program file")
    p.add_argument("--normal", nargs="*", default=[], help="normal argument words")
    p.add_argument("--safe", nargs="*", default=[], help="safe argument words")
    p.add_argument("--trs-out", help="compile: write the rewrite system here")
    p.add_argument("--cert-out", help="compile: write the certificate here")
    p.set_defaults(func=cmd_bwsc)

    p = sub.add_parser("family", help="print the degree-d family system")
    p.add_argument("d", type=int)
    p.set_defaults(func=cmd_family, json=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    ensure_recursion_limit()
    try:
        return args.func(args)
    except (InputError, CertificateError, InadmissiblePrecedence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
