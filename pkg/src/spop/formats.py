"""Text formats: rewrite systems, certificates and term patterns.

Rewrite systems are written as::

    (VAR x y)
    (RULES
      plus(Z; y) -> y
      plus(S(x); y) -> S(plus(x; y))
    )

Arguments are separated by commas.  A semicolon inside an argument list
splits it into normal arguments (left) and safe arguments (right); every
split given for a symbol must agree.  Constants may omit the parentheses.
``#`` starts a comment that runs to the end of the line.

Certificates are line oriented::

    variant: spop
    precedence: square > times > plus > S ~ Z
    recursive: plus times
    safe:
      plus: 2
      square:
      times:

``safe`` lists, for every defined symbol, its safe argument positions
counted from 1.  Constructors missing from ``precedence`` join the lowest
class.  :func:`format_certificate` prints a canonical form that parses back
to the same bytes.

Term patterns are ground terms in which ``F^n(t)`` or ``F^3(t)`` stands for
``F`` applied the given number of times, ``n`` being the size parameter.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from .orders import SPOP, VARIANTS, Certificate
from .rewriting import Rule, SignatureError, Trs
from .terms import Fun, Precedence, Term, Var

__all__ = [
    "FormatError", "parse_trs", "format_trs", "format_term", "parse_term",
    "parse_certificate", "format_certificate", "parse_pattern", "Pattern",
]

_TOKENS = re.compile(r"""
    (?P<space>[ \t\r\n]+) | (?P<comment>\#[^\n]*) | (?P<arrow>->)
    | (?P<punct>[(),;^]) | (?P<ident>[A-Za-z0-9_'.]+)
""", re.VERBOSE)


class FormatError(ValueError):
    """Malformed input, located by 1-based line and column."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + msg)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    out = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKENS.match(text, pos)
        if m is None:
            raise FormatError(f"unexpected character {text[pos]!r}", line, col)
        kind, tok = m.lastgroup, m.group()
        if kind not in ("space", "comment"):
            out.append(_Tok(kind, tok, line, col))
        if "\n" in tok:
            line += tok.count("\n")
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    out.append(_Tok("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, text: str, variables: Iterable[str] = (), powers: bool = False):
        self.toks = _lex(text)
        self.i = 0
        self.variables = set(variables)
        self.powers = powers
        self.splits: dict[str, tuple[int, _Tok]] = {}
        self.arity: dict[str, tuple[int, _Tok]] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        raise FormatError(msg, tok.line, tok.col)

    def eat(self, text: str) -> _Tok:
        tok = self.tok
        if tok.text != text or tok.kind == "eof":
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def ident(self) -> _Tok:
        tok = self.tok
        if tok.kind != "ident":
            self.fail(f"expected a name, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def note_arity(self, name: str, n: int, tok: _Tok):
        seen = self.arity.setdefault(name, (n, tok))
        if seen[0] != n:
            self.fail(f"symbol {name} used with {n} arguments, earlier with {seen[0]}", tok)

    def term(self):
        head = self.ident()
        power = None
        if self.tok.text == "^":
            if not self.powers:
                self.fail("'^' is only allowed in term patterns")
            self.i += 1
            exp = self.ident()
            if exp.text != "n" and not exp.text.isdigit():
                self.fail("exponent must be n or a number", exp)
            power = exp.text
        if head.text in self.variables:
            if self.tok.text == "(" or power is not None:
                self.fail(f"variable {head.text} cannot take arguments", head)
            return Var(head.text)
        normals, safes, split = [], [], False
        if self.tok.text == "(":
            self.i += 1
            current = normals
            expect_arg = True
            while self.tok.text != ")":
                if self.tok.text == ";":
                    if split:
                        self.fail("a second ';' in one argument list")
                    split, current = True, safes
                    self.i += 1
                    expect_arg = True
                    continue
                if not expect_arg:
                    self.fail(f"expected ',' or ')', found {self.tok.text or 'end of input'!r}")
                current.append(self.term())
                expect_arg = False
                if self.tok.text == ",":
                    self.i += 1
                    expect_arg = True
                    if self.tok.text in (")", ";"):
                        self.fail("argument expected after ','")
            self.eat(")")
        args = normals + safes
        if power is not None:
            if len(args) != 1:
                self.fail("a repeated symbol needs exactly one argument", head)
            return ("power", head.text, power, args[0])
        self.note_arity(head.text, len(args), head)
        if split:
            seen = self.splits.setdefault(head.text, (len(normals), head))
            if seen[0] != len(normals):
                self.fail(f"normal/safe split of {head.text} disagrees with an earlier one", head)
        return Fun(head.text, args) if not self.powers else ("fun", head.text, args)

    def skip_block(self):
        depth = 0
        while True:
            tok = self.tok
            if tok.kind == "eof":
                self.fail("unclosed '('")
            self.i += 1
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
                if depth == 0:
                    return


def parse_trs(text: str) -> Trs:
    """Parse a rewrite system; raises :class:`FormatError` with a location."""
    p = _Parser(text)
    rules = []
    seen_rules = False
    while p.tok.kind != "eof":
        p.eat("(")
        section = p.ident()
        if section.text == "VAR":
            while p.tok.text != ")":
                p.variables.add(p.ident().text)
            p.eat(")")
        elif section.text == "RULES":
            if seen_rules:
                p.fail("a second RULES section", section)
            seen_rules = True
            while p.tok.text != ")":
                lhs_tok = p.tok
                lhs = p.term()
                p.eat("->")
                rhs = p.term()
                if isinstance(lhs, Var):
                    p.fail("left-hand side of a rule must not be a variable", lhs_tok)
                try:
                    rules.append(Rule(lhs, rhs))
                except ValueError as exc:
                    p.fail(str(exc), lhs_tok)
            p.eat(")")
        elif section.text in ("COMMENT", "STRATEGY", "THEORY", "STARTTERM"):
            p.i -= 2
            p.skip_block()
        else:
            p.fail(f"unknown section {section.text!r}", section)
    if not seen_rules:
        raise FormatError("no RULES section", 1, 1)
    for name, (_, tok) in p.arity.items():
        if name in p.variables:
            p.fail(f"{name} is declared as a variable", tok)
    declared = {f: frozenset(range(n)) for f, (n, _) in p.splits.items()}
    try:
        return Trs(rules, declared_normal=declared)
    except SignatureError as exc:
        raise FormatError(str(exc)) from None


def parse_term(text: str, variables: Iterable[str] = ()) -> Term:
    """Parse a single term; names in ``variables`` are variables."""
    p = _Parser(text, variables)
    t = p.term()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.tok.text!r} after the term")
    return t


def format_term(t: Term, splits: Mapping[str, int] = {}) -> str:
    """Print ``t``; ``splits`` maps symbols to their number of normal arguments."""
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.name
    parts = [format_term(a, splits) for a in t.args]
    k = splits.get(t.name)
    if k is None:
        return f"{t.name}({', '.join(parts)})"
    normal, safe = ", ".join(parts[:k]), ", ".join(parts[k:])
    sep = "; " if normal and safe else ";"
    return f"{t.name}({normal}{sep}{safe})"


def _prefix_splits(normal: Mapping[str, frozenset]) -> dict[str, int]:
    return {f: len(ps) for f, ps in normal.items() if ps == frozenset(range(len(ps)))}


def format_trs(trs: Trs, normal: Optional[Mapping[str, frozenset]] = None) -> str:
    """Print ``trs``.  Splits are taken from ``normal`` (or the declared
    ones) whenever the normal positions come first."""
    splits = _prefix_splits(trs.declared_normal if normal is None else normal)
    names = sorted({v.name for r in trs.rules for side in (r.lhs, r.rhs)
                    for v in _vars(side)})
    lines = ["(VAR " + " ".join(names) + ")" if names else "(VAR)", "(RULES"]
    for r in trs.rules:
        lines.append(f"  {format_term(r.lhs, splits)} -> {format_term(r.rhs, splits)}")
    lines.append(")")
    return "\n".join(lines) + "\n"


def _vars(t: Term):
    if isinstance(t, Var):
        yield t
    else:
        for a in t.args:
            yield from _vars(a)


# -- certificates ---------------------------------------------------------------

_NAME = re.compile(r"[A-Za-z0-9_'.]+\Z")


def _names(text: str, line: int, col: int) -> list[str]:
    out = text.split()
    for name in out:
        if not _NAME.match(name):
            raise FormatError(f"bad symbol name {name!r}", line, col)
    return out


def parse_certificate(text: str, trs: Trs) -> Certificate:
    """Parse a certificate for ``trs`` and validate it against the system."""
    fields: dict[str, tuple] = {}
    safe: dict[str, tuple] = {}
    in_safe = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line[0] in " \t"
        key, colon, value = line.strip().partition(":")
        col = len(line) - len(line.lstrip()) + 1
        if not colon:
            raise FormatError("expected 'key: value'", lineno, col)
        key, value = key.strip(), value.strip()
        vcol = line.index(":") + 2
        if indented:
            if not in_safe:
                raise FormatError("indented entry outside the safe section", lineno, col)
            if key in safe:
                raise FormatError(f"safe positions of {key} given twice", lineno, col)
            try:
                positions = [int(v) for v in value.split()]
            except ValueError:
                raise FormatError("safe positions must be numbers", lineno, vcol) from None
            safe[key] = (positions, lineno, col)
            continue
        in_safe = key == "safe"
        if key not in ("variant", "precedence", "recursive", "safe"):
            raise FormatError(f"unknown section {key!r}", lineno, col)
        if key in fields:
            raise FormatError(f"section {key!r} given twice", lineno, col)
        if key == "safe" and value:
            raise FormatError("safe entries go on their own indented lines", lineno, vcol)
        fields[key] = (value, lineno, vcol)

    if "precedence" not in fields:
        raise FormatError("missing 'precedence' section", 1, 1)
    variant = fields.get("variant", (SPOP, 0, 0))
    if variant[0] not in VARIANTS:
        raise FormatError(f"unknown variant {variant[0]!r}", variant[1], variant[2])

    value, lineno, vcol = fields["precedence"]
    classes = []
    for part in value.split(">"):
        names = [n.strip() for n in part.split("~")]
        if any(not n for n in names):
            raise FormatError("empty name in precedence", lineno, vcol)
        classes.append(_names(" ".join(names), lineno, vcol))
    listed = [f for c in classes for f in c]
    if len(listed) != len(set(listed)):
        raise FormatError("a symbol occurs twice in the precedence", lineno, vcol)
    unknown = sorted(set(listed) - set(trs.signature))
    if unknown:
        raise FormatError(f"unknown symbols in precedence: {', '.join(unknown)}", lineno, vcol)
    missing_defined = sorted(trs.defined - set(listed))
    if missing_defined:
        raise FormatError(f"defined symbols missing from precedence: {', '.join(missing_defined)}",
                          lineno, vcol)
    missing = sorted(trs.constructors - set(listed))
    if missing:
        if classes and all(f in trs.constructors for f in classes[-1]):
            classes[-1] = classes[-1] + missing
        else:
            classes.append(missing)
    precedence = Precedence(tuple(frozenset(c) for c in classes))

    rec_value, rl, rc = fields.get("recursive", ("", 0, 0))
    recursive = _names(rec_value, rl, rc)
    for f in recursive:
        if f not in trs.defined:
            raise FormatError(f"{f} is not a defined symbol", rl, rc)

    for f, (_, ln, c) in safe.items():
        if f not in trs.defined:
            raise FormatError(f"{f} is not a defined symbol", ln, c)
    normal = {}
    for f in sorted(trs.defined):
        n = trs.signature[f]
        if f in safe:
            positions, ln, c = safe[f]
            if any(not 1 <= q <= n for q in positions):
                raise FormatError(f"safe position out of range 1..{n} for {f}", ln, c)
            if len(set(positions)) != len(positions):
                raise FormatError(f"repeated safe position for {f}", ln, c)
            normal[f] = frozenset(range(n)) - {q - 1 for q in positions}
            if f in trs.declared_normal and trs.declared_normal[f] != normal[f]:
                raise FormatError(f"safe positions of {f} disagree with the split in the system",
                                  ln, c)
        elif f in trs.declared_normal:
            normal[f] = trs.declared_normal[f]
        else:
            where = fields.get("safe", ("", 1, 1))
            raise FormatError(f"no safe positions given for {f}", where[1], 1)
    try:
        cert = Certificate.build(trs, precedence, recursive, normal, variant[0])
        cert.validate(trs)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    return cert


def format_certificate(cert: Certificate) -> str:
    """Canonical text of ``cert``."""
    defined = sorted(f for f, s in cert.symbols.items() if s.defined)
    lines = [
        f"variant: {cert.variant}",
        f"precedence: {cert.precedence}",
        ("recursive: " + " ".join(sorted(cert.recursive))).rstrip(),
        "safe:",
    ]
    for f in defined:
        positions = " ".join(str(q + 1) for q in cert.symbols[f].safe_sorted)
        lines.append(f"  {f}: {positions}".rstrip())
    return "\n".join(lines) + "\n"


# -- term patterns ------------------------------------------------------------

class Pattern:
    """A ground term family indexed by ``n``."""

    def __init__(self, text: str):
        p = _Parser(text, powers=True)
        self.text = text
        self.tree = p.term()
        if p.tok.kind != "eof":
            p.fail(f"unexpected {p.tok.text!r} after the pattern")
        if isinstance(self.tree, Var):
            p.fail("a pattern must be a ground term")

    def __call__(self, n: int) -> Fun:
        if n < 0:
            raise ValueError("n must be non-negative")
        return self._build(self.tree, n)

    def _build(self, node, n: int) -> Fun:
        if node[0] == "fun":
            return Fun(node[1], [self._build(a, n) for a in node[2]])
        _, name, power, arg = node
        times = n if power == "n" else int(power)
        t = self._build(arg, n)
        for _ in range(times):
            t = Fun(name, [t])
        return t

    def __str__(self):
        return self.text


def parse_pattern(text: str) -> Callable[[int], Fun]:
    return Pattern(text)
