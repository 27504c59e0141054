"""Functions over binary words built by weak safe composition and safe
recursion on notation, optionally with parameter substitution.

Expressions are small immutable trees.  :func:`evaluate` runs them directly
on words, :func:`compile_to_trs` turns them into a constructor rewrite system
over ``eps``, ``s0`` and ``s1`` together with a certificate whose degree is
the nesting depth of recursion.  Words are strings over ``0`` and ``1``; the
last character is the outermost constructor, so ``"10"`` encodes as
``s0(s1(eps))``.
"""
from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .orders import SPOP, SPOP_PS, Certificate
from .rewriting import Rule, Trs
from .terms import Fun, Kind, Precedence, Symbol, Term, Var, ensure_recursion_limit

__all__ = [
    "BwscError", "ArityMismatch", "BwscSyntaxError",
    "Zero", "Proj", "Pred", "Cond", "Succ", "WSC", "SRN", "SRNPS", "Expr",
    "evaluate", "nesting_depth", "compile_to_trs", "symbol_name", "call_term",
    "encode_word", "decode_word", "parse_program", "to_sexpr", "random_expr",
    "EPSILON", "CONSTRUCTORS",
]

EPSILON = "eps"
CONSTRUCTORS = {EPSILON: 0, "s0": 1, "s1": 1}
_WORD = re.compile(r"[01]*\Z")


class BwscError(ValueError):
    pass


class ArityMismatch(BwscError):
    line: Optional[int] = None
    col: Optional[int] = None


class BwscSyntaxError(BwscError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


def _expect(expr, arity, where):
    if expr.arity != arity:
        raise ArityMismatch(f"{where}: expected arity {arity}, got {expr.arity} for {to_sexpr(expr)}")


@dataclass(frozen=True)
class Zero:
    k: int
    l: int

    def __post_init__(self):
        if self.k < 0 or self.l < 0:
            raise ArityMismatch("arities must be non-negative")

    @property
    def arity(self):
        return (self.k, self.l)


@dataclass(frozen=True)
class Proj:
    """Projection onto argument ``j`` (0-based) of the normals followed by the safes."""

    k: int
    l: int
    j: int

    def __post_init__(self):
        if self.k < 0 or self.l < 0 or not 0 <= self.j < self.k + self.l:
            raise ArityMismatch(f"projection index {self.j + 1} out of range for arity ({self.k}, {self.l})")

    @property
    def arity(self):
        return (self.k, self.l)


@dataclass(frozen=True)
class Pred:
    @property
    def arity(self):
        return (0, 1)


@dataclass(frozen=True)
class Cond:
    @property
    def arity(self):
        return (0, 4)


@dataclass(frozen=True)
class Succ:
    """Appending a bit; a constructor, so only allowed inside a schema."""

    bit: int

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise BwscError("successor bit must be 0 or 1")

    @property
    def arity(self):
        return (0, 1)


@dataclass(frozen=True)
class WSC:
    """``f(xs; ys) = h(xs[select]; g1(xs; ys), ..., gm(xs; ys))``."""

    k: int
    l: int
    h: "Expr"
    select: tuple
    gs: tuple

    def __post_init__(self):
        object.__setattr__(self, "select", tuple(self.select))
        object.__setattr__(self, "gs", tuple(self.gs))
        if any(not 0 <= i < self.k for i in self.select):
            raise ArityMismatch(f"selected normal argument out of range 1..{self.k}")
        _expect(self.h, (len(self.select), len(self.gs)), "composed function")
        for g in self.gs:
            _expect(g, (self.k, self.l), "composition argument")

    @property
    def arity(self):
        return (self.k, self.l)


@dataclass(frozen=True)
class SRN:
    """Safe recursion on the first normal argument."""

    g: "Expr"
    h0: "Expr"
    h1: "Expr"

    def __post_init__(self):
        k, l = self.g.arity
        _expect(self.h0, (k + 1, l + 1), "step function h0")
        _expect(self.h1, (k + 1, l + 1), "step function h1")

    @property
    def arity(self):
        k, l = self.g.arity
        return (k + 1, l)


@dataclass(frozen=True)
class SRNPS:
    """Safe recursion whose recursive call receives substituted safe arguments."""

    g: "Expr"
    h0: "Expr"
    h1: "Expr"
    ps: tuple

    def __post_init__(self):
        object.__setattr__(self, "ps", tuple(self.ps))
        k, l = self.g.arity
        _expect(self.h0, (k + 1, l + 1), "step function h0")
        _expect(self.h1, (k + 1, l + 1), "step function h1")
        if len(self.ps) != l:
            raise ArityMismatch(f"need {l} substitution functions, got {len(self.ps)}")
        for p in self.ps:
            _expect(p, (k + 1, l), "substitution function")

    @property
    def arity(self):
        k, l = self.g.arity
        return (k + 1, l)


Expr = Union[Zero, Proj, Pred, Cond, Succ, WSC, SRN, SRNPS]


def _children(e: Expr) -> tuple:
    if isinstance(e, WSC):
        return (e.h,) + e.gs
    if isinstance(e, SRN):
        return (e.g, e.h0, e.h1)
    if isinstance(e, SRNPS):
        return (e.g, e.h0, e.h1) + e.ps
    return ()


def nesting_depth(e: Expr) -> int:
    """Largest number of recursion schemas on a path from the root to a leaf."""
    below = max((nesting_depth(c) for c in _children(e)), default=0)
    return below + (1 if isinstance(e, (SRN, SRNPS)) else 0)


def to_sexpr(e: Expr) -> str:
    if isinstance(e, Zero):
        return f"(O {e.k} {e.l})"
    if isinstance(e, Proj):
        return f"(I {e.k} {e.l} {e.j + 1})"
    if isinstance(e, Pred):
        return "P"
    if isinstance(e, Cond):
        return "C"
    if isinstance(e, Succ):
        return f"S{e.bit}"
    if isinstance(e, WSC):
        sel = " ".join(str(i + 1) for i in e.select)
        gs = " ".join(to_sexpr(g) for g in e.gs)
        return f"(WSC {e.k} {e.l} {to_sexpr(e.h)} ({sel}) ({gs}))"
    if isinstance(e, SRN):
        return f"(SRN {to_sexpr(e.g)} {to_sexpr(e.h0)} {to_sexpr(e.h1)})"
    ps = " ".join(to_sexpr(p) for p in e.ps)
    return f"(SRNPS {to_sexpr(e.g)} {to_sexpr(e.h0)} {to_sexpr(e.h1)} ({ps}))"


# -- evaluation ---------------------------------------------------------------

def _check_words(words, what):
    for w in words:
        if not isinstance(w, str) or not _WORD.match(w):
            raise BwscError(f"{what} argument {w!r} is not a binary word")


def evaluate(e: Expr, normals: Sequence[str] = (), safes: Sequence[str] = ()) -> str:
    """Value of ``e`` on the given words; the empty word is ``""``."""
    if isinstance(e, Succ):
        raise BwscError("a successor cannot be used as a whole program")
    normals, safes = list(normals), list(safes)
    if (len(normals), len(safes)) != e.arity:
        raise ArityMismatch(f"expected {e.arity[0]} normal and {e.arity[1]} safe arguments, "
                            f"got {len(normals)} and {len(safes)}")
    _check_words(normals, "normal")
    _check_words(safes, "safe")
    ensure_recursion_limit()
    return _eval(e, normals, safes)


def _eval(e: Expr, xs: list, ys: list) -> str:
    if isinstance(e, Zero):
        return ""
    if isinstance(e, Proj):
        return (xs + ys)[e.j]
    if isinstance(e, Pred):
        return ys[0][:-1]
    if isinstance(e, Cond):
        x, y, z0, z1 = ys
        if not x:
            return y
        return z1 if x[-1] == "1" else z0
    if isinstance(e, Succ):
        return ys[0] + str(e.bit)
    if isinstance(e, WSC):
        inner = [_eval(g, xs, ys) for g in e.gs]
        return _eval(e.h, [xs[i] for i in e.select], inner)
    # Recursion peels the first normal word only; the safe words are passed
    # along or substituted, never inspected.
    word, rest = xs[0], xs[1:]
    if not word:
        return _eval(e.g, rest, ys)
    z, bit = word[:-1], word[-1]
    if isinstance(e, SRNPS):
        inner_safe = [_eval(p, [z] + rest, ys) for p in e.ps]
    else:
        inner_safe = ys
    rec = _eval(e, [z] + rest, inner_safe)
    h = e.h1 if bit == "1" else e.h0
    return _eval(h, [z] + rest, ys + [rec])


# -- compilation --------------------------------------------------------------

def encode_word(w: str) -> Fun:
    _check_words([w], "word")
    t = Fun(EPSILON)
    for c in w:
        t = Fun("s" + c, [t])
    return t


def decode_word(t: Term) -> str:
    bits = []
    while isinstance(t, Fun) and t.name in ("s0", "s1") and len(t.args) == 1:
        bits.append(t.name[1])
        t = t.args[0]
    if not (isinstance(t, Fun) and t.name == EPSILON and not t.args):
        raise BwscError(f"{t} does not encode a word")
    return "".join(reversed(bits))


def symbol_name(e: Expr) -> str:
    """Function symbol standing for ``e`` in the compiled system."""
    if isinstance(e, Zero):
        return f"zero_{e.k}_{e.l}"
    if isinstance(e, Proj):
        return f"proj_{e.k}_{e.l}_{e.j + 1}"
    if isinstance(e, Pred):
        return "pred"
    if isinstance(e, Cond):
        return "cond"
    if isinstance(e, Succ):
        return f"s{e.bit}"
    prefix = {WSC: "sub", SRN: "srn", SRNPS: "srnps"}[type(e)]
    digest = hashlib.sha1(to_sexpr(e).encode()).hexdigest()[:8]
    return f"{prefix}_{digest}"


def _apply(e: Expr, args: Sequence[Term]) -> Fun:
    return Fun(symbol_name(e), list(args))


def call_term(e: Expr, normals: Sequence[str] = (), safes: Sequence[str] = ()) -> Fun:
    """The compiled symbol of ``e`` applied to encoded words."""
    if (len(normals), len(safes)) != e.arity:
        raise ArityMismatch(f"expected arity {e.arity}")
    return _apply(e, [encode_word(w) for w in list(normals) + list(safes)])


def _rules_for(e: Expr) -> list[Rule]:
    f = symbol_name(e)
    if isinstance(e, Succ):
        return []
    if isinstance(e, Pred):
        x = Var("x")
        return [Rule(Fun(f, [Fun(EPSILON)]), Fun(EPSILON)),
                Rule(Fun(f, [Fun("s0", [x])]), x),
                Rule(Fun(f, [Fun("s1", [x])]), x)]
    if isinstance(e, Cond):
        x, y, z0, z1 = Var("x"), Var("y"), Var("z0"), Var("z1")
        return [Rule(Fun(f, [Fun(EPSILON), y, z0, z1]), y),
                Rule(Fun(f, [Fun("s0", [x]), y, z0, z1]), z0),
                Rule(Fun(f, [Fun("s1", [x]), y, z0, z1]), z1)]
    if isinstance(e, (Zero, Proj, WSC)):
        k, l = e.arity
        xs = [Var(f"x{i + 1}") for i in range(k)]
        ys = [Var(f"y{i + 1}") for i in range(l)]
        lhs = Fun(f, xs + ys)
        if isinstance(e, Zero):
            return [Rule(lhs, Fun(EPSILON))]
        if isinstance(e, Proj):
            return [Rule(lhs, (xs + ys)[e.j])]
        inner = [_apply(g, xs + ys) for g in e.gs]
        return [Rule(lhs, _apply(e.h, [xs[i] for i in e.select] + inner))]
    k, l = e.g.arity
    z = Var("z")
    xs = [Var(f"x{i + 1}") for i in range(k)]
    ys = [Var(f"y{i + 1}") for i in range(l)]
    rules = [Rule(Fun(f, [Fun(EPSILON)] + xs + ys), _apply(e.g, xs + ys))]
    if isinstance(e, SRNPS):
        inner_safe = [_apply(p, [z] + xs + ys) for p in e.ps]
    else:
        inner_safe = ys
    rec = Fun(f, [z] + xs + inner_safe)
    for bit, h in ((0, e.h0), (1, e.h1)):
        lhs = Fun(f, [Fun(f"s{bit}", [z])] + xs + ys)
        rules.append(Rule(lhs, _apply(h, [z] + xs + ys + [rec])))
    return rules


def _collect(e: Expr, seen: dict) -> None:
    """Post-order map from symbol name to expression, shared nodes once."""
    name = symbol_name(e)
    if name in seen or isinstance(e, Succ):
        return
    for c in _children(e):
        _collect(c, seen)
    seen[name] = e


def compile_to_trs(e: Expr) -> tuple[Trs, Certificate]:
    """Rewrite rules for ``e`` and a certificate with ``e``'s symbol on top.

    Recursive symbols are exactly the recursion schemas.  Classes are ordered
    by recursion depth; within one depth the recursive symbols share a class
    below the compositions of that depth, which are stacked by height.
    """
    if isinstance(e, Succ):
        raise BwscError("a successor cannot be used as a whole program")
    nodes: dict[str, Expr] = {}
    _collect(e, nodes)
    rules = [r for node in nodes.values() for r in _rules_for(node)]
    trs = Trs(rules, extra_symbols=CONSTRUCTORS)

    info: dict[str, tuple] = {}
    for name, node in nodes.items():  # post-order: ingredients first
        parts = [info[symbol_name(c)] for c in _children(node) if not isinstance(c, Succ)]
        if isinstance(node, (SRN, SRNPS)):
            info[name] = (1 + max((p[0] for p in parts), default=0), 0, 0)
        else:
            rd = max((p[0] for p in parts), default=0)
            height = max((p[2] + 1 for p in parts if p[0] == rd and p[1] == 1), default=0)
            info[name] = (rd, 1, height)
    layers: dict[tuple, set] = {}
    for name, key in info.items():
        layers.setdefault(key, set()).add(name)
    classes = [frozenset(layers[key]) for key in sorted(layers, reverse=True)]
    classes.append(frozenset(CONSTRUCTORS))

    symbols = {c: Symbol(c, n, Kind.CONSTRUCTOR) for c, n in CONSTRUCTORS.items()}
    for name, node in nodes.items():
        kind = Kind.RECURSIVE if isinstance(node, (SRN, SRNPS)) else Kind.COMPOSITIONAL
        k, l = node.arity
        symbols[name] = Symbol(name, k + l, kind, frozenset(range(k)))
    variant = SPOP_PS if any(isinstance(n, SRNPS) for n in nodes.values()) else SPOP
    return trs, Certificate(Precedence(tuple(classes)), symbols, variant)


# -- concrete syntax ----------------------------------------------------------

_TOKEN = re.compile(r"\s+|#[^\n]*|\(|\)|[^\s()#]+")


def _tokenize(text: str):
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        tok = m.group()
        if not tok.isspace() and not tok.startswith("#"):
            yield tok, line, col
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()


def _read(tokens: list, i: int):
    """One s-expression as nested lists of (token, line, col)."""
    tok, line, col = tokens[i]
    if tok == ")":
        raise BwscSyntaxError("unexpected ')'", line, col)
    if tok != "(":
        return tokens[i], i + 1
    items = []
    i += 1
    while True:
        if i >= len(tokens):
            raise BwscSyntaxError("unclosed '('", line, col)
        if tokens[i][0] == ")":
            return (items, line, col), i + 1
        item, i = _read(tokens, i)
        items.append(item)


def _int(node) -> int:
    if isinstance(node[0], list) or not node[0].isdigit():
        raise BwscSyntaxError("expected a number", node[1], node[2])
    return int(node[0])


def _build(node, env: dict) -> Expr:
    head, line, col = node
    try:
        if not isinstance(head, list):
            if head in ("P", "C", "S0", "S1"):
                return {"P": Pred(), "C": Cond(), "S0": Succ(0), "S1": Succ(1)}[head]
            if head in env:
                return env[head]
            raise BwscSyntaxError(f"unknown name {head!r}", line, col)
        if not head or isinstance(head[0][0], list):
            raise BwscSyntaxError("expected an operator", line, col)
        op, args = head[0][0], head[1:]

        def need(n):
            if len(args) != n:
                raise BwscSyntaxError(f"{op} takes {n} arguments, got {len(args)}", line, col)

        def group(item):
            if not isinstance(item[0], list):
                raise BwscSyntaxError("expected a parenthesised list", item[1], item[2])
            return item[0]

        if op == "O":
            need(2)
            return Zero(_int(args[0]), _int(args[1]))
        if op == "I":
            need(3)
            return Proj(_int(args[0]), _int(args[1]), _int(args[2]) - 1)
        if op == "WSC":
            need(5)
            select = tuple(_int(i) - 1 for i in group(args[3]))
            gs = tuple(_build(g, env) for g in group(args[4]))
            return WSC(_int(args[0]), _int(args[1]), _build(args[2], env), select, gs)
        if op == "SRN":
            need(3)
            return SRN(*(_build(a, env) for a in args))
        if op == "SRNPS":
            need(4)
            ps = tuple(_build(p, env) for p in group(args[3]))
            return SRNPS(_build(args[0], env), _build(args[1], env), _build(args[2], env), ps)
        raise BwscSyntaxError(f"unknown operator {op!r}", line, col)
    except ArityMismatch as exc:
        if exc.line is not None:
            raise
        located = ArityMismatch(f"line {line}, column {col}: {exc}")
        located.line, located.col = line, col
        raise located from None


def parse_program(text: str) -> Expr:
    """Read a program: optional ``(define name expr)`` forms, then the main
    expression.  If the last form is a definition, its body is the main one."""
    tokens = list(_tokenize(text))
    if not tokens:
        raise BwscSyntaxError("empty program", 1, 1)
    env: dict[str, Expr] = {}
    main: Optional[Expr] = None
    i = 0
    while i < len(tokens):
        node, i = _read(tokens, i)
        head = node[0]
        if isinstance(head, list) and head and head[0][0] == "define":
            if len(head) != 3 or isinstance(head[1][0], list):
                raise BwscSyntaxError("expected (define name expr)", node[1], node[2])
            main = env[head[1][0]] = _build(head[2], env)
        else:
            main = _build(node, env)
    if isinstance(main, Succ):
        raise BwscError("a successor cannot be used as a whole program")
    return main


# -- random expressions ---------------------------------------------------------

def random_expr(rng: random.Random, k: int, l: int, depth: int, size: int = 3,
                substitution: bool = False) -> Expr:
    """A random expression of arity ``(k, l)`` and nesting depth at most ``depth``.

    ``size`` bounds the number of nested compositions; ``substitution``
    allows recursion with parameter substitution.
    """
    options = ["zero"]
    if k + l:
        options += ["proj", "proj"]
    if (k, l) == (0, 1):
        options.append("pred")
    if (k, l) == (0, 4):
        options.append("cond")
    if size > 0:
        options += ["wsc", "wsc"]
    if depth > 0 and k > 0:
        options += ["srn", "srn", "srn"]
        if substitution and l > 0:
            options += ["srnps", "srnps"]
    pick = rng.choice(options)
    if pick == "zero":
        return Zero(k, l)
    if pick == "proj":
        return Proj(k, l, rng.randrange(k + l))
    if pick == "pred":
        return Pred()
    if pick == "cond":
        return Cond()
    if pick == "wsc":
        m = rng.randint(0, min(k, 2))
        n = rng.choice([0, 1, 1, 2, 4]) if m == 0 else rng.randint(0, 2)
        select = tuple(rng.randrange(k) for _ in range(m))
        if (m, n) == (0, 1) and rng.random() < 0.5:
            h: Expr = Succ(rng.randint(0, 1))
        else:
            h = random_expr(rng, m, n, depth, size - 1, substitution)
        gs = tuple(random_expr(rng, k, l, depth, size - 1, substitution) for _ in range(n))
        return WSC(k, l, h, select, gs)
    g = random_expr(rng, k - 1, l, depth - 1, size - 1, substitution)
    h0 = random_expr(rng, k, l + 1, depth - 1, size - 1, substitution)
    h1 = random_expr(rng, k, l + 1, depth - 1, size - 1, substitution)
    if pick == "srn":
        return SRN(g, h0, h1)
    ps = tuple(random_expr(rng, k, l, depth - 1, size - 1, substitution) for _ in range(l))
    return SRNPS(g, h0, h1, ps)
