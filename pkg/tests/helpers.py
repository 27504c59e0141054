"""Random generators and brute-force oracles shared by several test modules."""
from __future__ import annotations

import functools
import itertools
import random

from spop.bwsc import call_term, compile_to_trs, decode_word, evaluate, nesting_depth, random_expr
from spop.orders import SPOP, SPOP_PS, Certificate, check_compatibility
from spop.predicative import Seq, SeqOrder, Slow, append
from spop.rewriting import normalize
from spop.terms import Fun, Kind, Precedence, Symbol, Var, normal_subterm_gt, safe_equivalent, subterms

DEFINED = {"f": 2, "g": 2, "h": 1}
CONSTRUCTORS = {"S": 1, "Z": 0}
VARIABLES = ("x", "y")


def random_certificate(rng: random.Random, defined=DEFINED, constructors=CONSTRUCTORS,
                       variant=None) -> Certificate:
    """An admissible certificate: every class holds a single kind."""
    names = list(defined)
    rng.shuffle(names)
    classes, current = [], [names[0]]
    for name in names[1:]:
        if rng.random() < 0.5:
            classes.append(current)
            current = []
        current.append(name)
    classes.append(current)
    symbols = {}
    for cls in classes:
        kind = rng.choice([Kind.RECURSIVE, Kind.COMPOSITIONAL])
        for name in cls:
            n = defined[name]
            normal = frozenset(i for i in range(n) if rng.random() < 0.5)
            symbols[name] = Symbol(name, n, kind, normal)
    for name, n in constructors.items():
        symbols[name] = Symbol(name, n, Kind.CONSTRUCTOR)
    prec = Precedence(tuple(frozenset(c) for c in classes) + (frozenset(constructors),))
    return Certificate(prec, symbols, variant or rng.choice([SPOP, SPOP_PS]))


def random_value(rng: random.Random, depth: int, constructors=CONSTRUCTORS, variables=()):
    leaves = [Fun(c) for c, n in constructors.items() if n == 0] + [Var(v) for v in variables]
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(leaves)
    name = rng.choice([c for c, n in constructors.items() if n > 0])
    return Fun(name, [random_value(rng, depth - 1, constructors, variables)
                      for _ in range(constructors[name])])


def random_term(rng: random.Random, depth: int, signature=None, variables=VARIABLES):
    signature = signature or {**DEFINED, **CONSTRUCTORS}
    leaves = [Fun(c) for c, n in signature.items() if n == 0] + [Var(v) for v in variables]
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(leaves)
    name = rng.choice([c for c, n in signature.items() if n > 0])
    return Fun(name, [random_term(rng, depth - 1, signature, variables)
                      for _ in range(signature[name])])


def random_basic(rng: random.Random, depth: int, defined=DEFINED, constructors=CONSTRUCTORS,
                 variables=VARIABLES):
    f = rng.choice(sorted(defined))
    return Fun(f, [random_value(rng, depth - 1, constructors, variables)
                   for _ in range(defined[f])])


def order_oracle(cert: Certificate, s, t, variant=None) -> bool:
    """The path order evaluated literally from its clauses, without memoisation."""
    variant = variant or cert.variant
    prec, symbols = cert.precedence, cert.symbols

    def seq(a, b):
        return safe_equivalent(prec, symbols, a, b)

    def ge(a, b):
        return seq(a, b) or gt(a, b)

    def below(f, u, defined_only):
        return all(not isinstance(v, Fun) or (defined_only and not symbols[v.name].defined)
                   or prec.gt(f, v.name) for v in subterms(u))

    def tuple_ge(xs, ys, strict):
        for perm in itertools.permutations(range(len(ys))):
            pairs = [(xs[i], ys[j]) for i, j in enumerate(perm)]
            if all(ge(a, b) for a, b in pairs) and (
                    not strict or any(gt(a, b) and not seq(a, b) for a, b in pairs)):
                return True
        return False

    def gt(a, b):
        if isinstance(a, Var):
            return False
        if any(ge(ai, b) for ai in a.args):
            return True
        if isinstance(b, Var):
            return False
        f, g = a.name, b.name
        fs, gs = symbols[f], symbols[g]
        ps = variant == SPOP_PS
        if fs.defined and prec.gt(f, g):
            if (all(normal_subterm_gt(prec, symbols, a, b.args[j]) for j in gs.normal)
                    and all(gt(a, b.args[j]) for j in gs.safe)
                    and sum(not below(f, u, not ps) for u in b.args) <= 1):
                return True
        if (fs.kind is Kind.RECURSIVE and prec.equiv(f, g)
                and len(fs.normal) == len(gs.normal) and len(fs.safe) == len(gs.safe)):
            an = [a.args[i] for i in fs.normal_sorted]
            bn = [b.args[i] for i in gs.normal_sorted]
            if tuple_ge(an, bn, strict=True):
                if ps:
                    if all(gt(a, b.args[j]) and below(f, b.args[j], False) for j in gs.safe):
                        return True
                elif tuple_ge([a.args[i] for i in fs.safe_sorted],
                              [b.args[i] for i in gs.safe_sorted], strict=False):
                    return True
        return False

    return gt(s, t)


# -- the width-bounded order on normalised terms and sequences ---------------------------

def equiv_oracle(prec, s, t) -> bool:
    """Equality up to equivalent roots and argument permutations."""
    if isinstance(s, Var) or isinstance(t, Var):
        return s == t
    if len(s.args) != len(t.args) or not prec.equiv(s.name, t.name):
        return False
    return any(all(equiv_oracle(prec, a, t.args[j]) for a, j in zip(s.args, perm))
               for perm in itertools.permutations(range(len(t.args))))


def seq_equiv_oracle(prec, a, b) -> bool:
    return len(a) == len(b) and any(
        all(equiv_oracle(prec, x, b[j]) for x, j in zip(a, perm))
        for perm in itertools.permutations(range(len(b))))


def seq_order_oracle(cert: Certificate, k: int, a, b) -> bool:
    """Literal reading of the four clauses; ``a`` and ``b`` are a Fun or a tuple."""
    prec, kinds = cert.precedence, cert.kinds

    def proper(s):
        return [u for x in s.args for u in subterms(x)]

    def is_sub(u, s, strict):
        pool = proper(s) if strict else list(subterms(s))
        return any(equiv_oracle(prec, u, v) for v in pool)

    def outside(f, t):
        return any(isinstance(u, Fun) and kinds[u.name].defined and not prec.gt(f, u.name)
                   for u in subterms(t))

    def term_gt(s, t):
        f, g = s.name, t.name
        if (kinds[f].defined and prec.gt(f, g) and len(t.args) <= k
                and all(is_sub(x, s, True) for x in t.args)):
            return True
        n = len(s.args)
        if kinds[f] is Kind.RECURSIVE and prec.equiv(f, g) and len(t.args) == n and n <= k:
            for perm in itertools.permutations(range(n)):
                if (all(is_sub(t.args[j], s.args[i], False) for i, j in enumerate(perm))
                        and any(is_sub(t.args[j], s.args[i], True) for i, j in enumerate(perm))):
                    return True
        return False

    def ialst(s, items):
        return (len(items) <= k and all(term_gt(s, t) for t in items)
                and sum(outside(s.name, t) for t in items) <= 1)

    if isinstance(a, Fun):
        return term_gt(a, b) if isinstance(b, Fun) else ialst(a, tuple(b))
    targets = (b,) if isinstance(b, Fun) else tuple(b)
    n = len(a)
    if n == 0:
        return False
    for owner in itertools.product(range(n), repeat=len(targets)):
        blocks = [tuple(t for t, o in zip(targets, owner) if o == i) for i in range(n)]
        strict = False
        ok = True
        for s, block in zip(a, blocks):
            if ialst(s, block):
                strict = True
            elif not (len(block) == 1 and equiv_oracle(prec, s, block[0])):
                ok = False
                break
        if ok and strict:
            return True
    return False


def shapes(cert: Certificate):
    """(symbol, arity) pairs a normalised term may use."""
    out = []
    for name, sym in cert.symbols.items():
        if sym.defined:
            out.append((name, len(sym.normal)))
        else:
            out.extend({(name, sym.arity), (name, 0)})
    return sorted(set(out))


def slow_oracle(cert: Certificate, k: int, items) -> int:
    """Longest descending chain, by enumerating every candidate successor
    and filtering it through :func:`seq_order_oracle`."""
    @functools.lru_cache(maxsize=None)
    def term_succ(s):
        pool = sorted(set(subterms(s)), key=str)
        cands = set()
        for g, m in shapes(cert):
            for args in itertools.product(pool, repeat=m):
                cands.add(Fun(g, args))
        return tuple(sorted((t for t in cands if seq_order_oracle(cert, k, s, t)), key=str))

    @functools.lru_cache(maxsize=None)
    def blocks(s):
        succ = term_succ(s)
        out = []
        for m in range(k + 1):
            for combo in itertools.combinations_with_replacement(succ, m):
                if seq_order_oracle(cert, k, s, combo):
                    out.append(combo)
        return tuple(out)

    @functools.lru_cache(maxsize=None)
    def longest(seq):
        best = 0
        options = [((s,),) + blocks(s) for s in seq]
        for choice in itertools.product(*options):
            if all(c == (s,) for c, s in zip(choice, seq)):
                continue
            nxt = tuple(sorted((u for c in choice for u in c), key=str))
            best = max(best, 1 + longest(nxt))
        return best

    return longest(tuple(sorted(items, key=str)))


SEQ_SYMBOLS = {"f": 2, "g": 1, "a": 0}


def random_seq_certificate(rng: random.Random, symbols=SEQ_SYMBOLS) -> Certificate:
    """Random kinds and precedence over a tiny signature; constructors sit at
    the bottom and every class holds a single kind."""
    kinds = {name: rng.choice(list(Kind)) for name in symbols}
    defined = [name for name in symbols if kinds[name].defined]
    rng.shuffle(defined)
    classes = []
    for name in defined:
        if classes and kinds[classes[-1][0]] is kinds[name] and rng.random() < 0.5:
            classes[-1].append(name)
        else:
            classes.append([name])
    ctors = [name for name in symbols if not kinds[name].defined]
    if ctors:
        classes.append(ctors)
    table = {name: Symbol(name, n, kinds[name], frozenset(range(n)) if kinds[name].defined
                          else frozenset())
             for name, n in symbols.items()}
    return Certificate(Precedence(tuple(frozenset(c) for c in classes)), table)


def random_normalised(rng: random.Random, cert: Certificate, depth: int) -> Fun:
    """A ground normalised term of depth at most ``depth``; needs a nullary shape."""
    options = shapes(cert)
    if depth == 0 or rng.random() < 0.3:
        options = [(g, m) for g, m in options if m == 0]
    g, m = rng.choice(options)
    return Fun(g, [random_normalised(rng, cert, depth - 1) for _ in range(m)])


# -- instances shared with the acceptance suite --------------------------------------------

def _equivalent_copy(cert, t):
    """Swap each symbol for a class mate of the same shape and reverse arguments."""
    mates = [g for g in sorted(cert.precedence.class_of(t.name)) if _fits(cert, g, len(t.args))]
    return Fun(mates[-1], [_equivalent_copy(cert, a) for a in reversed(t.args)])


def _fits(cert, g, m):
    sym = cert.symbols[g]
    return m == (len(sym.normal) if sym.defined else sym.arity) or (not sym.defined and m == 0)


def law_instance(rng):
    cert, k = random_seq_certificate(rng), rng.randint(1, 3)
    a = tuple(random_normalised(rng, cert, 3) for _ in range(rng.randint(1, 2)))
    b = tuple(random_normalised(rng, cert, 2) for _ in range(rng.randint(0, 3)))
    c = tuple(random_normalised(rng, cert, 2) for _ in range(rng.randint(0, 2)))
    return cert, k, a, b, c


def check_laws(cert, k, a, b, c):
    """The three laws of the width-bounded order for one instance."""
    order = SeqOrder(cert, k)
    if not order.gt(Seq(a), Seq(b)):
        return
    assert SeqOrder(cert, k + 1).gt(Seq(a), Seq(b))
    a2 = tuple(_equivalent_copy(cert, t) for t in reversed(a))
    b2 = tuple(_equivalent_copy(cert, t) for t in reversed(b))
    assert order.gt(Seq(a2), Seq(b2))
    assert order.gt(append(Seq(a), Seq(c)), append(Seq(b), Seq(c)))


def slowsum_instance(rng):
    cert = random_seq_certificate(rng)
    k = rng.randint(1, 3)
    depth = 2 if k == 3 else 3
    items = tuple(random_normalised(rng, cert, depth) for _ in range(rng.randint(0, 3)))
    return cert, k, items


def check_slowsum(cert, k, items):
    calc = Slow(cert, k)
    total = sum(calc.of_term(t) for t in items)
    assert calc.of(Seq(items)) == total
    assert Slow(cert, k, exhaustive=True).of(Seq(items)) == total


def bwsc_instance(rng, substitution=False):
    k, l = rng.randint(1, 2), rng.randint(0, 2)
    e = random_expr(rng, k, l, rng.randint(0, 2), substitution=substitution)
    normals = ["".join(rng.choice("01") for _ in range(rng.randint(0, 4))) for _ in range(k)]
    safes = ["".join(rng.choice("01") for _ in range(rng.randint(0, 4))) for _ in range(l)]
    return e, normals, safes


def check_bwsc(e, normals, safes):
    """Evaluation agrees with rewriting, and the certified degree is the nesting depth."""
    trs, cert = compile_to_trs(e)
    assert evaluate(e, normals, safes) == decode_word(normalize(trs, call_term(e, normals, safes)))
    report = check_compatibility(trs, cert)
    assert report.degree == nesting_depth(e)
