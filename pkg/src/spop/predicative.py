"""Predicative interpretation of terms as sequences, and the width-bounded
order on normalised terms and sequences that innermost steps embed into.

A *normalised* term keeps only the normal arguments of defined symbols; it
is represented by an ordinary :class:`~spop.terms.Fun`.  A constructor rooted
term that still contains defined symbols is interpreted by its root alone,
applied to no arguments.  Sequences are :class:`Seq` values; a bare term
stands for the singleton sequence when concatenated.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .orders import Certificate, check_compatibility
from .rewriting import BOTTOM, DEFAULT_FUEL, FuelExceeded, Trs, completed_successors
from .terms import Fun, Kind, Term, Var, canonical, ensure_recursion_limit, rank, subterms

log = logging.getLogger(__name__)

__all__ = [
    "Seq", "NIL", "SeqTerm", "NotInTn", "in_Tn", "interpret", "append",
    "SeqOrder", "SeqProof", "gspopv_gt", "Slow", "slow", "mc",
    "EmbeddingViolation", "EmbeddingReport", "StepCheck", "verify_embedding",
    "BoundViolation", "SlowBound", "check_slow_bound", "normalised",
]


@dataclass(frozen=True)
class Seq:
    items: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if any(not isinstance(t, Fun) for t in self.items):
            raise TypeError("sequence elements must be ground normalised terms")

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __str__(self):
        return "[" + " ".join(str(t) for t in self.items) + "]"


NIL = Seq(())
SeqTerm = Union[Fun, Seq]


def _elements(a: SeqTerm) -> tuple:
    return a.items if isinstance(a, Seq) else (a,)


def append(*parts: SeqTerm) -> Seq:
    """Concatenate sequences, reading a bare term as a singleton."""
    return Seq(tuple(itertools.chain.from_iterable(_elements(p) for p in parts)))


class NotInTn(ValueError):
    pass


def _is_value(cert: Certificate, t: Term) -> bool:
    return all(not cert.symbols[u.name].defined for u in subterms(t) if isinstance(u, Fun))


def in_Tn(cert: Certificate, t: Term) -> bool:
    """Values at every normal argument position, recursively through safe ones."""
    if _is_value(cert, t):
        return True
    if isinstance(t, Var):
        return False
    sym = cert.symbols[t.name]
    return (all(_is_value(cert, t.args[i]) for i in sym.normal_sorted)
            and all(in_Tn(cert, t.args[i]) for i in sym.safe_sorted))


def normalised(cert: Certificate, t: Fun) -> Fun:
    """The marked root of ``t`` applied to its normal arguments."""
    return Fun(t.name, [t.args[i] for i in cert.symbols[t.name].normal_sorted])


def interpret(cert: Certificate, t: Term) -> Seq:
    if not in_Tn(cert, t):
        raise NotInTn(f"{t} has a non-value at a normal argument position")
    out: list = []

    def walk(u: Term):
        if _is_value(cert, u):
            return
        out.append(normalised(cert, u))
        for i in cert.symbols[u.name].safe_sorted:
            walk(u.args[i])

    walk(t)
    return Seq(tuple(out))


# -- the order on normalised terms and sequences ---------------------------

@dataclass(frozen=True)
class SeqProof:
    """Evidence for ``lhs |>_k rhs``; ``clause`` is ia, ts, ialst or ms.
    For ms, ``blocks[i]`` lists the indices of ``rhs`` elements assigned to
    the i-th element of ``lhs``."""

    clause: str
    lhs: SeqTerm
    rhs: SeqTerm
    premises: tuple = ()
    blocks: tuple = ()

    def __bool__(self):
        return True

    def render(self, indent: int = 0) -> str:
        lines = [f"{'  ' * indent}{self.lhs} |> {self.rhs}  [{self.clause}]"]
        lines.extend(p.render(indent + 1) for p in self.premises)
        return "\n".join(lines)


@dataclass(frozen=True)
class SeqNotGreater:
    lhs: SeqTerm
    rhs: SeqTerm
    reason: str

    def __bool__(self):
        return False


class SeqOrder:
    """Decides ``a |>_k b`` for a certificate's precedence and kinds.

    Only the precedence, the kinds and (for successor enumeration) the number
    of normal positions of each symbol are consulted.
    """

    def __init__(self, cert: Certificate, k: int):
        if k < 1:
            raise ValueError("width k must be at least 1")
        self.cert = cert
        self.prec = cert.precedence
        self.kinds = cert.kinds
        self.k = k
        self._keys: dict = {}
        self._sub: dict = {}
        self._memo: dict = {}

    # -- structural helpers ---------------------------------------------
    def key(self, t: Term):
        return canonical(self.prec, t, self._keys)

    def seq_key(self, a: SeqTerm):
        return tuple(sorted(self.key(t) for t in _elements(a)))

    def subterm_keys(self, t: Term) -> tuple[frozenset, frozenset]:
        """Keys of all subterms of ``t``, and of its proper subterms."""
        hit = self._sub.get(t)
        if hit is None:
            proper = frozenset(self.key(u) for a in t.args for u in subterms(a)) \
                if isinstance(t, Fun) else frozenset()
            hit = (proper | {self.key(t)}, proper)
            self._sub[t] = hit
        return hit

    def defined(self, f: str) -> bool:
        return self.kinds[f].defined

    def outside(self, f: str, t: Term) -> bool:
        """Does ``t`` contain a defined symbol not strictly below ``f``?"""
        return any(isinstance(u, Fun) and self.defined(u.name) and not self.prec.gt(f, u.name)
                   for u in subterms(t))

    # -- term against term -------------------------------------------------
    def term_gt(self, s: Fun, t: Fun) -> bool:
        k = (s, t)
        hit = self._memo.get(k)
        if hit is None:
            hit = self._ia(s, t) or self._ts(s, t) is not None
            self._memo[k] = hit
        return hit

    def _ia(self, s: Fun, t: Fun) -> bool:
        if not self.defined(s.name) or not self.prec.gt(s.name, t.name) or len(t.args) > self.k:
            return False
        proper = self.subterm_keys(s)[1]
        return all(self.key(a) in proper for a in t.args)

    def _ts(self, s: Fun, t: Fun) -> Optional[tuple]:
        """A witnessing permutation as a tuple of target indices, or None."""
        n = len(s.args)
        if (self.kinds[s.name] is not Kind.RECURSIVE or not self.prec.equiv(s.name, t.name)
                or len(t.args) != n or n > self.k):
            return None
        subs = [self.subterm_keys(a) for a in s.args]
        tk = [self.key(b) for b in t.args]
        for perm in itertools.permutations(range(n)):
            ok, strict = True, False
            for i, j in enumerate(perm):
                if tk[j] in subs[i][1]:
                    strict = True
                elif tk[j] not in subs[i][0]:
                    ok = False
                    break
            if ok and strict:
                return perm
        return None

    # -- the four clauses -------------------------------------------------
    def gt(self, a: SeqTerm, b: SeqTerm) -> bool:
        if isinstance(a, Fun):
            if isinstance(b, Fun):
                return self.term_gt(a, b)
            return self._ialst(a, b.items)
        return self._ms(a.items, _elements(b)) is not None

    def _ialst(self, s: Fun, items: Sequence[Fun]) -> bool:
        if len(items) > self.k:
            return False
        if not all(self.term_gt(s, t) for t in items):
            return False
        return sum(self.outside(s.name, t) for t in items) <= 1

    def _ms(self, sources: Sequence[Fun], targets: Sequence[Fun]) -> Optional[list]:
        """Assign every target element to a source element.

        A source receiving nothing is strictly greater than the empty block.
        A source receiving one element is weakly greater if equivalent and
        strictly greater via the term clauses; a block of two or more
        elements needs the list clause.  Returns the assignment (source index
        per target, with -1-i marking an equivalence) or None.
        """
        n, m, k = len(sources), len(targets), self.k
        if n == 0:
            return None
        gt = [[self.term_gt(s, t) for t in targets] for s in sources]
        eq = [[self.key(s) == self.key(t) for t in targets] for s in sources]
        out = [[self.outside(s.name, t) for t in targets] for s in sources]
        count = [0] * n
        outside = [0] * n
        closed = [False] * n
        assign = [0] * m
        seen: set = set()

        def feasible_end() -> bool:
            return any(not closed[i] for i in range(n))  # some source strict

        def search(j: int) -> bool:
            if j == m:
                return feasible_end()
            state = (j, tuple(count), tuple(outside), tuple(closed))
            if state in seen:
                return False
            for i in range(n):
                if closed[i]:
                    continue
                if eq[i][j] and count[i] == 0:
                    closed[i] = True
                    count[i] = 1
                    assign[j] = -1 - i
                    if search(j + 1):
                        return True
                    closed[i] = False
                    count[i] = 0
                if gt[i][j]:
                    c, o = count[i] + 1, outside[i] + out[i][j]
                    if c >= 2 and (c > k or o > 1):
                        continue
                    count[i], outside[i] = c, o
                    assign[j] = i
                    if search(j + 1):
                        return True
                    count[i], outside[i] = c - 1, o - out[i][j]
            seen.add(state)
            return False

        return list(assign) if search(0) else None

    # -- proofs ---------------------------------------------------------------
    def prove(self, a: SeqTerm, b: SeqTerm):
        if not self.gt(a, b):
            return SeqNotGreater(a, b, self._why_not(a, b))
        if isinstance(a, Fun) and isinstance(b, Fun):
            if self._ia(a, b):
                return SeqProof("ia", a, b)
            return SeqProof("ts", a, b, (), (self._ts(a, b),))
        if isinstance(a, Fun):
            return SeqProof("ialst", a, b, tuple(self.prove(a, t) for t in b.items))
        targets = _elements(b)
        assign = self._ms(a.items, targets)
        blocks = []
        premises = []
        for i, s in enumerate(a.items):
            idx = tuple(j for j, x in enumerate(assign) if x == i or x == -1 - i)
            blocks.append(idx)
            if any(assign[j] == -1 - i for j in idx):
                continue
            block = [targets[j] for j in idx]
            premises.append(self.prove(s, block[0] if len(block) == 1 else Seq(tuple(block))))
        return SeqProof("ms", a, b, tuple(premises), tuple(blocks))

    def _why_not(self, a: SeqTerm, b: SeqTerm) -> str:
        if isinstance(a, Seq):
            return "ms: no block decomposition with a strict component"
        if isinstance(b, Seq):
            if len(b) > self.k:
                return f"ialst: {len(b)} elements exceed width {self.k}"
            return "ialst: some element is not smaller or two leave the lower precedence"
        return "ia/ts: neither clause applies"

    # -- successors for Slow ---------------------------------------------------
    def term_successors(self, s: Fun) -> list[Fun]:
        """Representatives, up to equivalence, of all terms below ``s``."""
        out: dict = {}
        f = s.name
        if self.defined(f):
            proper = sorted({self.key(u): u for a in s.args for u in subterms(a)}.items())
            reps = [u for _, u in proper]
            for g, arity in self._shapes_below(f):
                for args in itertools.combinations_with_replacement(reps, arity):
                    t = Fun(g, args)
                    out.setdefault(self.key(t), t)
        if self.kinds[f] is Kind.RECURSIVE and len(s.args) <= self.k and s.args:
            per_arg = []
            for a in s.args:
                subs = sorted({self.key(u): u for u in subterms(a)}.items())
                per_arg.append([(u, key != self.key(a)) for key, u in subs])
            for combo in itertools.product(*per_arg):
                if any(strict for _, strict in combo):
                    t = Fun(f, [u for u, _ in combo])
                    out.setdefault(self.key(t), t)
        return [out[key] for key in sorted(out)]

    def _shapes_below(self, f: str) -> list[tuple[str, int]]:
        """One representative symbol per (class, normalised arity) below ``f``."""
        shapes: dict = {}
        for g in self.prec.below(f):
            sym = self.cert.symbols.get(g)
            if sym is None:
                continue
            arities = {len(sym.normal)} if sym.defined else {sym.arity, 0}
            for n in arities:
                if n <= self.k:
                    shapes.setdefault((self.prec.level(g), n), g)
        return [(g, n) for (_, n), g in sorted(shapes.items())]


def gspopv_gt(cert: Certificate, k: int, a: SeqTerm, b: SeqTerm):
    """Proof of ``a |>_k b`` or a falsy :class:`SeqNotGreater`."""
    return SeqOrder(cert, k).prove(a, b)


# -- Slow --------------------------------------------------------------------

class Slow:
    """Longest descending chains for one certificate and width.

    The default evaluation treats a sequence as the sum of its elements when
    it chooses the best list successor of a term.  ``exhaustive=True``
    instead explores sequences directly through the multiset clause; it is
    exponentially slower and serves to cross-check the additive evaluation.
    Memo tables live as long as the instance.
    """

    def __init__(self, cert: Certificate, k: int, fuel: int = DEFAULT_FUEL,
                 exhaustive: bool = False):
        ensure_recursion_limit()
        self.order = SeqOrder(cert, k)
        self.k = k
        self.fuel = fuel
        self.exhaustive = exhaustive
        self._terms: dict = {}
        self._seqs: dict = {}
        self._succ: dict = {}
        self._lists: dict = {}
        self._repl: dict = {}

    def _spend(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExceeded("Slow computation ran out of fuel")

    def successors(self, t: Fun) -> list[Fun]:
        key = self.order.key(t)
        hit = self._succ.get(key)
        if hit is None:
            hit = self.order.term_successors(t)
            self._succ[key] = hit
        return hit

    def list_successors(self, t: Fun) -> list[tuple]:
        """Every list successor of ``t`` as a sorted tuple of element keys."""
        key = self.order.key(t)
        hit = self._lists.get(key)
        if hit is None:
            succ = self.successors(t)
            found = set()
            for m in range(self.k + 1):
                for combo in itertools.combinations_with_replacement(succ, m):
                    if sum(self.order.outside(t.name, u) for u in combo) <= 1:
                        found.add(combo)
            hit = sorted(found, key=lambda c: tuple(self.order.key(u) for u in c))
            self._lists[key] = hit
        return hit

    def of(self, a: SeqTerm) -> int:
        if isinstance(a, Seq):
            if self.exhaustive:
                return self.of_multiset(a.items)
            return sum(self.of_term(t) for t in a.items)
        return self.of_term(a)

    def of_term(self, t: Fun) -> int:
        if self.exhaustive:
            return self.of_multiset([t])
        key = self.order.key(t)
        hit = self._terms.get(key)
        if hit is not None:
            return hit
        self._spend()
        succ = self.successors(t)
        values = [self.of_term(u) for u in succ]
        inside = [v for u, v in zip(succ, values) if not self.order.outside(t.name, u)]
        escaping = [v for u, v in zip(succ, values) if self.order.outside(t.name, u)]
        # The best list successor fills all k slots with the best inside
        # successor, or k - 1 of them next to the best escaping one.
        low = max(inside, default=0)
        best = max(max(values, default=0), self.k * low)
        if escaping:
            best = max(best, max(escaping) + (self.k - 1) * low)
        result = 1 + best  # every term is above the empty sequence
        self._terms[key] = result
        return result

    def replacements(self, s: Fun) -> list[tuple]:
        """Blocks that may replace ``s`` at the start of a longest chain.

        If sequence ``b`` can be turned into ``b'`` by one more application of
        the multiset clause, then ``b`` starts a strictly longer chain, so
        ``b'`` never needs to be explored.  This discards blocks that drop an
        element which could have been kept, and elements lying below another
        admissible choice for the same slot.
        """
        key = self.order.key(s)
        hit = self._repl.get(key)
        if hit is not None:
            return hit
        succ = self.successors(s)
        order = self.order
        inside = [u for u in succ if not order.outside(s.name, u)]
        escaping = [u for u in succ if order.outside(s.name, u)]
        top_inside = [u for u in inside if not any(order.term_gt(w, u) for w in inside)]
        top_escaping = [u for u in escaping if not any(order.term_gt(w, u) for w in succ)]
        blocks = set()
        if top_inside:
            for combo in itertools.combinations_with_replacement(top_inside, self.k):
                blocks.add(combo)
            for u in top_escaping:
                for combo in itertools.combinations_with_replacement(top_inside, self.k - 1):
                    blocks.add(tuple(sorted((u,) + combo, key=order.key)))
        else:
            blocks.update((u,) for u in top_escaping)
            blocks.add(())
        hit = sorted(blocks, key=lambda c: tuple(order.key(u) for u in c))
        self._repl[key] = hit
        return hit

    def of_multiset(self, items: Sequence[Fun]) -> int:
        """Longest chain from a sequence, exploring the multiset clause.

        A successor that replaces several elements at once is reachable
        through successors replacing one element at a time, so only single
        replacements can start a longest chain; see :meth:`replacements` for
        the blocks tried per element.
        """
        items = sorted(items, key=self.order.key)
        key = tuple(self.order.key(t) for t in items)
        hit = self._seqs.get(key)
        if hit is not None:
            return hit
        self._spend()
        best = -1
        done = set()
        for i, s in enumerate(items):
            ks = self.order.key(s)
            if ks in done:
                continue
            done.add(ks)
            rest = items[:i] + items[i + 1:]
            for combo in self.replacements(s):
                best = max(best, self.of_multiset(rest + list(combo)))
        result = 1 + best if items else 0
        self._seqs[key] = result
        return result


def slow(cert: Certificate, k: int, a: SeqTerm, fuel: int = DEFAULT_FUEL,
         exhaustive: bool = False) -> int:
    return Slow(cert, k, fuel, exhaustive).of(a)


def mc(r: int, d: int, k: int) -> int:
    """The constant bounding Slow by rank ``r`` and recursion depth ``d``."""
    if r < 1:
        raise ValueError("rank must be at least 1")
    value = 1
    for _ in range(r - 1):
        value = value * k ** (d + 1) + 1
    return value


class BoundViolation(AssertionError):
    pass


@dataclass
class SlowBound:
    term: Fun
    slow: int
    bound: int
    witness: Optional[SeqTerm]


def check_slow_bound(cert: Certificate, k: int, f: str, values: Sequence[Term],
                     fuel: int = DEFAULT_FUEL, calculator: Optional[Slow] = None) -> SlowBound:
    """Check ``Slow(b) < mc(rk f, rd f, k) * (2 + sum depth(v))^rd(f)`` for
    every ``b`` below ``f(values)``; raise :class:`BoundViolation` otherwise.

    The largest Slow over the successors of ``f(values)`` is one less than
    its own Slow.  The witness is a term successor attaining it, or None
    when only a list successor does (or there is no successor).
    """
    sym = cert.symbols[f]
    if not sym.defined:
        raise ValueError(f"{f} is not a defined symbol")
    if len(values) != len(sym.normal):
        raise ValueError(f"{f} has {len(sym.normal)} normal arguments")
    calc = calculator or Slow(cert, k, fuel)
    t = Fun(f, values)
    d = cert.recursion_depth(f)
    bound = mc(rank(cert.precedence, f), d, k) * (2 + sum(v.depth for v in values)) ** d
    top = calc.of_term(t) - 1
    witness = next((u for u in calc.successors(t) if calc.of_term(u) == top), None)
    if not top < bound:
        raise BoundViolation(f"Slow below {t} reaches {top}, bound is {bound}")
    return SlowBound(t, top + 1, bound, witness)


# -- embedding of innermost steps -------------------------------------------

class EmbeddingViolation(AssertionError):
    pass


@dataclass
class StepCheck:
    source: Term
    target: Term
    proof: SeqProof


@dataclass
class EmbeddingReport:
    width: int
    steps: list = field(default_factory=list)
    terms_explored: int = 0


def verify_embedding(trs: Trs, cert: Certificate, start: Term, fuel: int = 10**5,
                     bottom: str = BOTTOM, width: Optional[int] = None) -> EmbeddingReport:
    """Check that every innermost step reachable from ``start`` in the
    garbage-completed system maps to a strict decrease of interpretations.

    The width defaults to the largest right-hand side of the completed
    system.  Raises :class:`EmbeddingViolation` on the first failing step.
    """
    check_compatibility(trs, cert)
    full = cert.with_constant(bottom)
    ell = width if width is not None else max(trs.max_rhs_size(), 1)
    order = SeqOrder(full, ell)
    report = EmbeddingReport(ell)
    if not in_Tn(full, start):
        raise EmbeddingViolation(f"start term {start} is not predicative")
    seen = {start}
    frontier = [start]
    while frontier:
        s = frontier.pop()
        report.terms_explored += 1
        if report.terms_explored > fuel:
            raise FuelExceeded(f"more than {fuel} terms reachable")
        for t in sorted(completed_successors(trs, s, bottom), key=str):
            if not in_Tn(full, t):
                raise EmbeddingViolation(f"step {s} -> {t} leaves the predicative terms")
            proof = order.prove(interpret(full, s), interpret(full, t))
            if not proof:
                raise EmbeddingViolation(f"step {s} -> {t}: {proof.reason}")
            report.steps.append(StepCheck(s, t, proof))
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return report
