"""Search for certificates that orient a rewrite system.

The search assigns the defined symbols one at a time, callees before
callers.  Each assignment fixes a symbol's kind, its normal positions and
its place in the precedence (joining an existing class or opening a new
one).  Inserting a symbol never changes how previously placed symbols
compare, so a rule can be checked as soon as all of its defined symbols are
placed and a failing rule prunes the whole subtree.  Iterative deepening on
the number of recursive classes, which is the certified degree, makes the
first certificate found one of minimal degree.
"""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

from .orders import SPOP, Certificate, DegreeReport, PathOrder, check_compatibility
from .rewriting import Rule, Trs
from .terms import Fun, Kind, Precedence, Symbol, Var, subterms, variables

log = logging.getLogger(__name__)

__all__ = ["SearchBudget", "NoCertificate", "Synthesis", "synthesize", "gen_family",
           "call_order"]


@dataclass(frozen=True)
class SearchBudget:
    max_candidates: int = 1_000_000
    time_limit: float = 60.0
    max_degree: Optional[int] = None

    def __post_init__(self):
        if self.max_candidates <= 0 or self.time_limit <= 0:
            raise ValueError("budget limits must be positive")
        if self.max_degree is not None and self.max_degree < 0:
            raise ValueError("max_degree must be non-negative")


@dataclass
class NoCertificate:
    budget_exhausted: bool
    reason: str = ""
    candidates: int = 0

    def __bool__(self):
        return False


@dataclass
class Synthesis:
    certificate: Certificate
    report: DegreeReport
    candidates: int
    exhausted_degrees: list = field(default_factory=list)

    def __bool__(self):
        return True


class _OutOfBudget(Exception):
    pass


def call_order(trs: Trs) -> list[str]:
    """Defined symbols, callees first; mutually recursive groups stay adjacent."""
    calls = {f: sorted({u.name for r in trs.rules_for(f) for u in subterms(r.rhs)
                        if isinstance(u, Fun) and u.name in trs.defined and u.name != f})
             for f in sorted(trs.defined)}
    index: dict = {}
    low: dict = {}
    stack: list = []
    on_stack: set = set()
    order: list = []

    def strongconnect(v):
        index[v] = low[v] = len(index)
        stack.append(v)
        on_stack.add(v)
        for w in calls[v]:
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            group = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                group.append(w)
                if w == v:
                    break
            order.extend(sorted(group))

    for f in sorted(trs.defined):
        if f not in index:
            strongconnect(f)
    return order


class _Search:
    def __init__(self, trs: Trs, variant: str, budget: SearchBudget, respect_declared: bool):
        self.trs = trs
        self.variant = variant
        self.budget = budget
        self.order = call_order(trs)
        self.deadline = time.monotonic() + budget.time_limit
        self.candidates = 0
        pos = {f: i for i, f in enumerate(self.order)}
        # rules become checkable once their last defined symbol is placed
        self.ready: dict[int, list[Rule]] = {}
        for rule in trs.rules:
            syms = {u.name for side in (rule.lhs, rule.rhs) for u in subterms(side)
                    if isinstance(u, Fun) and u.name in trs.defined}
            self.ready.setdefault(max(pos[f] for f in syms), []).append(rule)
        self.normal_options = {}
        for f in self.order:
            n = trs.signature[f]
            if respect_declared and f in trs.declared_normal:
                self.normal_options[f] = [trs.declared_normal[f]]
            else:
                subsets = [frozenset(c) for m in range(n, -1, -1)
                           for c in itertools.combinations(range(n), m)]
                self.normal_options[f] = subsets
        self.constructors = frozenset(trs.constructors)

    def tick(self):
        self.candidates += 1
        if self.candidates > self.budget.max_candidates:
            raise _OutOfBudget("candidate budget exhausted")
        if self.candidates % 256 == 0 and time.monotonic() > self.deadline:
            raise _OutOfBudget("time limit reached")

    def certificate(self, classes, kinds, normals) -> Certificate:
        symbols = {c: Symbol(c, self.trs.signature[c], Kind.CONSTRUCTOR) for c in self.constructors}
        for f, kind in kinds.items():
            symbols[f] = Symbol(f, self.trs.signature[f], kind, normals[f])
        chain = [frozenset(c) for c in classes]
        if self.constructors:
            chain.append(self.constructors)
        return Certificate(Precedence(tuple(chain)), symbols, self.variant)

    def rule_filter(self, rule: Rule, normals) -> bool:
        """Variables at normal positions on the right must occur below a
        normal argument on the left."""
        lhs = rule.lhs
        allowed = set()
        for i in normals[lhs.name]:
            allowed |= variables(lhs.args[i])
        for u in subterms(rule.rhs):
            if isinstance(u, Fun) and u.name in normals:
                for j in normals[u.name]:
                    if not variables(u.args[j]) <= allowed:
                        return False
        return True

    def placements(self, classes, kinds, kind):
        """Ways to insert a symbol of ``kind``: a new class on top first, then
        joining a class of the same kind, then a new class in a lower gap."""
        n = len(classes)
        yield ("new", 0)
        for c in range(n):
            if kinds[next(iter(classes[c]))] is kind:
                yield ("join", c)
        for gap in range(1, n + 1):
            yield ("new", gap)

    def run(self, degree: int) -> Optional[Certificate]:
        classes: list[list[str]] = []
        kinds: dict = {}
        normals: dict = {}

        def rec_classes():
            return sum(1 for c in classes if kinds[c[0]] is Kind.RECURSIVE)

        def place(i: int) -> Optional[Certificate]:
            if i == len(self.order):
                return self.certificate(classes, kinds, normals)
            f = self.order[i]
            for kind in (Kind.COMPOSITIONAL, Kind.RECURSIVE):
                for normal in self.normal_options[f]:
                    for how, at in list(self.placements(classes, kinds, kind)):
                        self.tick()
                        if how == "new":
                            classes.insert(at, [f])
                        else:
                            classes[at].append(f)
                        kinds[f] = kind
                        normals[f] = normal
                        if rec_classes() <= degree and self.rules_ok(i, classes, kinds, normals):
                            found = place(i + 1)
                            if found is not None:
                                return found
                        del kinds[f], normals[f]
                        if how == "new":
                            classes.pop(at)
                        else:
                            classes[at].pop()
            return None

        return place(0)

    def rules_ok(self, i, classes, kinds, normals) -> bool:
        rules = self.ready.get(i, [])
        if not rules:
            return True
        if not all(self.rule_filter(r, normals) for r in rules):
            return False
        order = PathOrder(self.certificate(classes, kinds, normals))
        return all(order.gt(r.lhs, r.rhs) for r in rules)


def synthesize(trs: Trs, variant: str = SPOP, budget: Optional[SearchBudget] = None,
               respect_declared: bool = True):
    """Find a certificate of minimal degree for ``trs``.

    Returns a :class:`Synthesis` or a falsy :class:`NoCertificate`.  With
    ``respect_declared`` the normal positions written in the input are kept
    fixed.  ``budget_exhausted`` is false only when every candidate of every
    degree was refuted.
    """
    if not trs.is_constructor_trs():
        raise ValueError("not a constructor system")
    budget = budget or SearchBudget()
    search = _Search(trs, variant, budget, respect_declared)
    full = len(search.order)
    top = full if budget.max_degree is None else min(budget.max_degree, full)
    exhausted = []
    try:
        for d in range(top + 1):
            cert = search.run(d)
            if cert is not None:
                report = check_compatibility(trs, cert)
                log.info("certificate of degree %d after %d candidates", d, search.candidates)
                return Synthesis(cert, report, search.candidates, exhausted)
            exhausted.append(d)
    except _OutOfBudget as exc:
        return NoCertificate(True, str(exc), search.candidates)
    if top < full:
        return NoCertificate(True, f"no certificate up to degree {top}", search.candidates)
    return NoCertificate(False, "search space exhausted", search.candidates)


def gen_family(d: int) -> Trs:
    """The systems whose derivation heights grow like ``n^d``."""
    if d < 0:
        raise ValueError("d must be non-negative")
    x, y = Var("x"), Var("y")
    rules = [Rule(Fun("f0", [x]), Fun("a"))]
    declared = {"f0": frozenset({0})}
    for i in range(1, d + 1):
        f, g, prev = f"f{i}", f"g{i}", f"f{i - 1}"
        rules.append(Rule(Fun(f, [x]), Fun(g, [x, x])))
        rules.append(Rule(Fun(g, [Fun("s", [x]), y]),
                          Fun("b", [Fun(prev, [y]), Fun(g, [x, y])])))
        declared[f] = frozenset({0})
        declared[g] = frozenset({0, 1})
    return Trs(rules, declared_normal=declared)
