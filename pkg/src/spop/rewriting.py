"""Term rewrite systems, innermost rewriting and derivation heights."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .terms import Fun, Term, Var, match, subterms, substitute, variables, ensure_recursion_limit

log = logging.getLogger(__name__)

__all__ = [
    "Rule", "Trs", "FuelExceeded", "SignatureClash", "SignatureError",
    "innermost_successors", "derivation_height", "normal_forms", "normalize",
    "is_completely_defined", "normalize_with_garbage", "completed_successors",
    "DEFAULT_FUEL", "BOTTOM", "values_up_to",
]

DEFAULT_FUEL = 10**6
BOTTOM = "bot"


class FuelExceeded(RuntimeError):
    """The exploration budget ran out, or a rewrite cycle was found."""


class SignatureClash(ValueError):
    pass


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    lhs: Fun
    rhs: Term

    def __post_init__(self):
        if not isinstance(self.lhs, Fun):
            raise ValueError("left-hand side of a rule must not be a variable")
        extra = variables(self.rhs) - variables(self.lhs)
        if extra:
            names = ", ".join(sorted(v.name for v in extra))
            raise ValueError(f"rule {self}: right-hand side variables {names} not in left-hand side")

    @property
    def root(self) -> str:
        return self.lhs.name

    def __str__(self):
        return f"{self.lhs} -> {self.rhs}"


class Trs:
    """A finite rewrite system.

    ``declared_normal`` optionally fixes normal argument positions (0-based)
    for some symbols, as written with ``;`` in the input syntax.
    """

    def __init__(self, rules: Iterable[Rule], extra_symbols: Optional[Mapping[str, int]] = None,
                 declared_normal: Optional[Mapping[str, frozenset]] = None):
        self.rules = tuple(rules)
        arity: dict[str, int] = {}

        def note(name, n):
            if arity.setdefault(name, n) != n:
                raise SignatureError(f"symbol {name} used with arities {arity[name]} and {n}")

        for name, n in (extra_symbols or {}).items():
            note(name, n)
        for rule in self.rules:
            for side in (rule.lhs, rule.rhs):
                for u in subterms(side):
                    if isinstance(u, Fun):
                        note(u.name, len(u.args))
        self.signature = dict(sorted(arity.items()))
        self.defined = frozenset(r.root for r in self.rules)
        self.constructors = frozenset(self.signature) - self.defined
        self.declared_normal = {k: frozenset(v) for k, v in (declared_normal or {}).items()}
        self._by_root: dict[str, list[Rule]] = {}
        for rule in self.rules:
            self._by_root.setdefault(rule.root, []).append(rule)

    def rules_for(self, f: str) -> list[Rule]:
        return self._by_root.get(f, [])

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def is_constructor_trs(self) -> bool:
        return all(self.is_value(a) for r in self.rules for a in r.lhs.args)

    def is_value(self, t: Term) -> bool:
        return all(u.name not in self.defined for u in subterms(t) if isinstance(u, Fun))

    def is_basic(self, t: Term) -> bool:
        return (isinstance(t, Fun) and t.name in self.defined
                and all(self.is_value(a) for a in t.args))

    def is_left_linear(self) -> bool:
        for r in self.rules:
            occ = [u for u in subterms(r.lhs) if isinstance(u, Var)]
            if len(occ) != len(set(occ)):
                return False
        return True

    def max_rhs_size(self) -> int:
        return max((r.rhs.size for r in self.rules), default=0)

    def root_steps(self, t: Fun) -> list[Term]:
        """Results of rewriting ``t`` at the root with every matching rule."""
        out = []
        for rule in self.rules_for(t.name):
            sigma = match(rule.lhs, t)
            if sigma is not None:
                out.append(substitute(rule.rhs, sigma))
        return out

    def __str__(self):
        return "\n".join(str(r) for r in self.rules)


def values_up_to(constructors: Mapping[str, int], depth: int) -> list[Fun]:
    """All constructor terms of depth at most ``depth`` (constants have depth 0)."""
    layers: list[list[Fun]] = []
    every: list[Fun] = []
    for d in range(depth + 1):
        fresh = []
        for c, n in sorted(constructors.items()):
            if n == 0:
                if d == 0:
                    fresh.append(Fun(c))
                continue
            if d == 0:
                continue
            # at least one argument from the previous layer keeps terms distinct
            previous = set(layers[d - 1])
            for args in itertools.product(every, repeat=n):
                if any(a in previous for a in args):
                    fresh.append(Fun(c, args))
        layers.append(fresh)
        every = every + fresh
    return every


def innermost_successors(trs: Trs, t: Term) -> set[Term]:
    """All terms reachable by one innermost step."""
    ensure_recursion_limit()
    return set(_successors(trs, t, {}))


def _successors(trs: Trs, t: Term, normal: dict) -> list[Term]:
    if isinstance(t, Var) or normal.get(t):
        return []
    out = []
    for i, a in enumerate(t.args):
        for b in _successors(trs, a, normal):
            out.append(Fun(t.name, t.args[:i] + (b,) + t.args[i + 1:]))
    if not out:
        out = trs.root_steps(t)
    if not out:
        normal[t] = True
    return out


def _is_normal(trs: Trs, t: Term, normal: dict) -> bool:
    return not _successors(trs, t, normal)


class _Heights:
    """Memoised map from a term to the longest innermost derivation reaching
    each of its normal forms.

    Innermost rewriting at the root waits until every argument is normal and
    rewrites in distinct arguments do not interact, so the longest derivation
    of ``f(a1, ..., an)`` splits into the arguments' derivations followed by
    the derivation of ``f(u1, ..., un)`` for the chosen normal forms ``ui``.
    This keeps the search exact for non-confluent systems while avoiding the
    interleavings of independent redexes.
    """

    def __init__(self, trs: Trs, fuel: int):
        self.trs = trs
        self.fuel = fuel
        self.memo: dict[Term, dict[Term, int]] = {}
        self.active: set[Term] = set()
        self.normal: dict = {}

    def forms(self, t: Term) -> dict[Term, int]:
        hit = self.memo.get(t)
        if hit is not None:
            return hit
        if isinstance(t, Var) or _is_normal(self.trs, t, self.normal):
            result = {t: 0}
            self.memo[t] = result
            return result
        if t in self.active:
            raise FuelExceeded(f"rewrite cycle through {t}")
        if len(self.memo) >= self.fuel:
            raise FuelExceeded(f"more than {self.fuel} terms explored")
        self.active.add(t)
        result: dict[Term, int] = {}
        if all(_is_normal(self.trs, a, self.normal) for a in t.args):
            for r in self.trs.root_steps(t):
                for u, n in self.forms(r).items():
                    if n + 1 > result.get(u, -1):
                        result[u] = n + 1
        else:
            per_arg = [list(self.forms(a).items()) for a in t.args]
            for combo in itertools.product(*per_arg):
                steps = sum(n for _, n in combo)
                inner = Fun(t.name, [u for u, _ in combo])
                for u, n in self.forms(inner).items():
                    if n + steps > result.get(u, -1):
                        result[u] = n + steps
        self.active.discard(t)
        if any(n > self.fuel for n in result.values()):
            raise FuelExceeded(f"derivation longer than {self.fuel} steps")
        self.memo[t] = result
        return result


def derivation_height(trs: Trs, t: Term, fuel: int = DEFAULT_FUEL) -> int:
    """Length of the longest innermost derivation starting from ``t``."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    ensure_recursion_limit()
    return max(_Heights(trs, fuel).forms(t).values())


def normal_forms(trs: Trs, t: Term, fuel: int = DEFAULT_FUEL) -> dict[Term, int]:
    """Every innermost normal form of ``t`` with its longest derivation length."""
    ensure_recursion_limit()
    return dict(_Heights(trs, fuel).forms(t))


def normalize(trs: Trs, t: Term, fuel: int = DEFAULT_FUEL) -> Term:
    """One innermost normal form, evaluating arguments left to right."""
    ensure_recursion_limit()
    budget = [fuel]

    def reduce_root(u: Fun) -> Term:
        for rule in trs.rules_for(u.name):
            sigma = match(rule.lhs, u)
            if sigma is not None:
                budget[0] -= 1
                if budget[0] < 0:
                    raise FuelExceeded(f"normalisation exceeded {fuel} steps")
                return build(rule.rhs, sigma)
        return u

    def build(r: Term, sigma) -> Term:
        if isinstance(r, Var):
            return sigma[r]
        return reduce_root(Fun(r.name, [build(a, sigma) for a in r.args]))

    def evaluate(u: Term) -> Term:
        if isinstance(u, Var):
            return u
        return reduce_root(Fun(u.name, [evaluate(a) for a in u.args]))

    return evaluate(t)


# -- complete definedness and garbage ------------------------------------

def is_completely_defined(trs: Trs) -> Optional[bool]:
    """Whether every basic term is reducible.

    Decided by pattern coverage over the constructors, which is exact for
    left-linear constructor systems.  Returns ``None`` (unknown) otherwise.
    """
    if not trs.is_constructor_trs() or not trs.is_left_linear():
        return None
    ctors = {c: trs.signature[c] for c in sorted(trs.constructors)}
    if not any(n == 0 for n in ctors.values()):
        # Without a constant there are no values, so no basic term has arguments.
        return True
    for f in sorted(trs.defined):
        rows = [tuple(r.lhs.args) for r in trs.rules_for(f)]
        if _useful(rows, trs.signature[f], ctors):
            return False
    return True


def _useful(rows: list[tuple], width: int, ctors: Mapping[str, int]) -> bool:
    """Is the all-wildcard vector of ``width`` columns not covered by ``rows``?"""
    if width == 0:
        return not rows
    heads = {r[0].name for r in rows if isinstance(r[0], Fun)}
    if heads == set(ctors):
        for c, n in ctors.items():
            spec = []
            for r in rows:
                p = r[0]
                if isinstance(p, Var):
                    spec.append(tuple(Var("_") for _ in range(n)) + r[1:])
                elif p.name == c:
                    spec.append(tuple(p.args) + r[1:])
            if _useful(spec, n + width - 1, ctors):
                return True
        return False
    default = [r[1:] for r in rows if isinstance(r[0], Var)]
    return _useful(default, width - 1, ctors)


def _check_bottom(trs: Trs, bottom: str) -> None:
    if bottom in trs.defined or trs.signature.get(bottom, 0) != 0:
        raise SignatureClash(f"symbol {bottom} is already used and cannot serve as bottom")


def normalize_with_garbage(trs: Trs, t: Term, bottom: str = BOTTOM) -> Term:
    """Replace every maximal subterm that is a normal form with a defined root
    by the constant ``bottom``."""
    _check_bottom(trs, bottom)
    ensure_recursion_limit()
    normal: dict = {}

    def walk(u: Term) -> Term:
        if isinstance(u, Var):
            return u
        if u.name in trs.defined and _is_normal(trs, u, normal):
            return Fun(bottom)
        if not u.args:
            return u
        return Fun(u.name, [walk(a) for a in u.args])

    return walk(t)


def completed_successors(trs: Trs, t: Term, bottom: str = BOTTOM) -> set[Term]:
    """Innermost steps of ``trs`` extended by the rules ``s -> bottom`` for
    every garbage normal form ``s``.

    In the completed system the normal forms are exactly the values, so the
    innermost redexes are the subterms ``f(v1, ..., vn)`` with ``f`` defined
    and value arguments.
    """
    _check_bottom(trs, bottom)
    out: set[Term] = set()

    def walk(u: Term) -> list[Term]:
        if isinstance(u, Var):
            return []
        res = []
        for i, a in enumerate(u.args):
            for b in walk(a):
                res.append(Fun(u.name, u.args[:i] + (b,) + u.args[i + 1:]))
        if not res and u.name in trs.defined:
            res = trs.root_steps(u) or [Fun(bottom)]
        return res

    out.update(walk(t))
    return out
