"""First-order terms, symbol tiers, precedences and the equivalences built on them.

Terms are immutable and hashable.  Structural hash, depth and size are
computed once at construction so that deep terms (long numerals, say) can be
used as dictionary keys without repeated traversals.

Argument positions are 0-based throughout the library; the text formats use
1-based positions and convert at the boundary.
"""
from __future__ import annotations

import enum
import sys
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence, Union

__all__ = [
    "Var", "Fun", "Term", "Kind", "Symbol", "Precedence",
    "depth", "size", "subterms", "proper_subterms", "variables", "symbols_of",
    "substitute", "match", "rank", "recursion_depth", "check_admissible",
    "equivalent", "safe_equivalent", "canonical", "safe_canonical",
    "normal_subterm_gt", "InadmissiblePrecedence", "ensure_recursion_limit",
]


def ensure_recursion_limit(limit: int = 20000) -> None:
    """Raise the interpreter recursion limit; numerals of a few hundred
    successors nest that deep and every structural walk is recursive."""
    if sys.getrecursionlimit() < limit:
        sys.setrecursionlimit(limit)


class Var:
    __slots__ = ("name", "_hash")

    depth = 0
    size = 1
    is_var = True

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("var", name))

    def __eq__(self, other):
        return isinstance(other, Var) and other.name == self.name

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return str(self) < str(other)

    def __repr__(self):
        return f"Var({self.name!r})"

    def __str__(self):
        return self.name


class Fun:
    """Application of a function symbol to a tuple of arguments."""

    __slots__ = ("name", "args", "_hash", "depth", "size")

    is_var = False

    def __init__(self, name: str, args: Sequence["Term"] = ()):
        self.name = name
        self.args = tuple(args)
        self._hash = hash((name, self.args))
        if self.args:
            self.depth = 1 + max(a.depth for a in self.args)
            self.size = 1 + sum(a.size for a in self.args)
        else:
            self.depth = 0
            self.size = 1

    @property
    def arity(self) -> int:
        return len(self.args)

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, Fun) and self._hash == other._hash
                and self.name == other.name and self.args == other.args)

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return str(self) < str(other)

    def __repr__(self):
        return f"Fun({self.name!r}, {list(self.args)!r})"

    def __str__(self):
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


Term = Union[Var, Fun]


def depth(t: Term) -> int:
    return t.depth


def size(t: Term) -> int:
    return t.size


def subterms(t: Term) -> Iterator[Term]:
    """All subterms of ``t`` (including ``t``), pre-order, duplicates kept."""
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, Fun):
            stack.extend(reversed(u.args))


def proper_subterms(t: Term) -> Iterator[Term]:
    if isinstance(t, Fun):
        for a in t.args:
            yield from subterms(a)


def variables(t: Term) -> set[Var]:
    return {u for u in subterms(t) if isinstance(u, Var)}


def symbols_of(t: Term) -> set[str]:
    return {u.name for u in subterms(t) if isinstance(u, Fun)}


def substitute(t: Term, sigma: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return sigma.get(t, t)
    if not t.args:
        return t
    return Fun(t.name, [substitute(a, sigma) for a in t.args])


def match(pattern: Term, t: Term, sigma: Optional[dict] = None) -> Optional[dict]:
    """Syntactic matching: a substitution ``sigma`` with ``pattern sigma = t``."""
    sigma = {} if sigma is None else sigma
    stack = [(pattern, t)]
    while stack:
        p, u = stack.pop()
        if isinstance(p, Var):
            bound = sigma.get(p)
            if bound is None:
                sigma[p] = u
            elif bound != u:
                return None
        elif isinstance(u, Fun) and p.name == u.name and len(p.args) == len(u.args):
            stack.extend(zip(p.args, u.args))
        else:
            return None
    return sigma


class Kind(enum.Enum):
    CONSTRUCTOR = "constructor"
    RECURSIVE = "recursive"
    COMPOSITIONAL = "compositional"

    @property
    def defined(self) -> bool:
        return self is not Kind.CONSTRUCTOR


@dataclass(frozen=True)
class Symbol:
    """A function symbol together with its tier information.

    ``normal`` holds the 0-based normal argument positions; every other
    position is safe.  Constructors have no normal positions.
    """

    name: str
    arity: int
    kind: Kind
    normal: frozenset = frozenset()

    def __post_init__(self):
        if self.kind is Kind.CONSTRUCTOR and self.normal:
            raise ValueError(f"constructor {self.name} cannot have normal positions")
        if any(not 0 <= i < self.arity for i in self.normal):
            raise ValueError(f"normal positions of {self.name} out of range")

    @property
    def safe(self) -> frozenset:
        return frozenset(range(self.arity)) - self.normal

    @property
    def normal_sorted(self) -> tuple:
        return tuple(sorted(self.normal))

    @property
    def safe_sorted(self) -> tuple:
        return tuple(sorted(self.safe))

    @property
    def defined(self) -> bool:
        return self.kind.defined


class InadmissiblePrecedence(ValueError):
    pass


@dataclass(frozen=True)
class Precedence:
    """A total preorder on symbols given as an ordered partition.

    ``classes[0]`` is the highest class.  ``f > g`` holds when the class of
    ``f`` comes strictly before the class of ``g``; ``f ~ g`` when they share
    a class.
    """

    classes: tuple
    _level: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        classes = tuple(frozenset(c) for c in self.classes)
        object.__setattr__(self, "classes", classes)
        level = {}
        n = len(classes)
        for idx, cls in enumerate(classes):
            if not cls:
                raise ValueError("empty precedence class")
            for f in cls:
                if f in level:
                    raise ValueError(f"symbol {f} occurs in two precedence classes")
                level[f] = n - 1 - idx
        object.__setattr__(self, "_level", level)

    @classmethod
    def from_chain(cls, *classes) -> "Precedence":
        """``Precedence.from_chain('square', 'times', 'plus', ('S', 'Z'))``."""
        return cls(tuple(frozenset([c]) if isinstance(c, str) else frozenset(c)
                         for c in classes))

    @property
    def symbols(self) -> frozenset:
        return frozenset(self._level)

    def __contains__(self, f: str) -> bool:
        return f in self._level

    def level(self, f: str) -> int:
        """0 for the lowest class, increasing upwards."""
        return self._level[f]

    def gt(self, f: str, g: str) -> bool:
        return self._level[f] > self._level[g]

    def equiv(self, f: str, g: str) -> bool:
        return self._level[f] == self._level[g]

    def below(self, f: str) -> list[str]:
        lf = self._level[f]
        return sorted(g for g, lg in self._level.items() if lg < lf)

    def class_of(self, f: str) -> frozenset:
        return self.classes[len(self.classes) - 1 - self._level[f]]

    def __str__(self):
        return " > ".join(" ~ ".join(sorted(c)) for c in self.classes)


def rank(p: Precedence, f: str) -> int:
    # In a total preorder the longest chain below f visits every lower class.
    return p.level(f) + 1


def recursion_depth(p: Precedence, kinds: Mapping[str, Kind], f: str) -> int:
    lf = p.level(f)
    lower = {p.level(g) for g, k in kinds.items()
             if k is Kind.RECURSIVE and g in p and p.level(g) < lf}
    return len(lower) + (1 if kinds[f] is Kind.RECURSIVE else 0)


def check_admissible(p: Precedence, kinds: Mapping[str, Kind]) -> None:
    """Raise :class:`InadmissiblePrecedence` unless constructors sit below
    every defined symbol and each class is kind-homogeneous."""
    missing = set(kinds) - p.symbols
    if missing:
        raise InadmissiblePrecedence(f"symbols missing from precedence: {sorted(missing)}")
    for cls in p.classes:
        ks = {kinds[f] for f in cls if f in kinds}
        if len(ks) > 1:
            raise InadmissiblePrecedence(
                f"class {{{', '.join(sorted(cls))}}} mixes kinds "
                f"{sorted(k.value for k in ks)}")
    for f, k in kinds.items():
        if k is Kind.CONSTRUCTOR and any(g in kinds for g in p.below(f)):
            raise InadmissiblePrecedence(f"constructor {f} lies above {p.below(f)[0]}")


# -- equivalence of terms -------------------------------------------------

def _bipartite_perfect(n: int, ok: Callable[[int, int], bool]) -> bool:
    """Perfect matching on an n x n bipartite graph by augmenting paths."""
    match_of: list[Optional[int]] = [None] * n

    def augment(i, seen):
        for j in range(n):
            if j not in seen and ok(i, j):
                seen.add(j)
                if match_of[j] is None or augment(match_of[j], seen):
                    match_of[j] = i
                    return True
        return False

    return all(augment(i, set()) for i in range(n))


def _args_match(xs, ys, rel) -> bool:
    if len(xs) != len(ys):
        return False
    return _bipartite_perfect(len(xs), lambda i, j: rel(xs[i], ys[j]))


def equivalent(p: Precedence, s: Term, t: Term) -> bool:
    """``s`` and ``t`` agree up to equivalent root symbols and argument order."""
    if s == t:
        return True
    if isinstance(s, Var) or isinstance(t, Var):
        return False
    if len(s.args) != len(t.args) or not p.equiv(s.name, t.name):
        return False
    return _args_match(s.args, t.args, lambda a, b: equivalent(p, a, b))


def _partition(symbols: Mapping[str, Symbol], t: Fun):
    sym = symbols[t.name]
    return ([t.args[i] for i in sym.normal_sorted], [t.args[i] for i in sym.safe_sorted])


def safe_equivalent(p: Precedence, symbols: Mapping[str, Symbol], s: Term, t: Term) -> bool:
    """Like :func:`equivalent`, but argument permutations keep normal
    positions normal and safe positions safe."""
    if s == t:
        return True
    if isinstance(s, Var) or isinstance(t, Var):
        return False
    if len(s.args) != len(t.args) or not p.equiv(s.name, t.name):
        return False
    sn, ss = _partition(symbols, s)
    tn, ts = _partition(symbols, t)
    rel = lambda a, b: safe_equivalent(p, symbols, a, b)
    return _args_match(sn, tn, rel) and _args_match(ss, ts, rel)


def canonical(p: Precedence, t: Term, cache: Optional[dict] = None):
    """A key with ``canonical(s) == canonical(t)`` iff ``equivalent(s, t)``."""
    if cache is not None:
        hit = cache.get(t)
        if hit is not None:
            return hit
    if isinstance(t, Var):
        key = (0, t.name)
    else:
        key = (1, p.level(t.name), tuple(sorted(canonical(p, a, cache) for a in t.args)))
    if cache is not None:
        cache[t] = key
    return key


def safe_canonical(p: Precedence, symbols: Mapping[str, Symbol], t: Term,
                   cache: Optional[dict] = None):
    """A key with equality exactly when the terms are safe-equivalent."""
    if cache is not None:
        hit = cache.get(t)
        if hit is not None:
            return hit
    if isinstance(t, Var):
        key = (0, t.name)
    else:
        sn, ss = _partition(symbols, t)
        key = (1, p.level(t.name),
               tuple(sorted(safe_canonical(p, symbols, a, cache) for a in sn)),
               tuple(sorted(safe_canonical(p, symbols, a, cache) for a in ss)))
    if cache is not None:
        cache[t] = key
    return key


def normal_subterm_gt(p: Precedence, symbols: Mapping[str, Symbol], s: Term, t: Term) -> bool:
    """Decide whether ``t`` is reachable from ``s`` through normal argument
    positions of defined symbols (constructor positions are unrestricted),
    ending in a safe-equivalent subterm."""
    target = safe_canonical(p, symbols, t)
    return _normal_subterm_key(p, symbols, s, target, {})


def _normal_subterm_key(p, symbols, s, target, cache) -> bool:
    if isinstance(s, Var):
        return False
    sym = symbols[s.name]
    positions = sym.normal_sorted if sym.defined else range(len(s.args))
    for i in positions:
        a = s.args[i]
        if safe_canonical(p, symbols, a, cache) == target:
            return True
        if _normal_subterm_key(p, symbols, a, target, cache):
            return True
    return False
