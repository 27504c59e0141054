"""The small polynomial path order and its parameter-substitution variant.

Both orders compare terms whose defined symbols separate normal from safe
argument positions.  A :class:`Certificate` fixes the precedence, the symbol
kinds and the normal positions; :class:`PathOrder` decides ``s > t`` for it
and returns an explicit :class:`Proof` tree that :func:`replay` re-checks.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .rewriting import Rule, Trs
from .terms import (
    Fun, Kind, Precedence, Symbol, Term, Var, check_admissible,
    normal_subterm_gt, recursion_depth, safe_canonical, safe_equivalent, subterms,
)

log = logging.getLogger(__name__)

__all__ = [
    "SPOP", "SPOP_PS", "VARIANTS", "Certificate", "Proof", "NotGreater", "PathOrder",
    "spop_gt", "spop_ps_gt", "check_compatibility", "DegreeReport", "IncompatibleRule",
    "CertificateError", "ReplayError", "replay", "bound_string",
]

SPOP = "spop"
SPOP_PS = "spop_ps"
VARIANTS = (SPOP, SPOP_PS)


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    precedence: Precedence
    symbols: Mapping[str, Symbol]
    variant: str = SPOP

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise CertificateError(f"unknown variant {self.variant!r}")

    @classmethod
    def build(cls, trs: Trs, precedence: Precedence, recursive: Sequence[str],
              normal: Mapping[str, Sequence[int]], variant: str = SPOP) -> "Certificate":
        """Assemble a certificate for ``trs``.

        ``normal`` maps defined symbols to 0-based normal positions; defined
        symbols left out have only safe positions.
        """
        unknown = (set(recursive) | set(normal)) - trs.defined
        if unknown:
            raise CertificateError(f"not defined symbols of the system: {sorted(unknown)}")
        symbols = {}
        for name, arity in trs.signature.items():
            if name in trs.defined:
                kind = Kind.RECURSIVE if name in recursive else Kind.COMPOSITIONAL
                symbols[name] = Symbol(name, arity, kind, frozenset(normal.get(name, ())))
            else:
                symbols[name] = Symbol(name, arity, Kind.CONSTRUCTOR)
        return cls(precedence, symbols, variant)

    @property
    def kinds(self) -> dict[str, Kind]:
        return {f: s.kind for f, s in self.symbols.items()}

    @property
    def recursive(self) -> frozenset:
        return frozenset(f for f, s in self.symbols.items() if s.kind is Kind.RECURSIVE)

    def is_defined(self, f: str) -> bool:
        return self.symbols[f].defined

    def recursion_depth(self, f: str) -> int:
        return recursion_depth(self.precedence, self.kinds, f)

    def degree(self) -> int:
        return max((self.recursion_depth(f) for f, s in self.symbols.items() if s.defined),
                   default=0)

    def with_variant(self, variant: str) -> "Certificate":
        return Certificate(self.precedence, self.symbols, variant)

    def with_constant(self, name: str) -> "Certificate":
        """Add a fresh constructor constant at the bottom of the precedence."""
        if name in self.symbols:
            raise CertificateError(f"symbol {name} already present")
        classes = list(self.precedence.classes)
        if classes and all(self.symbols[f].kind is Kind.CONSTRUCTOR for f in classes[-1]):
            classes[-1] = classes[-1] | {name}
        else:
            classes.append(frozenset([name]))
        symbols = dict(self.symbols)
        symbols[name] = Symbol(name, 0, Kind.CONSTRUCTOR)
        return Certificate(Precedence(tuple(classes)), symbols, self.variant)

    def validate(self, trs: Optional[Trs] = None) -> None:
        """Check admissibility, and agreement with ``trs`` when given."""
        check_admissible(self.precedence, self.kinds)
        if trs is None:
            return
        for name, arity in trs.signature.items():
            sym = self.symbols.get(name)
            if sym is None:
                raise CertificateError(f"symbol {name} missing from certificate")
            if sym.arity != arity:
                raise CertificateError(f"symbol {name} has arity {arity}, certificate says {sym.arity}")
            if sym.defined != (name in trs.defined):
                what = "defined" if name in trs.defined else "a constructor"
                raise CertificateError(f"symbol {name} is {what} in the system")
        for name, normal in trs.declared_normal.items():
            if self.symbols[name].normal != normal:
                raise CertificateError(f"normal positions of {name} disagree with the system")


@dataclass(frozen=True)
class Proof:
    """One node of an orientation proof.

    ``clause`` is ``st``, ``ia`` or ``ts`` for strict steps, ``eq`` for a
    safe-equivalence leaf and ``nsub`` for a normal-subterm leaf.  For ``ts``
    the ``pairs`` field lists the (lhs position, rhs position) matching used
    on normal and safe arguments; for ``st`` it holds the chosen argument.
    """

    clause: str
    lhs: Term
    rhs: Term
    premises: tuple = ()
    pairs: tuple = ()

    def __bool__(self):
        return True

    def render(self, indent: int = 0) -> str:
        lines = [f"{'  ' * indent}{self.lhs} > {self.rhs}  [{self.clause}]"
                 if self.clause not in ("eq", "nsub")
                 else f"{'  ' * indent}{self.lhs} {'~' if self.clause == 'eq' else '|>n'} {self.rhs}"]
        for p in self.premises:
            lines.append(p.render(indent + 1))
        return "\n".join(lines)


@dataclass(frozen=True)
class NotGreater:
    """Failed comparison; ``reason`` names the first obligation that failed."""

    lhs: Term
    rhs: Term
    reason: str

    def __bool__(self):
        return False


class PathOrder:
    """Decision procedure for one certificate.

    ``variant`` defaults to the certificate's.  With ``strict_safe`` the
    recursive-call clause of the plain order also demands a strict decrease
    on the safe tuple; by default the safe tuple only has to decrease weakly.
    """

    def __init__(self, cert: Certificate, variant: Optional[str] = None, strict_safe: bool = False):
        self.cert = cert
        self.prec = cert.precedence
        self.symbols = cert.symbols
        self.variant = variant or cert.variant
        if self.variant not in VARIANTS:
            raise CertificateError(f"unknown variant {self.variant!r}")
        self.strict_safe = strict_safe
        self._gt: dict = {}
        self._keys: dict = {}

    # -- helpers ---------------------------------------------------------
    def key(self, t: Term):
        return safe_canonical(self.prec, self.symbols, t, self._keys)

    def _defined(self, f: str) -> bool:
        return self.symbols[f].defined

    def _outside(self, f: str, t: Term, defined_only: bool) -> bool:
        """Does ``t`` contain a (defined) symbol not strictly below ``f``?"""
        for u in subterms(t):
            if isinstance(u, Fun) and (self._defined(u.name) or not defined_only):
                if not self.prec.gt(f, u.name):
                    return True
        return False

    def _nsub(self, s: Fun, t: Term) -> bool:
        target = self.key(t)
        stack = [s]
        while stack:
            u = stack.pop()
            sym = self.symbols[u.name]
            positions = sym.normal_sorted if sym.defined else range(len(u.args))
            for i in positions:
                a = u.args[i]
                if self.key(a) == target:
                    return True
                if isinstance(a, Fun):
                    stack.append(a)
        return False

    # -- the order -------------------------------------------------------
    def ge(self, s: Term, t: Term):
        if self.key(s) == self.key(t):
            return Proof("eq", s, t)
        return self.gt(s, t)

    def gt(self, s: Term, t: Term):
        k = (s, t)
        hit = self._gt.get(k)
        if hit is None:
            hit = self._compare(s, t)
            self._gt[k] = hit
        return hit

    def _compare(self, s: Term, t: Term):
        if isinstance(s, Var):
            return NotGreater(s, t, "left-hand side is a variable")
        for i, a in enumerate(s.args):
            sub = self.ge(a, t)
            if sub:
                return Proof("st", s, t, (sub,), (i,))
        reasons = ["st: no argument is greater or equivalent"]
        if isinstance(t, Fun):
            for clause in (self._ia, self._ts):
                res = clause(s, t)
                if isinstance(res, Proof):
                    return res
                if res is not None:
                    reasons.append(res)
        return NotGreater(s, t, "; ".join(reasons))

    def _ia(self, s: Fun, t: Fun):
        f, g = s.name, t.name
        if not self._defined(f):
            return None
        if not self.prec.gt(f, g):
            return f"ia: {g} is not below {f}"
        gsym = self.symbols[g]
        premises = []
        for j in gsym.normal_sorted:
            if not self._nsub(s, t.args[j]):
                return f"ia: normal argument {t.args[j]} is not a normal subterm of {s}"
            premises.append(Proof("nsub", s, t.args[j]))
        for j in gsym.safe_sorted:
            sub = self.gt(s, t.args[j])
            if not sub:
                return f"ia: safe argument {t.args[j]} is not smaller than {s}"
            premises.append(sub)
        ps = self.variant == SPOP_PS
        outside = [a for a in t.args if self._outside(f, a, defined_only=not ps)]
        if len(outside) > 1:
            return f"ia: {len(outside)} arguments contain symbols not below {f}"
        return Proof("ia", s, t, tuple(premises))

    def _ts(self, s: Fun, t: Fun):
        f, g = s.name, t.name
        fsym, gsym = self.symbols[f], self.symbols[g]
        if fsym.kind is not Kind.RECURSIVE:
            return None
        if not self.prec.equiv(f, g):
            return f"ts: {g} is not equivalent to {f}"
        if len(fsym.normal) != len(gsym.normal) or len(fsym.safe) != len(gsym.safe):
            return f"ts: {f} and {g} split their arguments differently"
        sn, ss = fsym.normal_sorted, fsym.safe_sorted
        tn, ts_ = gsym.normal_sorted, gsym.safe_sorted
        normal = self._product(s, t, sn, tn, strict=True)
        if normal is None:
            return "ts: normal arguments do not decrease"
        ps = self.variant == SPOP_PS
        if ps:
            safe_premises = []
            for j in ts_:
                sub = self.gt(s, t.args[j])
                if not sub:
                    return f"ts: safe argument {t.args[j]} is not smaller than {s}"
                if self._outside(f, t.args[j], defined_only=False):
                    return f"ts: safe argument {t.args[j]} uses symbols not below {f}"
                safe_premises.append(sub)
            return Proof("ts", s, t, tuple(normal[1]) + tuple(safe_premises),
                         (tuple(normal[0]), ()))
        safe = self._product(s, t, ss, ts_, strict=self.strict_safe)
        if safe is None:
            return "ts: safe arguments do not decrease"
        return Proof("ts", s, t, tuple(normal[1]) + tuple(safe[1]),
                     (tuple(normal[0]), tuple(safe[0])))

    def _product(self, s: Fun, t: Fun, spos, tpos, strict: bool):
        """Find a bijection from ``spos`` to ``tpos`` with ``s_i >= t_j``
        pointwise (and some ``>`` when ``strict``).  Returns the pairs and
        their proofs, or ``None``."""
        n = len(spos)
        rel = [[self.ge(s.args[i], t.args[j]) for j in tpos] for i in spos]
        used = [False] * n
        chosen: list = []

        def search(i: int, have_strict: bool):
            if i == n:
                return have_strict or not strict
            for j in range(n):
                if used[j] or not rel[i][j]:
                    continue
                used[j] = True
                chosen.append(j)
                if search(i + 1, have_strict or rel[i][j].clause != "eq"):
                    return True
                used[j] = False
                chosen.pop()
            return False

        if not search(0, False):
            return None
        pairs = [(spos[i], tpos[j]) for i, j in enumerate(chosen)]
        return pairs, [rel[i][j] for i, j in enumerate(chosen)]


def spop_gt(cert: Certificate, s: Term, t: Term, strict_safe: bool = False):
    return PathOrder(cert, SPOP, strict_safe).gt(s, t)


def spop_ps_gt(cert: Certificate, s: Term, t: Term):
    return PathOrder(cert, SPOP_PS).gt(s, t)


# -- proof replay -----------------------------------------------------------

class ReplayError(AssertionError):
    pass


def replay(cert: Certificate, proof: Proof, variant: Optional[str] = None,
           strict_safe: bool = False) -> None:
    """Re-check every node of ``proof`` directly against the clause
    conditions, using the matching-based equivalence rather than the
    canonical keys of :class:`PathOrder`."""
    variant = variant or cert.variant
    prec, symbols = cert.precedence, cert.symbols

    def fail(node, msg):
        raise ReplayError(f"{node.clause} node {node.lhs} > {node.rhs}: {msg}")

    def seq(x, y):
        return safe_equivalent(prec, symbols, x, y)

    def check_ge(node, s, t):
        if node.lhs != s or node.rhs != t:
            fail(node, f"premise compares {node.lhs} and {node.rhs}, expected {s} and {t}")
        visit(node)

    def outside(f, u, defined_only):
        return any(isinstance(v, Fun) and (symbols[v.name].defined or not defined_only)
                   and not prec.gt(f, v.name) for v in subterms(u))

    def visit(node: Proof):
        s, t = node.lhs, node.rhs
        if node.clause == "eq":
            if not seq(s, t):
                fail(node, "terms are not safe-equivalent")
            return
        if node.clause == "nsub":
            if not normal_subterm_gt(prec, symbols, s, t):
                fail(node, "not a normal subterm")
            return
        if not isinstance(s, Fun):
            fail(node, "left-hand side is a variable")
        if node.clause == "st":
            (i,) = node.pairs
            (sub,) = node.premises
            if sub.clause == "eq" or sub.clause in ("st", "ia", "ts"):
                check_ge(sub, s.args[i], t)
            else:
                fail(node, "bad premise")
            return
        f = s.name
        if not isinstance(t, Fun):
            fail(node, "right-hand side is a variable")
        g = t.name
        fsym, gsym = symbols[f], symbols[g]
        if node.clause == "ia":
            if not fsym.defined or not prec.gt(f, g):
                fail(node, "root of the right-hand side is not below a defined root")
            expected = list(gsym.normal_sorted) + list(gsym.safe_sorted)
            if len(node.premises) != len(expected):
                fail(node, "wrong number of premises")
            for j, sub in zip(expected, node.premises):
                want = "nsub" if j in gsym.normal else None
                if want and sub.clause != "nsub":
                    fail(node, "normal argument needs a normal-subterm premise")
                if not want and sub.clause not in ("st", "ia", "ts"):
                    fail(node, "safe argument needs a strict premise")
                check_ge(sub, s, t.args[j])
            ps = variant == SPOP_PS
            if sum(outside(f, a, not ps) for a in t.args) > 1:
                fail(node, "more than one argument leaves the lower part of the precedence")
            return
        if node.clause == "ts":
            if fsym.kind is not Kind.RECURSIVE or not prec.equiv(f, g):
                fail(node, "roots are not equivalent recursive symbols")
            npairs, spairs = node.pairs
            if (sorted(i for i, _ in npairs) != list(fsym.normal_sorted)
                    or sorted(j for _, j in npairs) != list(gsym.normal_sorted)):
                fail(node, "normal pairing is not a bijection of normal positions")
            nprem = node.premises[:len(npairs)]
            for (i, j), sub in zip(npairs, nprem):
                check_ge(sub, s.args[i], t.args[j])
            if all(sub.clause == "eq" for sub in nprem):
                fail(node, "no strict decrease on normal arguments")
            rest = node.premises[len(npairs):]
            if variant == SPOP_PS:
                safe_t = list(gsym.safe_sorted)
                if len(rest) != len(safe_t):
                    fail(node, "wrong number of safe premises")
                for j, sub in zip(safe_t, rest):
                    if sub.clause == "eq":
                        fail(node, "safe argument needs a strict premise")
                    check_ge(sub, s, t.args[j])
                    if outside(f, t.args[j], False):
                        fail(node, "safe argument uses symbols not below the root")
            else:
                if (sorted(i for i, _ in spairs) != list(fsym.safe_sorted)
                        or sorted(j for _, j in spairs) != list(gsym.safe_sorted)):
                    fail(node, "safe pairing is not a bijection of safe positions")
                for (i, j), sub in zip(spairs, rest):
                    check_ge(sub, s.args[i], t.args[j])
                if strict_safe and spairs and all(sub.clause == "eq" for sub in rest):
                    fail(node, "no strict decrease on safe arguments")
                if strict_safe and not spairs:
                    fail(node, "empty safe tuple cannot decrease strictly")
            return
        fail(node, "unknown clause")

    visit(proof)


# -- checking whole systems ---------------------------------------------------

class IncompatibleRule(Exception):
    def __init__(self, rule: Rule, reason: str):
        super().__init__(f"rule {rule} is not oriented: {reason}")
        self.rule = rule
        self.reason = reason


@dataclass
class DegreeReport:
    degree: int
    recursion_depths: dict
    proofs: list = field(default_factory=list)

    @property
    def bound(self) -> str:
        return bound_string(self.degree)


def bound_string(degree: int) -> str:
    if degree == 0:
        return "O(1)"
    if degree == 1:
        return "O(n)"
    return f"O(n^{degree})"


def check_compatibility(trs: Trs, cert: Certificate, variant: Optional[str] = None,
                        strict_safe: bool = False) -> DegreeReport:
    """Orient every rule of ``trs`` and report the certified degree.

    Raises :class:`IncompatibleRule` for the first rule that cannot be
    oriented, :class:`CertificateError` or ``InadmissiblePrecedence`` for a
    malformed certificate and ``ValueError`` for a non-constructor system.
    """
    if not trs.is_constructor_trs():
        raise ValueError("not a constructor system")
    cert.validate(trs)
    order = PathOrder(cert, variant, strict_safe)
    proofs = []
    for rule in trs.rules:
        res = order.gt(rule.lhs, rule.rhs)
        if not res:
            raise IncompatibleRule(rule, res.reason)
        proofs.append((rule, res))
    depths = {f: cert.recursion_depth(f) for f in sorted(trs.defined)}
    return DegreeReport(max(depths.values(), default=0), depths, proofs)
