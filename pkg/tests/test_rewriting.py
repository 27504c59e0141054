import functools
import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spop.rewriting import (
    FuelExceeded, Rule, SignatureClash, SignatureError, Trs, completed_successors,
    derivation_height, innermost_successors, is_completely_defined, normal_forms, normalize,
    normalize_with_garbage, values_up_to,
)
from spop.synthesis import gen_family
from spop.terms import Fun, Var, match, subterms, substitute

from conftest import num

x, y = Var("x"), Var("y")


# -- oracles written straight from the definition of an innermost step -------------

def _redex_results(trs, t):
    out = []
    for rule in trs.rules:
        sigma = match(rule.lhs, t)
        if sigma is not None:
            out.append(substitute(rule.rhs, sigma))
    return out


def _is_nf(trs, t):
    return all(not _redex_results(trs, u) for u in subterms(t) if isinstance(u, Fun))


def step_oracle(trs, t):
    """Rewrite at every position whose arguments are normal forms."""
    if isinstance(t, Var):
        return []
    out = []
    if all(_is_nf(trs, a) for a in t.args):
        out.extend(_redex_results(trs, t))
    for i, a in enumerate(t.args):
        for b in step_oracle(trs, a):
            out.append(Fun(t.name, t.args[:i] + (b,) + t.args[i + 1:]))
    return out


def dh_oracle(trs, t):
    @functools.lru_cache(maxsize=None)
    def go(u):
        return max((1 + go(v) for v in step_oracle(trs, u)), default=0)
    return go(t)


def square_terms(max_depth):
    values = st.integers(0, 2).map(num)

    def extend(children):
        return st.one_of(
            st.builds(lambda a, b: Fun("plus", [a, b]), children, children),
            st.builds(lambda a, b: Fun("times", [a, b]), children, children),
            st.builds(lambda a: Fun("square", [a]), children),
            st.builds(lambda a: Fun("S", [a]), children),
        )
    return st.recursive(values, extend, max_leaves=max_depth)


# -- classification -----------------------------------------------------------------

def test_constructor_system_examples(square_trs):
    assert square_trs.is_constructor_trs()
    g = Trs([Rule(Fun("f", [Fun("g", [x])]), x), Rule(Fun("g", [x]), x)])
    assert not g.is_constructor_trs()
    assert Trs([]).is_constructor_trs()


def test_value_and_basic_examples(square_trs):
    assert square_trs.is_value(num(2))
    assert square_trs.is_basic(Fun("plus", [num(1), Fun("Z")]))
    assert not square_trs.is_basic(Fun("plus", [Fun("plus", [Fun("Z"), Fun("Z")]), Fun("Z")]))


def test_rule_requires_lhs_variables():
    with pytest.raises(ValueError):
        Rule(Fun("f", [x]), y)
    with pytest.raises(ValueError):
        Rule(x, x)


def test_signature_clash_is_reported():
    with pytest.raises(SignatureError):
        Trs([Rule(Fun("f", [x]), Fun("f", [x, x]))])


# -- innermost steps and derivation heights --------------------------------------------

def test_innermost_successor_examples(square_trs):
    assert innermost_successors(square_trs, Fun("plus", [Fun("Z"), num(1)])) == {num(1)}
    s = Fun("times", [num(2), num(1)])
    assert innermost_successors(square_trs, s) == {
        Fun("plus", [num(1), Fun("times", [num(1), num(1)])])}
    assert innermost_successors(square_trs, num(3)) == set()


@given(square_terms(5))
def test_successors_match_oracle(square_trs, t):
    assert innermost_successors(square_trs, t) == set(step_oracle(square_trs, t))


@given(square_terms(4))
def test_derivation_height_matches_oracle(square_trs, t):
    assert derivation_height(square_trs, t) == dh_oracle(square_trs, t)


@given(square_terms(5))
def test_derivation_height_decreases_along_steps(square_trs, t):
    h = derivation_height(square_trs, t)
    for u in innermost_successors(square_trs, t):
        assert h >= 1 + derivation_height(square_trs, u)


def test_derivation_height_examples(square_trs):
    assert derivation_height(square_trs, Fun("plus", [num(2), Fun("Z")])) == 3
    assert derivation_height(square_trs, num(4)) == 0
    assert derivation_height(gen_family(2), Fun("f2", [num(3, "s", "a")])) >= 9


def test_square_heights_are_frozen(square_trs):
    # small n cross-checked against the step oracle, then frozen
    for n in range(1, 6):
        t = Fun("square", [num(n)])
        assert derivation_height(square_trs, t) == dh_oracle(square_trs, t)
    heights = [derivation_height(square_trs, Fun("square", [num(n)])) for n in (1, 5, 10, 25)]
    assert heights == [5, 37, 122, 677]


def test_non_confluent_heights_take_the_longest_branch():
    a = Fun("a")
    trs = Trs([Rule(Fun("f", [x]), a), Rule(Fun("f", [x]), Fun("g", [x])),
               Rule(Fun("g", [x]), Fun("b"))])
    t = Fun("h", [Fun("f", [a]), Fun("f", [a])])
    assert derivation_height(trs, t) == dh_oracle(trs, t) == 4
    forms = normal_forms(trs, t)
    assert forms[Fun("h", [a, a])] == 2
    assert forms[Fun("h", [Fun("b"), Fun("b")])] == 4


def test_fuel_exhaustion_is_reported():
    loop = Trs([Rule(Fun("f", [x]), Fun("f", [x]))])
    with pytest.raises(FuelExceeded):
        derivation_height(loop, Fun("f", [Fun("a")]))
    grow = Trs([Rule(Fun("f", [Fun("S", [x])]), Fun("f", [x]))])
    with pytest.raises(FuelExceeded):
        derivation_height(grow, Fun("f", [num(50)]), fuel=10)
    with pytest.raises(ValueError):
        derivation_height(grow, Fun("f", [num(1)]), fuel=0)


@given(square_terms(5))
def test_normalize_reaches_a_normal_form(square_trs, t):
    u = normalize(square_trs, t)
    assert not innermost_successors(square_trs, u)
    assert u in normal_forms(square_trs, t)


# -- complete definedness and garbage ---------------------------------------------------

def _coverage_oracle(trs, depth):
    ctors = {c: trs.signature[c] for c in trs.constructors}
    values = values_up_to(ctors, depth)
    for f in trs.defined:
        for args in itertools.product(values, repeat=trs.signature[f]):
            if not trs.root_steps(Fun(f, args)):
                return False
    return True


def test_square_is_completely_defined(square_trs):
    assert is_completely_defined(square_trs) is True
    assert _coverage_oracle(square_trs, 2)


def test_partial_system_is_not_completely_defined():
    trs = Trs([Rule(Fun("f", [Fun("Z")]), Fun("Z"))], extra_symbols={"S": 1})
    assert is_completely_defined(trs) is False
    nonlinear = Trs([Rule(Fun("eq", [x, x]), Fun("T"))])
    assert is_completely_defined(nonlinear) is None


@st.composite
def pattern_systems(draw):
    """Random left-linear constructor systems over S/Z and one symbol f."""
    counter = itertools.count()

    def pattern(d):
        choice = draw(st.sampled_from(["var", "Z", "S"] if d > 0 else ["var", "Z"]))
        if choice == "var":
            return Var(f"v{next(counter)}")
        if choice == "Z":
            return Fun("Z")
        return Fun("S", [pattern(d - 1)])

    arity = draw(st.integers(1, 2))
    rules = [Rule(Fun("f", [pattern(2) for _ in range(arity)]), Fun("Z"))
             for _ in range(draw(st.integers(1, 4)))]
    return Trs(rules, extra_symbols={"S": 1, "Z": 0})


@given(pattern_systems())
def test_complete_definedness_matches_enumeration(trs):
    # patterns have depth at most 2, so values of depth 3 witness any gap
    assert is_completely_defined(trs) == _coverage_oracle(trs, 3)


def test_garbage_examples():
    trs = Trs([Rule(Fun("f", [Fun("Z")]), Fun("Z"))], extra_symbols={"S": 1})
    assert normalize_with_garbage(trs, Fun("f", [num(1)])) == Fun("bot")
    assert normalize_with_garbage(trs, num(2)) == num(2)
    assert normalize_with_garbage(trs, Fun("S", [Fun("f", [num(1)])])) == Fun("S", [Fun("bot")])
    with pytest.raises(SignatureClash):
        normalize_with_garbage(trs, num(1), bottom="f")


@given(st.recursive(st.sampled_from([Fun("Z")]),
                    lambda c: st.one_of(st.builds(lambda a: Fun("S", [a]), c),
                                        st.builds(lambda a: Fun("f", [a]), c)),
                    max_leaves=6))
def test_garbage_normalisation_is_idempotent(t):
    trs = Trs([Rule(Fun("f", [Fun("Z")]), Fun("Z"))], extra_symbols={"S": 1})
    once = normalize_with_garbage(trs, t)
    assert normalize_with_garbage(trs, once) == once
    for u in subterms(once):
        if isinstance(u, Fun) and u.name == "f":
            assert trs.root_steps(u) or not _is_nf(trs, u)


def test_completed_successors_send_garbage_to_bottom():
    trs = Trs([Rule(Fun("f", [Fun("Z")]), Fun("Z"))], extra_symbols={"S": 1})
    assert completed_successors(trs, Fun("S", [Fun("f", [num(1)])])) == {Fun("S", [Fun("bot")])}
    assert completed_successors(trs, Fun("f", [Fun("Z")])) == {Fun("Z")}
    assert completed_successors(trs, num(2)) == set()


def test_values_up_to_counts():
    assert values_up_to({"S": 1, "Z": 0}, 3) == [num(0), num(1), num(2), num(3)]
    trees = values_up_to({"cons": 2, "nil": 0, "a": 0}, 2)
    assert len(trees) == len(set(trees)) == 38
    assert all(t.depth <= 2 for t in trees)
