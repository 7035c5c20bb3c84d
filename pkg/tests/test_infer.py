import itertools
import random

from extrec.checker import validate
from extrec.infer import FreshSupply, InferFailure, infer, instantiate, supply_for
from extrec.kinding import has_kind
from extrec.normalize import equiv, normalize, subst_equal
from extrec.parser import parse_env_file, parse_term
from extrec.subst import (
    KindedSubstitution,
    apply_assignment,
    closure,
    generic_instance,
    respects,
)
from extrec.syntax import (
    Abs,
    App,
    Arrow,
    BOOL,
    BaseType,
    Const,
    Contr,
    Ext,
    Extend,
    INT,
    Modify,
    PolyType,
    RecordLit,
    RecordType,
    Remove,
    Select,
    TyVar,
    UKind,
    Var,
    poly,
    record_kind,
)
from gen import gen_closed_term

ENV_42 = """
'a1 :: << || l: 'a2>>
'a2 :: U
x : 'a1
y : 'a2
"""


def _setup_42():
    kenv, tenv, venv = parse_env_file(ENV_42)
    a1 = venv.names["a1"]
    a2 = venv.names["a2"]
    return kenv, tenv, venv, a1, a2


def test_worked_inference_example():
    kenv, tenv, venv, a1, a2 = _setup_42()
    fresh = lambda: FreshSupply(venv.next_free_uid())
    v3, v4, v5, v6 = (TyVar(u) for u in range(3, 7))

    res = infer(kenv, tenv, parse_term("extend(x, l, y).l"), fresh())
    assert res.type == a2
    assert subst_equal(res.subst, {v3: a2, v4: a1, v5: a2, v6: Ext(a1, "l", a2)})
    assert res.kenv == kenv

    res2 = infer(kenv, tenv, parse_term("extend(x, l, y)"), fresh())
    assert res2.type == Ext(a1, "l", a2)
    assert subst_equal(res2.subst, {v3: a2, v4: a1})

    assert infer(kenv, tenv, parse_term("x"), fresh()).type == a1
    assert infer(kenv, tenv, parse_term("x"), fresh()).subst == {}
    assert infer(kenv, tenv, parse_term("y"), fresh()).type == a2


def test_identity_function():
    res = infer({}, {}, parse_term("\\x. x"), FreshSupply(1))
    assert res.subst == {}
    a = res.type.dom
    assert res.type == Arrow(a, a)
    assert res.kenv == {a: UKind()}


def test_selector_principal_type():
    res = infer({}, {}, parse_term("\\x. x.l"), FreshSupply(1))
    _, principal = closure(res.kenv, {}, res.type)
    a, b = TyVar(-1), TyVar(-2)
    expected = PolyType(
        ((a, UKind()), (b, record_kind([("l", a)]))), Arrow(b, a)
    )
    assert principal == expected


def test_record_ops_inference():
    res = infer({}, {}, parse_term("remove({l=1, m=2}, l)"), FreshSupply(1))
    assert res.type == RecordType((("m", INT),))
    res2 = infer({}, {}, parse_term("modify({l=1}, l, 2)"), FreshSupply(1))
    assert res2.type == RecordType((("l", INT),))
    res3 = infer({}, {}, parse_term("extend({m=true}, l, 1)"), FreshSupply(1))
    assert res3.type == RecordType((("l", INT), ("m", BOOL)))
    res4 = infer({}, {}, parse_term("let f = \\r. r.l in {a = f {l=1}, b = f {l=true, m=2}}"), FreshSupply(1))
    assert res4.type == RecordType((("a", INT), ("b", BOOL)))


def test_negative_suite():
    cases = {
        "extend({l=1}, l, 2)": ("extend", "kind_clash"),
        "remove({}, l)": ("remove", "kind_clash"),
        "{l=1}.m": ("select", "kind_clash"),
        "\\x. x x": ("app", "occurs_check"),
    }
    for src, (rule, reason) in cases.items():
        res = infer({}, {}, parse_term(src), FreshSupply(1))
        assert isinstance(res, InferFailure), src
        assert res.rule == rule, (src, res)
        assert res.reason == reason, (src, res)


def test_unbound_variable_failure():
    res = infer({}, {}, Var("ghost"), FreshSupply(1))
    assert isinstance(res, InferFailure)
    assert res.reason == "unbound_variable"


def test_extend_base_occurs_failure():
    res = infer({}, {}, parse_term("\\x. extend(x, l, x)"), FreshSupply(1))
    assert isinstance(res, InferFailure)
    assert res.reason == "base_in_value"


def test_extend_base_occurs_caught_after_later_aliasing():
    # the base/value aliasing only appears once sibling applications force
    # x and y together, after the extension itself was typed
    src = "\\f. \\x. \\y. {a = extend(x, l, y), b = f x y, c = f y x}"
    res = infer({}, {}, parse_term(src), FreshSupply(1), want_trace=True)
    assert isinstance(res, InferFailure)
    assert res.reason == "base_in_value"
    control = "\\f. \\x. \\y. {a = extend(x, l, y), b = f x y}"
    assert not isinstance(infer({}, {}, parse_term(control), FreshSupply(1)), InferFailure)


def test_instantiate_examples():
    a, b = TyVar(1, "a"), TyVar(2, "b")
    fs = FreshSupply(10)
    k1, t1 = instantiate({}, PolyType(((a, UKind()),), Arrow(a, a)), fs)
    fresh = t1.dom
    assert fresh.uid >= 10 and t1 == Arrow(fresh, fresh)
    assert k1 == {fresh: UKind()}

    sigma = PolyType(((a, UKind()), (b, record_kind([("l", a)]))), Arrow(b, a))
    k2, t2 = instantiate({}, sigma, fs)
    fa, fb = t2.cod, t2.dom
    assert k2 == {fa: UKind(), fb: record_kind([("l", fa)])}

    assert instantiate({}, poly(INT), fs) == ({}, INT)


def test_result_type_is_canonical():
    rng = random.Random(89)
    for _ in range(150):
        term = gen_closed_term(rng, rng.randint(1, 5))
        res = infer({}, {}, term, FreshSupply(1))
        if isinstance(res, InferFailure):
            continue
        assert normalize(res.type) == res.type


def test_deterministic_up_to_renaming():
    rng = random.Random(97)
    for _ in range(60):
        term = gen_closed_term(rng, rng.randint(1, 4))
        r1 = infer({}, {}, term, FreshSupply(1))
        r2 = infer({}, {}, term, FreshSupply(500))
        assert isinstance(r1, InferFailure) == isinstance(r2, InferFailure)
        if isinstance(r1, InferFailure):
            assert r1.reason == r2.reason
            continue
        p1 = closure(r1.kenv, {}, r1.type)[1]
        p2 = closure(r2.kenv, {}, r2.type)[1]
        assert p1 == p2  # polytype equality is alpha-invariant


def test_trace_context_matches_substituted_gamma():
    kenv, tenv, venv, a1, a2 = _setup_42()
    res = infer(kenv, tenv, parse_term("extend(x, l, y).l"),
                FreshSupply(venv.next_free_uid()), want_trace=True)
    want = apply_assignment(res.subst, tenv)
    got = res.trace.judgment.tenv
    assert got.keys() == want.keys()
    for x in want:
        assert got[x] == want[x]


def test_soundness_sample():
    rng = random.Random(101)
    accepted = 0
    for _ in range(200):
        term = gen_closed_term(rng, rng.randint(1, 6))
        res = infer({}, {}, term, FreshSupply(1), want_trace=True)
        if isinstance(res, InferFailure):
            continue
        accepted += 1
        assert validate(res.trace) is None
        assert respects(KindedSubstitution(res.kenv, res.subst), {})
    assert accepted > 40


# ---------------------------------------------------------------------------
# Desk-scale principality: every typing found by brute-force enumeration is
# a generic instance of the inferred principal type.

_UNIVERSE = [
    INT,
    BOOL,
    RecordType(()),
    RecordType((("l", INT),)),
    RecordType((("m", BOOL),)),
    RecordType((("l", INT), ("m", BOOL))),
    Arrow(INT, INT),
    Arrow(INT, BOOL),
]


def _derivable(tenv, term, tau, depth=0):
    """Declarative typability over the finite universe (let-free terms)."""
    if depth > 8:
        return False
    if isinstance(term, Var):
        return term.name in tenv and equiv(tenv[term.name], tau)
    if isinstance(term, Const):
        return equiv(tau, BaseType(term.base))
    if isinstance(term, Abs):
        t = normalize(tau)
        if not isinstance(t, Arrow):
            return False
        return _derivable({**tenv, term.param: t.dom}, term.body, t.cod, depth + 1)
    if isinstance(term, App):
        return any(
            _derivable(tenv, term.fn, Arrow(ta, tau), depth + 1)
            and _derivable(tenv, term.arg, ta, depth + 1)
            for ta in _UNIVERSE
        )
    if isinstance(term, RecordLit):
        t = normalize(tau)
        if not isinstance(t, RecordType):
            return False
        fields = t.field_map()
        if set(fields) != {l for l, _ in term.fields}:
            return False
        return all(
            _derivable(tenv, sub, fields[l], depth + 1) for l, sub in term.fields
        )
    if isinstance(term, Select):
        return any(
            _derivable(tenv, term.target, t1, depth + 1)
            and has_kind({}, t1, record_kind([(term.label, tau)]))
            for t1 in _UNIVERSE
        )
    if isinstance(term, Modify):
        if not any(
            _derivable(tenv, term.value, t2, depth + 1)
            and has_kind({}, normalize(tau), record_kind([(term.label, t2)]))
            for t2 in _UNIVERSE
        ):
            return False
        return _derivable(tenv, term.target, tau, depth + 1)
    if isinstance(term, Remove):
        for t1, t2 in itertools.product(_UNIVERSE, _UNIVERSE):
            if not isinstance(t1, (RecordType,)):
                continue
            if not has_kind({}, t1, record_kind([(term.label, t2)])):
                continue
            if _derivable(tenv, term.target, t1, depth + 1) and equiv(
                tau, Contr(t1, term.label, t2)
            ):
                return True
        return False
    if isinstance(term, Extend):
        for t1, t2 in itertools.product(_UNIVERSE, _UNIVERSE):
            if not isinstance(t1, (RecordType,)):
                continue
            if not has_kind({}, t1, record_kind([], [(term.label, t2)])):
                continue
            if (
                _derivable(tenv, term.target, t1, depth + 1)
                and _derivable(tenv, term.value, t2, depth + 1)
                and equiv(tau, Ext(t1, term.label, t2))
            ):
                return True
        return False
    return False  # let handled by generalization; out of enumeration scope


def _letfree(term):
    if isinstance(term, Var) or isinstance(term, Const):
        return True
    if isinstance(term, Abs):
        return _letfree(term.body)
    if isinstance(term, App):
        return _letfree(term.fn) and _letfree(term.arg)
    if isinstance(term, RecordLit):
        return all(_letfree(s) for _, s in term.fields)
    if isinstance(term, (Select, Remove)):
        return _letfree(term.target)
    if isinstance(term, (Modify, Extend)):
        return _letfree(term.target) and _letfree(term.value)
    return False


def test_principality_desk_scale():
    rng = random.Random(103)
    inspected = 0
    alternatives = 0
    while inspected < 150:
        term = gen_closed_term(rng, rng.randint(1, 3), labels=("l", "m"))
        if not _letfree(term):
            continue
        res = infer({}, {}, term, FreshSupply(1))
        if isinstance(res, InferFailure):
            continue
        inspected += 1
        resid, principal = closure(res.kenv, {}, res.type)
        for tau in _UNIVERSE:
            if _derivable({}, term, tau):
                alternatives += 1
                assert generic_instance(resid, principal, poly(tau)), (term, tau, principal)
    assert alternatives > 40
