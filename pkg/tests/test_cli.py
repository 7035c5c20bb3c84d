import json

from click.testing import CliRunner

from extrec.cli import main
from extrec.parser import parse_kind, parse_mono, parse_type

ENV_42 = "'a :: << || l: 'b>>\n'b :: U\nx : 'a\ny : 'b\n"


def run(*args, **kw):
    return CliRunner().invoke(main, list(args), **kw)


def test_infer_selector():
    r = run("infer", "-e", "\\x. x.l")
    assert r.exit_code == 0
    assert r.output.strip() == "forall 'a :: U. forall 'b :: <<l: 'a || >>. 'b -> 'a"


def test_infer_with_env(tmp_path):
    env = tmp_path / "ex.env"
    env.write_text(ENV_42)
    r = run("infer", "--env", str(env), "-e", "extend(x, l, y).l")
    assert r.exit_code == 0
    assert r.output.strip() == "'b"


def test_infer_json_round_trips(tmp_path):
    env = tmp_path / "ex.env"
    env.write_text(ENV_42)
    r = run("infer", "--env", str(env), "-e", "extend(x, l, y)", "--json")
    assert r.exit_code == 0
    payload = json.loads(r.output)
    assert set(payload) == {"kind_assignment", "substitution", "type", "poly_type"}
    parse_mono(payload["type"])
    parse_type(payload["poly_type"])
    for k in payload["kind_assignment"].values():
        parse_kind(k)
    for t in payload["substitution"].values():
        parse_mono(t)
    assert payload["type"] == "'a + {l: 'b}"


def test_normalize_command():
    r = run("normalize", "-t", "('a + {l: Int}) - {l: Int}")
    assert r.exit_code == 0
    assert r.output.strip() == "'a"


def test_check_ok_and_fail():
    good = run("check", "-e", "\\x. x.l", "-t", "forall 'b :: <<l: Int || >>. 'b -> Int")
    assert good.exit_code == 0
    assert good.output.strip() == "OK"
    bad = run("check", "-e", "\\x. x", "-t", "Int -> Bool")
    assert bad.exit_code == 1
    assert bad.output.startswith("FAIL:")
    as_json = run("check", "-e", "\\x. x", "-t", "Int -> Bool", "--json")
    assert as_json.exit_code == 1
    payload = json.loads(as_json.output)
    assert payload["ok"] is False and payload["reason"]


def test_unify_command(tmp_path):
    env = tmp_path / "k.env"
    env.write_text("'a :: << || l: 'c>>\n'b :: <<l: 'c || >>\n'c :: U\n")
    r = run("unify", "--env", str(env), "-e", "'a + {l: 'c} - {l: 'c} = 'b - {l: 'c}")
    assert r.exit_code == 0
    lines = r.output.strip().splitlines()
    assert "---" in lines
    assert "'b := 'a + {l: 'c}" in lines
    bad = run("unify", "-e", "Int = Bool")
    assert bad.exit_code == 1
    assert bad.output.startswith("FAIL:")


def test_eval_command():
    r = run("eval", "-e", "extend({}, l, true).l")
    assert r.exit_code == 0 and r.output.strip() == "true"
    err = run("eval", "-e", "{l=1}.m")
    assert err.exit_code == 1


def test_parse_command_echoes_canonically():
    r = run("parse", "-e", "((f) (x))")
    assert r.exit_code == 0 and r.output.strip() == "f x"


def test_exit_codes():
    assert run("infer", "-e", "\\x. x x").exit_code == 1  # type error
    assert run("infer", "-e", "\\x. (").exit_code == 2  # syntax error
    assert run("infer").exit_code == 2  # no input source
    assert run("infer", "-e", "x", "nope.rec").exit_code == 2  # two sources


def test_deterministic_output():
    a = run("infer", "-e", "\\r. {p = r.l, q = remove(r, m)}")
    b = run("infer", "-e", "\\r. {p = r.l, q = remove(r, m)}")
    assert a.exit_code == 0
    assert a.output == b.output


def test_term_file_input(tmp_path):
    f = tmp_path / "prog.rec"
    f.write_text("let pair = \\x. {fst = x, snd = x} in pair 3\n")
    r = run("infer", str(f))
    assert r.exit_code == 0
    assert r.output.strip() == "{fst: Int, snd: Int}"
    assert run("eval", str(f)).output.strip() == "{fst = 3, snd = 3}"
