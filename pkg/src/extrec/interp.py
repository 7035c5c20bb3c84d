"""Call-by-value evaluator for closed terms.

Record operations are checked at runtime: selecting, modifying, or
removing an absent field is an error, as is extending with a present one.
Together with inference this gives an executable type-soundness smoke
test: accepted closed programs never hit these errors.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    Abs,
    App,
    Const,
    Extend,
    Let,
    Modify,
    RecordLit,
    Remove,
    Select,
    Term,
    Var,
)


class EvalError(Exception):
    def __init__(self, message: str, term: Term | None = None):
        self.term = term
        super().__init__(message)


@dataclass(frozen=True)
class IntV:
    value: int


@dataclass(frozen=True)
class BoolV:
    value: bool


@dataclass(frozen=True)
class StringV:
    value: str


@dataclass(frozen=True)
class RecordV:
    fields: tuple[tuple[str, "Value"], ...]

    def field_map(self):
        return dict(self.fields)


@dataclass(frozen=True)
class ClosureV:
    param: str
    body: Term
    env: tuple[tuple[str, "Value"], ...]


Value = IntV | BoolV | StringV | RecordV | ClosureV


def eval_term(term: Term, env: dict | None = None) -> Value:
    env = env if env is not None else {}

    if isinstance(term, Var):
        if term.name not in env:
            raise EvalError(f"unbound variable {term.name}", term)
        return env[term.name]
    if isinstance(term, Const):
        if term.base == "Int":
            return IntV(term.value)
        if term.base == "Bool":
            return BoolV(term.value)
        return StringV(term.value)
    if isinstance(term, Abs):
        return ClosureV(term.param, term.body, tuple(env.items()))
    if isinstance(term, App):
        fn = eval_term(term.fn, env)
        arg = eval_term(term.arg, env)
        if not isinstance(fn, ClosureV):
            raise EvalError("application of a non-function", term)
        return eval_term(fn.body, {**dict(fn.env), fn.param: arg})
    if isinstance(term, Let):
        bound = eval_term(term.bound, env)
        return eval_term(term.body, {**env, term.name: bound})
    if isinstance(term, RecordLit):
        return RecordV(tuple((l, eval_term(sub, env)) for l, sub in term.fields))
    if isinstance(term, Select):
        rec = _record(eval_term(term.target, env), term)
        fields = rec.field_map()
        if term.label not in fields:
            raise EvalError(f"selecting absent field {term.label}", term)
        return fields[term.label]
    if isinstance(term, Modify):
        rec = _record(eval_term(term.target, env), term)
        fields = rec.field_map()
        if term.label not in fields:
            raise EvalError(f"modifying absent field {term.label}", term)
        fields[term.label] = eval_term(term.value, env)
        return RecordV(tuple(sorted(fields.items())))
    if isinstance(term, Remove):
        rec = _record(eval_term(term.target, env), term)
        fields = rec.field_map()
        if term.label not in fields:
            raise EvalError(f"removing absent field {term.label}", term)
        del fields[term.label]
        return RecordV(tuple(sorted(fields.items())))
    if isinstance(term, Extend):
        rec = _record(eval_term(term.target, env), term)
        fields = rec.field_map()
        if term.label in fields:
            raise EvalError(f"extending with present field {term.label}", term)
        fields[term.label] = eval_term(term.value, env)
        return RecordV(tuple(sorted(fields.items())))
    raise TypeError(f"eval_term: not a term: {term!r}")


def _record(v: Value, term: Term) -> RecordV:
    if not isinstance(v, RecordV):
        raise EvalError("record operation on a non-record", term)
    return v


def show_value(v: Value) -> str:
    if isinstance(v, IntV):
        return str(v.value)
    if isinstance(v, BoolV):
        return "true" if v.value else "false"
    if isinstance(v, StringV):
        out = v.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{out}"'
    if isinstance(v, RecordV):
        inner = ", ".join(f"{l} = {show_value(f)}" for l, f in v.fields)
        return "{" + inner + "}"
    return f"<fun {v.param}>"
