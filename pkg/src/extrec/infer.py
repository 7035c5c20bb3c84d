"""Type inference for the extensible-record calculus.

infer computes a principal kinded typing (residual kind assignment,
substitution, canonical monotype) and assembles, alongside, a derivation
tree for the declarative system; the checker validates that tree, giving
an executable soundness oracle.

Failures are returned as values, tagged with the syntax case that failed
and the offending subterm.
"""

from __future__ import annotations

from dataclasses import dataclass

from .checker import Derivation, Judgment, KindingClaim, subst_derivation
from .normalize import normalize
from .subst import apply_assignment, apply_kind, apply_type, closure, compose
from .syntax import (
    Abs,
    App,
    Arrow,
    BaseType,
    Const,
    Contr,
    Ext,
    Extend,
    KindAssignment,
    Let,
    Modify,
    MonoType,
    PolyType,
    RecordKind,
    RecordLit,
    RecordType,
    Remove,
    Select,
    Substitution,
    Term,
    TypeAssignment,
    TyVar,
    UKind,
    Var,
    base_of,
    ftv,
    is_extensible,
    poly,
)
from .unify import UnificationError, unify


class FreshSupply:
    """Monotone source of type-variable uids for one inference run."""

    def __init__(self, start: int = 1):
        self.next_uid = start

    def fresh(self, name: str = "") -> TyVar:
        v = TyVar(self.next_uid, name)
        self.next_uid += 1
        return v


def supply_for(*values) -> FreshSupply:
    """A supply starting above every uid reachable from the given values
    (assignments, polytypes, monotypes)."""
    top = 0

    def scan(x):
        nonlocal top
        if isinstance(x, dict):
            for k, v in x.items():
                scan(k)
                scan(v)
        elif isinstance(x, PolyType):
            for v, k in x.quants:
                scan(v)
                scan(k)
            scan(x.body)
        elif isinstance(x, TyVar):
            top = max(top, x.uid)
        elif x is None or isinstance(x, (UKind, BaseType)):
            pass
        else:
            for v in ftv(x):
                top = max(top, v.uid)

    for val in values:
        scan(val)
    return FreshSupply(top + 1)


@dataclass(frozen=True)
class InferFailure:
    rule: str  # syntax case that failed: var, app, let, record, select, ...
    reason: str  # unbound_variable / base_in_value / occurs_check / kind_clash / ...
    message: str
    term: Term

    @property
    def span(self):
        return getattr(self.term, "span", None)


@dataclass(frozen=True)
class InferResult:
    kenv: KindAssignment
    subst: Substitution
    type: MonoType
    trace: Derivation | None = None


def instantiate(
    kenv: KindAssignment, sigma: PolyType, fs: FreshSupply
) -> tuple[KindAssignment, MonoType]:
    """Replace quantified variables with fresh ones, threading the renaming
    through the kinds, and extend the kind assignment accordingly."""
    ren: Substitution = {}
    out = dict(kenv)
    for v, k in sigma.quants:
        fresh = fs.fresh(v.name)
        out[fresh] = apply_kind(ren, k)
        ren[v] = fresh
    return out, normalize(apply_type(ren, sigma.body))


def infer(
    kenv: KindAssignment,
    tenv: TypeAssignment,
    term: Term,
    fs: FreshSupply | None = None,
    want_trace: bool = False,
) -> InferResult | InferFailure:
    """Principal typing of term under (kenv, tenv), or a failure value."""
    if fs is None:
        fs = supply_for(kenv, tenv)
    out = _infer(kenv, tenv, term, fs)
    if isinstance(out, InferFailure):
        return out
    k2, s, t, d = out
    bad = _recheck_extensions(d)
    if bad is not None:
        return bad
    return InferResult(k2, s, t, d if want_trace else None)


def _recheck_extensions(d: Derivation) -> InferFailure | None:
    """The extension rule's base-variable condition is the one side
    condition later substitutions can break; re-check it on the finished
    tree and turn a violation into an inference failure."""
    for child in d.children:
        bad = _recheck_extensions(child)
        if bad is not None:
            return bad
    if d.rule == "Ext":
        subject = normalize(d.claim.subject)
        value_t = d.children[1].judgment.sigma.body
        if is_extensible(subject):
            base = base_of(subject)
            if isinstance(base, TyVar) and base in ftv(normalize(value_t)):
                return InferFailure(
                    "extend",
                    "base_in_value",
                    "extended record's type occurs in the added field's type",
                    d.judgment.term,
                )
    return None


def _fail_unify(case: str, term: Term, err: UnificationError) -> InferFailure:
    return InferFailure(case, err.reason, err.message, term)


def _infer(kenv, tenv, term, fs):
    """Returns (kenv', subst, canonical type, derivation) or InferFailure."""

    if isinstance(term, Var):
        if term.name not in tenv:
            return InferFailure(
                "var", "unbound_variable", f"unbound variable {term.name}", term
            )
        k1, t = instantiate(kenv, tenv[term.name], fs)
        d = Derivation("Var", Judgment(k1, tenv, term, poly(t)))
        return k1, {}, t, d

    if isinstance(term, Const):
        t = BaseType(term.base)
        d = Derivation("Const", Judgment(kenv, tenv, term, poly(t)))
        return kenv, {}, t, d

    if isinstance(term, Abs):
        alpha = fs.fresh()
        inner_kenv = {**kenv, alpha: UKind()}
        inner_tenv = {**tenv, term.param: poly(alpha)}
        res = _infer(inner_kenv, inner_tenv, term.body, fs)
        if isinstance(res, InferFailure):
            return res
        k1, s1, t1, d1 = res
        t = Arrow(normalize(apply_type(s1, alpha)), t1)
        d = Derivation(
            "Abs", Judgment(k1, apply_assignment(s1, tenv), term, poly(t)), (d1,)
        )
        return k1, s1, t, d

    if isinstance(term, App):
        res = _infer(kenv, tenv, term.fn, fs)
        if isinstance(res, InferFailure):
            return res
        k1, s1, t1, d1 = res
        res = _infer(k1, apply_assignment(s1, tenv), term.arg, fs)
        if isinstance(res, InferFailure):
            return res
        k2, s2, t2, d2 = res
        alpha = fs.fresh()
        try:
            k3, s3 = unify(
                {**k2, alpha: UKind()},
                [(apply_type(s2, t1), Arrow(t2, alpha))],
                fresh=fs.fresh,
            )
        except UnificationError as e:
            return _fail_unify("app", term, e)
        s = compose(s3, compose(s2, s1))
        t = normalize(apply_type(s3, alpha))
        d1 = subst_derivation(d1, compose(s3, s2), k3)
        d2 = subst_derivation(d2, s3, k3)
        d = Derivation(
            "App", Judgment(k3, apply_assignment(s, tenv), term, poly(t)), (d1, d2)
        )
        return k3, s, t, d

    if isinstance(term, Let):
        res = _infer(kenv, tenv, term.bound, fs)
        if isinstance(res, InferFailure):
            return res
        k1, s1, t1, d1 = res
        gamma1 = apply_assignment(s1, tenv)
        k1r, sigma = closure(k1, gamma1, t1)
        gen = Derivation("Gen", Judgment(k1r, gamma1, term.bound, sigma), (d1,))
        res = _infer(k1r, {**gamma1, term.name: sigma}, term.body, fs)
        if isinstance(res, InferFailure):
            return res
        k2, s2, t2, d2 = res
        s = compose(s2, s1)
        gen = subst_derivation(gen, s2, k2)
        d = Derivation(
            "Let", Judgment(k2, apply_assignment(s, tenv), term, poly(t2)), (gen, d2)
        )
        return k2, s, t2, d

    if isinstance(term, RecordLit):
        cur_kenv, cur_tenv = kenv, tenv
        s_all: Substitution = {}
        parts = []
        for label, sub in term.fields:
            res = _infer(cur_kenv, cur_tenv, sub, fs)
            if isinstance(res, InferFailure):
                return res
            cur_kenv, s_i, t_i, d_i = res
            cur_tenv = apply_assignment(s_i, cur_tenv)
            s_all = compose(s_i, s_all)
            parts.append((label, s_i, t_i, d_i))
        fields = []
        children = []
        suffix: Substitution = {}
        for label, s_i, t_i, d_i in reversed(parts):
            fields.append((label, normalize(apply_type(suffix, t_i))))
            children.append(subst_derivation(d_i, suffix, cur_kenv))
            suffix = compose(suffix, s_i)
        fields.reverse()
        children.reverse()
        t = RecordType(tuple(fields))
        d = Derivation(
            "Rec",
            Judgment(cur_kenv, apply_assignment(s_all, tenv), term, poly(t)),
            tuple(children),
        )
        return cur_kenv, s_all, t, d

    if isinstance(term, Select):
        res = _infer(kenv, tenv, term.target, fs)
        if isinstance(res, InferFailure):
            return res
        k1, s1, t1, d1 = res
        a_field = fs.fresh()
        a_rec = fs.fresh()
        kind = RecordKind(((term.label, a_field),), ())
        try:
            k2, s2 = unify(
                {**k1, a_field: UKind(), a_rec: kind}, [(a_rec, t1)], fresh=fs.fresh
            )
        except UnificationError as e:
            return _fail_unify("select", term, e)
        s = compose(s2, s1)
        t = normalize(apply_type(s2, a_field))
        d1 = subst_derivation(d1, s2, k2)
        claim = KindingClaim(
            normalize(apply_type(s2, t1)), RecordKind(((term.label, t),), ())
        )
        d = Derivation(
            "Sel", Judgment(k2, apply_assignment(s, tenv), term, poly(t)), (d1,), claim
        )
        return k2, s, t, d

    if isinstance(term, Modify):
        res = _infer(kenv, tenv, term.target, fs)
        if isinstance(res, InferFailure):
            return res
        k1, s1, t1, d1 = res
        res = _infer(k1, apply_assignment(s1, tenv), term.value, fs)
        if isinstance(res, InferFailure):
            return res
        k2, s2, t2, d2 = res
        a_field = fs.fresh()
        a_rec = fs.fresh()
        kind = RecordKind(((term.label, a_field),), ())
        try:
            k3, s3 = unify(
                {**k2, a_field: UKind(), a_rec: kind},
                [(a_field, t2), (a_rec, apply_type(s2, t1))],
                fresh=fs.fresh,
            )
        except UnificationError as e:
            return _fail_unify("modify", term, e)
        s = compose(s3, compose(s2, s1))
        t = normalize(apply_type(s3, a_rec))
        d1 = subst_derivation(d1, compose(s3, s2), k3)
        d2 = subst_derivation(d2, s3, k3)
        claim = KindingClaim(
            t, RecordKind(((term.label, normalize(apply_type(s3, a_field))),), ())
        )
        d = Derivation(
            "Modif",
            Judgment(k3, apply_assignment(s, tenv), term, poly(t)),
            (d1, d2),
            claim,
        )
        return k3, s, t, d

    if isinstance(term, Remove):
        res = _infer(kenv, tenv, term.target, fs)
        if isinstance(res, InferFailure):
            return res
        k1, s1, t1, d1 = res
        a_field = fs.fresh()
        a_rec = fs.fresh()
        kind = RecordKind(((term.label, a_field),), ())
        try:
            k2, s2 = unify(
                {**k1, a_field: UKind(), a_rec: kind}, [(a_rec, t1)], fresh=fs.fresh
            )
        except UnificationError as e:
            return _fail_unify("remove", term, e)
        s = compose(s2, s1)
        t = normalize(apply_type(s2, Contr(a_rec, term.label, a_field)))
        d1 = subst_derivation(d1, s2, k2)
        claim = KindingClaim(
            normalize(apply_type(s2, a_rec)),
            RecordKind(((term.label, normalize(apply_type(s2, a_field))),), ()),
        )
        d = Derivation(
            "Contr",
            Judgment(k2, apply_assignment(s, tenv), term, poly(t)),
            (d1,),
            claim,
        )
        return k2, s, t, d

    if isinstance(term, Extend):
        res = _infer(kenv, tenv, term.target, fs)
        if isinstance(res, InferFailure):
            return res
        k1, s1, t1, d1 = res
        res = _infer(k1, apply_assignment(s1, tenv), term.value, fs)
        if isinstance(res, InferFailure):
            return res
        k2, s2, t2, d2 = res
        if is_extensible(t1):
            base = base_of(t1)
            if isinstance(base, TyVar) and base in ftv(t2):
                return InferFailure(
                    "extend",
                    "base_in_value",
                    "extended record's type occurs in the added field's type",
                    term,
                )
        a_field = fs.fresh()
        a_rec = fs.fresh()
        kind = RecordKind((), ((term.label, a_field),))
        try:
            k3, s3 = unify(
                {**k2, a_field: UKind(), a_rec: kind},
                [(a_field, t2), (a_rec, apply_type(s2, t1))],
                fresh=fs.fresh,
            )
        except UnificationError as e:
            return _fail_unify("extend", term, e)
        s = compose(s3, compose(s2, s1))
        t = normalize(apply_type(s3, Ext(a_rec, term.label, a_field)))
        d1 = subst_derivation(d1, compose(s3, s2), k3)
        d2 = subst_derivation(d2, s3, k3)
        claim = KindingClaim(
            normalize(apply_type(s3, a_rec)),
            RecordKind((), ((term.label, normalize(apply_type(s3, a_field))),)),
        )
        d = Derivation(
            "Ext",
            Judgment(k3, apply_assignment(s, tenv), term, poly(t)),
            (d1, d2),
            claim,
        )
        return k3, s, t, d

    raise TypeError(f"infer: not a term: {term!r}")
