"""Well-formedness checks and the kinding judgment.

has_kind works by synthesizing, for an extensible type, the full field
information any derivation could establish: which labels are provably
present (with their types) and which are provably absent.  A requested
record kind then holds iff it is a sub-specification of that synthesis.
Chains over a record base additionally satisfy absence of any label the
chain never mentions, at any well-formed type.
"""

from __future__ import annotations

from dataclasses import dataclass

from .normalize import equiv
from .syntax import (
    Contr,
    Ext,
    Kind,
    KindAssignment,
    Label,
    MonoType,
    PolyType,
    RecordKind,
    RecordType,
    TypeAssignment,
    TyVar,
    UKind,
    ftv,
    is_extensible,
)


def wf_kind_assignment(kenv: KindAssignment) -> bool:
    """Every kind's free variables stay inside the assignment's domain."""
    return wf_offender(kenv) is None


def wf_offender(kenv: KindAssignment) -> TyVar | None:
    for v, k in kenv.items():
        if any(w not in kenv for w in ftv(k)):
            return v
    return None


def wf_type(kenv: KindAssignment, t: MonoType | PolyType) -> bool:
    return all(v in kenv for v in ftv(t))


def wf_kind(kenv: KindAssignment, k: Kind) -> bool:
    return all(v in kenv for v in ftv(k))


def wf_type_assignment(kenv: KindAssignment, gamma: TypeAssignment) -> bool:
    return all(wf_type(kenv, sigma) for sigma in gamma.values())


@dataclass(frozen=True)
class FieldInfo:
    """Maximal field facts derivable for an extensible type."""

    present: dict[Label, MonoType]
    absent: dict[Label, MonoType]
    record_base: bool  # unmentioned labels are absent at any type


def field_info(kenv: KindAssignment, t: MonoType) -> FieldInfo | None:
    """Synthesize field facts, or None when no record kind is derivable."""
    if isinstance(t, TyVar):
        k = kenv.get(t)
        if not isinstance(k, RecordKind):
            return None
        return FieldInfo(k.left_map(), k.right_map(), False)
    if isinstance(t, RecordType):
        return FieldInfo(t.field_map(), {}, True)
    if isinstance(t, (Ext, Contr)):
        info = field_info(kenv, t.base)
        if info is None:
            return None
        present = dict(info.present)
        absent = dict(info.absent)
        label, fty = t.label, t.field_type
        if isinstance(t, Ext):
            if label in present:
                return None
            if label in absent:
                if not equiv(absent[label], fty):
                    return None
                del absent[label]
            elif not info.record_base:
                return None
            present[label] = fty
        else:
            if label not in present or not equiv(present[label], fty):
                return None
            del present[label]
            absent[label] = fty
        return FieldInfo(present, absent, info.record_base)
    return None


def has_kind(kenv: KindAssignment, t: MonoType, k: Kind) -> bool:
    """The kinding judgment: t has kind k under kenv."""
    if not wf_type(kenv, t) or not wf_kind(kenv, k):
        return False
    if isinstance(k, UKind):
        return True
    if not is_extensible(t):
        return False
    info = field_info(kenv, t)
    if info is None:
        return False
    for label, fty in k.lefts:
        if label not in info.present or not equiv(info.present[label], fty):
            return False
    for label, fty in k.rights:
        if label in info.absent:
            if not equiv(info.absent[label], fty):
                return False
        elif not (info.record_base and label not in info.present):
            return False
    return True
