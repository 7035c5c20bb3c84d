"""Abstract syntax: terms, types, kinds, and the two assignment maps.

Everything here is an immutable value.  Type variables compare by their
integer uid; the printable name is cosmetic only.  Label maps (record
fields, record-kind sides) are kept sorted by label so that structural
equality is insensitive to the order labels were written in.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

Label = str

BASE_TYPES = ("Int", "Bool", "String")

# Supply for variables created internally (alpha-renaming away from a
# substitution's domain).  Kept far above ids handed out by parsers and
# inference so the ranges never collide.
_internal_uids = itertools.count(1_000_000)


def internal_fresh(name: str = "") -> "TyVar":
    return TyVar(next(_internal_uids), name)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str
    span: "object" = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Const:
    """Literal constant tagged with its base type (Int, Bool or String)."""

    value: object
    base: str
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.base not in BASE_TYPES:
            raise ValueError(f"unknown base type {self.base!r}")


@dataclass(frozen=True)
class Abs:
    param: str
    body: "Term"
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Let:
    name: str
    bound: "Term"
    body: "Term"
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class RecordLit:
    """Record literal; fields are stored sorted by label, labels distinct."""

    fields: tuple[tuple[Label, "Term"], ...]
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fields", _sorted_fields(self.fields))


@dataclass(frozen=True)
class Select:
    target: "Term"
    label: Label
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Modify:
    target: "Term"
    label: Label
    value: "Term"
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Remove:
    target: "Term"
    label: Label
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Extend:
    target: "Term"
    label: Label
    value: "Term"
    span: object = field(default=None, compare=False, repr=False)


Term = Var | Const | Abs | App | Let | RecordLit | Select | Modify | Remove | Extend


def _sorted_fields(fields):
    pairs = tuple(sorted(fields, key=lambda kv: kv[0]))
    labels = [l for l, _ in pairs]
    if len(set(labels)) != len(labels):
        dup = next(l for i, l in enumerate(labels) if l in labels[:i])
        raise ValueError(f"duplicate label {dup!r}")
    return pairs


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class BaseType:
    name: str

    def __post_init__(self):
        if self.name not in BASE_TYPES:
            raise ValueError(f"unknown base type {self.name!r}")


@dataclass(frozen=True)
class TyVar:
    """Type variable; identity is the uid, the name is display-only."""

    uid: int
    name: str = field(default="", compare=False)


@dataclass(frozen=True)
class RecordType:
    fields: tuple[tuple[Label, "MonoType"], ...]

    def __post_init__(self):
        object.__setattr__(self, "fields", _sorted_fields(self.fields))

    def field_map(self) -> dict[Label, "MonoType"]:
        return dict(self.fields)


@dataclass(frozen=True)
class Arrow:
    dom: "MonoType"
    cod: "MonoType"


@dataclass(frozen=True)
class Ext:
    """Field extension on an extensible head: base + {label: field_type}."""

    base: "MonoType"
    label: Label
    field_type: "MonoType"

    def __post_init__(self):
        if not is_extensible(self.base):
            raise ValueError("extension base must be an extensible type")


@dataclass(frozen=True)
class Contr:
    """Field contraction on an extensible head: base - {label: field_type}."""

    base: "MonoType"
    label: Label
    field_type: "MonoType"

    def __post_init__(self):
        if not is_extensible(self.base):
            raise ValueError("contraction base must be an extensible type")


MonoType = BaseType | TyVar | RecordType | Arrow | Ext | Contr

INT = BaseType("Int")
BOOL = BaseType("Bool")
STRING = BaseType("String")
EMPTY_RECORD = RecordType(())


def is_extensible(t: MonoType) -> bool:
    return isinstance(t, (TyVar, RecordType, Ext, Contr))


def base_of(t: MonoType) -> MonoType:
    """Bottom of an Ext/Contr chain: the type variable or record type."""
    if not is_extensible(t):
        raise ValueError(f"base_of: not an extensible type: {t!r}")
    while isinstance(t, (Ext, Contr)):
        t = t.base
    return t


# ---------------------------------------------------------------------------
# Kinds


@dataclass(frozen=True)
class UKind:
    """The universal kind: no constraint beyond well-formedness."""


@dataclass(frozen=True)
class RecordKind:
    """Fields the type must have (lefts) and must lack (rights)."""

    lefts: tuple[tuple[Label, MonoType], ...]
    rights: tuple[tuple[Label, MonoType], ...]

    def __post_init__(self):
        object.__setattr__(self, "lefts", _sorted_fields(self.lefts))
        object.__setattr__(self, "rights", _sorted_fields(self.rights))
        shared = {l for l, _ in self.lefts} & {l for l, _ in self.rights}
        if shared:
            raise ValueError(f"label on both kind sides: {sorted(shared)}")

    def left_map(self) -> dict[Label, MonoType]:
        return dict(self.lefts)

    def right_map(self) -> dict[Label, MonoType]:
        return dict(self.rights)


Kind = UKind | RecordKind

U = UKind()


def record_kind(lefts=(), rights=()) -> RecordKind:
    return RecordKind(tuple(dict(lefts).items()), tuple(dict(rights).items()))


# ---------------------------------------------------------------------------
# Polytypes


@dataclass(frozen=True, eq=False)
class PolyType:
    """Prenex kinded-quantified type.

    Equality is alpha-invariant: renaming the quantified variables (keeping
    order and kinds) is invisible.
    """

    quants: tuple[tuple[TyVar, Kind], ...]
    body: MonoType

    @property
    def is_mono(self) -> bool:
        return not self.quants

    def _canonical(self):
        # A quantifier binds in later kinds and the body, not in its own kind.
        mapping: dict[int, TyVar] = {}
        kinds = []
        for i, (v, k) in enumerate(self.quants):
            kinds.append(rename_vars(k, mapping))
            mapping[v.uid] = TyVar(-(i + 1))
        return (tuple(kinds), rename_vars(self.body, mapping))

    def __eq__(self, other):
        if not isinstance(other, PolyType):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        return hash(self._canonical())


def poly(t: MonoType) -> PolyType:
    return PolyType((), t)


# Assignments are plain dicts used functionally (copied, never mutated once
# shared).  Insertion order of a kind assignment is meaningful: entries are
# added dependencies-first.
KindAssignment = dict  # TyVar -> Kind
TypeAssignment = dict  # str -> PolyType
Substitution = dict  # TyVar -> MonoType


# ---------------------------------------------------------------------------
# Free variables


def ftv(x) -> set[TyVar]:
    """Free type variables of a monotype, polytype, or kind."""
    acc: set[TyVar] = set()
    _ftv_into(x, acc)
    return acc


def _ftv_into(x, acc: set[TyVar]) -> None:
    if isinstance(x, TyVar):
        acc.add(x)
    elif isinstance(x, BaseType):
        pass
    elif isinstance(x, Arrow):
        _ftv_into(x.dom, acc)
        _ftv_into(x.cod, acc)
    elif isinstance(x, RecordType):
        for _, t in x.fields:
            _ftv_into(t, acc)
    elif isinstance(x, (Ext, Contr)):
        _ftv_into(x.base, acc)
        _ftv_into(x.field_type, acc)
    elif isinstance(x, UKind):
        pass
    elif isinstance(x, RecordKind):
        for _, t in x.lefts:
            _ftv_into(t, acc)
        for _, t in x.rights:
            _ftv_into(t, acc)
    elif isinstance(x, PolyType):
        inner: set[TyVar] = set()
        _ftv_into(x.body, inner)
        for v, k in reversed(x.quants):
            inner.discard(v)
            _ftv_into(k, inner)
        acc |= inner
    else:
        raise TypeError(f"ftv: unsupported value {x!r}")


def ftv_assignment(gamma: TypeAssignment) -> set[TyVar]:
    acc: set[TyVar] = set()
    for sigma in gamma.values():
        acc |= ftv(sigma)
    return acc


def eftv(kenv: KindAssignment, t) -> set[TyVar]:
    """Essentially-free type variables: FTV closed under kind dependencies."""
    seed = ftv(t)
    unbound = {v for v in seed if v not in kenv}
    if unbound:
        raise ValueError(f"eftv: not well formed, unbound {sorted(v.uid for v in unbound)}")
    acc = set(seed)
    work = list(seed)
    while work:
        v = work.pop()
        k = kenv.get(v)
        if k is None:
            continue
        for w in ftv(k):
            if w not in acc:
                acc.add(w)
                work.append(w)
    return acc


def eftv_assignment(kenv: KindAssignment, gamma: TypeAssignment) -> set[TyVar]:
    acc: set[TyVar] = set()
    for sigma in gamma.values():
        acc |= eftv(kenv, sigma)
    return acc


# ---------------------------------------------------------------------------
# Variable renaming (plain var-to-var map; used for canonical forms)


def rename_vars(x, mapping: dict[int, TyVar]):
    """Replace type variables per uid->TyVar map in a type or kind."""
    if isinstance(x, TyVar):
        return mapping.get(x.uid, x)
    if isinstance(x, BaseType):
        return x
    if isinstance(x, Arrow):
        return Arrow(rename_vars(x.dom, mapping), rename_vars(x.cod, mapping))
    if isinstance(x, RecordType):
        return RecordType(tuple((l, rename_vars(t, mapping)) for l, t in x.fields))
    if isinstance(x, Ext):
        return Ext(rename_vars(x.base, mapping), x.label, rename_vars(x.field_type, mapping))
    if isinstance(x, Contr):
        return Contr(rename_vars(x.base, mapping), x.label, rename_vars(x.field_type, mapping))
    if isinstance(x, UKind):
        return x
    if isinstance(x, RecordKind):
        return RecordKind(
            tuple((l, rename_vars(t, mapping)) for l, t in x.lefts),
            tuple((l, rename_vars(t, mapping)) for l, t in x.rights),
        )
    if isinstance(x, PolyType):
        return PolyType(
            tuple((mapping.get(v.uid, v), rename_vars(k, mapping)) for v, k in x.quants),
            rename_vars(x.body, mapping),
        )
    raise TypeError(f"rename_vars: unsupported value {x!r}")
