"""Reduction of extensible types to canonical form, and type equivalence.

The rewrite system cancels matching extension/contraction pairs and folds
field operations into record bases.  Normal forms are then canonicalized by
sorting the surviving operations of every chain by label, which turns the
"same base, same field information" notion of equality into plain structural
equality.
"""

from __future__ import annotations

from .syntax import (
    Arrow,
    BaseType,
    Contr,
    Ext,
    MonoType,
    RecordType,
    Substitution,
    TyVar,
)

EXT = 1
CON = -1


def chain_ops(t: MonoType) -> tuple[MonoType, list[tuple[int, str, MonoType]]]:
    """Split an Ext/Contr chain into (base, ops), ops listed innermost first."""
    ops: list[tuple[int, str, MonoType]] = []
    while isinstance(t, (Ext, Contr)):
        sign = EXT if isinstance(t, Ext) else CON
        ops.append((sign, t.label, t.field_type))
        t = t.base
    ops.reverse()
    return t, ops


def rebuild_chain(base: MonoType, ops) -> MonoType:
    t = base
    for sign, label, fty in ops:
        t = Ext(t, label, fty) if sign == EXT else Contr(t, label, fty)
    return t


def _record_rule(base: RecordType, ops):
    """Rules folding the innermost operation into a record base, or None."""
    sign, label, fty = ops[0]
    fields = base.field_map()
    if sign == CON:
        if label in fields and equiv(fields[label], fty):
            del fields[label]
            return rebuild_chain(RecordType(tuple(fields.items())), ops[1:])
        return None
    if label not in fields:
        fields[label] = fty
        return rebuild_chain(RecordType(tuple(fields.items())), ops[1:])
    return None


def _first_cancelling_pair(ops):
    """Positions of the first same-label, same-field-type +/- pair, or None.

    Field types are compared modulo equivalence; equal extensible types are
    interchangeable everywhere, including inside field operations.
    """
    for i in range(len(ops)):
        si, li, ti = ops[i]
        for j in range(i + 1, len(ops)):
            sj, lj, tj = ops[j]
            if li == lj and si == -sj and equiv(ti, tj):
                return i, j
    return None


def _chain_reducts(t: MonoType) -> list[MonoType]:
    """Every one-step reduct available at the top of a chain node."""
    base, ops = chain_ops(t)
    out = []
    if isinstance(base, RecordType) and ops:
        r = _record_rule(base, ops)
        if r is not None:
            out.append(r)
    if isinstance(base, TyVar):
        pair = _first_cancelling_pair(ops)
        if pair is not None:
            i, j = pair
            rest = [op for k, op in enumerate(ops) if k not in (i, j)]
            out.append(rebuild_chain(base, rest))
    return out


def _subterm_slots(t: MonoType):
    """Immediate positions reduction may recurse into, innermost-first for
    chains: base before operation field types, in chain order."""
    if isinstance(t, Arrow):
        yield t.dom, lambda s: Arrow(s, t.cod)
        yield t.cod, lambda s: Arrow(t.dom, s)
    elif isinstance(t, RecordType):
        for idx, (l, ft) in enumerate(t.fields):
            yield ft, lambda s, idx=idx: RecordType(
                t.fields[:idx] + ((t.fields[idx][0], s),) + t.fields[idx + 1 :]
            )
    elif isinstance(t, (Ext, Contr)):
        base, ops = chain_ops(t)
        yield base, lambda s: rebuild_chain(s, ops)
        for idx, (sign, l, ft) in enumerate(ops):
            yield ft, lambda s, idx=idx: rebuild_chain(
                base, ops[:idx] + [(ops[idx][0], ops[idx][1], s)] + ops[idx + 1 :]
            )


def reduce_once(t: MonoType) -> MonoType | None:
    """One reduction step at the leftmost-innermost applicable position;
    None when t is in normal form."""
    if isinstance(t, (BaseType, TyVar)):
        return None
    for sub, put in _subterm_slots(t):
        r = reduce_once(sub)
        if r is not None:
            return put(r)
    if isinstance(t, (Ext, Contr)):
        reducts = _chain_reducts(t)
        if reducts:
            return reducts[0]
    return None


def one_step_reducts(t: MonoType) -> list[MonoType]:
    """All types reachable in exactly one reduction step (any position)."""
    out = []
    if isinstance(t, (BaseType, TyVar)):
        return out
    for sub, put in _subterm_slots(t):
        out.extend(put(r) for r in one_step_reducts(sub))
    if isinstance(t, (Ext, Contr)):
        out.extend(_chain_reducts(t))
    return out


def _sort_chains(t: MonoType) -> MonoType:
    if isinstance(t, (BaseType, TyVar)):
        return t
    if isinstance(t, Arrow):
        return Arrow(_sort_chains(t.dom), _sort_chains(t.cod))
    if isinstance(t, RecordType):
        return RecordType(tuple((l, _sort_chains(ft)) for l, ft in t.fields))
    base, ops = chain_ops(t)
    ops = [(s, l, _sort_chains(ft)) for s, l, ft in ops]
    if isinstance(base, TyVar):
        # Stable by label: distinct labels (the normal-form case) get a total
        # order; repeated labels in unkindable debris keep their chain order.
        # Operations stuck over a record base stay put: the folding rules
        # consume them innermost-first, so their order is meaningful.
        ops.sort(key=lambda op: op[1])
    return rebuild_chain(_sort_chains(base), ops)


def normalize(t: MonoType) -> MonoType:
    """Unique normal form, with every chain's operations sorted by label."""
    steps = 0
    limit = 10_000
    while True:
        r = reduce_once(t)
        if r is None:
            return _sort_chains(t)
        t = r
        steps += 1
        if steps > limit:
            raise RuntimeError("normalize: reduction did not terminate")


def is_normal(t: MonoType) -> bool:
    return reduce_once(t) is None


def equiv(t1: MonoType, t2: MonoType) -> bool:
    """Type equality modulo reduction and label permutation."""
    return t1 == t2 or normalize(t1) == normalize(t2)


def subst_equal(s1: Substitution, s2: Substitution) -> bool:
    """Substitution equality: images agree up to equiv on every variable."""
    for v in s1.keys() | s2.keys():
        if not equiv(s1.get(v, v), s2.get(v, v)):
            return False
    return True
