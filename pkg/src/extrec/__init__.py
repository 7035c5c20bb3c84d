"""Polymorphic record calculus with extensible records: parsing, kinding,
type normalization, kinded unification, type inference, a derivation
validator, and a small evaluator."""

from .checker import Derivation, Judgment, KindingClaim, check, validate
from .infer import FreshSupply, InferFailure, InferResult, infer, instantiate
from .interp import EvalError, eval_term
from .kinding import has_kind, wf_kind_assignment, wf_type
from .normalize import equiv, normalize, reduce_once, subst_equal
from .parser import ParseError, parse_env_file, parse_term, parse_type, pretty
from .subst import KindedSubstitution, closure, compose, generic_instance, respects
from .syntax import base_of, eftv, ftv
from .unify import UnificationError, cfields, efields, unify

__all__ = [
    "Derivation",
    "EvalError",
    "FreshSupply",
    "InferFailure",
    "InferResult",
    "Judgment",
    "KindedSubstitution",
    "KindingClaim",
    "ParseError",
    "UnificationError",
    "base_of",
    "cfields",
    "check",
    "closure",
    "compose",
    "eftv",
    "efields",
    "equiv",
    "eval_term",
    "ftv",
    "generic_instance",
    "has_kind",
    "infer",
    "instantiate",
    "normalize",
    "parse_env_file",
    "parse_term",
    "parse_type",
    "pretty",
    "reduce_once",
    "respects",
    "subst_equal",
    "unify",
    "validate",
    "wf_kind_assignment",
    "wf_type",
]
