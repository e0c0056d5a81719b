"""Plan language: AST nodes, parser, type checker, and pretty printer.

A plan is a flat, semicolon-separated list of calls::

    pickup(ObjectRef.CANDY); goto(ObjectRef.GIFT_BAG); release()

Arguments are either typed literal names (``Type.CANONICAL_NAME``), bare
integers, or (only inside composed function bodies) lowercase parameter
names. There is no control flow and no nesting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Optional, Union

from .errors import (
    ArityMismatch,
    PlanSyntaxError,
    TypeMismatch,
    UnknownFunction,
    UnknownLiteral,
)

if TYPE_CHECKING:
    from .api import ApiSpec

COUNT_TYPE = "Count"

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_CALL_RE = re.compile(rf"^\s*({_IDENT})\s*\(\s*(.*?)\s*\)\s*$", re.DOTALL)
_LITERAL_RE = re.compile(rf"^({_IDENT})\.({_IDENT})$")
_PARAM_RE = re.compile(rf"^{_IDENT}$")
_INT_RE = re.compile(r"^-?\d+$")


@dataclass(frozen=True)
class LiteralRef:
    type_name: str
    canonical_name: str

    def __str__(self):
        return f"{self.type_name}.{self.canonical_name}"


@dataclass(frozen=True)
class ParamRef:
    param_name: str

    def __str__(self):
        return self.param_name


@dataclass(frozen=True)
class IntLit:
    value: int

    def __str__(self):
        return str(self.value)


Arg = Union[LiteralRef, ParamRef, IntLit]


@dataclass(frozen=True)
class Invocation:
    function_name: str
    args: tuple[Arg, ...] = ()

    def __str__(self):
        return f"{self.function_name}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class PlanAst:
    invocations: tuple[Invocation, ...]
    source_utterance_id: Optional[str] = None
    api_version: Optional[int] = None


# ParseOutcome variants -------------------------------------------------------


@dataclass(frozen=True)
class Ok:
    ast: PlanAst


@dataclass(frozen=True)
class TeachArgument:
    function_name: str
    param_index: int
    inferred_type: str
    surface_text: str


@dataclass(frozen=True)
class TeachFunction:
    surface_verb: str
    clarification_message: str


@dataclass(frozen=True)
class Malformed:
    reason: str


ParseOutcome = Union[Ok, TeachArgument, TeachFunction, Malformed]


def _split_calls(text: str) -> list[str]:
    parts = [p.strip() for p in text.split(";")]
    return [p for p in parts if p]


def parse_invocation(chunk: str, allow_params: bool = False) -> Invocation:
    m = _CALL_RE.match(chunk)
    if not m:
        raise PlanSyntaxError(f"not a call: {chunk!r}")
    name, argtext = m.group(1), m.group(2)
    args: list[Arg] = []
    if argtext:
        for raw in argtext.split(","):
            raw = raw.strip()
            lit = _LITERAL_RE.match(raw)
            if lit:
                args.append(LiteralRef(lit.group(1), lit.group(2)))
            elif _INT_RE.match(raw):
                args.append(IntLit(int(raw)))
            elif allow_params and _PARAM_RE.match(raw):
                args.append(ParamRef(raw))
            else:
                raise PlanSyntaxError(f"bad argument {raw!r} in {chunk!r}")
    return Invocation(name, tuple(args))


def parse_program_text(text: str, allow_params: bool = False) -> PlanAst:
    """Parse without checking names against any API (syntax only)."""
    chunks = _split_calls(text)
    if not chunks:
        raise PlanSyntaxError("empty plan")
    return PlanAst(tuple(parse_invocation(c, allow_params=allow_params) for c in chunks))


def type_check(ast: PlanAst, api: "ApiSpec") -> PlanAst:
    """Check every invocation against the API; returns the AST stamped with
    the API version. Raises a PlanCheckError subclass on the first failure.
    """
    for inv in ast.invocations:
        fn = api.function(inv.function_name)
        if fn is None:
            raise UnknownFunction(inv.function_name)
        if len(inv.args) != len(fn.params):
            raise ArityMismatch(fn.name, len(fn.params), len(inv.args))
        for i, (arg, param) in enumerate(zip(inv.args, fn.params)):
            if isinstance(arg, IntLit):
                if COUNT_TYPE not in param.types:
                    raise TypeMismatch(fn.name, param.name, param.types, COUNT_TYPE)
            elif isinstance(arg, LiteralRef):
                if arg.type_name not in param.types:
                    raise TypeMismatch(fn.name, param.name, param.types, arg.type_name)
                if api.literal(arg.type_name, arg.canonical_name) is None:
                    raise UnknownLiteral(fn.name, i, arg.type_name, arg.canonical_name)
            else:
                # ParamRefs only occur inside composed bodies, never in plans.
                raise TypeMismatch(fn.name, param.name, param.types, f"param {arg}")
    return replace(ast, api_version=api.version)


def surface_from_canonical(canonical_name: str) -> str:
    return canonical_name.lower().replace("_", " ")


def parse_plan_text(text: str, api: "ApiSpec",
                    source_utterance_id: Optional[str] = None) -> ParseOutcome:
    """Total parse: every input maps to exactly one ParseOutcome variant.

    Unknown function -> TeachFunction; known function with an unknown
    literal -> TeachArgument (leftmost gap first); anything else that fails
    to check -> Malformed.
    """
    try:
        ast = parse_program_text(text)
    except PlanSyntaxError as e:
        return Malformed(str(e))
    ast = replace(ast, source_utterance_id=source_utterance_id)
    # A literal gap inside a known function always wins over an unknown
    # function elsewhere in the plan (teach the most specific gap first).
    teach_function: Optional[TeachFunction] = None
    malformed: Optional[Malformed] = None
    for inv in ast.invocations:
        try:
            type_check(PlanAst((inv,)), api)
        except UnknownLiteral as e:
            return TeachArgument(
                e.function_name, e.param_index, e.type_name,
                surface_from_canonical(e.canonical_name),
            )
        except UnknownFunction as e:
            teach_function = teach_function or TeachFunction(
                e.name, f"I am not sure how to {e.name}; could you teach me?"
            )
        except (ArityMismatch, TypeMismatch) as e:
            malformed = malformed or Malformed(str(e))
    if teach_function is not None:
        return teach_function
    if malformed is not None:
        return malformed
    return Ok(type_check(ast, api))


def pretty_print(ast: PlanAst) -> str:
    """Canonical rendering; parse_plan_text(pretty_print(ast)) round-trips."""
    return "; ".join(str(inv) for inv in ast.invocations)
