"""Teaching: turning gaps surfaced by the planner into API deltas.

Argument teaching synthesizes a new typed literal from an operator-supplied
grounding. Function teaching lifts a user decomposition into a composed
function, abstracting the literals the original utterance referred to.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .api import (
    AddFunction,
    AddLiteral,
    ApiDelta,
    ApiSpec,
    ComposedBody,
    FunctionSpec,
    GroundValue,
    LiteralArg,
    Param,
    Pose,
    apply_delta,
)
from .errors import (
    EmptyDecomposition,
    GroundingTypeMismatch,
    PlanSyntaxError,
    UnliftableAmbiguity,
)
from .plan import (
    COUNT_TYPE,
    Invocation,
    LiteralRef,
    Ok,
    ParamRef,
    PlanAst,
    TeachArgument,
    parse_program_text,
    type_check,
)
from .planner import STOPWORDS, DeterministicBackend, Proposal, Utterance, snake_upper

_PARAM_NAME_BY_TYPE = {"ObjectRef": "obj", "Location": "loc", COUNT_TYPE: "n"}


@dataclass
class ArgumentTeachRequest:
    function_name: str
    param_index: int
    inferred_type: str
    surface_text: str
    proposed_canonical_name: str = ""

    def __post_init__(self):
        if not self.proposed_canonical_name:
            self.proposed_canonical_name = snake_upper(self.surface_text)

    @classmethod
    def from_signal(cls, signal: TeachArgument) -> "ArgumentTeachRequest":
        return cls(signal.function_name, signal.param_index,
                   signal.inferred_type, signal.surface_text)


@dataclass
class FunctionTeachRequest:
    surface_verb: str
    original_utterance_id: Optional[str]
    decomposition: PlanAst
    bound_literals: list[tuple[str, str]] = field(default_factory=list)
    constant_literals: list[str] = field(default_factory=list)


def _variant_ok(type_name: str, grounding: GroundValue) -> bool:
    if type_name == "ObjectRef":
        return isinstance(grounding, str)
    if type_name == "Location":
        return isinstance(grounding, Pose)
    if type_name == COUNT_TYPE:
        return isinstance(grounding, int) and not isinstance(grounding, bool)
    return False


def unique_name(base: str, existing: set[str]) -> str:
    if base not in existing:
        return base
    n = 2
    while f"{base}_{n}" in existing:
        n += 1
    return f"{base}_{n}"


def synthesize_literal(req: ArgumentTeachRequest, grounding: GroundValue,
                       api: ApiSpec, provenance: Optional[str] = None) -> ApiDelta:
    """Pending AddLiteral delta; canonical name collisions get a
    deterministic _2, _3, ... suffix."""
    if not _variant_ok(req.inferred_type, grounding):
        raise GroundingTypeMismatch(
            f"{req.inferred_type} cannot be grounded by {type(grounding).__name__}"
        )
    existing = {l.canonical_name for l in api.literals_of(req.inferred_type)}
    name = unique_name(req.proposed_canonical_name, existing)
    literal = LiteralArg(req.inferred_type, name, grounding)
    return ApiDelta(kind=AddLiteral(literal), provenance=provenance)


def _literal_mentioned(lit: LiteralArg, utterance: str) -> bool:
    text = " ".join(re.findall(r"[a-z0-9']+", utterance.lower()))
    phrases = [lit.surface()]
    if isinstance(lit.value, str):
        desc = " ".join(w for w in re.findall(r"[a-z0-9']+", lit.value.lower())
                        if w not in STOPWORDS)
        if desc:
            phrases.append(desc)
    return any(re.search(rf"\b{re.escape(p)}\b", text) for p in phrases)


def normalize_verb(surface_verb: str) -> str:
    return "_".join(re.findall(r"[a-z0-9]+", surface_verb.lower())) or "unnamed"


def lift_decomposition(req: FunctionTeachRequest, original_utterance: str,
                       api: ApiSpec, docstring: Optional[str] = None,
                       timestep: Optional[int] = None) -> FunctionSpec:
    """First-order abstraction of a checked decomposition.

    A literal becomes a parameter iff the original utterance refers to it
    (canonical surface or full description), or the operator explicitly
    listed it; every occurrence of a bound literal is abstracted, so
    substituting the literals back reproduces the decomposition exactly.
    """
    if not req.decomposition.invocations:
        raise EmptyDecomposition(req.surface_verb)
    explicit_bound = {name for name, _ in req.bound_literals}
    clash = explicit_bound & set(req.constant_literals)
    if clash:
        raise UnliftableAmbiguity(
            f"literal(s) marked both bound and constant: {sorted(clash)}"
        )

    # Bound literals in first-occurrence order.
    bound: list[LiteralRef] = []
    for inv in req.decomposition.invocations:
        for arg in inv.args:
            if not isinstance(arg, LiteralRef) or any(
                b.canonical_name == arg.canonical_name and b.type_name == arg.type_name
                for b in bound
            ):
                continue
            if arg.canonical_name in req.constant_literals:
                continue
            lit = api.literal(arg.type_name, arg.canonical_name)
            if lit is None:
                continue
            if arg.canonical_name in explicit_bound or _literal_mentioned(lit, original_utterance):
                bound.append(arg)

    params: list[Param] = []
    param_by_literal: dict[LiteralRef, str] = {}
    used_names: set[str] = set()
    annotated = dict(req.bound_literals)
    for ref in bound:
        base = annotated.get(ref.canonical_name) or _PARAM_NAME_BY_TYPE.get(
            ref.type_name, ref.type_name.lower()
        )
        pname = unique_name(base, used_names)
        used_names.add(pname)
        params.append(Param(pname, (ref.type_name,)))
        param_by_literal[ref] = pname

    body_invocations = tuple(
        Invocation(inv.function_name, tuple(
            ParamRef(param_by_literal[arg])
            if isinstance(arg, LiteralRef) and arg in param_by_literal else arg
            for arg in inv.args
        ))
        for inv in req.decomposition.invocations
    )

    name = unique_name(normalize_verb(req.surface_verb),
                       {f.name for f in api.functions})
    if docstring is None:
        if params:
            docstring = f"Perform {req.surface_verb} on {', '.join(p.name for p in params)}."
        else:
            docstring = f"Perform {req.surface_verb}."
    origin = "builtin" if timestep is None else f"taught:{timestep}"
    return FunctionSpec(
        name=name,
        params=tuple(params),
        docstring=docstring,
        body=ComposedBody(body_invocations),
        origin=origin,
    )


def plan_decomposition(text: str, api: ApiSpec, backend) -> PlanAst:
    """Turn a decomposition utterance (or a literal program string) into a
    checked PlanAst. Both paths end in type_check against the current API."""
    try:
        ast = parse_program_text(text)
        return type_check(ast, api)
    except PlanSyntaxError:
        pass
    result = backend.propose(Utterance("decomposition", text), api, _EMPTY_HISTORY())
    if not isinstance(result, Proposal):
        raise PlanSyntaxError(f"could not plan decomposition step: {result.message}")
    ast = parse_program_text(result.plan_text)
    return type_check(ast, api)


def _EMPTY_HISTORY():
    from .planner import InteractionHistory

    return InteractionHistory()


def synthesize_function(surface_verb: str, decomposition_text: str,
                        original_utterance: str, api: ApiSpec, backend,
                        provenance: Optional[str] = None,
                        timestep: Optional[int] = None,
                        bound_literals: Optional[list[tuple[str, str]]] = None,
                        constant_literals: Optional[list[str]] = None) -> ApiDelta:
    """Full function-teaching path: decomposition text -> checked plan ->
    lifted FunctionSpec -> pending AddFunction delta."""
    decomposition = plan_decomposition(decomposition_text, api, backend)
    req = FunctionTeachRequest(
        surface_verb=surface_verb,
        original_utterance_id=provenance,
        decomposition=decomposition,
        bound_literals=bound_literals or [],
        constant_literals=constant_literals or [],
    )
    fn = lift_decomposition(req, original_utterance, api, timestep=timestep)
    return ApiDelta(kind=AddFunction(fn), provenance=provenance)


def substitute(fn: FunctionSpec, bindings: dict[str, LiteralRef]) -> tuple[Invocation, ...]:
    """Replace ParamRefs in a composed body by the given literals (used by
    the substitution-soundness check and the resolver oracle)."""
    assert isinstance(fn.body, ComposedBody)
    return tuple(
        Invocation(inv.function_name, tuple(
            bindings[arg.param_name] if isinstance(arg, ParamRef) else arg
            for arg in inv.args
        ))
        for inv in fn.body.invocations
    )
