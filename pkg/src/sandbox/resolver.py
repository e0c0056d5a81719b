"""Plan resolution: expand composed bodies into primitive calls and ground
arguments.

Location and Count arguments are ground at resolution time; ObjectRef
arguments stay symbolic (name + description) and are looked up in the
grounding registry at execution time, so scene changes between confirmation
and execution use fresh poses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .api import ApiSpec, ComposedBody, LiteralArg, Pose, PrimitiveBody
from .errors import UngroundedObject, UnknownReference
from .plan import Arg, IntLit, Invocation, LiteralRef, ParamRef, PlanAst


@dataclass(frozen=True)
class ObjectTarget:
    """Late-bound ObjectRef value: the registry resolves the pose at
    execution time, keyed by canonical name."""
    canonical_name: str
    description: str


ResolvedArg = Union[Pose, int, ObjectTarget]


@dataclass(frozen=True)
class PrimitiveCall:
    skill_tag: str  # go_home | goto | grasp | release | dmp:<skill_id>
    resolved_args: tuple[ResolvedArg, ...]
    provenance: tuple[str, ...]  # function-name path from the plan root


@dataclass(frozen=True)
class ResolvedProgram:
    calls: tuple[PrimitiveCall, ...]
    source_utterance_id: Optional[str] = None
    api_version: Optional[int] = None


def resolve_literal_value(literal: LiteralArg) -> ResolvedArg:
    if isinstance(literal.value, str):
        return ObjectTarget(literal.canonical_name, literal.value)
    return literal.value


def resolve_argument(literal: LiteralArg, registry) -> "Pose":
    """Ground a literal to a pose using the scene registry (execution-time
    path for ObjectRef; Locations pass their stored pose through)."""
    if isinstance(literal.value, Pose):
        return literal.value
    if isinstance(literal.value, str):
        obj = registry.lookup(literal.canonical_name)
        if obj is None:
            raise UngroundedObject(literal.canonical_name)
        return obj.pose
    raise UnknownReference(f"{literal.canonical_name} has no pose")


def _resolve_arg(arg: Arg, api: ApiSpec, env: dict[str, ResolvedArg]) -> ResolvedArg:
    if isinstance(arg, IntLit):
        return arg.value
    if isinstance(arg, ParamRef):
        return env[arg.param_name]
    literal = api.literal(arg.type_name, arg.canonical_name)
    if literal is None:
        raise UnknownReference(str(arg))
    return resolve_literal_value(literal)


def _expand(inv: Invocation, api: ApiSpec, env: dict[str, ResolvedArg],
            path: tuple[str, ...], out: list[PrimitiveCall]) -> None:
    fn = api.function(inv.function_name)
    if fn is None:
        raise UnknownReference(inv.function_name)
    values = [_resolve_arg(a, api, env) for a in inv.args]
    if isinstance(fn.body, PrimitiveBody):
        out.append(PrimitiveCall(fn.body.tag, tuple(values), path + (fn.name,)))
        return
    child_env = {p.name: v for p, v in zip(fn.params, values)}
    for body_inv in fn.body.invocations:
        _expand(body_inv, api, child_env, path + (fn.name,), out)


def resolve_plan(ast: PlanAst, api: ApiSpec) -> ResolvedProgram:
    """Depth-first expansion of composed bodies with parameter substitution;
    primitives are emitted in execution order. Acyclicity is guaranteed at
    delta-commit time, so expansion terminates."""
    calls: list[PrimitiveCall] = []
    for inv in ast.invocations:
        _expand(inv, api, {}, (), calls)
    return ResolvedProgram(
        calls=tuple(calls),
        source_utterance_id=ast.source_utterance_id,
        api_version=ast.api_version if ast.api_version is not None else api.version,
    )


def resolved_arg_to_doc(value: ResolvedArg) -> dict:
    if isinstance(value, Pose):
        return {"kind": "pose", "position": list(value.position),
                "orientation": list(value.orientation)}
    if isinstance(value, ObjectTarget):
        return {"kind": "object", "name": value.canonical_name,
                "description": value.description}
    return {"kind": "int", "value": value}


def program_to_doc(program: ResolvedProgram) -> dict:
    return {
        "kind": "resolved_program",
        "source_utterance_id": program.source_utterance_id,
        "api_version": program.api_version,
        "calls": [
            {
                "skill": c.skill_tag,
                "args": [resolved_arg_to_doc(a) for a in c.resolved_args],
                "provenance": list(c.provenance),
            }
            for c in program.calls
        ],
    }
