"""Versioned API specification: functions, typed literals, and teaching deltas.

The API is an immutable value. Teaching produces pending deltas; committing a
delta yields a new spec with version + 1 and never removes or mutates an
existing entry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

from .errors import CycleDetected, MalformedDocument, NameCollision, UnknownReference
from .plan import COUNT_TYPE, Arg, IntLit, Invocation, LiteralRef, ParamRef

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Pose:
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        norm = math.sqrt(sum(q * q for q in self.orientation))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"orientation not unit norm: {self.orientation}")
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "orientation", tuple(float(v) for v in self.orientation))


GroundValue = Union[str, int, Pose]  # description string | frame count | pose


@dataclass(frozen=True)
class SemanticType:
    name: str


@dataclass(frozen=True)
class LiteralArg:
    type_name: str
    canonical_name: str
    value: GroundValue

    def surface(self) -> str:
        return self.canonical_name.lower().replace("_", " ")


@dataclass(frozen=True)
class Param:
    name: str
    types: tuple[str, ...]  # union of SemanticType names

    def type_text(self) -> str:
        return "|".join(self.types)


@dataclass(frozen=True)
class PrimitiveBody:
    tag: str  # go_home | goto | grasp | release | dmp:<skill_id>


@dataclass(frozen=True)
class ComposedBody:
    invocations: tuple[Invocation, ...]


Body = Union[PrimitiveBody, ComposedBody]


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    params: tuple[Param, ...]
    docstring: str
    body: Body
    returns: str = "None"
    origin: str = "builtin"  # "builtin" | "taught:<timestep>"

    def signature_text(self) -> str:
        args = ", ".join(f"{p.name}: {p.type_text()}" for p in self.params)
        return f"{self.name}({args}) -> {self.returns}"


@dataclass(frozen=True)
class ApiSpec:
    version: int = 0
    types: tuple[SemanticType, ...] = ()
    functions: tuple[FunctionSpec, ...] = ()
    literals: tuple[LiteralArg, ...] = ()

    def function(self, name: str) -> Optional[FunctionSpec]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def literal(self, type_name: str, canonical_name: str) -> Optional[LiteralArg]:
        for lit in self.literals:
            if lit.type_name == type_name and lit.canonical_name == canonical_name:
                return lit
        return None

    def literal_named(self, canonical_name: str) -> Optional[LiteralArg]:
        for lit in self.literals:
            if lit.canonical_name == canonical_name:
                return lit
        return None

    def literals_of(self, type_name: str) -> list[LiteralArg]:
        return [l for l in self.literals if l.type_name == type_name]

    def has_type(self, name: str) -> bool:
        return any(t.name == name for t in self.types)


@dataclass(frozen=True)
class AddLiteral:
    literal: LiteralArg


@dataclass(frozen=True)
class AddFunction:
    function: FunctionSpec


@dataclass
class ApiDelta:
    kind: Union[AddLiteral, AddFunction]
    provenance: Optional[str] = None  # utterance id
    status: str = "pending"  # pending | committed | rolled_back

    def describe(self) -> str:
        if isinstance(self.kind, AddLiteral):
            lit = self.kind.literal
            return f"add literal {lit.type_name}.{lit.canonical_name}"
        return f"add function {self.kind.function.signature_text()}"


def _validate_body_refs(fn: FunctionSpec, api: ApiSpec) -> None:
    if isinstance(fn.body, PrimitiveBody):
        return
    param_names = {p.name for p in fn.params}
    for inv in fn.body.invocations:
        callee = api.function(inv.function_name)
        if callee is None:
            raise UnknownReference(f"body of {fn.name} calls unknown {inv.function_name}")
        if len(inv.args) != len(callee.params):
            raise UnknownReference(
                f"body of {fn.name}: {inv.function_name} arity mismatch"
            )
        for arg, param in zip(inv.args, callee.params):
            if isinstance(arg, LiteralRef):
                if api.literal(arg.type_name, arg.canonical_name) is None:
                    raise UnknownReference(f"body of {fn.name} names unknown {arg}")
                if arg.type_name not in param.types:
                    raise UnknownReference(
                        f"body of {fn.name}: {arg} does not fit {param.type_text()}"
                    )
            elif isinstance(arg, ParamRef):
                if arg.param_name not in param_names:
                    raise UnknownReference(
                        f"body of {fn.name} uses unbound parameter {arg.param_name}"
                    )
            elif isinstance(arg, IntLit):
                if COUNT_TYPE not in param.types:
                    raise UnknownReference(
                        f"body of {fn.name}: integer arg for non-{COUNT_TYPE} parameter"
                    )


def _check_acyclic(functions: Iterable[FunctionSpec]) -> None:
    graph = {
        f.name: [inv.function_name for inv in f.body.invocations]
        if isinstance(f.body, ComposedBody) else []
        for f in functions
    }
    state: dict[str, int] = {}  # 0 = visiting, 1 = done

    def visit(name: str, stack: tuple[str, ...]):
        if state.get(name) == 1:
            return
        if state.get(name) == 0:
            raise CycleDetected(" -> ".join(stack + (name,)))
        state[name] = 0
        for callee in graph.get(name, []):
            visit(callee, stack + (name,))
        state[name] = 1

    for name in graph:
        visit(name, ())


def apply_delta(api: ApiSpec, delta: ApiDelta) -> ApiSpec:
    """Return a new ApiSpec (version + 1) with the delta's addition applied.

    The input spec is never mutated; the delta's status is left untouched
    (commit bookkeeping belongs to the session).
    """
    if delta.status != "pending":
        raise ValueError(f"delta is {delta.status}, not pending")
    if isinstance(delta.kind, AddLiteral):
        lit = delta.kind.literal
        if not api.has_type(lit.type_name):
            raise UnknownReference(f"literal type {lit.type_name} not in API")
        if api.literal(lit.type_name, lit.canonical_name) is not None:
            raise NameCollision(f"{lit.type_name}.{lit.canonical_name}")
        return replace(api, version=api.version + 1, literals=api.literals + (lit,))
    fn = delta.kind.function
    if api.function(fn.name) is not None:
        raise NameCollision(fn.name)
    for p in fn.params:
        for t in p.types:
            if not api.has_type(t):
                raise UnknownReference(f"parameter type {t} not in API")
    candidate = replace(api, functions=api.functions + (fn,))
    _validate_body_refs(fn, candidate)
    if isinstance(fn.body, ComposedBody) and any(
        inv.function_name == fn.name for inv in fn.body.invocations
    ):
        raise CycleDetected(fn.name)
    _check_acyclic(candidate.functions)
    return replace(candidate, version=api.version + 1)


# Prompt rendering ------------------------------------------------------------


def render_prompt(api: ApiSpec) -> str:
    """Deterministic Python-code-block rendering of the API for an LM prompt.

    Same spec => byte-identical text. Literal enums come first (sorted by
    type then name), followed by function stubs sorted by name.
    """
    lines: list[str] = ["```python"]
    for t in sorted(api.types, key=lambda t: t.name):
        if t.name in (COUNT_TYPE, "None"):
            continue
        lines.append(f"class {t.name}(Enum):")
        members = sorted(api.literals_of(t.name), key=lambda l: l.canonical_name)
        if not members:
            lines.append("    ...")
        for lit in members:
            lines.append(f"    {lit.canonical_name} = {_render_value(lit.value)}")
        lines.append("")
    for fn in sorted(api.functions, key=lambda f: f.name):
        args = ", ".join(f"{p.name}: {p.type_text()}" for p in fn.params)
        lines.append(f"def {fn.name}({args}) -> {fn.returns}:")
        lines.append(f'    """{fn.docstring}"""')
        if isinstance(fn.body, ComposedBody):
            for inv in fn.body.invocations:
                lines.append(f"    {inv}")
        else:
            lines.append("    ...")
        lines.append("")
    lines.append("```")
    return "\n".join(lines)


def _render_value(value: GroundValue) -> str:
    if isinstance(value, Pose):
        pos = ", ".join(f"{v:.3f}" for v in value.position)
        rot = ", ".join(f"{v:.3f}" for v in value.orientation)
        return f"([{pos}], [{rot}])"
    return repr(value)


# Snapshot / restore ----------------------------------------------------------


def _arg_to_doc(arg: Arg) -> dict:
    if isinstance(arg, LiteralRef):
        return {"kind": "literal", "type": arg.type_name, "name": arg.canonical_name}
    if isinstance(arg, ParamRef):
        return {"kind": "param", "name": arg.param_name}
    return {"kind": "int", "value": arg.value}


def _arg_from_doc(doc: dict) -> Arg:
    kind = doc["kind"]
    if kind == "literal":
        return LiteralRef(doc["type"], doc["name"])
    if kind == "param":
        return ParamRef(doc["name"])
    if kind == "int":
        return IntLit(doc["value"])
    raise MalformedDocument(f"bad arg kind {kind!r}")


def invocation_to_doc(inv: Invocation) -> dict:
    return {"function": inv.function_name, "args": [_arg_to_doc(a) for a in inv.args]}


def invocation_from_doc(doc: dict) -> Invocation:
    return Invocation(doc["function"], tuple(_arg_from_doc(a) for a in doc["args"]))


def value_to_doc(value: GroundValue) -> dict:
    if isinstance(value, Pose):
        return {"kind": "pose", "position": list(value.position),
                "orientation": list(value.orientation)}
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise MalformedDocument(f"bad ground value {value!r}")
    if isinstance(value, int):
        return {"kind": "int", "value": value}
    return {"kind": "description", "value": value}


def value_from_doc(doc: dict) -> GroundValue:
    kind = doc.get("kind")
    if kind == "pose":
        return Pose(tuple(doc["position"]), tuple(doc["orientation"]))
    if kind in ("int", "description"):
        return doc["value"]
    raise MalformedDocument(f"bad value kind {kind!r}")


def function_to_doc(fn: FunctionSpec) -> dict:
    doc: dict = {
        "name": fn.name,
        "params": [{"name": p.name, "types": list(p.types)} for p in fn.params],
        "docstring": fn.docstring,
        "returns": fn.returns,
        "origin": fn.origin,
    }
    if isinstance(fn.body, PrimitiveBody):
        doc["body"] = {"kind": "primitive", "tag": fn.body.tag}
    else:
        doc["body"] = {
            "kind": "composed",
            "invocations": [invocation_to_doc(i) for i in fn.body.invocations],
        }
    return doc


def function_from_doc(doc: dict) -> FunctionSpec:
    body_doc = doc["body"]
    if body_doc["kind"] == "primitive":
        body: Body = PrimitiveBody(body_doc["tag"])
    elif body_doc["kind"] == "composed":
        body = ComposedBody(tuple(invocation_from_doc(i) for i in body_doc["invocations"]))
    else:
        raise MalformedDocument(f"bad body kind {body_doc['kind']!r}")
    return FunctionSpec(
        name=doc["name"],
        params=tuple(Param(p["name"], tuple(p["types"])) for p in doc["params"]),
        docstring=doc["docstring"],
        body=body,
        returns=doc.get("returns", "None"),
        origin=doc.get("origin", "builtin"),
    )


def snapshot(api: ApiSpec) -> str:
    doc = {
        "schema": SCHEMA_VERSION,
        "version": api.version,
        "types": [t.name for t in api.types],
        "functions": [function_to_doc(f) for f in api.functions],
        "literals": [
            {"type": l.type_name, "name": l.canonical_name, "value": value_to_doc(l.value)}
            for l in api.literals
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def restore(document: str) -> ApiSpec:
    try:
        doc = json.loads(document)
        if doc.get("schema") != SCHEMA_VERSION:
            raise MalformedDocument(f"unsupported schema {doc.get('schema')!r}")
        return ApiSpec(
            version=doc["version"],
            types=tuple(SemanticType(n) for n in doc["types"]),
            functions=tuple(function_from_doc(f) for f in doc["functions"]),
            literals=tuple(
                LiteralArg(l["type"], l["name"], value_from_doc(l["value"]))
                for l in doc["literals"]
            ),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
        if isinstance(e, MalformedDocument):
            raise
        raise MalformedDocument(str(e)) from e
