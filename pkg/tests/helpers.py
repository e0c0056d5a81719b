"""Shared fixtures: synthetic demonstrations, random acyclic APIs, and an
independent step-interpreter oracle for plan resolution."""

from __future__ import annotations

import numpy as np

from sandbox.api import (
    ApiSpec,
    ComposedBody,
    FunctionSpec,
    LiteralArg,
    Param,
    Pose,
    PrimitiveBody,
    SemanticType,
)
from sandbox.dmp import Demonstration
from sandbox.plan import IntLit, Invocation, LiteralRef, ParamRef, PlanAst
from sandbox.resolver import ObjectTarget


def minimum_jerk(s: np.ndarray) -> np.ndarray:
    return 10 * s ** 3 - 15 * s ** 4 + 6 * s ** 5


def _timed(points: np.ndarray, duration: float) -> Demonstration:
    n = len(points)
    ts = np.linspace(0.0, duration, n)
    return Demonstration(points, ts)


def line_demo(n: int = 60, duration: float = 2.0) -> Demonstration:
    s = minimum_jerk(np.linspace(0.0, 1.0, n))[:, None]
    start = np.array([0.10, -0.20, 0.05])
    end = np.array([0.40, 0.30, 0.35])
    return _timed(start + (end - start) * s, duration)


def arc_demo(n: int = 80, duration: float = 3.0) -> Demonstration:
    # 3/4 turn around a center, with a height ramp; endpoints distinct per dim
    s = minimum_jerk(np.linspace(0.0, 1.0, n))
    theta = 0.75 * np.pi * s
    center = np.array([0.20, 0.05])
    r = 0.20
    pts = np.column_stack([
        center[0] + r * np.cos(theta),
        center[1] + r * np.sin(theta),
        0.10 + 0.25 * s,
    ])
    return _timed(pts, duration)


def scurve_demo(n: int = 80, duration: float = 2.5) -> Demonstration:
    s = minimum_jerk(np.linspace(0.0, 1.0, n))
    pts = np.column_stack([
        0.05 + 0.35 * s,
        0.25 * s + 0.10 * np.sin(2.0 * np.pi * s),
        0.05 + 0.30 * s - 0.08 * np.sin(np.pi * s),
    ])
    return _timed(pts, duration)


DEMO_SUITE = {"line": line_demo, "arc": arc_demo, "scurve": scurve_demo}


# Random acyclic APIs ---------------------------------------------------------

_TYPES = (SemanticType("ObjectRef"), SemanticType("Location"), SemanticType("Count"))
_VALUE_TYPES = ("ObjectRef", "Location")


def random_api(rng: np.random.Generator, max_depth: int = 4) -> ApiSpec:
    """Random layered API: layer-0 primitives, higher layers call strictly
    lower ones, so the call graph is acyclic by construction."""
    literals = []
    for i in range(rng.integers(2, 5)):
        literals.append(LiteralArg("ObjectRef", f"OBJ_{i}", f"object number {i}"))
    for i in range(rng.integers(1, 4)):
        pos = tuple(np.round(rng.uniform(-0.4, 0.4, size=3), 3))
        literals.append(LiteralArg("Location", f"LOC_{i}", Pose(pos)))

    def random_params(k: int) -> tuple[Param, ...]:
        out = []
        for i in range(k):
            t = rng.choice(["ObjectRef", "Location", "Count"])
            out.append(Param(f"p{i}", (str(t),)))
        return tuple(out)

    layers: list[list[FunctionSpec]] = []
    prims = []
    for i in range(int(rng.integers(2, 5))):
        prims.append(FunctionSpec(
            f"prim{i}", random_params(int(rng.integers(0, 3))),
            f"Primitive {i}.", PrimitiveBody(f"tag{i}")))
    layers.append(prims)

    for depth in range(1, max_depth):
        layer = []
        for i in range(int(rng.integers(1, 4))):
            params = random_params(int(rng.integers(0, 3)))
            below = [f for l in layers for f in l]
            body = []
            for _ in range(int(rng.integers(1, 4))):
                callee = below[int(rng.integers(0, len(below)))]
                args = tuple(
                    _random_arg(rng, p.types[0], params, literals)
                    for p in callee.params
                )
                body.append(Invocation(callee.name, args))
            layer.append(FunctionSpec(
                f"fn{depth}_{i}", params, f"Composed {depth}.{i}.",
                ComposedBody(tuple(body))))
        layers.append(layer)

    return ApiSpec(version=0, types=_TYPES,
                   functions=tuple(f for l in layers for f in l),
                   literals=tuple(literals))


def _random_arg(rng, type_name: str, own_params, literals):
    compatible = [p for p in own_params if type_name in p.types]
    if compatible and rng.random() < 0.5:
        return ParamRef(compatible[int(rng.integers(0, len(compatible)))].name)
    if type_name == "Count":
        return IntLit(int(rng.integers(0, 40)))
    options = [l for l in literals if l.type_name == type_name]
    return LiteralRef(type_name, options[int(rng.integers(0, len(options)))].canonical_name)


def random_plan(rng: np.random.Generator, api: ApiSpec) -> PlanAst:
    invocations = []
    for _ in range(int(rng.integers(1, 4))):
        fn = api.functions[int(rng.integers(0, len(api.functions)))]
        args = tuple(_random_arg(rng, p.types[0], (), api.literals)
                     for p in fn.params)
        invocations.append(Invocation(fn.name, args))
    return PlanAst(tuple(invocations))


# Step-interpreter oracle -----------------------------------------------------


def oracle_resolve(ast: PlanAst, api: ApiSpec):
    """Iterative stack machine; independent of the recursive resolver."""

    def eval_arg(arg, env):
        if isinstance(arg, IntLit):
            return arg.value
        if isinstance(arg, ParamRef):
            return env[arg.param_name]
        lit = api.literal(arg.type_name, arg.canonical_name)
        if isinstance(lit.value, str):
            return ObjectTarget(lit.canonical_name, lit.value)
        return lit.value

    out = []
    stack = [(inv, {}, ()) for inv in reversed(ast.invocations)]
    while stack:
        inv, env, path = stack.pop()
        fn = api.function(inv.function_name)
        values = tuple(eval_arg(a, env) for a in inv.args)
        if isinstance(fn.body, PrimitiveBody):
            out.append((fn.body.tag, values, path + (fn.name,)))
            continue
        child_env = {p.name: v for p, v in zip(fn.params, values)}
        for body_inv in reversed(fn.body.invocations):
            stack.append((body_inv, child_env, path + (fn.name,)))
    return out
