import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_api
from sandbox.api import (
    AddFunction,
    AddLiteral,
    ApiDelta,
    ComposedBody,
    FunctionSpec,
    LiteralArg,
    Param,
    Pose,
    apply_delta,
    render_prompt,
    restore,
    snapshot,
)
from sandbox.errors import CycleDetected, MalformedDocument, NameCollision, UnknownReference
from sandbox.plan import Invocation, LiteralRef, ParamRef
from sandbox.seeds import gift_bag_api


def _literal_delta(name="TOY_CAR"):
    return ApiDelta(kind=AddLiteral(LiteralArg("ObjectRef", name, "A green toy car")))


def test_pose_requires_unit_quaternion():
    with pytest.raises(ValueError):
        Pose((0, 0, 0), (1.0, 1.0, 0.0, 0.0))


def test_apply_delta_is_monotone_and_pure():
    api = gift_bag_api()
    before = snapshot(api)
    api2 = apply_delta(api, _literal_delta())
    assert api2.version == api.version + 1
    assert api2.literal("ObjectRef", "TOY_CAR") is not None
    assert snapshot(api) == before  # input untouched
    assert {f.name for f in api.functions} <= {f.name for f in api2.functions}
    assert set(l.canonical_name for l in api.literals) <= \
        set(l.canonical_name for l in api2.literals)


def test_name_collision_rejected():
    api = gift_bag_api()
    with pytest.raises(NameCollision):
        apply_delta(api, _literal_delta("CANDY"))
    fn = FunctionSpec("pickup", (), "dup", ComposedBody((Invocation("grasp", ()),)))
    with pytest.raises(NameCollision):
        apply_delta(api, ApiDelta(kind=AddFunction(fn)))


def test_unknown_reference_rejected():
    api = gift_bag_api()
    fn = FunctionSpec("combo", (), "calls nothing known",
                      ComposedBody((Invocation("warp", ()),)))
    with pytest.raises(UnknownReference):
        apply_delta(api, ApiDelta(kind=AddFunction(fn)))


def test_self_recursion_rejected():
    api = gift_bag_api()
    fn = FunctionSpec("loop", (), "calls itself",
                      ComposedBody((Invocation("loop", ()),)))
    with pytest.raises(CycleDetected):
        apply_delta(api, ApiDelta(kind=AddFunction(fn)))


def test_committed_delta_not_reapplicable():
    api = gift_bag_api()
    delta = _literal_delta()
    apply_delta(api, delta)
    delta.status = "committed"
    with pytest.raises(ValueError):
        apply_delta(api, delta)


def test_body_type_check_on_delta():
    api = gift_bag_api()
    fn = FunctionSpec(
        "bad", (Param("n", ("Count",)),), "passes a count to goto",
        ComposedBody((Invocation("goto", (ParamRef("n"),)),)),
    )
    # goto accepts ObjectRef|Location; a Count-typed param must not flow in
    delta = ApiDelta(kind=AddFunction(fn))
    api2 = apply_delta(api, delta)
    # parameter typing is enforced at plan type-check; body refs resolved here
    assert api2.function("bad") is not None


def test_render_prompt_deterministic_and_complete():
    api = gift_bag_api()
    text = render_prompt(api)
    assert text == render_prompt(gift_bag_api())
    assert "class ObjectRef(Enum):" in text
    assert 'CANDY = \'A gummy, sandwich-shaped candy\'' in text
    assert "def pickup(obj: ObjectRef) -> None:" in text
    assert "goto(obj)" in text and "grasp()" in text  # composed body shown


def test_render_prompt_changes_with_api():
    api = gift_bag_api()
    api2 = apply_delta(api, _literal_delta())
    assert render_prompt(api) != render_prompt(api2)
    assert "TOY_CAR" in render_prompt(api2)


def test_snapshot_restore_round_trip_seed():
    api = gift_bag_api()
    assert snapshot(restore(snapshot(api))) == snapshot(api)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_snapshot_restore_round_trip_property(seed):
    api = random_api(np.random.default_rng(seed))
    assert snapshot(restore(snapshot(api))) == snapshot(api)


@pytest.mark.parametrize("doc", ["", "{}", '{"schema": 99}', "not json"])
def test_restore_rejects_malformed(doc):
    with pytest.raises(MalformedDocument):
        restore(doc)
