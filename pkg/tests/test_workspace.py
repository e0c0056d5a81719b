import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import line_demo
from sandbox.api import Pose
from sandbox.dmp import fit_dmp
from sandbox.errors import SandboxError, UngroundedObject
from sandbox.resolver import ObjectTarget, PrimitiveCall, ResolvedProgram
from sandbox.seeds import GIFT_BAG_SCENE
from sandbox.workspace import (
    DmpSkill,
    GroundingRegistry,
    OverheadCamera,
    Workspace,
    WorkspaceBounds,
)


def _ws(**kwargs):
    return Workspace(GIFT_BAG_SCENE, **kwargs)


def _call(tag, *args, provenance=None):
    return PrimitiveCall(tag, tuple(args), provenance or (tag,))


def _goto(name):
    return _call("goto", ObjectTarget(name, name.lower()))


# Camera ----------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.75, 0.75), st.floats(0.0, 0.8))
def test_camera_project_deproject_inverse(x, y, z):
    cam = OverheadCamera()
    px, py = cam.project((x, y, z))
    assert np.allclose(cam.deproject(px, py, z), [x, y, z], atol=1e-12)


def test_camera_known_pixel():
    # toy car at [0.30, 0.25, 0] under the calibrated overhead camera
    cam = OverheadCamera()
    assert cam.project((0.30, 0.25, 0.0)) == (445.0, 390.0)
    assert cam.project((0.0, 0.0, 0.0)) == (320.0, 240.0)  # optical center


def test_object_at_keypoint_picks_nearest():
    ws = _ws()
    px, py = ws.keypoint_of(ws.objects["toy_car"])
    assert ws.object_at_keypoint(px + 3.0, py - 2.0).id == "toy_car"


# Grounding registry ----------------------------------------------------------


def test_bind_once_semantics():
    reg = GroundingRegistry()
    reg.bind("CANDY", "candy")
    reg.bind("CANDY", "candy")  # same target is a no-op
    with pytest.raises(SandboxError):
        reg.bind("CANDY", "play_doh")
    assert reg.bindings == {"CANDY": "candy"}


def test_register_keypoint_marks_taught():
    ws = _ws()
    obj = ws.register_keypoint("TOY_CAR", 445.0, 390.0, timestamp_ms=17)
    assert obj.id == "toy_car"
    assert "TOY_CAR" in ws.registry.taught
    assert ws.registry.teach_log == [("TOY_CAR", (445.0, 390.0), 17)]


def test_ground_unknown_name_raises():
    with pytest.raises(UngroundedObject):
        _ws().ground_object("GHOST")


def test_error_injection_returns_nearest_neighbor():
    ws = _ws(p_err=1.0)
    obj, injected = ws._ground("CANDY")
    assert injected
    # nearest other object to the candy at [0.20, -0.30]
    assert obj.id == "play_doh"


def test_taught_names_exempt_from_injection():
    ws = _ws(p_err=1.0)
    ws.register_keypoint("TOY_CAR", 445.0, 390.0)
    obj, injected = ws._ground("TOY_CAR")
    assert (obj.id, injected) == ("toy_car", False)


def test_injected_goto_surfaces_skill_failure():
    ws = _ws(p_err=1.0)
    outcome = ws.execute_primitive(_goto("CANDY"))
    assert not outcome.ok and outcome.reason == "SimulatedGroundingError"
    assert outcome.trace["object"] == "play_doh"
    # the arm really moved: failure is detected above the wrong object
    assert np.allclose(ws.effector.position[:2], [0.25, 0.00])


# Primitive skills ------------------------------------------------------------


def test_goto_hovers_above_target():
    ws = _ws()
    outcome = ws.execute_primitive(_goto("CANDY"))
    assert outcome.ok
    assert np.allclose(ws.effector.position, [0.20, -0.30, 0.10])
    steps = np.linalg.norm(np.diff(outcome.trajectory.positions, axis=0), axis=1)
    assert np.all(steps <= 0.025 + 1e-9)  # 0.25 m/s at 10 Hz


def test_goto_pose_and_go_home():
    ws = _ws()
    pose = Pose((0.1, 0.1, 0.2))
    assert ws.execute_primitive(_call("goto", pose)).ok
    assert np.allclose(ws.effector.position, [0.1, 0.1, 0.3])  # hover offset
    assert ws.execute_primitive(_call("go_home")).ok
    assert np.allclose(ws.effector.position, ws.home_position)


def test_out_of_bounds_rejected_without_motion():
    ws = _ws()
    before = ws.effector.position.copy()
    outcome = ws.execute_primitive(_call("goto", Pose((0.9, 0.0, 0.2))))
    assert not outcome.ok and outcome.reason == "OutOfBounds"
    assert np.array_equal(ws.effector.position, before)


def test_grasp_release_cycle():
    ws = _ws()
    assert ws.execute_primitive(_goto("CANDY")).ok
    grasp = ws.execute_primitive(_call("grasp"))
    assert grasp.ok and ws.effector.held_object == "candy"
    assert ws.objects["candy"].grasped
    # held object rides 0.10 m under the effector during transport
    assert ws.execute_primitive(_goto("GIFT_BAG")).ok
    assert np.allclose(ws.objects["candy"].position,
                       ws.effector.position - [0.0, 0.0, 0.10])
    release = ws.execute_primitive(_call("release"))
    assert release.ok and ws.effector.held_object is None
    assert np.allclose(ws.objects["candy"].position, [0.10, 0.45, 0.0])


def test_grasp_failures():
    ws = _ws()
    assert ws.execute_primitive(_call("grasp")).reason == "NothingGrasped"
    assert ws.effector.gripper == "open"
    ws.execute_primitive(_goto("CANDY"))
    assert ws.execute_primitive(_call("grasp")).ok
    again = ws.execute_primitive(_call("grasp"))
    assert not again.ok and again.reason == "NothingGrasped"


def test_release_with_empty_gripper_is_noop_success():
    ws = _ws()
    assert ws.execute_primitive(_call("release")).ok


def test_interrupt_stops_motion():
    ws = _ws()
    hits = {"n": 0}

    def check():
        hits["n"] += 1
        return hits["n"] > 3

    outcome = ws.execute_primitive(_goto("GIFT_BAG"), interrupt_check=check)
    assert not outcome.ok and outcome.reason == "UserInterrupt"
    assert not np.allclose(ws.effector.position, [0.10, 0.45, 0.10])


# DMP skills ------------------------------------------------------------------


def _tracking_skill():
    demo = line_demo()
    params = fit_dmp(demo)
    return DmpSkill("track", params, ref_target_position=params.goal.copy())


def test_dmp_skill_goal_generalization():
    ws = _ws()
    ws.register_dmp_skill(_tracking_skill())
    outcome = ws.execute_dmp_skill("track", ObjectTarget("CANDY", "candy"))
    assert outcome.ok
    assert np.allclose(ws.effector.position, [0.20, -0.30, 0.0], atol=1e-3)
    assert outcome.trace["skill"] == "track"


def test_dmp_skill_step_count_override():
    ws = _ws()
    ws.register_dmp_skill(_tracking_skill())
    out = ws.execute_dmp_skill("track", Pose((0.1, 0.1, 0.2)), step_count=8)
    assert out.ok and len(out.trajectory) == 8


def test_dmp_skill_unknown_or_ungrounded():
    ws = _ws()
    assert ws.execute_dmp_skill("nope", Pose((0, 0, 0.1))).reason == "UngroundedObject"
    ws.register_dmp_skill(_tracking_skill())
    out = ws.execute_dmp_skill("track", ObjectTarget("GHOST", "missing"))
    assert out.reason == "UngroundedObject"


def test_dmp_dispatch_through_execute_primitive():
    ws = _ws()
    ws.register_dmp_skill(_tracking_skill())
    out = ws.execute_primitive(_call("dmp:track", ObjectTarget("CANDY", "candy")))
    assert out.ok


# Preview ---------------------------------------------------------------------


def _pack_program():
    return ResolvedProgram(calls=(
        _goto("CANDY"), _call("grasp"), _goto("GIFT_BAG"), _call("release"),
    ))


def test_preview_matches_execution_and_leaves_state_untouched():
    program = _pack_program()
    ws = _ws(p_err=0.3, seed=5)
    before = ws.scene_doc()
    previews = ws.preview_program(program)
    assert ws.scene_doc() == before  # preview is pure

    # previews ignore p_err, so compare against a clean executor
    clean = _ws()
    executed = []
    for call in program.calls:
        out = clean.execute_primitive(call)
        assert out.ok
        if out.trajectory is not None:
            executed.append(out.trajectory)
    assert len(previews) == len(executed)
    for a, b in zip(previews, executed):
        assert np.array_equal(a.positions, b.positions)


def test_preview_stops_at_first_failure():
    program = ResolvedProgram(calls=(
        _call("grasp"), _goto("CANDY"),
    ))
    previews = _ws().preview_program(program)
    assert previews == []  # failed grasp has no trajectory, preview stops


# Bounds / serialization ------------------------------------------------------


def test_bounds_contains():
    b = WorkspaceBounds()
    assert b.contains((0.0, 0.0, 0.0)) and not b.contains((0.51, 0.0, 0.0))
    assert b.contains_all(np.array([[0, 0, 0], [0.5, 0.75, 0.8]]))
    assert not b.contains_all(np.array([[0, 0, 0], [0, 0, -0.01]]))


def test_scene_doc_shape():
    ws = _ws()
    doc = ws.scene_doc()
    assert {o["id"] for o in doc["objects"]} == {"candy", "play_doh", "toy_car", "gift_bag"}
    assert doc["bindings"]["CANDY"] == "candy"
    assert doc["effector"]["gripper"] == "open"
    for o in doc["objects"]:
        px, py = o["keypoint_px"]
        assert 0 <= px <= 640 and 0 <= py <= 480
