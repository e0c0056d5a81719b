"""Simulated tabletop scene and kinematic point effector.

Replaces the physical robot: objects live on a table plane under a fixed
overhead pinhole camera, the effector flies straight lines between hover
poses, and DMP skills roll out against scene-relative goals. Grounding is a
session-persistent name -> object binding with optional seeded error
injection to mimic perception failures.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .api import Pose
from .dmp import DmpParams, RolloutConfig, Trajectory, rollout
from .errors import SandboxError, UngroundedObject
from .resolver import ObjectTarget, PrimitiveCall, ResolvedProgram

TABLE_Z = 0.0
HOVER_HEIGHT = 0.10  # goto stops this far above the target
GRASP_RADIUS = 0.03  # horizontal reach of the gripper
GOTO_SPEED = 0.25  # m/s
GOTO_RATE_HZ = 10.0

FAILURE_REASONS = (
    "OutOfBounds", "NothingGrasped", "UserInterrupt",
    "UngroundedObject", "SimulatedGroundingError",
)


@dataclass
class WorkspaceBounds:
    x: tuple[float, float] = (-0.5, 0.5)
    y: tuple[float, float] = (-0.75, 0.75)
    z: tuple[float, float] = (0.0, 0.8)

    def contains(self, position) -> bool:
        px, py, pz = position
        return (self.x[0] <= px <= self.x[1] and self.y[0] <= py <= self.y[1]
                and self.z[0] <= pz <= self.z[1])

    def contains_all(self, positions: np.ndarray) -> bool:
        return all(self.contains(p) for p in positions)


@dataclass
class OverheadCamera:
    """Calibrated pinhole looking straight down at the table plane."""
    height: float = 1.2
    fx: float = 600.0
    fy: float = 600.0
    cx: float = 320.0
    cy: float = 240.0

    def project(self, position) -> tuple[float, float]:
        x, y, z = position
        depth = self.height - z
        return (self.cx + self.fx * y / depth, self.cy + self.fy * x / depth)

    def deproject(self, px: float, py: float, z: float = TABLE_Z) -> np.ndarray:
        depth = self.height - z
        y = (px - self.cx) * depth / self.fx
        x = (py - self.cy) * depth / self.fy
        return np.array([x, y, z])


@dataclass
class SceneObject:
    id: str
    description: str
    position: np.ndarray  # (3,)
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    grasped: bool = False

    @property
    def pose(self) -> Pose:
        return Pose(tuple(self.position), self.orientation)


@dataclass
class EffectorState:
    position: np.ndarray
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    gripper: str = "open"  # open | closed
    held_object: Optional[str] = None

    @property
    def pose(self) -> Pose:
        return Pose(tuple(self.position), self.orientation)


@dataclass
class SkillOutcome:
    status: str  # success | failure
    reason: Optional[str] = None  # one of FAILURE_REASONS when failed
    trajectory: Optional[Trajectory] = None
    trace: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "success"


@dataclass
class GroundingRegistry:
    """Session-persistent map from ObjectRef canonical name to object id.

    A name, once bound, never rebinds. Click-taught bindings are exempt
    from error injection (the operator pinned the instance)."""
    bindings: dict[str, str] = field(default_factory=dict)
    taught: set[str] = field(default_factory=set)
    teach_log: list[tuple[str, tuple[float, float], int]] = field(default_factory=list)

    def bind(self, name: str, object_id: str, keypoint_px=None,
             timestamp_ms: int = 0, taught: bool = False) -> None:
        if name in self.bindings:
            if self.bindings[name] != object_id:
                raise SandboxError(f"{name} is already bound to {self.bindings[name]}")
            return
        self.bindings[name] = object_id
        if taught:
            self.taught.add(name)
            self.teach_log.append((name, tuple(keypoint_px or (0.0, 0.0)), timestamp_ms))


@dataclass
class DmpSkill:
    skill_id: str
    params: DmpParams
    ref_target_position: np.ndarray  # position of the taught reference target
    default_step_count: int = 30
    default_dt: float = 0.1

    def goal_for(self, target_position: np.ndarray) -> np.ndarray:
        # goal generalization: keep the demo's goal offset from its target
        return target_position + (self.params.goal - self.ref_target_position)


class Workspace:
    def __init__(self, scene: dict, bounds: Optional[WorkspaceBounds] = None,
                 camera: Optional[OverheadCamera] = None, p_err: float = 0.0,
                 seed: int = 0, home_position=(0.36, 0.00, 0.49)):
        self.bounds = bounds or WorkspaceBounds()
        self.camera = camera or OverheadCamera()
        self.objects: dict[str, SceneObject] = {}
        for obj in scene.get("objects", []):
            self.objects[obj["id"]] = SceneObject(
                id=obj["id"],
                description=obj["description"],
                position=np.asarray(obj["position"], dtype=float),
                orientation=tuple(obj.get("orientation", (1.0, 0.0, 0.0, 0.0))),
            )
        self.registry = GroundingRegistry()
        for name, oid in scene.get("bindings", {}).items():
            self.registry.bind(name, oid)
        self.home_position = np.asarray(home_position, dtype=float)
        self.effector = EffectorState(position=self.home_position.copy())
        self.p_err = p_err
        self.rng = np.random.default_rng(seed)
        self.dmp_skills: dict[str, DmpSkill] = {}

    # Grounding ---------------------------------------------------------------

    def lookup(self, name: str) -> Optional[SceneObject]:
        oid = self.registry.bindings.get(name)
        return self.objects.get(oid) if oid else None

    def _ground(self, name: str) -> tuple[SceneObject, bool]:
        """Resolve a bound name; the flag reports a simulated perception
        failure (nearest-neighbor wrong object). Click-taught names are
        exempt from injection."""
        obj = self.lookup(name)
        if obj is None:
            raise UngroundedObject(name)
        if (self.p_err > 0.0 and name not in self.registry.taught
                and len(self.objects) > 1
                and self.rng.random() < self.p_err):
            others = [o for o in self.objects.values() if o.id != obj.id]
            others.sort(key=lambda o: float(np.linalg.norm(o.position - obj.position)))
            return others[0], True
        return obj, False

    def ground_object(self, name: str) -> SceneObject:
        return self._ground(name)[0]

    def keypoint_of(self, obj: SceneObject) -> tuple[float, float]:
        return self.camera.project(obj.position)

    def object_at_keypoint(self, px: float, py: float) -> SceneObject:
        point = self.camera.deproject(px, py)
        return min(self.objects.values(),
                   key=lambda o: float(np.linalg.norm(o.position[:2] - point[:2])))

    def register_keypoint(self, name: str, px: float, py: float,
                          timestamp_ms: int = 0) -> SceneObject:
        obj = self.object_at_keypoint(px, py)
        self.registry.bind(name, obj.id, keypoint_px=(px, py),
                           timestamp_ms=timestamp_ms, taught=True)
        return obj

    # Primitive execution -----------------------------------------------------

    def _target_position(self, value) -> np.ndarray:
        if isinstance(value, Pose):
            return np.asarray(value.position, dtype=float)
        if isinstance(value, ObjectTarget):
            obj = self.ground_object(value.canonical_name)
            return obj.position.copy()
        raise SandboxError(f"cannot derive a position from {value!r}")

    def _line_to(self, target: np.ndarray) -> Trajectory:
        start = self.effector.position
        dist = float(np.linalg.norm(target - start))
        steps = max(2, int(np.ceil(dist / (GOTO_SPEED / GOTO_RATE_HZ))) + 1)
        pts = np.linspace(start, target, steps)
        quats = np.tile(self.effector.orientation, (steps, 1))
        return Trajectory(positions=pts, orientations=quats, dt=1.0 / GOTO_RATE_HZ)

    def _move_along(self, traj: Trajectory,
                    interrupt_check: Optional[Callable[[], bool]] = None,
                    on_step: Optional[Callable[[int, np.ndarray], None]] = None
                    ) -> Optional[str]:
        for i, pos in enumerate(traj.positions):
            if interrupt_check is not None and interrupt_check():
                return "UserInterrupt"
            assert self.bounds.contains(pos), "executed pose left the workspace"
            self.effector.position = np.asarray(pos, dtype=float).copy()
            self.effector.orientation = tuple(traj.orientations[i])
            if self.effector.held_object:
                held = self.objects[self.effector.held_object]
                held.position = self.effector.position - np.array([0.0, 0.0, HOVER_HEIGHT])
            if on_step is not None:
                on_step(i, pos)
        return None

    def execute_primitive(self, call: PrimitiveCall,
                          interrupt_check=None, on_step=None) -> SkillOutcome:
        tag = call.skill_tag
        if tag.startswith("dmp:"):
            target = call.resolved_args[0] if call.resolved_args else None
            n = next((a for a in call.resolved_args if isinstance(a, int)), None)
            return self.execute_dmp_skill(tag[4:], target, step_count=n,
                                          interrupt_check=interrupt_check,
                                          on_step=on_step)
        if tag == "go_home":
            return self._goto_position(self.home_position, {"target": "HOME"},
                                       hover=0.0, interrupt_check=interrupt_check,
                                       on_step=on_step)
        if tag == "goto":
            value = call.resolved_args[0]
            trace: dict = {}
            injected = False
            if isinstance(value, ObjectTarget):
                try:
                    obj, injected = self._ground(value.canonical_name)
                except UngroundedObject as e:
                    return SkillOutcome("failure", "UngroundedObject",
                                        trace={"name": e.canonical_name})
                target = obj.position.copy()
                trace = {"target": value.canonical_name, "object": obj.id,
                         "keypoint": self.keypoint_of(obj)}
            else:
                target = self._target_position(value)
            outcome = self._goto_position(target, trace, hover=HOVER_HEIGHT,
                                          interrupt_check=interrupt_check,
                                          on_step=on_step)
            if injected and outcome.ok:
                # moved above the wrong object; surfaced as a skill failure
                return SkillOutcome("failure", "SimulatedGroundingError",
                                    trajectory=outcome.trajectory, trace=trace)
            return outcome
        if tag == "grasp":
            return self._grasp()
        if tag == "release":
            return self._release()
        return SkillOutcome("failure", "UngroundedObject",
                            trace={"error": f"unknown primitive {tag}"})

    def _goto_position(self, target: np.ndarray, trace: dict, hover: float,
                       interrupt_check=None, on_step=None) -> SkillOutcome:
        destination = target + np.array([0.0, 0.0, hover])
        traj = self._line_to(destination)
        if not self.bounds.contains_all(traj.positions):
            return SkillOutcome("failure", "OutOfBounds", trace=trace)
        reason = self._move_along(traj, interrupt_check, on_step)
        if reason:
            return SkillOutcome("failure", reason, trajectory=traj, trace=trace)
        return SkillOutcome("success", trajectory=traj, trace=trace)

    def _grasp(self) -> SkillOutcome:
        if self.effector.held_object:
            return SkillOutcome("failure", "NothingGrasped",
                                trace={"error": "gripper already holding"})
        self.effector.gripper = "closed"
        tip = self.effector.position
        candidates = [
            o for o in self.objects.values()
            if not o.grasped
            and np.linalg.norm(o.position[:2] - tip[:2]) <= GRASP_RADIUS
        ]
        if not candidates:
            self.effector.gripper = "open"
            return SkillOutcome("failure", "NothingGrasped")
        obj = min(candidates, key=lambda o: float(np.linalg.norm(o.position - tip)))
        obj.grasped = True
        obj.position = tip - np.array([0.0, 0.0, HOVER_HEIGHT])
        self.effector.held_object = obj.id
        return SkillOutcome("success", trace={"object": obj.id})

    def _release(self) -> SkillOutcome:
        self.effector.gripper = "open"
        held = self.effector.held_object
        if held:
            obj = self.objects[held]
            obj.grasped = False
            obj.position = np.array([self.effector.position[0],
                                     self.effector.position[1], TABLE_Z])
            self.effector.held_object = None
            return SkillOutcome("success", trace={"object": held})
        return SkillOutcome("success")

    # DMP skills --------------------------------------------------------------

    def register_dmp_skill(self, skill: DmpSkill) -> None:
        self.dmp_skills[skill.skill_id] = skill

    def execute_dmp_skill(self, skill_id: str, target, step_count: Optional[int] = None,
                          interrupt_check=None, on_step=None) -> SkillOutcome:
        skill = self.dmp_skills.get(skill_id)
        if skill is None:
            return SkillOutcome("failure", "UngroundedObject",
                                trace={"error": f"unknown skill {skill_id}"})
        try:
            target_pos = self._target_position(target)
        except UngroundedObject as e:
            return SkillOutcome("failure", "UngroundedObject",
                                trace={"name": e.canonical_name})
        traj = self.rollout_skill(skill, target_pos, step_count)
        trace = {"skill": skill_id, "goal": traj.positions[-1].tolist(),
                 "demo_goal": skill.params.goal.tolist()}
        if not self.bounds.contains_all(traj.positions):
            return SkillOutcome("failure", "OutOfBounds", trajectory=traj, trace=trace)
        reason = self._move_along(traj, interrupt_check, on_step)
        if reason:
            return SkillOutcome("failure", reason, trajectory=traj, trace=trace)
        return SkillOutcome("success", trajectory=traj, trace=trace)

    def rollout_skill(self, skill: DmpSkill, target_pos: np.ndarray,
                      step_count: Optional[int] = None) -> Trajectory:
        n = step_count or skill.default_step_count
        cfg = RolloutConfig(goal=skill.goal_for(target_pos), step_count=n,
                            dt=skill.default_dt, start=self.effector.position.copy())
        return rollout(skill.params, cfg)

    # Preview -----------------------------------------------------------------

    def preview_program(self, program: ResolvedProgram) -> list[Trajectory]:
        """Pure simulation of the full program on a deep copy of the state;
        with a frozen scene this is byte-identical to execution."""
        ghost = copy.deepcopy(self)
        ghost.p_err = 0.0  # previews never inject perception errors
        trajectories: list[Trajectory] = []
        for call in program.calls:
            outcome = ghost.execute_primitive(call)
            if outcome.trajectory is not None:
                trajectories.append(outcome.trajectory)
            if not outcome.ok:
                break
        return trajectories

    # Serialization -----------------------------------------------------------

    def scene_doc(self) -> dict:
        return {
            "objects": [
                {"id": o.id, "description": o.description,
                 "position": o.position.tolist(),
                 "orientation": list(o.orientation),
                 "keypoint_px": list(self.keypoint_of(o)),
                 "grasped": o.grasped}
                for o in self.objects.values()
            ],
            "effector": {
                "position": self.effector.position.tolist(),
                "orientation": list(self.effector.orientation),
                "gripper": self.effector.gripper,
                "held_object": self.effector.held_object,
            },
            "bindings": dict(self.registry.bindings),
        }


def load_scene(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
