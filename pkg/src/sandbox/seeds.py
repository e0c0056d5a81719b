"""Seed API specifications and fixture scenes for the two bundled scenarios."""

from __future__ import annotations

from .api import (
    ApiSpec,
    ComposedBody,
    FunctionSpec,
    LiteralArg,
    Param,
    Pose,
    PrimitiveBody,
    SemanticType,
)
from .plan import Invocation, ParamRef

HOME_POSE = Pose((0.36, 0.00, 0.49), (1.0, 0.0, 0.0, 0.0))

_BASE_TYPES = (SemanticType("ObjectRef"), SemanticType("Location"), SemanticType("Count"))


def _primitives(goto_types=("ObjectRef", "Location")) -> tuple[FunctionSpec, ...]:
    return (
        FunctionSpec("go_home", (), "Return to the home position.", PrimitiveBody("go_home")),
        FunctionSpec(
            "goto",
            (Param("obj", goto_types),),
            "Move above the specified obj.",
            PrimitiveBody("goto"),
        ),
    )


def gift_bag_api() -> ApiSpec:
    """Base API handed to gift-bag study operators: four primitives plus
    pickup(obj) = goto(obj); grasp()."""
    functions = _primitives() + (
        FunctionSpec("grasp", (), "Close the gripper on the object below.", PrimitiveBody("grasp")),
        FunctionSpec("release", (), "Open the gripper and drop what is held.", PrimitiveBody("release")),
        FunctionSpec(
            "pickup",
            (Param("obj", ("ObjectRef",)),),
            "Pick up the specified obj.",
            ComposedBody((
                Invocation("goto", (ParamRef("obj"),)),
                Invocation("grasp", ()),
            )),
        ),
    )
    literals = (
        LiteralArg("ObjectRef", "CANDY", "A gummy, sandwich-shaped candy"),
        LiteralArg("ObjectRef", "PLAY_DOH", "A small tub of yellow Play-Doh"),
        LiteralArg("ObjectRef", "GIFT_BAG", "An open paper gift bag"),
        LiteralArg("Location", "HOME", HOME_POSE),
    )
    return ApiSpec(version=0, types=_BASE_TYPES, functions=functions, literals=literals)


def stop_motion_api() -> ApiSpec:
    """Base API for the camera-motion scenario; every cinematic motion is
    taught as a demonstration-fitted skill."""
    literals = (
        LiteralArg("Location", "HOME", HOME_POSE),
        LiteralArg("ObjectRef", "TOWER", "A grey brick tower"),
        LiteralArg("ObjectRef", "HULK", "A green minifigure"),
        LiteralArg("ObjectRef", "LOKI", "A minifigure with a golden helmet"),
        LiteralArg("ObjectRef", "IRON_MAN", "A red and gold minifigure"),
    )
    return ApiSpec(version=0, types=_BASE_TYPES, functions=_primitives(), literals=literals)


GIFT_BAG_SCENE = {
    "objects": [
        {"id": "candy", "description": "A gummy, sandwich-shaped candy",
         "position": [0.20, -0.30, 0.0]},
        {"id": "play_doh", "description": "A small tub of yellow Play-Doh",
         "position": [0.25, 0.00, 0.0]},
        {"id": "toy_car", "description": "A green toy car",
         "position": [0.30, 0.25, 0.0]},
        {"id": "gift_bag", "description": "An open paper gift bag",
         "position": [0.10, 0.45, 0.0]},
    ],
    "bindings": {"CANDY": "candy", "PLAY_DOH": "play_doh", "GIFT_BAG": "gift_bag"},
}

STOP_MOTION_SCENE = {
    "objects": [
        {"id": "tower", "description": "A grey brick tower", "position": [0.30, -0.40, 0.0]},
        {"id": "hulk", "description": "A green minifigure", "position": [0.20, 0.10, 0.0]},
        {"id": "loki", "description": "A minifigure with a golden helmet",
         "position": [0.35, 0.30, 0.0]},
        {"id": "iron_man", "description": "A red and gold minifigure",
         "position": [0.15, -0.10, 0.0]},
    ],
    "bindings": {"TOWER": "tower", "HULK": "hulk", "LOKI": "loki", "IRON_MAN": "iron_man"},
}

# Extra verb/noun aliases for the deterministic backend, per scenario.
GIFT_BAG_ALIASES = {
    "verbs": {
        "grab": "pickup",
        "pick up": "pickup",
        "go above": "goto",
        "go to": "goto",
        "go home": "go_home",
        "drop": "release",
        "let go": "release",
        "place {0:ObjectRef} in {1:ObjectRef}": "pickup({0}); goto({1}); release()",
        "put {0:ObjectRef} in {1:ObjectRef}": "pickup({0}); goto({1}); release()",
    },
    "nouns": {
        "bag": ("ObjectRef", "GIFT_BAG"),
        "gift bag": ("ObjectRef", "GIFT_BAG"),
        "candy": ("ObjectRef", "CANDY"),
        "play doh": ("ObjectRef", "PLAY_DOH"),
        "playdoh": ("ObjectRef", "PLAY_DOH"),
    },
}

STOP_MOTION_ALIASES = {
    "verbs": {
        "push in on": "zoom_in",
        "zoom into": "zoom_in",
        "zoom in on": "zoom_in",
        "track around": "track",
        "pan around": "pan_around",
        "go home": "go_home",
    },
    "nouns": {
        "tower": ("ObjectRef", "TOWER"),
        "hulk": ("ObjectRef", "HULK"),
        "loki": ("ObjectRef", "LOKI"),
        "iron man": ("ObjectRef", "IRON_MAN"),
    },
}
