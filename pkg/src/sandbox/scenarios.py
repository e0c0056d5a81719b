"""Scripted scenarios: timed operator-event scripts that reproduce full
collaborations headlessly.

A scenario config names a seed API, a scene, backend aliases, and a list of
timed input events. Segment events bucket the metrics (one bucket per gift
bag) and may adjust the error-injection probability mid-run, which is how
the bundled gift-bag script reproduces failure curves deterministically.
"""

from __future__ import annotations

import importlib.resources
import json
from pathlib import Path
from typing import Optional

from .planner import DeterministicBackend, LlmBackend
from .seeds import (
    GIFT_BAG_ALIASES,
    GIFT_BAG_SCENE,
    STOP_MOTION_ALIASES,
    STOP_MOTION_SCENE,
    gift_bag_api,
    stop_motion_api,
)
from .session import Session, SessionMetrics, compute_metrics, persist

APIS = {"gift_bag": gift_bag_api, "stop_motion": stop_motion_api}
SCENES = {"gift_bag": GIFT_BAG_SCENE, "stop_motion": STOP_MOTION_SCENE}
ALIASES = {"gift_bag": GIFT_BAG_ALIASES, "stop_motion": STOP_MOTION_ALIASES}


def load_scenario(name_or_path) -> dict:
    """Bundled scenario name (gift_bags, stop_motion) or a JSON file path."""
    path = Path(str(name_or_path))
    if path.suffix == ".json" and path.exists():
        return json.loads(path.read_text())
    resource = importlib.resources.files("sandbox.data").joinpath(
        f"{name_or_path}.json")
    if resource.is_file():
        return json.loads(resource.read_text())
    raise FileNotFoundError(f"no scenario {name_or_path!r}")


def make_backend(config: dict):
    name = config.get("backend", "det")
    aliases = config.get("aliases")
    if isinstance(aliases, str):
        aliases = ALIASES[aliases]
    if name == "det":
        return DeterministicBackend(aliases)
    if name == "llm":
        return LlmBackend()
    raise ValueError(f"unknown backend {name!r}")


def build_session(config: dict, session_id: str = "scenario") -> Session:
    scene = config.get("scene", "gift_bag")
    if isinstance(scene, str):
        scene = SCENES[scene]
    api = APIS[config.get("api", "gift_bag")]()
    return Session(
        session_id=session_id,
        api=api,
        scene=scene,
        backend=make_backend(config),
        p_err=float(config.get("p_err", 0.0)),
        seed=int(config.get("seed", 0)),
        auto_confirm=bool(config.get("auto_confirm", False)),
        config={k: v for k, v in config.items() if k != "events"},
    )


def session_factory(header: dict) -> Session:
    # used by session.resume to rebuild a comparable fresh session
    return build_session(header["config"], session_id=header.get("session_id", "replay"))


def run_scenario(config: dict, log_path=None, session_id: str = "scenario") -> Session:
    session = build_session(config, session_id=session_id)
    for event in config.get("events", []):
        session.handle_event(event)
    if log_path is not None:
        persist(session, log_path)
    return session


def segment_metrics(records) -> dict:
    """Per-segment command/complexity/failure breakdown (the per-bag curves).

    Commands and execution steps are attributed to the segment that was
    active when they were logged."""
    out: dict[str, dict] = {}
    segment = "default"

    def bucket(name):
        return out.setdefault(name, {"ok_commands": 0, "primitive_calls": 0,
                                     "skill_failures": 0})

    bucket(segment)
    for rec in records:
        if rec.kind == "segment":
            segment = rec.payload.get("label", "default")
            bucket(segment)
        elif rec.kind == "plan" and rec.payload.get("outcome") == "ok":
            bucket(segment)["ok_commands"] += 1
        elif rec.kind == "exec_step":
            bucket(segment)["primitive_calls"] += 1
            if rec.payload.get("status") == "failure" \
                    and rec.payload.get("reason") != "UserInterrupt":
                bucket(segment)["skill_failures"] += 1
    for stats in out.values():
        stats["behavior_complexity"] = (
            stats["primitive_calls"] / stats["ok_commands"]
            if stats["ok_commands"] else 0.0)
    return out


def metrics_report(session: Session) -> dict:
    recomputed = compute_metrics(session.records)
    return {
        "session_id": session.session_id,
        "scenario": session.config.get("name", ""),
        "metrics": session.metrics.to_doc(),
        "recomputed": recomputed.to_doc(),
        "recompute_matches": recomputed.to_doc() == session.metrics.to_doc(),
        "segments": segment_metrics(session.records),
        "api_version": session.api.version,
    }


def write_metrics(session: Session, path) -> dict:
    report = metrics_report(session)
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report
