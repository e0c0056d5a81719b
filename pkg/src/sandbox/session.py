"""Interaction session: utterance -> plan -> confirm -> resolve -> execute,
teaching flows, event log, metrics, and deterministic replay.

The session is an event-sourced state machine. Operator input events
(utterance, confirm, cancel, keypoint, decomposition, demo stream, segment,
interrupt) are appended to the log verbatim; everything the session derives
from them (plans, teach lifecycle, execution steps, outcomes) is appended as
derived records. Replaying the input records through a fresh session with the
same seed must reproduce the derived records exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .api import (
    AddFunction,
    AddLiteral,
    ApiDelta,
    ApiSpec,
    ComposedBody,
    FunctionSpec,
    Param,
    PrimitiveBody,
    apply_delta,
)
from .dmp import Demonstration, DmpParams, fit_dmp
from .errors import (
    CorruptLog,
    ReplayDivergence,
    SandboxError,
    TooShortDemo,
)
from .plan import Malformed, Ok, TeachArgument, TeachFunction, pretty_print
from .planner import (
    DeterministicBackend,
    HistoryEntry,
    InteractionHistory,
    Utterance,
    plan as plan_utterance,
)
from .resolver import ResolvedProgram, program_to_doc, resolve_plan
from .teaching import (
    ArgumentTeachRequest,
    normalize_verb,
    synthesize_function,
    synthesize_literal,
    unique_name,
)
from .workspace import DmpSkill, Workspace

LOG_SCHEMA = 1
TYPING_MS_PER_CHAR = 50  # utterance-entry time counted as supervision

# Operator-input record kinds (replay drivers); everything else is derived.
INPUT_KINDS = frozenset({
    "utterance", "confirm", "cancel", "interrupt", "keypoint",
    "decomposition", "demo_begin", "demo_pose", "demo_end", "segment",
})
SUPERVISED_MODES = frozenset({"AwaitingConfirmation", "Teaching"})


@dataclass
class EventLogRecord:
    seq: int
    t_ms: int
    kind: str
    payload: dict
    mode: str  # session mode after this record was applied

    def to_doc(self) -> dict:
        return {"seq": self.seq, "t_ms": self.t_ms, "kind": self.kind,
                "mode": self.mode, "payload": self.payload}

    @classmethod
    def from_doc(cls, doc: dict) -> "EventLogRecord":
        try:
            return cls(doc["seq"], doc["t_ms"], doc["kind"], doc["payload"],
                       doc["mode"])
        except (KeyError, TypeError) as e:
            raise CorruptLog(str(e)) from e


# Modes -----------------------------------------------------------------------


@dataclass
class Idle:
    name = "Idle"


@dataclass
class AwaitingConfirmation:
    name = "AwaitingConfirmation"
    plan_text: str = ""
    program: Optional[ResolvedProgram] = None
    entered_ms: int = 0


@dataclass
class Teaching:
    name = "Teaching"
    kind: str = "function"  # argument | function | dmp
    argument: Optional[ArgumentTeachRequest] = None
    surface_verb: str = ""
    original_utterance: Optional[Utterance] = None
    demo_verb: str = ""
    demo_target: str = ""
    demo_step_count: int = 30
    demo_dt: float = 0.1
    demo_positions: list = field(default_factory=list)
    demo_timestamps: list = field(default_factory=list)


@dataclass
class Executing:
    name = "Executing"
    program: Optional[ResolvedProgram] = None
    step: int = 0


@dataclass
class SessionMetrics:
    """Fixed operational definitions (the study measured these by human
    observation):

    - supervision_time_s: time spent in AwaitingConfirmation or Teaching
      between operator events, plus utterance entry modeled at 50 ms/char.
    - behavior_complexity: primitive skills executed / accepted commands.
    - skill_failures: failed execution steps, bucketed per segment marker.
    """
    supervision_time_s: float = 0.0
    commands_spoken: int = 0
    ok_commands: int = 0
    primitive_calls: int = 0
    skill_failures: dict = field(default_factory=dict)  # segment -> count
    teach_counts: dict = field(default_factory=lambda: {
        "arguments": 0, "functions": 0, "dmp_skills": 0})

    @property
    def behavior_complexity(self) -> float:
        return self.primitive_calls / self.ok_commands if self.ok_commands else 0.0

    def to_doc(self) -> dict:
        return {
            "supervision_time_s": round(self.supervision_time_s, 6),
            "commands_spoken": self.commands_spoken,
            "ok_commands": self.ok_commands,
            "primitive_calls": self.primitive_calls,
            "behavior_complexity": self.behavior_complexity,
            "skill_failures": dict(self.skill_failures),
            "teach_counts": dict(self.teach_counts),
        }


class Session:
    def __init__(self, session_id: str, api: ApiSpec, scene: dict, backend,
                 p_err: float = 0.0, seed: int = 0, auto_confirm: bool = False,
                 config: Optional[dict] = None):
        self.session_id = session_id
        self.api = api
        self.backend = backend
        self.workspace = Workspace(scene, p_err=p_err, seed=seed)
        self.history = InteractionHistory()
        self.mode: object = Idle()
        self.pending_deltas: list[ApiDelta] = []
        self.records: list[EventLogRecord] = []
        self.metrics = SessionMetrics()
        self.auto_confirm = auto_confirm
        self.config = config or {}
        self.clock_ms = 0
        self.segment = "default"
        self._seq = 0
        self._utterance_count = 0
        self._armed_interrupt: Optional[int] = None  # step index to stop at
        self.metrics.skill_failures[self.segment] = 0

    # Effective API = committed spec plus pending teach deltas.
    def effective_api(self) -> ApiSpec:
        api = self.api
        for delta in self.pending_deltas:
            api = apply_delta(api, delta)
        return api

    # Event entry point -------------------------------------------------------

    def handle_event(self, event: dict) -> list[EventLogRecord]:
        """Total dispatcher: every (mode, event) pair is defined. Mode
        violations are logged as rejected outcomes, never raised."""
        kind = event.get("kind")
        if kind not in INPUT_KINDS:
            raise SandboxError(f"unknown event kind {kind!r}")
        t_ms = int(event.get("t_ms", self.clock_ms))
        self._advance_clock(t_ms)
        start = len(self.records)
        self._record(kind, {k: v for k, v in event.items()
                            if k not in ("kind", "t_ms")})
        handler = getattr(self, f"_on_{kind}")
        handler(event)
        return self.records[start:]

    def _advance_clock(self, t_ms: int) -> None:
        if t_ms < self.clock_ms:
            t_ms = self.clock_ms  # clocks never run backwards
        if self.mode.name in SUPERVISED_MODES:
            self.metrics.supervision_time_s += (t_ms - self.clock_ms) / 1000.0
        self.clock_ms = t_ms

    def _record(self, kind: str, payload: dict) -> EventLogRecord:
        rec = EventLogRecord(self._seq, self.clock_ms, kind, payload,
                             self.mode.name)
        self._seq += 1
        self.records.append(rec)
        return rec

    def _set_mode(self, mode) -> None:
        self.mode = mode
        if self.records:
            self.records[-1].mode = mode.name

    # Input handlers ----------------------------------------------------------

    def _on_segment(self, event: dict) -> None:
        self.segment = event.get("label", "default")
        self.metrics.skill_failures.setdefault(self.segment, 0)
        if "p_err" in event:
            self.workspace.p_err = float(event["p_err"])

    def _on_interrupt(self, event: dict) -> None:
        self._armed_interrupt = int(event.get("after_step", 0))

    def _on_utterance(self, event: dict) -> None:
        if self.mode.name != "Idle":
            self._reject(f"utterance while {self.mode.name}")
            return
        text = event["text"]
        self._utterance_count += 1
        u = Utterance(f"u{self._utterance_count}", text, self.clock_ms)
        self.metrics.commands_spoken += 1
        self.metrics.supervision_time_s += TYPING_MS_PER_CHAR * len(text) / 1000.0
        self._plan_and_transition(u)

    def _plan_and_transition(self, u: Utterance) -> None:
        api = self.effective_api()
        outcome = plan_utterance(u, api, self.history, self.backend)
        self.history.append(HistoryEntry(u, outcome))
        if isinstance(outcome, Ok):
            program = resolve_plan(outcome.ast, api)
            text = pretty_print(outcome.ast)
            self._record("plan", {"outcome": "ok", "plan": text,
                                  "api_version": api.version,
                                  "utterance_id": u.id,
                                  "primitive_count": len(program.calls)})
            self.metrics.ok_commands += 1
            self._set_mode(AwaitingConfirmation(plan_text=text, program=program,
                                                entered_ms=self.clock_ms))
            if self.auto_confirm:
                self._do_confirm(accept=True, auto=True)
        elif isinstance(outcome, TeachArgument):
            req = ArgumentTeachRequest.from_signal(outcome)
            self._record("plan", {"outcome": "teach_argument",
                                  "utterance_id": u.id,
                                  "surface": outcome.surface_text,
                                  "function": outcome.function_name,
                                  "inferred_type": outcome.inferred_type})
            self._record("teach_begin", {
                "kind": "argument",
                "prompt": f"Where is the {outcome.surface_text}? "
                          "Click it in the overhead view.",
                "proposed_name": req.proposed_canonical_name,
                "inferred_type": outcome.inferred_type,
            })
            self._set_mode(Teaching(kind="argument", argument=req,
                                    original_utterance=u))
        elif isinstance(outcome, TeachFunction):
            self._record("plan", {"outcome": "teach_function",
                                  "utterance_id": u.id,
                                  "verb": outcome.surface_verb})
            self._record("teach_begin", {
                "kind": "function",
                "verb": outcome.surface_verb,
                "prompt": outcome.clarification_message,
            })
            self._set_mode(Teaching(kind="function",
                                    surface_verb=outcome.surface_verb,
                                    original_utterance=u))
        else:
            self._record("plan", {"outcome": "malformed",
                                  "utterance_id": u.id,
                                  "message": outcome.reason})

    def _on_keypoint(self, event: dict) -> None:
        if self.mode.name != "Teaching" or self.mode.kind != "argument":
            self._reject("keypoint outside argument teaching")
            return
        mode: Teaching = self.mode
        px, py = float(event["px"]), float(event["py"])
        obj = self.workspace.object_at_keypoint(px, py)
        delta = synthesize_literal(mode.argument, obj.description,
                                   self.effective_api(),
                                   provenance=mode.original_utterance.id
                                   if mode.original_utterance else None)
        name = delta.kind.literal.canonical_name
        self.workspace.registry.bind(name, obj.id, keypoint_px=(px, py),
                                     timestamp_ms=self.clock_ms, taught=True)
        self.pending_deltas.append(delta)
        self._record("teach_begin", {"kind": "argument_bound", "name": name,
                                     "object": obj.id, "px": px, "py": py})
        # silent Idle: the re-plan decides the next observable mode
        self.mode = Idle()
        if mode.original_utterance is not None:
            self._plan_and_transition(mode.original_utterance)

    def _on_decomposition(self, event: dict) -> None:
        if self.mode.name != "Teaching" or self.mode.kind != "function":
            self._reject("decomposition outside function teaching")
            return
        mode: Teaching = self.mode
        original = mode.original_utterance
        try:
            delta = synthesize_function(
                mode.surface_verb, event["text"],
                original.text if original else event["text"],
                self.effective_api(), self.backend,
                provenance=original.id if original else None,
                timestep=len(self.history.entries),
            )
        except SandboxError as e:
            self._record("teach_rollback", {"kind": "function",
                                            "error": str(e)})
            self._set_mode(Idle())
            return
        self.pending_deltas.append(delta)
        fn = delta.kind.function
        self._record("teach_begin", {
            "kind": "function_synthesized",
            "name": fn.name,
            "signature": fn.signature_text(),
            "body": pretty_print_body(fn),
        })
        self.mode = Idle()
        if original is not None:
            self._plan_and_transition(original)

    def _on_demo_begin(self, event: dict) -> None:
        if self.mode.name not in ("Idle", "Teaching"):
            self._reject(f"demo_begin while {self.mode.name}")
            return
        verb = event.get("verb") or (
            self.mode.surface_verb if self.mode.name == "Teaching" else "skill")
        original = (self.mode.original_utterance
                    if self.mode.name == "Teaching" else None)
        self._set_mode(Teaching(
            kind="dmp",
            surface_verb=verb,
            original_utterance=original,
            demo_verb=verb,
            demo_target=event["target"],
            demo_step_count=int(event.get("step_count", 30)),
            demo_dt=float(event.get("dt", 0.1)),
        ))

    def _on_demo_pose(self, event: dict) -> None:
        if self.mode.name != "Teaching" or self.mode.kind != "dmp":
            self._reject("demo_pose outside demo teaching")
            return
        self.mode.demo_positions.append([float(v) for v in event["p"]])
        self.mode.demo_timestamps.append(float(event["ts"]))

    def _on_demo_end(self, event: dict) -> None:
        if self.mode.name != "Teaching" or self.mode.kind != "dmp":
            self._reject("demo_end outside demo teaching")
            return
        mode: Teaching = self.mode
        try:
            demo = Demonstration(np.asarray(mode.demo_positions),
                                 np.asarray(mode.demo_timestamps))
            params = fit_dmp(demo)
        except (TooShortDemo, ValueError) as e:
            self._record("teach_rollback", {"kind": "dmp", "error": str(e)})
            self._set_mode(Idle())
            return
        delta, skill = self._register_dmp(mode, params)
        self.pending_deltas.append(delta)
        fn = delta.kind.function
        self._record("teach_begin", {
            "kind": "dmp_fitted",
            "name": fn.name,
            "skill_id": skill.skill_id,
            "waypoints": len(mode.demo_positions),
            "target": mode.demo_target,
        })
        self.mode = Idle()
        if mode.original_utterance is not None:
            self._plan_and_transition(mode.original_utterance)
        else:
            target = self._target_literal_token(mode.demo_target)
            self._plan_and_transition(
                Utterance(f"demo-{fn.name}", f"{fn.name} {target[1]}",
                          self.clock_ms))

    def _register_dmp(self, mode: Teaching, params: DmpParams):
        api = self.effective_api()
        name = unique_name(normalize_verb(mode.demo_verb),
                           {f.name for f in api.functions})
        ref = self._target_position_now(mode.demo_target)
        skill = DmpSkill(skill_id=name, params=params,
                         ref_target_position=ref,
                         default_step_count=mode.demo_step_count,
                         default_dt=mode.demo_dt)
        self.workspace.register_dmp_skill(skill)
        fn = FunctionSpec(
            name=name,
            params=(Param("target", ("ObjectRef", "Location")),),
            docstring=f"Perform the taught {mode.demo_verb} motion "
                      "relative to target.",
            body=PrimitiveBody(f"dmp:{name}"),
            origin=f"taught:{len(self.history.entries)}",
        )
        return ApiDelta(kind=AddFunction(fn)), skill

    def _target_literal_token(self, canonical_name: str) -> tuple[str, str]:
        lit = self.effective_api().literal_named(canonical_name)
        if lit is None:
            return ("ObjectRef", canonical_name.lower().replace("_", " "))
        return (lit.type_name, lit.surface())

    def _target_position_now(self, canonical_name: str) -> np.ndarray:
        obj = self.workspace.lookup(canonical_name)
        if obj is not None:
            return obj.position.copy()
        lit = self.effective_api().literal_named(canonical_name)
        if lit is not None and hasattr(lit.value, "position"):
            return np.asarray(lit.value.position, dtype=float)
        return self.workspace.effector.position.copy()

    def _on_confirm(self, event: dict) -> None:
        if self.mode.name != "AwaitingConfirmation":
            self._reject(f"confirm while {self.mode.name}")
            return
        self._do_confirm(accept=bool(event.get("accept", True)), auto=False)

    def _on_cancel(self, event: dict) -> None:
        if self.mode.name == "AwaitingConfirmation":
            self._rollback_pending("cancelled")
            self._set_mode(Idle())
        elif self.mode.name == "Teaching":
            self._rollback_pending("teaching cancelled")
            self._set_mode(Idle())
        else:
            self._reject(f"cancel while {self.mode.name}")

    def _reject(self, reason: str) -> None:
        self.records[-1].payload["rejected"] = reason

    # Execution ---------------------------------------------------------------

    def _do_confirm(self, accept: bool, auto: bool) -> None:
        mode: AwaitingConfirmation = self.mode
        latency = 0 if auto else self.clock_ms - mode.entered_ms
        self._record("plan", {"outcome": "decision",
                              "accept": accept, "auto": auto,
                              "latency_ms": latency})
        if not accept:
            self._rollback_pending("declined")
            self._set_mode(Idle())
            return
        self._execute(mode.program)

    def _execute(self, program: ResolvedProgram) -> None:
        self._set_mode(Executing(program=program))
        failed: Optional[str] = None
        armed = self._armed_interrupt
        self._armed_interrupt = None
        for i, call in enumerate(program.calls):
            self.mode.step = i
            if armed is not None and i >= armed:
                outcome_reason = "UserInterrupt"
                self._record("exec_step", {"step": i, "skill": call.skill_tag,
                                           "status": "failure",
                                           "reason": outcome_reason})
                self.metrics.primitive_calls += 1
                failed = outcome_reason
                break
            outcome = self.workspace.execute_primitive(call)
            payload = {"step": i, "skill": call.skill_tag,
                       "status": outcome.status,
                       "provenance": list(call.provenance)}
            if outcome.reason:
                payload["reason"] = outcome.reason
            if outcome.trace:
                payload["trace"] = _jsonable(outcome.trace)
            self._record("exec_step", payload)
            self.metrics.primitive_calls += 1
            if not outcome.ok:
                self.metrics.skill_failures[self.segment] = (
                    self.metrics.skill_failures.get(self.segment, 0) + 1)
                failed = outcome.reason
                break
        if failed is None:
            self._commit_pending()
            self._record("outcome", {"status": "success",
                                     "steps": len(program.calls),
                                     "api_version": self.api.version})
        else:
            self._rollback_pending(f"execution failed: {failed}")
            self._record("outcome", {"status": "failure", "reason": failed,
                                     "api_version": self.api.version})
        self._set_mode(Idle())

    def _commit_pending(self) -> None:
        for delta in self.pending_deltas:
            self.api = apply_delta(self.api, delta)
            delta.status = "committed"
            self.metrics.teach_counts[_teach_bucket(delta)] += 1
            self._record("teach_commit", {"change": delta.describe(),
                                          "kind": _teach_bucket(delta),
                                          "api_version": self.api.version})
        self.pending_deltas.clear()

    def _rollback_pending(self, reason: str) -> None:
        for delta in self.pending_deltas:
            delta.status = "rolled_back"
            self._record("teach_rollback", {"change": delta.describe(),
                                            "reason": reason})
        self.pending_deltas.clear()

    # Views -------------------------------------------------------------------

    def preview(self) -> dict:
        """Preview payload for the current AwaitingConfirmation plan: pure
        simulation on copied state, byte-identical to upcoming execution."""
        doc = {"mode": self.mode.name, "scene": self.workspace.scene_doc()}
        if self.mode.name == "AwaitingConfirmation":
            program = self.mode.program
            doc["plan"] = self.mode.plan_text
            doc["program"] = program_to_doc(program)
            doc["trajectories"] = [
                t.to_doc() for t in self.workspace.preview_program(program)
            ]
        return doc


def _teach_bucket(delta: ApiDelta) -> str:
    if isinstance(delta.kind, AddLiteral):
        return "arguments"
    fn = delta.kind.function
    if isinstance(fn.body, PrimitiveBody) and fn.body.tag.startswith("dmp:"):
        return "dmp_skills"
    return "functions"


def pretty_print_body(fn: FunctionSpec) -> str:
    if isinstance(fn.body, ComposedBody):
        return "; ".join(str(inv) for inv in fn.body.invocations)
    return fn.body.tag


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


# Metrics recomputation -------------------------------------------------------


def compute_metrics(records: list[EventLogRecord]) -> SessionMetrics:
    """Independent aggregation over the raw log; must equal the session's
    incremental accumulators exactly (checked by the acceptance suite)."""
    m = SessionMetrics()
    m.skill_failures["default"] = 0
    segment = "default"
    prev_t = 0
    prev_mode = "Idle"
    for rec in records:
        if not isinstance(rec.payload, dict):
            raise CorruptLog(f"record {rec.seq} payload is not an object")
        if rec.kind in INPUT_KINDS and prev_mode in SUPERVISED_MODES:
            m.supervision_time_s += (rec.t_ms - prev_t) / 1000.0
        if rec.kind in INPUT_KINDS:
            prev_t = rec.t_ms
        prev_mode = rec.mode
        if rec.kind == "segment":
            segment = rec.payload.get("label", "default")
            m.skill_failures.setdefault(segment, 0)
        elif rec.kind == "utterance" and "rejected" not in rec.payload:
            m.commands_spoken += 1
            m.supervision_time_s += (
                TYPING_MS_PER_CHAR * len(rec.payload["text"]) / 1000.0)
        elif rec.kind == "plan" and rec.payload.get("outcome") == "ok":
            m.ok_commands += 1
        elif rec.kind == "exec_step":
            m.primitive_calls += 1
            if rec.payload.get("status") == "failure" \
                    and rec.payload.get("reason") != "UserInterrupt":
                m.skill_failures[segment] = m.skill_failures.get(segment, 0) + 1
        elif rec.kind == "teach_commit":
            m.teach_counts[rec.payload["kind"]] += 1
    return m


# Persistence and replay ------------------------------------------------------


def session_header(session: Session) -> dict:
    return {
        "kind": "header",
        "schema": LOG_SCHEMA,
        "session_id": session.session_id,
        "config": session.config,
    }


def persist(session: Session, path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(session_header(session)) + "\n")
        for rec in session.records:
            fh.write(json.dumps(rec.to_doc()) + "\n")


def load_log(path) -> tuple[dict, list[EventLogRecord]]:
    with open(path) as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise CorruptLog("empty log")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise CorruptLog(str(e)) from e
    if header.get("kind") != "header" or header.get("schema") != LOG_SCHEMA:
        raise CorruptLog("missing or unsupported header")
    records = []
    for line in lines[1:]:
        try:
            records.append(EventLogRecord.from_doc(json.loads(line)))
        except json.JSONDecodeError as e:
            raise CorruptLog(str(e)) from e
    return header, records


def input_events(records: list[EventLogRecord]) -> list[dict]:
    events = []
    for rec in records:
        if rec.kind in INPUT_KINDS:
            event = {"kind": rec.kind, "t_ms": rec.t_ms}
            event.update({k: v for k, v in rec.payload.items() if k != "rejected"})
            events.append(event)
    return events


def record_key(rec: EventLogRecord, with_time: bool = True) -> tuple:
    key = (rec.seq, rec.kind, rec.mode, json.dumps(rec.payload, sort_keys=True))
    return key + (rec.t_ms,) if with_time else key


def resume(path, session_factory, seed: Optional[int] = None) -> Session:
    """Rebuild a session by replaying the log's input events through a fresh
    session from session_factory(header). The derived records must come out
    bit-for-bit identical, else ReplayDivergence."""
    header, records = load_log(path)
    if seed is not None:
        header = dict(header)
        header["config"] = dict(header.get("config", {}), seed=seed)
    session = session_factory(header)
    for event in input_events(records):
        session.handle_event(event)
    if len(session.records) != len(records):
        raise ReplayDivergence(
            f"record count {len(session.records)} != {len(records)}")
    for mine, logged in zip(session.records, records):
        if record_key(mine) != record_key(logged):
            raise ReplayDivergence(
                f"seq {logged.seq}: {record_key(mine)} != {record_key(logged)}")
    return session
