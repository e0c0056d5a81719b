/** Event-sourced view state: a pure fold over gateway event records.
 *
 * The console renders exclusively from this state; nothing here is
 * optimistic — API versions, plans, and execution progress change only when
 * the corresponding derived record arrives from the server.
 */

import type { EventRecord } from "./types.js";

export type Speaker = "operator" | "robot" | "system";

export interface TranscriptEntry {
  who: Speaker;
  text: string;
}

export interface ExecutionStep {
  skill: string;
  status: string;
  reason?: string;
}

export interface ViewState {
  mode: string;
  /** Mode badge history, deduplicated consecutive values. */
  modeSequence: string[];
  transcript: TranscriptEntry[];
  /** Last proposed plan text and its primitive count. */
  plan: string | null;
  planPrimitiveCount: number;
  /** Completed execution animations (one array of steps per run). */
  executions: ExecutionStep[][];
  /** Steps of the run currently animating, if any. */
  currentExecution: ExecutionStep[] | null;
  apiVersion: number;
  lastSeq: number;
}

export function initialState(): ViewState {
  return {
    mode: "Idle",
    modeSequence: ["Idle"],
    transcript: [],
    plan: null,
    planPrimitiveCount: 0,
    executions: [],
    currentExecution: null,
    apiVersion: 0,
    lastSeq: -1,
  };
}

function pushMode(state: ViewState, mode: string): void {
  state.mode = mode;
  if (state.modeSequence[state.modeSequence.length - 1] !== mode) {
    state.modeSequence.push(mode);
  }
}

function say(state: ViewState, who: Speaker, text: string): void {
  state.transcript.push({ who, text });
}

function onPlan(state: ViewState, payload: Record<string, unknown>): void {
  switch (payload["outcome"]) {
    case "ok":
      state.plan = String(payload["plan"]);
      state.planPrimitiveCount = Number(payload["primitive_count"] ?? 0);
      say(state, "robot", `proposed: ${state.plan}`);
      break;
    case "malformed":
      say(state, "robot", String(payload["message"]));
      break;
    case "decision":
      if (payload["accept"]) {
        state.currentExecution = [];
      } else {
        say(state, "system", "plan declined");
        state.plan = null;
      }
      break;
    // teach_argument / teach_function: the teach_begin prompt follows
  }
}

function onTeachBegin(state: ViewState, payload: Record<string, unknown>): void {
  switch (payload["kind"]) {
    case "argument":
    case "function":
      say(state, "robot", String(payload["prompt"]));
      break;
    case "argument_bound":
      say(state, "system",
        `bound ${payload["name"]} to ${payload["object"]} ` +
        `(${payload["px"]}, ${payload["py"]})`);
      break;
    case "function_synthesized":
      say(state, "robot",
        `learned ${payload["signature"]}  =  ${payload["body"]}`);
      break;
    case "dmp_fitted":
      say(state, "robot",
        `fitted skill ${payload["name"]} from ${payload["waypoints"]} poses`);
      break;
  }
}

export function reduce(state: ViewState, rec: EventRecord): ViewState {
  if (rec.seq <= state.lastSeq) return state; // already applied (dedupe)
  const next: ViewState = structuredClone(state);
  next.lastSeq = rec.seq;
  const p = rec.payload;
  switch (rec.kind) {
    case "utterance":
      say(next, "operator", String(p["text"]));
      if (p["rejected"]) say(next, "system", `rejected: ${p["rejected"]}`);
      break;
    case "decomposition":
      say(next, "operator", String(p["text"]));
      break;
    case "confirm":
      if (!p["rejected"]) {
        say(next, "operator", p["accept"] === false ? "(declines)" : "(confirms)");
      }
      break;
    case "cancel":
      if (!p["rejected"]) say(next, "operator", "(cancels)");
      break;
    case "keypoint":
      if (!p["rejected"]) {
        say(next, "operator", `(clicks at ${p["px"]}, ${p["py"]})`);
      }
      break;
    case "demo_begin":
      if (!p["rejected"]) {
        say(next, "operator", `(demonstrates a motion toward ${p["target"]})`);
      }
      break;
    case "segment":
      say(next, "system", `— ${p["label"]} —`);
      break;
    case "plan":
      onPlan(next, p);
      break;
    case "teach_begin":
      onTeachBegin(next, p);
      break;
    case "exec_step":
      if (next.currentExecution === null) next.currentExecution = [];
      next.currentExecution.push({
        skill: String(p["skill"]),
        status: String(p["status"]),
        ...(p["reason"] ? { reason: String(p["reason"]) } : {}),
      });
      break;
    case "outcome":
      if (next.currentExecution !== null) {
        next.executions.push(next.currentExecution);
        next.currentExecution = null;
      }
      say(next, "system", p["status"] === "success"
        ? "execution succeeded"
        : `execution failed: ${p["reason"]}`);
      if (p["status"] === "success") next.plan = null;
      break;
    case "teach_commit":
      next.apiVersion = Number(p["api_version"]);
      say(next, "system", `API v${next.apiVersion}: ${p["change"]}`);
      break;
    case "teach_rollback":
      say(next, "system",
        `rolled back: ${p["change"] ?? p["error"] ?? ""} ` +
        `${p["reason"] ?? ""}`.trim());
      break;
    // demo_pose / interrupt: no transcript representation
  }
  pushMode(next, rec.mode);
  return next;
}

export function reduceAll(records: EventRecord[],
                          state: ViewState = initialState()): ViewState {
  return records.reduce(reduce, state);
}
