// Event-sourced rendering: folding the recorded gift-bag event stream into
// the store must deterministically yield the expected transcript, mode
// sequence, and execution animations (no UI-local task state).

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { initialState, reduce, reduceAll } from "../src/store.js";
import { renderPlanPanel, renderTranscript } from "../src/view.js";
import type { EventRecord } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function loadFixture(): EventRecord[] {
  const raw = readFileSync(join(here, "fixtures", "gift_bags.log.jsonl"), "utf8");
  const lines = raw.trim().split("\n");
  return lines.slice(1).map((line) => JSON.parse(line) as EventRecord); // skip header
}

function isSubsequence(needle: string[], haystack: string[]): boolean {
  let i = 0;
  for (const item of haystack) {
    if (item === needle[i]) i += 1;
    if (i === needle.length) return true;
  }
  return false;
}

describe("event-sourced console state (recorded scenario fixture)", () => {
  const records = loadFixture();
  const state = reduceAll(records);

  it("replays the full mode cycle", () => {
    expect(isSubsequence(
      ["Idle", "Teaching", "AwaitingConfirmation", "Executing", "Idle"],
      state.modeSequence,
    )).toBe(true);
    expect(state.mode).toBe("Idle");
  });

  it("animates the taught pack command as a 4-step execution", () => {
    const packRuns = state.executions.filter(
      (steps) => steps.length === 4 &&
        steps.map((s) => s.skill).join(",") === "goto,grasp,goto,release");
    expect(packRuns.length).toBeGreaterThanOrEqual(1);
    expect(packRuns.some((steps) =>
      steps.every((s) => s.status === "success"))).toBe(true);
  });

  it("shows committed API changes only after teach_commit", () => {
    let version = 0;
    let st = initialState();
    for (const rec of records) {
      st = reduce(st, rec);
      expect(st.apiVersion).toBeGreaterThanOrEqual(version);
      if (rec.kind !== "teach_commit") {
        expect(st.apiVersion).toBe(version); // never optimistic
      }
      version = st.apiVersion;
    }
    expect(version).toBe(2);
  });

  it("is a pure function of the events", () => {
    const again = reduceAll(loadFixture());
    expect(again).toEqual(state);
  });

  it("ignores duplicate records from stream/response overlap", () => {
    const duplicated = records.flatMap((r) => [r, r]);
    expect(reduceAll(duplicated)).toEqual(state);
  });

  it("renders the expected transcript (snapshot)", () => {
    expect(renderTranscript(state)).toMatchSnapshot();
    expect(state.modeSequence).toMatchSnapshot();
  });

  it("renders the last execution in the plan panel", () => {
    const panel = renderPlanPanel(state);
    expect(panel).toContain("1. goto success");
    expect(panel).toContain("4. release success");
  });
});
