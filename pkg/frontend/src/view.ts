/** Pure rendering helpers: view state -> HTML strings and canvas strokes.
 *
 * The scene canvas is the overhead camera frame (640x480), so a click pixel
 * is exactly the keypoint pixel the teaching route expects.
 */

import type { ViewState } from "./store.js";
import type { SceneDoc, TrajectoryDoc, MetricsDoc } from "./types.js";

export const FRAME_WIDTH = 640;
export const FRAME_HEIGHT = 480;

/** Overhead pinhole looking down at the table (matches the simulator). */
const CAMERA = { height: 1.2, fx: 600, fy: 600, cx: 320, cy: 240 };

export function worldToPixel(
  [x, y, z]: [number, number, number],
): [number, number] {
  const depth = CAMERA.height - z;
  return [CAMERA.cx + (CAMERA.fx * y) / depth,
          CAMERA.cy + (CAMERA.fy * x) / depth];
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderTranscript(state: ViewState): string {
  return state.transcript
    .map((e) => `<div class="line ${e.who}">` +
      `<span class="who">${e.who}</span> ${escapeHtml(e.text)}</div>`)
    .join("\n");
}

export function renderModeBadge(state: ViewState): string {
  return `<span class="badge mode-${state.mode.toLowerCase()}">` +
    `${state.mode}</span>`;
}

export function renderPlanPanel(state: ViewState): string {
  const lines: string[] = [];
  if (state.plan) {
    lines.push(`<div class="plan">${escapeHtml(state.plan)} ` +
      `<em>(${state.planPrimitiveCount} steps)</em></div>`);
  }
  const steps = state.currentExecution ??
    state.executions[state.executions.length - 1] ?? [];
  for (const [i, step] of steps.entries()) {
    const note = step.reason ? ` — ${escapeHtml(step.reason)}` : "";
    lines.push(`<div class="step ${step.status}">` +
      `${i + 1}. ${escapeHtml(step.skill)} ${step.status}${note}</div>`);
  }
  return lines.join("\n");
}

export function renderMetricsStrip(m: MetricsDoc | null): string {
  if (!m) return "";
  return [
    `supervision ${m.supervision_time_s.toFixed(1)} s`,
    `commands ${m.ok_commands}/${m.commands_spoken}`,
    `complexity ${m.behavior_complexity.toFixed(2)}`,
    `taught ${m.teach_counts["arguments"]}a/${m.teach_counts["functions"]}f` +
      `/${m.teach_counts["dmp_skills"]}d`,
  ].join(" · ");
}

export interface Painter {
  clear(): void;
  circle(px: number, py: number, r: number, color: string, fill: boolean): void;
  path(points: [number, number][], color: string): void;
  label(px: number, py: number, text: string): void;
  gauge(fraction: number): void;
}

const contextCache = new WeakMap<HTMLCanvasElement,
                                 CanvasRenderingContext2D | null>();

/** 2-D canvas painter; a null context (non-browser DOM) paints nothing. */
export function canvasPainter(canvas: HTMLCanvasElement): Painter {
  // Probe for a 2-D context once per element: DOM implementations without a
  // canvas backend (e.g. jsdom) report "not implemented" on every call.
  let ctx = contextCache.get(canvas);
  if (ctx === undefined) {
    try {
      ctx = canvas.getContext("2d");
    } catch {
      ctx = null;
    }
    contextCache.set(canvas, ctx);
  }
  const noop: Painter = {
    clear() {}, circle() {}, path() {}, label() {}, gauge() {},
  };
  if (!ctx) return noop;
  return {
    clear() {
      ctx.fillStyle = "#1b1e23";
      ctx.fillRect(0, 0, FRAME_WIDTH, FRAME_HEIGHT);
    },
    circle(px, py, r, color, fill) {
      ctx.beginPath();
      ctx.arc(px, py, r, 0, 2 * Math.PI);
      if (fill) {
        ctx.fillStyle = color;
        ctx.fill();
      } else {
        ctx.strokeStyle = color;
        ctx.stroke();
      }
    },
    path(points, color) {
      if (points.length < 2) return;
      ctx.beginPath();
      ctx.moveTo(points[0][0], points[0][1]);
      for (const [px, py] of points.slice(1)) ctx.lineTo(px, py);
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.stroke();
      ctx.lineWidth = 1;
    },
    label(px, py, text) {
      ctx.fillStyle = "#cfd4da";
      ctx.font = "11px sans-serif";
      ctx.fillText(text, px + 8, py - 8);
    },
    gauge(fraction) {
      const h = 120;
      ctx.strokeStyle = "#555";
      ctx.strokeRect(FRAME_WIDTH - 24, 16, 10, h);
      ctx.fillStyle = "#7ab4ff";
      const fill = Math.max(0, Math.min(1, fraction)) * h;
      ctx.fillRect(FRAME_WIDTH - 24, 16 + h - fill, 10, fill);
    },
  };
}

export function paintScene(
  painter: Painter,
  scene: SceneDoc | null,
  planned: TrajectoryDoc[] = [],
  demoPath: [number, number][] = [],
): void {
  painter.clear();
  if (!scene) return;
  for (const obj of scene.objects) {
    const [px, py] = obj.keypoint_px;
    painter.circle(px, py, 10, obj.grasped ? "#e0b341" : "#8fd18f", true);
    painter.label(px, py, obj.id);
  }
  for (const traj of planned) {
    painter.path(traj.positions.map(worldToPixel), "#7ab4ff"); // blue
  }
  if (demoPath.length > 1) {
    painter.path(demoPath, "#6fdc6f"); // green
  }
  const [ex, ey] = worldToPixel(scene.effector.position);
  painter.circle(ex, ey, 6, "#ffffff", false);
  painter.gauge(scene.effector.position[2] / 0.8); // side height gauge
}
