/** Operator console: wires the gateway client, the event-sourced store, and
 * the DOM together. All task state is server-authoritative — user inputs are
 * fire-and-forget calls whose resulting records (from the response and the
 * event stream, deduplicated by seq) drive every render.
 */

import { GatewayClient, GatewayRejection } from "./client.js";
import { initialState, reduce, type ViewState } from "./store.js";
import type {
  CommandResponse,
  EventRecord,
  MetricsDoc,
  SceneDoc,
  TrajectoryDoc,
} from "./types.js";
import {
  FRAME_HEIGHT,
  FRAME_WIDTH,
  canvasPainter,
  paintScene,
  renderMetricsStrip,
  renderModeBadge,
  renderPlanPanel,
  renderTranscript,
} from "./view.js";

const DEMO_SAMPLE_MS = 20; // 50 Hz cap on streamed demo poses

export class OperatorConsole {
  state: ViewState = initialState();
  sessionId = "";
  toast = "";
  private scene: SceneDoc | null = null;
  private planned: TrajectoryDoc[] = [];
  private metricsDoc: MetricsDoc | null = null;
  private unsubscribe: (() => void) | null = null;
  private demoPath: [number, number][] = [];
  private demoStart = 0;
  private lastDemoSample = -Infinity;
  private readonly el: {
    transcript: HTMLElement;
    mode: HTMLElement;
    plan: HTMLElement;
    metrics: HTMLElement;
    toast: HTMLElement;
    canvas: HTMLCanvasElement;
    input: HTMLInputElement;
  };

  constructor(readonly root: HTMLElement, readonly client: GatewayClient) {
    root.innerHTML = `
      <div class="console">
        <div class="top">
          <span data-role="mode"></span>
          <span data-role="metrics" class="metrics"></span>
        </div>
        <canvas data-role="scene" width="${FRAME_WIDTH}"
                height="${FRAME_HEIGHT}"></canvas>
        <div data-role="plan" class="plan-panel"></div>
        <div data-role="transcript" class="transcript"></div>
        <div data-role="toast" class="toast"></div>
        <form data-role="say">
          <input data-role="input" placeholder="say something" />
          <button type="submit">send</button>
          <button type="button" data-role="confirm">confirm</button>
          <button type="button" data-role="decline">decline</button>
          <button type="button" data-role="cancel">cancel</button>
        </form>
      </div>`;
    const q = <T extends Element>(sel: string) =>
      root.querySelector(sel) as T;
    this.el = {
      transcript: q('[data-role="transcript"]'),
      mode: q('[data-role="mode"]'),
      plan: q('[data-role="plan"]'),
      metrics: q('[data-role="metrics"]'),
      toast: q('[data-role="toast"]'),
      canvas: q('[data-role="scene"]'),
      input: q('[data-role="input"]'),
    };
    this.bind();
  }

  private bind(): void {
    const form = this.root.querySelector('[data-role="say"]') as HTMLFormElement;
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const text = this.el.input.value.trim();
      this.el.input.value = "";
      if (text) void this.say(text);
    });
    const on = (role: string, fn: () => void) =>
      (this.root.querySelector(`[data-role="${role}"]`) as HTMLElement)
        .addEventListener("click", fn);
    on("confirm", () => void this.confirm(true));
    on("decline", () => void this.confirm(false));
    on("cancel", () => void this.cancel());
    this.el.canvas.addEventListener("click", (ev) =>
      void this.handleCanvasClick(ev as MouseEvent));
    this.el.canvas.addEventListener("pointerdown", (ev) =>
      void this.handleDragStart(ev as PointerEvent));
    this.el.canvas.addEventListener("pointermove", (ev) =>
      void this.handleDragMove(ev as PointerEvent));
    this.el.canvas.addEventListener("pointerup", () =>
      void this.handleDragEnd());
  }

  async start(create: { scenario?: string; config?: Record<string, unknown> },
              pollMs?: number): Promise<void> {
    const { session_id } = await this.client.createSession(create);
    this.sessionId = session_id;
    this.unsubscribe = this.client.subscribe(
      session_id, (rec) => this.apply(rec), { pollMs });
    await this.refreshScene();
    this.render();
  }

  stop(): void {
    this.unsubscribe?.();
    this.unsubscribe = null;
  }

  /** Fold one server record into the view state and re-render. */
  apply(rec: EventRecord): void {
    const before = this.state;
    this.state = reduce(this.state, rec);
    if (this.state === before) return; // duplicate seq
    if (rec.kind === "exec_step" || rec.kind === "outcome") {
      void this.refreshScene();
    }
    if (rec.kind === "plan" && rec.payload["outcome"] === "ok") {
      void this.refreshPreview();
    }
    if (rec.kind === "outcome" || rec.kind === "teach_commit") {
      void this.refreshMetrics();
    }
    this.render();
  }

  private async command(call: Promise<CommandResponse>): Promise<void> {
    try {
      const resp = await call;
      for (const rec of resp.records) this.apply(rec);
    } catch (err) {
      if (err instanceof GatewayRejection) {
        // stale-mode race: the server logged and refused; refresh our view
        this.showToast(err.message);
        return;
      }
      throw err;
    }
  }

  say(text: string): Promise<void> {
    return this.command(this.client.utterance(this.sessionId, text));
  }

  teachDecomposition(text: string): Promise<void> {
    return this.command(this.client.teachDecomposition(this.sessionId, text));
  }

  confirm(accept: boolean): Promise<void> {
    return this.command(this.client.confirm(this.sessionId, accept));
  }

  cancel(): Promise<void> {
    return this.command(this.client.cancel(this.sessionId));
  }

  /** Canvas clicks teach keypoints; out-of-mode clicks only toast. */
  async handleCanvasClick(ev: MouseEvent): Promise<void> {
    const rect = this.el.canvas.getBoundingClientRect();
    const px = ev.clientX - rect.left;
    const py = ev.clientY - rect.top;
    if (px < 0 || py < 0 || px > FRAME_WIDTH || py > FRAME_HEIGHT) return;
    if (this.state.mode !== "Teaching") {
      this.showToast("not in teaching mode");
      return;
    }
    await this.command(this.client.teachKeypoint(this.sessionId, px, py));
  }

  // Kinesthetic demonstration simulated as a pointer drag ------------------

  async handleDragStart(ev: PointerEvent): Promise<void> {
    if (this.state.mode !== "Teaching") return;
    this.demoPath = [[ev.clientX, ev.clientY]];
    this.demoStart = ev.timeStamp;
    this.lastDemoSample = -Infinity;
  }

  async handleDragMove(ev: PointerEvent): Promise<void> {
    if (this.demoPath.length === 0) return;
    if (ev.timeStamp - this.lastDemoSample < DEMO_SAMPLE_MS) return;
    this.lastDemoSample = ev.timeStamp;
    this.demoPath.push([ev.clientX, ev.clientY]);
    const ts = (ev.timeStamp - this.demoStart) / 1000;
    await this.command(this.client.demoAppend(
      this.sessionId, this.dragToWorld(ev), ts));
    this.render();
  }

  async handleDragEnd(): Promise<void> {
    if (this.demoPath.length === 0) return;
    this.demoPath = [];
    await this.command(this.client.demoEnd(this.sessionId));
  }

  private dragToWorld(ev: PointerEvent): [number, number, number] {
    // inverse of the overhead projection at a fixed demonstration height
    const rect = this.el.canvas.getBoundingClientRect();
    const z = 0.15;
    const depth = 1.2 - z;
    const y = ((ev.clientX - rect.left - 320) * depth) / 600;
    const x = ((ev.clientY - rect.top - 240) * depth) / 600;
    return [x, y, z];
  }

  // Server-state fetches ---------------------------------------------------

  private async refreshScene(): Promise<void> {
    try {
      const preview = await this.client.preview(this.sessionId);
      this.scene = preview.scene;
    } catch {
      /* keep the last rendered scene on transient failures */
    }
  }

  private async refreshPreview(): Promise<void> {
    try {
      const preview = await this.client.preview(this.sessionId);
      this.scene = preview.scene;
      this.planned = preview.trajectories ?? [];
      this.render();
    } catch {
      /* ignore */
    }
  }

  private async refreshMetrics(): Promise<void> {
    try {
      this.metricsDoc = (await this.client.metrics(this.sessionId)).metrics;
      this.render();
    } catch {
      /* ignore */
    }
  }

  private showToast(text: string): void {
    this.toast = text;
    this.render();
  }

  render(): void {
    this.el.mode.innerHTML = renderModeBadge(this.state);
    this.el.transcript.innerHTML = renderTranscript(this.state);
    this.el.plan.innerHTML = renderPlanPanel(this.state);
    this.el.metrics.textContent = renderMetricsStrip(this.metricsDoc);
    this.el.toast.textContent = this.toast;
    paintScene(canvasPainter(this.el.canvas), this.scene, this.planned,
               this.demoPath);
  }
}
