/** Wire types mirrored from the gateway's JSON responses. */

export interface EventRecord {
  seq: number;
  t_ms: number;
  kind: string;
  mode: string;
  payload: Record<string, unknown>;
}

export interface SceneObjectDoc {
  id: string;
  description: string;
  position: [number, number, number];
  orientation: [number, number, number, number];
  keypoint_px: [number, number];
  grasped: boolean;
}

export interface SceneDoc {
  objects: SceneObjectDoc[];
  effector: {
    position: [number, number, number];
    orientation: [number, number, number, number];
    gripper: string;
    held_object: string | null;
  };
  bindings: Record<string, string>;
}

export interface TrajectoryDoc {
  dt: number;
  positions: [number, number, number][];
  orientations: [number, number, number, number][];
}

export interface PreviewDoc {
  mode: string;
  scene: SceneDoc;
  plan?: string;
  program?: Record<string, unknown>;
  trajectories?: TrajectoryDoc[];
}

export interface MetricsDoc {
  supervision_time_s: number;
  commands_spoken: number;
  ok_commands: number;
  primitive_calls: number;
  behavior_complexity: number;
  skill_failures: Record<string, number>;
  teach_counts: Record<string, number>;
}

export interface CommandResponse {
  session_id: string;
  mode: string;
  records: EventRecord[];
}
