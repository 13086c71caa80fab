/**
 * Wire types for the trafwarden server stream.
 *
 * One JSON object per WebSocket text frame, tagged by `type`; unknown
 * fields are ignored, unknown types are dropped by the parser.
 */

export type ApproachName = "front" | "behind" | "left" | "right";
export const APPROACHES: ApproachName[] = ["front", "behind", "left", "right"];

export type PermissionName = "go" | "stop";

export type SignalName =
  | "front_stop"
  | "behind_stop"
  | "front_behind_stop"
  | "left_right_stop"
  | "all_stop"
  | "start_left"
  | "start_right"
  | "change_sign";

export type ModeName = "wizard_of_oz" | "round_robin" | "queue_priority";

export type Point = [number, number];

export interface ArmPoints {
  shoulder: Point;
  elbow: Point;
  wrist: Point;
  fingertip: Point;
}

export interface FkPoints {
  left: ArmPoints;
  right: ArmPoints;
  torso_top: number;
  head_yaw: number;
  head_center: Point;
  head_radius: number;
}

export interface VehicleDto {
  id: number;
  approach: ApproachName;
  s: number; // metres to the stop line, negative inside the box
  speed: number;
}

export interface HelloMessage {
  type: "hello";
  version: number;
  scenario: Record<string, number>;
}

export interface StateMessage {
  type: "state";
  seq: number;
  clock: number;
  vehicles: VehicleDto[];
  permissions: Record<ApproachName, PermissionName>;
  effective_permissions: Record<ApproachName, PermissionName>;
  robot_pose: Record<string, number>;
  fk_points: FkPoints;
  queues: Record<ApproachName, number>;
  current_signal: SignalName | null;
  mode: ModeName;
  warnings: { time: number; text: string }[];
}

export interface MetricsMessage {
  type: "metrics";
  report: Record<string, unknown>;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  text: string;
}

export type ServerMessage =
  | HelloMessage
  | StateMessage
  | MetricsMessage
  | ErrorMessage;

export interface CommandMessage {
  type: "command";
  signal: SignalName;
}

export interface SetModeMessage {
  type: "set_mode";
  mode: ModeName;
}

export type ClientMessage = CommandMessage | SetModeMessage;

const SERVER_TYPES = new Set(["hello", "state", "metrics", "error"]);

/** Parse one frame; returns null for malformed or unknown payloads. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  return data as ServerMessage;
}

export function encode(msg: ClientMessage): string {
  return JSON.stringify(msg);
}
