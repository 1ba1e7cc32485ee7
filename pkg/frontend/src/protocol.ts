// Wire protocol shared with the server: one JSON text message per frame or
// command over a single websocket, each self-described by its "type" field.

export interface FrameEntity {
  id: number;
  class: string;
  x: number;
  y: number;
  theta: number;
  radius_or_extents: number | [number, number];
}

export interface FrameIntention {
  person: number;
  target: number;
  risky: boolean;
}

export type FrameEvent =
  | "none"
  | "risk_detected"
  | "action_committed"
  | "collision"
  | "goal_reached";

export interface Frame {
  type: "frame";
  t: number;
  entities: FrameEntity[];
  subjective_visible_ids: number[];
  intentions: FrameIntention[];
  robot_plan: [number, number][];
  event: FrameEvent;
  room: { width_m: number; depth_m: number };
  person_id: number;
}

export interface SteerCommand {
  type: "steer";
  vx: number;
  vy: number;
  session: string;
}

export type ControlMessage = { type: "reset" | "start" | "pause"; session: string };

export interface AckMessage {
  type: "ack";
  ack: string;
  session?: string;
  [key: string]: unknown;
}

export interface ErrorMessage {
  type: "error";
  error: string;
}

export type ServerMessage = Frame | AckMessage | ErrorMessage;

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const message = data as { type?: unknown };
  if (message.type === "frame") {
    return isValidFrame(data) ? (data as Frame) : null;
  }
  if (message.type === "ack" || message.type === "error") {
    return data as ServerMessage;
  }
  return null;
}

export function isValidFrame(data: unknown): boolean {
  const f = data as Partial<Frame>;
  return (
    typeof f === "object" &&
    f !== null &&
    f.type === "frame" &&
    typeof f.t === "number" &&
    Array.isArray(f.entities) &&
    Array.isArray(f.subjective_visible_ids) &&
    Array.isArray(f.intentions) &&
    Array.isArray(f.robot_plan) &&
    typeof f.event === "string" &&
    f.entities.every(
      (e) =>
        typeof e.id === "number" &&
        typeof e.x === "number" &&
        typeof e.y === "number" &&
        typeof e.theta === "number",
    )
  );
}

export function steerMessage(vx: number, vy: number, session: string): string {
  return JSON.stringify({ type: "steer", vx, vy, session } satisfies SteerCommand);
}

export function controlMessage(kind: "reset" | "start" | "pause", session: string): string {
  return JSON.stringify({ type: kind, session } satisfies ControlMessage);
}
