// Rendering is split into pure draw-list builders (unit tested) and a thin
// canvas painter. The subjective builder draws only what the server says the
// person can currently see.

import { Frame, FrameEntity } from "./protocol.js";

export interface FrustumStyle {
  halfAngleRad: number;
  rangeM: number;
}

export type DrawCommand =
  | { kind: "room"; width: number; depth: number }
  | { kind: "circle"; id: number; x: number; y: number; r: number; color: string }
  | {
      kind: "box";
      id: number;
      x: number;
      y: number;
      hx: number;
      hy: number;
      theta: number;
      color: string;
    }
  | { kind: "cone"; x: number; y: number; theta: number; halfAngle: number; range: number }
  | { kind: "link"; from: [number, number]; to: [number, number]; risky: boolean }
  | { kind: "path"; points: [number, number][] };

const CLASS_COLORS: Record<string, string> = {
  robot: "#b03a2e",
  person: "#d4ac0d",
  ball: "#c0392b",
  couch: "#1e8449",
  chair: "#1e8449",
  door: "#7d6608",
  backpack: "#c0392b",
};

export function entityColor(cls: string): string {
  return CLASS_COLORS[cls] ?? "#7f8c8d";
}

function entityCommand(e: FrameEntity): DrawCommand {
  if (typeof e.radius_or_extents === "number") {
    return { kind: "circle", id: e.id, x: e.x, y: e.y, r: e.radius_or_extents, color: entityColor(e.class) };
  }
  const [hx, hy] = e.radius_or_extents;
  return { kind: "box", id: e.id, x: e.x, y: e.y, hx, hy, theta: e.theta, color: entityColor(e.class) };
}

export function buildZenithalDrawList(frame: Frame, frustum: FrustumStyle): DrawCommand[] {
  const commands: DrawCommand[] = [
    { kind: "room", width: frame.room.width_m, depth: frame.room.depth_m },
  ];
  const byId = new Map(frame.entities.map((e) => [e.id, e]));
  const person = byId.get(frame.person_id);
  if (person) {
    commands.push({
      kind: "cone",
      x: person.x,
      y: person.y,
      theta: person.theta,
      halfAngle: frustum.halfAngleRad,
      range: frustum.rangeM,
    });
  }
  if (frame.robot_plan.length > 1) {
    commands.push({ kind: "path", points: frame.robot_plan });
  }
  for (const intent of frame.intentions) {
    const from = byId.get(intent.person);
    const to = byId.get(intent.target);
    if (from && to) {
      commands.push({ kind: "link", from: [from.x, from.y], to: [to.x, to.y], risky: intent.risky });
    }
  }
  for (const e of frame.entities) {
    commands.push(entityCommand(e));
  }
  return commands;
}

export function buildSubjectiveDrawList(frame: Frame): DrawCommand[] {
  // Ego view from the person's pose: only server-visible entities appear,
  // expressed in the person's frame (x forward, y left).
  const byId = new Map(frame.entities.map((e) => [e.id, e]));
  const person = byId.get(frame.person_id);
  if (!person) return [];
  const visible = new Set(frame.subjective_visible_ids);
  const cos = Math.cos(-person.theta);
  const sin = Math.sin(-person.theta);
  const commands: DrawCommand[] = [];
  for (const e of frame.entities) {
    if (!visible.has(e.id) || e.id === frame.person_id) continue;
    const dx = e.x - person.x;
    const dy = e.y - person.y;
    const ex = cos * dx - sin * dy;
    const ey = sin * dx + cos * dy;
    const relTheta = e.theta - person.theta;
    if (typeof e.radius_or_extents === "number") {
      commands.push({ kind: "circle", id: e.id, x: ex, y: ey, r: e.radius_or_extents, color: entityColor(e.class) });
    } else {
      const [hx, hy] = e.radius_or_extents;
      commands.push({ kind: "box", id: e.id, x: ex, y: ey, hx, hy, theta: relTheta, color: entityColor(e.class) });
    }
  }
  return commands;
}

export function drawnEntityIds(commands: DrawCommand[]): number[] {
  const ids: number[] = [];
  for (const command of commands) {
    if (command.kind === "circle" || command.kind === "box") ids.push(command.id);
  }
  return ids;
}

// ---- canvas painter ----

export interface Viewport {
  widthPx: number;
  heightPx: number;
  worldWidth: number;
  worldDepth: number;
}

export function paint(
  ctx: CanvasRenderingContext2D,
  commands: DrawCommand[],
  viewport: Viewport,
  ego = false,
): void {
  const scale = Math.min(viewport.widthPx / viewport.worldWidth, viewport.heightPx / viewport.worldDepth);
  const toPx = (x: number, y: number): [number, number] =>
    ego
      ? [viewport.widthPx / 2 + -y * scale, viewport.heightPx - 40 - x * scale]
      : [x * scale, viewport.heightPx - y * scale];

  ctx.clearRect(0, 0, viewport.widthPx, viewport.heightPx);
  ctx.fillStyle = "#fdfefe";
  ctx.fillRect(0, 0, viewport.widthPx, viewport.heightPx);

  for (const command of commands) {
    switch (command.kind) {
      case "room": {
        ctx.strokeStyle = "#2c3e50";
        ctx.lineWidth = 2;
        const [x0, y0] = toPx(0, command.depth);
        ctx.strokeRect(x0, y0, command.width * scale, command.depth * scale);
        break;
      }
      case "cone": {
        ctx.fillStyle = "rgba(46, 204, 113, 0.15)";
        ctx.beginPath();
        const [px, py] = toPx(command.x, command.y);
        ctx.moveTo(px, py);
        const steps = 24;
        for (let i = 0; i <= steps; i += 1) {
          const a = command.theta - command.halfAngle + (2 * command.halfAngle * i) / steps;
          const [qx, qy] = toPx(command.x + command.range * Math.cos(a), command.y + command.range * Math.sin(a));
          ctx.lineTo(qx, qy);
        }
        ctx.closePath();
        ctx.fill();
        break;
      }
      case "path": {
        ctx.strokeStyle = "#2980b9";
        ctx.setLineDash([6, 4]);
        ctx.lineWidth = 2;
        ctx.beginPath();
        command.points.forEach(([x, y], i) => {
          const [px, py] = toPx(x, y);
          if (i === 0) ctx.moveTo(px, py);
          else ctx.lineTo(px, py);
        });
        ctx.stroke();
        ctx.setLineDash([]);
        break;
      }
      case "link": {
        ctx.strokeStyle = command.risky ? "#e74c3c" : "rgba(127, 140, 141, 0.6)";
        ctx.lineWidth = command.risky ? 2.5 : 1;
        ctx.beginPath();
        const [ax, ay] = toPx(...command.from);
        const [bx, by] = toPx(...command.to);
        ctx.moveTo(ax, ay);
        ctx.lineTo(bx, by);
        ctx.stroke();
        break;
      }
      case "circle": {
        ctx.fillStyle = command.color;
        ctx.beginPath();
        const [px, py] = toPx(command.x, command.y);
        ctx.arc(px, py, command.r * scale, 0, 2 * Math.PI);
        ctx.fill();
        break;
      }
      case "box": {
        ctx.fillStyle = command.color;
        const [px, py] = toPx(command.x, command.y);
        ctx.save();
        ctx.translate(px, py);
        ctx.rotate(-command.theta);
        ctx.fillRect(-command.hx * scale, -command.hy * scale, 2 * command.hx * scale, 2 * command.hy * scale);
        ctx.restore();
        break;
      }
    }
  }
}
