/**
 * Canvas painters.  All coordinate math lives in geometry.ts; these
 * functions only issue draw calls, so a recording 2D context can verify
 * the exact pixels in tests.
 */

import {
  IntersectionView,
  Panel,
  ROBOT_SCALE,
  permissionBars,
  robotToPixel,
  vehicleRect,
  worldScale,
} from "./geometry.js";
import { ArmPoints, Point, StateMessage } from "./protocol.js";

type Ctx = CanvasRenderingContext2D;

const ROAD = "#2d3748";
const ROAD_EDGE = "#4a5568";
const VEHICLE = "#63b3ed";
const VEHICLE_QUEUED = "#f6ad55";
const BODY = "#276749"; // the jacket green
const STRIPE_COLORS = ["#2f855a", "#1a202c", "#f7fafc"]; // green/black/white arms

export function renderIntersection(
  ctx: Ctx,
  snapshot: StateMessage,
  view: IntersectionView,
): void {
  const { width, height } = view.panel;
  const k = worldScale(view);
  const cx = width / 2;
  const cy = height / 2;
  const half = (view.boxLength / 2) * k;
  const road = view.laneWidth * 2 * k;

  ctx.fillStyle = "#171923";
  ctx.fillRect(0, 0, width, height);
  ctx.fillStyle = ROAD;
  ctx.fillRect(cx - road / 2, 0, road, height);
  ctx.fillRect(0, cy - road / 2, width, road);
  ctx.strokeStyle = ROAD_EDGE;
  ctx.strokeRect(cx - half, cy - half, 2 * half, 2 * half);

  for (const bar of permissionBars(snapshot, view)) {
    ctx.fillStyle = bar.color;
    ctx.fillRect(bar.rect.x, bar.rect.y, bar.rect.w, bar.rect.h);
  }

  for (const v of snapshot.vehicles) {
    const r = vehicleRect(v, view);
    ctx.fillStyle = v.speed < 0.1 && v.s > 0 ? VEHICLE_QUEUED : VEHICLE;
    ctx.fillRect(r.x, r.y, r.w, r.h);
  }

  ctx.fillStyle = "#e2e8f0";
  ctx.font = "14px sans-serif";
  ctx.fillText(`signal: ${snapshot.current_signal ?? "(none)"}`, 10, 18);
  ctx.fillText(`t = ${snapshot.clock.toFixed(1)} s`, 10, 36);
}

function strokeChain(ctx: Ctx, points: Point[], panel: Panel): void {
  ctx.beginPath();
  const [x0, y0] = robotToPixel(points[0]!, panel);
  ctx.moveTo(x0, y0);
  for (const p of points.slice(1)) {
    const [x, y] = robotToPixel(p, panel);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
}

function strokeArm(ctx: Ctx, arm: ArmPoints, panel: Panel): void {
  // Striped segments echo the arm paintwork: upper arm, forearm, hand.
  const chain: Point[] = [arm.shoulder, arm.elbow, arm.wrist, arm.fingertip];
  for (let i = 0; i < 3; i += 1) {
    ctx.strokeStyle = STRIPE_COLORS[i]!;
    strokeChain(ctx, [chain[i]!, chain[i + 1]!], panel);
  }
}

export function renderRobot(
  ctx: Ctx,
  snapshot: StateMessage,
  panel: Panel,
): void {
  const fk = snapshot.fk_points;
  ctx.fillStyle = "#171923";
  ctx.fillRect(0, 0, panel.width, panel.height);

  ctx.lineWidth = 6;
  ctx.lineCap = "round";

  // Trunk and shoulder line.
  ctx.strokeStyle = BODY;
  strokeChain(ctx, [[0, 0], [0, fk.torso_top]], panel);
  strokeChain(ctx, [fk.left.shoulder, fk.right.shoulder], panel);

  strokeArm(ctx, fk.left, panel);
  strokeArm(ctx, fk.right, panel);

  // Head: a disc whose nose marker rotates with yaw (viewed from the
  // front, positive yaw looks toward the robot's left).
  const [hx, hy] = robotToPixel(fk.head_center, panel);
  const r = fk.head_radius * ROBOT_SCALE;
  ctx.fillStyle = BODY;
  ctx.beginPath();
  ctx.arc(hx, hy, r, 0, 2 * Math.PI);
  ctx.fill();
  ctx.fillStyle = "#f7fafc";
  ctx.beginPath();
  ctx.arc(hx + r * Math.sin(fk.head_yaw), hy, Math.max(2, r / 4), 0, 2 * Math.PI);
  ctx.fill();

  ctx.fillStyle = "#e2e8f0";
  ctx.font = "14px sans-serif";
  ctx.fillText(`pose: ${snapshot.current_signal ?? "rest"}`, 10, 18);
}
