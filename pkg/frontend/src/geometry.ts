/**
 * World-to-pixel transforms, kept pure so tests can verify exactly what
 * the canvas painters draw.
 *
 * Robot panel: metres to pixels at ROBOT_SCALE, x centred on the panel,
 * y measured up from the ground line:
 *
 *     px = panel.width / 2 + x * ROBOT_SCALE
 *     py = (panel.height - GROUND_PAD) - y * ROBOT_SCALE
 *
 * Intersection panel: the world is a square of half-extent
 * approach_length + box_length / 2 centred on the box.  Front traffic
 * approaches from the bottom of the screen, behind from the top, left
 * from screen-left, right from screen-right (top-down view from behind
 * the robot).
 */

import {
  ApproachName,
  PermissionName,
  Point,
  StateMessage,
  VehicleDto,
} from "./protocol.js";

export const ROBOT_SCALE = 200; // px per metre
export const GROUND_PAD = 14; // px below the robot's feet

export interface Panel {
  width: number;
  height: number;
}

export function robotToPixel(p: Point, panel: Panel): Point {
  return [
    panel.width / 2 + p[0] * ROBOT_SCALE,
    panel.height - GROUND_PAD - p[1] * ROBOT_SCALE,
  ];
}

export interface IntersectionView {
  panel: Panel;
  approachLength: number; // m
  boxLength: number; // m
  vehicleLength: number; // m
  laneWidth: number; // m
}

export function worldScale(view: IntersectionView): number {
  const span = 2 * view.approachLength + view.boxLength;
  return Math.min(view.panel.width, view.panel.height) / span;
}

/** Unit vector of travel toward the box, per approach. */
const TRAVEL: Record<ApproachName, Point> = {
  front: [0, -1], // up the screen
  behind: [0, 1],
  left: [1, 0],
  right: [-1, 0],
};

/** Right-hand lane offset (perpendicular to travel). */
const LANE_SIDE: Record<ApproachName, Point> = {
  front: [1, 0],
  behind: [-1, 0],
  left: [0, 1],
  right: [0, -1],
};

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

/**
 * Centre of a vehicle in pixels.  A vehicle at distance s from the stop
 * line sits s + boxLength/2 (+half a body) from the box centre, against
 * the travel direction; s goes negative as it crosses the box.
 */
export function vehicleCenter(v: VehicleDto, view: IntersectionView): Point {
  const k = worldScale(view);
  const cx = view.panel.width / 2;
  const cy = view.panel.height / 2;
  const dist = v.s + view.boxLength / 2 + view.vehicleLength / 2;
  const [tx, ty] = TRAVEL[v.approach];
  const [sx, sy] = LANE_SIDE[v.approach];
  const lane = view.laneWidth / 2;
  return [
    cx - tx * dist * k + sx * lane * k,
    cy - ty * dist * k + sy * lane * k,
  ];
}

export function vehicleRect(v: VehicleDto, view: IntersectionView): Rect {
  const k = worldScale(view);
  const [cx, cy] = vehicleCenter(v, view);
  const along = view.vehicleLength * k;
  const across = Math.max(2, 2.0 * k);
  const horizontal = v.approach === "left" || v.approach === "right";
  const w = horizontal ? along : across;
  const h = horizontal ? across : along;
  return { x: cx - w / 2, y: cy - h / 2, w, h };
}

export const PERMISSION_COLORS: Record<PermissionName, string> = {
  go: "#38a169",
  stop: "#e53e3e",
};

export function permissionColor(p: PermissionName): string {
  return PERMISSION_COLORS[p];
}

export interface PermissionBar {
  approach: ApproachName;
  color: string;
  rect: Rect;
}

/** Stop-line permission bars, coloured from the effective permissions. */
export function permissionBars(
  snapshot: StateMessage,
  view: IntersectionView,
): PermissionBar[] {
  const k = worldScale(view);
  const cx = view.panel.width / 2;
  const cy = view.panel.height / 2;
  const half = (view.boxLength / 2) * k;
  const width = view.laneWidth * 2 * k;
  const thick = Math.max(3, 0.8 * k);
  const rects: Record<ApproachName, Rect> = {
    front: { x: cx - width / 2, y: cy + half, w: width, h: thick },
    behind: { x: cx - width / 2, y: cy - half - thick, w: width, h: thick },
    left: { x: cx - half - thick, y: cy - width / 2, w: thick, h: width },
    right: { x: cx + half, y: cy - width / 2, w: thick, h: width },
  };
  return (Object.keys(rects) as ApproachName[]).map((a) => ({
    approach: a,
    color: permissionColor(snapshot.effective_permissions[a]),
    rect: rects[a],
  }));
}
