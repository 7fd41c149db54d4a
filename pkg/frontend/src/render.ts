// Top-down scene painter. World x grows right, world y grows up on
// screen; everything drawn comes from the last received frames, so the
// picture freezes (and greys out) the moment the link drops.

import type { RobotState, SceneInfo, Vec3 } from "./protocol.js";
import type { ConsoleState } from "./state.js";
import { isFlashing, missionClock } from "./state.js";

export const ARROW_SCALE_M_PER_N = 0.05;

export function arrowLengthM(force: Vec3): number {
  return Math.hypot(force[0], force[1], force[2]) * ARROW_SCALE_M_PER_N;
}

export interface Viewport {
  scale: number; // css px per meter
  ox: number;
  oy: number;
}

export interface Bounds {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function sceneBounds(scene: SceneInfo): Bounds {
  const b: Bounds = { xMin: -0.6, xMax: 0.6, yMin: -0.6, yMax: 0.6 };
  for (const o of scene.objects) {
    const r = o.shape === "sphere" ? o.size[0] ?? 0 : Math.hypot(o.size[0] ?? 0, o.size[1] ?? 0);
    b.xMin = Math.min(b.xMin, o.position[0] - r);
    b.xMax = Math.max(b.xMax, o.position[0] + r);
    b.yMin = Math.min(b.yMin, o.position[1] - r);
    b.yMax = Math.max(b.yMax, o.position[1] + r);
  }
  return b;
}

export function fitViewport(
  b: Bounds,
  widthPx: number,
  heightPx: number,
  marginPx = 24,
): Viewport {
  const spanX = Math.max(b.xMax - b.xMin, 1e-6);
  const spanY = Math.max(b.yMax - b.yMin, 1e-6);
  const scale = Math.min(
    (widthPx - 2 * marginPx) / spanX,
    (heightPx - 2 * marginPx) / spanY,
  );
  return {
    scale,
    ox: marginPx - b.xMin * scale + (widthPx - 2 * marginPx - spanX * scale) / 2,
    oy: heightPx - marginPx + b.yMin * scale - (heightPx - 2 * marginPx - spanY * scale) / 2,
  };
}

export function worldToScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.ox + x * vp.scale, vp.oy - y * vp.scale];
}

const ROLE_FILL: Record<string, string> = {
  table: "#6b625a",
  drawer: "#4e4840",
  obstacle: "#4e4840",
  box: "#8a6d3b",
  button: "#b03030",
};

function roleKey(role: string): string {
  return role.toLowerCase().replace("emergency", "");
}

function drawObject(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  o: SceneInfo["objects"][number],
): void {
  const [sx, sy] = worldToScreen(vp, o.position[0], o.position[1]);
  ctx.fillStyle = ROLE_FILL[roleKey(o.role)] ?? "#555";
  if (o.shape === "sphere") {
    ctx.beginPath();
    ctx.arc(sx, sy, (o.size[0] ?? 0.02) * vp.scale, 0, Math.PI * 2);
    ctx.fill();
    return;
  }
  const hx = (o.size[0] ?? 0) * vp.scale;
  const hy = (o.size[1] ?? 0) * vp.scale;
  ctx.save();
  ctx.translate(sx, sy);
  ctx.rotate(-o.heading);
  if (roleKey(o.role) === "box") {
    ctx.strokeStyle = ROLE_FILL.box ?? "#8a6d3b";
    ctx.lineWidth = 3;
    ctx.strokeRect(-hx, -hy, 2 * hx, 2 * hy);
  } else {
    ctx.fillRect(-hx, -hy, 2 * hx, 2 * hy);
  }
  ctx.restore();
}

function drawArm(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  points: Vec3[],
  eeRadiusM: number,
  color: string,
): void {
  if (!points.length) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 3;
  ctx.lineJoin = "round";
  ctx.beginPath();
  points.forEach((p, idx) => {
    const [sx, sy] = worldToScreen(vp, p[0], p[1]);
    if (idx === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
  const ee = points[points.length - 1];
  if (ee) {
    const [sx, sy] = worldToScreen(vp, ee[0], ee[1]);
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(sx, sy, Math.max(eeRadiusM * vp.scale, 3), 0, Math.PI * 2);
    ctx.fill();
  }
}

function drawArrow(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  from: Vec3,
  force: Vec3,
  color: string,
): void {
  const planar = Math.hypot(force[0], force[1]);
  if (planar < 1e-9) return;
  const lenM = arrowLengthM(force);
  const ux = force[0] / planar;
  const uy = force[1] / planar;
  const [x0, y0] = worldToScreen(vp, from[0], from[1]);
  const [x1, y1] = worldToScreen(vp, from[0] + ux * lenM, from[1] + uy * lenM);
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = 2.5;
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.stroke();
  const angle = Math.atan2(y1 - y0, x1 - x0);
  const head = 7;
  ctx.beginPath();
  ctx.moveTo(x1, y1);
  ctx.lineTo(x1 - head * Math.cos(angle - 0.4), y1 - head * Math.sin(angle - 0.4));
  ctx.lineTo(x1 - head * Math.cos(angle + 0.4), y1 - head * Math.sin(angle + 0.4));
  ctx.closePath();
  ctx.fill();
}

function drawRobot(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  robot: RobotState,
  scene: SceneInfo,
): void {
  const [bx, by] = worldToScreen(vp, robot.base_pos[0], robot.base_pos[1]);
  const r = scene.footprint_radius * vp.scale;
  ctx.fillStyle = "#2e4a66";
  ctx.beginPath();
  ctx.arc(bx, by, r, 0, Math.PI * 2);
  ctx.fill();
  ctx.strokeStyle = "#9fc3e8";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(bx, by);
  ctx.lineTo(
    bx + r * Math.cos(-robot.base_heading),
    by + r * Math.sin(-robot.base_heading),
  );
  ctx.stroke();

  drawArm(ctx, vp, robot.right_points, scene.ee_radius, "#d9824f");
  drawArm(ctx, vp, robot.left_points, scene.ee_radius, "#58a07a");

  const [gx, gy] = worldToScreen(vp, robot.bottle_pos[0], robot.bottle_pos[1]);
  ctx.fillStyle = "#7fba56";
  ctx.beginPath();
  ctx.arc(gx, gy, Math.max(0.04 * vp.scale, 3), 0, Math.PI * 2);
  ctx.fill();

  const rightEE = robot.right_points[robot.right_points.length - 1];
  if (rightEE) drawArrow(ctx, vp, rightEE, robot.force_right, "#ffb347");
  const leftFrom =
    robot.control_point === "base"
      ? robot.base_pos
      : robot.left_points[robot.left_points.length - 1];
  if (leftFrom) drawArrow(ctx, vp, leftFrom, robot.force_left, "#7fd1a8");
}

function phaseLabel(phase: string): string {
  // "PickBottle" -> "Pick bottle"
  const words = phase.replace(/([a-z])([A-Z])/g, "$1 $2");
  return words.charAt(0).toUpperCase() + words.slice(1).toLowerCase();
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  state: ConsoleState,
  widthPx: number,
  heightPx: number,
): void {
  ctx.clearRect(0, 0, widthPx, heightPx);
  ctx.fillStyle = "#191d23";
  ctx.fillRect(0, 0, widthPx, heightPx);

  if (!state.scene) {
    ctx.fillStyle = "#777";
    ctx.font = "14px system-ui, sans-serif";
    ctx.fillText("waiting for scene…", 16, 28);
    return;
  }
  const vp = fitViewport(sceneBounds(state.scene), widthPx, heightPx);
  for (const o of state.scene.objects) drawObject(ctx, vp, o);
  if (state.robot) drawRobot(ctx, vp, state.robot, state.scene);

  ctx.font = "13px system-ui, sans-serif";
  ctx.fillStyle = "#ccc";
  if (state.robot) {
    const m = state.robot.mission;
    const clock = missionClock(state);
    const timer = clock === null ? "" : `  ${clock.toFixed(1)} s`;
    ctx.fillText(`${phaseLabel(m.phase)}${timer}`, 16, 22);
    if (m.failures.length) {
      ctx.fillStyle = "#e07070";
      ctx.fillText(`failures: ${m.failures.join(", ")}`, 16, 40);
    }
  }

  if (state.connection !== "open") {
    ctx.fillStyle = "rgba(25, 29, 35, 0.75)";
    ctx.fillRect(0, 0, widthPx, heightPx);
    ctx.fillStyle = "#e0b060";
    ctx.font = "16px system-ui, sans-serif";
    const note =
      state.connection === "rejected"
        ? `rejected: ${state.rejectReason}`
        : "disconnected, retrying…";
    ctx.fillText(note, 16, heightPx / 2);
  }
}

export function flashOpacity(state: ConsoleState, device: Parameters<typeof isFlashing>[1], now: number): number {
  return isFlashing(state, device, now) ? 1 : 0;
}
