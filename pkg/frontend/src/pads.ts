// Rope-handle pads: a 2D drag surface per arm standing in for wrist
// tracking. Pad coordinates are normalized to [-1, 1] with +x right and
// +y up (screen deltas must be flipped by the caller); the scroll wheel
// drives the vertical wrist axis. Releasing a pad snaps the handle home,
// which returns the wrist to its anchor.

import type { Vec3 } from "./protocol.js";

export const FULL_SCALE_M = 0.3;
export const SCROLL_STEP = 0.1;

export interface PadState {
  x: number;
  y: number;
  z: number;
  held: boolean;
}

export function newPad(): PadState {
  return { x: 0, y: 0, z: 0, held: false };
}

export function grab(pad: PadState): void {
  pad.held = true;
}

// Pixel offset from the pad center, radius = pixels at full deflection.
export function drag(pad: PadState, dxPx: number, dyPx: number, radiusPx: number): void {
  if (radiusPx <= 0) return;
  let x = dxPx / radiusPx;
  let y = dyPx / radiusPx;
  const r = Math.hypot(x, y);
  if (r > 1) {
    x /= r;
    y /= r;
  }
  pad.x = x;
  pad.y = y;
}

export function scrollZ(pad: PadState, steps: number): void {
  pad.z = Math.max(-1, Math.min(1, pad.z + steps * SCROLL_STEP));
}

export function release(pad: PadState): void {
  pad.x = 0;
  pad.y = 0;
  pad.z = 0;
  pad.held = false;
}

export function wristOffset(pad: PadState, fullScaleM: number = FULL_SCALE_M): Vec3 {
  return [pad.x * fullScaleM, pad.y * fullScaleM, pad.z * fullScaleM];
}
