// Keyboard bindings for the two-button rings, one ring per arm:
//
//   R   right button 1   toggle right-arm engagement
//   L   left  button 1   toggle left-arm engagement
//   G   right button 2   toggle gripper open/closed
//   C   left  button 2   switch the left control point (left EE <-> base)
//
// The same table feeds the help overlay, so the docs cannot drift.

import type { ButtonPress, PadSide } from "./protocol.js";

export interface ButtonBinding {
  side: PadSide;
  button: 1 | 2;
  label: string;
}

export const KEY_BINDINGS: Record<string, ButtonBinding> = {
  r: { side: "right", button: 1, label: "toggle right-arm engagement" },
  l: { side: "left", button: 1, label: "toggle left-arm engagement" },
  g: { side: "right", button: 2, label: "toggle gripper open/closed" },
  c: { side: "left", button: 2, label: "switch left control point" },
};

export function keyToButton(key: string, pressed: boolean): ButtonPress | null {
  const binding = KEY_BINDINGS[key.toLowerCase()];
  if (!binding) return null;
  return { side: binding.side, button: binding.button, pressed };
}

// Presses collected between sender ticks; each rides the next
// operator_input frame.
export class ButtonQueue {
  private pending: ButtonPress[] = [];

  push(press: ButtonPress | null): void {
    if (press) this.pending.push(press);
  }

  drain(): ButtonPress[] {
    const out = this.pending;
    this.pending = [];
    return out;
  }
}
