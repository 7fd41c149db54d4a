// Console state: a pure reducer over received frames. The scene is drawn
// only from what the server sent plus the local handle positions; robot
// state is never extrapolated between frames. Feeding the same frames to
// a fresh state reproduces the same scene, which is what makes a page
// reload harmless.

import type {
  DeviceKey,
  MissionEvent,
  RobotState,
  SceneInfo,
  WireFrame,
} from "./protocol.js";
import { DEVICES } from "./protocol.js";

// Mirror the wearable firmware timing so on-screen flashes match what a
// physical band would buzz.
export const PULSE_S = 0.15;
export const PULSE_GAP_S = 0.1;

const EVENT_LOG_LIMIT = 64;

export type Connection = "connecting" | "open" | "rejected" | "closed";

export interface Flash {
  start: number; // console clock, seconds
}

export interface ConsoleState {
  connection: Connection;
  rejectReason: string;
  condition: "A" | "B" | "C" | null;
  scene: SceneInfo | null;
  robot: RobotState | null;
  squeeze: Record<DeviceKey, number>;
  flashes: Record<DeviceKey, Flash[]>;
  flashTotal: Record<DeviceKey, number>;
  events: MissionEvent[];
  lastFrameAt: number | null;
}

function perDevice<T>(make: () => T): Record<DeviceKey, T> {
  const out = {} as Record<DeviceKey, T>;
  for (const d of DEVICES) out[d] = make();
  return out;
}

export function newConsoleState(): ConsoleState {
  return {
    connection: "connecting",
    rejectReason: "",
    condition: null,
    scene: null,
    robot: null,
    squeeze: perDevice(() => 0),
    flashes: perDevice(() => []),
    flashTotal: perDevice(() => 0),
    events: [],
    lastFrameAt: null,
  };
}

export function applyFrame(state: ConsoleState, frame: WireFrame, now: number): void {
  state.lastFrameAt = now;
  switch (frame.type) {
    case "handshake_reply":
      if (frame.accepted) {
        state.connection = "open";
      } else {
        state.connection = "rejected";
        state.rejectReason = frame.reason;
      }
      break;
    case "scene_info":
      state.scene = frame;
      state.condition = frame.condition;
      break;
    case "robot_state":
      state.robot = frame;
      break;
    case "feedback_command": {
      state.squeeze[frame.device] = frame.level;
      const queue = state.flashes[frame.device];
      for (let k = 0; k < frame.pulses; k++) {
        queue.push({ start: now + k * (PULSE_S + PULSE_GAP_S) });
      }
      state.flashTotal[frame.device] += frame.pulses;
      break;
    }
    case "mission_event":
      state.events.push(frame);
      if (state.events.length > EVENT_LOG_LIMIT) {
        state.events.splice(0, state.events.length - EVENT_LOG_LIMIT);
      }
      break;
    default:
      // operator_input, external_command, handshake: client-to-server
      // only, a well-behaved server never echoes them
      break;
  }
}

export function markClosed(state: ConsoleState): void {
  if (state.connection !== "rejected") state.connection = "closed";
}

export function isFlashing(state: ConsoleState, device: DeviceKey, now: number): boolean {
  return state.flashes[device].some(
    (fl) => now >= fl.start && now < fl.start + PULSE_S,
  );
}

export function pruneFlashes(state: ConsoleState, now: number): void {
  for (const d of DEVICES) {
    state.flashes[d] = state.flashes[d].filter((fl) => now < fl.start + PULSE_S);
  }
}

export function feedbackEnabled(state: ConsoleState): boolean {
  return state.condition === "C";
}

export function missionClock(state: ConsoleState): number | null {
  const robot = state.robot;
  if (!robot || robot.mission.t_start === null) return null;
  const end = robot.mission.t_end ?? robot.t;
  return end - robot.mission.t_start;
}
