// Wire codec for the teleoperation session bridge.
//
// Frames are JSON objects tagged with "type", one per WebSocket text
// message. Encoding is canonical (sorted keys, no whitespace, Python-style
// shortest float repr) so a frame we build byte-matches what the server
// would emit for the same values; the shared fixture file under
// ../../tests/data/schema_vectors.json pins both codecs to each other.
// Decoding is strict: unknown types, unknown or missing fields, and
// malformed values raise ProtocolError with a structured kind.

export const PROTOCOL_VERSION = 1;

export const ROLES = ["operator", "ui-viewer", "command-channel"] as const;
export const SIDES = ["right", "left"] as const;
export const DEVICES = [
  "right_forearm",
  "right_finger",
  "left_forearm",
  "left_finger",
] as const;
export const CONTROL_POINTS = ["left_ee", "base"] as const;

export type Role = (typeof ROLES)[number];
export type PadSide = (typeof SIDES)[number];
export type DeviceKey = (typeof DEVICES)[number];
export type ControlPointKey = (typeof CONTROL_POINTS)[number];
export type Vec3 = [number, number, number];

export type ProtocolErrorKind =
  | "malformed"
  | "unknown_type"
  | "unknown_field"
  | "missing_field"
  | "bad_value";

export class ProtocolError extends Error {
  readonly kind: ProtocolErrorKind;
  readonly detail: string;

  constructor(kind: ProtocolErrorKind, detail: string) {
    super(`${kind}: ${detail}`);
    this.name = "ProtocolError";
    this.kind = kind;
    this.detail = detail;
  }
}

const bad = (detail: string) => new ProtocolError("bad_value", detail);
const malformed = (detail: string) => new ProtocolError("malformed", detail);

// -- message shapes -----------------------------------------------------------

export interface ButtonPress {
  side: PadSide;
  button: 1 | 2;
  pressed: boolean;
}

export interface OperatorInput {
  type: "operator_input";
  t: number;
  right_wrist: Vec3;
  left_wrist: Vec3;
  buttons: ButtonPress[];
}

export interface ExternalCommand {
  type: "external_command";
  t: number;
  token: string;
}

export interface FeedbackCommand {
  type: "feedback_command";
  t: number;
  device: DeviceKey;
  level: number;
  pulses: number;
}

export interface MissionBlock {
  phase: string;
  failures: string[];
  t_start: number | null;
  t_end: number | null;
}

export interface RobotState {
  type: "robot_state";
  t: number;
  q_right: number[];
  q_left: number[];
  base_pos: Vec3;
  base_heading: number;
  gripper_aperture: number;
  grasp_force: number;
  left_ee_force: number;
  right_active: boolean;
  left_active: boolean;
  control_point: ControlPointKey;
  force_right: Vec3;
  force_left: Vec3;
  right_points: Vec3[];
  left_points: Vec3[];
  bottle_pos: Vec3;
  mission: MissionBlock;
}

export interface MissionEvent {
  type: "mission_event";
  t: number;
  kind: string;
}

export interface Handshake {
  type: "handshake";
  version: number;
  role: Role;
}

export interface HandshakeReply {
  type: "handshake_reply";
  accepted: boolean;
  version: number;
  reason: string;
}

export interface SceneObject {
  id: string;
  role: string;
  shape: "sphere" | "box";
  size: number[];
  position: Vec3;
  heading: number;
}

export interface SceneInfo {
  type: "scene_info";
  condition: "A" | "B" | "C";
  objects: SceneObject[];
  footprint_radius: number;
  ee_radius: number;
  f_max: number;
}

export type WireFrame =
  | OperatorInput
  | ExternalCommand
  | FeedbackCommand
  | RobotState
  | MissionEvent
  | Handshake
  | HandshakeReply
  | SceneInfo;

// -- validation helpers -------------------------------------------------------

type Obj = Record<string, unknown>;

function finite(value: unknown, name: string): number {
  if (typeof value !== "number") {
    throw bad(`${name} must be a number, got ${typeof value}`);
  }
  if (!Number.isFinite(value)) throw bad(`${name} must be finite`);
  return value;
}

function vec3(value: unknown, name: string): Vec3 {
  if (!Array.isArray(value) || value.length !== 3) {
    throw bad(`${name} must be a 3-element array`);
  }
  return [finite(value[0], name), finite(value[1], name), finite(value[2], name)];
}

function str<T extends string>(
  value: unknown,
  name: string,
  allowed?: readonly T[],
): T {
  if (typeof value !== "string") throw bad(`${name} must be a string`);
  if (allowed && !allowed.includes(value as T)) {
    throw bad(`${name} must be one of ${allowed.join("|")}, got ${value}`);
  }
  return value as T;
}

function bool(value: unknown, name: string): boolean {
  if (typeof value !== "boolean") throw bad(`${name} must be a boolean`);
  return value;
}

function int(value: unknown, name: string): number {
  if (typeof value !== "number" || !Number.isInteger(value)) {
    throw bad(`${name} must be an integer`);
  }
  return value;
}

export function stamp(t: number): number {
  // session-relative seconds at microsecond precision, like the server
  return Number(finite(t, "t").toFixed(6));
}

function checkKeys(obj: unknown, expected: readonly string[], where: string): Obj {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw bad(`${where} must be an object`);
  }
  const got = Object.keys(obj as Obj);
  const missing = expected.filter((k) => !got.includes(k));
  if (missing.length) {
    throw new ProtocolError("missing_field", `${where} missing ${missing.sort().join(",")}`);
  }
  const extra = got.filter((k) => !expected.includes(k));
  if (extra.length) {
    throw new ProtocolError("unknown_field", `${where} has unknown ${extra.sort().join(",")}`);
  }
  return obj as Obj;
}

// -- per-type decoders --------------------------------------------------------

function decodeButton(value: unknown): ButtonPress {
  const o = checkKeys(value, ["side", "button", "pressed"], "button event");
  const button = int(o.button, "button index");
  if (button !== 1 && button !== 2) throw bad("button index must be 1 or 2");
  return {
    side: str(o.side, "button side", SIDES),
    button,
    pressed: bool(o.pressed, "pressed"),
  };
}

function decodeOperatorInput(o: Obj): OperatorInput {
  checkKeys(o, ["t", "right_wrist", "left_wrist", "buttons"], "OperatorInput");
  if (!Array.isArray(o.buttons)) throw bad("buttons must be an array");
  return {
    type: "operator_input",
    t: stamp(finite(o.t, "t")),
    right_wrist: vec3(o.right_wrist, "right_wrist"),
    left_wrist: vec3(o.left_wrist, "left_wrist"),
    buttons: o.buttons.map(decodeButton),
  };
}

function decodeExternalCommand(o: Obj): ExternalCommand {
  checkKeys(o, ["t", "token"], "ExternalCommand");
  const token = str(o.token, "token");
  if (!token) throw bad("token must be non-empty");
  return { type: "external_command", t: stamp(finite(o.t, "t")), token };
}

function decodeFeedbackCommand(o: Obj): FeedbackCommand {
  checkKeys(o, ["t", "device", "level", "pulses"], "FeedbackCommand");
  const level = finite(o.level, "level");
  if (level < 0 || level > 1) throw bad("level must lie in [0, 1]");
  const pulses = int(o.pulses, "pulses");
  if (pulses < 0) throw bad("pulses must be nonnegative");
  return {
    type: "feedback_command",
    t: stamp(finite(o.t, "t")),
    device: str(o.device, "device", DEVICES),
    level,
    pulses,
  };
}

function decodeMissionBlock(value: unknown): MissionBlock {
  const o = checkKeys(value, ["phase", "failures", "t_start", "t_end"], "mission block");
  const phase = str(o.phase, "mission phase");
  if (!phase) throw bad("mission phase must be non-empty");
  if (!Array.isArray(o.failures)) throw bad("failures must be an array");
  const stampOrNull = (v: unknown, name: string) =>
    v === null ? null : stamp(finite(v, name));
  return {
    phase,
    failures: o.failures.map((f) => str(f, "failure")),
    t_start: stampOrNull(o.t_start, "t_start"),
    t_end: stampOrNull(o.t_end, "t_end"),
  };
}

const ROBOT_STATE_KEYS = [
  "t", "q_right", "q_left", "base_pos", "base_heading", "gripper_aperture",
  "grasp_force", "left_ee_force", "right_active", "left_active",
  "control_point", "force_right", "force_left", "right_points",
  "left_points", "bottle_pos", "mission",
] as const;

function floatArray(value: unknown, name: string): number[] {
  if (!Array.isArray(value) || value.length === 0) {
    throw bad(`${name} must be a non-empty array`);
  }
  return value.map((v) => finite(v, name));
}

function vec3Array(value: unknown, name: string): Vec3[] {
  if (!Array.isArray(value)) throw bad(`${name} must be an array`);
  return value.map((p) => vec3(p, name));
}

function decodeRobotState(o: Obj): RobotState {
  checkKeys(o, ROBOT_STATE_KEYS, "RobotState");
  const nonneg = (v: unknown, name: string) => {
    const x = finite(v, name);
    if (x < 0) throw bad(`${name} cannot be negative`);
    return x;
  };
  return {
    type: "robot_state",
    t: stamp(finite(o.t, "t")),
    q_right: floatArray(o.q_right, "q_right"),
    q_left: floatArray(o.q_left, "q_left"),
    base_pos: vec3(o.base_pos, "base_pos"),
    base_heading: finite(o.base_heading, "base_heading"),
    gripper_aperture: finite(o.gripper_aperture, "gripper_aperture"),
    grasp_force: nonneg(o.grasp_force, "grasp_force"),
    left_ee_force: nonneg(o.left_ee_force, "left_ee_force"),
    right_active: bool(o.right_active, "right_active"),
    left_active: bool(o.left_active, "left_active"),
    control_point: str(o.control_point, "control_point", CONTROL_POINTS),
    force_right: vec3(o.force_right, "force_right"),
    force_left: vec3(o.force_left, "force_left"),
    right_points: vec3Array(o.right_points, "right_points"),
    left_points: vec3Array(o.left_points, "left_points"),
    bottle_pos: vec3(o.bottle_pos, "bottle_pos"),
    mission: decodeMissionBlock(o.mission),
  };
}

function decodeMissionEvent(o: Obj): MissionEvent {
  checkKeys(o, ["t", "kind"], "MissionEvent");
  const kind = str(o.kind, "kind");
  if (!kind) throw bad("kind must be non-empty");
  return { type: "mission_event", t: stamp(finite(o.t, "t")), kind };
}

function decodeHandshake(o: Obj): Handshake {
  checkKeys(o, ["version", "role"], "Handshake");
  return {
    type: "handshake",
    version: int(o.version, "version"),
    role: str(o.role, "role", ROLES),
  };
}

function decodeHandshakeReply(o: Obj): HandshakeReply {
  checkKeys(o, ["accepted", "version", "reason"], "HandshakeReply");
  return {
    type: "handshake_reply",
    accepted: bool(o.accepted, "accepted"),
    version: int(o.version, "version"),
    reason: str(o.reason, "reason"),
  };
}

function decodeSceneObject(value: unknown): SceneObject {
  const o = checkKeys(
    value, ["id", "role", "shape", "size", "position", "heading"], "scene object",
  );
  const id = str(o.id, "object id");
  if (!id) throw bad("object id must be non-empty");
  if (!Array.isArray(o.size) || o.size.length === 0) {
    throw bad("size must be a non-empty array");
  }
  return {
    id,
    role: str(o.role, "object role"),
    shape: str(o.shape, "shape", ["sphere", "box"] as const),
    size: o.size.map((v) => finite(v, "size")),
    position: vec3(o.position, "position"),
    heading: finite(o.heading, "heading"),
  };
}

function decodeSceneInfo(o: Obj): SceneInfo {
  checkKeys(
    o, ["condition", "objects", "footprint_radius", "ee_radius", "f_max"], "SceneInfo",
  );
  if (!Array.isArray(o.objects)) throw bad("objects must be an array");
  const positive = (v: unknown, name: string) => {
    const x = finite(v, name);
    if (x <= 0) throw bad(`${name} must be positive`);
    return x;
  };
  return {
    type: "scene_info",
    condition: str(o.condition, "condition", ["A", "B", "C"] as const),
    objects: o.objects.map(decodeSceneObject),
    footprint_radius: positive(o.footprint_radius, "footprint_radius"),
    ee_radius: positive(o.ee_radius, "ee_radius"),
    f_max: positive(o.f_max, "f_max"),
  };
}

const DECODERS: Record<string, (o: Obj) => WireFrame> = {
  operator_input: decodeOperatorInput,
  external_command: decodeExternalCommand,
  feedback_command: decodeFeedbackCommand,
  robot_state: decodeRobotState,
  mission_event: decodeMissionEvent,
  handshake: decodeHandshake,
  handshake_reply: decodeHandshakeReply,
  scene_info: decodeSceneInfo,
};

export function decodeFrame(raw: string): WireFrame {
  const text = raw.trim();
  if (!text) throw malformed("empty frame");
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch (err) {
    throw malformed(`frame is not valid JSON: ${String(err)}`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw malformed("frame must be a JSON object");
  }
  const obj = { ...(parsed as Obj) };
  const tag = obj.type;
  delete obj.type;
  if (tag === undefined) throw malformed("frame has no type tag");
  const decoder = typeof tag === "string" ? DECODERS[tag] : undefined;
  if (!decoder) {
    throw new ProtocolError("unknown_type", `unknown frame type ${String(tag)}`);
  }
  return decoder(obj);
}

// -- canonical encoding -------------------------------------------------------

// Python's repr() for binary64: fixed notation while the leading digit's
// decimal exponent is in [-4, 16), otherwise scientific with a signed,
// zero-padded (>= 2 digit) exponent; integral values keep a trailing ".0".
export function pyFloatRepr(v: number): string {
  if (!Number.isFinite(v)) throw new RangeError("non-finite float");
  if (v === 0) return Object.is(v, -0) ? "-0.0" : "0.0";

  const sign = v < 0 ? "-" : "";
  let s = String(Math.abs(v));
  let exp = 0;
  const eIdx = s.indexOf("e");
  if (eIdx >= 0) {
    exp = Number(s.slice(eIdx + 1));
    s = s.slice(0, eIdx);
  }
  const dot = s.indexOf(".");
  const intPart = dot >= 0 ? s.slice(0, dot) : s;
  const fracPart = dot >= 0 ? s.slice(dot + 1) : "";
  let digits = intPart + fracPart;
  const lastExp = exp - fracPart.length; // exponent of the final digit
  const lead = digits.length - digits.replace(/^0+/, "").length;
  digits = digits.slice(lead);
  const firstExp = lastExp + digits.length - 1; // exponent of the leading digit

  if (firstExp >= -4 && firstExp < 16) {
    const point = firstExp + 1;
    if (point <= 0) return `${sign}0.${"0".repeat(-point)}${digits}`;
    if (point >= digits.length) {
      return `${sign}${digits}${"0".repeat(point - digits.length)}.0`;
    }
    return `${sign}${digits.slice(0, point)}.${digits.slice(point)}`;
  }
  const mantDigits = digits.replace(/0+$/, "") || "0";
  const mantissa =
    mantDigits.length > 1 ? `${mantDigits[0]}.${mantDigits.slice(1)}` : mantDigits;
  const expSign = firstExp < 0 ? "-" : "+";
  const expDigits = String(Math.abs(firstExp)).padStart(2, "0");
  return `${sign}${mantissa}e${expSign}${expDigits}`;
}

// Python json.dumps escapes non-ASCII; JSON.stringify does not.
function pyStr(s: string): string {
  return JSON.stringify(s).replace(
    /[-￿]/g,
    (c) => `\\u${c.charCodeAt(0).toString(16).padStart(4, "0")}`,
  );
}

type Rendered = string;
const f = pyFloatRepr;
const i = (v: number): Rendered => String(v);
const b = (v: boolean): Rendered => (v ? "true" : "false");
const fv = (v: readonly number[]): Rendered => `[${v.map(f).join(",")}]`;
const fvv = (v: readonly Vec3[]): Rendered => `[${v.map(fv).join(",")}]`;
const fOrNull = (v: number | null): Rendered => (v === null ? "null" : f(v));

function obj(pairs: [string, Rendered][]): Rendered {
  pairs.sort((a, b2) => (a[0] < b2[0] ? -1 : 1));
  return `{${pairs.map(([k, v]) => `${pyStr(k)}:${v}`).join(",")}}`;
}

function encodeButton(p: ButtonPress): Rendered {
  return obj([
    ["side", pyStr(p.side)],
    ["button", i(p.button)],
    ["pressed", b(p.pressed)],
  ]);
}

function encodeMissionBlock(m: MissionBlock): Rendered {
  return obj([
    ["phase", pyStr(m.phase)],
    ["failures", `[${m.failures.map(pyStr).join(",")}]`],
    ["t_start", fOrNull(m.t_start)],
    ["t_end", fOrNull(m.t_end)],
  ]);
}

function encodeSceneObject(o: SceneObject): Rendered {
  return obj([
    ["id", pyStr(o.id)],
    ["role", pyStr(o.role)],
    ["shape", pyStr(o.shape)],
    ["size", fv(o.size)],
    ["position", fv(o.position)],
    ["heading", f(o.heading)],
  ]);
}

export function encodeFrame(msg: WireFrame): string {
  const tag: [string, Rendered] = ["type", pyStr(msg.type)];
  switch (msg.type) {
    case "operator_input":
      return obj([
        tag,
        ["t", f(msg.t)],
        ["right_wrist", fv(msg.right_wrist)],
        ["left_wrist", fv(msg.left_wrist)],
        ["buttons", `[${msg.buttons.map(encodeButton).join(",")}]`],
      ]);
    case "external_command":
      return obj([tag, ["t", f(msg.t)], ["token", pyStr(msg.token)]]);
    case "feedback_command":
      return obj([
        tag,
        ["t", f(msg.t)],
        ["device", pyStr(msg.device)],
        ["level", f(msg.level)],
        ["pulses", i(msg.pulses)],
      ]);
    case "robot_state":
      return obj([
        tag,
        ["t", f(msg.t)],
        ["q_right", fv(msg.q_right)],
        ["q_left", fv(msg.q_left)],
        ["base_pos", fv(msg.base_pos)],
        ["base_heading", f(msg.base_heading)],
        ["gripper_aperture", f(msg.gripper_aperture)],
        ["grasp_force", f(msg.grasp_force)],
        ["left_ee_force", f(msg.left_ee_force)],
        ["right_active", b(msg.right_active)],
        ["left_active", b(msg.left_active)],
        ["control_point", pyStr(msg.control_point)],
        ["force_right", fv(msg.force_right)],
        ["force_left", fv(msg.force_left)],
        ["right_points", fvv(msg.right_points)],
        ["left_points", fvv(msg.left_points)],
        ["bottle_pos", fv(msg.bottle_pos)],
        ["mission", encodeMissionBlock(msg.mission)],
      ]);
    case "mission_event":
      return obj([tag, ["t", f(msg.t)], ["kind", pyStr(msg.kind)]]);
    case "handshake":
      return obj([tag, ["version", i(msg.version)], ["role", pyStr(msg.role)]]);
    case "handshake_reply":
      return obj([
        tag,
        ["accepted", b(msg.accepted)],
        ["version", i(msg.version)],
        ["reason", pyStr(msg.reason)],
      ]);
    case "scene_info":
      return obj([
        tag,
        ["condition", pyStr(msg.condition)],
        ["objects", `[${msg.objects.map(encodeSceneObject).join(",")}]`],
        ["footprint_radius", f(msg.footprint_radius)],
        ["ee_radius", f(msg.ee_radius)],
        ["f_max", f(msg.f_max)],
      ]);
  }
}

export function operatorInput(
  t: number,
  rightWrist: Vec3,
  leftWrist: Vec3,
  buttons: ButtonPress[] = [],
): OperatorInput {
  return {
    type: "operator_input",
    t: stamp(t),
    right_wrist: rightWrist,
    left_wrist: leftWrist,
    buttons,
  };
}

export function handshake(role: Role): Handshake {
  return { type: "handshake", version: PROTOCOL_VERSION, role };
}
