// Console entry point: wires the WebSocket link, the two rope-handle
// pads, the keyboard, and the render loop together. All protocol and
// state logic lives in the imported modules so it can run headless under
// the test runner; this file is the only one that touches the DOM.

import { ButtonQueue, KEY_BINDINGS, keyToButton } from "./input.js";
import * as pads from "./pads.js";
import {
  decodeFrame,
  DEVICES,
  encodeFrame,
  handshake,
  operatorInput,
  ProtocolError,
  type DeviceKey,
} from "./protocol.js";
import {
  applyFrame,
  feedbackEnabled,
  isFlashing,
  markClosed,
  newConsoleState,
  pruneFlashes,
} from "./state.js";
import { drawScene } from "./render.js";

const SEND_PERIOD_MS = 30; // > 30 Hz operator input
const RECONNECT_DELAY_MS = 1500;

const DEVICE_LABEL: Record<DeviceKey, string> = {
  right_forearm: "R forearm",
  right_finger: "R finger",
  left_forearm: "L forearm",
  left_finger: "L finger",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const sceneCanvas = el<HTMLCanvasElement>("scene");
const statusEl = el<HTMLSpanElement>("status");
const conditionEl = el<HTMLSpanElement>("condition");
const feedbackPanel = el<HTMLDivElement>("feedback");
const eventLog = el<HTMLUListElement>("events");
const helpButton = el<HTMLButtonElement>("help-toggle");
const helpOverlay = el<HTMLDivElement>("help");

const state = newConsoleState();
const rightPad = pads.newPad();
const leftPad = pads.newPad();
const queue = new ButtonQueue();

// -- feedback panel -----------------------------------------------------------

interface BarRefs {
  fill: HTMLDivElement;
  card: HTMLDivElement;
}

const bars = {} as Record<DeviceKey, BarRefs>;
for (const device of DEVICES) {
  const card = document.createElement("div");
  card.className = "bar-card";
  const label = document.createElement("span");
  label.textContent = DEVICE_LABEL[device];
  const track = document.createElement("div");
  track.className = "bar-track";
  const fill = document.createElement("div");
  fill.className = "bar-fill";
  track.appendChild(fill);
  card.append(label, track);
  feedbackPanel.appendChild(card);
  bars[device] = { fill, card };
}
const feedbackNote = document.createElement("p");
feedbackNote.className = "feedback-note";
feedbackPanel.appendChild(feedbackNote);

// -- pads ---------------------------------------------------------------------

function bindPad(canvas: HTMLCanvasElement, pad: pads.PadState): void {
  const radius = () => Math.min(canvas.clientWidth, canvas.clientHeight) / 2 - 8;

  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    pads.grab(pad);
    movePad(ev);
  });
  const movePad = (ev: PointerEvent) => {
    if (!pad.held) return;
    const rect = canvas.getBoundingClientRect();
    const dx = ev.clientX - (rect.left + rect.width / 2);
    const dy = ev.clientY - (rect.top + rect.height / 2);
    pads.drag(pad, dx, -dy, radius()); // screen y grows down
  };
  canvas.addEventListener("pointermove", movePad);
  const done = () => pads.release(pad);
  canvas.addEventListener("pointerup", done);
  canvas.addEventListener("pointercancel", done);
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    pads.scrollZ(pad, ev.deltaY < 0 ? 1 : -1);
  }, { passive: false });
}

function drawPad(canvas: HTMLCanvasElement, pad: pads.PadState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  const r = Math.min(w, h) / 2 - 8;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#3a4250";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(w / 2, h / 2, r, 0, Math.PI * 2);
  ctx.stroke();
  const hx = w / 2 + pad.x * r;
  const hy = h / 2 - pad.y * r;
  ctx.strokeStyle = "#55637a";
  ctx.beginPath();
  ctx.moveTo(w / 2, h / 2);
  ctx.lineTo(hx, hy);
  ctx.stroke();
  ctx.fillStyle = pad.held ? "#d9824f" : "#8091ab";
  ctx.beginPath();
  ctx.arc(hx, hy, 10, 0, Math.PI * 2);
  ctx.fill();
  if (pad.z !== 0) {
    ctx.fillStyle = "#8091ab";
    ctx.font = "11px system-ui, sans-serif";
    ctx.fillText(`z ${(pad.z > 0 ? "+" : "")}${pad.z.toFixed(1)}`, 8, 14);
  }
}

const rightPadCanvas = el<HTMLCanvasElement>("pad-right");
const leftPadCanvas = el<HTMLCanvasElement>("pad-left");
bindPad(rightPadCanvas, rightPad);
bindPad(leftPadCanvas, leftPad);

// -- keyboard -----------------------------------------------------------------

document.addEventListener("keydown", (ev) => {
  if (ev.repeat) return;
  if (ev.key === "?") {
    helpOverlay.classList.toggle("hidden");
    return;
  }
  queue.push(keyToButton(ev.key, true));
});
document.addEventListener("keyup", (ev) => {
  queue.push(keyToButton(ev.key, false));
});

const helpList = el<HTMLTableSectionElement>("help-rows");
for (const [key, binding] of Object.entries(KEY_BINDINGS)) {
  const row = document.createElement("tr");
  const keyCell = document.createElement("td");
  keyCell.textContent = key.toUpperCase();
  const buttonCell = document.createElement("td");
  buttonCell.textContent = `${binding.side} button ${binding.button}`;
  const doesCell = document.createElement("td");
  doesCell.textContent = binding.label;
  row.append(keyCell, buttonCell, doesCell);
  helpList.appendChild(row);
}
helpButton.addEventListener("click", () => helpOverlay.classList.toggle("hidden"));

// -- network ------------------------------------------------------------------

let ws: WebSocket | null = null;
let epoch = performance.now();

function nowS(): number {
  return (performance.now() - epoch) / 1000;
}

function connect(): void {
  const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
  state.connection = "connecting";
  ws = new WebSocket(url);
  ws.onopen = () => {
    epoch = performance.now();
    ws?.send(encodeFrame(handshake("operator")));
  };
  ws.onmessage = (ev) => {
    try {
      applyFrame(state, decodeFrame(String(ev.data)), nowS());
    } catch (err) {
      if (err instanceof ProtocolError) {
        console.warn("dropping bad frame:", err.message);
      } else {
        throw err;
      }
    }
  };
  ws.onclose = () => {
    markClosed(state);
    ws = null;
    if (state.connection !== "rejected") {
      setTimeout(connect, RECONNECT_DELAY_MS);
    }
  };
}

setInterval(() => {
  if (!ws || ws.readyState !== WebSocket.OPEN || state.connection !== "open") {
    return;
  }
  const frame = operatorInput(
    nowS(),
    pads.wristOffset(rightPad),
    pads.wristOffset(leftPad),
    queue.drain(),
  );
  ws.send(encodeFrame(frame));
}, SEND_PERIOD_MS);

// -- render loop --------------------------------------------------------------

function paint(): void {
  const now = nowS();
  pruneFlashes(state, now);

  const rect = sceneCanvas.getBoundingClientRect();
  const dpr = window.devicePixelRatio || 1;
  if (sceneCanvas.width !== Math.round(rect.width * dpr)) {
    sceneCanvas.width = Math.round(rect.width * dpr);
    sceneCanvas.height = Math.round(rect.height * dpr);
  }
  const ctx = sceneCanvas.getContext("2d");
  if (ctx) {
    ctx.setTransform(dpr, 0, 0, dpr, 0, 0);
    drawScene(ctx, state, rect.width, rect.height);
  }

  drawPad(rightPadCanvas, rightPad);
  drawPad(leftPadCanvas, leftPad);

  statusEl.textContent = state.connection;
  statusEl.dataset.state = state.connection;
  conditionEl.textContent = state.condition ? `condition ${state.condition}` : "";

  const enabled = feedbackEnabled(state);
  feedbackNote.textContent = enabled ? "" : "feedback disabled";
  for (const device of DEVICES) {
    const { fill, card } = bars[device];
    fill.style.width = `${(enabled ? state.squeeze[device] : 0) * 100}%`;
    card.classList.toggle("flashing", enabled && isFlashing(state, device, now));
    card.classList.toggle("disabled", !enabled);
  }

  if (state.robot && eventLog.childElementCount !== state.events.length) {
    eventLog.replaceChildren(
      ...state.events.slice(-8).map((e) => {
        const li = document.createElement("li");
        li.textContent = `${e.t.toFixed(2)}s  ${e.kind}`;
        return li;
      }),
    );
  }

  requestAnimationFrame(paint);
}

connect();
requestAnimationFrame(paint);
