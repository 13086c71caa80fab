/**
 * Operator console bootstrap: two canvases (top-down intersection, frontal
 * robot), gesture buttons + keyboard, mode toggle, warning banners, and a
 * queue-history sparkline.  Rendering always consumes the latest snapshot;
 * nothing is simulated client-side.
 */

import { ServerClient } from "./client.js";
import { IntersectionView, Panel } from "./geometry.js";
import { commandForKey, KEY_BINDINGS } from "./keymap.js";
import { ApproachName, APPROACHES, ModeName, SignalName } from "./protocol.js";
import { renderIntersection, renderRobot } from "./render.js";
import { ViewModel } from "./viewmodel.js";

const params = new URLSearchParams(window.location.search);
const wsUrl = params.get("server") ?? "ws://127.0.0.1:8765";

const vm = new ViewModel();
const client = new ServerClient(wsUrl, {
  onMessage: (msg) => vm.ingest(msg),
  onStatus: (up) => vm.setConnected(up),
});

function canvasCtx(id: string): [CanvasRenderingContext2D, Panel] {
  const canvas = document.getElementById(id) as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error(`no 2d context for #${id}`);
  return [ctx, { width: canvas.width, height: canvas.height }];
}

const [mapCtx, mapPanel] = canvasCtx("intersection");
const [robotCtx, robotPanel] = canvasCtx("robot");
const [sparkCtx, sparkPanel] = canvasCtx("sparkline");
const bannerBox = document.getElementById("banners") as HTMLDivElement;
const signalButtons = document.getElementById("signals") as HTMLDivElement;
const modeSelect = document.getElementById("mode") as HTMLSelectElement;
const statusLine = document.getElementById("status") as HTMLDivElement;

function view(): IntersectionView {
  const sc = vm.scenario;
  return {
    panel: mapPanel,
    approachLength: (sc?.approach_length as number) ?? 150,
    boxLength: (sc?.box_length as number) ?? 20,
    vehicleLength: (sc?.vehicle_length as number) ?? 4.5,
    laneWidth: 3.5,
  };
}

function dispatch(signal: SignalName): void {
  const gate = vm.canDispatch();
  if (!gate.ok) {
    vm.pushBanner(`${signal} suppressed: ${gate.reason}`, "warning");
    return;
  }
  if (!client.send({ type: "command", signal })) {
    vm.pushBanner(`${signal} suppressed: socket not open`, "warning");
  }
}

for (const [key, signal] of Object.entries(KEY_BINDINGS)) {
  const button = document.createElement("button");
  button.textContent = `${signal.replace(/_/g, " ")} (${key})`;
  button.dataset.signal = signal;
  button.onclick = () => dispatch(signal);
  signalButtons.appendChild(button);
}

window.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLSelectElement) return;
  const cmd = commandForKey(event.key);
  if (cmd) dispatch(cmd.signal);
});

modeSelect.onchange = () => {
  client.send({ type: "set_mode", mode: modeSelect.value as ModeName });
};

const SPARK_COLORS: Record<ApproachName, string> = {
  front: "#63b3ed",
  behind: "#b794f4",
  left: "#68d391",
  right: "#f6ad55",
};

function renderSparkline(panel: Panel): void {
  sparkCtx.fillStyle = "#171923";
  sparkCtx.fillRect(0, 0, panel.width, panel.height);
  const clock = vm.snapshot?.clock ?? 0;
  sparkCtx.lineWidth = 1.5;
  for (const a of APPROACHES) {
    const samples = vm.queues[a].window();
    if (samples.length < 2) continue;
    sparkCtx.strokeStyle = SPARK_COLORS[a];
    sparkCtx.beginPath();
    for (let i = 0; i < samples.length; i += 1) {
      const s = samples[i]!;
      const x = panel.width - ((clock - s.clock) / 60) * panel.width;
      const y = panel.height - 4 - Math.min(s.count, 20) * (panel.height / 22);
      if (i === 0) sparkCtx.moveTo(x, y);
      else sparkCtx.lineTo(x, y);
    }
    sparkCtx.stroke();
  }
}

function renderBanners(): void {
  bannerBox.innerHTML = "";
  if (vm.isStale()) {
    const div = document.createElement("div");
    div.className = "banner error";
    div.textContent = "disconnected: no fresh state from the server";
    bannerBox.appendChild(div);
  }
  for (const banner of vm.banners.slice(-4).reverse()) {
    const div = document.createElement("div");
    div.className = `banner ${banner.kind}`;
    div.textContent = banner.text;
    bannerBox.appendChild(div);
  }
}

function frame(): void {
  const snap = vm.snapshot;
  if (snap) {
    renderIntersection(mapCtx, snap, view());
    renderRobot(robotCtx, snap, robotPanel);
    renderSparkline(sparkPanel);
    const woz = snap.mode === "wizard_of_oz";
    signalButtons.querySelectorAll("button").forEach((b) => {
      b.disabled = !woz;
      if (!woz) b.title = "gesture buttons are disabled in autonomous mode";
      else b.removeAttribute("title");
    });
    if (modeSelect.value !== snap.mode) modeSelect.value = snap.mode;
    statusLine.textContent =
      `mode ${snap.mode} · queues F${snap.queues.front} B${snap.queues.behind}` +
      ` L${snap.queues.left} R${snap.queues.right}`;
  }
  renderBanners();
  requestAnimationFrame(frame);
}

client.connect();
requestAnimationFrame(frame);
