// Browser wiring: canvas, keyboard, session buttons, animation loop.

import { ControlLoop } from "./control.js";
import { renderFrame } from "./draw.js";
import { createSession, deleteSession, fetchMap, FrameStream, streamUrl } from "./net.js";
import { Frame, MapDocument } from "./types.js";
import { applyFrame, initialView } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const canvas = el<HTMLCanvasElement>("scene");
  const status = el<HTMLDivElement>("status");
  const scenarioInput = el<HTMLInputElement>("scenario-file");
  const startBtn = el<HTMLButtonElement>("start");
  const stopBtn = el<HTMLButtonElement>("stop");
  const slimToggle = el<HTMLInputElement>("slim");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");

  const view = initialView();
  const base = window.location.origin;
  let map: MapDocument | null = null;
  let stream: FrameStream | null = null;
  let sessionId: string | null = null;
  let control: ControlLoop | null = null;

  const setStatus = (text: string) => {
    status.textContent = text;
  };

  try {
    map = await fetchMap(base);
    setStatus(`map loaded: ${map.nodes.length} nodes — pick a scenario file`);
  } catch (err) {
    setStatus(`map fetch failed: ${err}`);
    return;
  }

  function resize(): void {
    canvas.width = window.innerWidth;
    canvas.height = window.innerHeight - 60;
  }
  window.addEventListener("resize", resize);
  resize();

  function paint(): void {
    if (map && view.frame && !view.status) {
      renderFrame(ctx as never, view.frame, map, view, canvas.width, canvas.height);
    }
    window.requestAnimationFrame(paint);
  }
  window.requestAnimationFrame(paint);

  function onFrame(frame: Frame): void {
    if (!applyFrame(view, frame)) setStatus(view.status);
  }

  async function start(): Promise<void> {
    const file = scenarioInput.files?.[0];
    if (!file) {
      setStatus("choose a scenario JSON first");
      return;
    }
    const scenario = JSON.parse(await file.text());
    delete scenario.map; // the server owns the map
    try {
      const session = await createSession(base, scenario, slimToggle.checked);
      sessionId = session.session_id;
      stream = new FrameStream(streamUrl(base, sessionId), {
        onFrame,
        onStatus: (s) => setStatus(s === "open" ? `session ${session.name} (${session.mode})` : `stream ${s}`),
      });
      if (session.mode === "interactive") {
        control = new ControlLoop(stream);
        control.start();
        setStatus(`driving ${session.name}: hold ↑/W to accelerate, ↓/S/space to brake`);
      }
    } catch (err) {
      setStatus(`session failed: ${err}`);
    }
  }

  async function stop(): Promise<void> {
    control?.stop();
    control = null;
    stream?.close();
    stream = null;
    if (sessionId) await deleteSession(base, sessionId);
    sessionId = null;
    setStatus("session stopped");
  }

  startBtn.addEventListener("click", () => void start());
  stopBtn.addEventListener("click", () => void stop());
  window.addEventListener("keydown", (e) => {
    control?.keyDown(e.key);
    if (["ArrowUp", "ArrowDown", " "].includes(e.key)) e.preventDefault();
  });
  window.addEventListener("keyup", (e) => control?.keyUp(e.key));
  canvas.addEventListener("wheel", (e) => {
    view.zoom = Math.min(2.0, Math.max(0.05, view.zoom * (e.deltaY > 0 ? 1.15 : 0.87)));
    e.preventDefault();
  });
  canvas.addEventListener("pointerdown", () => {
    view.follow = false;
  });
  canvas.addEventListener("dblclick", () => {
    view.follow = true;
  });
}

void boot();
