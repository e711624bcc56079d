// Camera and layer state; every number rendered comes from a frame.

import { Frame, FRAME_SCHEMA_VERSION } from "./types.js";

export interface ViewState {
  centerX: number;
  centerY: number;
  zoom: number; // meters per pixel
  follow: boolean; // camera tracks the ego unless the user panned
  showPaths: boolean;
  showConflicts: boolean;
  showPopups: boolean;
  status: string; // connection / schema banner text, "" when healthy
  frame: Frame | null;
  trace: number[][]; // raw ego points seen so far (the recorded line)
}

export function initialView(): ViewState {
  return {
    centerX: 0,
    centerY: 0,
    zoom: 0.35,
    follow: true,
    showPaths: true,
    showConflicts: true,
    showPopups: true,
    status: "connecting",
    frame: null,
    trace: [],
  };
}

/** Apply an incoming frame; returns false (and sets a banner) on schema mismatch. */
export function applyFrame(view: ViewState, frame: Frame): boolean {
  if (frame.schema_version !== FRAME_SCHEMA_VERSION) {
    view.status = `schema mismatch: got ${frame.schema_version}, expected ${FRAME_SCHEMA_VERSION}`;
    return false;
  }
  view.frame = frame;
  view.status = "";
  const raw = frame.ego.raw ?? { x: frame.ego.x, y: frame.ego.y };
  const last = view.trace[view.trace.length - 1];
  if (!last || Math.hypot(raw.x - last[0], raw.y - last[1]) > 0.05) {
    view.trace.push([raw.x, raw.y]);
    if (view.trace.length > 4096) view.trace.shift();
  }
  if (view.follow) {
    view.centerX = frame.ego.x;
    view.centerY = frame.ego.y;
  }
  return true;
}

export function worldToScreen(
  view: ViewState,
  width: number,
  height: number,
  x: number,
  y: number,
): [number, number] {
  return [
    width / 2 + (x - view.centerX) / view.zoom,
    height / 2 - (y - view.centerY) / view.zoom, // north up
  ];
}
