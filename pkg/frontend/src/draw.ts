// Pure canvas drawing over a minimal 2D-context interface, so tests can
// record draw calls without a DOM.

import {
  ColoredEvent,
  Frame,
  MapDocument,
  Popup,
  POPUP_GLYPH,
  SWATCH,
} from "./types.js";
import { ViewState, worldToScreen } from "./view.js";

/** Subset of CanvasRenderingContext2D the renderer uses. */
export interface Draw2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  textAlign: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  closePath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

const LANE_COLOR = "#3d4852";
const JUNCTION_COLOR = "#2f3740";
const BUILDING_COLOR = "#23292e";
const EGO_COLOR = "#2ecc40";
const TRACE_COLOR = "#ff4136";
const OTHER_COLOR = "#ffdc00";
const CRITICAL_COLOR = "#2e9bff";

function strokePolyline(
  ctx: Draw2D,
  view: ViewState,
  w: number,
  h: number,
  points: number[][],
): void {
  ctx.beginPath();
  points.forEach(([x, y], i) => {
    const [sx, sy] = worldToScreen(view, w, h, x, y);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
}

export function drawMap(ctx: Draw2D, map: MapDocument, view: ViewState, w: number, h: number): void {
  for (const node of map.nodes) {
    if (!node.points) continue;
    if (node.kind === "building") {
      ctx.strokeStyle = BUILDING_COLOR;
      ctx.lineWidth = 1;
    } else if (node.kind === "lane_junction") {
      ctx.strokeStyle = JUNCTION_COLOR;
      ctx.lineWidth = ((node.attrs?.lane_width as number) ?? 3.5) / view.zoom * 0.5;
    } else if (node.kind === "lane_segment") {
      ctx.strokeStyle = LANE_COLOR;
      ctx.lineWidth = ((node.attrs?.lane_width as number) ?? 3.5) / view.zoom * 0.6;
    } else {
      continue;
    }
    strokePolyline(ctx, view, w, h, node.points);
  }
  for (const node of map.nodes) {
    if (node.points || node.x === undefined || node.y === undefined) continue;
    const [sx, sy] = worldToScreen(view, w, h, node.x, node.y);
    if (node.kind === "crosswalk") ctx.fillStyle = "#9fb7c9";
    else if (node.kind === "traffic_light") ctx.fillStyle = "#c9a94e";
    else if (node.kind === "stop_line") ctx.fillStyle = "#c96a5a";
    else continue;
    ctx.fillRect(sx - 3, sy - 3, 6, 6);
  }
}

function drawEvents(ctx: Draw2D, events: ColoredEvent[], view: ViewState, w: number, h: number): void {
  for (const event of events) {
    if (event.kind === "lane_band" && event.points) {
      ctx.strokeStyle = SWATCH[event.color];
      ctx.lineWidth = 3.0 / view.zoom * 0.6;
      ctx.globalAlpha = 0.55;
      strokePolyline(ctx, view, w, h, event.points);
      ctx.globalAlpha = 1.0;
    } else if (event.kind === "encounter_marker" && event.x !== undefined && event.y !== undefined) {
      const [sx, sy] = worldToScreen(view, w, h, event.x, event.y);
      const r = Math.max(4, 1.5 / view.zoom);
      ctx.fillStyle = SWATCH[event.color];
      ctx.fillRect(sx - r / 2, sy - r / 2, r, r);
    }
  }
}

function drawVehicleArrow(
  ctx: Draw2D,
  view: ViewState,
  w: number,
  h: number,
  x: number,
  y: number,
  heading: number,
  color: string,
  size: number,
): void {
  const [sx, sy] = worldToScreen(view, w, h, x, y);
  const px = size / view.zoom;
  const tipX = sx + Math.cos(heading) * px;
  const tipY = sy - Math.sin(heading) * px;
  const leftX = sx + Math.cos(heading + 2.5) * px * 0.7;
  const leftY = sy - Math.sin(heading + 2.5) * px * 0.7;
  const rightX = sx + Math.cos(heading - 2.5) * px * 0.7;
  const rightY = sy - Math.sin(heading - 2.5) * px * 0.7;
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.moveTo(tipX, tipY);
  ctx.lineTo(leftX, leftY);
  ctx.lineTo(rightX, rightY);
  ctx.closePath();
  ctx.fill();
}

function drawPopups(ctx: Draw2D, popups: Popup[], slim: boolean, view: ViewState, w: number, h: number): void {
  ctx.font = "14px sans-serif";
  ctx.textAlign = "center";
  for (const popup of popups) {
    const [sx, sy] = worldToScreen(view, w, h, popup.x, popup.y);
    ctx.fillStyle = "#ffffff";
    ctx.strokeStyle = "#ff4136";
    ctx.lineWidth = 2;
    ctx.strokeRect(sx - 14, sy - 38, 28, 28);
    ctx.fillRect(sx - 13, sy - 37, 26, 26);
    ctx.fillStyle = "#111111";
    ctx.fillText(POPUP_GLYPH[popup.cause] ?? "?", sx, sy - 18);
    if (!slim && popup.value !== null) {
      ctx.fillStyle = "#ffffff";
      ctx.fillText(`${popup.value.toFixed(1)} ${popup.unit}`, sx, sy - 44);
    }
  }
}

function drawHud(ctx: Draw2D, frame: Frame, w: number, h: number): void {
  // hazard route: vertical bar on the left, ego at the bottom
  const barX = 18;
  const barTop = h * 0.15;
  const barLen = h * 0.6;
  ctx.fillStyle = "#2b333b";
  ctx.fillRect(barX - 4, barTop, 8, barLen);
  for (const zone of frame.hazard_route.zones) {
    const a = Math.min(zone.start / frame.hazard_route.length, 1);
    const b = Math.min(zone.end / frame.hazard_route.length, 1);
    ctx.fillStyle = SWATCH[zone.color];
    ctx.fillRect(barX - 4, barTop + barLen * (1 - b), 8, barLen * (b - a));
  }
  ctx.fillStyle = EGO_COLOR;
  ctx.fillRect(barX - 6, barTop + barLen - 2, 12, 4);

  // velocity scale: horizontal bar at the bottom
  const scale = frame.velocity_scale;
  const sw = w * 0.4;
  const sx0 = (w - sw) / 2;
  const sy0 = h - 34;
  ctx.fillStyle = "#2b333b";
  ctx.fillRect(sx0, sy0, sw, 10);
  ctx.fillStyle = SWATCH[scale.color];
  const frac = Math.max(0, Math.min(scale.v0 / scale.v_max, 1));
  ctx.fillRect(sx0, sy0, sw * frac, 10);
  // target marker
  const tfrac = Math.max(0, Math.min(scale.v_tar / scale.v_max, 1));
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(sx0 + sw * tfrac - 1, sy0 - 4, 2, 18);
  if (!frame.slim) {
    ctx.font = "12px sans-serif";
    ctx.textAlign = "center";
    ctx.fillStyle = "#ffffff";
    ctx.fillText(
      `v ${scale.v0.toFixed(1)} / target ${scale.v_tar.toFixed(1)} m/s (${scale.source})`,
      w / 2,
      sy0 + 24,
    );
  }
}

/** Draw one complete scene; the only inputs are frame + map + view. */
export function renderFrame(
  ctx: Draw2D,
  frame: Frame,
  map: MapDocument,
  view: ViewState,
  w: number,
  h: number,
): void {
  ctx.fillStyle = "#14181c";
  ctx.fillRect(0, 0, w, h);
  drawMap(ctx, map, view, w, h);
  drawEvents(ctx, frame.events, view, w, h);

  if (view.trace.length > 1) {
    ctx.strokeStyle = TRACE_COLOR;
    ctx.lineWidth = 2;
    strokePolyline(ctx, view, w, h, view.trace);
  }
  for (const other of frame.others) {
    const color = other.critical ? CRITICAL_COLOR : OTHER_COLOR;
    if (other.critical && view.showPaths && other.paths) {
      ctx.strokeStyle = CRITICAL_COLOR;
      ctx.lineWidth = 1.5;
      ctx.globalAlpha = 0.7;
      for (const path of other.paths) strokePolyline(ctx, view, w, h, path);
      ctx.globalAlpha = 1.0;
    }
    if (other.class === "pedestrian") {
      const [sx, sy] = worldToScreen(view, w, h, other.x, other.y);
      ctx.fillStyle = "#ffffff";
      ctx.beginPath();
      ctx.arc(sx, sy, 3, 0, Math.PI * 2);
      ctx.fill();
    } else {
      drawVehicleArrow(ctx, view, w, h, other.x, other.y, other.heading, color, 2.2);
    }
  }
  drawVehicleArrow(ctx, view, w, h, frame.ego.x, frame.ego.y, frame.ego.heading, EGO_COLOR, 2.6);
  if (view.showPopups) drawPopups(ctx, frame.popups, frame.slim, view, w, h);
  drawHud(ctx, frame, w, h);
}
