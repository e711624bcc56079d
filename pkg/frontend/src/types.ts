// Wire types mirrored from the service schemas (docs/schemas.md).

export const FRAME_SCHEMA_VERSION = 1;
export const MAP_SCHEMA_VERSION = 1;

export type ColorClass = "green" | "yellow" | "red";

// fixed swatches so renders are snapshot-stable
export const SWATCH: Record<ColorClass, string> = {
  green: "#2ecc40",
  yellow: "#ffdc00",
  red: "#ff4136",
};

export interface EgoState {
  x: number;
  y: number;
  heading: number;
  v: number;
  raw?: { x: number; y: number };
}

export interface OtherVehicle {
  id: string;
  class: string;
  x: number;
  y: number;
  heading: number;
  v: number;
  critical: boolean;
  paths?: number[][][];
}

export interface HazardZone {
  start: number;
  end: number;
  kind: string;
  color: ColorClass;
}

export interface HazardRoute {
  length: number;
  ego_marker: number;
  zones: HazardZone[];
}

export interface VelocityScale {
  v0: number;
  v_tar: number;
  v_max: number;
  color: ColorClass;
  source: string;
}

export interface Popup {
  cause: string;
  value: number | null;
  unit: string;
  x: number;
  y: number;
}

export interface ColoredEvent {
  kind: "lane_band" | "encounter_marker";
  color: ColorClass;
  points?: number[][];
  x?: number;
  y?: number;
}

export interface Frame {
  schema_version: number;
  t: number;
  slim: boolean;
  ego: EgoState;
  others: OtherVehicle[];
  chunks: string[];
  hazard_route: HazardRoute;
  velocity_scale: VelocityScale;
  popups: Popup[];
  events: ColoredEvent[];
  flags: Record<string, boolean>;
}

export interface MapNode {
  id: string;
  kind: string;
  points?: number[][];
  x?: number;
  y?: number;
  attrs?: Record<string, unknown>;
}

export interface MapDocument {
  schema_version: number;
  origin?: { lat: number; lon: number };
  nodes: MapNode[];
  chunks: Record<string, string[]>;
}

export const POPUP_GLYPH: Record<string, string> = {
  collision: "⚠", // warning sign
  left_curve: "↰",
  right_curve: "↱",
  crosswalk: "⛗",
  stop_line: "▬",
  traffic_light: "⛑",
};
