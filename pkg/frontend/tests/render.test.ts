// Golden-frame rendering: the three demo scenario frames must produce
// the paper-style warning elements, driven purely by frame fields.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { renderFrame } from "../src/draw.js";
import { Frame, MapDocument, SWATCH } from "../src/types.js";
import { applyFrame, initialView, worldToScreen } from "../src/view.js";
import { RecordingContext } from "./recording.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

function render(frameName: string, mapName: string, mutate?: (f: Frame) => void) {
  const frame = fixture<Frame>(frameName);
  const map = fixture<MapDocument>(mapName);
  mutate?.(frame);
  const view = initialView();
  expect(applyFrame(view, frame)).toBe(true);
  const ctx = new RecordingContext();
  renderFrame(ctx, frame, map, view, 800, 600);
  return { ctx, frame, map, view };
}

describe("collision frame (crossing scenario, 3 s before the encounter)", () => {
  it("shows the collision popup with its time value", () => {
    const { ctx } = render("collision.frame.json", "collision.map.json");
    expect(ctx.texts()).toContain("3.0 s");
  });

  it("marks the closest-encounter point as a red square", () => {
    const { ctx, frame, view } = render("collision.frame.json", "collision.map.json");
    const marker = frame.events.find((e) => e.kind === "encounter_marker")!;
    const [sx, sy] = worldToScreen(view, 800, 600, marker.x!, marker.y!);
    const rects = ctx.opsWith("fillRect", { fill: SWATCH.red });
    const hit = rects.some(
      (o) => Math.abs((o.args[0] as number) - sx) < 6 && Math.abs((o.args[1] as number) - sy) < 6,
    );
    expect(hit).toBe(true);
  });

  it("draws the critical vehicle's hypothesis paths in blue", () => {
    const { ctx, frame } = render("collision.frame.json", "collision.map.json");
    expect(frame.others.some((o) => o.critical && o.paths?.length)).toBe(true);
    expect(ctx.opsWith("stroke", { stroke: "#2e9bff" }).length).toBeGreaterThan(0);
  });

  it("snapshot of the draw command stream", () => {
    const { ctx } = render("collision.frame.json", "collision.map.json");
    expect(ctx.ops.slice(0, 40)).toMatchSnapshot();
    expect(ctx.ops.length).toMatchSnapshot();
  });
});

describe("turn frame (sharp-turn scenario, approach at 8 m/s)", () => {
  it("renders the velocity scale in red", () => {
    const { ctx, frame } = render("turn.frame.json", "turn.map.json");
    expect(frame.velocity_scale.color).toBe("red");
    expect(ctx.opsWith("fillRect", { fill: SWATCH.red }).length).toBeGreaterThan(0);
  });

  it("shows the right-curve popup with the distance", () => {
    const { ctx } = render("turn.frame.json", "turn.map.json");
    expect(ctx.texts()).toContain("55.0 m");
    expect(ctx.texts()).toContain("↱");
  });
});

describe("crosswalk frame (occupied crosswalk at 90 m)", () => {
  it("renders a yellow scale and the crosswalk popup", () => {
    const { ctx, frame } = render("crosswalk.frame.json", "crosswalk.map.json");
    expect(frame.velocity_scale.color).toBe("yellow");
    expect(ctx.opsWith("fillRect", { fill: SWATCH.yellow }).length).toBeGreaterThan(0);
    expect(ctx.texts()).toContain("90.0 m");
  });

  it("colors the ego lane band with the scale color", () => {
    const { ctx, frame } = render("crosswalk.frame.json", "crosswalk.map.json");
    const band = frame.events.find((e) => e.kind === "lane_band")!;
    expect(band.color).toBe(frame.velocity_scale.color);
    expect(ctx.opsWith("stroke", { stroke: SWATCH.yellow }).length).toBeGreaterThan(0);
  });
});

describe("slim mode", () => {
  it("keeps symbols but hides numeric values", () => {
    const { ctx } = render("crosswalk.frame.json", "crosswalk.map.json", (f) => {
      f.slim = true;
      for (const p of f.popups) p.value = null;
    });
    expect(ctx.texts()).not.toContain("90.0 m");
    expect(ctx.texts()).toContain("⛗"); // crosswalk glyph stays
  });
});

describe("schema guard", () => {
  it("halts on a version mismatch with a banner", () => {
    const frame = fixture<Frame>("collision.frame.json");
    frame.schema_version = 99;
    const view = initialView();
    expect(applyFrame(view, frame)).toBe(false);
    expect(view.status).toContain("schema mismatch");
    expect(view.frame).toBeNull();
  });
});

describe("pure view", () => {
  it("renders every number it shows from frame fields only", () => {
    const { ctx, frame } = render("collision.frame.json", "collision.map.json");
    const numericTexts = ctx.texts().filter((t) => /\d/.test(t));
    const allowed = new Set<string>();
    for (const p of frame.popups) {
      if (p.value !== null) allowed.add(`${p.value.toFixed(1)} ${p.unit}`);
    }
    allowed.add(
      `v ${frame.velocity_scale.v0.toFixed(1)} / target ${frame.velocity_scale.v_tar.toFixed(1)} m/s (${frame.velocity_scale.source})`,
    );
    for (const text of numericTexts) {
      expect(allowed.has(text), `rendered number not from frame: ${text}`).toBe(true);
    }
  });
});
