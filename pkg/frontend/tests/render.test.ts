import { describe, expect, it } from "vitest";

import { buildScene } from "../src/render.js";
import type { Frame } from "../src/protocol.js";
import { STUB_LAYOUT } from "./stub_server.js";

const GOLDEN_FRAME: Frame = {
  type: "frame",
  tick: 12,
  score: 20,
  orders: [0],
  agents: [
    { cell: [4, 2], facing: "left", held: "onion" },
    { cell: [2, 2], facing: "right", held: null },
  ],
  pots: [{ cell: [5, 1], contents: ["onion", "onion"], phase: "idle", ticks_remaining: 0 }],
  counters: [{ cell: [1, 0], item: "dish" }],
};

describe("scene building", () => {
  it("is deterministic for the golden frame", () => {
    const a = buildScene(STUB_LAYOUT, GOLDEN_FRAME, [2, 4]);
    const b = buildScene(STUB_LAYOUT, GOLDEN_FRAME, [2, 4]);
    expect(a).toEqual(b);
    expect(a).toMatchSnapshot();
  });

  it("marks both agents and the highlight ring", () => {
    const ops = buildScene(STUB_LAYOUT, GOLDEN_FRAME, [2, 4]);
    const rings = ops.filter((op) => op.kind === "ring");
    expect(rings).toEqual([{ kind: "ring", x: 2, y: 4, color: "#ff5c5c" }]);
    const agentRects = ops.filter((op) => op.kind === "rect" && (op.color === "#3b82d0" || op.color === "#3aa65c"));
    expect(agentRects.map((op) => [op.x, op.y])).toEqual([
      [4, 2],
      [2, 2],
    ]);
  });

  it("shows pot fill level and carried items", () => {
    const ops = buildScene(STUB_LAYOUT, GOLDEN_FRAME, null);
    const potGlyph = ops.find((op) => op.kind === "glyph" && op.x === 5 && op.y === 1 && op.glyph === "2");
    expect(potGlyph).toBeDefined();
    const held = ops.find((op) => op.kind === "glyph" && op.x === 4 && op.y === 2 && op.glyph === "o");
    expect(held).toBeDefined();
  });
});
