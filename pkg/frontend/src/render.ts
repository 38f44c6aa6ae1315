// Pure scene building: a frame becomes a flat list of draw ops so the
// canvas layer stays one dumb loop and snapshots stay deterministic.

import type { Frame, LayoutView } from "./protocol.js";

export const CELL = 48;

export interface DrawOp {
  kind: "rect" | "glyph" | "ring";
  x: number;
  y: number;
  color: string;
  glyph?: string;
}

const TILE_COLORS: Record<string, string> = {
  X: "#6b6b6b",
  " ": "#2e2e2e",
  O: "#c8a332",
  T: "#c0392b",
  D: "#8ea4af",
  P: "#222831",
  S: "#4d774e",
};

const TILE_GLYPHS: Record<string, string> = {
  O: "O",
  T: "T",
  D: "D",
  P: "P",
  S: "S",
};

const HELD_GLYPHS: Record<string, string> = {
  onion: "o",
  tomato: "t",
  dish: "d",
};

const AGENT_COLORS = ["#3b82d0", "#3aa65c"]; // slot 0 blue, slot 1 green

export function buildScene(layout: LayoutView, frame: Frame, highlight: [number, number] | null): DrawOp[] {
  const ops: DrawOp[] = [];
  for (let y = 0; y < layout.height; y++) {
    for (let x = 0; x < layout.width; x++) {
      const tile = layout.tiles[y][x];
      ops.push({ kind: "rect", x, y, color: TILE_COLORS[tile] ?? "#000000" });
      const glyph = TILE_GLYPHS[tile];
      if (glyph) ops.push({ kind: "glyph", x, y, color: "#f0f0f0", glyph });
    }
  }
  for (const pot of frame.pots) {
    const [x, y] = pot.cell;
    const label = pot.phase === "ready" ? "✓" : pot.phase === "cooking" ? String(pot.ticks_remaining) : String(pot.contents.length);
    ops.push({ kind: "glyph", x, y, color: pot.phase === "ready" ? "#7dd87d" : "#f2c14e", glyph: label });
  }
  for (const counter of frame.counters) {
    const [x, y] = counter.cell;
    const glyph = HELD_GLYPHS[counter.item] ?? "?";
    ops.push({ kind: "glyph", x, y, color: "#ffd9a0", glyph });
  }
  frame.agents.forEach((agent, i) => {
    const [x, y] = agent.cell;
    ops.push({ kind: "rect", x, y, color: AGENT_COLORS[i] });
    const arrow = { up: "↑", down: "↓", left: "←", right: "→" }[agent.facing];
    ops.push({ kind: "glyph", x, y, color: "#ffffff", glyph: arrow });
    if (agent.held) {
      const short = agent.held.startsWith("soup") ? "S" : HELD_GLYPHS[agent.held] ?? "?";
      ops.push({ kind: "glyph", x, y, color: "#ffe28a", glyph: short });
    }
  });
  if (highlight) {
    ops.push({ kind: "ring", x: highlight[0], y: highlight[1], color: "#ff5c5c" });
  }
  return ops;
}

export function drawScene(ctx: CanvasRenderingContext2D, ops: DrawOp[]): void {
  for (const op of ops) {
    const px = op.x * CELL;
    const py = op.y * CELL;
    if (op.kind === "rect") {
      ctx.fillStyle = op.color;
      ctx.fillRect(px, py, CELL - 1, CELL - 1);
    } else if (op.kind === "glyph" && op.glyph) {
      ctx.fillStyle = op.color;
      ctx.font = `${CELL * 0.5}px monospace`;
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(op.glyph, px + CELL / 2, py + CELL / 2);
    } else if (op.kind === "ring") {
      ctx.strokeStyle = op.color;
      ctx.lineWidth = 3;
      ctx.strokeRect(px + 2, py + 2, CELL - 5, CELL - 5);
    }
  }
}
