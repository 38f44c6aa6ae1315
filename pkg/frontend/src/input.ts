// Keyboard mapping: arrows move, space interacts; anything else is ignored.
// No key in a tick window means an implicit stay (nothing is sent).

import type { ActionName } from "./protocol.js";

const KEYMAP: Record<string, ActionName> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
  Space: "interact",
  KeyW: "up",
  KeyS: "down",
  KeyA: "left",
  KeyD: "right",
};

export function keyToAction(code: string): ActionName | null {
  return KEYMAP[code] ?? null;
}
