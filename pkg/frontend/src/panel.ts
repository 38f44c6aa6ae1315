// Communication panel state: the latest agent instruction, the grid cell
// it names (taken from the structured field, never re-parsed from text),
// and whether it still wants an acknowledgement.

import type { AgentMessage, Frame } from "./protocol.js";

export interface PanelState {
  message: AgentMessage | null;
  highlight: [number, number] | null;
  needsAck: boolean;
  history: AgentMessage[];
}

export function emptyPanel(): PanelState {
  return { message: null, highlight: null, needsAck: false, history: [] };
}

export function applyFrame(panel: PanelState, frame: Frame): PanelState {
  if (!frame.message) return panel;
  const message = frame.message;
  return {
    message,
    highlight: message.location,
    // requests ask the human to do something; self-adapt notes are informational
    needsAck: message.template === "request_adapt",
    history: [...panel.history, message],
  };
}

export function acknowledge(panel: PanelState): PanelState {
  return { ...panel, needsAck: false };
}
