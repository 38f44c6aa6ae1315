// Wire schema of the session server: JSON text messages over a WebSocket.

export type ActionName = "up" | "down" | "left" | "right" | "stay" | "interact";

export interface AgentView {
  cell: [number, number];
  facing: "up" | "down" | "left" | "right";
  held: string | null;
}

export interface PotView {
  cell: [number, number];
  contents: string[];
  phase: "idle" | "cooking" | "ready";
  ticks_remaining: number;
}

export interface CounterView {
  cell: [number, number];
  item: string;
}

export interface AgentMessage {
  id: number;
  template: "self_adapt" | "request_adapt" | "no_adaptation";
  text: string;
  location: [number, number] | null;
}

export interface Frame {
  type: "frame";
  tick: number;
  score: number;
  orders: number[];
  agents: AgentView[];
  pots: PotView[];
  counters: CounterView[];
  message?: AgentMessage;
  ended?: boolean;
}

export interface LayoutView {
  name: string;
  width: number;
  height: number;
  tiles: string[][];
}

export interface JoinedMsg {
  type: "joined";
  human_slot: number;
  tick_ms: number;
  layout: LayoutView;
  frame: Frame;
}

export interface EndMsg {
  type: "end";
  reason: string;
  score: number;
}

export interface ErrorMsg {
  type: "error";
  error: string;
}

export type ServerMsg = Frame | JoinedMsg | EndMsg | ErrorMsg;

export type ClientMsg =
  | { type: "join"; token: string }
  | { type: "action"; action: ActionName }
  | { type: "ack"; id: number }
  | { type: "leave" };

export function decodeServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "frame":
      if (typeof msg.tick !== "number" || !Array.isArray(msg.agents)) return null;
      return msg as unknown as Frame;
    case "joined":
      if (typeof msg.human_slot !== "number" || typeof msg.layout !== "object") return null;
      return msg as unknown as JoinedMsg;
    case "end":
      return msg as unknown as EndMsg;
    case "error":
      return typeof msg.error === "string" ? (msg as unknown as ErrorMsg) : null;
    default:
      return null;
  }
}

export function encodeClientMsg(msg: ClientMsg): string {
  return JSON.stringify(msg);
}
