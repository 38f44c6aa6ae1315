// In-process stub speaking the session-server wire contract over a fake
// socket pair: a tiny kitchen model that applies the latest human action
// each tick, exactly like the real loop's latest-wins inbox.

import type { ActionName, AgentMessage, Frame, LayoutView } from "../src/protocol.js";
import type { SocketLike } from "../src/session.js";

export const STUB_LAYOUT: LayoutView = {
  name: "stub",
  width: 7,
  height: 5,
  tiles: [
    ["X", "X", "X", "X", "X", "X", "X"],
    ["X", "O", " ", " ", " ", "P", "X"],
    ["X", " ", " ", " ", " ", " ", "X"],
    ["X", "D", " ", " ", " ", "S", "X"],
    ["X", "X", "X", "X", "X", "X", "X"],
  ],
};

const DELTAS: Record<string, [number, number]> = {
  up: [0, -1],
  down: [0, 1],
  left: [-1, 0],
  right: [1, 0],
};

export class StubServer {
  token = "stub-token";
  tick = 0;
  humanCell: [number, number] = [2, 2];
  agentCell: [number, number] = [4, 2];
  latestAction: ActionName | null = null;
  acks: number[] = [];
  joined = false;
  pendingMessage: AgentMessage | null = null;
  private clientSide!: FakeSocket;

  connect(): SocketLike {
    const pair = makePair((raw) => this.receive(raw));
    this.clientSide = pair.client;
    return pair.client;
  }

  private receive(raw: string): void {
    const msg = JSON.parse(raw);
    if (msg.type === "join") {
      if (msg.token !== this.token) {
        this.push({ type: "error", error: "join rejected" });
        return;
      }
      if (this.joined) {
        this.push({ type: "error", error: "slot taken" });
        return;
      }
      this.joined = true;
      this.push({
        type: "joined",
        human_slot: 1,
        tick_ms: 50,
        layout: STUB_LAYOUT,
        frame: this.frame(),
      });
    } else if (msg.type === "action") {
      this.latestAction = msg.action; // latest input in a tick window wins
    } else if (msg.type === "ack") {
      this.acks.push(msg.id);
    }
  }

  announce(message: AgentMessage): void {
    this.pendingMessage = message;
  }

  step(): void {
    const action = this.latestAction ?? "stay";
    this.latestAction = null;
    const delta = DELTAS[action];
    if (delta) {
      const nx = this.humanCell[0] + delta[0];
      const ny = this.humanCell[1] + delta[1];
      const open = STUB_LAYOUT.tiles[ny]?.[nx] === " ";
      const occupied = nx === this.agentCell[0] && ny === this.agentCell[1];
      if (open && !occupied) this.humanCell = [nx, ny];
    }
    this.tick += 1;
    const frame = this.frame();
    if (this.pendingMessage) {
      frame.message = this.pendingMessage;
      this.pendingMessage = null;
    }
    this.push(frame);
  }

  frame(): Frame {
    return {
      type: "frame",
      tick: this.tick,
      score: 0,
      orders: [0],
      agents: [
        { cell: [...this.agentCell] as [number, number], facing: "down", held: null },
        { cell: [...this.humanCell] as [number, number], facing: "down", held: null },
      ],
      pots: [{ cell: [5, 1], contents: [], phase: "idle", ticks_remaining: 0 }],
      counters: [],
    };
  }

  push(payload: unknown): void {
    this.clientSide.deliver(JSON.stringify(payload));
  }
}

class FakeSocket implements SocketLike {
  onmessage: ((event: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  constructor(private outbound: (raw: string) => void) {}

  send(data: string): void {
    this.outbound(data);
  }

  close(): void {
    this.onclose?.();
  }

  deliver(raw: string): void {
    this.onmessage?.({ data: raw });
  }
}

function makePair(serverReceive: (raw: string) => void): { client: FakeSocket } {
  const client = new FakeSocket(serverReceive);
  return { client };
}
