// Live session client. Works against anything that looks like a WebSocket
// so tests can drive it with an in-process stub server.

import { decodeServerMsg, encodeClientMsg } from "./protocol.js";
import type { ActionName, Frame, JoinedMsg, LayoutView } from "./protocol.js";
import { applyFrame, acknowledge, emptyPanel, PanelState } from "./panel.js";
import { keyToAction } from "./input.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export type Phase = "connecting" | "joined" | "rejected" | "ended" | "closed";

export interface ClientEvents {
  onFrame?: (frame: Frame, client: SessionClient) => void;
  onPanel?: (panel: PanelState, client: SessionClient) => void;
  onPhase?: (phase: Phase, detail: string) => void;
}

export class SessionClient {
  phase: Phase = "connecting";
  layout: LayoutView | null = null;
  humanSlot = 1;
  tickMs = 150;
  lastFrame: Frame | null = null;
  panel: PanelState = emptyPanel();
  finalScore: number | null = null;

  private socket: SocketLike;
  private events: ClientEvents;

  constructor(socket: SocketLike, token: string, events: ClientEvents = {}) {
    this.socket = socket;
    this.events = events;
    socket.onmessage = (event) => this.handle(event.data);
    socket.onclose = () => this.setPhase("closed", "connection closed");
    socket.send(encodeClientMsg({ type: "join", token }));
  }

  sendAction(action: ActionName): void {
    if (this.phase !== "joined") return;
    this.socket.send(encodeClientMsg({ type: "action", action }));
  }

  sendKey(code: string): ActionName | null {
    const action = keyToAction(code);
    if (action) this.sendAction(action);
    return action;
  }

  ackMessage(): void {
    if (this.panel.message && this.panel.needsAck) {
      this.socket.send(encodeClientMsg({ type: "ack", id: this.panel.message.id }));
      this.panel = acknowledge(this.panel);
      this.events.onPanel?.(this.panel, this);
    }
  }

  leave(): void {
    this.socket.send(encodeClientMsg({ type: "leave" }));
    this.socket.close();
  }

  private handle(raw: string): void {
    const msg = decodeServerMsg(raw);
    if (!msg) return;
    switch (msg.type) {
      case "joined":
        this.acceptJoin(msg);
        break;
      case "frame":
        this.acceptFrame(msg);
        break;
      case "end":
        this.finalScore = msg.score;
        this.setPhase("ended", msg.reason);
        break;
      case "error":
        if (this.phase === "connecting") this.setPhase("rejected", msg.error);
        else this.events.onPhase?.(this.phase, msg.error);
        break;
    }
  }

  private acceptJoin(msg: JoinedMsg): void {
    this.layout = msg.layout;
    this.humanSlot = msg.human_slot;
    this.tickMs = msg.tick_ms;
    this.phase = "joined";
    this.events.onPhase?.("joined", "");
    this.acceptFrame(msg.frame, true);
  }

  private acceptFrame(frame: Frame, initial = false): void {
    // frames are full state; anything out of order is stale and dropped
    if (!initial && this.lastFrame && frame.tick <= this.lastFrame.tick) return;
    this.lastFrame = frame;
    this.panel = applyFrame(this.panel, frame);
    this.events.onFrame?.(frame, this);
    if (frame.message) this.events.onPanel?.(this.panel, this);
  }

  private setPhase(phase: Phase, detail: string): void {
    if (this.phase === "ended" && phase === "closed") return;
    this.phase = phase;
    this.events.onPhase?.(phase, detail);
  }
}
