// DOM wiring: create/join a session, pump keyboard input, draw frames,
// and run the communication panel.

import { keyToAction } from "./input.js";
import { buildScene, drawScene, CELL } from "./render.js";
import { SessionClient } from "./session.js";

const statusEl = document.getElementById("status") as HTMLDivElement;
const scoreEl = document.getElementById("score") as HTMLDivElement;
const panelEl = document.getElementById("panel") as HTMLDivElement;
const panelText = document.getElementById("panel-text") as HTMLDivElement;
const ackButton = document.getElementById("ack") as HTMLButtonElement;
const canvas = document.getElementById("board") as HTMLCanvasElement;
const form = document.getElementById("setup") as HTMLFormElement;

let client: SessionClient | null = null;

function render(): void {
  if (!client || !client.layout || !client.lastFrame) return;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  canvas.width = client.layout.width * CELL;
  canvas.height = client.layout.height * CELL;
  const ops = buildScene(client.layout, client.lastFrame, client.panel.highlight);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  drawScene(ctx, ops);
  scoreEl.textContent = `score ${client.lastFrame.score} · tick ${client.lastFrame.tick}`;
}

function refreshPanel(): void {
  if (!client || !client.panel.message) {
    panelEl.classList.add("empty");
    panelText.textContent = "No instructions yet.";
    ackButton.disabled = true;
    return;
  }
  panelEl.classList.remove("empty");
  panelText.textContent = client.panel.message.text;
  ackButton.disabled = !client.panel.needsAck;
}

async function start(event: Event): Promise<void> {
  event.preventDefault();
  const layout = (document.getElementById("layout") as HTMLInputElement).value || "dumbbell";
  const agent = (document.getElementById("agent") as HTMLInputElement).value || "monitored:rule";
  statusEl.textContent = "creating session…";
  const response = await fetch("/session", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ layout, agent, tick_ms: 150 }),
  });
  if (!response.ok) {
    statusEl.textContent = `session rejected: ${await response.text()}`;
    return;
  }
  const body = await response.json();
  const ws = new WebSocket(`${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/session/${body.id}`);
  ws.addEventListener("open", () => {
    client = new SessionClient(ws as unknown as never, body.token, {
      onFrame: () => render(),
      onPanel: () => {
        refreshPanel();
        render();
      },
      onPhase: (phase, detail) => {
        statusEl.textContent = phase === "joined" ? "playing — arrows move, space interacts"
          : phase === "ended" ? `episode over: ${detail}, final score ${client?.finalScore}`
          : phase === "rejected" ? `join rejected: ${detail}`
          : phase;
      },
    });
  });
}

window.addEventListener("keydown", (event) => {
  if (!client) return;
  const action = keyToAction(event.code);
  if (action) {
    event.preventDefault();
    client.sendAction(action);
  }
});

ackButton.addEventListener("click", () => {
  client?.ackMessage();
  refreshPanel();
});

// Free-text replies are stubbed behind a flag (?freetext=1) and off by
// default: the protocol carries agent-to-human instructions only, and the
// human answers with actions and acks.
if (new URLSearchParams(location.search).get("freetext") === "1") {
  const row = document.createElement("div");
  const input = document.createElement("input");
  input.placeholder = "free-text reply (experimental, not sent)";
  input.id = "freetext";
  row.appendChild(input);
  panelEl.appendChild(row);
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      console.log("free-text reply (not part of the protocol yet):", input.value);
      input.value = "";
    }
    event.stopPropagation();
  });
}

form.addEventListener("submit", start);
refreshPanel();
