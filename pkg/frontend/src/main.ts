// Browser entry point: wires the WebSocket stream into the tree store and
// session controller, and the toolbar into guarded frontend events.

import { Controls } from "./controls.js";
import { describePrimitive, validateMockValue } from "./mockDialog.js";
import { renderTree } from "./render.js";
import { SessionController } from "./session.js";
import { TreeStore } from "./treeStore.js";
import { ServerDoc } from "./types.js";
import { WsClient } from "./wsClient.js";

const store = new TreeStore();
let selected: number | null = null;

const $ = (id: string) => document.getElementById(id)!;

const ws = new WsClient(`ws://${location.host}/ws`, {
  onDoc: handleDoc,
  onStatus: (up) => {
    $("conn").textContent = up ? "connected" : "disconnected";
    if (up) {
      store.reset();
    }
  },
});
const session = new SessionController((event) => ws.send(event));
const controls = new Controls(session);

function redraw(): void {
  renderTree(document, $("tree") as unknown as SVGElement, store, {
    selected,
    onSelect: (id) => {
      selected = id;
      redraw();
    },
  });
  $("state").textContent = session.state;
  const cls = session.classify;
  $("classify").textContent = cls
    ? (cls.kind === "input-prim"
       ? `at input primitive ${describePrimitive(cls)}`
       : `next: ${cls.kind}`)
    : "";
  ($("mock-btn") as HTMLButtonElement).disabled =
    !(session.state === "Paused" && session.atInputPrimitive());
  for (const id of ["step-btn", "play-btn", "suggest-btn", "slide-btn",
                    "restart-btn", "upload-btn", "break-btn"]) {
    ($(id) as HTMLButtonElement).disabled = session.state !== "Paused";
  }
  ($("pause-btn") as HTMLButtonElement).disabled = session.state !== "Running";
}

function diagnostic(message: string): void {
  const item = document.createElement("li");
  item.textContent = message;
  $("diagnostics").prepend(item);
}

function handleDoc(doc: ServerDoc): void {
  switch (doc.type) {
    case "treeDelta":
      store.applyDelta(doc);
      if (store.needsResync) {
        store.reset();
        ws.resync();
      }
      break;
    case "sessionState":
      session.onSessionState(doc);
      break;
    case "classify":
      session.onClassify(doc);
      break;
    case "sourceHighlight":
      $("highlight").textContent = `paused at ${doc.func}:${doc.instr}`;
      break;
    case "diagnostics":
      diagnostic(doc.message);
      break;
  }
  redraw();
}

function openMockDialog(): void {
  const cls = session.classify;
  if (!cls || cls.kind !== "input-prim") {
    return;
  }
  $("mock-label").textContent =
    `Return value for ${describePrimitive(cls)} in ` +
    `[${cls.codomain?.[0]}, ${cls.codomain?.[1]}]:`;
  ($("mock-value") as HTMLInputElement).value = "";
  $("mock-error").textContent = "";
  ($("mock-dialog") as HTMLDialogElement).showModal();
}

function submitMock(): void {
  const raw = ($("mock-value") as HTMLInputElement).value;
  const check = validateMockValue(session.classify, raw);
  if (!check.ok) {
    $("mock-error").textContent = check.message ?? "invalid value";
    return;
  }
  controls.mock(check.value!);
  ($("mock-dialog") as HTMLDialogElement).close();
}

function bounds() {
  const read = (id: string, fallback: number) => {
    const v = parseInt(($(id) as HTMLInputElement).value, 10);
    return Number.isFinite(v) && v > 0 ? v : fallback;
  };
  return {
    maxIterations: read("bound-iters", 64),
    maxSyms: read("bound-syms", 16),
    maxInstr: read("bound-instr", 10000),
  };
}

$("step-btn").addEventListener("click", () => controls.step());
$("pause-btn").addEventListener("click", () => controls.pause());
$("play-btn").addEventListener("click", () => controls.play());
$("restart-btn").addEventListener("click", () => controls.restart());
$("suggest-btn").addEventListener("click", () => controls.suggest(bounds()));
$("slide-btn").addEventListener("click", () => {
  if (!controls.slide(selected)) {
    diagnostic("select a node to slide to");
  }
});
$("mock-btn").addEventListener("click", openMockDialog);
$("mock-submit").addEventListener("click", (e) => {
  e.preventDefault();
  submitMock();
});
$("mock-cancel").addEventListener("click", (e) => {
  e.preventDefault();
  ($("mock-dialog") as HTMLDialogElement).close();
});
$("break-btn").addEventListener("click", () => {
  const id = ($("break-id") as HTMLInputElement).value.trim();
  if (id) {
    controls.breakAdd(id);
  }
});
$("upload-btn").addEventListener("click", () => {
  const text = ($("wat-source") as HTMLTextAreaElement).value;
  if (text.trim()) {
    controls.upload(text);
    selected = null;
  }
});

ws.connect();
redraw();
