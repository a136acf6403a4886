// Bootstrap: grab the fixed panes from index.html and start the app.

import { InspectorClient } from "./client.js";
import { App } from "./app.js";
import { ButtonId } from "./protocol.js";

function pane(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing pane #${id}`);
  return el;
}

const buttons = {} as Record<ButtonId, HTMLButtonElement>;
for (const id of ["reset", "next-iteration", "run-all", "best-action"] as ButtonId[]) {
  buttons[id] = pane(`btn-${id}`) as HTMLButtonElement;
}

const app = new App(new InspectorClient("/api"), {
  env: pane("env-pane"),
  tree: pane("tree-pane"),
  beliefs: pane("beliefs-pane"),
  efe: pane("efe-pane"),
  structure: pane("structure-pane"),
  messages: pane("messages-pane"),
  buttons,
});

void app.start();
