// View-model and wiring: keeps the last successful payloads, refreshes
// panes after each command, and serializes mutating commands (buttons are
// disabled while one is in flight).

import { InspectorClient } from "./client.js";
import {
  BeliefPayload,
  ButtonId,
  BUTTON_COMMANDS,
  EfePayload,
  EnvViewPayload,
  TreePayload,
} from "./protocol.js";
import {
  ModelStructurePayload,
  renderBeliefBars,
  renderEfe,
  renderEnvGrid,
  renderMessages,
  renderModelStructure,
  renderTree,
} from "./render.js";

export interface ViewModel {
  tree: TreePayload | null;
  env: EnvViewPayload | null;
  structure: ModelStructurePayload | null;
  viewRootId: string | null; // which node the tree pane is rooted at
  selectedVar: string | null;
  efeDrill: "risk" | "ambiguity" | null;
  logScale: boolean;
  pending: boolean;
}

export function initialViewModel(): ViewModel {
  return {
    tree: null,
    env: null,
    structure: null,
    viewRootId: null,
    selectedVar: null,
    efeDrill: null,
    logScale: false,
    pending: false,
  };
}

export class App {
  readonly vm: ViewModel = initialViewModel();

  constructor(
    private client: InspectorClient,
    private panes: {
      env: HTMLElement;
      tree: HTMLElement;
      beliefs: HTMLElement;
      efe: HTMLElement;
      structure: HTMLElement;
      messages: HTMLElement;
      buttons: Record<ButtonId, HTMLButtonElement>;
    },
  ) {}

  async start(): Promise<void> {
    for (const [buttonId, button] of Object.entries(this.panes.buttons)) {
      button.addEventListener("click", () => {
        void this.pressButton(buttonId as ButtonId);
      });
    }
    this.panes.tree.addEventListener("click", (e) => this.onTreeClick(e));
    this.panes.efe.addEventListener("click", (e) => this.onEfeClick(e));
    this.panes.structure.addEventListener("click", (e) => this.onChipClick(e));
    this.panes.beliefs.addEventListener("click", (e) => {
      const target = (e.target as HTMLElement).closest(".log-toggle");
      if (target) {
        this.vm.logScale = !this.vm.logScale;
        void this.renderAll();
      }
    });
    this.vm.structure = await this.client.send("get_model_structure");
    await this.refresh();
  }

  /** Single in-flight mutating command; buttons disabled while pending. */
  async pressButton(buttonId: ButtonId): Promise<void> {
    if (this.vm.pending) return;
    const spec = BUTTON_COMMANDS[buttonId];
    this.setPending(true);
    try {
      await this.client.send(spec.cmd, spec.args);
      if (spec.cmd === "reset" || spec.cmd === "execute_best_action") {
        this.vm.viewRootId = null; // fresh root each cycle
        this.vm.efeDrill = null;
      }
      await this.refresh();
    } catch (err) {
      this.panes.env.insertAdjacentHTML(
        "beforeend",
        `<div class="error-toast">${String(err)}</div>`,
      );
    } finally {
      this.setPending(false);
    }
  }

  private setPending(pending: boolean): void {
    this.vm.pending = pending;
    for (const button of Object.values(this.panes.buttons)) {
      button.disabled = pending;
    }
  }

  private onTreeClick(e: Event): void {
    const target = (e.target as HTMLElement).closest("[data-node-id],[data-parent-id]");
    if (!target) return;
    const parentId = target.getAttribute("data-parent-id");
    const nodeId = target.getAttribute("data-node-id");
    if (parentId) {
      this.vm.viewRootId = parentId;
    } else if (nodeId && nodeId !== this.viewRootId()) {
      this.vm.viewRootId = nodeId; // clicking a child re-roots the view
    }
    void this.renderAll();
  }

  private onEfeClick(e: Event): void {
    const target = (e.target as HTMLElement).closest("[data-drill]");
    if (!target) return;
    const drill = target.getAttribute("data-drill");
    this.vm.efeDrill = drill === "risk" || drill === "ambiguity" ? drill : null;
    void this.renderAll();
  }

  private onChipClick(e: Event): void {
    const target = (e.target as HTMLElement).closest("[data-var]");
    if (!target) return;
    this.vm.selectedVar = target.getAttribute("data-var");
    void this.renderAll();
  }

  viewRootId(): string | null {
    return this.vm.viewRootId ?? this.vm.tree?.root ?? null;
  }

  async refresh(): Promise<void> {
    this.vm.tree = await this.client.send<TreePayload>("get_tree");
    this.vm.env = await this.client.send<EnvViewPayload>("get_env_view");
    if (this.vm.selectedVar === null && this.vm.structure) {
      this.vm.selectedVar = Object.keys(this.vm.structure.states)[0] ?? null;
    }
    await this.renderAll();
  }

  async renderAll(): Promise<void> {
    if (this.vm.env) this.panes.env.innerHTML = renderEnvGrid(this.vm.env);
    if (this.vm.structure) {
      this.panes.structure.innerHTML = renderModelStructure(this.vm.structure);
    }
    if (this.vm.tree) {
      this.panes.tree.innerHTML = renderTree(this.vm.tree, this.viewRootId());
    }
    const nodeId = this.viewRootId();
    if (nodeId && this.vm.selectedVar) {
      try {
        const beliefs = await this.client.send<BeliefPayload>("get_beliefs", {
          node_id: nodeId,
          var: this.vm.selectedVar,
        });
        const toggle = `<label class="log-toggle"><input type="checkbox"${this.vm.logScale ? " checked" : ""}> log scale</label>`;
        this.panes.beliefs.innerHTML = renderBeliefBars(beliefs, this.vm.logScale) + toggle;
      } catch {
        this.panes.beliefs.innerHTML = `<div class="belief-chart empty">no belief for ${this.vm.selectedVar} here</div>`;
      }
      try {
        const messages = await this.client.send<never>("get_messages", {
          var: this.vm.selectedVar,
        });
        this.panes.messages.innerHTML = renderMessages(messages);
      } catch {
        this.panes.messages.innerHTML = "";
      }
    }
    if (nodeId) {
      const efe = await this.client.send<EfePayload>("get_efe", { node_id: nodeId });
      this.panes.efe.innerHTML = renderEfe(efe, this.vm.efeDrill);
    }
  }
}
