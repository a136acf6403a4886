// Pure HTML-string renderers. Every number shown comes straight from a
// protocol payload; the only transformation applied is display rounding.

import {
  BeliefPayload,
  EfePayload,
  EnvViewPayload,
  TreeNodePayload,
  TreePayload,
} from "./protocol.js";

export const PROB_DECIMALS = 4;
export const COST_DECIMALS = 4;
export const SUM_WARN_TOLERANCE = 1e-6;

const SHAPE_NAMES = ["square", "ellipse", "heart"];
const ACTION_NAMES = ["UP", "DOWN", "LEFT", "RIGHT"];

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatProb(p: number): string {
  return p.toFixed(PROB_DECIMALS);
}

export function formatCost(c: number): string {
  return c.toFixed(COST_DECIMALS);
}

export function nodeLabel(node: TreeNodePayload, rootId: string | null): string {
  if (node.id === rootId && node.multi_index.length === 0) return "TS(t)";
  return `TS(${node.multi_index.join(",")})`;
}

/** Child of the view root with the most visits; ties to the lowest action. */
export function bestChildId(tree: TreePayload, viewRootId: string): string | null {
  const byId = new Map(tree.nodes.map((n) => [n.id, n]));
  const viewRoot = byId.get(viewRootId);
  if (!viewRoot || viewRoot.children.length === 0) return null;
  let best: TreeNodePayload | null = null;
  for (const childId of viewRoot.children) {
    const child = byId.get(childId);
    if (!child) continue;
    if (best === null || child.visits > best.visits) best = child;
  }
  return best ? best.id : null;
}

export function lastExpandedId(tree: TreePayload): string | null {
  if (tree.log.length === 0) return null;
  return tree.log[tree.log.length - 1].selected;
}

/**
 * View-root plus its children, as in the planning pane: unexpanded
 * children render as orange "None" placeholders, the best child is
 * green, and the node expanded by the most recent iteration carries a
 * red outline. The arrow above the view root is gray (clickable) when a
 * parent exists and orange when the view root is the tree's root.
 */
export function renderTree(tree: TreePayload, viewRootId?: string | null): string {
  const rootId = viewRootId ?? tree.root;
  if (rootId === null) return `<div class="tree-empty">no tree yet</div>`;
  const byId = new Map(tree.nodes.map((n) => [n.id, n]));
  const viewRoot = byId.get(rootId);
  if (!viewRoot) return `<div class="tree-empty">stale node ${esc(rootId)}</div>`;

  const bestId = bestChildId(tree, rootId);
  const lastId = lastExpandedId(tree);
  const isTreeRoot = rootId === tree.root;
  const parentId = isTreeRoot
    ? null
    : `(${viewRoot.multi_index.slice(0, -1).join(",")})`;

  const arrow = isTreeRoot
    ? `<div class="parent-arrow no-parent" title="this node has no parent">&#8593;</div>`
    : `<div class="parent-arrow has-parent" data-parent-id="${esc(parentId!)}" title="back to parent">&#8593;</div>`;

  const rootCls = ["node", "view-root"];
  if (viewRoot.id === lastId) rootCls.push("last-expanded");
  const rootBox = `<div class="${rootCls.join(" ")}" data-node-id="${esc(viewRoot.id)}">
    <span class="node-name">${esc(nodeLabel(viewRoot, tree.root))}</span>
    <span class="node-visits">visits ${viewRoot.visits}</span>
    <span class="node-cost">mean cost ${formatCost(viewRoot.mean_cost)}</span>
  </div>`;

  const childBoxes: string[] = [];
  if (viewRoot.children.length === 0) {
    for (let a = 0; a < tree.n_actions; a++) {
      childBoxes.push(
        `<div class="node child unexpanded" data-action="${a}">None</div>`,
      );
    }
  } else {
    for (const childId of viewRoot.children) {
      const child = byId.get(childId);
      if (!child) continue;
      const cls = ["node", "child"];
      if (child.id === bestId) cls.push("best");
      if (child.id === lastId) cls.push("last-expanded");
      childBoxes.push(
        `<div class="${cls.join(" ")}" data-node-id="${esc(child.id)}" data-action="${child.action}">
        <span class="node-name">${esc(nodeLabel(child, tree.root))}</span>
        <span class="node-visits">visits ${child.visits}</span>
        <span class="node-cost">mean cost ${formatCost(child.mean_cost)}</span>
      </div>`,
      );
    }
  }

  return `<div class="tree-view">
  ${arrow}
  ${rootBox}
  <div class="children">${childBoxes.join("\n")}</div>
  <div class="tree-meta">iteration ${tree.iterations_done} / ${tree.iterations_done + tree.iterations_remaining}</div>
</div>`;
}

/**
 * Bar chart of one categorical payload. Shows a warning badge when the
 * payload does not sum to one within 1e-6; optional log scaling keeps
 * near-one-hot, 40-value axes readable.
 */
export function renderBeliefBars(payload: BeliefPayload, logScale = false): string {
  const sum = payload.probs.reduce((a, b) => a + b, 0);
  const warn =
    Math.abs(sum - 1) > SUM_WARN_TOLERANCE
      ? `<span class="warn-badge" title="probabilities sum to ${sum}">sum &#8800; 1</span>`
      : "";
  const floor = 1e-6;
  const heights = payload.probs.map((p) => {
    if (!logScale) return Math.max(0, Math.min(1, p)) * 100;
    const clamped = Math.max(p, floor);
    return ((Math.log10(clamped) - Math.log10(floor)) / -Math.log10(floor)) * 100;
  });
  const bars = payload.probs
    .map(
      (p, i) => `<div class="bar-cell">
      <div class="bar" style="height:${heights[i].toFixed(2)}%" title="${payload.var}=${i}: ${formatProb(p)}"></div>
      <div class="bar-value">${formatProb(p)}</div>
      <div class="bar-index">${i}</div>
    </div>`,
    )
    .join("\n");
  return `<div class="belief-chart" data-var="${esc(payload.var)}" data-kind="${payload.kind}">
  <div class="belief-title">${esc(payload.var)} <em>(${payload.kind})</em> ${warn}</div>
  <div class="bars${logScale ? " log-scale" : ""}">${bars}</div>
</div>`;
}

/**
 * Cost breakdown: the top level shows the total with a blue risk box and
 * a red ambiguity box; drilling into either lists its per-entry terms.
 * Terms absent from the payload (unpreferred observations) simply do not
 * appear.
 */
export function renderEfe(
  payload: EfePayload,
  drill: "risk" | "ambiguity" | null = null,
): string {
  const riskSum = payload.risk.reduce((a, t) => a + t.value, 0);
  const ambiguitySum = payload.ambiguity.reduce((a, t) => a + t.value, 0);
  if (drill === null) {
    return `<div class="efe-view">
  <div class="efe-total">expected free energy ${formatCost(payload.total)}</div>
  <div class="efe-box risk" data-drill="risk">risk ${formatCost(riskSum)}</div>
  <div class="efe-box ambiguity" data-drill="ambiguity">ambiguity ${formatCost(ambiguitySum)}</div>
</div>`;
  }
  const terms = drill === "risk" ? payload.risk : payload.ambiguity;
  const rows = terms
    .map((t) => {
      const label = t.var ?? (t.vars ?? []).join(", ");
      return `<div class="efe-term"><span class="efe-label">${esc(label)}</span><span class="efe-value">${formatCost(t.value)}</span></div>`;
    })
    .join("\n");
  return `<div class="efe-view drilled" data-drill="${drill}">
  <div class="efe-back" data-drill="top">&#8592; ${drill} terms</div>
  ${rows || '<div class="efe-term empty">no terms</div>'}
</div>`;
}

/** Schematic environment grid: cells, the agent cell, the goal cell. */
export function renderEnvGrid(view: EnvViewPayload): string {
  const rows: string[] = [];
  for (let y = 0; y <= view.absorbing_row; y++) {
    const cells: string[] = [];
    for (let x = 0; x < view.grid_width; x++) {
      const cls = ["cell"];
      if (y === view.absorbing_row) cls.push("absorbing");
      if (x === view.goal.x && y === view.goal.y) cls.push("goal");
      if (x === view.agent.x && y === view.agent.y) cls.push("agent");
      cells.push(`<div class="${cls.join(" ")}"></div>`);
    }
    rows.push(`<div class="grid-row">${cells.join("")}</div>`);
  }
  const status = view.done
    ? `finished (reward ${view.last_reward === null ? "n/a" : formatCost(view.last_reward)})`
    : `cycle ${view.cycles} / ${view.max_cycles}`;
  const lastAction =
    view.last_action === null ? "" : ` &middot; last action ${ACTION_NAMES[view.last_action]}`;
  return `<div class="env-view">
  <div class="env-grid">${rows.join("\n")}</div>
  <div class="env-caption">${SHAPE_NAMES[view.shape]} &middot; scale ${view.scale} &middot; orientation ${view.orientation}</div>
  <div class="env-status">${status}${lastAction}</div>
</div>`;
}

export interface ModelStructurePayload {
  action_var: string;
  n_actions: number;
  states: Record<string, { parents?: string[]; transition_parents: string[] }>;
  observations: Record<string, { parents: string[] }>;
  preferences: { obs_subset: string[] }[];
}

/**
 * Three little dependency graphs rendered as rows of chips: which states
 * feed each likelihood, which states (and the action) feed each
 * transition, and which observations each preference factor couples.
 * Hovering a chip shows the full variable name; clicking one selects the
 * variable in the belief chart.
 */
export function renderModelStructure(doc: ModelStructurePayload): string {
  const chip = (name: string) =>
    `<span class="chip" data-var="${name}" title="${name}">${name}</span>`;
  const likelihood = Object.entries(doc.observations)
    .map(
      ([obs, spec]) =>
        `<div class="edge">${chip(obs)} &#8592; ${spec.parents.map(chip).join(" ")}</div>`,
    )
    .join("\n");
  const transition = Object.entries(doc.states)
    .map(
      ([state, spec]) =>
        `<div class="edge">${chip(state)}' &#8592; ${spec.transition_parents.map(chip).join(" ")}</div>`,
    )
    .join("\n");
  const preference = doc.preferences
    .map((p) => `<div class="edge">${p.obs_subset.map(chip).join(" ")}</div>`)
    .join("\n");
  return `<div class="structure-view">
  <div class="structure-block"><h4>likelihood</h4>${likelihood}</div>
  <div class="structure-block"><h4>transition</h4>${transition}</div>
  <div class="structure-block"><h4>preference</h4>${preference || "<div class='edge'>none</div>"}</div>
</div>`;
}

export interface MessageViewPayload {
  var: string;
  messages: { source: string; target: string; content: number[] }[];
}

/** Ordered message-log entries touching one variable. */
export function renderMessages(payload: MessageViewPayload): string {
  const rows = payload.messages
    .map(
      (m) => `<div class="message-row">
      <span class="message-edge">${m.source} &#8594; ${m.target}</span>
      <span class="message-content">[${m.content.map(formatProb).join(", ")}]</span>
    </div>`,
    )
    .join("\n");
  return `<div class="message-view" data-var="${payload.var}">
  <div class="message-title">messages touching ${payload.var}</div>
  ${rows || '<div class="message-row empty">none recorded</div>'}
</div>`;
}
