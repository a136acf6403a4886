// Types for the inspector's JSON command protocol and the fixed mapping
// from operator buttons to commands. The client performs no inference
// math: every number rendered traces back to one of these payloads.

export type CommandName =
  | "reset"
  | "step_planning"
  | "run_planning_all"
  | "execute_best_action"
  | "get_tree"
  | "get_node"
  | "get_beliefs"
  | "get_messages"
  | "get_model_structure"
  | "get_efe"
  | "get_env_view";

export interface Command {
  id: number;
  cmd: CommandName;
  args: Record<string, unknown>;
}

export interface ErrorBody {
  type: string;
  message: string;
}

export interface Response<P = unknown> {
  id: number | null;
  ok: boolean;
  payload?: P;
  error?: ErrorBody;
}

export interface EfeTerm {
  vars?: string[];
  var?: string;
  value: number;
}

export interface EfePayload {
  total: number;
  risk: EfeTerm[];
  ambiguity: EfeTerm[];
  is_root?: boolean;
}

export interface TreeNodePayload {
  id: string;
  multi_index: number[];
  action: number | null;
  visits: number;
  mean_cost: number;
  efe: EfePayload | null;
  children: string[];
}

export interface IterationLogEntry {
  selected: string;
  child_efes: number[];
  min: number;
}

export interface TreePayload {
  root: string | null;
  nodes: TreeNodePayload[];
  iterations_done: number;
  iterations_remaining: number;
  n_actions: number;
  log: IterationLogEntry[];
}

export interface BeliefPayload {
  node_id: string;
  var: string;
  kind: "posterior" | "predicted" | "predicted_observation";
  probs: number[];
}

export interface EnvViewPayload {
  grid_width: number;
  grid_rows: number;
  absorbing_row: number;
  agent: { x: number; y: number; absorbed: boolean };
  goal: { x: number; y: number };
  shape: number;
  scale: number;
  orientation: number;
  done: boolean;
  cycles: number;
  max_cycles: number;
  last_action: number | null;
  last_reward: number | null;
}

export interface MessagePayload {
  var: string;
  messages: { source: string; target: string; content: number[] }[];
}

export type ButtonId = "reset" | "next-iteration" | "run-all" | "best-action";

// The four operator buttons map 1:1 onto protocol commands.
export const BUTTON_COMMANDS: Record<ButtonId, { cmd: CommandName; args: Record<string, unknown> }> = {
  "reset": { cmd: "reset", args: {} },
  "next-iteration": { cmd: "step_planning", args: { k: 1 } },
  "run-all": { cmd: "run_planning_all", args: {} },
  "best-action": { cmd: "execute_best_action", args: {} },
};

export function commandForButton(button: ButtonId, id: number): Command {
  const spec = BUTTON_COMMANDS[button];
  return { id, cmd: spec.cmd, args: { ...spec.args } };
}
