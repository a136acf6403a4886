"""Live inspection service for one environment/agent pair.

A single session owns one environment and one agent and answers JSON
commands: the four operator actions (``reset``, ``step_planning``,
``run_planning_all``, ``execute_best_action``) advance the session exactly
as the agent/environment operations would, and the query commands
(``get_tree``, ``get_node``, ``get_beliefs``, ``get_messages``,
``get_model_structure``, ``get_efe``, ``get_env_view``) serialize current
state without side effects.

Transport is newline-delimited JSON over a local TCP port: requests
``{"id": ..., "cmd": ..., "args": {...}}`` answered by
``{"id": ..., "ok": true, "payload": ...}`` or
``{"id": ..., "ok": false, "error": {"type": ..., "message": ...}}``.
There is also an optional HTTP bridge (POST /api with the same request body) so a
browser client can talk to the session and fetch the bundled UI. Commands
from any number of connections are serialized through one lock; the
session itself is never touched concurrently.
"""

from __future__ import annotations

import json
import socketserver
import threading
from dataclasses import dataclass
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .agent import Agent
from .efe import EfeBreakdown
from .env_dsprites import DSpritesEnv, goal_x_cell
from .errors import (
    BeliefTreeError,
    EpisodeFinished,
    MalformedCommand,
    NoPlanningDone,
    UnknownNode,
)
from .planner import TreeNode, select_action, serialize_tree
from .tensors import VarName

QUERY_COMMANDS = frozenset(
    {
        "get_tree",
        "get_node",
        "get_beliefs",
        "get_messages",
        "get_model_structure",
        "get_efe",
        "get_env_view",
    }
)
MUTATING_COMMANDS = frozenset(
    {"reset", "step_planning", "run_planning_all", "execute_best_action"}
)


class InspectorSession:
    """One env + agent pair plus planning-cycle bookkeeping."""

    def __init__(self, env: DSpritesEnv, agent: Agent):
        self.env = env
        self.agent = agent
        self.iterations_done = 0
        self.event_log: list[dict] = []
        self.last_action: int | None = None
        self.last_reward: float | None = None

    @property
    def iterations_remaining(self) -> int:
        return self.agent.config.planning_iterations - self.iterations_done

    def reset(self) -> None:
        obs = self.env.reset()
        self.agent.reset(obs)
        self.iterations_done = 0
        self.last_action = None
        self.last_reward = None
        self.event_log.append({"event": "reset"})

    def step_planning(self, k: int) -> list[str]:
        """Run up to ``k`` planning iterations; returns new node ids."""
        new_ids: list[str] = []
        for _ in range(min(k, max(self.iterations_remaining, 0))):
            record = self.agent.plan_iteration()
            self.iterations_done += 1
            selected = self._find_node(record.selected_id)
            new_ids.extend(child.id for child in selected.children)
            self.event_log.append(
                {"event": "plan_iteration", "selected": record.selected_id}
            )
        return new_ids

    def execute_best_action(self) -> dict:
        root = self.agent.root
        if root is None or not root.children:
            raise NoPlanningDone("no planning iteration has run yet")
        if self.env.done:
            raise EpisodeFinished("episode already finished; reset to continue")
        action = select_action(root)
        obs = self.env.execute(action)
        self.agent.update(action, obs)
        self.iterations_done = 0
        self.last_action = action
        self.last_reward = self.env.reward() if self.env.done else None
        self.event_log.append({"event": "execute", "action": action})
        return {
            "action": action,
            "done": self.env.done,
            "reward": self.last_reward,
        }

    # -- lookup helpers -----------------------------------------------------

    def _find_node(self, node_id: str) -> TreeNode:
        root = self.agent.root
        if root is not None:
            for node in root.walk():
                if node.id == node_id:
                    return node
        raise UnknownNode(f"no node {node_id!r} in the current tree")


def _belief_payload(session: InspectorSession, node_id: str, var: VarName) -> dict:
    node = session._find_node(node_id)
    is_root = node is session.agent.root
    if var in node.beliefs.state_beliefs:
        kind = "posterior" if is_root else "predicted"
        probs = node.beliefs.state_beliefs[var].probs
    elif var in node.beliefs.obs_beliefs:
        kind = "predicted_observation"
        probs = node.beliefs.obs_beliefs[var].probs
    elif is_root and var in session.agent.model.observations:
        raise MalformedCommand(
            f"{var!r} is observed data at the root, not a belief"
        )
    else:
        raise MalformedCommand(f"no belief over {var!r} at node {node_id!r}")
    return {
        "node_id": node_id,
        "var": var,
        "kind": kind,
        "probs": probs.tolist(),
    }


def _efe_payload(session: InspectorSession, node_id: str) -> dict:
    node = session._find_node(node_id)
    if node.efe_own is None:
        # the root carries no own cost by construction
        return EfeBreakdown(0.0, {}, {}).to_payload() | {"is_root": True}
    return node.efe_own.to_payload() | {"is_root": False}


def _env_view(session: InspectorSession) -> dict:
    env = session.env
    cfg = env.config
    return {
        "grid_width": cfg.n_x_cells,
        "grid_rows": cfg.absorbing_index,
        "absorbing_row": cfg.absorbing_index,
        "agent": {"x": env.x_cell, "y": env.y_cell, "absorbed": env.absorbed},
        "goal": {"x": goal_x_cell(env.shape, cfg), "y": cfg.absorbing_index},
        "shape": env.shape,
        "scale": env.scale,
        "orientation": env.orientation,
        "done": env.done,
        "cycles": env.cycles_elapsed,
        "max_cycles": cfg.max_cycles,
        "last_action": session.last_action,
        "last_reward": session.last_reward,
    }


def _tree_payload(session: InspectorSession) -> dict:
    root = session.agent.root
    snapshot = serialize_tree(root) if root is not None else {"root": None, "nodes": []}
    snapshot["iterations_done"] = session.iterations_done
    snapshot["iterations_remaining"] = session.iterations_remaining
    snapshot["n_actions"] = session.agent.model.n_actions
    snapshot["log"] = [
        {
            "selected": record.selected_id,
            "child_efes": list(record.child_efes),
            "min": record.min_efe,
        }
        for record in session.agent.iteration_log
    ]
    return snapshot


class CommandProcessor:
    """Validates and dispatches one decoded request dict at a time."""

    def __init__(self, session: InspectorSession):
        self.session = session
        self._lock = threading.Lock()

    def handle_line(self, line: str) -> str:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return json.dumps(
                _error_response(None, MalformedCommand(f"bad JSON: {exc}"))
            )
        return json.dumps(self.handle(request))

    def handle(self, request: object) -> dict:
        if not isinstance(request, dict):
            return _error_response(None, MalformedCommand("request must be an object"))
        request_id = request.get("id")
        cmd = request.get("cmd")
        args = request.get("args") or {}
        if not isinstance(cmd, str) or not isinstance(args, dict):
            return _error_response(
                request_id, MalformedCommand("cmd must be a string, args an object")
            )
        with self._lock:
            try:
                payload = self._dispatch(cmd, args)
            except BeliefTreeError as exc:
                return _error_response(request_id, exc)
            except (KeyError, TypeError, ValueError) as exc:
                return _error_response(
                    request_id, MalformedCommand(f"{type(exc).__name__}: {exc}")
                )
        return {"id": request_id, "ok": True, "payload": payload}

    def _dispatch(self, cmd: str, args: dict) -> object:
        session = self.session
        if cmd == "reset":
            session.reset()
            return {"env": _env_view(session), "tree": _tree_payload(session)}
        if cmd == "step_planning":
            k = int(args.get("k", 1))
            if k < 1:
                raise MalformedCommand("k must be >= 1")
            new_ids = session.step_planning(k)
            return {
                "new_node_ids": new_ids,
                "iterations_done": session.iterations_done,
                "iterations_remaining": session.iterations_remaining,
                "tree": _tree_payload(session),
            }
        if cmd == "run_planning_all":
            new_ids = session.step_planning(session.iterations_remaining)
            return {
                "new_node_ids": new_ids,
                "iterations_done": session.iterations_done,
                "iterations_remaining": session.iterations_remaining,
                "tree": _tree_payload(session),
            }
        if cmd == "execute_best_action":
            outcome = session.execute_best_action()
            return outcome | {
                "env": _env_view(session),
                "tree": _tree_payload(session),
            }
        if cmd == "get_tree":
            return _tree_payload(session)
        if cmd == "get_node":
            node = session._find_node(str(args["id"]))
            return {
                "id": node.id,
                "multi_index": list(node.multi_index),
                "action": node.action_from_parent,
                "visits": node.visits,
                "mean_cost": node.mean_cost,
                "efe": node.efe_own.to_payload() if node.efe_own else None,
                "children": [child.id for child in node.children],
            }
        if cmd == "get_beliefs":
            return _belief_payload(session, str(args["node_id"]), str(args["var"]))
        if cmd == "get_messages":
            var = str(args["var"])
            entries = [
                {"source": m.source, "target": m.target, "content": m.content.tolist()}
                for m in session.agent.last_message_log
                if var in (m.source, m.target)
                or m.source.endswith(f":{var}")
                or m.target.endswith(f":{var}")
            ]
            return {"var": var, "messages": entries}
        if cmd == "get_model_structure":
            return session.agent.model.to_json_dict()
        if cmd == "get_efe":
            return _efe_payload(session, str(args["node_id"]))
        if cmd == "get_env_view":
            return _env_view(session)
        raise MalformedCommand(f"unknown command {cmd!r}")


def _error_response(request_id: object, exc: Exception) -> dict:
    return {
        "id": request_id,
        "ok": False,
        "error": {"type": type(exc).__name__, "message": str(exc)},
    }


# -- transports -------------------------------------------------------------


class _NdjsonHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        processor: CommandProcessor = self.server.processor  # type: ignore[attr-defined]
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            response = processor.handle_line(line)
            self.wfile.write(response.encode("utf-8") + b"\n")


class NdjsonServer(socketserver.ThreadingTCPServer):
    """Newline-delimited JSON command server bound to a local port."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, processor: CommandProcessor, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _NdjsonHandler)
        self.processor = processor


class _HttpBridgeHandler(BaseHTTPRequestHandler):
    def do_POST(self) -> None:  # noqa: N802 (stdlib naming)
        if self.path.rstrip("/") != "/api":
            self.send_error(HTTPStatus.NOT_FOUND)
            return
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length).decode("utf-8")
        processor: CommandProcessor = self.server.processor  # type: ignore[attr-defined]
        response = processor.handle_line(body).encode("utf-8")
        self.send_response(HTTPStatus.OK)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(response)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(response)

    def do_GET(self) -> None:  # noqa: N802
        ui_dir: Path | None = self.server.ui_dir  # type: ignore[attr-defined]
        if ui_dir is None:
            self.send_error(HTTPStatus.NOT_FOUND, "no UI directory configured")
            return
        rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (ui_dir / rel).resolve()
        if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
            self.send_error(HTTPStatus.NOT_FOUND)
            return
        content = target.read_bytes()
        ctype = {
            ".html": "text/html",
            ".js": "text/javascript",
            ".css": "text/css",
            ".json": "application/json",
            ".svg": "image/svg+xml",
        }.get(target.suffix, "application/octet-stream")
        self.send_response(HTTPStatus.OK)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(content)))
        self.end_headers()
        self.wfile.write(content)

    def log_message(self, fmt: str, *args: object) -> None:
        pass  # keep the command loop's stdout clean


class HttpBridge(ThreadingHTTPServer):
    """POST /api -> command processor; GET serves the optional UI bundle."""

    daemon_threads = True

    def __init__(
        self,
        processor: CommandProcessor,
        host: str = "127.0.0.1",
        port: int = 0,
        ui_dir: Path | None = None,
    ):
        super().__init__((host, port), _HttpBridgeHandler)
        self.processor = processor
        self.ui_dir = ui_dir


@dataclass
class InspectorService:
    """Running servers for one session; ``close()`` stops both."""

    processor: CommandProcessor
    ndjson: NdjsonServer
    http: HttpBridge | None

    @property
    def ndjson_port(self) -> int:
        return self.ndjson.server_address[1]

    @property
    def http_port(self) -> int | None:
        return self.http.server_address[1] if self.http else None

    def serve_forever(self) -> None:
        if self.http is not None:
            threading.Thread(target=self.http.serve_forever, daemon=True).start()
        self.ndjson.serve_forever()

    def start_background(self) -> None:
        threading.Thread(target=self.ndjson.serve_forever, daemon=True).start()
        if self.http is not None:
            threading.Thread(target=self.http.serve_forever, daemon=True).start()

    def close(self) -> None:
        self.ndjson.shutdown()
        self.ndjson.server_close()
        if self.http is not None:
            self.http.shutdown()
            self.http.server_close()


def make_service(
    env: DSpritesEnv,
    agent: Agent,
    host: str = "127.0.0.1",
    port: int = 0,
    http_port: int | None = None,
    ui_dir: Path | None = None,
    reset_on_start: bool = True,
) -> InspectorService:
    """Wire a session to its transports; does not start serving yet."""
    session = InspectorSession(env, agent)
    if reset_on_start:
        session.reset()
    processor = CommandProcessor(session)
    ndjson = NdjsonServer(processor, host, port)
    http = (
        HttpBridge(processor, host, http_port, ui_dir)
        if http_port is not None
        else None
    )
    return InspectorService(processor, ndjson, http)
