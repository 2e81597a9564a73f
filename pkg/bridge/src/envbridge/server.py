"""The bridge server: one environment per connection, line-delimited JSON.

Requests:  {"cmd":"spec"} | {"cmd":"reset","seed":int} |
           {"cmd":"step","action":[floats]}
Responses: {"obs_dim":..,"act_dim":..,"act_low":[..],"act_high":[..]} for
           spec; {"obs":[..],"reward":..,"done":..} for reset/step;
           {"error": "..."} on any protocol violation.

The server is deliberately blocking and single-connection: determinism
comes first, and parallel environments are parallel processes. Stepping a
finished episode without a reset is an error, as is any command before the
first reset (spec excepted).
"""

from __future__ import annotations

import json
import socket
import sys
import threading

from .envs import UnknownEnvironment, resolve


class BridgeSession:
    """Protocol state for one connection."""

    def __init__(self, env_id: str):
        self.env_id = env_id
        self.env = resolve(env_id)
        self.seed = None
        self.needs_reset = True

    def spec_reply(self) -> dict:
        return {"obs_dim": self.env.obs_dim, "act_dim": self.env.act_dim,
                "act_low": list(self.env.act_low), "act_high": list(self.env.act_high)}

    def handle(self, message: dict) -> dict:
        cmd = message.get("cmd")
        if cmd == "spec":
            return self.spec_reply()
        if cmd == "reset":
            seed = message.get("seed")
            if not isinstance(seed, int) or isinstance(seed, bool):
                return {"error": "reset requires an integer seed"}
            self.seed = seed
            obs = self.env.reset(seed=seed)
            self.needs_reset = False
            return {"obs": obs, "reward": 0.0, "done": False}
        if cmd == "step":
            if self.needs_reset:
                return {"error": "step requires a reset first (episode finished "
                                 "or never started)"}
            action = message.get("action")
            if (not isinstance(action, list)
                    or len(action) != self.env.act_dim
                    or not all(isinstance(a, (int, float)) and not isinstance(a, bool)
                               for a in action)):
                return {"error": f"step requires an action list of "
                                 f"{self.env.act_dim} numbers"}
            obs, reward, done = self.env.step([float(a) for a in action])
            if done:
                self.needs_reset = True
            return {"obs": obs, "reward": reward, "done": done}
        return {"error": f"unknown command {cmd!r}"}


def serve_streams(env_id: str, rfile, wfile) -> None:
    """Answer protocol messages on a stream pair until EOF."""

    def reply(payload: dict) -> None:
        wfile.write(json.dumps(payload) + "\n")
        wfile.flush()

    try:
        session = BridgeSession(env_id)
    except UnknownEnvironment as exc:
        line = rfile.readline()
        if line:
            reply({"error": str(exc)})
        return
    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
            if not isinstance(message, dict):
                raise ValueError("message must be a JSON object")
        except ValueError as exc:
            reply({"error": f"malformed JSON: {exc}"})
            continue
        reply(session.handle(message))


class BridgeServer:
    """Blocking TCP server; one connection at a time, served to EOF."""

    def __init__(self, env_id: str, host: str = "127.0.0.1", port: int = 0):
        self.env_id = env_id
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(1)
        self._sock.settimeout(0.2)
        self._stop = threading.Event()

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def serve_forever(self) -> None:
        try:
            while not self._stop.is_set():
                try:
                    conn, _ = self._sock.accept()
                except socket.timeout:
                    continue
                conn.settimeout(None)  # the accept timeout must not leak in
                with conn:
                    rfile = conn.makefile("r", encoding="utf-8")
                    wfile = conn.makefile("w", encoding="utf-8")
                    try:
                        serve_streams(self.env_id, rfile, wfile)
                    except (BrokenPipeError, ConnectionResetError):
                        pass
                    finally:
                        for fh in (rfile, wfile):
                            try:
                                fh.close()
                            except OSError:
                                pass
        finally:
            self._sock.close()

    def shutdown(self) -> None:
        self._stop.set()


def serve(env_id: str, port: int, host: str = "127.0.0.1") -> None:
    """Run the TCP bridge until interrupted."""
    server = BridgeServer(env_id, host=host, port=port)
    print(f"serving {env_id} on {host}:{server.port}", file=sys.stderr, flush=True)
    server.serve_forever()


def serve_stdio(env_id: str) -> None:
    """Answer the protocol on stdin/stdout (one session, then exit)."""
    serve_streams(env_id, sys.stdin, sys.stdout)
