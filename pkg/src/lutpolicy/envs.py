"""Built-in desk-scale control environments and the bridge client.

Environments are deterministic given the reset seed and the action sequence.
`step` reports done at episode end (the built-ins only ever end by time
limit, which matters for bootstrapping; see `time_limit_only`).
"""

from __future__ import annotations

import json
import socket

import numpy as np

from .errors import ProtocolError


class PendulumEnv:
    """Torque-limited swing-up of a single pendulum.

    Dynamics and reward follow the classic formulation: gravity 10, unit
    mass and length, dt 0.05, 200-step episodes, angular velocity clamped
    to [-8, 8]. Reward is -(wrapped_angle^2 + 0.1 * thdot^2 +
    0.001 * torque^2); the observation is (cos th, sin th, thdot).
    """

    obs_dim = 3
    act_dim = 1
    max_episode_steps = 200
    time_limit_only = True

    def __init__(self):
        self.action_low = np.array([-2.0])
        self.action_high = np.array([2.0])
        self._th = 0.0
        self._thdot = 0.0
        self._t = 0

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._th = rng.uniform(-np.pi, np.pi)
        self._thdot = rng.uniform(-1.0, 1.0)
        self._t = 0
        return self._obs()

    def _obs(self) -> np.ndarray:
        return np.array([np.cos(self._th), np.sin(self._th), self._thdot])

    def step(self, action):
        u = float(np.clip(np.asarray(action).ravel()[0], -2.0, 2.0))
        th, thdot = self._th, self._thdot
        wrapped = ((th + np.pi) % (2.0 * np.pi)) - np.pi
        reward = -(wrapped ** 2 + 0.1 * thdot ** 2 + 0.001 * u ** 2)
        g, m, length, dt = 10.0, 1.0, 1.0, 0.05
        thdot = thdot + (3.0 * g / (2.0 * length) * np.sin(th)
                         + 3.0 / (m * length ** 2) * u) * dt
        thdot = float(np.clip(thdot, -8.0, 8.0))
        th = th + thdot * dt
        self._th, self._thdot = th, thdot
        self._t += 1
        return self._obs(), reward, self._t >= self.max_episode_steps


class PointMassEnv:
    """2-D point mass pushed toward the origin by bounded forces.

    State is (position, velocity); forces in [-1, 1]^2 with linear drag.
    Reward penalizes squared distance to the target plus a small action
    cost. 150-step episodes.
    """

    obs_dim = 4
    act_dim = 2
    max_episode_steps = 150
    time_limit_only = True

    def __init__(self):
        self.action_low = np.array([-1.0, -1.0])
        self.action_high = np.array([1.0, 1.0])
        self._pos = np.zeros(2)
        self._vel = np.zeros(2)
        self._t = 0

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._pos = rng.uniform(-1.0, 1.0, size=2)
        self._vel = np.zeros(2)
        self._t = 0
        return self._obs()

    def _obs(self) -> np.ndarray:
        return np.concatenate([self._pos, self._vel])

    def step(self, action):
        a = np.clip(np.asarray(action, dtype=np.float64).ravel(), -1.0, 1.0)
        dt, drag = 0.1, 0.5
        reward = -(float(self._pos @ self._pos) + 0.01 * float(a @ a))
        self._vel = self._vel + (a - drag * self._vel) * dt
        self._pos = self._pos + self._vel * dt
        self._t += 1
        return self._obs(), reward, self._t >= self.max_episode_steps


class BridgeEnv:
    """Client for an out-of-process environment speaking line-delimited JSON.

    Requests: {"cmd":"spec"}, {"cmd":"reset","seed":int},
    {"cmd":"step","action":[floats]}. A malformed or error reply raises
    ProtocolError and aborts training.
    """

    time_limit_only = False

    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))
        self._rfile = self._sock.makefile("r", encoding="utf-8")
        self._wfile = self._sock.makefile("w", encoding="utf-8")
        self._load_spec()

    @classmethod
    def from_streams(cls, rfile, wfile) -> "BridgeEnv":
        env = cls.__new__(cls)
        env._sock = None
        env._rfile = rfile
        env._wfile = wfile
        env._load_spec()
        return env

    def _load_spec(self):
        reply = self._request({"cmd": "spec"})
        try:
            self.obs_dim = int(reply["obs_dim"])
            self.act_dim = int(reply["act_dim"])
            self.action_low = np.asarray(reply["act_low"], dtype=np.float64)
            self.action_high = np.asarray(reply["act_high"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"invalid spec reply: {reply!r}") from exc
        if self.action_low.shape != (self.act_dim,) or self.action_high.shape != (self.act_dim,):
            raise ProtocolError(f"action bounds do not match act_dim in {reply!r}")
        self.max_episode_steps = None

    def _request(self, message: dict) -> dict:
        self._wfile.write(json.dumps(message) + "\n")
        self._wfile.flush()
        line = self._rfile.readline()
        if not line:
            raise ProtocolError("bridge closed the connection")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"bridge sent invalid JSON: {line!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"bridge reply is not an object: {reply!r}")
        if "error" in reply:
            raise ProtocolError(f"bridge error: {reply['error']}")
        return reply

    def _parse_step(self, reply: dict):
        try:
            obs = np.asarray(reply["obs"], dtype=np.float64)
            reward = float(reply["reward"])
            done = bool(reply["done"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"invalid step reply: {reply!r}") from exc
        if obs.shape != (self.obs_dim,):
            raise ProtocolError(f"observation length {obs.shape} != spec obs_dim {self.obs_dim}")
        return obs, reward, done

    def reset(self, seed: int) -> np.ndarray:
        obs, _, _ = self._parse_step(self._request({"cmd": "reset", "seed": int(seed)}))
        return obs

    def step(self, action):
        action = np.asarray(action, dtype=np.float64).ravel()
        return self._parse_step(self._request({"cmd": "step", "action": action.tolist()}))

    def close(self):
        if self._sock is not None:
            self._sock.close()


BUILTIN_ENVS = {
    "pendulum": PendulumEnv,
    "pointmass": PointMassEnv,
}


def make_env(selector: str):
    """Instantiate a built-in environment or connect to a bridge address
    of the form bridge://host:port."""
    if selector in BUILTIN_ENVS:
        return BUILTIN_ENVS[selector]()
    if selector.startswith("bridge://"):
        hostport = selector[len("bridge://"):]
        host, _, port = hostport.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"bridge address must be bridge://host:port, got {selector!r}")
        return BridgeEnv(host, int(port))
    raise ValueError(f"unknown environment selector {selector!r}; "
                     f"built-ins: {sorted(BUILTIN_ENVS)}")
