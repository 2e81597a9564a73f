"""Host environment resolution.

Ids resolve against the built-in registry first, then against gymnasium if
it is installed (which is how the standard MuJoCo tasks are served). Every
host environment exposes the minimal surface the protocol needs: dims,
bounds, seeded reset, and step returning (obs, reward, done).
"""

from __future__ import annotations

import numpy as np


class UnknownEnvironment(ValueError):
    pass


class BuiltinPendulum:
    """Classic torque-limited pendulum swing-up, 200-step episodes.

    Shipped so the bridge is usable and testable on hosts without a
    simulator stack installed.
    """

    obs_dim = 3
    act_dim = 1

    def __init__(self):
        self.act_low = [-2.0]
        self.act_high = [2.0]
        self._th = 0.0
        self._thdot = 0.0
        self._t = 0

    def reset(self, seed: int):
        rng = np.random.default_rng(seed)
        self._th = float(rng.uniform(-np.pi, np.pi))
        self._thdot = float(rng.uniform(-1.0, 1.0))
        self._t = 0
        return self._obs()

    def _obs(self):
        return [float(np.cos(self._th)), float(np.sin(self._th)), self._thdot]

    def step(self, action):
        u = float(np.clip(action[0], -2.0, 2.0))
        wrapped = ((self._th + np.pi) % (2.0 * np.pi)) - np.pi
        reward = -(wrapped ** 2 + 0.1 * self._thdot ** 2 + 0.001 * u ** 2)
        thdot = self._thdot + (15.0 * np.sin(self._th) + 3.0 * u) * 0.05
        self._thdot = float(np.clip(thdot, -8.0, 8.0))
        self._th = self._th + self._thdot * 0.05
        self._t += 1
        return self._obs(), float(reward), self._t >= 200


BUILTIN = {"BuiltinPendulum-v0": BuiltinPendulum}


class GymnasiumEnv:
    """Adapter for any gymnasium-registered environment."""

    def __init__(self, env_id: str):
        import gymnasium

        self._env = gymnasium.make(env_id)
        space = self._env.observation_space
        self.obs_dim = int(np.prod(space.shape))
        self.act_dim = int(np.prod(self._env.action_space.shape))
        self.act_low = np.asarray(self._env.action_space.low, dtype=float).ravel().tolist()
        self.act_high = np.asarray(self._env.action_space.high, dtype=float).ravel().tolist()

    def reset(self, seed: int):
        obs, _ = self._env.reset(seed=seed)
        return np.asarray(obs, dtype=float).ravel().tolist()

    def step(self, action):
        obs, reward, terminated, truncated, _ = self._env.step(np.asarray(action))
        return (np.asarray(obs, dtype=float).ravel().tolist(), float(reward),
                bool(terminated or truncated))


def resolve(env_id: str):
    """Instantiate a host environment for the id, or raise UnknownEnvironment."""
    if env_id in BUILTIN:
        return BUILTIN[env_id]()
    try:
        import gymnasium  # noqa: F401
    except ImportError:
        raise UnknownEnvironment(
            f"unknown environment id {env_id!r}; built-ins: {sorted(BUILTIN)} "
            f"(gymnasium is not installed)")
    try:
        return GymnasiumEnv(env_id)
    except Exception as exc:
        raise UnknownEnvironment(f"cannot build environment {env_id!r}: {exc}")
