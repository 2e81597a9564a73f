import io
import json

import numpy as np
import pytest

from lutpolicy.envs import BridgeEnv, PendulumEnv, PointMassEnv, make_env
from lutpolicy.errors import ProtocolError


class TestPendulum:
    def test_upright_zero_reward(self):
        env = PendulumEnv()
        env.reset(seed=0)
        env._th, env._thdot = 0.0, 0.0
        _, reward, _ = env.step(np.array([0.0]))
        assert reward == 0.0

    def test_hanging_reward_is_minus_pi_squared(self):
        env = PendulumEnv()
        env.reset(seed=0)
        env._th, env._thdot = np.pi, 0.0
        _, reward, _ = env.step(np.array([0.0]))
        assert reward == pytest.approx(-np.pi ** 2)

    def test_speed_clamped(self):
        env = PendulumEnv()
        env.reset(seed=1)
        for _ in range(300):
            obs, _, done = env.step(np.array([2.0]))
            assert abs(obs[2]) <= 8.0
            if done:
                env.reset(seed=2)

    def test_episode_length(self):
        env = PendulumEnv()
        env.reset(seed=3)
        steps = 0
        done = False
        while not done:
            _, _, done = env.step(np.array([0.5]))
            steps += 1
        assert steps == 200

    def test_seeded_determinism(self):
        a, b = PendulumEnv(), PendulumEnv()
        oa, ob = a.reset(seed=42), b.reset(seed=42)
        np.testing.assert_array_equal(oa, ob)
        for i in range(50):
            action = np.array([np.sin(i)])
            ra, rb = a.step(action), b.step(action)
            np.testing.assert_array_equal(ra[0], rb[0])
            assert ra[1] == rb[1]

    def test_torque_cost(self):
        env = PendulumEnv()
        env.reset(seed=0)
        env._th, env._thdot = 0.0, 0.0
        _, reward, _ = env.step(np.array([2.0]))
        assert reward == pytest.approx(-0.001 * 4.0)


class TestPointMass:
    def test_episode_length(self):
        env = PointMassEnv()
        env.reset(seed=0)
        steps = 0
        done = False
        while not done:
            _, _, done = env.step(np.zeros(2))
            steps += 1
        assert steps == 150

    def test_reward_improves_under_pull_toward_origin(self):
        env = PointMassEnv()
        obs = env.reset(seed=5)
        first = None
        for _ in range(150):
            action = -np.sign(obs[:2])
            obs, reward, done = env.step(action)
            if first is None:
                first = reward
        assert reward > first


class _ScriptedBridge:
    """In-memory peer speaking the newline-delimited JSON protocol."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []
        self._buffer = io.StringIO()

    def write(self, data):
        self._buffer.write(data)

    def flush(self):
        pass

    def readline(self):
        self.requests.append(self._buffer.getvalue())
        self._buffer = io.StringIO()
        return self.replies.pop(0) if self.replies else ""


def make_bridge(replies):
    peer = _ScriptedBridge(replies)
    return BridgeEnv.from_streams(peer, peer), peer


SPEC_REPLY = json.dumps({"obs_dim": 3, "act_dim": 1,
                         "act_low": [-2.0], "act_high": [2.0]}) + "\n"


class TestBridgeClient:
    def test_spec_parsed(self):
        env, peer = make_bridge([SPEC_REPLY])
        assert env.obs_dim == 3 and env.act_dim == 1
        np.testing.assert_array_equal(env.action_low, [-2.0])
        assert json.loads(peer.requests[0]) == {"cmd": "spec"}

    def test_reset_and_step(self):
        env, peer = make_bridge([
            SPEC_REPLY,
            json.dumps({"obs": [1.0, 0.0, 0.5], "reward": 0.0, "done": False}) + "\n",
            json.dumps({"obs": [0.9, 0.1, 0.4], "reward": -1.5, "done": True}) + "\n",
        ])
        obs = env.reset(seed=7)
        np.testing.assert_array_equal(obs, [1.0, 0.0, 0.5])
        obs, reward, done = env.step(np.array([0.25]))
        assert reward == -1.5 and done
        assert json.loads(peer.requests[1]) == {"cmd": "reset", "seed": 7}
        assert json.loads(peer.requests[2]) == {"cmd": "step", "action": [0.25]}

    def test_error_reply_raises(self):
        env, _ = make_bridge([SPEC_REPLY, json.dumps({"error": "no reset"}) + "\n"])
        with pytest.raises(ProtocolError, match="no reset"):
            env.step(np.array([0.0]))

    def test_malformed_json_raises(self):
        env, _ = make_bridge([SPEC_REPLY, "this is not json\n"])
        with pytest.raises(ProtocolError):
            env.reset(seed=0)

    def test_wrong_obs_length_raises(self):
        env, _ = make_bridge([
            SPEC_REPLY,
            json.dumps({"obs": [1.0], "reward": 0.0, "done": False}) + "\n"])
        with pytest.raises(ProtocolError):
            env.reset(seed=0)

    def test_eof_raises(self):
        env, _ = make_bridge([SPEC_REPLY])
        with pytest.raises(ProtocolError, match="closed"):
            env.reset(seed=0)

    def test_bad_spec_raises(self):
        with pytest.raises(ProtocolError):
            make_bridge([json.dumps({"obs_dim": 3}) + "\n"])


class TestMakeEnv:
    def test_builtins(self):
        assert isinstance(make_env("pendulum"), PendulumEnv)
        assert isinstance(make_env("pointmass"), PointMassEnv)

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown environment"):
            make_env("mars-rover")

    def test_bad_bridge_address(self):
        with pytest.raises(ValueError, match="bridge://host:port"):
            make_env("bridge://nope")
