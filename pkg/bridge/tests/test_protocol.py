"""Protocol conformance: a scripted client against a live TCP server."""

import json
import socket
import threading

import pytest

from envbridge.server import BridgeServer


class ScriptedClient:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.rfile = self.sock.makefile("r", encoding="utf-8")
        self.wfile = self.sock.makefile("w", encoding="utf-8")

    def send_line(self, text):
        self.wfile.write(text + "\n")
        self.wfile.flush()
        return self.rfile.readline()

    def request(self, message):
        line = self.send_line(json.dumps(message))
        assert line.endswith("\n"), "reply must be a complete JSON line"
        return json.loads(line)

    def close(self):
        self.sock.close()


@pytest.fixture
def server():
    srv = BridgeServer("BuiltinPendulum-v0", port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    thread.join(timeout=5)


@pytest.fixture
def client(server):
    c = ScriptedClient(server.port)
    yield c
    c.close()


class TestConformance:
    def test_spec_reset_step_done_error(self, client):
        spec = client.request({"cmd": "spec"})
        assert spec == {"obs_dim": 3, "act_dim": 1,
                        "act_low": [-2.0], "act_high": [2.0]}

        reset = client.request({"cmd": "reset", "seed": 11})
        assert len(reset["obs"]) == 3
        assert reset["reward"] == 0.0 and reset["done"] is False

        done = False
        steps = 0
        while not done:
            reply = client.request({"cmd": "step", "action": [0.5]})
            assert set(reply) == {"obs", "reward", "done"}
            assert len(reply["obs"]) == 3 and isinstance(reply["reward"], float)
            done = reply["done"]
            steps += 1
        assert steps == 200

        after_done = client.request({"cmd": "step", "action": [0.0]})
        assert "error" in after_done

    def test_seeded_resets_reproduce_observations(self, client):
        client.request({"cmd": "spec"})
        first = client.request({"cmd": "reset", "seed": 1234})
        client.request({"cmd": "step", "action": [1.0]})
        again = client.request({"cmd": "reset", "seed": 1234})
        assert again["obs"] == first["obs"]
        other = client.request({"cmd": "reset", "seed": 99})
        assert other["obs"] != first["obs"]

    def test_step_before_reset_is_error(self, client):
        assert "error" in client.request({"cmd": "step", "action": [0.0]})

    def test_malformed_json_gets_error_reply(self, client):
        reply = json.loads(client.send_line("{not json"))
        assert "error" in reply
        # the connection stays usable afterwards
        assert "obs_dim" in client.request({"cmd": "spec"})

    def test_unknown_command(self, client):
        assert "error" in client.request({"cmd": "dance"})

    def test_bad_action_shape(self, client):
        client.request({"cmd": "reset", "seed": 0})
        assert "error" in client.request({"cmd": "step", "action": [0.0, 1.0]})
        assert "error" in client.request({"cmd": "step", "action": "left"})

    def test_bad_seed(self, client):
        assert "error" in client.request({"cmd": "reset", "seed": "tuesday"})

    def test_replies_are_single_json_lines(self, client):
        for message in ({"cmd": "spec"}, {"cmd": "reset", "seed": 0},
                        {"cmd": "step", "action": [0.1]}):
            raw = client.send_line(json.dumps(message))
            assert raw.count("\n") == 1
            json.loads(raw)


class TestServerLifecycle:
    def test_sequential_connections(self, server):
        for _ in range(2):
            c = ScriptedClient(server.port)
            assert "obs_dim" in c.request({"cmd": "spec"})
            c.close()

    def test_unknown_env_id_error_then_close(self):
        srv = BridgeServer("NoSuchEnv-v9", port=0)
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        try:
            c = ScriptedClient(srv.port)
            reply = c.request({"cmd": "spec"})
            assert "error" in reply and "NoSuchEnv-v9" in reply["error"]
            assert c.rfile.readline() == ""  # server closed the connection
            c.close()
        finally:
            srv.shutdown()
            thread.join(timeout=5)

    def test_hopper_spec_when_simulator_available(self):
        gymnasium = pytest.importorskip("gymnasium")
        try:
            gymnasium.make("Hopper-v4")
        except Exception:
            pytest.skip("mujoco not installed")
        from envbridge.envs import resolve

        env = resolve("Hopper-v4")
        assert env.act_dim == 3 and env.obs_dim == 11
