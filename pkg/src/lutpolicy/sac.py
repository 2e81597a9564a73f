"""Soft actor-critic training for LUT policies.

Only the policy network is a LUT circuit; the twin critics and the
exploration-scale head stay floating point and are never deployed. The
update rule follows the standard off-policy recipe: clipped double-Q
targets with entropy bonus, reparameterized tanh-Gaussian policy updates
every `policy_frequency` steps, automatic entropy-coefficient tuning toward
a target entropy of -act_dim, and Polyak-averaged target critics.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    def threadpool_limits(limits=None):
        return contextlib.nullcontext()

from .config import RunConfig, RunRecord, Stopwatch
from .encoding import CLIP_HI, CLIP_LO
from .envs import make_env
from .errors import ConfigError, ShapeError, TrainingDiverged
from .lutnet import LutPolicy, PolicyConfig, init_policy
from .mlp import Adam, Mlp, polyak_update

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6


@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling over the filled part."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, act_dim))
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action, reward, next_obs, done) -> None:
        i = self.cursor
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int) -> dict:
        idx = rng.integers(0, self.size, size=batch_size)
        return {"obs": self.obs[idx], "actions": self.actions[idx],
                "rewards": self.rewards[idx], "next_obs": self.next_obs[idx],
                "dones": self.dones[idx]}


class ExplorationHead:
    """Observation-conditioned log standard deviations for action sampling.

    A small ReLU network whose raw output is squashed smoothly into
    [LOG_STD_MIN, LOG_STD_MAX], so sigma stays positive and bounded.
    """

    def __init__(self, obs_dim: int, act_dim: int, rng: np.random.Generator,
                 hidden: int = 64):
        self.net = Mlp([obs_dim, hidden, hidden, act_dim], rng)

    def log_std(self, normalized_obs: np.ndarray, cache: list | None = None) -> np.ndarray:
        raw = self.net.forward(normalized_obs, cache=cache)
        return LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (np.tanh(raw) + 1.0)

    def backward(self, cache: list, d_log_std: np.ndarray) -> dict:
        raw = cache[-1]
        d_raw = d_log_std * 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (1.0 - np.tanh(raw) ** 2)
        grads, _ = self.net.backward(cache, d_raw)
        return grads


class MlpBaselinePolicy:
    """Floating-point actor trunk with the same surface the trainer needs.

    Consumes the same normalized observations as the LUT policy, so the two
    can be trained under an identical protocol and compared directly.
    """

    def __init__(self, stats, d_in: int, d_act: int, rng: np.random.Generator,
                 hidden: int = 256):
        self.stats = stats
        self.d_in = d_in
        self.d_act = d_act
        self.net = Mlp([d_in, hidden, hidden, d_act], rng)
        self.mode = "relaxed"
        self._cache = None

    def set_mode(self, mode: str) -> None:
        if mode != "relaxed":
            raise ConfigError("the floating-point baseline has no hard mode")

    def normalize(self, obs):
        from .encoding import normalize_clip
        return normalize_clip(obs, self.stats)

    def logits_relaxed(self, normalized, needs_grad: bool = False):
        cache = [] if needs_grad else None
        out = self.net.forward(normalized, cache=cache)
        self._cache = cache
        return out

    def logits(self, normalized, needs_grad: bool = False):
        return self.logits_relaxed(normalized, needs_grad=needs_grad)

    def squash(self, logits):
        return np.tanh(logits)

    def backward(self, d_logits) -> dict:
        grads, _ = self.net.backward(self._cache, d_logits)
        return {f"actor.{k}": v for k, v in grads.items()}

    def parameters(self) -> list:
        return [(f"actor.{k}", v) for k, v in self.net.parameters().items()]


def _policy_grads_dict(policy, grads) -> dict:
    if isinstance(policy, MlpBaselinePolicy):
        return grads
    return policy.gradients_as_dict(grads)


class SacTrainer:
    """Owns all learnable state for one training run."""

    def __init__(self, policy, env, cfg: RunConfig, rng: np.random.Generator):
        self.policy = policy
        self.env = env
        self.cfg = cfg
        self.rng = rng
        obs_dim, act_dim = env.obs_dim, env.act_dim
        self.action_scale = (env.action_high - env.action_low) / 2.0
        self.action_bias = (env.action_high + env.action_low) / 2.0
        self.q1 = Mlp([obs_dim + act_dim, 256, 256, 1], rng)
        self.q2 = Mlp([obs_dim + act_dim, 256, 256, 1], rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.exploration = ExplorationHead(obs_dim, act_dim, rng)
        self.buffer = ReplayBuffer(cfg.buffer_size, obs_dim, act_dim)
        q_params = {f"q1.{k}": v for k, v in self.q1.parameters().items()}
        q_params.update({f"q2.{k}": v for k, v in self.q2.parameters().items()})
        self.q_opt = Adam(q_params, lr=cfg.q_lr)
        actor_params = dict(policy.parameters())
        actor_params.update({f"sigma.{k}": v for k, v in self.exploration.net.parameters().items()})
        self.actor_opt = Adam(actor_params, lr=cfg.policy_lr)
        self.target_entropy = -float(act_dim)
        self.log_alpha = np.zeros(1)
        self.alpha = float(cfg.alpha) if not cfg.autotune else float(np.exp(self.log_alpha[0]))
        self.alpha_opt = Adam({"log_alpha": self.log_alpha}, lr=cfg.q_lr)

    # -- action sampling ---------------------------------------------------

    def sample_action(self, normalized_obs: np.ndarray):
        """Stochastic tanh-Gaussian action for one normalized observation."""
        mean = self.policy.logits(normalized_obs[None, :], needs_grad=False)[0]
        log_std = self.exploration.log_std(normalized_obs[None, :])[0]
        noise = self.rng.standard_normal(mean.shape)
        pre_squash = mean + np.exp(log_std) * noise
        return np.tanh(pre_squash) * self.action_scale + self.action_bias

    def _sample_with_logprob(self, mean, log_std, noise):
        sigma = np.exp(log_std)
        pre = mean + sigma * noise
        squashed = np.tanh(pre)
        env_action = squashed * self.action_scale + self.action_bias
        log_prob = (-0.5 * noise ** 2 - log_std - 0.5 * math.log(2.0 * math.pi)
                    - np.log(self.action_scale * (1.0 - squashed ** 2) + SQUASH_EPS))
        return pre, squashed, env_action, log_prob.sum(axis=1)

    # -- one gradient step ---------------------------------------------------

    def update(self, global_step: int):
        """One SAC update; returns the loss report or None when the buffer
        has not reached learning_starts yet."""
        cfg = self.cfg
        if len(self.buffer) < cfg.learning_starts:
            return None
        batch = self.buffer.sample(self.rng, cfg.batch_size)
        x = self.policy.normalize(batch["obs"])
        x_next = self.policy.normalize(batch["next_obs"])

        # TD target from target critics and fresh next actions
        mean_n = self.policy.logits(x_next, needs_grad=False)
        log_std_n = self.exploration.log_std(x_next)
        noise_n = self.rng.standard_normal(mean_n.shape)
        _, _, a_next, logp_next = self._sample_with_logprob(mean_n, log_std_n, noise_n)
        qin_next = np.concatenate([x_next, a_next], axis=1)
        q1_t = self.q1_target.forward(qin_next)[:, 0]
        q2_t = self.q2_target.forward(qin_next)[:, 0]
        soft_q = np.minimum(q1_t, q2_t) - self.alpha * logp_next
        y = batch["rewards"] + cfg.gamma * (1.0 - batch["dones"]) * soft_q

        qin = np.concatenate([x, batch["actions"]], axis=1)
        c1, c2 = [], []
        q1 = self.q1.forward(qin, cache=c1)[:, 0]
        q2 = self.q2.forward(qin, cache=c2)[:, 0]
        q1_loss = float(np.mean((q1 - y) ** 2))
        q2_loss = float(np.mean((q2 - y) ** 2))
        n = cfg.batch_size
        g1, _ = self.q1.backward(c1, (2.0 * (q1 - y) / n)[:, None])
        g2, _ = self.q2.backward(c2, (2.0 * (q2 - y) / n)[:, None])
        q_grads = {f"q1.{k}": v for k, v in g1.items()}
        q_grads.update({f"q2.{k}": v for k, v in g2.items()})
        self.q_opt.step(q_grads)

        report = {"q1_loss": q1_loss, "q2_loss": q2_loss, "alpha": self.alpha,
                  "policy_loss": None, "entropy": None}
        if global_step % cfg.policy_frequency == 0:
            # compensate the delayed schedule, one actor step per skipped step
            for _ in range(cfg.policy_frequency):
                report.update(self._actor_step(x))
        if global_step % cfg.target_network_frequency == 0:
            polyak_update(self.q1_target, self.q1, cfg.tau)
            polyak_update(self.q2_target, self.q2, cfg.tau)
        if not all(np.isfinite(v) for v in (q1_loss, q2_loss)):
            raise TrainingDiverged(f"critic loss became non-finite at step {global_step}")
        return report

    def _actor_step(self, x: np.ndarray) -> dict:
        cfg = self.cfg
        n = x.shape[0]
        mean = self.policy.logits_relaxed(x, needs_grad=True)
        sig_cache = []
        log_std = self.exploration.log_std(x, cache=sig_cache)
        noise = self.rng.standard_normal(mean.shape)
        pre, squashed, a_env, logp = self._sample_with_logprob(mean, log_std, noise)

        qin = np.concatenate([x, a_env], axis=1)
        c1, c2 = [], []
        q1 = self.q1.forward(qin, cache=c1)[:, 0]
        q2 = self.q2.forward(qin, cache=c2)[:, 0]
        use_q1 = (q1 <= q2)[:, None]
        policy_loss = float(np.mean(self.alpha * logp - np.minimum(q1, q2)))
        if not np.isfinite(policy_loss):
            raise TrainingDiverged("policy loss became non-finite")

        # d(-mean qmin)/d a_env, routed through whichever critic was the min
        _, dqin1 = self.q1.backward(c1, np.full((n, 1), -1.0 / n) * use_q1)
        _, dqin2 = self.q2.backward(c2, np.full((n, 1), -1.0 / n) * ~use_q1)
        d_aenv = (dqin1 + dqin2)[:, x.shape[1]:]

        # log-prob terms: d logp / d pre, d logp / d log_std (reparameterized)
        dsquash = 1.0 - squashed ** 2
        c_term = 2.0 * self.action_scale * squashed * dsquash / \
            (self.action_scale * dsquash + SQUASH_EPS)
        d_pre = d_aenv * self.action_scale * dsquash + (self.alpha / n) * c_term
        sigma_noise = np.exp(log_std) * noise
        d_log_std = d_pre * sigma_noise + (self.alpha / n) * (-1.0)
        d_mean = d_pre

        actor_grads = _policy_grads_dict(self.policy, self.policy.backward(d_mean))
        sig_grads = self.exploration.backward(sig_cache, d_log_std)
        actor_grads.update({f"sigma.{k}": v for k, v in sig_grads.items()})
        self.actor_opt.step(actor_grads)

        report = {"policy_loss": policy_loss, "entropy": float(-np.mean(logp))}
        if cfg.autotune:
            # fresh log-probs at the updated policy, as in the reference recipe
            mean2 = self.policy.logits(x, needs_grad=False)
            log_std2 = self.exploration.log_std(x)
            noise2 = self.rng.standard_normal(mean2.shape)
            _, _, _, logp2 = self._sample_with_logprob(mean2, log_std2, noise2)
            report.update(self._alpha_step(logp2))
        return report

    def _alpha_step(self, logp: np.ndarray) -> dict:
        """Tune the entropy coefficient toward the target entropy.

        When measured entropy (-mean logp) falls below the target, the
        gradient is negative, so the coefficient rises on the next step."""
        gap = float(np.mean(logp) + self.target_entropy)
        alpha_loss = -np.exp(self.log_alpha[0]) * gap
        d_log_alpha = -np.exp(self.log_alpha[0]) * gap
        self.alpha_opt.step({"log_alpha": np.array([d_log_alpha])})
        self.alpha = float(np.exp(self.log_alpha[0]))
        return {"alpha_loss": float(alpha_loss), "alpha": self.alpha}


def rollout_episode(env, policy, exploration, rng: np.random.Generator, seed: int,
                    stats=None, action_scale=None, action_bias=None):
    """One stochastic episode; updates running stats per observation.

    Actions are tanh(mean + sigma * xi) scaled to the environment bounds;
    passing exploration=None plays the deterministic mean action.
    """
    if action_scale is None:
        action_scale = (env.action_high - env.action_low) / 2.0
        action_bias = (env.action_high + env.action_low) / 2.0
    stats = stats if stats is not None else policy.stats
    transitions = []
    obs = env.reset(seed=seed)
    if not stats.frozen:
        stats.update(obs)
    done = False
    while not done:
        xhat = policy.normalize(obs)
        mean = policy.logits(xhat[None, :], needs_grad=False)[0]
        if exploration is not None:
            sigma = np.exp(exploration.log_std(xhat[None, :])[0])
            mean = mean + sigma * rng.standard_normal(mean.shape)
        action = np.tanh(mean) * action_scale + action_bias
        next_obs, reward, done = env.step(action)
        if not stats.frozen:
            stats.update(next_obs)
        transitions.append(Transition(obs=obs, action=action, reward=reward,
                                      next_obs=next_obs, done=done))
        obs = next_obs
    return transitions


def evaluate(policy, env, episodes: int, noise_sigma: float = 0.0,
             seed: int = 0, mode: str | None = None):
    """Deterministic evaluation; optional Gaussian observation noise.

    Noise is injected into the normalized observation (after clipping,
    before encoding), then re-clipped to the normalization range. Returns
    (mean return, std over episodes, per-episode list).
    """
    if noise_sigma < 0:
        raise ConfigError("noise_sigma must be >= 0")
    old_mode = getattr(policy, "mode", None)
    if mode is not None:
        policy.set_mode(mode)
    rng = np.random.default_rng(seed)
    scale = (env.action_high - env.action_low) / 2.0
    bias = (env.action_high + env.action_low) / 2.0
    returns = []
    try:
        for _ in range(episodes):
            ep_seed = int(rng.integers(0, 2 ** 31 - 1))
            obs = env.reset(seed=ep_seed)
            total = 0.0
            done = False
            while not done:
                xhat = policy.normalize(obs)
                if noise_sigma > 0.0:
                    xhat = np.clip(xhat + noise_sigma * rng.standard_normal(xhat.shape),
                                   CLIP_LO, CLIP_HI)
                action = policy.squash(policy.logits(xhat))
                obs, reward, done = env.step(action * scale + bias)
                total += reward
            returns.append(total)
    finally:
        if mode is not None and old_mode is not None:
            policy.set_mode(old_mode)
    arr = np.asarray(returns)
    return float(arr.mean()), float(arr.std()), returns


def build_policy(cfg: RunConfig, env, rng: np.random.Generator):
    if cfg.policy == "mlp":
        from .encoding import RunningStats
        return MlpBaselinePolicy(RunningStats.for_dim(env.obs_dim), env.obs_dim,
                                 env.act_dim, rng)
    shape = PolicyConfig(n_layers=cfg.n_layers, width=cfg.width, arity=cfg.arity,
                         bits=cfg.bits, alpha_p_init=cfg.alpha_p_init,
                         trainable_interconnect=tuple(cfg.interconnect_flags()),
                         gradient_backend=cfg.gradient_backend)
    policy = init_policy(env.obs_dim, env.act_dim, shape, seed=cfg.seed)
    policy.head.beta[:] = cfg.beta_init
    return policy


def _eval_mode(policy) -> str | None:
    return "hard" if isinstance(policy, LutPolicy) else None


def train(cfg: RunConfig, progress=None):
    """Full training run; returns (policy, RunRecord).

    The entire run is a pure function of the configuration (which includes
    the seed). Deterministic checkpoint evaluations run every `eval_every`
    steps in deployment (hard) mode for LUT policies.
    """
    cfg.validate()
    with threadpool_limits(limits=1):
        # the update loop is many small matmuls and fused kernels; BLAS
        # thread pools only add contention at these sizes
        return _train_inner(cfg, progress)


def _train_inner(cfg: RunConfig, progress):
    watch = Stopwatch()
    # one connection serves both training and evaluation (the bridge pairs
    # one environment with one connection), so checkpoints reset the episode
    env = make_env(cfg.env)
    rng = np.random.default_rng(cfg.seed)
    policy = build_policy(cfg, env, rng)
    trainer = SacTrainer(policy, env, cfg, rng)
    record = RunRecord(config=cfg.to_dict())
    eval_seed = int(np.random.default_rng(cfg.seed + 1).integers(0, 2 ** 31 - 1))

    obs = env.reset(seed=int(rng.integers(0, 2 ** 31 - 1)))
    policy.stats.update(obs)
    span = env.action_high - env.action_low
    for step in range(cfg.total_steps):
        if step < cfg.learning_starts or policy.stats.count < 2:
            action = env.action_low + span * rng.uniform(size=env.act_dim)
        else:
            action = trainer.sample_action(policy.normalize(obs))
        next_obs, reward, done = env.step(action)
        policy.stats.update(next_obs)
        # time-limit endings must still bootstrap, so they store done=False
        done_for_td = done and not getattr(env, "time_limit_only", False)
        trainer.buffer.add(obs, action, reward, next_obs, done_for_td)
        obs = next_obs
        if done:
            obs = env.reset(seed=int(rng.integers(0, 2 ** 31 - 1)))
            policy.stats.update(obs)
        trainer.update(global_step=step)
        if (step + 1) % cfg.eval_every == 0:
            mean, std, _ = evaluate(policy, env, cfg.eval_episodes,
                                    seed=eval_seed, mode=_eval_mode(policy))
            record.add_checkpoint(step + 1, mean, std)
            if progress is not None:
                progress(step + 1, mean, std)
            obs = env.reset(seed=int(rng.integers(0, 2 ** 31 - 1)))
            policy.stats.update(obs)

    policy.stats.freeze()
    if policy.stats.count >= 2:
        mean, std, per_episode = evaluate(policy, env, cfg.eval_episodes,
                                          seed=eval_seed, mode=_eval_mode(policy))
        record.final_eval = {"mean": mean, "std": std, "episodes": per_episode}
    record.wall_clock_s = watch.elapsed()
    return policy, record
