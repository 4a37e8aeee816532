"""Multi-objective soft actor-critic with extended reward/preference vectors.

Vectors carry ``m + 1`` slots. Slot 0 of a reward is the entropy / log
normalizer channel, slot 0 of a preference is the constant 1. The policy and
both critics see the conditioning vector concatenated to the observation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .nn import DTYPE, Adam, Mlp, polyak_update, squashed_gaussian_grads, squashed_gaussian_sample


def extend_preference(w) -> np.ndarray:
    """(w_1..w_m) -> (1, w_1..w_m) along the last axis."""
    w = np.asarray(w)
    ones = np.ones(w.shape[:-1] + (1,), dtype=w.dtype)
    return np.concatenate([ones, w], axis=-1)


def entropy_vector(log_prob, alpha: float, reward_dim: int) -> np.ndarray:
    """h = (-alpha * log pi, 0, ..., 0) with ``reward_dim + 1`` slots."""
    log_prob = np.asarray(log_prob)
    h = np.zeros(log_prob.shape + (reward_dim + 1,), dtype=log_prob.dtype)
    h[..., 0] = -alpha * log_prob
    return h


def scalarize(w_ext, v) -> np.ndarray:
    """Linear scalarization w_ext . v over the last axis."""
    w_ext = np.asarray(w_ext)
    v = np.asarray(v)
    if w_ext.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: preference {w_ext.shape[-1]}, value {v.shape[-1]}")
    return np.sum(w_ext * v, axis=-1)


@dataclass
class Batch:
    """A minibatch of transitions.

    ``w`` is the conditioning vector fed to the networks and ``w_ext`` the
    extended scalarization preference; for continuous skills ``w_ext`` is
    ``(1, w)``. ``reward`` is attached at update time.
    """

    w: np.ndarray
    obs: np.ndarray
    act: np.ndarray
    next_obs: np.ndarray
    t: np.ndarray
    done: np.ndarray
    w_ext: np.ndarray | None = None
    reward: np.ndarray | None = None
    index: np.ndarray | None = None

    def __len__(self) -> int:
        return self.obs.shape[0]

    def with_(self, **changes) -> "Batch":
        return replace(self, **changes)


def concat_batches(batches) -> Batch:
    fields = ("w", "obs", "act", "next_obs", "t", "done", "w_ext", "reward", "index")
    out = {}
    for name in fields:
        parts = [getattr(b, name) for b in batches]
        out[name] = None if any(p is None for p in parts) else np.concatenate(parts, axis=0)
    return Batch(**out)


class ReplayBuffer:
    """FIFO ring buffer of transitions with uniform sampling with replacement.

    Each entry also records the global step at which it was inserted, so the
    "recent window" sampler can select by age.
    """

    def __init__(self, capacity: int, obs_dim: int, act_dim: int, cond_dim: int):
        self.capacity = int(capacity)
        self.w = np.zeros((self.capacity, cond_dim), DTYPE)
        self.obs = np.zeros((self.capacity, obs_dim), DTYPE)
        self.act = np.zeros((self.capacity, act_dim), DTYPE)
        self.next_obs = np.zeros((self.capacity, obs_dim), DTYPE)
        self.t = np.zeros(self.capacity, np.int64)
        self.done = np.zeros(self.capacity, bool)
        self.step = np.zeros(self.capacity, np.int64)
        self.cursor = 0
        self.size = 0
        self.n_pushed = 0

    def __len__(self) -> int:
        return self.size

    def push(self, w, obs, act, next_obs, t: int, done: bool) -> None:
        i = self.cursor
        self.w[i] = w
        self.obs[i] = obs
        self.act[i] = act
        self.next_obs[i] = next_obs
        self.t[i] = t
        self.done[i] = done
        self.step[i] = self.n_pushed
        self.n_pushed += 1
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def gather(self, idx) -> Batch:
        return Batch(w=self.w[idx], obs=self.obs[idx], act=self.act[idx], next_obs=self.next_obs[idx],
                     t=self.t[idx], done=self.done[idx], index=np.asarray(idx))

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        return self.gather(rng.integers(0, self.size, size=n))

    def recent_indices(self, window: int, now: int | None = None) -> np.ndarray:
        """Slots whose entries are at most ``window`` insertions old relative to ``now``."""
        now = self.n_pushed if now is None else now
        age = now - self.step[:self.size]
        return np.flatnonzero(age <= window)

    def sample_recent(self, n: int, rng: np.random.Generator, window: int, now: int | None = None) -> Batch:
        idx = self.recent_indices(window, now)
        if idx.size == 0:
            raise ValueError(f"no transitions within the last {window} steps")
        return self.gather(idx[rng.integers(0, idx.size, size=n)])

    def state_tensors(self):
        n = self.size
        return [("buffer.w", self.w[:n]), ("buffer.obs", self.obs[:n]), ("buffer.act", self.act[:n]),
                ("buffer.next_obs", self.next_obs[:n]), ("buffer.t", self.t[:n].astype(DTYPE)),
                ("buffer.done", self.done[:n].astype(DTYPE)), ("buffer.step", self.step[:n].astype(DTYPE))]

    def state_meta(self):
        return {"capacity": self.capacity, "cursor": self.cursor, "size": self.size, "n_pushed": self.n_pushed}

    def load_state(self, meta, tensors) -> None:
        n = int(meta["size"])
        self.cursor, self.size, self.n_pushed = int(meta["cursor"]), n, int(meta["n_pushed"])
        self.w[:n] = tensors["buffer.w"]
        self.obs[:n] = tensors["buffer.obs"]
        self.act[:n] = tensors["buffer.act"]
        self.next_obs[:n] = tensors["buffer.next_obs"]
        self.t[:n] = tensors["buffer.t"].astype(np.int64)
        self.done[:n] = tensors["buffer.done"] > 0.5
        self.step[:n] = tensors["buffer.step"].astype(np.int64)


# -- policy ---------------------------------------------------------------------------

def policy_forward(policy: Mlp, obs, w, keep: bool = False):
    x = np.concatenate([obs, w], axis=-1)
    if keep:
        out, cache = policy.forward(x, keep=True)
    else:
        out, cache = policy.forward(x), None
    d = out.shape[1] // 2
    return out[:, :d], out[:, d:], cache


def policy_sample(policy: Mlp, obs, w, rng, deterministic: bool = False):
    mean, log_std, _ = policy_forward(policy, obs, w)
    action, log_prob, _ = squashed_gaussian_sample(mean, log_std, rng, deterministic)
    return action, log_prob


def _q_input(obs, w, act):
    return np.concatenate([obs, w, act], axis=-1)


# -- losses -----------------------------------------------------------------------------

def critic_target(batch: Batch, policy: Mlp, targets, alpha: float, gamma: float, rng) -> np.ndarray:
    """Soft Bellman target r + gamma * (Q_min(s', a', w) + h(s', a', w)) per sample.

    ``a'`` is drawn fresh from the policy; of the two target critics the one
    with the smaller scalarized value is used, per sample. Terminal
    transitions drop the bootstrap term.
    """
    a_next, logp_next = policy_sample(policy, batch.next_obs, batch.w, rng)
    x = _q_input(batch.next_obs, batch.w, a_next)
    q1 = targets[0].forward(x)
    q2 = targets[1].forward(x)
    pick_first = scalarize(batch.w_ext, q1) <= scalarize(batch.w_ext, q2)
    q_min = np.where(pick_first[:, None], q1, q2)
    h = entropy_vector(logp_next, alpha, q1.shape[1] - 1)
    not_done = (~np.asarray(batch.done, bool)).astype(q1.dtype)[:, None]
    y = batch.reward + gamma * not_done * (q_min + h)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("nonfinite critic target")
    return y


def critic_loss(batch: Batch, critic: Mlp, target: np.ndarray, with_grad: bool = True):
    """Mean squared scalarized TD error; ``target`` is treated as a constant."""
    q, cache = critic.forward(_q_input(batch.obs, batch.w, batch.act), keep=True)
    delta = scalarize(batch.w_ext, q - target)
    loss = float(np.mean(np.square(delta)))
    if not with_grad:
        return loss, None
    upstream = (2.0 / len(batch)) * delta[:, None] * batch.w_ext
    grad, _ = critic.backward(cache, upstream.astype(q.dtype), input_grad=False)
    return loss, grad


def actor_loss(batch: Batch, policy: Mlp, critics, alpha: float, rng, with_grad: bool = True):
    """E[alpha * log pi(a|s,w) - w_ext . Q_min(s, a, w)] with reparameterized a.

    Returns ``(loss, policy gradient or None, mean log pi)``.
    """
    n = len(batch)
    mean, log_std, p_cache = policy_forward(policy, batch.obs, batch.w, keep=True)
    action, log_prob, aux = squashed_gaussian_sample(mean, log_std, rng)
    x = _q_input(batch.obs, batch.w, action)
    q1, c1 = critics[0].forward(x, keep=True)
    q2, c2 = critics[1].forward(x, keep=True)
    s1, s2 = scalarize(batch.w_ext, q1), scalarize(batch.w_ext, q2)
    pick_first = s1 <= s2
    s_min = np.where(pick_first, s1, s2)
    loss = float(np.mean(alpha * log_prob - s_min))
    if not with_grad:
        return loss, None, float(np.mean(log_prob))
    up = (-1.0 / n) * batch.w_ext
    _, g1 = critics[0].backward(c1, up * pick_first[:, None], param_grad=False)
    _, g2 = critics[1].backward(c2, up * (~pick_first)[:, None], param_grad=False)
    act_dim = action.shape[1]
    grad_action = (g1 + g2)[:, -act_dim:]
    g_mean, g_log_std = squashed_gaussian_grads(aux, grad_action, np.full(n, alpha / n, dtype=mean.dtype))
    grad, _ = policy.backward(p_cache, np.concatenate([g_mean, g_log_std], axis=1), input_grad=False)
    return loss, grad, float(np.mean(log_prob))


class Mosac:
    """Preference-conditioned soft actor-critic with twin vector critics."""

    def __init__(self, obs_dim: int, act_dim: int, cond_dim: int, reward_dim: int, rng: np.random.Generator,
                 policy_hidden=(256, 256), q_hidden=(256, 256, 64), lr: float = 3e-4,
                 gamma: float = 0.99, alpha: float = 0.1, tau: float = 0.005):
        self.obs_dim, self.act_dim, self.cond_dim, self.reward_dim = obs_dim, act_dim, cond_dim, reward_dim
        self.gamma, self.alpha, self.tau = gamma, alpha, tau
        self.policy = Mlp([obs_dim + cond_dim, *policy_hidden, 2 * act_dim], rng)
        q_sizes = [obs_dim + cond_dim + act_dim, *q_hidden, reward_dim + 1]
        self.critics = [Mlp(q_sizes, rng), Mlp(q_sizes, rng)]
        self.targets = [c.copy() for c in self.critics]
        self.policy_opt = Adam(self.policy.data.size, lr)
        self.critic_opts = [Adam(c.data.size, lr) for c in self.critics]

    def act(self, obs, w, rng, deterministic: bool = False):
        obs = np.atleast_2d(obs)
        w = np.atleast_2d(w)
        action, _ = policy_sample(self.policy, obs, w, rng, deterministic)
        return action[0] if action.shape[0] == 1 else action

    def update_critics(self, batch: Batch, rng):
        y = critic_target(batch, self.policy, self.targets, self.alpha, self.gamma, rng)
        losses = []
        for critic, opt in zip(self.critics, self.critic_opts):
            loss, grad = critic_loss(batch, critic, y)
            if not np.isfinite(loss):
                raise FloatingPointError(f"nonfinite critic loss {loss}")
            opt.step(critic.data, grad)
            losses.append(loss)
        return losses

    def update_actor(self, batch: Batch, rng):
        loss, grad, mean_logp = actor_loss(batch, self.policy, self.critics, self.alpha, rng)
        if not np.isfinite(loss):
            raise FloatingPointError(f"nonfinite actor loss {loss}")
        self.policy_opt.step(self.policy.data, grad)
        return loss, mean_logp

    def update_targets(self):
        for target, online in zip(self.targets, self.critics):
            polyak_update(target, online, self.tau)

    def networks(self):
        return {"policy": self.policy, "q1": self.critics[0], "q2": self.critics[1],
                "q1_target": self.targets[0], "q2_target": self.targets[1]}

    def optimizers(self):
        return {"policy": self.policy_opt, "q1": self.critic_opts[0], "q2": self.critic_opts[1]}
