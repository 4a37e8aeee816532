"""The training loop, checkpoint round-trips and evaluation rollouts."""
from __future__ import annotations

import json
import logging
import os

import numpy as np

from .baselines import CategoricalDiscriminator, MethodMode, skill_one_hot, visr_discriminator
from .checkpoint import FORMAT_VERSION, checkpoint_load, checkpoint_save
from .config import ConfigError, RunConfig
from .directional import sample_uniform_sphere
from .discriminator import VmfDiscriminator, floor_rewards, sample_disc_batch
from .envs import PointMassState, make_env
from .evaluation import (WindowedOccupancy, OccupancyGrid, export_curves, export_heatmap, export_trajectory,
                         rollout_deterministic)
from .hipps import augment_batch
from .morl import Mosac, ReplayBuffer, extend_preference, scalarize
from .nn import DTYPE

log = logging.getLogger(__name__)

NAN = float("nan")


class TrainingAborted(RuntimeError):
    """A loss or target went nonfinite; a diagnostic checkpoint was written if possible."""


def _mean(total, count):
    return total / count if count else NAN


class Trainer:
    """Owns every piece of run state, so a checkpoint captures the run exactly."""

    def __init__(self, cfg: RunConfig, out_dir=None):
        if cfg.hipps_k > 1 and cfg.method != MethodMode.DISCS.value:
            raise ConfigError("HIPPS is only defined for the discs method")
        self.cfg = cfg
        self.out_dir = out_dir
        self.rng = np.random.default_rng(cfg.seed)
        self.env = make_env(cfg.env, bound=cfg.env_bound, dt=cfg.env_dt, f_max=cfg.env_f_max,
                            drag=cfg.env_drag, v_max=cfg.env_v_max)
        self.mode = MethodMode(cfg.method)
        if self.mode is MethodMode.DIAYN:
            cond_dim, reward_dim = cfg.diayn_skills, 1
        else:
            cond_dim, reward_dim = cfg.m, cfg.m
        self.cond_dim, self.reward_dim = cond_dim, reward_dim
        self.agent = Mosac(self.env.obs_dim, self.env.act_dim, cond_dim, reward_dim, self.rng,
                           policy_hidden=cfg.policy_hidden, q_hidden=cfg.q_hidden, lr=cfg.lr,
                           gamma=cfg.gamma, alpha=cfg.alpha, tau=cfg.tau)
        feature_dim = 2
        if self.mode is MethodMode.DISCS:
            self.disc = VmfDiscriminator(feature_dim, cfg.m, self.rng, cfg.disc_hidden, cfg.lr,
                                         floor=cfg.log_density_floor)
        elif self.mode is MethodMode.VISR:
            self.disc = visr_discriminator(feature_dim, cfg.m, self.rng, cfg.disc_hidden, cfg.lr)
        elif self.mode is MethodMode.DIAYN:
            self.disc = CategoricalDiscriminator(feature_dim, cfg.diayn_skills, self.rng, cfg.disc_hidden, cfg.lr,
                                                 floor=cfg.log_density_floor)
        else:
            self.disc = None
        self.buffer = ReplayBuffer(cfg.buffer_size, self.env.obs_dim, self.env.act_dim, cond_dim)
        self.occupancy = WindowedOccupancy(cfg.heatmap_every, cfg.env_bound, cfg.cell_size,
                                           on_complete=self._window_complete)
        self.timestep = 0
        self.counters = {"critic": 0, "policy": 0, "target": 0, "disc": 0, "episodes": 0}
        self.env_state: PointMassState | None = None
        self.cond: np.ndarray | None = None
        self.records: list[dict] = []
        self.acc = self._fresh_acc()
        self.last_disc_loss = NAN
        self.on_batch = None  # optional hook, called with every gradient batch

    @staticmethod
    def _fresh_acc():
        return {"critic": 0.0, "critic_n": 0, "actor": 0.0, "actor_n": 0, "reward": 0.0, "reward_n": 0}

    # -- data collection ----------------------------------------------------------------

    def sample_condition(self) -> np.ndarray:
        if self.mode is MethodMode.DIAYN:
            return skill_one_hot(int(self.rng.integers(self.cfg.diayn_skills)), self.cfg.diayn_skills)
        return sample_uniform_sphere(self.cfg.m, self.rng).astype(DTYPE)

    def collect(self) -> None:
        for _ in range(self.cfg.collect_steps):
            if self.env_state is None:
                self.env_state = self.env.reset()
                self.cond = self.sample_condition()
            state = self.env_state
            obs = self.env.observe(state)
            action = self.agent.act(obs, self.cond, self.rng)
            nxt, episode_end = self.env.step(state, action)
            # time-limit ends are not absorbing, so done stays False
            self.buffer.push(self.cond, obs, action, self.env.observe(nxt), state.t, False)
            self.occupancy.add(nxt.position)
            self.timestep += 1
            self.env_state = nxt
            if episode_end:
                self.env_state = None
                self.counters["episodes"] += 1

    # -- discriminator ------------------------------------------------------------------

    def _disc_due(self) -> int:
        cfg = self.cfg
        lo, hi = self.timestep - cfg.collect_steps, self.timestep
        first = (lo // cfg.disc_every + 1) * cfg.disc_every
        return sum(1 for s in range(first, hi + 1, cfg.disc_every) if s >= cfg.disc_warmup)

    def update_discriminator(self) -> float:
        cfg = self.cfg
        batch = sample_disc_batch(self.buffer, cfg.disc_batch_size, self.rng, cfg.disc_variant, cfg.recent_window)
        feats = self.env.features(batch.obs)
        if self.mode is MethodMode.DIAYN:
            _, after = self.disc.update(np.argmax(batch.w, axis=1), feats)
        else:
            _, after = self.disc.update(batch.w, feats, batch.t, cfg.disc_variant, cfg.gamma)
        self.counters["disc"] += 1
        self.last_disc_loss = after
        return after

    # -- policy / critic updates --------------------------------------------------------

    def reward_batch(self, base, batch):
        """Attach scalarization preferences and reward vectors to ``batch``.

        ``base`` is the un-augmented sample; rewards depend on s only, so they
        are computed there once and repeated for the relabeled copies.
        """
        n = len(batch)
        reps = n // len(base)
        if self.mode is MethodMode.DIAYN:
            w_ext = np.ones((n, 2), dtype=DTYPE)
        else:
            w_ext = extend_preference(batch.w).astype(DTYPE)
        feats = self.env.features(base.obs)
        if self.mode is MethodMode.SAC:
            reward = np.zeros((n, self.reward_dim + 1), dtype=DTYPE)
        elif self.mode is MethodMode.DIAYN:
            r = self.disc.reward(feats, np.argmax(base.w, axis=1))
            reward = np.tile(np.stack([np.zeros_like(r), r], axis=1), (reps, 1))
        else:
            reward = np.tile(self.disc.reward_vector(feats), (reps, 1))
            reward = floor_rewards(reward, w_ext, self.disc.floor)
        return batch.with_(w_ext=w_ext, reward=reward.astype(DTYPE))

    def gradient_batch(self):
        base = self.buffer.sample(self.cfg.batch_size, self.rng)
        batch = base
        if self.cfg.hipps_k > 1:
            batch = augment_batch(base, self.cfg.hipps, self.disc, self.env.features(base.obs), self.rng)
        return self.reward_batch(base, batch)

    def update_step(self) -> None:
        batch = self.gradient_batch()
        if self.on_batch is not None:
            self.on_batch(batch)
        losses = self.agent.update_critics(batch, self.rng)
        self.counters["critic"] += 1
        acc = self.acc
        acc["critic"] += 0.5 * (losses[0] + losses[1])
        acc["critic_n"] += 1
        acc["reward"] += float(np.mean(scalarize(batch.w_ext, batch.reward)))
        acc["reward_n"] += 1
        if self.counters["critic"] % self.cfg.policy_every == 0:
            loss, _ = self.agent.update_actor(batch, self.rng)
            self.counters["policy"] += 1
            acc["actor"] += loss
            acc["actor_n"] += 1
        if self.counters["critic"] % self.cfg.target_every == 0:
            self.agent.update_targets()
            self.counters["target"] += 1

    # -- loop ---------------------------------------------------------------------------

    def iterate(self) -> None:
        """One pass of the outer loop: collect, maybe train q(w|s), then the update steps."""
        self.collect()
        if self.disc is not None:
            for _ in range(self._disc_due()):
                self.update_discriminator()
        if self.buffer.size >= self.cfg.learning_starts:
            for _ in range(self.cfg.update_steps):
                self.update_step()
        if self.timestep % self.cfg.log_every == 0:
            self._log_row()
        if self.cfg.checkpoint_every and self.timestep % self.cfg.checkpoint_every == 0 and self.out_dir:
            self.save(os.path.join(self.out_dir, f"checkpoint_{self.timestep}.ckpt"))

    def _log_row(self) -> None:
        acc = self.acc
        row = {"timestep": self.timestep, "occupied_cells": self.occupancy.occupied_cells(),
               "disc_loss": self.last_disc_loss, "avg_reward": _mean(acc["reward"], acc["reward_n"]),
               "critic_loss": _mean(acc["critic"], acc["critic_n"]),
               "actor_loss": _mean(acc["actor"], acc["actor_n"])}
        self.records.append(row)
        self.acc = self._fresh_acc()
        log.info("t=%d cells=%d disc=%.4g reward=%.4g critic=%.4g actor=%.4g", row["timestep"],
                 row["occupied_cells"], row["disc_loss"], row["avg_reward"], row["critic_loss"], row["actor_loss"])

    def _window_complete(self, index, grid: OccupancyGrid) -> None:
        if self.out_dir:
            export_heatmap(grid, os.path.join(self.out_dir, f"heatmap_{index}.csv"))

    def run(self, until: int | None = None) -> "Trainer":
        """Train up to ``until`` timesteps (default: the configured total) and write artifacts."""
        until = self.cfg.total_timesteps if until is None else until
        if self.out_dir:
            os.makedirs(self.out_dir, exist_ok=True)
        try:
            while self.timestep < until:
                self.iterate()
        except FloatingPointError as exc:
            path = None
            if self.out_dir:
                path = os.path.join(self.out_dir, "diagnostic.ckpt")
                try:
                    self.save(path)
                except Exception:  # state may be unserializable after the failure
                    path = None
            raise TrainingAborted(f"nonfinite value at timestep {self.timestep}: {exc}; diagnostic={path}") from exc
        if self.out_dir:
            self.write_curves(os.path.join(self.out_dir, "curves.csv"))
            self.save(os.path.join(self.out_dir, "checkpoint.ckpt"))
        return self

    def write_curves(self, path) -> None:
        export_curves(self.records, path)

    # -- checkpointing ------------------------------------------------------------------

    def networks(self):
        nets = dict(self.agent.networks())
        if self.disc is not None:
            nets["disc"] = self.disc.net
        return nets

    def optimizers(self):
        opts = dict(self.agent.optimizers())
        if self.disc is not None:
            opts["disc"] = self.disc.opt
        return opts

    def state(self):
        """(metadata dict, list of named tensors) describing the full run state."""
        env_state = None
        if self.env_state is not None:
            env_state = {"position": self.env_state.position.tolist(), "velocity": self.env_state.velocity.tolist(),
                         "t": self.env_state.t}
        meta = {
            "format_version": FORMAT_VERSION,
            "config": self.cfg.to_dict(),
            "timestep": self.timestep,
            "counters": dict(self.counters),
            "rng": self.rng.bit_generator.state,
            "env_state": env_state,
            "cond": None if self.cond is None else [float(c) for c in self.cond],
            "records": self.records,
            "acc": self.acc,
            "last_disc_loss": self.last_disc_loss,
            "optimizers": {k: o.state() for k, o in self.optimizers().items()},
            "buffer": self.buffer.state_meta(),
            "occupancy_index": self.occupancy.index,
        }
        tensors = []
        for name, net in self.networks().items():
            tensors.append((f"net.{name}", net.data))
        for name, opt in self.optimizers().items():
            tensors.append((f"adam.{name}.m", opt.m))
            tensors.append((f"adam.{name}.v", opt.v))
        tensors.extend(self.buffer.state_tensors())
        tensors.append(("occupancy.counts", self.occupancy.grid.counts.astype(DTYPE)))
        return meta, tensors

    def save(self, path) -> None:
        meta, tensors = self.state()
        checkpoint_save(meta, tensors, path)

    @classmethod
    def load(cls, path, out_dir=None) -> "Trainer":
        meta, tensors = checkpoint_load(path)
        cfg = RunConfig.from_dict(meta["config"])
        trainer = cls(cfg, out_dir)
        trainer._restore(meta, tensors)
        return trainer

    def _restore(self, meta, tensors) -> None:
        self.timestep = int(meta["timestep"])
        self.counters = {k: int(v) for k, v in meta["counters"].items()}
        self.rng.bit_generator.state = meta["rng"]
        es = meta["env_state"]
        self.env_state = None if es is None else PointMassState(np.array(es["position"]), np.array(es["velocity"]),
                                                                int(es["t"]))
        self.cond = None if meta["cond"] is None else np.array(meta["cond"], dtype=DTYPE)
        self.records = [dict(r) for r in meta["records"]]
        self.acc = dict(meta["acc"])
        self.last_disc_loss = float(meta["last_disc_loss"])
        for name, net in self.networks().items():
            net.data[...] = tensors[f"net.{name}"]
        for name, opt in self.optimizers().items():
            opt.load_state(meta["optimizers"][name], tensors[f"adam.{name}.m"], tensors[f"adam.{name}.v"])
        self.buffer.load_state(meta["buffer"], tensors)
        self.occupancy.index = int(meta["occupancy_index"])
        self.occupancy.grid.counts[...] = tensors["occupancy.counts"].astype(np.int64)


def train(cfg: RunConfig, out_dir=None) -> Trainer:
    return Trainer(cfg, out_dir).run()


def evaluation_conditions(cfg: RunConfig, n_skills: int = 100):
    """Skills for evaluation rollouts: (conditions, episodes per condition).

    Continuous methods draw ``n_skills`` preferences uniformly from the
    sphere; DIAYN runs each discrete skill ``n_skills // diayn_skills`` times.
    """
    if cfg.method == MethodMode.DIAYN.value:
        conds = [skill_one_hot(z, cfg.diayn_skills) for z in range(cfg.diayn_skills)]
        return conds, max(1, n_skills // cfg.diayn_skills)
    eval_rng = np.random.default_rng([cfg.seed, 0xE7A1])
    prefs = sample_uniform_sphere(cfg.m, eval_rng, size=n_skills).astype(DTYPE)
    return list(prefs), 1


def evaluate(checkpoint_path, n_skills: int = 100, out_dir=None, threads: int | None = None) -> dict:
    """Deterministic skill rollouts from a checkpoint, with heatmap and trajectory exports."""
    trainer = Trainer.load(checkpoint_path)
    cfg = trainer.cfg
    conds, episodes = evaluation_conditions(cfg, n_skills)
    trajectories = rollout_deterministic(trainer.agent, trainer.env, conds, episodes, threads=threads)
    grid = OccupancyGrid(cfg.env_bound, cfg.cell_size)
    for traj in trajectories:
        grid.update(traj)
    summary = {"timestep": trainer.timestep, "method": cfg.method, "n_trajectories": len(trajectories),
               "episodes_per_skill": episodes, "n_skills": len(conds), "occupied_cells": grid.occupied_cells()}
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        export_heatmap(grid, os.path.join(out_dir, "heatmap_eval.csv"))
        for i, traj in enumerate(trajectories):
            export_trajectory(traj, os.path.join(out_dir, f"trajectories_{i}.csv"))
        with open(os.path.join(out_dir, "summary.json"), "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    summary["trajectories"] = trajectories
    return summary

