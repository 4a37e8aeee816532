"""Comparison methods expressed as restrictions of the DISCS machinery."""
from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.special import log_softmax

from .discriminator import LOG_DENSITY_FLOOR, VmfDiscriminator, vmf_heads
from .nn import DTYPE, Adam, Mlp


class MethodMode(str, Enum):
    DISCS = "discs"
    VISR = "visr"
    DIAYN = "diayn"
    SAC = "sac"


def visr_discriminator(feature_dim: int, m: int, rng, hidden=(256, 256), lr: float = 3e-4) -> VmfDiscriminator:
    """vMF discriminator with kappa frozen at 1 and the normalizer dropped."""
    return VmfDiscriminator(feature_dim, m, rng, hidden, lr, kappa_fixed=1.0, drop_normalizer=True)


def visr_reward(net: Mlp, features, m: int) -> np.ndarray:
    """(0, mu_1, ..., mu_m): the scalarized reward w . mu lies in [-1, 1]."""
    mu, _, _ = vmf_heads(net.forward(np.atleast_2d(features)), m)
    return np.concatenate([np.zeros((mu.shape[0], 1)), mu], axis=1)


def diayn_reward(disc_logits, z, floor: float = LOG_DENSITY_FLOOR) -> np.ndarray:
    """log softmax(logits)[z], floored; works on a single row or a batch."""
    logits = np.atleast_2d(np.asarray(disc_logits, dtype=np.float64))
    z = np.atleast_1d(np.asarray(z))
    n_skills = logits.shape[1]
    if np.any(z < 0) or np.any(z >= n_skills):
        raise IndexError(f"skill index out of range for {n_skills} skills")
    lp = log_softmax(logits, axis=1)[np.arange(logits.shape[0]), z]
    out = np.maximum(lp, floor)
    return out if np.ndim(disc_logits) > 1 else float(out[0])


class CategoricalDiscriminator:
    """q(z | s) over ``n_skills`` discrete skills, trained by cross-entropy."""

    def __init__(self, feature_dim: int, n_skills: int, rng, hidden=(256, 256), lr: float = 3e-4,
                 floor: float = LOG_DENSITY_FLOOR):
        if n_skills < 2:
            raise ValueError("DIAYN needs at least 2 skills")
        self.n_skills = n_skills
        self.net = Mlp([feature_dim, *hidden, n_skills], rng)
        self.opt = Adam(self.net.data.size, lr)
        self.floor = floor

    def logits(self, features) -> np.ndarray:
        return self.net.forward(np.atleast_2d(features)).astype(np.float64)

    def reward(self, features, z) -> np.ndarray:
        return diayn_reward(self.logits(features), z, self.floor)

    def loss(self, z, features, with_grad: bool = True):
        return diayn_disc_loss(self, z, features, with_grad)

    def update(self, z, features):
        before, grad = self.loss(z, features)
        self.opt.step(self.net.data, grad)
        after, _ = self.loss(z, features, with_grad=False)
        return before, after


def diayn_disc_loss(disc: CategoricalDiscriminator, z, features, with_grad: bool = True):
    """Mean negative log-softmax at the true skill. Returns ``(loss, grad or None)``."""
    z = np.asarray(z, dtype=np.int64)
    n = z.shape[0]
    if n == 0:
        raise ValueError("discriminator loss needs a non-empty batch")
    raw, cache = disc.net.forward(np.atleast_2d(features), keep=True)
    lp = log_softmax(raw.astype(np.float64), axis=1)
    loss = float(-np.mean(lp[np.arange(n), z]))
    if not with_grad:
        return loss, None
    upstream = np.exp(lp)
    upstream[np.arange(n), z] -= 1.0
    upstream /= n
    grad, _ = disc.net.backward(cache, upstream.astype(disc.net.data.dtype), input_grad=False)
    return loss, grad


def skill_one_hot(z, n_skills: int) -> np.ndarray:
    return np.eye(n_skills, dtype=DTYPE)[np.asarray(z)]
