"""State-conditional von Mises-Fisher posterior q(w | s) and its training."""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .directional import KAPPA_MAX, KAPPA_MIN, dlogC_dkappa, log_norm_const
from .morl import extend_preference
from .nn import Adam, Mlp

LOG_DENSITY_FLOOR = -6.0 * math.log(10.0)
RECENT_WINDOW = 100_000


class DiscUpdateVariant(str, Enum):
    """Which replay data the discriminator trains on."""

    ENTIRE = "entire"
    RECENT = "recent"
    GAMMA = "gamma"


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def vmf_heads(raw, m: int):
    """Split raw network output into (mu, kappa, aux).

    The first ``m`` outputs are normalized to a unit mean direction (a zero
    vector falls back to the first basis vector); the last is mapped through
    softplus and clamped to ``[KAPPA_MIN, KAPPA_MAX]``.
    """
    raw = np.asarray(raw, dtype=np.float64)
    v = raw[:, :m]
    norm = np.linalg.norm(v, axis=1)
    degenerate = norm < 1e-12
    safe = np.where(degenerate, 1.0, norm)
    mu = v / safe[:, None]
    if np.any(degenerate):
        mu[degenerate] = np.eye(m)[0]
    z = raw[:, m]
    sp = _softplus(z)
    kappa = np.clip(sp, KAPPA_MIN, KAPPA_MAX)
    aux = {"norm": safe, "degenerate": degenerate, "z": z,
           "kappa_live": (sp > KAPPA_MIN) & (sp < KAPPA_MAX)}
    return mu, kappa, aux


def floor_rewards(reward, w_ext, floor: float = LOG_DENSITY_FLOOR):
    """Raise slot 0 wherever the scalarized reward w_ext . r falls below ``floor``."""
    scalar = np.sum(w_ext * reward, axis=-1)
    out = np.array(reward, copy=True)
    out[..., 0] += np.maximum(floor - scalar, 0.0)
    return out


class VmfDiscriminator:
    """MLP trunk with a mean-direction head and a concentration head.

    With ``kappa_fixed`` set the concentration head is ignored; with
    ``drop_normalizer`` the ln C term is left out of densities and rewards.
    Both together give the VISR reduction.
    """

    def __init__(self, feature_dim: int, m: int, rng: np.random.Generator | None, hidden=(256, 256),
                 lr: float = 3e-4, kappa_fixed: float | None = None, drop_normalizer: bool = False,
                 floor: float = LOG_DENSITY_FLOOR):
        self.m = m
        self.net = Mlp([feature_dim, *hidden, m + 1], rng)
        self.opt = Adam(self.net.data.size, lr)
        self.kappa_fixed = kappa_fixed
        self.drop_normalizer = drop_normalizer
        self.floor = floor

    def _params(self, raw):
        mu, kappa, aux = vmf_heads(raw, self.m)
        if self.kappa_fixed is not None:
            kappa = np.full_like(kappa, self.kappa_fixed)
            aux["kappa_live"] = np.zeros_like(aux["kappa_live"])
        return mu, kappa, aux

    def predict(self, features):
        """(mu, kappa) for a batch of feature rows."""
        return self._params(self.net.forward(np.atleast_2d(features)))[:2]

    def _log_c(self, kappa):
        if self.drop_normalizer:
            return np.zeros_like(kappa)
        return log_norm_const(self.m, kappa)

    def reward_vector(self, features) -> np.ndarray:
        """(ln C(kappa), kappa * mu_1, ..., kappa * mu_m) per row, unfloored."""
        mu, kappa = self.predict(features)
        return np.concatenate([self._log_c(kappa)[:, None], kappa[:, None] * mu], axis=1)

    def log_density(self, w, features) -> np.ndarray:
        return np.sum(extend_preference(np.asarray(w, np.float64)) * self.reward_vector(features), axis=1)

    def loss(self, w, features, t=None, variant=DiscUpdateVariant.ENTIRE, gamma: float = 0.99,
             with_grad: bool = True):
        """Mean negative floored log-density; Gamma weighs each sample by gamma**t.

        Returns ``(loss, flat gradient or None)``.
        """
        w = np.asarray(w, dtype=np.float64)
        n = w.shape[0]
        if n == 0:
            raise ValueError("discriminator loss needs a non-empty batch")
        raw, cache = self.net.forward(np.atleast_2d(features), keep=True)
        mu, kappa, aux = self._params(raw)
        cos = np.sum(w * mu, axis=1)
        logq = self._log_c(kappa) + kappa * cos
        weights = np.ones(n)
        if DiscUpdateVariant(variant) is DiscUpdateVariant.GAMMA:
            weights = np.power(gamma, np.asarray(t, dtype=np.float64))
        floored = np.maximum(logq, self.floor)
        loss = float(-np.mean(weights * floored))
        if not with_grad:
            return loss, None
        g_logq = -(weights / n) * (logq > self.floor)
        g_mu = (g_logq * kappa)[:, None] * w
        g_v = (g_mu - mu * np.sum(mu * g_mu, axis=1, keepdims=True)) / aux["norm"][:, None]
        g_v[aux["degenerate"]] = 0.0
        dlogc = 0.0 if self.drop_normalizer else dlogC_dkappa(self.m, kappa)
        g_kappa = g_logq * (dlogc + cos)
        g_z = g_kappa * _sigmoid(aux["z"]) * aux["kappa_live"]
        upstream = np.concatenate([g_v, g_z[:, None]], axis=1).astype(self.net.data.dtype)
        grad, _ = self.net.backward(cache, upstream, input_grad=False)
        return loss, grad

    def update(self, w, features, t=None, variant=DiscUpdateVariant.ENTIRE, gamma: float = 0.99):
        """One Adam step. Returns (loss before, loss after) on the same batch."""
        before, grad = self.loss(w, features, t, variant, gamma)
        self.opt.step(self.net.data, grad)
        after, _ = self.loss(w, features, t, variant, gamma, with_grad=False)
        return before, after


def sample_disc_batch(buffer, n: int, rng, variant, window: int = RECENT_WINDOW):
    """Draw a discriminator batch from the replay buffer according to ``variant``."""
    if DiscUpdateVariant(variant) is DiscUpdateVariant.RECENT:
        return buffer.sample_recent(n, rng, window)
    return buffer.sample(n, rng)
