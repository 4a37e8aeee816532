"""Hindsight preference posterior sampling."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .directional import sample_pn, sample_uniform_sphere
from .morl import Batch, concat_batches
from .nn import DTYPE


class PreferenceSource(str, Enum):
    POSTERIOR = "posterior"
    PRIOR = "prior"


@dataclass(frozen=True)
class HippsConfig:
    """``k`` is the total batch multiplier: k - 1 relabeled copies per tuple; k = 1 disables HIPPS."""

    k: int = 1
    source: PreferenceSource = PreferenceSource.POSTERIOR

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"hipps k must be an integer >= 1, got {self.k}")
        object.__setattr__(self, "source", PreferenceSource(self.source))


def augment_batch(batch: Batch, cfg: HippsConfig, disc, features, rng: np.random.Generator) -> Batch:
    """Append ``k - 1`` copies of every tuple carrying freshly drawn preferences.

    Posterior preferences come from PN(mu(s), I / kappa(s)) using the
    discriminator's prediction at ``features`` (the x-y features of ``s``);
    prior preferences are uniform on the sphere. Only ``w`` changes in the
    copies. The result is ordered [originals, copy 1, ..., copy k-1].
    """
    if cfg.k == 1:
        return batch
    n, m = batch.w.shape
    extra = cfg.k - 1
    if cfg.source is PreferenceSource.POSTERIOR:
        if disc is None:
            raise ValueError("posterior HIPPS needs a discriminator")
        mu, kappa = disc.predict(features)
        w_new = sample_pn(np.tile(mu, (extra, 1)), np.tile(kappa, extra), rng)
    else:
        w_new = sample_uniform_sphere(m, rng, size=n * extra)
    w_new = w_new.astype(DTYPE)
    copies = []
    for j in range(extra):
        copies.append(batch.with_(w=w_new[j * n:(j + 1) * n], w_ext=None, reward=None))
    base = batch.with_(w_ext=None, reward=None)
    return concat_batches([base, *copies])
