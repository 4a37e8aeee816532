"""Fast numerical property checks, runnable without pytest.

Each check returns ``(ok, detail)``; :func:`run_selftest` prints one line per check.
"""
from __future__ import annotations

import io
import time

import numpy as np
from scipy.special import logsumexp

from .baselines import visr_discriminator
from .checkpoint import decode_checkpoint, encode_checkpoint
from .directional import dlogC_dkappa, log_bessel_i, log_norm_const, sample_pn, sample_uniform_sphere, vmf_log_density
from .discriminator import VmfDiscriminator
from .envs import random_mdp
from .morl import extend_preference, scalarize
from .nn import Mlp
from .tabular import tabular_soft_policy_iteration


def check_normalizer_gradient():
    worst = 0.0
    kappas = np.geomspace(1e-2, 50, 40)
    for m in (2, 3, 4):
        h = 1e-5 * np.maximum(kappas, 1.0)
        fd = (log_norm_const(m, kappas + h) - log_norm_const(m, kappas - h)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - dlogC_dkappa(m, kappas)))))
    return worst < 1e-5, f"max |analytic - fd| = {worst:.2e}"


def check_circle_normalization():
    theta = np.linspace(0.0, 2 * np.pi, 20001)[:-1]
    w = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    worst = 0.0
    for kappa in (0.0, 1.0, 5.0, 20.0):
        dens = np.exp(vmf_log_density(w, np.array([0.6, 0.8]), kappa))
        # periodic trapezoid rule, spectrally accurate for smooth periodic integrands
        worst = max(worst, abs(dens.sum() * (2 * np.pi / len(theta)) - 1.0))
    return worst < 1e-6, f"max |integral - 1| = {worst:.2e}"


def check_pn_sampler():
    rng = np.random.default_rng(7)
    mu = np.array([np.cos(0.3), np.sin(0.3)])
    s = sample_pn(mu, 8.0, rng, size=20000)
    mean = s.mean(axis=0)
    angle = np.degrees(np.arccos(np.clip(mean @ mu / np.linalg.norm(mean), -1, 1)))
    target = float(np.exp(log_bessel_i(1, 8.0) - log_bessel_i(0, 8.0)))
    gap = abs(np.linalg.norm(mean) - target)
    return angle < 2.0 and gap < 0.05, f"angle {angle:.3f} deg, resultant gap {gap:.4f}"


def check_tabular_policy_iteration(n_mdps: int = 5):
    rng = np.random.default_rng(3)
    worst_drop, worst_gap = 0.0, 0.0
    for _ in range(n_mdps):
        mdp = random_mdp(rng)
        prefs = sample_uniform_sphere(2, rng, size=8)
        trace = tabular_soft_policy_iteration(mdp, prefs, alpha=0.1)
        for a, b in zip(trace.scalar_q, trace.scalar_q[1:]):
            worst_drop = max(worst_drop, float(np.max(a - b)))
        for w, q_pi in zip(prefs, trace.final):
            q = np.zeros_like(q_pi)
            for _ in range(400):
                q = mdp.R @ w + mdp.gamma * mdp.P @ (0.1 * logsumexp(q / 0.1, axis=1))
            worst_gap = max(worst_gap, float(np.max(np.abs(q - q_pi))))
    return worst_drop <= 1e-9 and worst_gap < 1e-6, f"max drop {worst_drop:.1e}, oracle gap {worst_gap:.1e}"


def check_scalarization_identity():
    rng = np.random.default_rng(11)
    disc = VmfDiscriminator(2, 2, rng, hidden=(32, 32))
    feats = rng.uniform(-1, 1, size=(1000, 2))
    w = sample_uniform_sphere(2, rng, size=1000)
    mu, kappa = disc.predict(feats)
    lhs = scalarize(extend_preference(w), disc.reward_vector(feats))
    gap = float(np.max(np.abs(lhs - vmf_log_density(w, mu, kappa))))
    return gap < 1e-6, f"max gap {gap:.2e}"


def check_visr_bound():
    rng = np.random.default_rng(5)
    disc = visr_discriminator(2, 2, rng, hidden=(32, 32))
    feats = rng.uniform(-1, 1, size=(20000, 2)) * 10
    w = sample_uniform_sphere(2, rng, size=20000)
    r = scalarize(extend_preference(w), disc.reward_vector(feats))
    return bool(np.all(np.abs(r) <= 1 + 1e-6)), f"range [{r.min():.4f}, {r.max():.4f}]"


def check_mlp_gradient():
    rng = np.random.default_rng(2)
    net = Mlp([3, 8, 8, 2], rng, dtype=np.float64)
    x = rng.normal(size=(5, 3))
    g_out = rng.normal(size=(5, 2))
    out, cache = net.forward(x, keep=True)
    grad, _ = net.backward(cache, g_out)
    worst = 0.0
    for i in rng.choice(net.data.size, 20, replace=False):
        old = net.data[i]
        net.data[i] = old + 1e-6
        up = float(np.sum(net.forward(x) * g_out))
        net.data[i] = old - 1e-6
        down = float(np.sum(net.forward(x) * g_out))
        net.data[i] = old
        fd = (up - down) / 2e-6
        worst = max(worst, abs(fd - grad[i]) / max(1e-6, abs(fd) + abs(grad[i])))
    return worst < 1e-3, f"max relative error {worst:.2e}"


def check_checkpoint_roundtrip():
    rng = np.random.default_rng(0)
    tensors = [("a", rng.normal(size=(3, 4)).astype(np.float32)), ("b", np.zeros(0, np.float32))]
    blob = encode_checkpoint({"x": 1}, tensors)
    meta, back = decode_checkpoint(blob)
    again = encode_checkpoint(meta, list(back.items()))
    return again == blob, f"{len(blob)} bytes"


CHECKS = [
    ("normalizer gradient", check_normalizer_gradient),
    ("circle normalization", check_circle_normalization),
    ("projected normal sampler", check_pn_sampler),
    ("tabular soft policy iteration", check_tabular_policy_iteration),
    ("scalarization identity", check_scalarization_identity),
    ("VISR reward bound", check_visr_bound),
    ("MLP gradient", check_mlp_gradient),
    ("checkpoint round trip", check_checkpoint_roundtrip),
]


def run_selftest(verbose: bool = True) -> bool:
    out = None if verbose else io.StringIO()
    all_ok = True
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, reported like one
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail} ({time.perf_counter() - t0:.2f}s)"
        print(line, file=out)
    return all_ok
