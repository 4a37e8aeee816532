"""Acceptance criteria 1-12, each at its stated tolerance.

Every test reports one PASS/FAIL line (collected in the terminal summary by
conftest.py) and then asserts. Criterion 9 trains twelve agents and takes
over an hour on one CPU core.
"""
import math
import time

import numpy as np
from scipy import integrate
from scipy.special import ive, logsumexp

from discs.baselines import CategoricalDiscriminator, diayn_disc_loss, visr_discriminator
from discs.config import RunConfig
from discs.directional import (dlogC_dkappa, log_norm_const, sample_pn, sample_uniform_sphere, vmf_log_density)
from discs.discriminator import DiscUpdateVariant, VmfDiscriminator, sample_disc_batch
from discs.envs import BanditEnv, random_mdp
from discs.morl import Batch, Mosac, ReplayBuffer, actor_loss, critic_loss, extend_preference, scalarize
from discs.nn import Adam, Mlp
from discs.tabular import tabular_soft_policy_iteration
from discs.train import Trainer


def max_rel_err(analytic, numeric, floor=1e-6):
    # relative error with an absolute floor for entries that are numerically zero
    return float(np.max(np.abs(analytic - numeric) / np.maximum(floor, np.maximum(np.abs(analytic), np.abs(numeric)))))


def numeric_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        old = x.flat[i]
        x.flat[i] = old + h
        up = f()
        x.flat[i] = old - h
        down = f()
        x.flat[i] = old
        g.flat[i] = (up - down) / (2 * h)
    return g


# 1 ---------------------------------------------------------------------------------

def test_criterion_01_normalizer_gradient(report):
    t0 = time.perf_counter()
    kappa = np.geomspace(1e-2, 50, 40)
    worst = 0.0
    for m in (2, 3, 4):
        h = 1e-6 * np.maximum(kappa, 1.0)
        fd = (log_norm_const(m, kappa + h) - log_norm_const(m, kappa - h)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(dlogC_dkappa(m, kappa) - fd))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-5 and elapsed < 5
    report(1, ok, f"max |dlogC - fd| = {worst:.2e} (< 1e-5), {elapsed:.2f}s (< 5s)")
    assert ok


# 2 ---------------------------------------------------------------------------------

def test_criterion_02_circle_normalization(report):
    t0 = time.perf_counter()
    mu = np.array([np.cos(0.7), np.sin(0.7)])
    worst = 0.0
    for kappa in (0.0, 1.0, 5.0, 20.0):
        f = lambda th: math.exp(vmf_log_density(np.array([math.cos(th), math.sin(th)]), mu, kappa))
        val, _ = integrate.quad(f, 0.0, 2 * math.pi, points=[0.7], limit=200, epsabs=1e-13, epsrel=1e-13)
        worst = max(worst, abs(val - 1.0))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 5
    report(2, ok, f"max |integral - 1| = {worst:.2e} (< 1e-6), {elapsed:.2f}s (< 5s)")
    assert ok


# 3 ---------------------------------------------------------------------------------

def test_criterion_03_pn_sampler(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mu = np.array([np.cos(-1.3), np.sin(-1.3)])
    s = sample_pn(mu, 8.0, rng, size=20_000)
    mean = s.mean(axis=0)
    angle = math.degrees(math.acos(float(np.clip(mean @ mu / np.linalg.norm(mean), -1.0, 1.0))))
    target = ive(1, 8.0) / ive(0, 8.0)
    gap = abs(float(np.linalg.norm(mean)) - target)
    elapsed = time.perf_counter() - t0
    ok = angle < 2.0 and gap < 0.05 and elapsed < 5
    report(3, ok, f"mean direction off by {angle:.3f} deg (< 2), resultant length gap {gap:.4f} (< 0.05), "
                  f"{elapsed:.2f}s")
    assert ok


# 4 ---------------------------------------------------------------------------------

def soft_value_iteration(mdp, prefs, alpha, iters=600):
    """Independent oracle: iterate the soft Bellman optimality operator, all preferences at once."""
    r = np.einsum("sak,pk->psa", mdp.R, prefs)
    q = np.zeros_like(r)
    for _ in range(iters):
        v = alpha * logsumexp(q / alpha, axis=2)
        q = r + mdp.gamma * np.einsum("sat,pt->psa", mdp.P, v)
    return q


def test_criterion_04_tabular_policy_iteration(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_drop, worst_gap = 0.0, 0.0
    for _ in range(20):
        mdp = random_mdp(rng, n_states=5, n_actions=3, reward_dim=2, gamma=0.9)
        prefs = sample_uniform_sphere(2, rng, size=8)
        trace = tabular_soft_policy_iteration(mdp, prefs, alpha=0.1)
        for before, after in zip(trace.scalar_q, trace.scalar_q[1:]):
            worst_drop = max(worst_drop, float(np.max(before - after)))
        worst_gap = max(worst_gap, float(np.max(np.abs(trace.final - soft_value_iteration(mdp, prefs, 0.1)))))
    elapsed = time.perf_counter() - t0
    ok = worst_drop <= 1e-9 and worst_gap < 1e-6 and elapsed < 30
    report(4, ok, f"largest Q decrease {worst_drop:.1e} (<= 1e-9), oracle gap {worst_gap:.1e} (< 1e-6), "
                  f"{elapsed:.1f}s (< 30s)")
    assert ok


# 5 ---------------------------------------------------------------------------------

def test_criterion_05_scalarization_identity(report):
    rng = np.random.default_rng(5)
    disc = VmfDiscriminator(2, 2, rng, hidden=(64, 64))
    for W in disc.net.weights:
        W[...] = rng.normal(scale=1.0, size=W.shape)   # random weights, wide range of kappa
    feats = rng.uniform(-10, 10, size=(1000, 2))
    w = sample_uniform_sphere(2, rng, size=1000)
    mu, kappa = disc.predict(feats)
    lhs = scalarize(extend_preference(w), disc.reward_vector(feats))
    gap = float(np.max(np.abs(lhs - vmf_log_density(w, mu, kappa))))
    ok = gap < 1e-6
    report(5, ok, f"max |w_ext . r - log q| = {gap:.2e} (< 1e-6), kappa range [{kappa.min():.2g}, {kappa.max():.3g}]")
    assert ok


# 6 ---------------------------------------------------------------------------------

def test_criterion_06_visr_bound(report):
    rng = np.random.default_rng(6)
    disc = visr_discriminator(2, 2, rng, hidden=(64, 64))
    for W in disc.net.weights:
        W[...] = rng.normal(scale=1.0, size=W.shape)
    feats = rng.uniform(-10, 10, size=(100_000, 2))
    w = sample_uniform_sphere(2, rng, size=100_000)
    r = scalarize(extend_preference(w), disc.reward_vector(feats))
    ok = bool(np.all((r >= -1 - 1e-6) & (r <= 1 + 1e-6)))
    report(6, ok, f"1e5 rewards in [{r.min():.7f}, {r.max():.7f}] (within [-1, 1] +- 1e-6)")
    assert ok


# 7 ---------------------------------------------------------------------------------

class ScalarSac:
    """Single-objective SAC written out directly: scalar critics, own backprop, own Adam.

    The critic networks have two outputs read out by the fixed vector (1, 1),
    so the scalar critic is Q(s, a) = out_0 + out_1.
    """

    def __init__(self, policy, critics, readout, alpha, gamma, lr):
        self.pol = [[W.copy() for W in policy.weights], [b.copy() for b in policy.biases]]
        self.crit = [[[W.copy() for W in c.weights], [b.copy() for b in c.biases]] for c in critics]
        self.targ = [[[W.copy() for W in c.weights], [b.copy() for b in c.biases]] for c in critics]
        self.readout = readout
        self.alpha, self.gamma, self.lr = alpha, gamma, lr
        self.adam = {}

    @staticmethod
    def forward(params, x):
        Ws, bs = params
        inputs = []
        h = x
        for i, (W, b) in enumerate(zip(Ws, bs)):
            inputs.append(h)
            h = h @ W + b
            if i < len(Ws) - 1:
                h = np.maximum(h, 0.0)
        return h, inputs

    @staticmethod
    def backward(params, inputs, g):
        Ws, _ = params
        gW, gb = [None] * len(Ws), [None] * len(Ws)
        for i in reversed(range(len(Ws))):
            gW[i] = inputs[i].T @ g
            gb[i] = g.sum(axis=0)
            g = g @ Ws[i].T
            if i > 0:
                g = g * (inputs[i] > 0)
        return gW, gb, g

    def adam_step(self, key, params, grads):
        b1, b2, eps = 0.9, 0.999, 1e-8
        state = self.adam.setdefault(key, {"t": 0, "m": [np.zeros_like(p) for p in params],
                                           "v": [np.zeros_like(p) for p in params]})
        state["t"] += 1
        t = state["t"]
        for p, g, m, v in zip(params, grads, state["m"], state["v"]):
            m[...] = b1 * m + (1 - b1) * g
            v[...] = b2 * v + (1 - b2) * g * g
            p -= self.lr / (1 - b1 ** t) * m / (np.sqrt(v / (1 - b2 ** t)) + eps)

    def sample(self, obs_w, rng):
        out, inputs = self.forward(self.pol, obs_w)
        mean, raw = out[:, :1], out[:, 1:]
        log_std = np.clip(raw, -20, 2)
        std = np.exp(log_std)
        eps = rng.standard_normal(mean.shape)
        u = mean + std * eps
        a = np.tanh(u)
        logp = np.sum(-0.5 * eps ** 2 - log_std - 0.5 * np.log(2 * np.pi) - np.log(1 - a ** 2 + 0.0), axis=1)
        return a, logp, (inputs, eps, std, u, a, (raw >= -20) & (raw <= 2))

    def q(self, params, x):
        out, inputs = self.forward(params, x)
        return out @ self.readout, inputs

    def update(self, obs, w, act, reward, next_obs, done, rng):
        n = obs.shape[0]
        obs_w = np.concatenate([obs, w], axis=1)
        next_w = np.concatenate([next_obs, w], axis=1)
        a2, logp2, _ = self.sample(next_w, rng)
        x2 = np.concatenate([next_w, a2], axis=1)
        q_next = np.minimum(self.q(self.targ[0], x2)[0], self.q(self.targ[1], x2)[0])
        y = reward + self.gamma * (1.0 - done) * (q_next - self.alpha * logp2)
        x = np.concatenate([obs_w, act], axis=1)
        critic_losses = []
        for j in range(2):
            q, inputs = self.q(self.crit[j], x)
            critic_losses.append(float(np.mean((q - y) ** 2)))
            g_out = (2.0 / n) * (q - y)[:, None] * self.readout[None, :]
            gW, gb, _ = self.backward(self.crit[j], inputs, g_out)
            self.adam_step(f"q{j}", self.crit[j][0] + self.crit[j][1], gW + gb)
        # actor
        a, logp, (p_inputs, eps, std, u, _, live) = self.sample(obs_w, rng)
        xa = np.concatenate([obs_w, a], axis=1)
        q1, in1 = self.q(self.crit[0], xa)
        q2, in2 = self.q(self.crit[1], xa)
        first = q1 <= q2
        actor = float(np.mean(self.alpha * logp - np.where(first, q1, q2)))
        g1 = self.backward(self.crit[0], in1, (-1.0 / n) * first[:, None] * self.readout[None, :])[2]
        g2 = self.backward(self.crit[1], in2, (-1.0 / n) * (~first)[:, None] * self.readout[None, :])[2]
        g_a = (g1 + g2)[:, -1:]
        g_logp = self.alpha / n
        # d/du of tanh and of the correction term -log(1 - tanh(u)^2)
        g_u = g_a * (1 - a ** 2) + g_logp * 2 * np.tanh(u)
        g_mean = g_u
        g_log_std = (g_u * std * eps - g_logp) * live
        gW, gb, _ = self.backward(self.pol, p_inputs, np.concatenate([g_mean, g_log_std], axis=1))
        self.adam_step("pi", self.pol[0] + self.pol[1], gW + gb)
        for j in range(2):
            for tp, op in zip(self.targ[j][0] + self.targ[j][1], self.crit[j][0] + self.crit[j][1]):
                tp[...] = 0.995 * tp + 0.005 * op
        return critic_losses, actor


def as64(net):
    other = Mlp(net.sizes, dtype=np.float64)
    other.data[...] = net.data
    return other


def test_criterion_07_sac_reduction(report):
    env = BanditEnv(target=0.5)
    agent = Mosac(1, 1, 1, 1, np.random.default_rng(7), policy_hidden=(32, 32), q_hidden=(32, 32), lr=3e-4,
                  gamma=0.99, alpha=0.1, tau=0.005)
    agent.policy = as64(agent.policy)
    agent.critics = [as64(c) for c in agent.critics]
    agent.targets = [c.copy() for c in agent.critics]
    agent.policy_opt = Adam(agent.policy.data.size, 3e-4, dtype=np.float64)
    agent.critic_opts = [Adam(c.data.size, 3e-4, dtype=np.float64) for c in agent.critics]
    ref = ScalarSac(agent.policy, agent.critics, np.array([1.0, 1.0]), 0.1, 0.99, 3e-4)

    buffer = ReplayBuffer(2000, 1, 1, 1)
    data_rng = np.random.default_rng(70)
    rng_ours, rng_ref = np.random.default_rng(71), np.random.default_rng(71)
    worst = 0.0
    w = np.ones(1)
    for step in range(1000):
        obs = env.observe(env.reset())
        action = np.tanh(data_rng.normal(size=1))
        _, done = env.step(obs, action)
        buffer.push(w, obs, action, obs, 0, done)
        idx = data_rng.integers(0, buffer.size, size=64)
        b = buffer.gather(idx)
        obs_b, w_b, act_b = (b.obs.astype(np.float64), b.w.astype(np.float64), b.act.astype(np.float64))
        r = env.reward(act_b)
        batch = Batch(w=w_b, obs=obs_b, act=act_b, next_obs=obs_b, t=b.t, done=b.done,
                      w_ext=extend_preference(w_b), reward=np.stack([np.zeros_like(r), r], axis=1))
        ours_critic = agent.update_critics(batch, rng_ours)
        ours_actor, _ = agent.update_actor(batch, rng_ours)
        agent.update_targets()
        ref_critic, ref_actor = ref.update(obs_b, w_b, act_b, r, obs_b, b.done.astype(np.float64), rng_ref)
        diffs = [abs(a - c) for a, c in zip(ours_critic, ref_critic)] + [abs(ours_actor - ref_actor)]
        worst = max(worst, max(diffs))
    ok = worst < 1e-6
    report(7, ok, f"max per-step |loss - reference loss| over 1000 steps = {worst:.2e} (< 1e-6)")
    assert ok


# 8 ---------------------------------------------------------------------------------

def test_criterion_08_gradient_integrity(report):
    rng = np.random.default_rng(8)
    results = {}

    net = Mlp([5, 12, 9, 3], rng, dtype=np.float64)
    x = rng.normal(size=(10, 5))
    g_out = rng.normal(size=(10, 3))
    _, cache = net.forward(x, keep=True)
    grad, g_in = net.backward(cache, g_out)
    f = lambda: float(np.sum(net.forward(x) * g_out))
    results["mlp params"] = max_rel_err(grad, numeric_grad(f, net.data))
    results["mlp input"] = max_rel_err(g_in, numeric_grad(f, x))

    policy = Mlp([6, 16, 4], rng, dtype=np.float64)
    critics = [Mlp([8, 16, 12, 3], rng, dtype=np.float64) for _ in range(2)]
    w = sample_uniform_sphere(2, rng, size=16)
    batch = Batch(w=w, obs=rng.normal(size=(16, 4)), act=rng.uniform(-0.9, 0.9, size=(16, 2)),
                  next_obs=rng.normal(size=(16, 4)), t=np.arange(16), done=np.zeros(16, bool),
                  w_ext=extend_preference(w), reward=rng.normal(size=(16, 3)))
    y = rng.normal(size=(16, 3))
    _, grad = critic_loss(batch, critics[0], y)
    results["critic loss"] = max_rel_err(grad, numeric_grad(lambda: critic_loss(batch, critics[0], y, False)[0],
                                                            critics[0].data))
    _, grad, _ = actor_loss(batch, policy, critics, 0.1, np.random.default_rng(1))
    fa = lambda: actor_loss(batch, policy, critics, 0.1, np.random.default_rng(1), with_grad=False)[0]
    results["actor loss"] = max_rel_err(grad, numeric_grad(fa, policy.data))

    for m in (2, 3):
        disc = VmfDiscriminator(2, m, rng, (16, 16))
        disc.net = Mlp([2, 16, 16, m + 1], rng, dtype=np.float64)
        disc.net.biases[-1][m] = 2.0   # kappa around 2: the ln C(kappa) chain carries real weight
        feats = rng.uniform(-3, 3, size=(24, 2))
        wd = sample_uniform_sphere(m, rng, size=24)
        t = rng.integers(0, 500, size=24)
        for variant in ("entire", "gamma"):
            _, grad = disc.loss(wd, feats, t, variant, 0.99)
            fd = numeric_grad(lambda: disc.loss(wd, feats, t, variant, 0.99, with_grad=False)[0], disc.net.data)
            results[f"vmf disc m={m} {variant}"] = max_rel_err(grad, fd)

    cat = CategoricalDiscriminator(2, 5, rng, (16,))
    cat.net = Mlp([2, 16, 5], rng, dtype=np.float64)
    z = rng.integers(0, 5, size=20)
    feats = rng.uniform(-3, 3, size=(20, 2))
    _, grad = diayn_disc_loss(cat, z, feats)
    results["diayn disc"] = max_rel_err(grad, numeric_grad(lambda: diayn_disc_loss(cat, z, feats, False)[0],
                                                           cat.net.data))
    worst = max(results.values())
    ok = worst < 1e-3
    report(8, ok, f"max relative error {worst:.2e} (< 1e-3) over " + ", ".join(results))
    assert ok


# 9 ---------------------------------------------------------------------------------

DIVERSITY_RUNS = {
    "DISCS-HIPPS4": dict(method="discs", hipps_k=4),
    "DISCS-NoHIPPS": dict(method="discs", hipps_k=1),
    "VISR-mode": dict(method="visr", hipps_k=1),
    "SAC-only": dict(method="sac", hipps_k=1),
}


def test_criterion_09_diversity_ordering(report):
    cells, times = {}, {}
    for name, kw in DIVERSITY_RUNS.items():
        cells[name] = []
        for seed in range(3):
            cfg = RunConfig.desk(env="nowall", seed=seed, total_timesteps=150_000, **kw)
            t0 = time.perf_counter()
            trainer = Trainer(cfg).run()
            times[(name, seed)] = time.perf_counter() - t0
            # the final record closes the last 50k-step occupancy window
            cells[name].append(trainer.records[-1]["occupied_cells"])
    med = {k: float(np.median(v)) for k, v in cells.items()}
    ordering = (med["DISCS-HIPPS4"] >= med["DISCS-NoHIPPS"] > med["VISR-mode"] > med["SAC-only"])
    ratio = med["DISCS-HIPPS4"] >= 3 * med["SAC-only"]
    slowest = max(times.values())
    ok = ordering and ratio and slowest <= 30 * 60
    report(9, ok, "median final occupied cells " + ", ".join(f"{k}={med[k]:g} {cells[k]}" for k in med)
           + f"; slowest run {slowest / 60:.1f} min (<= 30)")
    assert ok


# 10 --------------------------------------------------------------------------------

def test_criterion_10_hipps_mechanics(report, tmp_path):
    cfg = RunConfig.desk(hipps_k=4, batch_size=1024, disc_warmup=400, disc_every=200, total_timesteps=2000,
                         log_every=1000, heatmap_every=1000)
    tr = Trainer(cfg)
    problems = []
    n_batches = [0]

    def check(batch):
        n_batches[0] += 1
        if len(batch) != 4096:
            problems.append(f"size {len(batch)}")
        base = batch.w[:1024]
        relabeled = batch.w[1024:]
        np.testing.assert_array_equal(base, tr.buffer.w[batch.index[:1024]])
        norms = np.linalg.norm(relabeled.astype(np.float64), axis=1)
        if not np.all(np.abs(norms - 1) < 1e-5):
            problems.append("non-unit relabeled preference")
        if np.any(np.all(relabeled == np.tile(base, (3, 1)), axis=1)):
            problems.append("copy kept its stored preference")
        if np.any(np.abs(batch.w_ext[:, 1:] - batch.w) > 0):
            problems.append("scalarization preference differs from conditioning")

    tr.on_batch = check
    tr.run()
    a = Trainer(RunConfig.desk(total_timesteps=2000, log_every=1000), tmp_path / "a").run()
    b = Trainer(RunConfig.desk(hipps_k=1, hipps_source="prior", total_timesteps=2000, log_every=1000),
                tmp_path / "b").run()
    same_curves = (tmp_path / "a" / "curves.csv").read_bytes() == (tmp_path / "b" / "curves.csv").read_bytes()
    same_params = all(np.array_equal(n1.data, n2.data) for n1, n2 in zip(a.networks().values(), b.networks().values()))
    ok = not problems and n_batches[0] > 0 and same_curves and same_params
    report(10, ok, f"{n_batches[0]} batches of 4096 with 3072 relabeled unit preferences"
                   f"{' ' + str(problems[:3]) if problems else ''}; hipps_k=1 bit-identical to NoHIPPS: "
                   f"{same_curves and same_params}")
    assert ok


# 11 --------------------------------------------------------------------------------

def test_criterion_11_variant_plumbing(report, monkeypatch):
    rng = np.random.default_rng(11)
    disc = VmfDiscriminator(2, 2, rng, (64, 64))
    buffer = ReplayBuffer(300_000, 4, 2, 2)
    n = 250_000
    w = sample_uniform_sphere(2, rng, size=n).astype(np.float32)
    obs = rng.uniform(-1, 1, size=(n, 4)).astype(np.float32)
    for i in range(n):
        buffer.push(w[i], obs[i], (0.0, 0.0), obs[i], i % 500, False)
    batch = sample_disc_batch(buffer, 16384, rng, "entire")
    feats = batch.obs[:, :2] * 10
    gamma_loss, gamma_grad = disc.loss(batch.w, feats, batch.t, DiscUpdateVariant.GAMMA, gamma=1.0)
    entire_loss, entire_grad = disc.loss(batch.w, feats, batch.t, DiscUpdateVariant.ENTIRE)
    loss_gap = abs(gamma_loss - entire_loss)
    grad_gap = float(np.max(np.abs(gamma_grad - entire_grad)))

    recent = sample_disc_batch(buffer, 16384, rng, "recent", window=100_000)
    ages = buffer.n_pushed - buffer.step[recent.index]
    buffer_ok = int(ages.max()) <= 100_000

    # the same plumbing inside the training loop, with a short window
    import discs.train as train_module
    seen = []

    def recording(buf, k, r, variant, window):
        out = sample_disc_batch(buf, k, r, variant, window)
        seen.append(int(np.max(buf.n_pushed - buf.step[out.index])))
        return out

    monkeypatch.setattr(train_module, "sample_disc_batch", recording)
    Trainer(RunConfig.desk(disc_variant="recent", recent_window=500, disc_every=200, disc_warmup=600,
                           total_timesteps=3000, log_every=1000)).run()
    loop_ok = bool(seen) and max(seen) <= 500
    ok = loss_gap < 1e-7 and grad_gap < 1e-7 and buffer_ok and loop_ok
    report(11, ok, f"|Gamma(1) - Entire| loss {loss_gap:.1e}, grad {grad_gap:.1e} (< 1e-7); recent max age "
                   f"{int(ages.max())} (<= 1e5); in-loop max age {max(seen) if seen else None} (<= 500)")
    assert ok


# 12 --------------------------------------------------------------------------------

def test_criterion_12_split_run_resume(report, tmp_path):
    cfg = RunConfig.desk(total_timesteps=100_000)
    Trainer(cfg, tmp_path / "full").run()
    Trainer(cfg, tmp_path / "first").run(until=50_000)
    # the half-way checkpoint is written at the end of the partial run
    resumed = Trainer.load(tmp_path / "first" / "checkpoint.ckpt", out_dir=tmp_path / "second")
    assert resumed.timestep == 50_000
    resumed.run()
    a = (tmp_path / "full" / "curves.csv").read_bytes()
    b = (tmp_path / "second" / "curves.csv").read_bytes()
    heat_same = all((tmp_path / "full" / f"heatmap_{i}.csv").read_bytes()
                    == ((tmp_path / ("first" if i == 0 else "second") / f"heatmap_{i}.csv").read_bytes())
                    for i in range(2))
    rows = a.count(b"\n") - 1
    ok = a == b and heat_same
    report(12, ok, f"curves.csv identical: {a == b} ({rows} rows); heatmaps identical: {heat_same}")
    assert ok
