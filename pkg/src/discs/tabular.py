"""Exact soft policy iteration on finite MDPs with vector rewards.

Used to check policy improvement and convergence of the multi-objective soft
updates: each preference is an independent MDP once scalarized.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .envs import FiniteMdp
from .morl import extend_preference


def soft_policy_evaluation(mdp: FiniteMdp, pi: np.ndarray, alpha: float) -> np.ndarray:
    """Vector soft Q of a fixed policy ``pi[s, a]``; shape ``(S, A, m + 1)``.

    Solves Q = r_ext + gamma * P (pi . (Q + h)) exactly, with slot 0 of the
    reward equal to zero and h = (-alpha log pi, 0, ..., 0).
    """
    S, A, m = mdp.n_states, mdp.n_actions, mdp.reward_dim
    with np.errstate(divide="ignore"):
        log_pi = np.where(pi > 0, np.log(np.where(pi > 0, pi, 1.0)), 0.0)
    # M[(s,a), (s',a')] = P[s,a,s'] * pi[s',a']
    M = (mdp.P[:, :, :, None] * pi[None, None, :, :]).reshape(S * A, S * A)
    h = np.zeros((S * A, m + 1))
    h[:, 0] = -alpha * log_pi.reshape(-1)
    r_ext = np.concatenate([np.zeros((S, A, 1)), mdp.R], axis=-1).reshape(S * A, m + 1)
    rhs = r_ext + mdp.gamma * M @ h
    Q = np.linalg.solve(np.eye(S * A) - mdp.gamma * M, rhs)
    return Q.reshape(S, A, m + 1)


def boltzmann_policy(scalar_q: np.ndarray, alpha: float) -> np.ndarray:
    """pi(a|s) proportional to exp(Q(s, a) / alpha)."""
    z = scalar_q / alpha
    return np.exp(z - logsumexp(z, axis=-1, keepdims=True))


@dataclass
class PolicyIterationTrace:
    preferences: np.ndarray
    scalar_q: list = field(default_factory=list)   # per iteration: (n_pref, S, A)
    policies: list = field(default_factory=list)   # per iteration: (n_pref, S, A)

    @property
    def final(self) -> np.ndarray:
        return self.scalar_q[-1]


def tabular_soft_policy_iteration(mdp: FiniteMdp, preferences, alpha: float, gamma: float | None = None,
                                  max_iter: int = 500, tol: float = 1e-12) -> PolicyIterationTrace:
    """Alternate exact soft evaluation with the Boltzmann improvement step, per preference.

    Starts from the uniform policy and records the scalarized soft Q after
    every evaluation. Stops when no policy entry moves more than ``tol``.
    """
    if gamma is not None and gamma != mdp.gamma:
        mdp = FiniteMdp(mdp.P, mdp.R, gamma)
    prefs = np.atleast_2d(np.asarray(preferences, dtype=np.float64))
    W = extend_preference(prefs)
    S, A = mdp.n_states, mdp.n_actions
    pis = np.full((len(prefs), S, A), 1.0 / A)
    trace = PolicyIterationTrace(prefs)
    for _ in range(max_iter):
        scalar = np.stack([soft_policy_evaluation(mdp, pi, alpha) @ w for pi, w in zip(pis, W)])
        trace.scalar_q.append(scalar)
        trace.policies.append(pis)
        new = boltzmann_policy(scalar, alpha)
        delta = np.max(np.abs(new - pis))
        pis = new
        if delta < tol:
            break
    return trace
