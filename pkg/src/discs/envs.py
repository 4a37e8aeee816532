"""Point-mass arenas, a one-step bandit and random finite MDPs."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

EPISODE_LENGTH = 500
WALL_EPS = 1e-6


@dataclass(frozen=True)
class Wall:
    """Axis-aligned wall: the segment (x0, y0)-(x1, y1) thickened by ``thickness``."""

    x0: float
    y0: float
    x1: float
    y1: float
    thickness: float = 0.2

    @property
    def box(self):
        h = self.thickness / 2.0
        return (min(self.x0, self.x1) - h, min(self.y0, self.y1) - h,
                max(self.x0, self.x1) + h, max(self.y0, self.y1) + h)

    def contains(self, p) -> bool:
        bx0, by0, bx1, by1 = self.box
        return bx0 < p[0] < bx1 and by0 < p[1] < by1


def u_wall(distance: float = 3.0, arm_length: float = 4.0, half_width: float = 2.0, thickness: float = 0.2):
    """Three sides of a rectangle around the origin; the back sits at x = distance, the mouth faces -x."""
    back_x = distance
    tip_x = distance - arm_length
    return (
        Wall(back_x, -half_width, back_x, half_width, thickness),
        Wall(tip_x, half_width, back_x, half_width, thickness),
        Wall(tip_x, -half_width, back_x, -half_width, thickness),
    )


@dataclass(frozen=True)
class PointMassState:
    position: np.ndarray
    velocity: np.ndarray
    t: int = 0


@dataclass
class PointMassEnv:
    """Planar point mass with linear drag, a speed cap and sliding walls.

    One step is semi-implicit Euler:
    ``v' = clip(v + dt * (f_max * a - drag * v), v_max)``, ``p' = p + dt * v'``,
    followed by collision projection against the walls and the arena box.
    """

    walls: tuple = ()
    bound: float = 10.0
    dt: float = 0.05
    f_max: float = 1.0
    drag: float = 2.0
    v_max: float = 0.4
    episode_length: int = EPISODE_LENGTH
    name: str = "nowall"

    obs_dim = 4
    act_dim = 2

    def reset(self, rng=None) -> PointMassState:
        return PointMassState(np.zeros(2), np.zeros(2), 0)

    def observe(self, state: PointMassState) -> np.ndarray:
        """Network input: position scaled by the arena bound, velocity by the speed cap."""
        return np.concatenate([state.position / self.bound, state.velocity / self.v_max])

    def features(self, state_or_obs) -> np.ndarray:
        """Discriminator input (x-y prior): the position in metres.

        Unscaled on purpose: early on the agent stays within a metre of the
        origin, and dividing by the bound would hide that spread from q(w|s).
        """
        if isinstance(state_or_obs, PointMassState):
            return np.asarray(state_or_obs.position)
        return np.asarray(state_or_obs)[..., :2] * self.bound

    def step(self, state: PointMassState, action):
        a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        v = state.velocity + self.dt * (self.f_max * a - self.drag * state.velocity)
        speed = np.linalg.norm(v)
        if speed > self.v_max:
            v = v * (self.v_max / speed)
        candidate = state.position + self.dt * v
        p, blocked = collide_project(state.position, candidate, self.walls, self.bound)
        v = np.where(blocked, 0.0, v)
        t = state.t + 1
        return PointMassState(p, v, t), t >= self.episode_length


def _sweep_axis(p, target, axis, boxes, bound):
    """Move coordinate ``axis`` of ``p`` toward ``target``, stopping at the first wall face."""
    start = p[axis]
    other = p[1 - axis]
    stop = target
    blocked = False
    for box in boxes:
        lo, hi = box[axis], box[axis + 2]
        olo, ohi = box[1 - axis], box[3 - axis]
        if not olo < other < ohi:
            continue
        if target > start and start <= lo < target:
            face = lo - WALL_EPS
            if face < stop:
                stop, blocked = face, True
        elif target < start and target < hi <= start:
            face = hi + WALL_EPS
            if face > stop:
                stop, blocked = face, True
    if stop > bound or stop < -bound:
        stop, blocked = float(np.clip(stop, -bound, bound)), True
    q = p.copy()
    q[axis] = stop
    return q, blocked


def collide_project(p, p_candidate, walls=(), bound: float = np.inf):
    """Resolve the motion p -> p_candidate against walls by sliding along faces.

    Motion is swept one axis at a time (x, then y); the blocked component
    stops just short of the face, the other is kept. Returns the resolved
    point and a per-axis "blocked" mask.
    """
    p = np.asarray(p, dtype=np.float64)
    target = np.asarray(p_candidate, dtype=np.float64)
    boxes = [w.box for w in walls]
    q, bx = _sweep_axis(p, target[0], 0, boxes, bound)
    q, by = _sweep_axis(q, target[1], 1, boxes, bound)
    return q, np.array([bx, by])


def make_env(name: str = "nowall", **overrides) -> PointMassEnv:
    if name == "nowall":
        env = PointMassEnv(name="nowall")
    elif name == "uwall":
        env = PointMassEnv(walls=u_wall(), name="uwall")
    else:
        raise ValueError(f"unknown env {name!r}; expected 'nowall' or 'uwall'")
    return replace(env, **overrides) if overrides else env


@dataclass
class BanditEnv:
    """One-step continuous bandit with a fixed scalar reward r(a) = -(a - target)^2.

    Every episode terminates after one step, so the soft Bellman target is the
    reward alone.
    """

    target: float = 0.5
    obs_dim = 1
    act_dim = 1
    episode_length = 1

    def reset(self, rng=None):
        return np.zeros(1)

    def observe(self, state):
        return np.asarray(state, dtype=np.float64)

    def reward(self, action):
        return -np.square(np.asarray(action)[..., 0] - self.target)

    def step(self, state, action):
        return np.zeros(1), True


@dataclass
class FiniteMdp:
    """Tabular MDP with vector rewards: ``P[s, a, s']`` and ``R[s, a, :]``."""

    P: np.ndarray
    R: np.ndarray
    gamma: float

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        self.R = np.asarray(self.R, dtype=np.float64)
        if not np.allclose(self.P.sum(axis=-1), 1.0, atol=1e-9):
            raise ValueError("transition rows must sum to 1")

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    @property
    def reward_dim(self) -> int:
        return self.R.shape[-1]


def random_mdp(rng: np.random.Generator, n_states=5, n_actions=3, reward_dim=2, gamma=0.9) -> FiniteMdp:
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    R = rng.uniform(-1.0, 1.0, size=(n_states, n_actions, reward_dim))
    return FiniteMdp(P, R, gamma)
