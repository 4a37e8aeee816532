"""Densities, normalizers and samplers on the unit sphere.

Everything here works in float64. Functions accept scalars or arrays and
broadcast in the usual numpy way; the sphere dimension ``m`` is always the
last axis of direction arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

KAPPA_MIN = 1e-4
KAPPA_MAX = 100.0

_SERIES_CUTOVER = 20.0
_UNIT_TOL = 1e-6


def _as_unit(v, name="vector"):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] < 2:
        raise ValueError(f"{name} must have dimension >= 2, got {v.shape[-1]}")
    norms = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        raise ValueError(f"{name} is not unit-norm (max deviation {np.max(np.abs(norms - 1.0)):.3g})")
    return v


@dataclass(frozen=True)
class VmfParams:
    """Mean direction and concentration of a von Mises-Fisher distribution."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _as_unit(self.mu, "mu"))
        if not (KAPPA_MIN <= self.kappa <= KAPPA_MAX) and self.kappa != 0.0:
            raise ValueError(f"kappa={self.kappa} outside [{KAPPA_MIN}, {KAPPA_MAX}]")

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


@dataclass(frozen=True)
class PnParams:
    """Projected normal: direction of X ~ N(mu, I / kappa)."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _as_unit(self.mu, "mu"))
        if not self.kappa > 0:
            raise ValueError(f"projected normal needs kappa > 0, got {self.kappa}")


def _log_series(order, x):
    """ln sum_k (x/2)^{2k} / (k! Gamma(k+order+1)), the series without its (x/2)^order prefactor."""
    x = np.asarray(x, dtype=np.float64)
    x_max = float(np.max(x, initial=0.0))
    n_terms = int(x_max / 2 + 8 * math.sqrt(x_max) + 25)
    k = np.arange(n_terms, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_half = np.log(x / 2.0)[..., None]
        # x == 0 leaves only the k=0 term
        log_terms = np.where(k == 0, 0.0, 2.0 * k * log_half) - gammaln(k + 1) - gammaln(k + order + 1)
    peak = np.max(log_terms, axis=-1, keepdims=True)
    return peak[..., 0] + np.log(np.sum(np.exp(log_terms - peak), axis=-1))


def _log_hankel(order, x):
    """Large-argument expansion of ln I_order(x); caller guarantees x >> order**2."""
    mu4 = 4.0 * order * order
    total = np.ones_like(x)
    term = np.ones_like(x)
    for k in range(1, 40):
        factor = -(mu4 - (2 * k - 1) ** 2) / (8.0 * k * x)
        new_term = term * factor
        if np.all(np.abs(new_term) >= np.abs(term)) and k > 1:
            break
        term = new_term
        total = total + term
        if np.all(np.abs(term) < 1e-17 * np.abs(total)):
            break
    return x - 0.5 * np.log(2.0 * np.pi * x) + np.log(total)


def log_bessel_i(order, x):
    """Natural log of the modified Bessel function of the first kind.

    Uses the positive power series below ``x = 20`` (and wherever the order is
    too large for the asymptotic form to converge quickly), otherwise the
    Hankel large-argument expansion. Evaluating in log space keeps the result
    finite for large arguments where ``I`` itself overflows.

    Returns ``-inf`` at ``x = 0`` for positive orders.
    """
    if order < 0:
        raise ValueError(f"order must be nonnegative, got {order}")
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise ValueError("x must be nonnegative")
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    out = np.empty_like(x_arr)

    hankel = (x_arr >= _SERIES_CUTOVER) & (x_arr >= 2.0 * order * order)
    series = ~hankel
    if np.any(series):
        xs = x_arr[series]
        with np.errstate(divide="ignore", invalid="ignore"):
            prefix = np.where(xs > 0, order * np.log(xs / 2.0), 0.0 if order == 0 else -np.inf)
        out[series] = prefix + _log_series(order, xs)
    if np.any(hankel):
        out[hankel] = _log_hankel(order, x_arr[hankel])
    return float(out[0]) if scalar else out


def log_norm_const(m: int, kappa):
    """ln C_m(kappa) of the vMF density; kappa = 0 gives the uniform density on the sphere."""
    if m < 2:
        raise ValueError(f"sphere dimension must be >= 2, got {m}")
    k = np.asarray(kappa, dtype=np.float64)
    if np.any(k < 0):
        raise ValueError("kappa must be nonnegative")
    nu = m / 2.0 - 1.0
    uniform = gammaln(m / 2.0) - math.log(2.0) - (m / 2.0) * math.log(math.pi)
    safe = np.where(k > 0, k, 1.0)
    with np.errstate(divide="ignore"):
        log_k = np.log(safe) if nu else np.zeros_like(safe)
    value = nu * log_k - (m / 2.0) * math.log(2.0 * math.pi) - log_bessel_i(nu, safe)
    value = np.where(k > 0, value, uniform)
    return float(value) if np.ndim(value) == 0 else value


def dlogC_dkappa(m: int, kappa):
    """d ln C_m / d kappa = -I_{m/2}(kappa) / I_{m/2-1}(kappa), in (-1, 0]."""
    if m < 2:
        raise ValueError(f"sphere dimension must be >= 2, got {m}")
    k = np.asarray(kappa, dtype=np.float64)
    nu = m / 2.0 - 1.0
    if np.any(k < 0):
        raise ValueError("kappa must be nonnegative")
    safe = np.where(k > 0, k, 1.0)
    ratio = np.exp(log_bessel_i(nu + 1.0, safe) - log_bessel_i(nu, safe))
    value = np.where(k > 0, -ratio, 0.0)
    return float(value) if np.ndim(value) == 0 else value


def vmf_log_density(w, mu, kappa=None):
    """ln q(w) = ln C_m(kappa) + kappa * w.mu.

    ``mu`` may be a :class:`VmfParams`, in which case ``kappa`` is taken from it.
    Batched inputs broadcast over leading axes.
    """
    if isinstance(mu, VmfParams):
        mu, kappa = mu.mu, mu.kappa
    w = np.asarray(w, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if w.shape[-1] != mu.shape[-1]:
        raise ValueError(f"dimension mismatch: w has {w.shape[-1]}, mu has {mu.shape[-1]}")
    kappa = np.asarray(kappa, dtype=np.float64)
    m = w.shape[-1]
    return log_norm_const(m, kappa) + kappa * np.sum(w * mu, axis=-1)


def _normalize_rows(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def sample_uniform_sphere(m: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniform direction(s) on S^{m-1}; ``size`` adds leading batch axes."""
    if m < 2:
        raise ValueError(f"sphere dimension must be >= 2, got {m}")
    shape = (m,) if size is None else tuple(np.atleast_1d(size)) + (m,)
    x = rng.standard_normal(shape)
    norms = np.linalg.norm(x, axis=-1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        x[bad] = rng.standard_normal((int(bad.sum()), m))
        norms = np.linalg.norm(x, axis=-1)
    return _normalize_rows(x)


def sample_pn(mu, kappa, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw from the projected normal PN(mu, I/kappa).

    ``mu`` of shape (..., m) and ``kappa`` broadcastable to (...) give one draw
    per row; with ``size`` set, ``mu`` must be a single direction and
    ``size`` draws are returned.
    """
    if isinstance(mu, PnParams):
        mu, kappa = mu.mu, mu.kappa
    mu = np.asarray(mu, dtype=np.float64)
    kappa = np.asarray(kappa, dtype=np.float64)
    if np.any(kappa <= 0):
        raise ValueError("projected normal needs kappa > 0")
    if size is not None:
        mu = np.broadcast_to(mu, tuple(np.atleast_1d(size)) + mu.shape[-1:])
    kappa = np.broadcast_to(kappa, mu.shape[:-1])
    scale = (1.0 / np.sqrt(kappa))[..., None]
    x = mu + scale * rng.standard_normal(mu.shape)
    norms = np.linalg.norm(x, axis=-1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        x[bad] = mu[bad] + scale[bad] * rng.standard_normal((int(bad.sum()), mu.shape[-1]))
        norms = np.linalg.norm(x, axis=-1)
    return x / norms[..., None]
