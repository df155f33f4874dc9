"""Juttner and Maxwell distributions, the Bessel function K2, and solution weights."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_genlaguerre

from .errors import DomainError
from .frames import Frame, post_collision
from .kinematics import _p0, dot

K2_X_MIN = 0.1
K2_NODES = 64


@lru_cache(maxsize=None)
def _laguerre(n: int):
    return roots_genlaguerre(n, 1.5)


def bessel_k2e(x, n: int = K2_NODES):
    """Exponentially scaled ``e^x K_2(x)`` for ``x >= 0.1``.

    Uses ``K_2(x) = e^{-x}/(3 sqrt(x)) int_0^inf e^{-s} s^{3/2} (s/x + 2)^{3/2} ds``
    with generalized Gauss-Laguerre nodes for the weight ``e^{-s} s^{3/2}``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < K2_X_MIN):
        raise DomainError(f"bessel_k2 supports x >= {K2_X_MIN}")
    s, w = _laguerre(n)
    vals = np.tensordot((s[:, None] / x.reshape(1, -1) + 2.0) ** 1.5, w, axes=(0, 0)) if x.ndim else \
        np.dot(w, (s / x + 2.0) ** 1.5)
    return np.reshape(vals, x.shape) / (3.0 * np.sqrt(x))


def bessel_k2(x, n: int = K2_NODES):
    x = np.asarray(x, dtype=float)
    return bessel_k2e(x, n) * np.exp(-x)


def maxwellian(p, N: int | None = None):
    """``(2 pi)^{-N/2} exp(-|p|^2/2)``."""
    p = np.asarray(p, dtype=float)
    N = p.shape[-1] if N is None else N
    if N not in (2, 3) or p.shape[-1] != N:
        raise DomainError("maxwellian needs N in {2, 3} matching the momentum")
    return (2.0 * np.pi) ** (-N / 2.0) * np.exp(-0.5 * dot(p, p))


def juttner_normalization(c, N: int) -> float:
    """``Z(c) = int exp(c^2 - c p0) dp`` over R^N."""
    c = float(c)
    if N == 3:
        return float(4.0 * np.pi * c * bessel_k2e(c * c))
    if N == 2:
        # 2 pi int_c^inf u e^{c(c-u)} du in closed form
        return 2.0 * np.pi * (1.0 + 1.0 / (c * c))
    raise DomainError("juttner needs N in {2, 3}")


def juttner_exponent(p, c):
    """``c^2 - c p0 = -c |p|^2 / (c + p0)``, computed without cancellation."""
    pp = dot(p, p)
    return -c * pp / (c + np.sqrt(c * c + pp))


def juttner(p, c, N: int | None = None):
    """Normalized relativistic Maxwellian ``e^{-c p0} / int e^{-c p0}``."""
    p = np.asarray(p, dtype=float)
    N = p.shape[-1] if N is None else N
    if p.shape[-1] != N:
        raise DomainError("momentum dimension does not match N")
    c = float(c)
    if c < 1.0 or not np.isfinite(c):
        raise DomainError("juttner needs finite c >= 1")
    return np.exp(juttner_exponent(p, c)) / juttner_normalization(c, N)


@dataclass(frozen=True)
class WeightParams:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("weight parameters must be positive")


def weight_rel(x, p, c, params: WeightParams):
    """``exp(-alpha p0 |x|^2 / c) J(p)^beta``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return np.exp(-params.alpha * _p0(p, c) * dot(x, x) / c) * juttner(p, c) ** params.beta


def weight_newt(x, p, params: WeightParams):
    """``exp(-alpha |x|^2) mu(p)^beta``."""
    x = np.asarray(x, dtype=float)
    return np.exp(-params.alpha * dot(x, x)) * maxwellian(p) ** params.beta


def invariant_identity_sides(x, t, p, q, omega, c, frame=Frame.CM):
    """Both sides of the four-term energy/dispersion invariant, vectorised."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p_out, q_out = post_collision(p, q, omega, c, frame)
    p0, q0, p0o, q0o = (_p0(v, c) for v in (p, q, p_out, q_out))

    def vel(v, v0):
        return c * v / v0[..., None]

    ph, qh, pho, qho = vel(p, p0), vel(q, q0), vel(p_out, p0o), vel(q_out, q0o)
    tt = t[..., None]

    def sq(v):
        return dot(v, v)

    c3t2 = c**3 * t * t
    lhs = (c3t2 / q0o + q0o / c * sq(x + tt * (ph - qho))
           + c3t2 / p0o + p0o / c * sq(x + tt * (ph - pho)))
    rhs = (c3t2 / p0 + p0 / c * sq(x)
           + c3t2 / q0 + q0 / c * sq(x + tt * (ph - qh)))
    return lhs, rhs


def invariant_identity_residual(x, t, p, q, omega, c, frame=Frame.CM):
    """``|LHS - RHS| / RHS`` of the invariant; zero when ``t = 0`` and ``x = 0``."""
    lhs, rhs = invariant_identity_sides(x, t, p, q, omega, c, frame)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.abs(lhs - rhs) / rhs
    return np.where(rhs == 0, np.abs(lhs), r)


def chi1(x):
    """``1 + x/2 - sqrt(1+x)`` written as ``(x^2/4) / (1 + x/2 + sqrt(1+x))``."""
    x = np.asarray(x, dtype=float)
    return 0.25 * x * x / (1.0 + 0.5 * x + np.sqrt(1.0 + x))


def chi2(c, p_abs):
    """``c^2 - c^2 sqrt(1 + |p|^2/c^2)`` written as ``-|p|^2 / (1 + sqrt(1 + |p|^2/c^2))``."""
    c = np.asarray(c, dtype=float)
    pp = np.asarray(p_abs, dtype=float) ** 2
    return -pp / (1.0 + np.sqrt(1.0 + pp / (c * c)))


def jsol_constant(N: int) -> float:
    """Constant A with ``e^{-|p|^2/2}/A <= J(p) <= A e^{-|p|}`` for every ``c >= 1``.

    Lower side: ``J >= e^{-|p|^2/2}/Z(c)`` and Z decreases in c.  Upper side:
    ``J <= e^{1 - |p|}/Z(c)`` with ``Z(c) >= (2 pi)^{N/2}``.
    """
    return max(juttner_normalization(1.0, N), np.e / (2.0 * np.pi) ** (N / 2.0))


def sharp_asymp_constant(N: int, A1: float = 1.0) -> float:
    """``e^{A1^4/8} (2 pi)^{-N/2}`` bounds ``J(|p|=h) e^{h^2/2}`` whenever ``h <= A1 sqrt(c)``."""
    return float(np.exp(A1**4 / 8.0) * (2.0 * np.pi) ** (-N / 2.0))


def sharp_asymp_ratio(h, c, N: int = 3):
    """``J(|p| = h) e^{h^2/2}``."""
    p = np.zeros(N)
    p[0] = h
    return float(juttner(p, c) * np.exp(0.5 * h * h))


def taylor_remainder(h, c):
    """``|c^2 R(h^2/c^2)|`` with ``R(x) = sqrt(1+x) - 1 - x/2``."""
    return float(c * c * chi1(h * h / (c * c)))


def sharp_asymp_check(h, c, N: int = 3, A1: float = 1.0) -> bool:
    if h < 0 or h > A1 * np.sqrt(c):
        raise DomainError(f"need 0 <= h <= A1 sqrt(c) = {A1 * np.sqrt(c)}")
    if taylor_remainder(h, c) > A1**4 / 8.0 * (1 + 1e-12):
        return False
    return sharp_asymp_ratio(h, c, N) <= sharp_asymp_constant(N, A1)
