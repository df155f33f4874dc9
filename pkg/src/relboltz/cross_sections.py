"""Differential cross-section catalog, growth envelope check and the cut-off set.

All formulas use unit mass; physical constants (r0, G, hbar) are plain
parameters so unit bookkeeping stays with the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, SingularAngleError
from .frames import Frame, _check_unit, _gs_parts, cm_energies
from .kinematics import _p0, dot, norm, relative_momentum


#: |sin(theta)| below this counts as a singular Moller angle.
SIN_EPS = 1e-12


class Kind(str, Enum):
    HARD_BALL = "HARD_BALL"
    MOLLER = "MOLLER"
    COMPTON = "COMPTON"
    NEUTRINO = "NEUTRINO"
    ISRAEL = "ISRAEL"
    MAXWELL_PARTICLES = "MAXWELL_PARTICLES"
    ENVELOPE = "ENVELOPE"


@dataclass(frozen=True)
class CutoffParams:
    B: float = 1.0
    a: float = 0.5
    alpha: float = 1.0

    def __post_init__(self):
        if not self.B > 0:
            raise DomainError("cut-off B must be positive")
        if not 0.0 <= self.a < 1.0:
            raise DomainError("cut-off a must lie in [0, 1)")
        if not self.alpha > 0:
            raise DomainError("cut-off alpha must be positive")


@dataclass(frozen=True)
class EnvelopeParams:
    """Constants of the growth/decay envelope.

    ``gamma`` must lie in ``[0, N)``; ``sigma_tilde`` is the (constant)
    angular factor and ``sigma1`` its upper bound.
    """

    A1: float = 1.0
    A2: float = 0.0
    alpha1: float = 0.0
    gamma: float = 0.0
    sigma1: float = 1.0
    sigma_tilde: float = 1.0
    N: int = 3

    def __post_init__(self):
        if self.A1 < 0 or self.A2 < 0 or self.alpha1 < 0:
            raise DomainError("envelope constants must be non-negative")
        if not 0.0 <= self.gamma < self.N:
            raise DomainError(f"gamma must lie in [0, N={self.N})")
        if not 0.0 <= self.sigma_tilde <= self.sigma1:
            raise DomainError("sigma_tilde must lie in [0, sigma1]")

    def value(self, g):
        g = np.asarray(g, dtype=float)
        with np.errstate(divide="ignore"):
            growth = self.A1 * (1.0 + (g / (1.0 + g)) ** self.alpha1)
            decay = self.A2 * g ** (-self.gamma) if self.A2 > 0 else 0.0
        return (growth + decay) * self.sigma_tilde


def tabulated(theta, values) -> Callable:
    """Linear interpolant of an angular profile on ``[0, pi]``."""
    theta = np.asarray(theta, dtype=float)
    values = np.asarray(values, dtype=float)
    if theta.ndim != 1 or theta.shape != values.shape or theta.size < 2:
        raise DomainError("angular table needs two equal-length columns with >= 2 rows")
    if np.any(np.diff(theta) <= 0) or theta[0] < 0 or theta[-1] > np.pi + 1e-12:
        raise DomainError("angular table must be ascending on [0, pi]")
    if np.any(values < 0):
        raise DomainError("angular profile must be non-negative")
    return lambda th: np.interp(th, theta, values)


def load_b_table(path) -> Callable:
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns 'theta value'")
    return tabulated(data[:, 0], data[:, 1])


@dataclass
class CrossSection:
    kind: Kind
    params: dict = field(default_factory=dict)
    cutoff: Optional[CutoffParams] = None
    b: Optional[Callable] = None  # angular profile for ISRAEL / MAXWELL_PARTICLES
    envelope: Optional[EnvelopeParams] = None

    def __post_init__(self):
        self.kind = Kind(self.kind)
        if self.kind in (Kind.ISRAEL, Kind.MAXWELL_PARTICLES) and self.b is None:
            if "b" in self.params:
                const = float(self.params["b"])
                self.b = lambda th: np.full_like(np.asarray(th, dtype=float), const)
            else:
                raise DomainError(f"{self.kind.value} needs an angular profile b(theta)")
        if self.kind is Kind.ENVELOPE and self.envelope is None:
            self.envelope = EnvelopeParams()

    def p(self, name, default=1.0) -> float:
        return float(self.params.get(name, default))

    @property
    def angle_free(self) -> bool:
        return self.kind in (Kind.HARD_BALL, Kind.NEUTRINO, Kind.ENVELOPE)

    def __call__(self, g, theta, c):
        return evaluate(self, g, theta, c)


def hard_ball(constant: float = 1.0, cutoff: Optional[CutoffParams] = None) -> CrossSection:
    return CrossSection(Kind.HARD_BALL, {"constant": constant}, cutoff=cutoff)


def evaluate(sigma: CrossSection, g, theta, c):
    """sigma(g, theta) at speed of light c (unit mass)."""
    g = np.asarray(g, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(g < 0):
        raise DomainError("g must be non-negative")
    if np.any((theta < 0) | (theta > np.pi)):
        raise DomainError("theta must lie in [0, pi]")
    kind = sigma.kind
    shape = np.broadcast(g, theta).shape

    if kind is Kind.HARD_BALL:
        return np.full(shape, sigma.p("constant"))
    if kind is Kind.NEUTRINO:
        G, hbar = sigma.p("G"), sigma.p("hbar")
        return np.broadcast_to(G * G * g * g / (np.pi * hbar * hbar * c * c), shape).copy()
    if kind is Kind.ENVELOPE:
        return np.broadcast_to(sigma.envelope.value(g), shape).copy()
    if kind is Kind.COMPTON:
        r0 = sigma.p("r0")
        s = g * g + 4.0 * c * c
        xi = 1.0 - c * c / s
        omc = 1.0 - np.cos(theta)
        den = 1.0 - 0.5 * xi * omc
        brace = 1.0 + 0.25 * xi * xi * omc * omc / den + ((1.0 - (1.0 - 0.5 * xi) * omc) / den) ** 2
        return 0.5 * r0 * r0 * (1.0 - xi) * brace
    if kind is Kind.MOLLER:
        sin_t = np.sin(theta)
        if np.any(np.abs(sin_t) < SIN_EPS):
            raise SingularAngleError("Moller cross section is singular at sin(theta) = 0")
        if np.any(g == 0.0):
            raise DomainError("Moller cross section needs g > 0 (u > 1)")
        r0 = sigma.p("r0")
        u2 = (g * g + 4.0 * c * c) / (4.0 * c * c)
        um1 = g * g / (4.0 * c * c)  # u^2 - 1 without cancellation
        s2 = sin_t * sin_t
        brace = (2 * u2 - 1) ** 2 / (s2 * s2) - (2 * u2 * u2 - u2 - 0.25) / s2 + 0.25 * um1 * um1
        return r0 * r0 * brace / (u2 * um1 * um1)
    # ISRAEL / MAXWELL_PARTICLES
    if np.any(g == 0.0):
        raise DomainError(f"{kind.value} cross section is singular at g = 0")
    out = sigma.b(theta) / (2.0 * g)
    if kind is Kind.ISRAEL:
        out = out / (1.0 + (g / c) ** 2)
    return np.broadcast_to(out, shape).copy()


@dataclass(frozen=True)
class EnvelopeReport:
    worst_ratio: float
    worst_at: tuple

    @property
    def passed(self) -> bool:
        return bool(self.worst_ratio <= 1.0)


def envelope_check(sigma: CrossSection, env: EnvelopeParams, sample) -> EnvelopeReport:
    """Worst ``sigma / envelope`` over ``sample``, an iterable of (g, theta, c)."""
    sample = np.asarray(sample, dtype=float).reshape(-1, 3)
    worst, at = -np.inf, None
    for g, th, c in sample:
        s = float(evaluate(sigma, g, th, c))
        e = float(env.value(g))
        ratio = s / e if e > 0 else (np.inf if s > 0 else 0.0)
        if ratio > worst:
            worst, at = ratio, (g, th, c)
    return EnvelopeReport(float(worst), at)


# ---------------------------------------------------------------- cut-off set


def h_c(x, p, q, t, c, params: CutoffParams):
    """``B/t^2 + a alpha q0 |x + t(p_hat - q_hat)|^2 / (c t^2)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("h_c needs t > 0")
    p0, q0 = _p0(p, c), _p0(q, c)
    d = np.asarray(x) + t[..., None] * c * (p / p0[..., None] - q / q0[..., None])
    return params.B / t**2 + params.a * params.alpha * q0 * dot(d, d) / (c * t**2)


def energy_defect(p, q, omega, c, frame=Frame.CM):
    """``c^3 (1/p0 + 1/q0 - 1/p0' - 1/q0')`` in a cancellation-free form."""
    frame = Frame(frame)
    p0, q0 = _p0(p, c), _p0(q, c)
    E = p0 + q0
    if frame is Frame.CM:
        g = relative_momentum(p, q, c)
        rs = np.sqrt(g * g + 4.0 * c * c)
        a_c = g * dot(omega, p + q) / (2.0 * rs)
        dpq = (dot(p, p) - dot(q, q)) / E
        diff = 0.25 * dpq * dpq - a_c * a_c
        prod = 0.25 * E * E - a_c * a_c
    elif frame is Frame.GS:
        _, n0, _ = _gs_parts(p, q, omega, c)
        dpq = (dot(p, p) - dot(q, q)) / E
        diff = n0 * (-dpq - n0)
        prod = (p0 + n0) * (q0 - n0)
    else:
        raise DomainError("cut-off set is defined for relativistic frames only")
    return c**3 * E * diff / (p0 * q0 * prod)


def in_cutoff_set(omega, x, p, q, t, c, params: CutoffParams, frame=Frame.CM):
    omega = _check_unit(omega)
    return energy_defect(p, q, omega, c, frame) >= -h_c(x, p, q, t, c, params)


def sphere_sample(N: int, n: int, rng) -> np.ndarray:
    v = rng.standard_normal((n, N))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def cutoff_measure(x, p, q, t, c, params: CutoffParams, n_samples: int = 10_000, seed: int = 0,
                   frame=Frame.CM, chunk: int = 65536) -> float:
    """Monte-Carlo fraction of the sphere inside the cut-off set."""
    if n_samples < 1000:
        raise DomainError("cutoff_measure needs at least 1000 samples")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    h = float(h_c(x, p, q, t, c, params))
    while done < n_samples:
        m = min(chunk, n_samples - done)
        om = sphere_sample(p.shape[-1], m, rng)
        hits += int(np.count_nonzero(energy_defect(p, q, om, c, frame) >= -h))
        done += m
    return hits / n_samples


def sufficient_c(p, q, T, B):
    """Speed of light beyond which the whole sphere lies in the cut-off set.

    Follows from ``g <= |p-q|``, ``s >= 4c^2``, ``p0 q0 >= c^2``,
    ``2 p0' q0' >= c (p0 + q0)`` and ``h >= B/T^2``.
    """
    return T * float(norm(np.add(p, q))) * float(norm(np.subtract(p, q))) / np.sqrt(8.0 * B)


def crude_sufficient_c(p, q, T, B):
    """The cruder closed form ``sqrt(|p+q||p-q| T / (8B))``; not a valid bound in general."""
    return float(np.sqrt(float(norm(np.add(p, q))) * float(norm(np.subtract(p, q))) * T / (8.0 * B)))


@dataclass(frozen=True)
class CStarReport:
    c_star: Optional[float]
    c_star_grid: Optional[float]
    analytic_bound: float
    crude_bound: float
    found: bool


def _sphere_full(p, q, x, t_grid, c, params, omegas, frame) -> bool:
    d = energy_defect(p, q, omegas, c, frame)
    dmin = float(np.min(d))
    for t in t_grid:
        if dmin < -float(h_c(x, p, q, t, c, params)):
            return False
    return True


def c_star_search(p, q, T, params: CutoffParams, c_grid: Sequence[float] = None,
                  n_omega: int = 10_000, n_t: int = 16, x=None, seed: int = 0,
                  frame=Frame.CM, bisect_tol: float = 1e-3) -> CStarReport:
    """Threshold c beyond which the full sphere lies in the cut-off set at every grid c.

    The omega sample always contains the two directions along ``+-(p+q)``,
    where the energy defect is smallest.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    N = p.shape[-1]
    if c_grid is None:
        c_grid = 2.0 ** np.arange(-6, 11)
    c_grid = np.sort(np.asarray(c_grid, dtype=float))
    x = np.zeros(N) if x is None else np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    om = sphere_sample(N, n_omega, rng)
    P = p + q
    if norm(P) > 0:
        e = P / norm(P)
        om = np.vstack([om, e, -e])
    t_grid = T * np.arange(1, n_t + 1) / n_t
    bound = sufficient_c(p, q, T, params.B)
    crude = crude_sufficient_c(p, q, T, params.B)

    def full(c):
        return _sphere_full(p, q, x, t_grid, c, params, om, frame)

    # membership is not monotone in c (tiny c is trivially inside), so c_* is
    # the threshold past the last failing grid value
    flags = [full(c) for c in c_grid]
    if not flags[-1]:
        return CStarReport(None, None, bound, crude, False)
    bad = [i for i, f in enumerate(flags) if not f]
    if not bad:
        return CStarReport(float(c_grid[0]), float(c_grid[0]), bound, crude, True)
    lo, hi = float(c_grid[bad[-1]]), float(c_grid[bad[-1] + 1])
    c_hi = hi
    while hi - lo > bisect_tol * hi:
        mid = 0.5 * (lo + hi)
        if full(mid):
            hi = mid
        else:
            lo = mid
    return CStarReport(hi, c_hi, bound, crude, True)
