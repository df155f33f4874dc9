"""Explicit Lorentz transformations into the centre-of-momentum frame (N=3).

Matrices act on contravariant four-vectors ``(p0, p1, p2, p3)`` and satisfy
``L.T @ D @ L = D`` with ``D = diag(1, -1, -1, -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateCollisionError, DomainError, InvalidTransformError
from .kinematics import _p0, check_momentum, check_speed, cross_norm, relative_momentum

D = np.diag([1.0, -1.0, -1.0, -1.0])

LORENTZ_TOL = 1e-10
APPLY_TOL = 1e-8


class Provenance(str, Enum):
    BOOST = "BOOST"
    FRAME_EX2 = "FRAME_EX2"
    HILBERT_SCHMIDT_EX3 = "HILBERT_SCHMIDT_EX3"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class LorentzMatrix:
    entries: np.ndarray
    provenance: Provenance = Provenance.CUSTOM

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __matmul__(self, other):
        return self.entries @ np.asarray(other)

    def residual(self) -> float:
        return lorentz_residual(self.entries)

    def inverse(self) -> "LorentzMatrix":
        return LorentzMatrix(inverse(self.entries), self.provenance)


def lorentz_residual(L) -> float:
    """``max |L^T D L - D|``."""
    L = np.asarray(L, dtype=float)
    return float(np.max(np.abs(L.T @ D @ L - D)))


def is_lorentz(L, tol: float = LORENTZ_TOL) -> bool:
    return lorentz_residual(L) <= tol


def inverse(L) -> np.ndarray:
    """``L^-1 = D L^T D``, valid for any Lorentz transformation."""
    L = np.asarray(L, dtype=float)
    return D @ L.T @ D


def four_vector(p, c) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.concatenate([[_p0(p, c)], p])


def _setup(p, q, c):
    p, q = check_momentum(p), check_momentum(q)
    if p.shape != (3,) or q.shape != (3,):
        raise DomainError("Lorentz constructions are implemented for N=3 single pairs")
    c = check_speed(c)
    p0, q0 = float(_p0(p, c)), float(_p0(q, c))
    g = float(relative_momentum(p, q, c))
    return p, q, c, p0, q0, g, np.sqrt(g * g + 4.0 * c * c)


def boost_to_com(p, q, c) -> LorentzMatrix:
    """Pure boost with velocity ``(p+q)/(p0+q0)``."""
    p, q, c, p0, q0, g, rs = _setup(p, q, c)
    P = p + q
    E = p0 + q0
    L = np.eye(4)
    L[0, 0] = E / rs
    L[0, 1:] = -P / rs
    L[1:, 0] = -P / rs
    # (gamma - 1) / |P|^2 rewritten so that P = 0 gives the identity
    L[1:, 1:] += np.outer(P, P) / (rs * (E + rs))
    return LorentzMatrix(L, Provenance.BOOST)


def _ex2_w1(P):
    a, b, c3 = P
    if a == 0.0:
        return np.array([1.0, 0.0, 0.0])
    # orthogonal to (a, b, c3); the last slot is -a b (not -b c3)
    w = np.array([-b * c3, 2.0 * a * c3, -a * b])
    n = np.linalg.norm(w)
    if n < 1e-13 * max(1.0, float(np.dot(P, P))):
        w3 = P / np.linalg.norm(P)
        e = np.zeros(3)
        e[int(np.argmin(np.abs(w3)))] = 1.0
        w = e - np.dot(e, w3) * w3
        n = np.linalg.norm(w)
    return w / n


def frame_transform_ex2(p, q, c) -> LorentzMatrix:
    """Transform built from an orthonormal triad ``w1, w2, w3 = (p+q)/|p+q|``."""
    p, q, c, p0, q0, g, rs = _setup(p, q, c)
    P = p + q
    nP = float(np.linalg.norm(P))
    if nP == 0.0:
        raise DegenerateCollisionError("p + q = 0: already in the centre-of-momentum frame")
    E = p0 + q0
    w3 = P / nP
    w1 = _ex2_w1(P)
    w2 = np.cross(w1, w3)
    w2 /= np.linalg.norm(w2)
    L = np.zeros((4, 4))
    L[0, 0] = E / rs
    L[0, 1:] = -P / rs
    L[1, 1:] = w1
    L[2, 1:] = w2
    L[3, 0] = nP / rs
    L[3, 1:] = -w3 * E / rs
    return LorentzMatrix(L, Provenance.FRAME_EX2)


def hs_transform_ex3(p, q, c) -> LorentzMatrix:
    """Transform with ``L(P+Q) = (sqrt(s),0,0,0)`` and ``L(P-Q) = (0,0,0,g)``."""
    p, q, c, p0, q0, g, rs = _setup(p, q, c)
    cx = np.cross(p, q)
    ncx = float(cross_norm(p, q))
    if ncx == 0.0:
        raise DegenerateCollisionError("collinear momenta: p x q = 0")
    if g == 0.0:
        raise DegenerateCollisionError("g = 0")
    E = p0 + q0
    # -p^mu q_mu = c^2 + g^2/2, so c^2 p0 - q0 (-p^mu q_mu) = c^2 (p0 - q0) - q0 g^2/2
    R = 0.5 * rs * g  # = sqrt((p^mu q_mu)^2 - c^4)
    dpq = float(np.dot(p, p) - np.dot(q, q)) / E  # p0 - q0
    h = 0.5 * g * g
    L = np.zeros((4, 4))
    L[0, 0] = E / rs
    L[0, 1:] = -(p + q) / rs
    L[1, 0] = ncx / R
    L[1, 1:] = (p * (c * c * dpq - q0 * h) - q * (c * c * dpq + p0 * h)) / (R * ncx)
    L[2, 1:] = cx / ncx
    L[3, 0] = (q0 - p0) / g
    L[3, 1:] = (p - q) / g
    return LorentzMatrix(L, Provenance.HILBERT_SCHMIDT_EX3)


def com_residual(L, p, q, c) -> float:
    """``|L(P+Q) - (sqrt(s),0,0,0)|_max``."""
    p, q, c, p0, q0, g, rs = _setup(p, q, c)
    v = np.asarray(L, dtype=float) @ (four_vector(p, c) + four_vector(q, c))
    return float(np.max(np.abs(v - np.array([rs, 0.0, 0.0, 0.0]))))


def relative_residual(L, p, q, c) -> float:
    """``|L(P-Q) - (0,0,0,g)|_max``."""
    p, q, c, p0, q0, g, rs = _setup(p, q, c)
    v = np.asarray(L, dtype=float) @ (four_vector(p, c) - four_vector(q, c))
    return float(np.max(np.abs(v - np.array([0.0, 0.0, 0.0, g]))))


def post_collision_via(L, p, q, omega, c):
    """Outgoing pair ``(p', q')`` from ``P' = L^-1 (sqrt(s), g omega) / 2``."""
    Lm = np.asarray(L, dtype=float)
    if lorentz_residual(Lm) > APPLY_TOL:
        raise InvalidTransformError("matrix violates the Lorentz condition")
    p, q, c, p0, q0, g, rs = _setup(p, q, c)
    if com_residual(Lm, p, q, c) > APPLY_TOL * max(rs, 1.0):
        raise InvalidTransformError("matrix does not map p+q to the centre-of-momentum frame")
    omega = np.asarray(omega, dtype=float)
    Li = inverse(Lm)
    vp = 0.5 * Li @ np.concatenate([[rs], g * omega])
    vq = 0.5 * Li @ np.concatenate([[rs], -g * omega])
    return vp[1:], vq[1:]
