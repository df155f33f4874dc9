"""Mild-form solvers for the space-inhomogeneous equation near vacuum (N = 2).

The unknown is stored along characteristics, ``F#(t, x, p) = f(t, x + v(p) t, p)``
with ``v = p_hat`` (relativistic) or ``v = p`` (Newtonian), on cell-centred
tensor grids in x and p.  One Picard sweep:

1. physical field at each time node: ``F_k(y) = F#_k(y - v t_k)``,
2. collision operator ``Q_k`` locally in y,
3. back along characteristics: ``Q#_k(x) = Q_k(x + v t_k)``,
4. ``F#_new = f0 + cumulative trapezoid of Q#``.

Translations use separable linear interpolation with zero outside the box.
The gain term is a bilinear form in the momentum values at each y; it is
stored as a dense tensor and applied with a single matrix product.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numba
import numpy as np

from .collision_op import collision_terms_pointwise, omega_nodes
from .cross_sections import CrossSection, CutoffParams, Kind, energy_defect, hard_ball
from .distributions import WeightParams, juttner_exponent, weight_newt, weight_rel
from .errors import ConfigError, DivergenceError, DomainError
from .frames import Frame
from .kinematics import _p0

log = logging.getLogger(__name__)

N_DIM = 2
DENSE_LIMIT_BYTES = 2.0e9


@dataclass(frozen=True)
class FieldGrid:
    """Tensor grid ``[-L_x, L_x]^2 x [-L_p, L_p]^2`` with cell-centred nodes.

    ``values`` has shape ``(n_x, n_x, n_p, n_p)`` (or a leading time axis).
    """

    L_x: float = 4.0
    n_x: int = 24
    L_p: float = 6.0
    n_p: int = 24
    values: Optional[np.ndarray] = None
    N: int = N_DIM

    def __post_init__(self):
        if self.N != N_DIM:
            raise DomainError("the tensor-grid solver is implemented for N = 2")
        if self.n_x < 2 or self.n_p < 2 or self.L_x <= 0 or self.L_p <= 0:
            raise DomainError("grid needs n >= 2 and positive extents")
        if self.values is not None and not np.all(np.isfinite(self.values)):
            raise DomainError("grid values must be finite")

    @property
    def dx(self) -> float:
        return 2.0 * self.L_x / self.n_x

    @property
    def dp(self) -> float:
        return 2.0 * self.L_p / self.n_p

    def x_axis(self):
        return -self.L_x + self.dx * (np.arange(self.n_x) + 0.5)

    def p_axis(self):
        return -self.L_p + self.dp * (np.arange(self.n_p) + 0.5)

    def x_points(self):
        a = self.x_axis()
        X1, X2 = np.meshgrid(a, a, indexing="ij")
        return np.stack([X1.ravel(), X2.ravel()], axis=-1)

    def p_points(self):
        a = self.p_axis()
        P1, P2 = np.meshgrid(a, a, indexing="ij")
        return np.stack([P1.ravel(), P2.ravel()], axis=-1)

    @property
    def shape(self):
        return (self.n_x, self.n_x, self.n_p, self.n_p)

    def with_values(self, values) -> "FieldGrid":
        return replace(self, values=np.asarray(values, dtype=float))


@dataclass
class SolveConfig:
    c: float = 1.0  # math.inf selects the Newtonian equation
    T: float = 1.0
    n_t: int = 16  # number of time steps; nodes t_k = k T / n_t, k = 0..n_t
    picard_max: int = 40
    picard_tol: float = 1e-9
    sigma: CrossSection = field(default_factory=hard_ball)
    weights: WeightParams = field(default_factory=WeightParams)
    b: float = 1e-3
    n_omega: int = 16
    L_x: float = 4.0
    n_x: int = 24
    L_p: float = 6.0
    n_p: int = 24
    rep: Frame = Frame.GS
    symmetry: bool = True

    def __post_init__(self):
        self.rep = Frame(self.rep)
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.n_t < 1:
            raise ConfigError("n_t must be >= 1")
        if not self.picard_tol > 0:
            raise ConfigError("picard_tol must be positive")
        if self.b < 0:
            raise ConfigError("b must be non-negative")
        if not (self.c >= 1.0):
            raise ConfigError("c must be >= 1 (or inf)")
        if self.rep not in (Frame.GS, Frame.CM):
            raise ConfigError("rep must be GS or CM")

    @property
    def newtonian(self) -> bool:
        return math.isinf(self.c)

    @property
    def cutoff(self) -> Optional[CutoffParams]:
        return self.sigma.cutoff

    def grid(self) -> FieldGrid:
        return FieldGrid(self.L_x, self.n_x, self.L_p, self.n_p)

    def times(self):
        return self.T * np.arange(self.n_t + 1) / self.n_t

    def velocities(self):
        p = self.grid().p_points()
        if self.newtonian:
            return p
        return self.c * p / _p0(p, self.c)[:, None]


@dataclass
class Trajectory:
    """``F#`` at every time node, shape ``(n_t + 1, n_x, n_x, n_p, n_p)``."""

    grid: FieldGrid
    times: np.ndarray
    values: np.ndarray
    c: float
    iterations: int = 0
    gap_trace: list = field(default_factory=list)
    norm_trace: list = field(default_factory=list)
    converged: bool = True

    def at(self, k: int) -> FieldGrid:
        return self.grid.with_values(self.values[k])


# ----------------------------------------------------------------- weights


def weight_grid(cfg: SolveConfig) -> np.ndarray:
    g = cfg.grid()
    x = g.x_points()[:, None, :]
    p = g.p_points()[None, :, :]
    if cfg.newtonian:
        w = weight_newt(x, p, cfg.weights)
    else:
        w = weight_rel(x, p, cfg.c, cfg.weights)
    return w.reshape(g.shape)


def default_initial_data(cfg: SolveConfig) -> FieldGrid:
    """``b rho_c`` (or ``b rho_inf`` when ``c = inf``) on the configured grid."""
    return cfg.grid().with_values(cfg.b * weight_grid(cfg))


def weighted_sup_norm(traj, cfg: SolveConfig, rho=None) -> float:
    """``max |F#| / rho`` over all time nodes and grid points."""
    rho = weight_grid(cfg) if rho is None else rho
    vals = traj.values if isinstance(traj, Trajectory) else np.asarray(
        traj.values if isinstance(traj, FieldGrid) else traj)
    return float(np.max(np.abs(vals) / rho))


# ------------------------------------------------------------- translation


@numba.njit(cache=True)
def _shift_kernel(F, disp, x0, h, out):
    nx = F.shape[0]
    P = F.shape[2]
    for ip in range(P):
        s1 = disp[ip, 0] / h
        s2 = disp[ip, 1] / h
        f1 = math.floor(s1)
        f2 = math.floor(s2)
        a1 = s1 - f1
        a2 = s2 - f2
        o1 = int(f1)
        o2 = int(f2)
        for i in range(nx):
            j0 = i + o1
            for k in range(nx):
                k0 = k + o2
                v = 0.0
                if 0 <= j0 < nx:
                    if 0 <= k0 < nx:
                        v += (1 - a1) * (1 - a2) * F[j0, k0, ip]
                    if 0 <= k0 + 1 < nx:
                        v += (1 - a1) * a2 * F[j0, k0 + 1, ip]
                if 0 <= j0 + 1 < nx:
                    if 0 <= k0 < nx:
                        v += a1 * (1 - a2) * F[j0 + 1, k0, ip]
                    if 0 <= k0 + 1 < nx:
                        v += a1 * a2 * F[j0 + 1, k0 + 1, ip]
                out[i, k, ip] = v


def translate(F, disp, h, env_src=None, env_dst=None):
    """``G(x) = F(x + disp(p))`` for a field of shape ``(n_x, n_x, P)``; zero outside.

    With an envelope, ``F / env_src`` is interpolated and multiplied by
    ``env_dst`` (the envelope at the displaced points).  This keeps the
    relative error bounded in Gaussian tails, where plain linear
    interpolation overshoots by orders of magnitude.
    """
    F = np.ascontiguousarray(F, dtype=float)
    if env_src is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            F = np.where(env_src > 0, F / env_src, 0.0)
    out = np.empty_like(F)
    _shift_kernel(F, np.ascontiguousarray(disp, dtype=float), 0.0, float(h), out)
    if env_dst is not None:
        out *= env_dst
    return out


def x_envelope(cfg: "SolveConfig", z, p):
    """Spatial factor of the weight, ``exp(-alpha w(p) |z|^2)`` with w = p0/c or 1.

    ``z`` has shape ``(n, 1, 2)`` or broadcasts against ``p`` of shape ``(P, 2)``.
    """
    w = np.ones(len(p)) if cfg.newtonian else _p0(p, cfg.c) / cfg.c
    return np.exp(-cfg.weights.alpha * w * np.sum(z * z, axis=-1))


# ----------------------------------------------------------- D4 symmetry


def _d4_ops():
    ops = []
    for swap in (False, True):
        for s1 in (1, -1):
            for s2 in (1, -1):
                ops.append((swap, s1, s2))
    return ops


def d4_transform(F, op):
    """Simultaneous action on x axes (0, 1) and p axes (2, 3) of a field."""
    swap, s1, s2 = op
    G = F
    if s1 < 0:
        G = np.flip(np.flip(G, axis=0), axis=2)
    if s2 < 0:
        G = np.flip(np.flip(G, axis=1), axis=3)
    if swap:
        G = np.transpose(G, (1, 0, 3, 2))
    return G


def is_d4_symmetric(F, rtol=1e-12) -> bool:
    scale = float(np.max(np.abs(F)))
    if scale == 0.0:
        return True
    return all(np.max(np.abs(d4_transform(F, op) - F)) <= rtol * scale for op in _d4_ops())


def fundamental_rows(n):
    """Row indices (into the flattened x grid) of a D4 fundamental domain."""
    rows = []
    for i in range(n):
        for j in range(n):
            # representatives: i <= j and i + j <= n - 1 (a triangle with the diagonal)
            if i <= j and i + j <= n - 1:
                rows.append(i * n + j)
    return np.array(rows)


def d4_fill(Qrows, rows, nx, npp):
    """Rebuild a symmetric field from its values on the fundamental rows."""
    Q = np.full((nx, nx, npp, npp), np.nan)
    Qf = Q.reshape(nx * nx, npp, npp)
    Qf[rows] = Qrows.reshape(len(rows), npp, npp)
    for op in _d4_ops():
        G = d4_transform(Q, op)
        mask = np.isnan(Q) & ~np.isnan(G)
        Q[mask] = G[mask]
    if np.isnan(Q).any():
        raise RuntimeError("D4 fill left holes")
    return Q


# ---------------------------------------------------------- gain/loss map


def _interp_nodes(v, axis0, h, n):
    """Bilinear nodes/weights on a cell-centred grid with zero extension."""
    s = (v - axis0) / h
    i = np.floor(s).astype(np.int64)
    a = s - i
    idx = []
    wts = []
    for d1, w1 in ((0, 1 - a[:, 0]), (1, a[:, 0])):
        for d2, w2 in ((0, 1 - a[:, 1]), (1, a[:, 1])):
            j1 = i[:, 0] + d1
            j2 = i[:, 1] + d2
            ok = (j1 >= 0) & (j1 < n) & (j2 >= 0) & (j2 < n)
            idx.append(np.where(ok, j1 * n + j2, 0))
            wts.append(np.where(ok, w1 * w2, 0.0))
    return np.stack(idx, axis=1), np.stack(wts, axis=1)


@numba.njit(cache=True)
def _cutoff_correction(F, ys, s, cp, cj, W, rhs, kcoef, qhat, aidx, awt, bidx, bwt, gain, lossf):
    """Subtract excluded (p, q, omega) triples at each row y."""
    ny = F.shape[0]
    nc = cp.shape[0]
    for r in range(ny):
        y1 = ys[r, 0]
        y2 = ys[r, 1]
        for m in range(nc):
            j = cj[m]
            d1 = y1 - s * qhat[j, 0]
            d2 = y2 - s * qhat[j, 1]
            if kcoef[j] * (d1 * d1 + d2 * d2) < rhs[m]:
                fa = 0.0
                fb = 0.0
                for u in range(4):
                    fa += awt[m, u] * F[r, aidx[m, u]]
                    fb += bwt[m, u] * F[r, bidx[m, u]]
                p = cp[m]
                gain[r, p] -= W[m] * fa * fb
                lossf[r, p] -= W[m] * F[r, j]


class CollisionOperator:
    """Discrete ``Q(f, f)`` on the momentum grid, applied row-wise in y."""

    def __init__(self, cfg: SolveConfig, chunk: int = 16):
        g = cfg.grid()
        self.cfg = cfg
        self.n = g.n_p
        P = g.n_p ** 2
        self.P = P
        if P ** 3 * 8 > DENSE_LIMIT_BYTES:
            raise DomainError(f"momentum grid too large for the dense gain tensor ({P}^3 entries)")
        pts = g.p_points()
        self.pts = pts
        om, ow = omega_nodes(2, cfg.n_omega)
        self.rep = Frame.NEWTON_OMEGA if cfg.newtonian else cfg.rep
        c = math.inf if cfg.newtonian else cfg.c
        dq = g.dp ** 2
        ax0 = g.p_axis()[0]
        self.M = np.zeros((P, P, P))  # [a (p' node), p, b (q' node)]
        self.L = np.zeros((P, P))  # loss frequency matrix [p, q]
        self._beta = cfg.weights.beta
        self._c = c
        logj = self._log_env(pts)
        co = cfg.cutoff
        cand = []
        for s0 in range(0, P, chunk):
            pp = pts[s0:s0 + chunk]
            K, po, qo = collision_terms_pointwise(pp[:, None, None, :], pts[None, :, None, :],
                                                  om[None, None, :, :], c, cfg.sigma, self.rep)
            Wt = K * ow * dq  # (m, P, K)
            self.L[s0:s0 + chunk] = Wt.sum(axis=2)
            m = len(pp)
            nk = len(om)
            po = po.reshape(-1, 2)
            qo = qo.reshape(-1, 2)
            ai, aw = _interp_nodes(po, ax0, g.dp, self.n)
            bi, bw = _interp_nodes(qo, ax0, g.dp, self.n)
            aw *= np.exp(self._log_env(po)[:, None] - logj[ai])
            bw *= np.exp(self._log_env(qo)[:, None] - logj[bi])
            wflat = Wt.reshape(-1)
            plocal = np.repeat(np.arange(m), P * nk)
            block = np.zeros(P * m * P)
            for u in range(4):
                for v in range(4):
                    flat = (ai[:, u] * m + plocal) * P + bi[:, v]
                    block += np.bincount(flat, weights=wflat * aw[:, u] * bw[:, v], minlength=P * m * P)
            self.M[:, s0:s0 + m, :] = block.reshape(P, m, P)
            if co is not None and not cfg.newtonian:
                d = energy_defect(np.broadcast_to(pp[:, None, None, :], (m, P, nk, 2)),
                                  np.broadcast_to(pts[None, :, None, :], (m, P, nk, 2)),
                                  np.broadcast_to(om[None, None, :, :], (m, P, nk, 2)),
                                  c, cfg.rep).reshape(-1)
                sel = (d < -co.B / cfg.T ** 2) & (wflat > 0)
                if np.any(sel):
                    pidx = (plocal + s0)[sel]
                    jidx = np.tile(np.repeat(np.arange(P), nk), m)[sel]
                    cand.append((pidx, jidx, wflat[sel], d[sel], ai[sel], aw[sel], bi[sel], bw[sel]))
        self.Mflat = self.M.reshape(P, P * P)
        self.cand = None
        if cand:
            cols = list(zip(*cand))
            arrs = [np.concatenate(col) for col in cols]
            order = np.argsort(arrs[3])  # most negative defect first
            self.cand = [np.ascontiguousarray(a[order]) for a in arrs]
            q0 = _p0(pts, c)
            self.qhat = c * pts / q0[:, None]
            self.kcoef = co.a * co.alpha * q0 / c
        log.debug("collision operator built: P=%d, cut-off candidates=%s", P,
                  0 if self.cand is None else len(self.cand[0]))

    def _log_env(self, p):
        # p' values are interpolated relative to the momentum factor of the weight,
        # so that Gaussian tails are reproduced without overshoot
        if math.isinf(self._c):
            return -0.5 * self._beta * np.sum(p * p, axis=-1)
        return self._beta * juttner_exponent(p, self._c)

    def gain_loss(self, F, ys=None, s=None):
        """Gain and loss frequency for rows ``F`` of shape ``(n_rows, P)``.

        ``ys`` (row positions) and ``s`` (time) are needed only with a cut-off.
        Returns ``(gain, R)`` with the loss term equal to ``F * R``.
        """
        F = np.ascontiguousarray(F)
        nr = F.shape[0]
        gain = np.empty((nr, self.P))
        step = max(1, int(2.5e8 // (self.P * self.P * 8)))
        for r0 in range(0, nr, step):
            Fr = F[r0:r0 + step]
            H = (Fr @ self.Mflat).reshape(len(Fr), self.P, self.P)
            gain[r0:r0 + step] = np.einsum("rpb,rb->rp", H, Fr)
        R = F @ self.L.T
        if self.cand is not None and s is not None and s > 0:
            co = self.cfg.cutoff
            d = self.cand[3]
            ncut = int(np.searchsorted(d, -co.B / s ** 2, side="left"))
            if ncut:
                cp, cj, W, dd, ai, aw, bi, bw = (a[:ncut] for a in self.cand)
                rhs = -co.B - dd * s * s
                _cutoff_correction(F, np.ascontiguousarray(ys, dtype=float), float(s), cp, cj, W, rhs,
                                   self.kcoef, self.qhat, ai, aw, bi, bw, gain, R)
        return gain, R

    def apply(self, F, ys=None, s=None):
        gain, R = self.gain_loss(F, ys, s)
        return gain - F * R


# ---------------------------------------------------------------- solvers


class Transport:
    """Envelope-aware translations along characteristics at the time nodes."""

    def __init__(self, cfg: SolveConfig):
        g = cfg.grid()
        self.g = g
        self.times = cfg.times()
        self.vel = cfg.velocities()
        xs = g.x_points()[:, None, :]
        p = g.p_points()
        shape = (g.n_x, g.n_x, len(p))
        self.env0 = x_envelope(cfg, xs, p).reshape(shape)
        # envelope of the physical field at y: g_p(y - v t)
        self.env_t = [x_envelope(cfg, xs - t * self.vel[None], p).reshape(shape) for t in self.times]

    def physical(self, Fs, k):
        """``F(t_k, y) = F#(t_k, y - v t_k)``."""
        g = self.g
        F = Fs.reshape(g.n_x, g.n_x, -1)
        return translate(F, -self.vel * self.times[k], g.dx, self.env0, self.env_t[k])

    def sharp(self, Q, k):
        """``Q#(t_k, x) = Q(t_k, x + v t_k)``."""
        g = self.g
        Q = Q.reshape(g.n_x, g.n_x, -1)
        return translate(Q, self.vel * self.times[k], g.dx, self.env_t[k], self.env0).reshape(g.shape)


@dataclass
class _Ctx:
    cfg: SolveConfig
    op: CollisionOperator
    grid: FieldGrid
    times: np.ndarray
    tr: Transport
    rows: Optional[np.ndarray]
    ys: np.ndarray
    rho: np.ndarray


def _context(cfg: SolveConfig, op: Optional[CollisionOperator]) -> _Ctx:
    g = cfg.grid()
    if op is None:
        op = CollisionOperator(cfg)
    return _Ctx(cfg, op, g, cfg.times(), Transport(cfg), fundamental_rows(g.n_x) if cfg.symmetry else None,
                g.x_points(), weight_grid(cfg))


def _physical(ctx: _Ctx, Fs, k):
    return ctx.tr.physical(Fs, k)


def _to_sharp(ctx: _Ctx, Q, k):
    return ctx.tr.sharp(Q, k)


def _rows_eval(ctx: _Ctx, Fphys, k, fn):
    """Evaluate a row-wise operator, on the D4 fundamental domain when possible."""
    g = ctx.grid
    P = g.n_p ** 2
    flat = Fphys.reshape(g.n_x * g.n_x, P)
    s = ctx.times[k]
    if ctx.rows is not None and is_d4_symmetric(Fphys.reshape(g.shape)):
        outs = fn(flat[ctx.rows], ctx.ys[ctx.rows], s)
        return [d4_fill(o, ctx.rows, g.n_x, g.n_p) for o in outs]
    outs = fn(flat, ctx.ys, s)
    return [o.reshape(g.shape) for o in outs]


def _collision_sharp(ctx: _Ctx, Fsharp):
    """``Q#`` at every node for a trajectory ``F#``."""
    out = np.zeros_like(Fsharp)
    for k in range(len(ctx.times)):
        Fp = _physical(ctx, Fsharp[k], k)
        if not np.any(Fp):
            continue
        (Q,) = _rows_eval(ctx, Fp, k, lambda F, y, s: (ctx.op.apply(F, y, s),))
        out[k] = _to_sharp(ctx, Q, k)
    return out


def sup_gap(new, old) -> float:
    """``max |new - old| / max |new|``.

    The weighted norm is a poor stopping rule on a finite box: the weight
    reaches ~1e-50 in the corners, where interpolation round-off dominates.
    """
    scale = float(np.max(np.abs(new)))
    return float(np.max(np.abs(new - old))) / scale if scale > 0 else 0.0


def _cumtrapz(G, t):
    out = np.zeros_like(G)
    dt = np.diff(t)
    for k in range(1, len(t)):
        out[k] = out[k - 1] + 0.5 * dt[k - 1] * (G[k - 1] + G[k])
    return out


def picard_solve(f0: FieldGrid, cfg: SolveConfig, op: Optional[CollisionOperator] = None) -> Trajectory:
    """Fixed point of ``F# = f0 + int_0^t Q#(F, F) ds`` by Picard iteration.

    Stops when the sup-norm change relative to the sup norm of the iterate is
    below ``picard_tol``; the weighted norm of each iterate is recorded.  Raises :class:`DivergenceError` if
    the change grows between sweeps or ``picard_max`` is reached.
    """
    if np.any(f0.values < 0):
        raise DomainError("initial data must be non-negative")
    ctx = _context(cfg, op)
    t = ctx.times
    F = np.broadcast_to(f0.values, (len(t),) + f0.values.shape).copy()
    traj = Trajectory(ctx.grid, t, F, cfg.c)
    if cfg.sigma.kind is Kind.HARD_BALL and cfg.sigma.p("constant") == 0.0 or not np.any(f0.values):
        traj.norm_trace.append(weighted_sup_norm(F, cfg, ctx.rho))
        return traj
    prev_gap = math.inf
    for it in range(1, cfg.picard_max + 1):
        Qs = _collision_sharp(ctx, F)
        Fn = f0.values[None] + _cumtrapz(Qs, t)
        if not np.all(np.isfinite(Fn)):
            raise DivergenceError("non-finite iterate; b is probably too large",
                                  {"iterations": it, "gaps": traj.gap_trace})
        nrm = weighted_sup_norm(Fn, cfg, ctx.rho)
        gap = sup_gap(Fn, F)
        traj.gap_trace.append(gap)
        traj.norm_trace.append(nrm)
        F = Fn
        log.info("picard c=%s sweep %d gap %.3e norm %.6e", cfg.c, it, gap, nrm)
        if gap <= cfg.picard_tol:
            traj.values = F
            traj.iterations = it
            return traj
        if it >= 3 and gap > prev_gap:
            raise DivergenceError(f"Picard gap grew from {prev_gap:.3e} to {gap:.3e} at sweep {it}; "
                                  "reduce b", {"iterations": it, "gaps": traj.gap_trace})
        prev_gap = gap
    raise DivergenceError(f"Picard did not reach tolerance in {cfg.picard_max} sweeps; reduce b",
                          {"iterations": cfg.picard_max, "gaps": traj.gap_trace})


def calibrate_b(cfg: SolveConfig, b_start: Optional[float] = None, max_halvings: int = 20,
                op: Optional[CollisionOperator] = None):
    """Halve ``b`` until Picard converges; returns ``(b, trajectory)``."""
    b = cfg.b if b_start is None else b_start
    op = CollisionOperator(cfg) if op is None else op
    for _ in range(max_halvings + 1):
        c2 = replace(cfg, b=b)
        try:
            return b, picard_solve(default_initial_data(c2), c2, op)
        except DivergenceError:
            b *= 0.5
    raise DivergenceError("no convergent b found", {"b": b})


@dataclass
class KSResult:
    lower: Trajectory
    upper: Trajectory
    gap: float
    iterations: int
    kappa: float
    nonnegative: bool


class SmallnessViolation(DivergenceError):
    pass


def _ks_update(ctx: _Ctx, f0, source, other):
    """``f0 e^{-int R(other)} + int e^{-int_s^t R(other)} G(source, source) ds``."""
    t = ctx.times
    G = np.zeros_like(source)
    R = np.zeros_like(source)
    for k in range(len(t)):
        Sp = _physical(ctx, source[k], k)
        Op = _physical(ctx, other[k], k)

        flatS = Sp.reshape(len(ctx.ys), -1)
        flatO = Op.reshape(len(ctx.ys), -1)
        sym = ctx.rows is not None and is_d4_symmetric(Sp.reshape(ctx.grid.shape)) and \
            is_d4_symmetric(Op.reshape(ctx.grid.shape))
        rows = ctx.rows if sym else np.arange(len(ctx.ys))
        gS, _ = ctx.op.gain_loss(flatS[rows], ctx.ys[rows], t[k])
        _, rO = ctx.op.gain_loss(flatO[rows], ctx.ys[rows], t[k])
        if sym:
            gS = d4_fill(gS, rows, ctx.grid.n_x, ctx.grid.n_p)
            rO = d4_fill(rO, rows, ctx.grid.n_x, ctx.grid.n_p)
        G[k] = _to_sharp(ctx, gS, k)
        R[k] = _to_sharp(ctx, rO, k)
    Rint = _cumtrapz(R, t)
    out = np.empty_like(source)
    dt = np.diff(t)
    for k in range(len(t)):
        acc = f0 * np.exp(-Rint[k])
        for m in range(k):
            # trapezoid on [t_m, t_m+1] of e^{-(Rint_k - Rint_s)} G(s)
            acc = acc + 0.5 * dt[m] * (np.exp(Rint[m] - Rint[k]) * G[m] + np.exp(Rint[m + 1] - Rint[k]) * G[m + 1])
        out[k] = acc
    return out


def ks_bracket_solve(f0: FieldGrid, cfg: SolveConfig, op: Optional[CollisionOperator] = None,
                     order_tol: float = 1e-12) -> KSResult:
    """Kaniel-Shinbrot monotone bracketing ``l_n <= l_{n+1} <= u_{n+1} <= u_n``.

    Starts from ``l_0 = 0`` and ``u_0 = kappa |f0| rho`` where ``kappa`` is the
    smaller root of ``A k^2 - k + 1 = 0`` and ``A = |f0| sup int G#(rho, rho) / rho``.
    """
    ctx = _context(cfg, op)
    t = ctx.times
    shape = (len(t),) + f0.values.shape
    rho = ctx.rho
    b = weighted_sup_norm(f0.values, cfg, rho)
    if b == 0.0:
        z = Trajectory(ctx.grid, t, np.zeros(shape), cfg.c)
        return KSResult(z, z, 0.0, 0, 1.0, True)
    rho_t = np.broadcast_to(rho, shape).copy()
    Grr = _ks_update(ctx, np.zeros_like(rho), rho_t, np.zeros(shape))
    A = b * float(np.max(Grr / rho[None]))
    if 4.0 * A > 1.0:
        raise SmallnessViolation(f"bracket start impossible: 4A = {4 * A:.3e} > 1; reduce b", {"A": A})
    kappa = 1.0 if A == 0 else (1.0 - math.sqrt(1.0 - 4.0 * A)) / (2.0 * A)
    lower = np.zeros(shape)
    upper = kappa * b * rho_t
    f0v = f0.values
    gap = math.inf
    for it in range(1, cfg.picard_max + 1):
        ln = _ks_update(ctx, f0v, lower, upper)
        un = _ks_update(ctx, f0v, upper, lower)
        scale = order_tol * float(np.max(upper))
        if (np.any(ln < lower - scale) or np.any(ln > un + scale) or np.any(un > upper + scale)):
            raise SmallnessViolation(f"bracket ordering violated at sweep {it}", {"iterations": it})
        lower, upper = ln, un
        gap = sup_gap(upper, lower)
        log.info("ks c=%s sweep %d gap %.3e", cfg.c, it, gap)
        if gap <= cfg.picard_tol:
            break
    mk = lambda v: Trajectory(ctx.grid, t, v, cfg.c, iterations=it)  # noqa: E731
    return KSResult(mk(lower), mk(upper), gap, it, kappa, bool(np.all(lower >= 0)))


# --------------------------------------------------------------- physical


def physical_field(traj: Trajectory, cfg: SolveConfig, k: int = -1) -> np.ndarray:
    """``f(t_k, y, p) = F#(t_k, y - v t_k, p)``."""
    k = k % len(traj.times)
    return Transport(cfg).physical(traj.values[k], k).reshape(traj.grid.shape)


def dispersion_integral(alpha, x, v, s_max=None, n=20001):
    """``int_0^inf exp(-alpha |x + s v|^2) ds`` by quadrature and its erf closed form."""
    from scipy.integrate import quad
    from scipy.special import erfc

    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    vv = float(v @ v)
    xv = float(x @ v)
    perp = float(x @ x) - xv * xv / vv
    numeric = quad(lambda s: math.exp(-alpha * float(np.sum((x + s * v) ** 2))), 0, np.inf,
                   epsabs=0, epsrel=1e-12, limit=400)[0]
    closed = math.exp(-alpha * perp) * 0.5 * math.sqrt(math.pi / (alpha * vv)) * erfc(math.sqrt(alpha / vv) * xv)
    return numeric, closed


# --------------------------------------------------------------- persistence


def save_trajectory(traj: Trajectory, path, fmt: str = "binary", times: str = "last"):
    """Write the flat table ``t, x1, x2, p1, p2, value``.

    ``binary``: little-endian float64, six columns, row-major.  ``text``: the
    same table with a header row and ``%.12e`` values.  ``times`` is ``last``
    or ``all``.
    """
    g = traj.grid
    ks = [len(traj.times) - 1] if times == "last" else range(len(traj.times))
    x = g.x_points()
    p = g.p_points()
    X = np.repeat(x, len(p), axis=0)
    Pp = np.tile(p, (len(x), 1))
    blocks = []
    for k in ks:
        v = traj.values[k].reshape(-1)
        blocks.append(np.column_stack([np.full(len(v), traj.times[k]), X, Pp, v]))
    table = np.vstack(blocks)
    if fmt == "binary":
        table.astype("<f8").tofile(path)
    elif fmt == "text":
        np.savetxt(path, table, fmt="%.12e", delimiter=",", header="t,x1,x2,p1,p2,value", comments="")
    else:
        raise ConfigError(f"unknown trajectory format {fmt!r}")
    return table.shape


def load_trajectory_table(path, fmt: str = "binary") -> np.ndarray:
    if fmt == "binary":
        return np.fromfile(path, dtype="<f8").reshape(-1, 6)
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
