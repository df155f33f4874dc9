"""Newtonian-limit experiments: the L1_p Linf_x metric, translation moduli,
component sweeps over c and the end-to-end solution convergence study."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.stats import linregress

from .collision_op import kernel_gs, kernel_newt
from .cross_sections import CutoffParams, cutoff_measure, hard_ball
from .distributions import juttner, maxwellian
from .errors import DomainError, RelBoltzError
from .frames import cm_diff_from_newton
from .kinematics import normalized_velocity
from .solver import FieldGrid, SolveConfig, _shift_kernel, default_initial_data, physical_field, picard_solve

log = logging.getLogger(__name__)

FMT = "%.12e"
TRUNC_SHARE = 0.2


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of ``log error = intercept - slope log c``."""

    pairs: tuple
    slope: float
    intercept: float
    r2: float


def rate_fit(pairs) -> RateFit:
    pairs = [(float(c), float(e)) for c, e in pairs]
    kept = [(c, e) for c, e in pairs if e > 0 and np.isfinite(e)]
    if len(kept) < len(pairs):
        warnings.warn(f"rate_fit dropped {len(pairs) - len(kept)} nonpositive error(s)", RuntimeWarning)
    if len(kept) < 3:
        raise DomainError("rate_fit needs at least 3 positive errors")
    c, e = np.array(kept).T
    res = linregress(np.log(c), np.log(e))
    r2 = 1.0 if np.ptp(np.log(e)) == 0 else float(res.rvalue ** 2)
    return RateFit(tuple(kept), float(-res.slope), float(res.intercept), r2)


# ------------------------------------------------------------------ metric


def _values(f):
    if isinstance(f, FieldGrid):
        return f.values, f.dp
    raise DomainError("expected a FieldGrid")


def l1p_linfx_norm(f: FieldGrid) -> float:
    """``dp^N sum_p max_x |f(x, p)|``."""
    v, dp = _values(f)
    if v is None:
        raise DomainError("grid has no values")
    n_x = v.shape[0]
    sup = np.max(np.abs(v).reshape(n_x * n_x, -1), axis=0)
    return float(dp ** f.N * np.sum(sup))


def _shift(v, disp, h):
    """``v(z + disp)`` on the first two axes of ``(n, n, P)`` data, zero outside."""
    v = np.ascontiguousarray(v, dtype=float)
    d = np.ascontiguousarray(np.broadcast_to(np.asarray(disp, dtype=float), (v.shape[2], 2)))
    out = np.empty_like(v)
    _shift_kernel(v, d, 0.0, float(h), out)
    return out


def translate_field(f: FieldGrid, h, which: str = "x") -> FieldGrid:
    """``tau_h f``: ``f(x + h, p)`` or ``f(x, p + h)`` by linear interpolation."""
    v, _ = _values(f)
    n_x, n_p = f.n_x, f.n_p
    if which == "x":
        out = _shift(v.reshape(n_x, n_x, -1), h, f.dx).reshape(v.shape)
    elif which == "p":
        w = np.moveaxis(v, (2, 3), (0, 1)).reshape(n_p, n_p, -1)
        out = np.moveaxis(_shift(w, h, f.dp).reshape(n_p, n_p, n_x, n_x), (0, 1), (2, 3))
    else:
        raise DomainError("which must be 'x' or 'p'")
    return f.with_values(np.ascontiguousarray(out))


def translation_modulus(f: FieldGrid, h, which: str = "x") -> float:
    h = np.asarray(h, dtype=float)
    if h.shape != (2,) or not np.linalg.norm(h) < 1:
        raise DomainError("displacement must be a 2-vector with |h| < 1")
    return l1p_linfx_norm(f.with_values(translate_field(f, h, which).values - f.values))


def translation_constant(f: FieldGrid, hs=(1e-2, 5e-3, 2.5e-3), which: str = "x", direction=(1.0, 0.0)):
    """Ratios ``modulus/|h|`` over ``hs`` and their maximum (the reported A3)."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    ratios = [translation_modulus(f, h * d, which) / h for h in hs]
    return float(max(ratios)), ratios


# ---------------------------------------------------------- component sweeps


class Component(str, Enum):
    KERNEL_DIFF = "KERNEL_DIFF"
    POST_COLLISION_DIFF = "POST_COLLISION_DIFF"
    PHAT_DIFF = "PHAT_DIFF"
    JUTTNER_DIFF = "JUTTNER_DIFF"
    CUTOFF_MEASURE = "CUTOFF_MEASURE"


@dataclass(frozen=True)
class SampleSpec:
    """Random (p, q, omega) sample; ``p_fixed`` pins p for PHAT_DIFF and JUTTNER_DIFF."""

    n: int = 1000
    N: int = 3
    scale: float = 0.5  # keeps |p|/c <= 1/2 at c = 4, inside the asymptotic regime
    seed: int = 0
    p_fixed: Optional[tuple] = None
    x: Optional[tuple] = None
    q_fixed: Optional[tuple] = None
    t: float = 1.0
    cutoff: CutoffParams = field(default_factory=CutoffParams)
    n_sphere: int = 10_000

    def draw(self):
        rng = np.random.default_rng(self.seed)
        p = self.scale * rng.standard_normal((self.n, self.N))
        q = self.scale * rng.standard_normal((self.n, self.N))
        om = rng.standard_normal((self.n, self.N))
        om /= np.linalg.norm(om, axis=1, keepdims=True)
        return p, q, om

    def point(self):
        p = np.zeros(self.N) if self.p_fixed is None else np.asarray(self.p_fixed, dtype=float)
        if self.p_fixed is None:
            p[0] = 1.0
        return p


@dataclass
class SweepResult:
    kind: Component
    c_list: list
    values: list
    fit: Optional[RateFit] = None


def _component_value(kind: Component, c: float, spec: SampleSpec, sample) -> float:
    p, q, om = sample
    if kind is Component.PHAT_DIFF:
        pt = spec.point()
        return float(np.linalg.norm(normalized_velocity(pt, c) - pt))
    if kind is Component.JUTTNER_DIFF:
        pt = spec.point()
        return float(abs(juttner(pt, c) - maxwellian(pt)))
    if kind is Component.POST_COLLISION_DIFF:
        return float(np.max(cm_diff_from_newton(p, q, om, c)))
    if kind is Component.KERNEL_DIFF:
        sig = hard_ball()
        return float(np.max(np.abs(kernel_gs(p, q, om, c, sig) - kernel_newt(p, q, om, sig))))
    pt = spec.point()
    qt = np.zeros(spec.N) if spec.q_fixed is None else np.asarray(spec.q_fixed, dtype=float)
    x = np.zeros(spec.N) if spec.x is None else np.asarray(spec.x, dtype=float)
    return cutoff_measure(x, pt, qt, spec.t, c, spec.cutoff, n_samples=spec.n_sphere, seed=spec.seed)


def _check_dyadic(c_list):
    c = np.asarray(c_list, dtype=float)
    if len(c) < 4:
        raise DomainError("component sweeps need at least 4 values of c")
    r = c[1:] / c[:-1]
    if np.any(c <= 0) or not np.allclose(r, 2.0):
        raise DomainError("c_list must be dyadic (each entry twice the previous)")


def component_sweep(kind, c_list: Sequence[float], spec: Optional[SampleSpec] = None) -> SweepResult:
    """Per-c maximum error over the sample; a rate fit except for CUTOFF_MEASURE."""
    kind = Component(kind)
    _check_dyadic(c_list)
    spec = spec or SampleSpec()
    sample = spec.draw()
    values = [_component_value(kind, float(c), spec, sample) for c in c_list]
    fit = None if kind is Component.CUTOFF_MEASURE else rate_fit(zip(c_list, values))
    return SweepResult(kind, [float(c) for c in c_list], values, fit)


# ------------------------------------------------------- solution study


@dataclass(frozen=True)
class StudyPoint:
    c: float
    error: float
    data_error: float
    trunc_floor: float
    included: bool
    iterations: int


@dataclass
class ConvergenceStudy:
    points: list
    fit: Optional[RateFit]
    newton_iterations: int = 0

    def rows(self):
        return [(p.c, p.error, p.trunc_floor, p.included) for p in self.points]


class StudyAborted(RelBoltzError):
    def __init__(self, message, c):
        super().__init__(message)
        self.c = c


def _field(cfg, values):
    return cfg.grid().with_values(values)


def solution_convergence_study(cfg_base: SolveConfig, c_list: Sequence[float], f0=None,
                               f0_newton=None) -> ConvergenceStudy:
    """Solve the Newtonian problem once and the relativistic one for each c;
    compare the physical fields at ``t = T``.

    Default data are ``b rho_c`` and ``b rho_inf``.  ``trunc_floor`` bounds the
    part of the difference left by stopping the Picard iterations; a point is
    excluded from the fit when it exceeds 20% of the measured error.
    """
    cfg_n = replace(cfg_base, c=math.inf, sigma=replace(cfg_base.sigma, cutoff=None))
    fn = f0_newton if f0_newton is not None else default_initial_data(cfg_n)
    try:
        tn = picard_solve(fn, cfg_n)
    except RelBoltzError as e:
        raise StudyAborted(f"Newtonian solve failed: {e}", math.inf) from e
    fT_n = physical_field(tn, cfg_n)
    f0_n = physical_field(tn, cfg_n, 0)
    floor_n = tn.gap_trace[-1] * l1p_linfx_norm(_field(cfg_n, fT_n)) if tn.gap_trace else 0.0
    points = []
    for c in c_list:
        cfg = replace(cfg_base, c=float(c))
        fc = f0(cfg) if callable(f0) else (f0 if f0 is not None else default_initial_data(cfg))
        try:
            tr = picard_solve(fc, cfg)
        except RelBoltzError as e:
            raise StudyAborted(f"solve failed at c={c}: {e}", float(c)) from e
        fT = physical_field(tr, cfg)
        err = l1p_linfx_norm(_field(cfg, fT - fT_n))
        err0 = l1p_linfx_norm(_field(cfg, physical_field(tr, cfg, 0) - f0_n))
        floor = floor_n + (tr.gap_trace[-1] * l1p_linfx_norm(_field(cfg, fT)) if tr.gap_trace else 0.0)
        inc = bool(err > 0 and floor <= TRUNC_SHARE * err)
        if not inc:
            log.warning("c=%g excluded: truncation floor %.3e vs error %.3e", c, floor, err)
        points.append(StudyPoint(float(c), err, err0, floor, inc, tr.iterations))
        log.info("c=%g error=%.6e floor=%.3e", c, err, floor)
    used = [(p.c, p.error) for p in points if p.included]
    fit = rate_fit(used) if len(used) >= 3 else None
    return ConvergenceStudy(points, fit, tn.iterations)


# ---------------------------------------------------------------- output


def write_study_csv(path, rows, fit: Optional[RateFit]):
    """Columns c, error, trunc_floor, included, then one summary row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["c", "error", "trunc_floor", "included"])
        for c, e, t, inc in rows:
            w.writerow([FMT % c, FMT % e, FMT % t, int(bool(inc))])
        if fit is not None:
            w.writerow(["summary", "slope=" + FMT % fit.slope, "intercept=" + FMT % fit.intercept,
                        "r2=" + FMT % fit.r2])


def write_sweep_csv(path, res: SweepResult):
    rows = [(c, v, 0.0, True) for c, v in zip(res.c_list, res.values)]
    write_study_csv(path, rows, res.fit)


def read_summary(path) -> dict:
    with open(path) as fh:
        for row in csv.reader(fh):
            if row and row[0] == "summary":
                return {k: float(v) for k, v in (cell.split("=") for cell in row[1:])}
    return {}
