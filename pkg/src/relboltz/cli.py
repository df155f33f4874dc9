"""Batch entry point: ``relboltz <command> --config PATH [key=value ...]``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import inspect
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import verify as V
from .cross_sections import (CrossSection, CutoffParams, EnvelopeParams, Kind, c_star_search, cutoff_measure,
                             envelope_check, evaluate, load_b_table)
from .distributions import WeightParams
from .errors import ConfigError, DivergenceError, RelBoltzError
from .frames import Frame, gs_jacobian, post_collision
from .kinematics import (conservation_residual, cos_scattering_angle, energy, moller_velocity,
                         relative_momentum)
from .limit_harness import (Component, SampleSpec, StudyAborted, component_sweep, solution_convergence_study,
                            write_study_csv, write_sweep_csv)
from .solver import SolveConfig, default_initial_data, picard_solve, save_trajectory, weighted_sup_norm

log = logging.getLogger("relboltz")

COMMANDS = ("verify", "kinematics", "xsec", "limit", "solve")
FMT = "%.12e"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


# ------------------------------------------------------------------ config


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _words(text):
    return tuple(w.strip() for w in text.split(",") if w.strip())


# key -> (parser, default)
KEYS = {
    "N": (int, 2),
    "c": (float, 2.0),
    "c_list": (_floats, (2.0, 4.0, 8.0, 16.0, 32.0)),
    "sweep_c_list": (_floats, tuple(2.0 ** k for k in range(2, 9))),
    "alpha": (float, 1.0),
    "beta": (float, 1.0),
    "b": (float, 1e-3),
    "B": (float, 1.0),
    "a": (float, 0.5),
    "cutoff": (_bool, False),
    "T": (float, 1.0),
    "n_t": (int, 16),
    "n_x": (int, 24),
    "n_p": (int, 24),
    "n_omega": (int, 16),
    "L_x": (float, 4.0),
    "L_p": (float, 6.0),
    "rep": (str, "GS"),
    "picard_max": (int, 40),
    "picard_tol": (float, 1e-9),
    "seed": (int, 42),
    "sigma.kind": (str, "hard_ball"),
    "sigma.constant": (float, 1.0),
    "sigma.r0": (float, 1.0),
    "sigma.G": (float, 1.0),
    "sigma.hbar": (float, 1.0),
    "sigma.b": (float, 1.0),
    "sigma.b_table": (str, ""),
    "kind": (_words, ("PHAT_DIFF", "POST_COLLISION_DIFF", "KERNEL_DIFF", "JUTTNER_DIFF", "CUTOFF_MEASURE")),
    "suites": (_words, tuple(V.LIGHT)),
    "n_samples": (int, 1000),
    "cutoff.T": (float, 10.0),
    "cutoff.scale": (float, 2.0),
    "p": (_floats, ()),  # empty: filled in from N
    "q": (_floats, ()),
    "omega": (_floats, ()),
    "traj.format": (str, "binary"),
    "traj.times": (str, "last"),
}


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, tuple):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)
    command: str = "verify"
    output_path: str = "relboltz_out"

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    @property
    def c_list(self):
        return self.values["c_list"]

    def vector(self, key) -> np.ndarray:
        """Spot-check momenta; unset vectors default to e1, e2/2 and the last axis."""
        if self.values[key]:
            return np.asarray(self.values[key], dtype=float)
        v = np.zeros(self.values["N"])
        v[{"p": 0, "q": 1, "omega": -1}[key]] = 0.5 if key == "q" else 1.0
        return v

    def echo(self) -> str:
        return "".join(f"{k}={_fmt_value(self.values[k])}\n" for k in sorted(self.values))

    def sigma(self) -> CrossSection:
        v = self.values
        kind = Kind(v["sigma.kind"].upper())
        cut = CutoffParams(v["B"], v["a"], v["alpha"]) if v["cutoff"] else None
        params = {"constant": v["sigma.constant"], "r0": v["sigma.r0"], "G": v["sigma.G"],
                  "hbar": v["sigma.hbar"], "b": v["sigma.b"]}
        b = load_b_table(v["sigma.b_table"]) if v["sigma.b_table"] else None
        return CrossSection(kind, params, cutoff=cut, b=b)

    def solve_config(self, c=None) -> SolveConfig:
        v = self.values
        return SolveConfig(c=v["c"] if c is None else c, T=v["T"], n_t=v["n_t"], picard_max=v["picard_max"],
                           picard_tol=v["picard_tol"], sigma=self.sigma(),
                           weights=WeightParams(v["alpha"], v["beta"]), b=v["b"], n_omega=v["n_omega"],
                           L_x=v["L_x"], n_x=v["n_x"], L_p=v["L_p"], n_p=v["n_p"], rep=Frame(v["rep"].upper()))


def _parse_pair(text, line):
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}", line)
    key, raw = (s.strip() for s in text.split("=", 1))
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", line)
    parser = KEYS[key][0]
    try:
        return key, parser(raw)
    except ValueError as e:
        raise ConfigError(f"malformed value for {key}: {raw!r} ({e})", line) from None


def _validate(vals: dict, lines: dict):
    def err(key, msg):
        raise ConfigError(f"{key}: {msg}", lines.get(key))

    if vals["N"] not in (2, 3):
        err("N", "must be 2 or 3")
    if not vals["c"] >= 1.0:
        err("c", "must be >= 1 (inf selects the Newtonian equation)")
    for k in ("c_list", "sweep_c_list"):
        if not vals[k] or any(not c >= 1.0 or math.isinf(c) for c in vals[k]):
            err(k, "values must be finite and >= 1")
    for k in ("alpha", "beta", "B", "T", "picard_tol", "cutoff.T", "cutoff.scale"):
        if not vals[k] > 0:
            err(k, "must be positive")
    if vals["b"] < 0:
        err("b", "must be non-negative")
    if not 0.0 <= vals["a"] < 1.0:
        err("a", "must lie in [0, 1)")
    for k in ("n_t", "picard_max"):
        if vals[k] < 1:
            err(k, "must be >= 1")
    for k in ("n_x", "n_p", "n_omega", "n_samples"):
        if vals[k] < 2:
            err(k, "must be >= 2")
    for k in ("L_x", "L_p"):
        if not vals[k] > 0:
            err(k, "must be positive")
    if vals["rep"].upper() not in ("GS", "CM"):
        err("rep", "must be GS or CM")
    try:
        kind = Kind(vals["sigma.kind"].upper())
    except ValueError:
        err("sigma.kind", f"unknown cross section {vals['sigma.kind']!r}")
    if kind is Kind.ISRAEL and not vals["sigma.b_table"]:
        err("sigma.b_table", "required when sigma.kind=israel")
    if vals["sigma.b_table"] and not Path(vals["sigma.b_table"]).is_file():
        err("sigma.b_table", f"file not found: {vals['sigma.b_table']}")
    for k in ("p", "q", "omega"):
        if vals[k] and len(vals[k]) != vals["N"]:
            err(k, f"needs {vals['N']} components")
    if vals["omega"] and abs(np.linalg.norm(vals["omega"]) - 1.0) > 1e-12:
        err("omega", "must be a unit vector")
    allowed = {c.value for c in Component} | {"SOLUTION"}
    for kname in vals["kind"]:
        if kname.upper() not in allowed:
            err("kind", f"unknown limit kind {kname!r}")
    for s in vals["suites"]:
        if s not in V.SUITES and s not in ("all", "light"):
            err("suites", f"unknown suite {s!r}")
    if vals["traj.format"] not in ("binary", "text"):
        err("traj.format", "must be binary or text")
    if vals["traj.times"] not in ("last", "all"):
        err("traj.times", "must be last or all")


def parse_config(path=None, overrides=(), command: str = "verify", output_path: str = "relboltz_out") -> RunConfig:
    """Defaults, then the file (``key=value`` per line, ``#`` comments), then overrides."""
    vals = {k: d for k, (_, d) in KEYS.items()}
    lines = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        for i, raw in enumerate(p.read_text().splitlines(), start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            k, v = _parse_pair(text, i)
            vals[k] = v
            lines[k] = i
    for text in overrides:
        try:
            k, v = _parse_pair(text, None)
        except ConfigError as e:
            raise ConfigError(f"override {text!r}: {e}") from None
        vals[k] = v
        lines.pop(k, None)
    _validate(vals, lines)
    return RunConfig(vals, command, str(output_path))


# ----------------------------------------------------------------- output


class Output:
    """One directory per run; every file written once."""

    def __init__(self, root, timestamp: bool):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.timestamp = timestamp
        self.summary = []

    def path(self, name) -> Path:
        return self.root / name

    def csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([FMT % x if isinstance(x, (float, np.floating)) else x for x in r])

    def note(self, item, passed, metric):
        self.summary.append((item, "pass" if passed else "fail", float(metric)))

    def close(self):
        with open(self.path("summary.csv"), "w", newline="") as fh:
            if self.timestamp:
                fh.write(f"# generated {_dt.datetime.now().isoformat(timespec='seconds')}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["item", "status", "metric"])
            for item, status, m in self.summary:
                w.writerow([item, status, FMT % m])
        return all(s == "pass" for _, s, _ in self.summary)


# --------------------------------------------------------------- commands


def cmd_verify(cfg: RunConfig, out: Output):
    names = []
    for s in cfg["suites"]:
        names += list(V.SUITES) if s == "all" else list(V.LIGHT) if s == "light" else [s]
    rows = []
    for i, name in enumerate(dict.fromkeys(names)):
        fn = V.SUITES[name]
        kw = {"seed": cfg.seed + i} if "seed" in inspect.signature(fn).parameters else {}
        res = fn(**kw)
        log.info(res.line())
        rows.append((name, "pass" if res.passed else "fail", float(res.max_residual), float(res.tolerance)))
        out.note(f"verify:{name}", res.passed, res.max_residual)
    out.csv("verify.csv", ["test_name", "status", "max_residual", "tolerance"], rows)


def cmd_kinematics(cfg: RunConfig, out: Output):
    p, q, om = (cfg.vector(k) for k in ("p", "q", "omega"))
    rows = []
    worst = 0.0
    for c in cfg.c_list:
        for frame in (Frame.GS, Frame.CM):
            po, qo = post_collision(p, q, om, c, frame)
            g = float(relative_momentum(p, q, c))
            res = float(conservation_residual(p, q, po, qo, c))
            cos_t = float(cos_scattering_angle(p, q, po, qo, c)) if g > 0 else 1.0
            jac = float(gs_jacobian(p, q, om, c)) if frame is Frame.GS else float("nan")
            rows.append((c, frame.value, float(energy(p, c)), float(energy(q, c)), g * g + 4 * c * c, g,
                         float(np.arccos(np.clip(cos_t, -1, 1))), float(moller_velocity(p, q, c)), res, jac))
            worst = max(worst, res)
    out.csv("kinematics.csv", ["c", "frame", "p0", "q0", "s", "g", "theta", "moller_velocity",
                               "conservation_residual", "gs_jacobian"], rows)
    rng = np.random.default_rng(cfg.seed)
    n, N = cfg["n_samples"], cfg["N"]
    rand_rows = []
    for c in cfg.c_list:
        for frame in (Frame.GS, Frame.CM):
            pp, qq = rng.standard_normal((n, N)) * 2, rng.standard_normal((n, N)) * 2
            w = rng.standard_normal((n, N))
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            po, qo = post_collision(pp, qq, w, c, frame)
            r = float(np.max(conservation_residual(pp, qq, po, qo, c)))
            rand_rows.append((c, frame.value, n, r))
            worst = max(worst, r)
    out.csv("kinematics_random.csv", ["c", "frame", "n", "max_conservation_residual"], rand_rows)
    out.note("kinematics:conservation", worst <= 1e-9, worst)


def cmd_xsec(cfg: RunConfig, out: Output):
    c = cfg.c_list[0]
    gs = (0.5, 1.0, 2.0, 4.0)
    thetas = (np.pi / 6, np.pi / 3, np.pi / 2, 2 * np.pi / 3)
    v = cfg.values
    params = {"constant": v["sigma.constant"], "r0": v["sigma.r0"], "G": v["sigma.G"], "hbar": v["sigma.hbar"],
              "b": v["sigma.b"]}
    rows = []
    for kind in Kind:
        if kind is Kind.ISRAEL and not v["sigma.b_table"]:
            sig = CrossSection(kind, params)
        else:
            sig = CrossSection(kind, params, b=load_b_table(v["sigma.b_table"]) if v["sigma.b_table"] else None)
        for g in gs:
            for th in thetas:
                rows.append((kind.value, g, float(th), c, float(evaluate(sig, g, th, c))))
    out.csv("catalog.csv", ["kind", "g", "theta", "c", "value"], rows)

    sig = cfg.sigma()
    env = EnvelopeParams(A1=max(1.0, v["sigma.constant"]), N=cfg["N"])
    sample = [(g, th, cc) for g in np.linspace(0.1, 20, 40) for th in thetas for cc in cfg.c_list]
    rep = envelope_check(sig, env, sample)
    out.csv("envelope.csv", ["kind", "worst_ratio", "g", "theta", "c"],
            [(sig.kind.value, rep.worst_ratio) + tuple(float(x) for x in rep.worst_at)])
    out.note("xsec:envelope", True, rep.worst_ratio)

    rng = np.random.default_rng(cfg.seed)
    params_c = CutoffParams(v["B"], v["a"], v["alpha"])
    crows = []
    ok = True
    c_max = 2.0 ** 10
    for i in range(20):
        p, q = rng.standard_normal(3) * v["cutoff.scale"], rng.standard_normal(3) * v["cutoff.scale"]
        x = rng.standard_normal(3)
        r = c_star_search(p, q, v["cutoff.T"], params_c, x=x, seed=cfg.seed + i)
        m = cutoff_measure(x, p, q, v["cutoff.T"], c_max, params_c, seed=cfg.seed + i)
        good = r.found and r.c_star <= r.analytic_bound and m == 1.0
        ok &= good
        crows.append((i, r.c_star if r.found else float("nan"), r.analytic_bound, r.crude_bound, m,
                      "pass" if good else "fail"))
    out.csv("cutoff.csv", ["tuple", "c_star", "analytic_bound", "crude_bound", "measure_at_cmax", "status"],
            crows)
    out.note("xsec:cutoff", ok, max(r[1] / r[2] for r in crows))


def cmd_limit(cfg: RunConfig, out: Output):
    for kname in cfg["kind"]:
        kname = kname.upper()
        if kname == "SOLUTION":
            if cfg["N"] != 2:
                raise ConfigError("the solution study runs with N = 2")
            try:
                st = solution_convergence_study(cfg.solve_config(), cfg.c_list)
            except StudyAborted as e:
                out.note("limit:SOLUTION", False, e.c)
                (out.path("divergence.txt")).write_text(f"{e}\n")
                continue
            write_study_csv(out.path("limit_SOLUTION.csv"), st.rows(), st.fit)
            ok = st.fit is not None and 1.5 <= st.fit.slope <= 2.1
            out.note("limit:SOLUTION", ok, st.fit.slope if st.fit else float("nan"))
            continue
        spec = SampleSpec(n=cfg["n_samples"], N=3, seed=cfg.seed,
                          cutoff=CutoffParams(cfg["B"], cfg["a"], cfg["alpha"]), t=cfg["T"])
        res = component_sweep(kname, cfg["sweep_c_list"], spec)
        write_sweep_csv(out.path(f"limit_{kname}.csv"), res)
        if res.fit is None:
            out.note(f"limit:{kname}", res.values[-1] == 1.0, res.values[-1])
        else:
            lo, hi = V.SLOPE_BRACKETS[kname]
            out.note(f"limit:{kname}", lo <= res.fit.slope <= hi, res.fit.slope)


def cmd_solve(cfg: RunConfig, out: Output):
    if cfg["N"] != 2:
        raise ConfigError("the solver runs with N = 2")
    sc = cfg.solve_config()
    f0 = default_initial_data(sc)
    try:
        tr = picard_solve(f0, sc)
    except DivergenceError as e:
        out.path("divergence.txt").write_text(f"{e}\nreport: {e.report}\n")
        out.note("solve:picard", False, float("nan"))
        return EXIT_DIVERGED
    ext = "bin" if cfg["traj.format"] == "binary" else "csv"
    save_trajectory(tr, out.path(f"trajectory.{ext}"), cfg["traj.format"], cfg["traj.times"])
    out.csv("norm_trace.csv", ["sweep", "gap", "weighted_norm"],
            [(i + 1, g, n) for i, (g, n) in enumerate(zip(tr.gap_trace, tr.norm_trace))])
    out.note("solve:picard", tr.converged, weighted_sup_norm(tr, sc))
    return None


HANDLERS = {"verify": cmd_verify, "kinematics": cmd_kinematics, "xsec": cmd_xsec, "limit": cmd_limit,
            "solve": cmd_solve}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relboltz", description="Relativistic Boltzmann desk-scale experiments")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("overrides", nargs="*", metavar="key=value")
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--out", default="relboltz_out", metavar="DIR")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--no-timestamp", action="store_true")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = parse_config(args.config, overrides, args.command, args.out)
    except ConfigError as e:
        print(f"relboltz: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = Output(args.out, timestamp=not args.no_timestamp)
    out.path("config.txt").write_text(cfg.echo())
    try:
        code = HANDLERS[args.command](cfg, out)
    except ConfigError as e:
        print(f"relboltz: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RelBoltzError as e:
        print(f"relboltz: {type(e).__name__}: {e}", file=sys.stderr)
        out.note(f"{args.command}:error", False, float("nan"))
        out.close()
        return EXIT_FAIL
    ok = out.close()
    for item, status, m in out.summary:
        print(f"{status.upper():4s} {item} {m:.6e}")
    if code is not None:
        return code
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
