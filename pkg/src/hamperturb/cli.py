"""Batch front end: read a task file, run one pipeline stage, write a report.

Exit status: 0 success, 1 numerical failure, 2 violated hypothesis (for
example an orbit without neat times), 3 unreadable configuration.
"""

import argparse
import ast
import configparser
import os
import platform
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__
from .control import (
    ControlData,
    bracket_closed_forms,
    bracket_sequence,
    kd_membership,
    random_hamiltonian_matrix,
    span_test,
    symmetric_basis,
)
from .exceptions import HamPerturbError, HypothesisViolation
from .flow import FlowConfig, integrate_flow
from .geometry import fiberwise_iso_energetic_test, is_hamiltonian_matrix
from .models import get_model, random_fiberwise_quadratic, zoo
from .normalform import build_normal_form
from .orbits import classify_orbit, find_periodic_orbit, sigma_scan
from .pipeline import design_perturbation, prepare_segment

TASKS = ("analyze-orbit", "normal-form", "controllability", "design-perturbation", "sigma-scan", "verify")
RANDOMIZED = ("design-perturbation", "verify")

EXIT_OK, EXIT_NUMERICAL, EXIT_HYPOTHESIS, EXIT_CONFIG = 0, 1, 2, 3

DEFAULTS = {
    "rel_tol": 1e-11,
    "abs_tol": 1e-12,
    "normal_form": 1e-6,
    "newton": 1e-10,
}


class ConfigError(Exception):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return where + self.args[0]


@dataclass
class TaskConfig:
    model: str
    params: dict
    x0: np.ndarray
    period: float
    task: str
    options: dict
    tolerances: dict
    out: str
    seed: int
    tol_scale: float = 1.0
    source: str = ""
    extras: dict = field(default_factory=dict)

    def tol(self, name):
        return self.tolerances[name] * self.tol_scale

    def flow_config(self):
        return FlowConfig(self.tol("rel_tol"), self.tol("abs_tol"))


# ---------------------------------------------------------------------------
# parsing


def _line_of(text, section, key):
    current = None
    for k, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and "=" in s and s.split("=", 1)[0].strip() == key:
            return k
    return None


def _literal(text, section, key, raw):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        raise ConfigError(f"[{section}] {key}: cannot read value {raw!r}", _line_of(text, section, key)) from None


def parse_config(text, source="<string>"):
    """Parse the INI-style task description into a :class:`TaskConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("missing section header", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(":", 1)[-1].strip(), exc.lineno) from None
    known = {"model", "task", "tolerances", "output"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]", _line_of_section(text, sec))
    if not cp.has_section("model") or "name" not in cp["model"]:
        raise ConfigError("[model] name is required", _line_of_section(text, "model"))
    m = cp["model"]
    name = m["name"].strip()
    params = _literal(text, "model", "params", m["params"]) if "params" in m else {}
    if not isinstance(params, dict):
        raise ConfigError("[model] params must be a dict", _line_of(text, "model", "params"))
    x0 = np.asarray(_literal(text, "model", "x0", m["x0"]), dtype=float) if "x0" in m else None
    period = float(_literal(text, "model", "period", m["period"])) if "period" in m else None
    if name not in zoo() or params:
        try:
            get_model(name, **params)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0]), _line_of(text, "model", "name")) from None
        except TypeError as exc:
            raise ConfigError(f"bad model parameters: {exc}", _line_of(text, "model", "params")) from None
    if name not in zoo():
        if x0 is None:
            raise ConfigError(f"model {name!r} needs x0", _line_of(text, "model", "name"))
    task = None
    options = {}
    if cp.has_section("task"):
        for key, raw in cp["task"].items():
            if key == "name":
                task = raw.strip()
            else:
                options[key] = _literal(text, "task", key, raw)
    if task is not None and task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; known: {', '.join(TASKS)}", _line_of(text, "task", "name"))
    tolerances = dict(DEFAULTS)
    if cp.has_section("tolerances"):
        for key, raw in cp["tolerances"].items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown tolerance {key!r}", _line_of(text, "tolerances", key))
            val = _literal(text, "tolerances", key, raw)
            if not isinstance(val, (int, float)) or not val > 0:
                raise ConfigError(f"tolerance {key} must be positive", _line_of(text, "tolerances", key))
            tolerances[key] = float(val)
    out, seed = "out", None
    if cp.has_section("output"):
        o = cp["output"]
        out = o.get("dir", out).strip()
        if "seed" in o:
            seed = _literal(text, "output", "seed", o["seed"])
            if not isinstance(seed, int):
                raise ConfigError("seed must be an integer", _line_of(text, "output", "seed"))
    return TaskConfig(name, params, x0, period, task, options, tolerances, out, seed, 1.0, source)


def _line_of_section(text, section):
    for k, raw in enumerate(text.splitlines(), start=1):
        if raw.strip() == f"[{section}]":
            return k
    return None


# ---------------------------------------------------------------------------
# output


class Output:
    def __init__(self, root):
        self.root = root
        self.lines = []
        self.files = []
        os.makedirs(os.path.join(root, "matrices"), exist_ok=True)

    def say(self, line=""):
        self.lines.append(line)

    def check(self, label, passed, detail=""):
        self.say(f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  ({detail})" if detail else ""))
        return passed

    def matrix(self, name, M, header=None):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        path = os.path.join("matrices", f"{name}.tsv")
        with open(os.path.join(self.root, path), "w") as fh:
            fh.write(f"# {name} {M.shape[0]}x{M.shape[1]}\n")
            if header:
                fh.write("# " + "\t".join(header) + "\n")
            for row in M:
                fh.write("\t".join(f"{v:.17g}" for v in row) + "\n")
        self.files.append(path)

    def finish(self, cfg, status):
        self.say("")
        self.say(f"exit_status = {status}")
        with open(os.path.join(self.root, "report.txt"), "w") as fh:
            fh.write("\n".join(self.lines) + "\n")
        manifest = [
            f"program = hamperturb {__version__}",
            f"python = {platform.python_version()}",
            f"numpy = {np.__version__}",
            f"scipy = {scipy.__version__}",
            f"config = {cfg.source}",
            f"task = {cfg.task}",
            f"model = {cfg.model}",
            f"seed = {cfg.seed}",
            f"tol_scale = {cfg.tol_scale!r}",
        ]
        manifest += [f"tol.{k} = {cfg.tol(k)!r}" for k in sorted(cfg.tolerances)]
        manifest += ["files = report.txt" + "".join(f", {f}" for f in sorted(self.files))]
        with open(os.path.join(self.root, "manifest.txt"), "w") as fh:
            fh.write("\n".join(manifest) + "\n")


# ---------------------------------------------------------------------------
# tasks


def _model(cfg):
    if cfg.model in zoo():
        entry = zoo()[cfg.model]
        H = entry.H if not cfg.params else get_model(cfg.model, **cfg.params)
        x0 = entry.x0 if cfg.x0 is None else cfg.x0
        period = entry.period if cfg.period is None else cfg.period
        return H, np.asarray(x0, dtype=float), period
    return get_model(cfg.model, **cfg.params), cfg.x0, cfg.period


def _orbit(cfg, H, x0, period):
    if period is None:
        raise HypothesisViolation("no period given for the reference orbit", t=0.0)
    return find_periodic_orbit(H, x0, period, cfg.flow_config(), tol=cfg.tol("newton"))


def task_analyze_orbit(cfg, out):
    H, x0, period = _model(cfg)
    orbit = _orbit(cfg, H, x0, period)
    out.say(f"closure residual = {orbit.closure_residual:.3e}")
    rep = classify_orbit(H, orbit)
    for line in rep.lines():
        out.say(line)
    out.matrix("return_map", rep.return_map)
    out.matrix("x0", orbit.x0[None, :])
    if len(rep.neat) == 0:
        raise HypothesisViolation("no neat time on the orbit", t=0.0)
    return EXIT_OK


def _normal_form(cfg, H, x0, period):
    t_anchor = float(cfg.options.get("anchor_time", 0.0))
    x = x0
    if t_anchor:
        x = integrate_flow(H, x0, (0.0, t_anchor), cfg.flow_config()).state(t_anchor)
    return build_normal_form(H, x, float(cfg.options.get("delta", 0.5)), cfg.flow_config(), tol=cfg.tol("normal_form"))


def task_normal_form(cfg, out):
    H, x0, period = _model(cfg)
    nf = _normal_form(cfg, H, x0, period)
    out.say(f"delta = {nf.delta:.17g}")
    out.say(f"halvings = {nf.halvings}")
    out.say(f"D = {np.diag(nf.D).astype(int).tolist()}")
    out.say(f"chart pieces = {', '.join(p.name for p in nf.chart.pieces)}")
    r = nf.residuals
    tol = r.tol
    out.check("projected orbit on the axis with zero momentum", r.orbit <= tol, f"{r.orbit:.3e}")
    out.check("no q / phat Hessian coupling", r.qp_hat <= tol, f"{r.qp_hat:.3e}")
    out.check("no p1 / phat Hessian coupling", r.p1_phat <= tol, f"{r.p1_phat:.3e}")
    out.check("phat fiber Hessian equals D", r.phat_phat <= tol, f"{r.phat_phat:.3e}")
    out.check("no q1 row in the base Hessian", r.q1_q <= tol, f"{r.q1_q:.3e}")
    dg = nf.diagonalization
    out.say(f"factorization residual M D M^T - A = {dg.factor_residual:.3e}")
    out.say(f"vertical correction asymmetry = {dg.symmetry_residual:.3e}")
    ts = np.linspace(0.0, nf.delta, 21)
    out.matrix("D", nf.D)
    out.matrix("K_samples", np.array([np.concatenate([[t], np.ravel(nf.K(t))]) for t in ts]), ["t", "K row-major"])
    out.matrix("a_samples", np.array([[t, float(nf.a(t))] for t in ts]), ["t", "a"])
    return EXIT_OK


def task_controllability(cfg, out):
    H, x0, period = _model(cfg)
    nf = _normal_form(cfg, H, x0, period)
    cd = ControlData.from_normal_form(nf)
    depth = int(cfg.options.get("depth", 3))
    span = span_test(cd, depth)
    kd = kd_membership(cd.D, cd.K(0.0))
    out.say(f"d = {cd.d}")
    out.say(f"D = {np.diag(cd.D).astype(int).tolist()}")
    out.check("bracket span is all of sp(2d)", span.full, f"rank {span.rank} of {span.dim_target}, depth {depth}")
    out.say(f"K(0) in the commutator obstruction set = {kd.member} (rank {kd.rank} of {kd.dim_target})")
    out.matrix("span_singular_values", span.singular_values[None, :])
    out.matrix("K0", cd.K(0.0))
    rows = []
    for j, E in enumerate(symmetric_basis(cd.d)):
        for i, W in enumerate(bracket_sequence(cd, E, depth)):
            rows.append(np.concatenate([[i, j], W.ravel()]))
    out.matrix("brackets", np.array(rows), ["depth", "basis index", "W row-major"])
    return EXIT_OK


def task_design_perturbation(cfg, out):
    H, x0, period = _model(cfg)
    orbit = _orbit(cfg, H, x0, period)
    rep = classify_orbit(H, orbit)
    for line in rep.lines():
        out.say(line)
    if len(rep.neat) == 0:
        raise HypothesisViolation("no neat time on the orbit", t=0.0)
    anchor = float(cfg.options.get("anchor_time", rep.anchor_time))
    setup = prepare_segment(H, orbit, anchor, float(cfg.options.get("delta", 0.5)), cfg.flow_config())
    out.say(f"segment delta = {setup.nf.delta:.17g}")
    out.matrix("L0", setup.L0)
    rng = np.random.default_rng(cfg.seed)
    eps = float(cfg.options.get("epsilon", 1e-3))
    count = int(cfg.options.get("directions", 1))
    limit = float(cfg.options.get("max_relative_residual", 0.1))
    ok = True
    for k in range(count):
        N = random_hamiltonian_matrix(rng, setup.control.d)
        des = design_perturbation(setup, N, eps, cfg=cfg.flow_config())
        ok &= out.check(
            f"target {k} reached",
            des.relative_residual <= limit,
            f"relative residual {des.relative_residual:.3e}, limit {limit:g}",
        )
        out.check(f"target {k} support avoids the rest of the orbit", des.disjoint, f"radius {des.radius:.4g}")
        out.matrix(f"direction_{k}", N)
        out.matrix(f"target_{k}", des.target)
        out.matrix(f"achieved_{k}", des.achieved)
        out.matrix(f"coefficients_{k}", des.potential.u.B.coeffs)
    return EXIT_OK if ok else EXIT_NUMERICAL


def task_sigma_scan(cfg, out):
    H, x0, period = _model(cfg)
    duration = float(cfg.options.get("duration", period if period else 1.0))
    traj = integrate_flow(H, x0, (0.0, duration), cfg.flow_config())
    events = sigma_scan(H, traj)
    out.say(f"duration = {duration:.17g}")
    out.say(f"events = {len(events)}")
    for ev in events:
        out.say(f"  {ev.kind} at t = {ev.t:.12g} in [{ev.t_lo:.12g}, {ev.t_hi:.12g}]")
    if events:
        out.matrix("sigma_events", np.array([[e.t, e.t_lo, e.t_hi, e.det_lo, e.det_hi] for e in events]),
                   ["t", "t_lo", "t_hi", "det_lo", "det_hi"])
    return EXIT_OK


def task_verify(cfg, out):
    rng = np.random.default_rng(cfg.seed)
    ok = True
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 4))
        Hq = random_fiberwise_quadratic(rng, n, potential=False)
        x = rng.normal(size=2 * n)
        G = Hq.hessian(x)[n:, n:]
        det = fiberwise_iso_energetic_test(Hq, x, tol=0.0).det_value
        worst = max(worst, abs(det + 2 * np.linalg.det(G) * Hq.value(x)) / (1 + abs(det)))
    ok &= out.check("bordered determinant equals -2 det(G) H", worst <= 1e-8, f"worst {worst:.2e}")
    worst = 0.0
    ham = True
    for _ in range(20):
        d = int(rng.integers(1, 4))
        D = np.diag(rng.choice([-1.0, 1.0], d))
        K0, K1, B = (0.5 * (A + A.T) for A in rng.normal(size=(3, d, d)))
        W = bracket_sequence(ControlData.constant(D, K0, K1), B, 3)
        C = bracket_closed_forms(D, K0, K1, B)
        worst = max(worst, max(np.max(np.abs(W[i + 1] - C[i])) for i in range(3)))
        ham &= all(is_hamiltonian_matrix(w, 1e-10) for w in W)
    ok &= out.check("bracket recursion matches the closed forms", worst <= 1e-9, f"worst {worst:.2e}")
    ok &= out.check("brackets are Hamiltonian matrices", ham)
    ok &= out.check("K = I is obstructed for D = I (d = 2)", kd_membership(np.eye(2), np.eye(2)).member)
    ok &= out.check("K = diag(1, 2) is not obstructed for D = I", not kd_membership(np.eye(2), np.diag([1.0, 2.0])).member)
    H, x0, period = _model(cfg)
    nf = _normal_form(cfg, H, x0, period)
    ok &= out.check("normal form residuals", nf.residuals.passed, f"max {max(nf.residuals.orbit, nf.residuals.qp_hat, nf.residuals.p1_phat, nf.residuals.phat_phat, nf.residuals.q1_q):.2e}")
    return EXIT_OK if ok else EXIT_NUMERICAL


RUNNERS = {
    "analyze-orbit": task_analyze_orbit,
    "normal-form": task_normal_form,
    "controllability": task_controllability,
    "design-perturbation": task_design_perturbation,
    "sigma-scan": task_sigma_scan,
    "verify": task_verify,
}


def run(cfg):
    """Run the configured task and write the report files; returns the exit status."""
    if cfg.seed is None:
        if cfg.task in RANDOMIZED:
            raise ConfigError(f"task {cfg.task} draws random numbers: set a seed")
        cfg.seed = 0
    out = Output(cfg.out)
    out.say(f"task = {cfg.task}")
    out.say(f"model = {cfg.model}")
    out.say(f"seed = {cfg.seed}")
    out.say("")
    np.random.seed(cfg.seed)
    try:
        status = RUNNERS[cfg.task](cfg, out)
    except HypothesisViolation as exc:
        out.say(f"hypothesis violated: {exc}")
        status = EXIT_HYPOTHESIS
    except (HamPerturbError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        out.say(f"numerical failure: {type(exc).__name__}: {exc}")
        status = EXIT_NUMERICAL
    out.finish(cfg, status)
    return status


def build_parser():
    ap = argparse.ArgumentParser(prog="hamperturb", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="task description file")
    ap.add_argument("--task", choices=TASKS, help="override the task named in the file")
    ap.add_argument("--out", help="output directory (default from the file, else ./out)")
    ap.add_argument("--seed", type=int, help="random seed")
    ap.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance by this factor")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"{args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, args.config)
        if args.task:
            cfg.task = args.task
        if cfg.task is None:
            raise ConfigError("no task given ([task] name or --task)", _line_of_section(text, "task"))
        if args.seed is not None:
            cfg.seed = args.seed
        if cfg.seed is None:
            if cfg.task in RANDOMIZED:
                raise ConfigError(f"task {cfg.task} draws random numbers: set [output] seed or --seed")
            cfg.seed = 0
        if not args.tol_scale > 0:
            raise ConfigError("--tol-scale must be positive")
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg.tol_scale = args.tol_scale
    if args.out:
        cfg.out = args.out
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
