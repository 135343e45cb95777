"""Command-line front end: ``bachflow {flow,normalized,soliton,verify,sweep}``.

Settings come from an optional JSON config file (``--config``) and are then
overridden by flags. Each run writes into its own directory:
``trajectory.csv`` (flows), ``report.json`` and ``config.echo.json``.

Exit codes: 0 success, 1 config error, 2 invariant violation, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .curvature import MetricSpec
from .flow import (
    FlowError,
    FlowOptions,
    integrate_full,
    integrate_metric,
    integrate_normalized,
    integrate_reduced,
)
from .nilalg import Bracket, TriBracket
from .verification import build_report, sample_orbit, sanitize

OUTPUT_ENV = "BACHFLOW_OUTPUT_DIR"
DEFAULT_OUTPUT = "runs"
SUBCOMMANDS = ("flow", "normalized", "soliton", "verify", "sweep")
FORMULATIONS = ("reduced", "full", "full-ungauged", "metric")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NUMERICAL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class Tolerances:
    rtol: float = 1e-10
    atol: float = 1e-10


@dataclass
class Output:
    dir: str | None = None
    run_name: str | None = None


@dataclass
class RunConfig:
    subcommand: str = "flow"
    initial: dict = field(default_factory=lambda: {"a": 1.0, "b": 0.0, "c": 1.0})
    formulation: str = "reduced"
    t_end: float = 10.0
    sample_dt: float | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: Output = field(default_factory=Output)
    seed: int = 0
    grid: int = 10
    sweep_count: int = 20
    jobs: int = 1
    starts: int = 400

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.formulation not in FORMULATIONS:
            raise ConfigError(f"unknown formulation {self.formulation!r}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ConfigError("t_end must be positive")
        if not (self.tolerances.rtol > 0 and self.tolerances.atol > 0):
            raise ConfigError("tolerances must be positive")
        if self.sample_dt is not None and self.sample_dt <= 0:
            raise ConfigError("sample_dt must be positive")
        if self.grid < 1 or self.sweep_count < 1 or self.jobs < 1 or self.starts < 1:
            raise ConfigError("grid, sweep_count, jobs and starts must be >= 1")
        self.initial_bracket()  # parses
        return self

    def initial_bracket(self) -> TriBracket | Bracket:
        init = self.initial
        try:
            if "entries" in init:
                return Bracket.from_json(init)
            if "bracket" in init:
                return Bracket.from_json(init["bracket"])
            return TriBracket(float(init["a"]), float(init["b"]), float(init["c"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad initial condition: {exc}") from exc

    def initial_metric(self) -> MetricSpec:
        gram = self.initial.get("gram")
        try:
            return MetricSpec.identity() if gram is None else MetricSpec(np.array(gram, dtype=float))
        except ValueError as exc:
            raise ConfigError(f"bad initial metric: {exc}") from exc

    def flow_options(self, **kw) -> FlowOptions:
        return FlowOptions(rtol=self.tolerances.rtol, atol=self.tolerances.atol,
                           sample_dt=self.sample_dt, **kw)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(data)
        if "tolerances" in d:
            d["tolerances"] = Tolerances(**d["tolerances"])
        if "output" in d:
            d["output"] = Output(**d["output"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def run_dir(self) -> Path:
        base = self.output.dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
        name = self.output.run_name
        if not name:
            payload = json.dumps({k: v for k, v in self.to_json().items() if k != "output"}, sort_keys=True)
            name = f"{self.subcommand}-{hashlib.sha256(payload.encode()).hexdigest()[:10]}"
        return Path(base) / name


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bachflow", description="Bach flow on 4-dimensional nilmanifolds.")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--out", dest="out_dir", help=f"output root (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
        sp.add_argument("--run-name")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--rtol", type=float)
        sp.add_argument("--atol", type=float)
        if name in ("flow", "normalized", "sweep"):
            sp.add_argument("--t-end", type=float)
            sp.add_argument("--sample-dt", type=float)
        if name in ("flow", "normalized"):
            sp.add_argument("--a", type=float)
            sp.add_argument("--b", type=float)
            sp.add_argument("--c", type=float)
        if name == "flow":
            sp.add_argument("--formulation", choices=FORMULATIONS)
            sp.add_argument("--bracket-json", help="initial bracket as {'entries': [[i,j,k,v],...]}")
            sp.add_argument("--gram-json", help="initial Gram matrix (metric formulation)")
        if name == "verify":
            sp.add_argument("--grid", type=int)
        if name == "sweep":
            sp.add_argument("--count", dest="sweep_count", type=int)
            sp.add_argument("--jobs", type=int)
            sp.add_argument("--formulation", choices=("reduced", "normalized"))
        if name == "soliton":
            sp.add_argument("--starts", type=int)
    return p


def config_from_args(argv: list[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    data["subcommand"] = args.subcommand
    defaults = {"sweep": {"t_end": 100.0}, "normalized": {"t_end": 200.0}}
    for k, v in defaults.get(args.subcommand, {}).items():
        data.setdefault(k, v)
    if args.subcommand == "normalized":
        data.setdefault("initial", {"a": 1.0, "b": 1.0, "c": math.sqrt(2.0)})
    cfg = RunConfig.from_json(data)
    ns = vars(args)
    for key in ("t_end", "sample_dt", "seed", "grid", "sweep_count", "jobs", "starts", "formulation"):
        if ns.get(key) is not None:
            setattr(cfg, key, ns[key])
    for key in ("rtol", "atol"):
        if ns.get(key) is not None:
            setattr(cfg.tolerances, key, ns[key])
    if ns.get("out_dir"):
        cfg.output.dir = ns["out_dir"]
    if ns.get("run_name"):
        cfg.output.run_name = ns["run_name"]
    tri_flags = {k: ns.get(k) for k in ("a", "b", "c") if ns.get(k) is not None}
    if tri_flags:
        base = cfg.initial if all(k in cfg.initial for k in "abc") else {"a": 1.0, "b": 0.0, "c": 1.0}
        cfg.initial = {**{k: base[k] for k in "abc"}, **tri_flags}
    if ns.get("bracket_json"):
        cfg.initial = {"bracket": json.loads(ns["bracket_json"]), **({"gram": cfg.initial["gram"]} if "gram" in cfg.initial else {})}
    if ns.get("gram_json"):
        cfg.initial = {**cfg.initial, "gram": json.loads(ns["gram_json"])}
    return cfg.validate()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(sanitize(obj), indent=2, sort_keys=True) + "\n")


def _decay_violations(traj) -> int:
    t, n2 = traj.t, traj.monitors["norm2"]
    m = t >= 1.0
    return int(np.sum(n2[m] > math.sqrt(6.0) / np.sqrt(t[m]) + 1e-8))


def run_flow(cfg: RunConfig, out: Path) -> list[str]:
    init = cfg.initial_bracket()
    if cfg.formulation == "reduced":
        if not isinstance(init, TriBracket):
            init = init.to_tri()
        traj = integrate_reduced(init, cfg.t_end, cfg.flow_options())
    elif cfg.formulation in ("full", "full-ungauged"):
        mu0 = init.embed() if isinstance(init, TriBracket) else init
        traj = integrate_full(mu0, cfg.t_end, cfg.flow_options(gauged=cfg.formulation == "full"))
    else:
        mu0 = init.embed() if isinstance(init, TriBracket) else init
        traj = integrate_metric(mu0, cfg.initial_metric(), cfg.t_end, cfg.flow_options())
    traj.write_csv(out / "trajectory.csv")
    bad = traj.check_invariants()
    summary = {"formulation": cfg.formulation, "samples": len(traj), "t_end": float(traj.t[-1]),
               "final_state": traj.states[-1].tolist(), "meta": traj.meta}
    if cfg.formulation != "metric":
        nd = _decay_violations(traj)
        summary["final_norm2"] = float(traj.monitors["norm2"][-1])
        summary["decay_bound_violations"] = nd
        if nd:
            bad.append("decay bound ||mu||^2 <= sqrt(6/t)")
    if cfg.formulation == "full":
        summary["off_structure_max"] = float(traj.monitors["off_structure_max"].max())
    summary["invariant_violations"] = bad
    _write_json(out / "report.json", summary)
    return bad


def run_normalized(cfg: RunConfig, out: Path) -> list[str]:
    init = cfg.initial_bracket()
    if not isinstance(init, TriBracket):
        init = init.to_tri()
    traj = integrate_normalized(init, cfg.t_end, cfg.flow_options(rescale=True))
    traj.write_csv(out / "trajectory.csv")
    a, b, c = traj.states[-1, :3]
    s2 = math.sqrt(2.0)
    n = np.sqrt(traj.monitors["norm2"])
    meta = {k: v for k, v in traj.meta.items() if k != "normalization"}
    bad = traj.check_invariants()
    b2a2 = traj.monitors["b2_over_a2"]
    # b below the integrator's absolute tolerance is noise
    if traj.states[0, 1] != 0 and np.any(np.diff(b2a2) > (10 * cfg.tolerances.atol) ** 2):
        bad.append("b^2/a^2 non-increasing")
    report = {
        "initial": {"a": float(traj.states[0, 0]), "b": float(traj.states[0, 1]), "c": float(traj.states[0, 2])},
        "final": {"a": float(a), "b": float(b), "c": float(c)},
        "distance_to_fixed_point": abs(a - s2) + abs(c - s2) + abs(b),
        "norm_drift_max": float(np.abs(n - n[0]).max()),
        "final_r": float(traj.monitors["r"][-1]),
        "final_log_lambda": float(traj.monitors["log_lambda"][-1]),
        "final_log1p_tau": float(traj.monitors["log1p_tau"][-1]),
        "fixed_point_target": "a = c = sqrt(2), b = 0 (on ||mu|| = 2)",
        "stated_limit": "lim a = lim c = 2 (with a^2 + c^2 -> 1 in the argument); "
        "neither is compatible with ||mu|| = 2",
        "meta": meta,
        "invariant_violations": bad,
    }
    _write_json(out / "report.json", report)
    return bad


def run_soliton(cfg: RunConfig, out: Path) -> list[str]:
    from .soliton import solve_soliton

    rep = solve_soliton(starts=cfg.starts, seed=cfg.seed)
    _write_json(out / "report.json", rep.to_json())
    print(rep.table())
    bad = []
    if len(rep.solutions) != 1:
        bad.append("exactly one gauge-slice soliton")
    if any(s.residual >= 1e-12 for s in rep.solutions):
        bad.append("soliton residual < 1e-12")
    return bad


def run_verify(cfg: RunConfig, out: Path) -> list[str]:
    rep = build_report(cfg.grid, cfg.seed)
    _write_json(out / "report.json", rep)
    print(f"closed form vs oracle: max deviation {rep['checks']['closed_form_vs_oracle']['max']:.3e}")
    for name, chk in rep["checks"].items():
        print(f"  {name:34s} {chk['max']:.3e}  {'ok' if chk['pass'] else 'FAIL'}")
    return [] if rep["passed"] else ["verify checks"]


def _sweep_one(args):
    kind, a, b, c, t_end, rtol, atol = args
    p = TriBracket(a, b, c)
    opts = FlowOptions(rtol=rtol, atol=atol)
    try:
        if kind == "normalized":
            traj = integrate_normalized(p, t_end, FlowOptions(rtol=rtol, atol=atol, rescale=True))
        else:
            traj = integrate_reduced(p, t_end, opts)
    except FlowError as exc:
        return {"a0": a, "b0": b, "c0": c, "status": f"error: {exc}"}
    fa, fb, fc = traj.states[-1, :3]
    bad = traj.check_invariants()
    if kind == "reduced" and _decay_violations(traj):
        bad.append("decay bound")
    return {
        "a0": a, "b0": b, "c0": c, "t_end": t_end, "a": fa, "b": fb, "c": fc,
        "norm2": float(traj.monitors["norm2"][-1]), "samples": len(traj),
        "status": "ok" if not bad else "violated: " + "; ".join(bad),
    }


SWEEP_COLUMNS = ("a0", "b0", "c0", "t_end", "a", "b", "c", "norm2", "samples", "status")


def run_sweep(cfg: RunConfig, out: Path) -> list[str]:
    kind = cfg.formulation if cfg.formulation in ("reduced", "normalized") else "reduced"
    pts = sample_orbit(cfg.sweep_count, cfg.seed, radius=2.0 if kind == "normalized" else None)
    jobs = [(kind, *map(float, p), cfg.t_end, cfg.tolerances.rtol, cfg.tolerances.atol) for p in pts]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            rows = list(ex.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([format(row[k], ".17g") if isinstance(row.get(k), float) else row.get(k, "")
                        for k in SWEEP_COLUMNS])
    bad = [f"{r['a0']:.6g},{r['b0']:.6g},{r['c0']:.6g}: {r['status']}" for r in rows if r["status"] != "ok"]
    _write_json(out / "report.json", {"kind": kind, "count": len(rows), "failures": bad})
    return bad


RUNNERS = {"flow": run_flow, "normalized": run_normalized, "soliton": run_soliton,
           "verify": run_verify, "sweep": run_sweep}


def run(cfg: RunConfig) -> int:
    out = cfg.run_dir()
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.echo.json", cfg.to_json())
    try:
        bad = RUNNERS[cfg.subcommand](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FlowError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {out}")
    if bad:
        print("invariant violated: " + ", ".join(bad), file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse
        return EXIT_CONFIG if exc.code else EXIT_OK
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
