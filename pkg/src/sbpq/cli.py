"""Command-line surface: validate | analyze | simulate | optimize | idle-check.

All commands are deterministic given (config, flags, seed).  Every run
writes a manifest listing its inputs (with the config's content hash),
seeds, and every emitted file; rerunning with the same inputs reproduces the
data files byte for byte.  Numbers are written with 9 significant digits,
locale-independent.

Exit codes: 0 success, 1 validation error, 2 assumption failure when
--fail-on-assumption is given, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import LoadedConfig, load_config
from .errors import SbpqError
from .heavytraffic import GeometricApprox, analyze
from .network import canonicalize, validate_spec
from .optimize import rank_policies
from .simulate import SimConfig, run_experiment
from .stats import ci as t_ci

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ASSUMPTION = 2
EXIT_RUNTIME = 3


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".9g")
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


class _Manifest:
    def __init__(self, command: str, cfg: LoadedConfig, outdir: Path, seeds=None):
        self.data = {
            "command": command,
            "config_path": str(cfg.path),
            "config_sha256": cfg.sha256,
            "seeds": seeds,
            "tool_version": __version__,
            "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "outputs": [],
        }
        self.outdir = outdir

    def add(self, path: Path) -> Path:
        self.data["outputs"].append(path.name)
        return path

    def write(self) -> None:
        self.data["finished"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        with open(self.outdir / "manifest.json", "w") as fh:
            json.dump(self.data, fh, indent=2)
            fh.write("\n")


def _outdir(args, default: str) -> Path:
    out = Path(args.outdir if args.outdir else default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _policy_label(policy) -> str:
    return repr(policy)


# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    diags = validate_spec(cfg.spec)
    try:
        canonicalize(cfg.spec, cfg.policy)
    except SbpqError as exc:
        diags = list(diags) + [type("D", (), {"__str__": lambda s: f"policy: {exc}"})()]
        print(f"policy: {exc}")
    for d in diags:
        print(str(d))
    if diags:
        print(f"{len(diags)} problem(s) found")
        return EXIT_INVALID
    print(f"{cfg.name}: ok "
          f"({cfg.spec.num_stations} stations, {cfg.spec.num_classes} classes)")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    diags = validate_spec(cfg.spec)
    if diags:
        for d in diags:
            print(str(d))
        return EXIT_INVALID
    out = _outdir(args, "analysis")
    manifest = _Manifest("analyze", cfg, out)
    report = analyze(cfg.spec, cfg.policy)

    rows = []
    idx = report.bundle.diagnostics if report.bundle else None
    if report.ok:
        for c in report.constants:
            rows.append([c.user_class + 1, c.canonical_index + 1, "L",
                         c.sigma2, c.one_minus_wkk, c.mean_estimate, c.geom_p])
        kk = canonicalize(cfg.spec, cfg.policy)
        for slot in range(kk.num_low, kk.num_classes):
            rows.append([int(kk.canon_to_user[slot]) + 1, slot + 1, "H",
                         "", "", "", ""])
    _write_csv(manifest.add(out / "constants.csv"),
               ["class_label", "canonical_index", "role", "sigma2",
                "one_minus_wkk", "mean_estimate", "geom_p"], rows)

    summary = {
        "status": report.status,
        "detail": report.detail,
        "rho": report.rho.tolist(),
        "beta": report.beta.tolist(),
        "cycle_time_estimate": report.cycle_time,
    }
    if report.bundle is not None:
        dump = report.bundle.to_jsonable()
        dump["u"] = dump["u"]
    else:
        dump = None
    with open(manifest.add(out / "matrices.json"), "w") as fh:
        json.dump({"summary": summary, "matrices": dump}, fh, indent=2)
        fh.write("\n")
    manifest.write()

    print(f"{cfg.name}: status={report.status}")
    if report.ok:
        for c in report.constants:
            print(f"  class {c.user_class + 1}: mean ~ {c.mean_estimate:.6g} jobs")
        print(f"  cycle time ~ {report.cycle_time:.6g}")
    else:
        print(f"  {report.detail}")
        if args.fail_on_assumption:
            return EXIT_ASSUMPTION
    return EXIT_OK


def _sim_config(cfg: LoadedConfig, args) -> SimConfig:
    sim = dict(cfg.sim)
    if args.arrivals is not None:
        sim["arrivals"] = args.arrivals
    if args.reps is not None:
        sim["reps"] = args.reps
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.warmup_frac is not None:
        sim["warmup_frac"] = args.warmup_frac
    joints = sim.pop("joints", None)
    if args.joint:
        joints = [tuple(int(x) for x in j.split(",")) for j in args.joint]
    pairs = None
    if joints is not None:
        pairs = tuple((int(a) - 1, int(b) - 1) for a, b in joints)
    return SimConfig(
        arrivals=int(float(sim.get("arrivals", 10 ** 5))),
        reps=int(sim.get("reps", 5)),
        seed=int(sim.get("seed", 0)),
        warmup_frac=float(sim.get("warmup_frac", 0.1)),
        joint_pairs=pairs,
        threads=args.threads)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    diags = validate_spec(cfg.spec)
    if diags:
        for d in diags:
            print(str(d))
        return EXIT_INVALID
    sim_cfg = _sim_config(cfg, args)
    out = _outdir(args, "simulation")
    manifest = _Manifest("simulate", cfg, out, seeds=[sim_cfg.seed])
    result = run_experiment(cfg.spec, cfg.policy, sim_cfg)
    report = analyze(cfg.spec, cfg.policy, check=False)
    approx = report.constants_by_user_class() if report.ok else {}

    rows = []
    for k in range(cfg.spec.num_classes):
        rows.append([k + 1, result.class_mean[k], result.class_ci[k],
                     result.idle_frac[k], result.beta_exact[k]])
    for pair, (mean, half) in result.iqr_stats.items():
        rows.append([f"IQR({pair[0] + 1};{pair[1] + 1})", mean, half, "", ""])
    _write_csv(manifest.add(out / "summary.csv"),
               ["class", "mean", "ci", "idle_frac", "beta_exact"], rows)

    for k, pmf in result.hist.items():
        geom = approx.get(k)
        ref = (GeometricApprox(geom.mean_estimate).pmf(np.arange(len(pmf)))
               if geom is not None else np.full(len(pmf), np.nan))
        _write_csv(manifest.add(out / f"hist_{k + 1}.csv"),
                   ["value", "probability", "geom_reference"],
                   [[v, pmf[v], ref[v]] for v in range(len(pmf))])

    for (i, j), joint in result.joints.items():
        p = joint.p
        rows = [[zi, zj, p[zi, zj]]
                for zi in range(p.shape[0]) for zj in range(p.shape[1])
                if p[zi, zj] > 0]
        _write_csv(manifest.add(out / f"joint_{i + 1}_{j + 1}.csv"),
                   ["z_i", "z_j", "probability"], rows)

    _write_csv(manifest.add(out / "cycletime.csv"),
               ["mean", "ci", "count"],
               [[result.cycle_mean, result.cycle_ci, result.cycle_count]])
    manifest.write()

    print(f"{cfg.name}: {sim_cfg.arrivals} arrivals x {sim_cfg.reps} reps "
          f"(seed {sim_cfg.seed})")
    for k in range(cfg.spec.num_classes):
        a = approx.get(k)
        extra = f"  approx {a.mean_estimate:.4g}" if a else ""
        print(f"  class {k + 1}: mean {result.class_mean[k]:.4g} "
              f"+- {result.class_ci[k]:.2g}{extra}")
    print(f"  cycle time {result.cycle_mean:.6g} +- {result.cycle_ci:.2g}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    diags = validate_spec(cfg.spec)
    if diags:
        for d in diags:
            print(str(d))
        return EXIT_INVALID
    out = _outdir(args, "optimization")
    manifest = _Manifest("optimize", cfg, out)
    ranking = rank_policies(cfg.spec)
    rows = [[_policy_label(r.policy), _fmt(r.estimate), r.group]
            for r in ranking.ranked]
    rows += [[_policy_label(r.policy), r.tag, ""] for r in ranking.failed]
    _write_csv(manifest.add(out / "ranking.csv"),
               ["policy", "estimate_or_tag", "group_id"], rows)
    manifest.write()
    print(f"{cfg.name}: {ranking.total} policies "
          f"({len(ranking.failed)} excluded by assumption failures)")
    for r in ranking.ranked:
        print(f"  {_policy_label(r.policy):30s} {r.estimate:.6f}  group {r.group}")
    for r in ranking.failed:
        print(f"  {_policy_label(r.policy):30s} [{r.tag}]")
    if ranking.failed and args.fail_on_assumption:
        return EXIT_ASSUMPTION
    return EXIT_OK


def cmd_idle_check(args) -> int:
    cfg = load_config(args.config)
    diags = validate_spec(cfg.spec)
    if diags:
        for d in diags:
            print(str(d))
        return EXIT_INVALID
    sim_cfg = _sim_config(cfg, args)
    out = _outdir(args, "idle-check")
    manifest = _Manifest("idle-check", cfg, out, seeds=[sim_cfg.seed])
    result = run_experiment(cfg.spec, cfg.policy, sim_cfg)
    rows = []
    worst = 0.0
    for k in range(cfg.spec.num_classes):
        beta = result.beta_exact[k]
        sim = result.idle_frac[k]
        half = result.idle_ci[k]
        ok = abs(sim - beta) <= 3 * half if half > 0 else np.isclose(sim, beta)
        worst = max(worst, abs(sim - beta) / (half if half > 0 else 1.0))
        rows.append([k + 1, beta, sim, half, "pass" if ok else "FAIL"])
    _write_csv(manifest.add(out / "idle_check.csv"),
               ["class", "beta_exact", "idle_sim", "ci", "verdict"], rows)
    manifest.write()
    for row in rows:
        print(f"  class {row[0]}: beta {row[1]:.6f}  sim {row[2]:.6f} "
              f"+- {row[3]:.2g}  {row[4]}")
    bad = [r for r in rows if r[4] == "FAIL"]
    print(f"{len(rows) - len(bad)}/{len(rows)} classes within 3 CI of the exact law")
    return EXIT_OK if not bad else EXIT_RUNTIME


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sbpq",
        description="Static-buffer-priority queueing network toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sim=False):
        p.add_argument("config")
        p.add_argument("-o", "--outdir", default=None)
        p.add_argument("--fail-on-assumption", action="store_true",
                       help="exit 2 when a structural assumption fails")
        if sim:
            p.add_argument("--arrivals", type=float, default=None)
            p.add_argument("--reps", type=int, default=None)
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--warmup-frac", type=float, default=None)
            p.add_argument("--joint", action="append", default=None,
                           metavar="I,J", help="collect a joint histogram (repeatable)")
            p.add_argument("--threads", type=int, default=None,
                           help="replication fan-out (default: SBPQ_THREADS or 1)")

    common(sub.add_parser("validate", help="check a config"))
    common(sub.add_parser("analyze", help="heavy-traffic approximations"))
    common(sub.add_parser("simulate", help="discrete-event simulation"), sim=True)
    common(sub.add_parser("optimize", help="rank all priority policies"))
    common(sub.add_parser("idle-check",
                          help="simulated idle fractions vs the exact law"), sim=True)
    return ap


_COMMANDS = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "idle-check": cmd_idle_check,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SbpqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID if args.command == "validate" else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
