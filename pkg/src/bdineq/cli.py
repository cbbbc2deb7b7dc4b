"""Command-line front end.

Every subcommand writes one JSON report
``{command, config_echo, results, verdicts, timings, seed}`` (to stdout, or
``DIR/<command>.json`` with ``--out DIR``) plus optional CSV series.  Exit
status: 0 on a completed run whatever the verdicts, 2 for invalid input,
3 for numerical non-convergence, 4 for output failures.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import criteria, hardy, hp, tails, witness
from .measure import MeasureError, mean, measure_from_config, write_weights_csv

COMMANDS = (
    "measure-info", "cmu", "poincare", "hp-verify", "suff", "necc",
    "alpha", "constant", "tails", "counterexample", "all",
)

DEFAULTS = {
    "measure": {"family": "cmp", "nu": 0.5},
    "p": [0.4],
    "n_max": 500,
    "K": [8, 32, 128],
    "t_grid": [10.0, 20.0, 50.0, 100.0],
    "tau": {"kind": "identity"},
    "M_list": [5, 10, 20, 40],
    "threshold": criteria.DEFAULT_DIVERGENCE_THRESHOLD,
    "window": criteria.DEFAULT_WINDOW,
    "x": 2.0,
    "rho": 1.5,
    "k": 2,
    "pls_constant": None,
    "lambdas": [1.05, 1.5, 2.0],
    "cs": [1.5, 4.0],
    "integral_lambdas": [1.01, 2.0, 5.0, 20.0],
    "counterexample": {"nu": 0.5, "p_below": 0.4, "n_max": 10_000},
    "seed": 0,
}

EXIT_INPUT, EXIT_CONVERGENCE, EXIT_OUTPUT = 2, 3, 4


class ConfigError(ValueError):
    pass


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bdineq", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file; flags override its keys")
    ap.add_argument("--out", help="directory for JSON/CSV reports")
    g = ap.add_argument_group("measure")
    g.add_argument("--measure", dest="family", choices=("geometric", "poisson", "cmp"))
    g.add_argument("--r", type=float)
    g.add_argument("--lam", type=float, help="Poisson mean")
    g.add_argument("--nu", type=float)
    g.add_argument("--truncation", type=int)
    g = ap.add_argument_group("analysis")
    g.add_argument("--p", type=_floats, help="comma-separated p values")
    g.add_argument("--nmax", dest="n_max", type=int)
    g.add_argument("--K", type=_ints)
    g.add_argument("--t-grid", dest="t_grid", type=_floats)
    g.add_argument("--tau", choices=("identity", "power"))
    g.add_argument("--gamma", type=float, help="base for --tau power")
    g.add_argument("--M", dest="M_list", type=_ints)
    g.add_argument("--threshold", type=float)
    g.add_argument("--x", type=float)
    g.add_argument("--rho", type=float)
    g.add_argument("--k", type=int)
    g.add_argument("--C", dest="pls_constant", type=float)
    g.add_argument("--lambdas", type=_floats)
    g.add_argument("--cs", type=_floats)
    g.add_argument("--seed", type=int)
    return ap


def load_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(user) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, val in user.items():
            if isinstance(cfg.get(key), dict) and isinstance(val, dict) and key != "measure":
                cfg[key].update(val)
            else:
                cfg[key] = val

    if args.family:
        cfg["measure"] = {"family": args.family}
    meas = cfg["measure"]
    for name in ("r", "lam", "nu", "truncation"):
        val = getattr(args, name)
        if val is not None:
            meas[name] = val
    if args.command == "counterexample":
        ce = cfg["counterexample"]
        if args.nu is not None:
            ce["nu"] = args.nu
        if args.p is not None:
            ce["p_below"] = args.p[0]
        if args.n_max is not None:
            ce["n_max"] = args.n_max
    for name in ("p", "n_max", "K", "t_grid", "M_list", "threshold", "x", "rho", "k",
                 "pls_constant", "lambdas", "cs", "seed"):
        val = getattr(args, name)
        if val is not None:
            cfg[name] = val
    if args.tau is not None:
        cfg["tau"] = {"kind": args.tau}
    if args.gamma is not None:
        cfg["tau"]["gamma"] = args.gamma
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    if not isinstance(cfg["measure"], dict) or "family" not in cfg["measure"]:
        raise ConfigError("measure must be an object with a 'family' key")
    ps = cfg["p"]
    if not isinstance(ps, list) or not ps or not all(0.0 < float(p) <= 1.0 for p in ps):
        raise ConfigError("p must be a nonempty list of values in (0, 1]")
    if int(cfg["n_max"]) < 1:
        raise ConfigError("n_max must be >= 1")
    if not cfg["K"] or any(int(k) < 2 for k in cfg["K"]):
        raise ConfigError("K values must be >= 2")
    if not cfg["t_grid"] or any(float(t) <= 0 for t in cfg["t_grid"]):
        raise ConfigError("t_grid must hold positive values")
    if cfg["tau"].get("kind", "identity") not in ("identity", "power"):
        raise ConfigError("tau.kind must be 'identity' or 'power'")
    if cfg["tau"].get("kind") == "power" and not float(cfg["tau"].get("gamma", 0)) > 1.0:
        raise ConfigError("tau power needs gamma > 1")
    if not cfg["M_list"] or any(int(M) < 1 for M in cfg["M_list"]):
        raise ConfigError("M_list entries must be >= 1")
    if not 1.0 < float(cfg["rho"]) <= float(cfg["x"]):
        raise ConfigError("need 1 < rho <= x")
    if int(cfg["k"]) < 1:
        raise ConfigError("k must be >= 1")
    if cfg["pls_constant"] is not None and not float(cfg["pls_constant"]) > 0:
        raise ConfigError("pls_constant must be positive")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    ce = cfg["counterexample"]
    if not 0.0 < float(ce["p_below"]) < float(ce["nu"]) < 1.0:
        raise ConfigError("counterexample needs 0 < p_below < nu < 1")


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


class Run:
    """Collects results, verdicts, timings and CSV series for one invocation."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.results: dict = {}
        self.verdicts: dict = {}
        self.timings: dict = {}
        self.csv: dict = {}
        self._measure = None

    def measure(self):
        if self._measure is None:
            spec = dict(self.cfg["measure"])
            if spec["family"] != "custom":
                need = max(int(self.cfg["n_max"]), math.ceil(max(self.cfg["t_grid"])),
                           max(int(k) for k in self.cfg["K"]), int(self.cfg["k"])) + 1
                base = spec.get("truncation", 2000 if spec["family"] == "cmp" else 256)
                spec["truncation"] = max(int(base), need)
            self._measure = measure_from_config(spec)
        return self._measure

    def timed(self, name, fn):
        t0 = time.perf_counter()
        fn()
        self.timings[name] = round(time.perf_counter() - t0, 6)

    def tau(self, limit):
        spec = self.cfg["tau"]
        if spec.get("kind", "identity") == "power":
            return criteria.tau_power(float(spec["gamma"]), limit)
        return criteria.tau_identity(limit)


def cmd_measure_info(run: Run):
    m = run.measure()
    ks = [k for k in (0, 1, 2, 5, 10, 20, 50, 100) if k <= m.truncation]
    out = m.describe()
    cm = hardy.c_mu(m, window=run.cfg["window"])
    try:
        ex = mean(m)
    except MeasureError:
        ex = float("nan")
    out.update({
        "mean": ex,
        "mean_le_1_plus_cmu": bool(ex <= 1.0 + cm.value),
        "tails": {str(k): {"tail": m.tail(k), "log_tail": m.log_tail(k)} for k in ks},
    })
    run.results["measure-info"] = out
    run.csv["weights"] = ("weights", m)


def cmd_cmu(run: Run):
    m = run.measure()
    cm = hardy.c_mu(m, window=run.cfg["window"])
    run.results["cmu"] = {
        **cm.as_dict(),
        "hardy_bracket": hardy.hardy_bracket(m, cm).as_dict(),
        "poincare_bracket": hardy.poincare_bracket(m, cm).as_dict(),
    }
    run.verdicts["cmu_attained"] = cm.attained


def cmd_poincare(run: Run):
    m = run.measure()
    cm = hardy.c_mu(m, window=run.cfg["window"])
    rows = []
    for K in sorted(int(k) for k in run.cfg["K"]):
        rows.append({"K": K, "poincare": hardy.poincare_numeric(m, K), "hardy": hardy.hardy_numeric(m, K)})
    pb, hb = hardy.poincare_bracket(m, cm), hardy.hardy_bracket(m, cm)
    run.results["poincare"] = {"c_mu": cm.value, "rows": rows,
                               "poincare_bracket": pb.as_dict(), "hardy_bracket": hb.as_dict()}
    run.verdicts["poincare_below_8cmu"] = all(r["poincare"] <= pb.upper + 1e-9 for r in rows)
    run.verdicts["poincare_nondecreasing_in_K"] = all(
        b["poincare"] >= a["poincare"] * (1 - 1e-10) for a, b in zip(rows, rows[1:]))


def cmd_hp_verify(run: Run):
    out = {}
    ok = True
    for p in run.cfg["p"]:
        entries = []
        for lam in run.cfg["lambdas"]:
            for c in run.cfg["cs"]:
                rep = hp.verify_hp_properties(p, lam, c, hp.log_grid(lam, 1e4, 50))
                ok &= rep.all_hold
                entries.append(rep.as_dict())
        integrals = []
        if p < 1.0:
            for lam in run.cfg["integral_lambdas"]:
                chk = hp.integral_bound_check(p, lam)
                ok &= chk.holds
                integrals.append({"lambda": lam, "lhs": chk.lhs, "rhs": chk.rhs,
                                  "abserr": chk.abserr, "holds": chk.holds})
        out[repr(float(p))] = {"properties": entries, "integral_bound": integrals}
    run.results["hp-verify"] = out
    run.verdicts["hp_properties_all_hold"] = bool(ok)


def cmd_suff(run: Run):
    m = run.measure()
    cm = hardy.c_mu(m, window=run.cfg["window"])
    out = {}
    for p in run.cfg["p"]:
        rep = criteria.sufficiency_chat(m, p, int(run.cfg["n_max"]), poincare_finite=math.isfinite(cm.value),
                                        window=run.cfg["window"], threshold=run.cfg["threshold"])
        out[repr(float(p))] = rep.as_dict()
        run.verdicts[f"suff[p={p!r}]"] = rep.verdict
        run.csv[f"suff_p{p}"] = ("series", rep)
    run.results["suff"] = out


def cmd_necc(run: Run):
    m = run.measure()
    tau = run.tau(int(run.cfg["n_max"]))
    out = {}
    for p in run.cfg["p"]:
        rep = criteria.necessity_scan(m, p, tau, threshold=run.cfg["threshold"])
        out[repr(float(p))] = rep.as_dict()
        run.verdicts[f"necc[p={p!r}]"] = rep.verdict
        run.csv[f"necc_p{p}"] = ("series", rep)
    run.results["necc"] = {"tau": run.cfg["tau"], "by_p": out}


def cmd_alpha(run: Run):
    m = run.measure()
    x, rho, k = float(run.cfg["x"]), float(run.cfg["rho"]), int(run.cfg["k"])
    out = {}
    for p in run.cfg["p"]:
        res = criteria.alpha_exact(m, p, x, rho, k)
        b1, b2 = criteria.alpha_lower_bounds(m, p, x, rho, k)
        out[repr(float(p))] = {"alpha": res.value, "ladder": res.ladder, "boundary_active": res.boundary_active,
                               "bound_cauchy_schwarz": b1, "bound_last_step": b2,
                               "dominates_bounds": bool(res.value >= max(b1, b2) * (1 - 1e-12))}
    run.results["alpha"] = {"x": x, "rho": rho, "k": k, "by_p": out}


def _explicit_constants(run: Run) -> dict:
    m = run.measure()
    cm = hardy.c_mu(m, window=run.cfg["window"])
    out = {}
    for p in run.cfg["p"]:
        rep = criteria.sufficiency_chat(m, p, int(run.cfg["n_max"]), window=run.cfg["window"],
                                        threshold=run.cfg["threshold"])
        if rep.verdict != criteria.HOLDS:
            out[repr(float(p))] = {"error": f"sufficient condition verdict is {rep.verdict}: no constant"}
            continue
        out[repr(float(p))] = criteria.explicit_pls_constant(cm.value, rep.running_sup, p).as_dict()
    return out


def cmd_constant(run: Run):
    run.results["constant"] = _explicit_constants(run)


def cmd_tails(run: Run):
    m = run.measure()
    given = run.cfg["pls_constant"]
    consts = None if given is not None else _explicit_constants(run)
    out = {}
    for p in run.cfg["p"]:
        key = repr(float(p))
        if given is not None:
            C = float(given)
        elif "constant" in consts[key]:
            C = consts[key]["constant"]
        else:
            out[key] = {"error": "no p-LS constant available; pass --C"}
            continue
        rep = tails.herbst_check(tails.TailCheckInput(m, p, C, run.cfg["t_grid"]))
        out[key] = rep.as_dict()
        run.verdicts[f"tails[p={p!r}]"] = rep.all_hold
        run.csv[f"tails_p{p}"] = ("tails", rep)
    run.results["tails"] = out


def cmd_counterexample(run: Run):
    ce = run.cfg["counterexample"]
    v = witness.cmp_counterexample(float(ce["nu"]), float(ce["p_below"]), int(ce["n_max"]),
                                   [int(M) for M in run.cfg["M_list"]], threshold=run.cfg["threshold"])
    run.results["counterexample"] = v.as_dict()
    run.verdicts["counterexample"] = v.verdict
    run.csv["counterexample_beta"] = ("series", v.necessity_report)
    run.csv["counterexample_ratios"] = ("ratios", v.ratio_series)


HANDLERS = {
    "measure-info": cmd_measure_info,
    "cmu": cmd_cmu,
    "poincare": cmd_poincare,
    "hp-verify": cmd_hp_verify,
    "suff": cmd_suff,
    "necc": cmd_necc,
    "alpha": cmd_alpha,
    "constant": cmd_constant,
    "tails": cmd_tails,
    "counterexample": cmd_counterexample,
}


def _write_csv(path: Path, kind, obj):
    if kind == "weights":
        write_weights_csv(obj, path)
        return
    if kind == "tails":
        tails.write_tail_csv(obj, path)
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if kind == "series":
            w.writerow(["n", "value"])
            for n, v in obj.series():
                w.writerow([n, repr(v)])
        else:
            w.writerow(["M", "ratio"])
            for M, r in obj.pairs():
                w.writerow([M, repr(float(r))])


def execute(command: str, cfg: dict) -> tuple:
    """Run ``command``; returns ``(report, csv_tables)``."""
    run = Run(cfg)
    names = [c for c in COMMANDS if c != "all"] if command == "all" else [command]
    for name in names:
        run.timed(name, lambda name=name: HANDLERS[name](run))
    report = {
        "command": command,
        "config_echo": cfg,
        "results": run.results,
        "verdicts": run.verdicts,
        "timings": run.timings,
        "seed": cfg["seed"],
    }
    return jsonable(report), run.csv


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        report, tables = execute(args.command, cfg)
    except (ConfigError, MeasureError, ValueError, KeyError) as exc:
        print(f"bdineq {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RuntimeError, ArithmeticError) as exc:
        print(f"bdineq {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    text = dumps(report)
    if args.out is None:
        sys.stdout.write(text)
        return 0
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{args.command}.json", "w", newline="\n") as fh:
            fh.write(text)
        for name, (kind, obj) in tables.items():
            _write_csv(out / f"{name}.csv", kind, obj)
    except OSError as exc:
        print(f"bdineq {args.command}: cannot write reports: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
