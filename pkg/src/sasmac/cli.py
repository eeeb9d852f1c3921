"""Command line entry point: ``sasmac region|identify|simulate|verify``.

Exit codes: 0 success, 1 runtime failure, 2 invalid config, 3 guard violation.
Data goes to ``--out`` (or standard output); messages go to standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import GuardError, __version__
from .graph_cycles import WeightedCompleteGraph, count_cycles, enumerate_cycles, lemma1_check, n_edges
from .identification import (
    IdentificationInstance,
    dominant_error_profile,
    identifiability_sum,
    mc_identification_error,
    pe_lower_bound,
    pe_upper_bound,
)
from .io import atomic_write, csv_text, grid, json_text, manifest, parse_channel, parse_dist
from .regions import thm2_frontier, thm3_frontier, thm4_frontier, thm5_frontier, thm6_feasible
from .sim import SimConfig, arrangement_argmax, run_experiment


class ConfigError(ValueError):
    pass


_GRID = {
    "oneOf": [
        {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        {
            "type": "object",
            "properties": {
                "start": {"type": "number", "minimum": 0},
                "stop": {"type": "number", "minimum": 0},
                "num": {"type": "integer", "minimum": 1},
            },
            "required": ["start", "stop", "num"],
            "additionalProperties": False,
        },
    ]
}
_CHANNEL = {"oneOf": [{"type": "string"}, {"type": "object"}]}
_DIST = {"oneOf": [{"type": "string"}, {"type": "array", "items": {"type": "number"}}, {"type": "object"}]}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}

SCHEMAS = {
    "region": {
        "type": "object",
        "properties": {
            "theorem": {"enum": [2, 3, 4, 5, 6]},
            "channel": _CHANNEL,
            "channels": {"type": "array", "items": _CHANNEL, "minItems": 1},
            "nus": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "input": _DIST,
            "alpha": _GRID,
            "nu": _GRID,
            "resolution": {"type": "integer", "minimum": 1},
            "lam_points": {"type": "integer", "minimum": 2},
            "r_bar": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1},
            "seed": _SEED,
        },
        "required": ["theorem"],
        "additionalProperties": False,
    },
    "identify": {
        "type": "object",
        "properties": {
            "dists": {"type": "array", "items": _DIST, "minItems": 2},
            "n": {"oneOf": [{"type": "integer", "minimum": 0}, {"type": "array", "items": {"type": "integer", "minimum": 0}}]},
            "trials": {"type": "integer", "minimum": 1},
            "classwise": {"type": "boolean"},
            "profile": {"type": "boolean"},
            "seed": _SEED,
        },
        "required": ["dists", "n"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {
            "pipeline": {"enum": ["thm2", "thm3", "thm4"]},
            "n": {"type": "integer", "minimum": 1},
            "A": {"type": "integer", "minimum": 1},
            "K": {"type": "integer", "minimum": 1},
            "M": {"type": "integer", "minimum": 1},
            "channel": _CHANNEL,
            "channels": {"type": "array", "items": _CHANNEL, "minItems": 1},
            "input": _DIST,
            "inputs": {"type": "array", "items": _DIST, "minItems": 1},
            "threshold": {"oneOf": [{"enum": ["balanced", "midpoint"]}, {"type": "number"}, {"type": "array", "items": {"type": "number"}}]},
            "codebook": {"enum": ["cc", "iid"]},
            "expurgate": {"type": "boolean"},
            "trials": {"type": "integer", "minimum": 1},
            "seed": _SEED,
        },
        "required": ["pipeline", "n", "A", "K", "M"],
        "additionalProperties": False,
    },
}


def load_config(args, sub: str) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from e
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for key, val in vars(args).items():
        if key in SCHEMAS[sub]["properties"] and val is not None:
            cfg[key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        jsonschema.validate(cfg, SCHEMAS[sub])
    except jsonschema.ValidationError as e:
        raise ConfigError(f"invalid config: {e.message}") from e
    return cfg


def _chan(spec):
    try:
        return parse_channel(spec)
    except (ValueError, OSError, KeyError, TypeError) as e:
        raise ConfigError(f"bad channel {spec!r}: {e}") from e


def _dist(spec, size=None):
    try:
        return parse_dist(spec, size)
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"bad distribution {spec!r}: {e}") from e


def _csv_list(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


# -- region ---------------------------------------------------------------------------


def _region_cell(job):
    thm, cfg, a, v, r_bar = job
    res = cfg.get("resolution", 200)
    lam_points = cfg.get("lam_points", 201)
    if thm == 6:
        ok = thm6_feasible(a, v)
        return {"alpha": a, "nu": v, "R_star": float("inf") if ok else 0.0, "binding_constraint": "none" if ok else "nu_exceeds_alpha"}
    if thm == 3:
        chans = [_chan(c) for c in cfg["channels"]]
        f = thm3_frontier(chans, cfg["nus"], a, resolution=res, lam_points=lam_points)
    else:
        Q = _chan(cfg["channel"])
        if thm == 2:
            f = thm2_frontier(Q, a, v, resolution=res, lam_points=lam_points)
        elif thm == 4:
            P = _dist(cfg.get("input", "uniform"), Q.inputs) if cfg.get("input", "uniform") != "optimize" else None
            f = thm4_frontier(Q, a, v, resolution=res, P=P)
        else:
            f = thm5_frontier(Q, a, v, r_bar=r_bar, resolution=res, lam_points=lam_points)
    row = {"alpha": a, "nu": f.nu, "R_star": f.R_star, "lambda": f.lam, "binding_constraint": f.binding}
    if f.P is not None:
        row.update({f"P_{i}": float(p) for i, p in enumerate(f.P)})
    if thm == 5:
        row["r_bar"] = r_bar
    return row


def cmd_region(args, cfg):
    thm = cfg["theorem"]
    if thm == 3:
        if "channels" not in cfg or "nus" not in cfg or len(cfg["channels"]) != len(cfg["nus"]):
            raise ConfigError("theorem 3 needs matching 'channels' and 'nus' lists")
        chans = [_chan(c) for c in cfg["channels"]]
        if any(c.outputs != chans[0].outputs or c.idle_row != chans[0].idle_row for c in chans):
            raise ConfigError("theorem 3 channels must share the idle output law")
        width = sum(c.inputs for c in chans)
    elif thm != 6:
        if "channel" not in cfg:
            raise ConfigError(f"theorem {thm} needs a 'channel'")
        Q = _chan(cfg["channel"])
        width = Q.inputs
        if thm == 4 and cfg.get("input", "uniform") != "optimize":
            _dist(cfg.get("input", "uniform"), Q.inputs)
    else:
        width = 0
    alphas = grid(cfg.get("alpha", [0.0, 0.05, 0.1, 0.15, 0.2]))
    nus = grid(cfg.get("nu", [0.0, 0.02, 0.04])) if thm != 3 else [max(cfg["nus"])]
    r_bars = cfg.get("r_bar", [0.0]) if thm == 5 else [None]
    jobs = [(thm, cfg, a, v, r) for a in alphas for v in nus for r in r_bars]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(_region_cell, jobs))
    else:
        rows = [_region_cell(j) for j in jobs]
    header = ["alpha", "nu"] + (["r_bar"] if thm == 5 else []) + ["R_star"]
    header += [f"P_{i}" for i in range(width)] + ["lambda", "binding_constraint"]
    return header, rows, {"rows": len(rows)}


# -- identify -------------------------------------------------------------------------


def cmd_identify(args, cfg):
    dists = [_dist(d) for d in cfg["dists"]]
    ns = cfg["n"] if isinstance(cfg["n"], list) else [cfg["n"]]
    trials = cfg.get("trials", 10_000)
    seed = cfg.get("seed", 0)
    rows = []
    try:
        insts = [IdentificationInstance(dists, n) for n in ns]
    except ValueError as e:
        raise ConfigError(str(e)) from e
    for n, inst in zip(ns, insts):
        S = identifiability_sum(inst)
        p, s = mc_identification_error(inst, trials, seed, classwise=cfg.get("classwise", False))
        row = {"n": n, "A": inst.A, "S": S, "pe_upper": pe_upper_bound(S), "pe_lower": pe_lower_bound(S), "p_hat": p, "stderr": s, "trials": trials}
        if cfg.get("profile"):
            row["profile"] = dominant_error_profile(inst, trials, seed)
        rows.append(row)
    header = ["n", "A", "S", "pe_upper", "pe_lower", "p_hat", "stderr", "trials"]
    return header, rows, {"rows": len(rows), "trials": trials * len(rows)}


# -- simulate -------------------------------------------------------------------------


def build_sim_config(cfg: dict) -> SimConfig:
    if "channels" in cfg:
        chans = [_chan(c) for c in cfg["channels"]]
    elif "channel" in cfg:
        chans = [_chan(cfg["channel"])]
    else:
        raise ConfigError("simulate needs 'channel' or 'channels'")
    if "inputs" in cfg:
        inputs = [_dist(d, chans[0].inputs) for d in cfg["inputs"]]
    else:
        inputs = [_dist(cfg.get("input", "uniform"), chans[0].inputs)]
    try:
        return SimConfig(
            cfg["pipeline"], cfg["n"], cfg["A"], cfg["K"], cfg["M"], chans, inputs,
            cfg.get("trials", 1000), cfg.get("seed", 0), cfg.get("threshold", "balanced"),
            cfg.get("codebook"), cfg.get("expurgate", False),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


TRIAL_HEADER = ["trial", "collision", "sync_miss", "sync_fa", "ident_ok", "msgs_ok", "global_error"]


def cmd_simulate(args, cfg):
    sc = build_sim_config(cfg)
    rep = run_experiment(sc, threads=args.threads)
    report = {"summary": rep.summary, "thresholds": rep.thresholds, "codebook_redraws": rep.codebook_redraws, "config": cfg}
    if args.trials_out:
        rows = [
            {"trial": t, "collision": r.collision, "sync_miss": r.sync_miss, "sync_fa": r.sync_fa,
             "ident_ok": r.ident_ok, "msgs_ok": r.msgs_ok, "global_error": r.global_error}
            for t, r in enumerate(rep.trials)
        ]
        atomic_write(args.trials_out, csv_text(TRIAL_HEADER, rows))
    counts = {k: rep.summary[k] for k in ("trials", "collisions", "global_errors", "sync_failures", "ident_failures", "message_failures")}
    return None, report, counts


# -- verify ---------------------------------------------------------------------------


def cmd_verify(args, cfg):
    checks = [c for c in ("lemma1", "cycles", "lemma5") if getattr(args, c)]
    if len(checks) != 1:
        raise ConfigError("choose exactly one of --lemma1, --cycles, --lemma5")
    seed = args.seed or 0
    rows = []
    if checks[0] == "lemma1":
        header = ["k", "r", "n_k", "N_rk", "lhs_mean", "rhs", "holds"]
        for k in range(3, args.kmax + 1):
            for r in range(2, k + 1):
                rng = np.random.default_rng([seed, k, r])
                worst, holds = None, True
                for _ in range(args.draws):
                    w = 1.0 - rng.random(n_edges(k))  # uniform on (0, 1]
                    lhs, rhs, ok = lemma1_check(WeightedCompleteGraph(k, w), r)
                    holds &= ok
                    if worst is None or lhs / rhs > worst[0] / worst[1]:
                        worst = (lhs, rhs)
                rows.append({"k": k, "r": r, "n_k": n_edges(k), "N_rk": count_cycles(k, r), "lhs_mean": worst[0], "rhs": worst[1], "holds": holds})
    elif checks[0] == "cycles":
        header = ["k", "r", "enumerated", "N_rk", "ratio", "holds"]
        for k in range(2, args.kmax + 1):
            for r in range(2, k + 1):
                N = count_cycles(k, r)
                ratio = N / n_edges(k) ** (r / 2)
                e = len(enumerate_cycles(k, r))
                rows.append({"k": k, "r": r, "enumerated": e, "N_rk": N, "ratio": ratio, "holds": e == N and ratio <= 4**r})
    else:
        header = ["K", "A", "argmax", "max_gap", "swap_ok"]
        for K in range(1, args.kmax + 1):
            for A in range(1, args.kmax + 1):
                res = arrangement_argmax(K, A)
                gap = max(max(t) - min(t) for t in res.ties)
                rows.append({"K": K, "A": A, "argmax": " ".join(map(str, res.best)), "max_gap": gap, "swap_ok": res.swap_ok})
    return header, rows, {"rows": len(rows), "failures": sum(1 for r in rows if r.get("holds") is False or r.get("swap_ok") is False)}


# -- driver ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sasmac", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--threads", type=int, default=1, help="worker processes; never changes results")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", parents=[common], help="region frontiers")
    p.add_argument("--theorem", type=int)
    p.add_argument("--channel")
    p.add_argument("--input", help="input law for theorem 4 ('optimize' to search)")
    p.add_argument("--alpha", type=_csv_list)
    p.add_argument("--nu", type=_csv_list)
    p.add_argument("--resolution", type=int)
    p.add_argument("--r-bar", dest="r_bar", type=_csv_list)

    p = sub.add_parser("identify", parents=[common], help="identification error vs bounds")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo of a receiver pipeline")
    p.add_argument("--pipeline")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--trials-out", dest="trials_out", help="per-trial CSV path")

    p = sub.add_parser("verify", parents=[common], help="exhaustive combinatorial checks")
    p.add_argument("--lemma1", action="store_true", help="mean cycle gain bound")
    p.add_argument("--cycles", action="store_true", help="cycle counts and the 4^r ratio bound")
    p.add_argument("--lemma5", action="store_true", help="occupancy argmax and swap check")
    p.add_argument("--kmax", type=int, default=7)
    p.add_argument("--draws", type=int, default=200)
    return ap


COMMANDS = {"region": cmd_region, "identify": cmd_identify, "simulate": cmd_simulate, "verify": cmd_verify}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        if args.command == "verify":
            cfg = {"check": [c for c in ("lemma1", "cycles", "lemma5") if getattr(args, c)], "kmax": args.kmax, "draws": args.draws, "seed": args.seed or 0}
            if args.kmax < 1 or args.draws < 1:
                raise ConfigError("--kmax and --draws must be positive")
        else:
            cfg = load_config(args, args.command)
        header, data, counts = COMMANDS[args.command](args, cfg)
        fmt = args.format or ("json" if header is None else "csv")
        if fmt == "csv" and header is None:
            raise ConfigError("simulate emits a JSON report; use --trials-out for per-trial CSV")
        text = csv_text(header, data) if fmt == "csv" else json_text(data)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except GuardError as e:
        print(f"guard: {e}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.out:
        atomic_write(args.out, text)
        man = manifest(cfg, __version__, cfg.get("seed", 0), time.perf_counter() - start, counts)
        atomic_write(args.out + ".manifest.json", json_text(man))
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
