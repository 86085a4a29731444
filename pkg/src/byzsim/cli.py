"""Command-line front end: ``byzsim {btr,train,spectrum}``.

Settings resolve in this order (later wins): built-in defaults, the
``BYZSIM_SEED`` environment variable (seed only), the ``--config`` file,
then command-line flags. The config file is flat ``key = value`` lines whose
keys are the long flag names (``sigma-grid`` or ``sigma_grid``). A file
written by this tool can be passed back as ``--config``: its
``# config: {...}`` header line is read instead, which reproduces the run.

Every output starts with that header. CSV layouts:

- btr: scenario, defense, trials, btr
- train: round, loss, accuracy, detection_accuracy, benign_count
  (plus ``<output>.summary.json`` when writing to a file)
- spectrum: index, eigenvalue, gap  (spectrum at the bandwidth PDSH picked
  first; a ``# pdsh:`` line carries sigma*, c and the mimic set)

Exit codes: 0 ok, 2 bad arguments (unknown attack/defense names are
reported), 3 output path not writable.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .aggregators import AGGREGATOR_KINDS, AggregatorSpec, make_aggregator
from .attacks import ATTACK_KINDS, PLANTED_KINDS, TOY_SCENARIOS, AttackSpec, benign_cloud, craft_attack, planted_cohort
from .fedcut import geometric_grid, pdsh
from .fl_sim.data import load_mnist
from .fl_sim.metrics import btr_trials
from .fl_sim.training import TrainingConfig, run_federated
from .numerics import sym_eigvals
from .spectral import kernel_from_sq_dists, normalize_adjacency, pairwise_sq_dists, summarize_eigenvalues

EXIT_USAGE = 2
EXIT_OUTPUT = 3
SECTION = "byzsim"
HEADER_PREFIX = "# config: "

DEFAULTS = {
    "clients": 20,
    "attackers": 6,
    "attack": "same_value",
    "defense": "fedcut",
    "rounds": 200,
    "sigma_grid": "0.001:100:2",
    "beta": None,
    "seed": 0,
    "trials": 1000,
    "scenarios": ",".join(TOY_SCENARIOS),
    "format": "csv",
    "krum_q": None,
    "trim": None,
    "lr": 0.5,
    "batch_size": 64,
    "optimizer": "sgd",
    "dim": 20,
    "classes": 10,
    "separation": 8.0,
    "offset": 1.0,
    "samples_per_client": 100,
    "mnist_dir": None,
}
INT_KEYS = {"clients", "attackers", "rounds", "seed", "trials", "krum_q", "batch_size", "dim", "classes",
            "samples_per_client"}
FLOAT_KEYS = {"beta", "trim", "lr", "separation", "offset"}
# toy cohorts have 18 clients; Krum is told to expect 4 attackers there
TOY_KRUM_Q = 4
TOY_TRIM = 0.4
MNIST_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
               "t10k-labels-idx1-ubyte")


class UsageError(Exception):
    pass


class OutputError(Exception):
    pass


def _coerce(key, value):
    if value is None or value == "" or value == "none":
        return None
    if key in INT_KEYS:
        return int(value)
    if key in FLOAT_KEYS:
        return float(value)
    return value


def read_config_file(path) -> dict:
    """Flat key/value settings, or the config embedded in a previous output's header."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for line in text.splitlines():
        if line.startswith(HEADER_PREFIX):
            data = json.loads(line[len(HEADER_PREFIX):])
            return {k: v for k, v in data.items() if k in DEFAULTS}
    parser = configparser.ConfigParser()
    try:
        parser.read_string(f"[{SECTION}]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from exc
    out = {}
    for key, value in parser[SECTION].items():
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"unknown config key {key!r} in {path}")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="byzsim", description="Byzantine-robust aggregation experiments.")
    p.add_argument("command", choices=("btr", "train", "spectrum"))
    p.add_argument("--config", help="flat key=value file, or a previous output file")
    p.add_argument("--output", help="output path (stdout if omitted)")
    for key in DEFAULTS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return p


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    env_seed = os.environ.get("BYZSIM_SEED")
    if env_seed:
        cfg["seed"] = env_seed
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    try:
        return {k: _coerce(k, v) for k, v in cfg.items()}
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_sigma_grid(text: str) -> np.ndarray:
    try:
        lo, hi, ratio = (float(x) for x in text.split(":"))
        return geometric_grid(lo, hi, ratio)
    except ValueError as exc:
        raise UsageError(f"--sigma-grid wants min:max:ratio, got {text!r} ({exc})") from exc


def _check_token(token: str, allowed, what: str):
    if token not in allowed:
        raise UsageError(f"unknown {what} {token!r} (choose from {', '.join(allowed)})")


def defense_spec(kind: str, cfg: dict, grid, krum_q: int, trim: float) -> AggregatorSpec:
    _check_token(kind, AGGREGATOR_KINDS, "defense")
    try:
        return AggregatorSpec(kind, trim_fraction=trim if kind == "trimmed_mean" else None,
                              byzantine_count=krum_q if kind == "krum" else None,
                              sigma_grid=tuple(grid), seed=cfg["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def check_output(path):
    if path is None:
        return
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if p.is_dir() or not parent.is_dir() or not os.access(parent, os.W_OK) or (p.exists() and not os.access(p, os.W_OK)):
        raise OutputError(f"cannot write output to {path}")


def _header(command: str, cfg: dict) -> str:
    return HEADER_PREFIX + json.dumps({"command": command, **cfg}, sort_keys=True)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def run_btr(cfg: dict) -> dict:
    grid = parse_sigma_grid(cfg["sigma_grid"])
    scenarios = [s.strip() for s in cfg["scenarios"].split(",") if s.strip()]
    for s in scenarios:
        _check_token(s, TOY_SCENARIOS, "scenario")
    krum_q = TOY_KRUM_Q if cfg["krum_q"] is None else cfg["krum_q"]
    trim = TOY_TRIM if cfg["trim"] is None else cfg["trim"]
    specs = [(d.strip(), defense_spec(d.strip(), cfg, grid, krum_q, trim))
             for d in cfg["defense"].split(",") if d.strip()]
    rows = [(s, name, cfg["trials"], btr_trials(s, spec, cfg["trials"], cfg["seed"]))
            for s in scenarios for name, spec in specs]
    return {"columns": ["scenario", "defense", "trials", "btr"], "rows": rows}


def _training_config(cfg: dict) -> TrainingConfig:
    _check_token(cfg["attack"], ATTACK_KINDS, "attack")
    grid = parse_sigma_grid(cfg["sigma_grid"])
    q = cfg["attackers"]
    krum_q = q if cfg["krum_q"] is None else cfg["krum_q"]
    trim = (q / cfg["clients"] if cfg["trim"] is None else cfg["trim"])
    defense = defense_spec(cfg["defense"], cfg, grid, krum_q, trim)
    return TrainingConfig(num_clients=cfg["clients"], num_byzantine=q, lr=cfg["lr"], batch_size=cfg["batch_size"],
                          rounds=cfg["rounds"], dirichlet_beta=cfg["beta"], attack=AttackSpec(cfg["attack"]),
                          defense=defense, seed=cfg["seed"], optimizer=cfg["optimizer"],
                          samples_per_client=cfg["samples_per_client"], dim=cfg["dim"],
                          num_classes=cfg["classes"], class_separation=cfg["separation"],
                          feature_offset=cfg["offset"])


def run_train(cfg: dict) -> dict:
    config = _training_config(cfg)
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    train = test = None
    if cfg["mnist_dir"]:
        paths = [Path(cfg["mnist_dir"]) / name for name in MNIST_FILES]
        train, test = load_mnist(paths[0], paths[1]), load_mnist(paths[2], paths[3])
    try:
        make_aggregator(config.defense, config.num_clients)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    logs = run_federated(config, train, test)
    rows = [(log.round, log.loss, log.accuracy, log.detection_accuracy, len(log.benign_set)) for log in logs]
    summary = {
        "final_accuracy": logs[-1].accuracy,
        "final_loss": logs[-1].loss,
        "mean_detection_accuracy": float(np.mean([log.detection_accuracy for log in logs])),
        "rounds": len(logs),
    }
    return {"columns": ["round", "loss", "accuracy", "detection_accuracy", "benign_count"], "rows": rows,
            "summary": summary}


def run_spectrum(cfg: dict) -> dict:
    attack = cfg["attack"]
    _check_token(attack, tuple(dict.fromkeys(PLANTED_KINDS + ATTACK_KINDS)), "attack")
    k, q, dim = cfg["clients"], cfg["attackers"], cfg["dim"]
    if attack in PLANTED_KINDS:
        g, _ = planted_cohort(attack, k, q, dim=dim, rng_seed=cfg["seed"])
    else:
        benign = benign_cloud(k, dim, rng_seed=cfg["seed"])
        g = craft_attack(AttackSpec(attack), benign, range(k - q, k), rng_seed=cfg["seed"])
    result = pdsh(g, parse_sigma_grid(cfg["sigma_grid"]), seed=cfg["seed"])
    l = normalize_adjacency(kernel_from_sq_dists(pairwise_sq_dists(g), result.global_sigma))
    summary = summarize_eigenvalues(sym_eigvals(l))
    gaps = list(summary.gaps) + [None]
    rows = [(i + 1, float(v), None if gp is None else float(gp)) for i, (v, gp) in enumerate(zip(summary.eigenvalues, gaps))]
    info = {
        "sigma_star": result.sigma_star,
        "cluster_count": result.cluster_count,
        "global_sigma": result.global_sigma,
        "global_cluster_count": result.global_cluster_count,
        "mimic_set": sorted(result.mimic_set),
        "fallback": result.fallback,
    }
    return {"columns": ["index", "eigenvalue", "gap"], "rows": rows, "pdsh": info,
            "probes": [{"sigma": p.sigma, "max_gap": p.max_gap, "cluster_count": p.cluster_count,
                        "degenerate": p.degenerate} for p in result.probes]}


def render(command: str, cfg: dict, result: dict) -> tuple:
    """Main output text plus optional summary text."""
    header = _header(command, cfg)
    if cfg["format"] == "json":
        body = {"config": {"command": command, **cfg}, "columns": result["columns"],
                "rows": [list(r) for r in result["rows"]]}
        for extra in ("summary", "pdsh", "probes"):
            if extra in result:
                body[extra] = result[extra]
        return json.dumps(body, indent=1) + "\n", None
    lines = [header]
    if "pdsh" in result:
        lines.append("# pdsh: " + json.dumps(result["pdsh"], sort_keys=True))
    text = "\n".join(lines) + "\n" + _csv_text(result["columns"], result["rows"])
    summary = None
    if "summary" in result:
        summary = json.dumps({"config": {"command": command, **cfg}, **result["summary"]}, indent=1,
                             sort_keys=True) + "\n"
    return text, summary


def run_command(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        if cfg["format"] not in ("csv", "json"):
            raise UsageError(f"unknown format {cfg['format']!r} (choose from csv, json)")
        check_output(args.output)
        runner = {"btr": run_btr, "train": run_train, "spectrum": run_spectrum}[args.command]
        text, summary = render(args.command, cfg, runner(cfg))
        if args.output is None:
            stdout.write(text)
            if summary is not None:
                stdout.write("# summary: " + json.dumps(json.loads(summary)) + "\n")
        else:
            try:
                Path(args.output).write_text(text)
                if summary is not None:
                    Path(str(args.output) + ".summary.json").write_text(summary)
            except OSError as exc:
                raise OutputError(f"cannot write output to {args.output}: {exc}") from exc
    except UsageError as exc:
        print(f"byzsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OutputError as exc:
        print(f"byzsim: error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    return 0


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
