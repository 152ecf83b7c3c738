"""Command-line runner: ``curiefield <experiment> [flags]`` and ``curiefield list``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .errors import CurieFieldError, DomainError, QuadratureError
from .experiments import REGISTRY, ExperimentConfig, list_experiments, run_experiment

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_UNKNOWN = 2
EXIT_INVALID = 3
EXIT_IO = 4
EXIT_NUMERIC = 5

LIST_KEYS = {"n": int, "beta": float, "gamma": float, "graph": str}
SCALAR_KEYS = {"replicas": int, "seed": int, "workers": int, "contour_c": float,
               "contour_T": float, "contour_h": float, "steps": int, "out_dir": str,
               "format": str}


def _split(text, cast):
    if isinstance(text, (list, tuple)):
        return [cast(x) for x in text]
    return [cast(x) for x in str(text).split(",") if x.strip()]


def _scalar(cast, text):
    if cast is int:
        value = float(text)
        if value != int(value):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(value)
    return cast(text)


def load_config_file(path):
    """Flat ``key = value`` file (``#`` comments) or a JSON object."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {line!r}")
            key, value = (x.strip() for x in line.split("=", 1))
            raw[key] = value
    out = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key == "contour_t":
            key = "contour_T"
        if key in LIST_KEYS:
            out[key] = _split(value, LIST_KEYS[key])
        elif key in SCALAR_KEYS:
            out[key] = _scalar(SCALAR_KEYS[key], value)
        else:
            raise ValueError(f"unknown config key {key!r}")
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="curiefield",
                                description="Curie-Weiss randomisation verification experiments")
    p.add_argument("experiment", help="experiment name, or 'list'")
    p.add_argument("--json", action="store_true", help="machine-readable output for 'list'")
    p.add_argument("--beta", help="inverse temperature(s), comma separated")
    p.add_argument("--gamma", help="critical-window parameter(s), comma separated")
    p.add_argument("--n", help="system size(s), comma separated")
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--contour-c", dest="contour_c", type=float)
    p.add_argument("--contour-T", dest="contour_T", type=float)
    p.add_argument("--contour-h", dest="contour_h", type=float)
    p.add_argument("--graph", help="graph name(s), e.g. cycle4,torus3x3")
    p.add_argument("--steps", type=int, help="MCMC sweeps after burn-in")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--format", choices=("json", "csv", "both"))
    p.add_argument("--config", help="key=value or JSON config file; flags override it")
    return p


def make_config(args):
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for key, cast in LIST_KEYS.items():
        raw = getattr(args, key)
        if raw is not None:
            values[key] = _split(raw, cast)
    for key in SCALAR_KEYS:
        raw = getattr(args, key, None)
        if raw is not None:
            values[key] = raw
    values.setdefault("workers", 1)
    values.setdefault("format", "both")
    if values["format"] not in ("json", "csv", "both"):
        raise ValueError("format must be json, csv or both")
    if values["workers"] < 1:
        raise ValueError("workers must be at least 1")
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(experiment=args.experiment, **{k: v for k, v in values.items() if k in known})


def write_outputs(report, tables, config):
    root = Path(config.out_dir or os.environ.get("CURIEFIELD_OUT_DIR") or "curiefield-out")
    folder = root / config.experiment
    folder.mkdir(parents=True, exist_ok=True)
    written = {}
    if config.format in ("csv", "both"):
        for stem, (header, rows) in tables.items():
            path = folder / f"{stem}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(rows)
            written[stem] = str(path)
    report.artifacts = written
    if config.format in ("json", "both"):
        data = report.to_dict()
        data["version"] = __version__
        path = folder / "report.json"
        path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
        written["report"] = str(path)
    return written


def print_list(as_json, out=None):
    out = out or sys.stdout
    rows = [{"name": e.name, "description": e.description, "anchor": e.anchor}
            for e in list_experiments()]
    if as_json:
        out.write(json.dumps(rows, indent=2) + "\n")
        return
    width = max(len(r["name"]) for r in rows)
    for r in rows:
        out.write(f"{r['name']:<{width}}  {r['description']}\n{'':<{width}}  [{r['anchor']}]\n")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.experiment == "list":
        print_list(args.json)
        return EXIT_OK
    if args.experiment not in REGISTRY:
        sys.stderr.write(f"unknown experiment {args.experiment!r}; try 'curiefield list'\n")
        return EXIT_UNKNOWN
    try:
        config = make_config(args)
    except OSError as exc:
        sys.stderr.write(f"cannot read config: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        sys.stderr.write(f"invalid parameters: {exc}\n")
        return EXIT_INVALID
    try:
        report, tables = run_experiment(config)
    except (DomainError, ValueError) as exc:
        sys.stderr.write(f"invalid parameters: {exc}\n")
        return EXIT_INVALID
    except (QuadratureError, ArithmeticError, CurieFieldError, RuntimeError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    try:
        write_outputs(report, tables, config)
    except OSError as exc:
        sys.stderr.write(f"cannot write outputs: {exc}\n")
        return EXIT_IO
    for key, verdict in report.verdicts.items():
        status = "PASS" if verdict["passed"] else "FAIL"
        sys.stdout.write(f"{status}  {key} = {report.statistics[key]!r} "
                         f"({verdict['op']} {report.thresholds[verdict['threshold']]!r})\n")
    sys.stdout.write(f"{config.experiment}: {'PASS' if report.passed else 'FAIL'}\n")
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
