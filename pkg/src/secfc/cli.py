"""Command-line driver: ``secfc generate | run | bench``.

Every option may also come from an INI file given with ``--config``; keys
live in a section named after the subcommand and use the long option name
with dashes or underscores (``k-prime`` or ``k_prime``).  Command-line
flags win over the file.

Failures print ``error[<category>]: <message>`` on stderr and exit with a
category-specific status (see ``EXIT_CODES``).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

from .bench import BenchSpec, run_bench
from .datagen import MixtureConfig, generate_mixture, load_csv, write_csv
from .errors import ConfigError, SecFCError
from .evaluation import aggregate_runs
from .experiment import ALGORITHMS, ExperimentSpec, run_experiment

EXIT_CODES = {
    "config": 2,
    "headroom": 2,
    "data": 3,
    "io": 4,
    "quantization": 5,
    "decode": 5,
    "protocol": 5,
    "transcript": 5,
    "error": 1,
}

# option name -> (type, default); None defaults fall through to ExperimentSpec and BenchSpec
GENERATE_OPTS = {
    "k": (int, 4), "m": (int, 1000), "d": (int, 100), "sigma": (float, 1.0),
    "center-box": (float, 10.0), "seed": (int, 0), "out": (str, None),
}
RUN_OPTS = {
    "algorithm": (str, "secfc"), "data": (str, None), "k": (int, 4), "m": (int, 1000), "d": (int, 100),
    "sigma": (float, 1.0), "center-box": (float, 10.0), "n": (int, 10), "k-prime": (int, None),
    "t": (int, 3), "ell": (int, 2), "lam": (str, "auto"), "q": (int, None),
    "decode-clients": (int, None), "workers": (int, 1), "max-iters": (int, 100), "runs": (int, 1),
    "seed": (int, 0), "out-dir": (str, None),
}
BENCH_OPTS = {
    "n": (int, 10), "d": (int, 100), "m": (int, 1000), "k": (int, 4), "sigma": (float, 1.0),
    "repeats": (int, 3), "seed": (int, 0), "out": (str, "bench.csv"),
}


def _add_opts(p: argparse.ArgumentParser, opts: dict) -> None:
    for name, (typ, _default) in opts.items():
        kw = {"type": typ, "default": None}
        if name == "algorithm":
            kw["choices"] = ALGORITHMS
        p.add_argument(f"--{name}", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="secfc", description="Secure federated k-means experiments.")
    parser.add_argument("--config", help="INI file with [generate], [run] or [bench] sections")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic Gaussian mixture as CSV")
    _add_opts(g, GENERATE_OPTS)

    r = sub.add_parser("run", help="run an algorithm and report accuracy and timings")
    _add_opts(r, RUN_OPTS)

    b = sub.add_parser("bench", help="time SecFC and k-FED across a sweep of n, d or m")
    _add_opts(b, BENCH_OPTS)
    b.add_argument("--sweep", action="append", default=None, metavar="PARAM=V1,V2,...",
                   help="the parameter to sweep; give exactly one")
    return parser


def _config_section(path, section: str) -> dict:
    if path is None:
        return {}
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"bad config file: {exc}") from None
    if not cp.has_section(section):
        return {}
    return {key.replace("_", "-"): val for key, val in cp.items(section)}


def resolve(args, opts: dict, section: str) -> dict:
    """Flag > config file > default, converted with each option's type."""
    conf = _config_section(args.config, section)
    unknown = set(conf) - set(opts) - {"sweep"}
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    out = {}
    for name, (typ, default) in opts.items():
        val = getattr(args, name.replace("-", "_"))
        if val is None and name in conf:
            try:
                val = typ(conf[name])
            except ValueError:
                raise ConfigError(f"[{section}] {name} = {conf[name]!r} is not a valid {typ.__name__}") from None
        out[name.replace("-", "_")] = default if val is None else val
    if section == "bench":
        out["sweep"] = args.sweep if args.sweep is not None else ([conf["sweep"]] if "sweep" in conf else [])
    return out


class _IOFailure(SecFCError):
    category = "io"


def cmd_generate(o: dict) -> int:
    if o["out"] is None:
        raise ConfigError("--out is required")
    data = generate_mixture(MixtureConfig(o["k"], o["m"], o["d"], o["sigma"], o["center_box"], o["seed"]))
    path = write_csv(data, o["out"])
    print(f"wrote {data.m} points (k={o['k']}, d={o['d']}) to {path}")
    return 0


def run_spec(o: dict) -> ExperimentSpec:
    kw = dict(
        algorithm=o["algorithm"], k=o["k"], m=o["m"], d=o["d"], sigma=o["sigma"], center_box=o["center_box"],
        csv=o["data"], n=o["n"], k_prime=o["k_prime"], t=o["t"], ell=o["ell"], lam=o["lam"],
        decode_client_count=o["decode_clients"], workers=o["workers"], max_iters=o["max_iters"],
        runs=o["runs"], seed=o["seed"],
    )
    if o["q"] is not None:
        kw["q"] = o["q"]
    return ExperimentSpec(**kw)


def cmd_run(o: dict) -> int:
    spec = run_spec(o)
    if spec.csv is not None:
        load_csv(spec.csv)  # surface data errors before any work starts
    out_dir = Path(o["out_dir"]) if o["out_dir"] else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    def save(i, rep):
        if out_dir is not None:
            (out_dir / f"{spec.algorithm}_run{i:03d}.json").write_text(rep.to_json(indent=2) + "\n")

    reports = run_experiment(spec, on_report=save)
    summary = aggregate_runs(reports)
    print(format_summary(summary))
    if out_dir is not None:
        (out_dir / f"{spec.algorithm}_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def format_summary(summary: dict) -> str:
    lines = [f"{'algorithm':<10} {'runs':>4} {'accuracy (%)':>16} {'iters':>6}"]
    acc = "n/a"
    if summary["accuracy_mean"] is not None:
        acc = f"{100 * summary['accuracy_mean']:.1f}±{100 * summary['accuracy_std']:.1f}"
    lines.append(f"{summary['algorithm']:<10} {summary['runs']:>4} {acc:>16} {summary['iterations_mean']:>6.1f}")
    for key, val in sorted(summary["timings"].items()):
        lines.append(f"  {key:<24} {val:.4g} s")
    return "\n".join(lines)


def parse_sweep(items) -> dict:
    sweeps = {}
    for item in items:
        name, sep, vals = item.partition("=")
        if not sep:
            raise ConfigError(f"sweep must look like PARAM=V1,V2,..., got {item!r}")
        try:
            sweeps[name.strip()] = [int(v) for v in vals.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"sweep values must be integers: {item!r}") from None
    return sweeps


def cmd_bench(o: dict) -> int:
    spec = BenchSpec(parse_sweep(o["sweep"]), n=o["n"], d=o["d"], m=o["m"], k=o["k"], sigma=o["sigma"],
                     repeats=o["repeats"], seed=o["seed"])
    rows = run_bench(spec, out=o["out"])
    print(f"{spec.param:>6} {'client/iter':>12} {'server/iter':>12} {'k-FED':>10}")
    for row in rows:
        print(f"{row['value']:>6} {row['secfc_client_s']:>12.3e} {row['secfc_server_s']:>12.3e} {row['kfed_overall_s']:>10.3e}")
    print(f"wrote {o['out']}")
    return 0


COMMANDS = {
    "generate": (GENERATE_OPTS, cmd_generate),
    "run": (RUN_OPTS, cmd_run),
    "bench": (BENCH_OPTS, cmd_bench),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts, fn = COMMANDS[args.command]
    try:
        return fn(resolve(args, opts, args.command))
    except SecFCError as exc:
        return _fail(exc.category, str(exc))
    except OSError as exc:
        return _fail("io", f"{exc.strerror or exc}: {exc.filename}" if exc.filename else str(exc))


def _fail(category: str, message: str) -> int:
    print(f"error[{category}]: {message}", file=sys.stderr)
    return EXIT_CODES.get(category, 1)


if __name__ == "__main__":
    sys.exit(main())
