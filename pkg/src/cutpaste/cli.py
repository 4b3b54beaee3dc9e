"""Command-line entry point binding configuration to runs and reports.

Subcommands: simulate-discrete, simulate-continuous, simulate-partition,
exact, verify, mixing. Configuration lives in a TOML file; --seed,
--replicas, --out-dir, --format and --workers override it. Exit codes:
0 success/all-pass, 1 usage error, 2 verification failure, 3 inadmissible
measure. With a fixed config and seed, CSV bodies are byte-identical
(timestamps appear only under --timestamps).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import discrete, oracle, partitions
from .coloring import Coloring, Partition
from .continuous import simulate
from .kernels import BACKEND
from .measures import (
    CharacteristicPair,
    InadmissibleMeasureError,
    flips_from_config,
    measure_from_config,
)
from .partitions import HomogeneityError, HomogeneousPair
from .util import RNG_NAME, config_digest

MODES = (
    "simulate-discrete",
    "simulate-continuous",
    "simulate-partition",
    "exact",
    "verify",
    "mixing",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cutpaste", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--replicas", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--timestamps", action="store_true")
    return parser


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise UsageError(f"missing field {key!r} in {where}")
    return cfg[key]


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file {path} does not exist")
    try:
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config file {path} is not valid TOML: {exc}") from None


def resolve_config(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.replicas is not None:
        cfg["replicas"] = args.replicas
    if args.format is not None:
        cfg["format"] = args.format
    cfg.setdefault("replicas", 1)
    cfg.setdefault("format", "csv")
    _require(cfg, "seed")
    _require(cfg, "k")
    return cfg


def _replica_rng(seed: int, replicas: int, rep: int) -> np.random.Generator:
    streams = np.random.SeedSequence(seed).spawn(replicas)
    return np.random.Generator(np.random.PCG64(streams[rep]))


def _initial_coloring(cfg: dict, rng: np.random.Generator) -> Coloring:
    init = _require(cfg, "initial")
    kind = _require(init, "kind", "initial")
    k = cfg["k"]
    if kind == "word":
        return Coloring.from_string(str(_require(init, "word", "initial")), k=k)
    n = int(_require(init, "n", "initial"))
    if kind == "uniform":
        return discrete.initial_uniform(n, k, rng)
    if kind == "paintbox":
        return discrete.initial_paintbox(n, _require(init, "freqs", "initial"), rng)
    raise UsageError(f"unknown initial.kind {kind!r}")


def _artifact_header(cfg: dict, extra: str = "") -> str:
    line = f"# config={config_digest(cfg)} seed={cfg['seed']} rng={RNG_NAME} backend={BACKEND}"
    if extra:
        line += f" {extra}"
    return line + "\n"


def _json_meta(cfg: dict, rep: int) -> dict:
    return {
        "config_digest": config_digest(cfg),
        "seed": cfg["seed"],
        "replica": rep,
        "rng": RNG_NAME,
        "backend": BACKEND,
    }


def _base_summary(cfg: dict, mode: str, timestamps: bool) -> dict:
    summary = {
        "mode": mode,
        "seed": cfg["seed"],
        "config_digest": config_digest(cfg),
        "rng": RNG_NAME,
        "backend": BACKEND,
        "replicas": cfg["replicas"],
    }
    if timestamps:
        summary["generated"] = datetime.now(timezone.utc).isoformat()
    return summary


def _replica_discrete(cfg: dict, rep: int) -> tuple[int, dict, dict[str, str]]:
    rng = _replica_rng(cfg["seed"], cfg["replicas"], rep)
    sigma = measure_from_config(_require(cfg, "measure"), cfg["k"])
    x0 = _initial_coloring(cfg, rng)
    steps = int(_require(_require(cfg, "discrete"), "steps", "discrete"))
    trace = discrete.run_chain(x0, sigma, steps, rng)
    if cfg["format"] == "csv":
        body = io.StringIO()
        body.write(_artifact_header(cfg, f"replica={rep}"))
        trace.write_csv(body)
        files = {f"discrete_trace_r{rep}.csv": body.getvalue()}
    else:
        payload = _json_meta(cfg, rep) | {
            "states": [trace.state_label(m) for m in range(trace.steps + 1)],
            "exact_freqs": trace.exact_freqs.tolist(),
            "empirical_freqs": trace.empirical_freqs.tolist(),
        }
        files = {f"discrete_trace_r{rep}.json": json.dumps(payload, sort_keys=True)}
    return rep, trace.summary(), files


def _replica_continuous(cfg: dict, rep: int) -> tuple[int, dict, dict[str, str]]:
    rng = _replica_rng(cfg["seed"], cfg["replicas"], rep)
    k = cfg["k"]
    sigma = None
    if "measure" in cfg:
        sigma = measure_from_config(cfg["measure"], k)
    pair = CharacteristicPair(sigma, flips_from_config(cfg.get("flips"), k))
    ccfg = _require(cfg, "continuous")
    horizon = float(_require(ccfg, "horizon", "continuous"))
    grid = ccfg.get("grid")
    record = bool(ccfg.get("record_events", True))
    x0 = _initial_coloring(cfg, rng)
    trace = simulate(pair, x0, horizon, rng, grid=grid, record_events=record)
    files: dict[str, str] = {}
    if cfg["format"] == "json":
        payload = _json_meta(cfg, rep) | trace.summary()
        payload["grid"] = [
            {"time": s.time, "frequency": s.frequency.tolist()} for s in trace.samples
        ]
        payload["matrix_event_times"] = [t for t, _ in trace.matrix_events]
        files[f"continuous_trace_r{rep}.json"] = json.dumps(payload, sort_keys=True)
        return rep, trace.summary(), files
    ev = io.StringIO()
    ev.write(_artifact_header(cfg, f"replica={rep}"))
    trace.write_event_csv(ev)
    files[f"events_r{rep}.csv"] = ev.getvalue()
    if grid:
        gr = io.StringIO()
        gr.write(_artifact_header(cfg, f"replica={rep}"))
        trace.write_grid_csv(gr)
        files[f"grid_r{rep}.csv"] = gr.getvalue()
    return rep, trace.summary(), files


def _replica_partition(cfg: dict, rep: int) -> tuple[int, dict, dict[str, str]]:
    rng = _replica_rng(cfg["seed"], cfg["replicas"], rep)
    k = cfg["k"]
    pcfg = _require(cfg, "partition")
    pi0 = Partition.from_string(str(_require(pcfg, "initial", "partition")), k=k)
    sigma = measure_from_config(cfg["measure"], k) if "measure" in cfg else None
    time_kind = pcfg.get("time", "continuous")
    body = io.StringIO()
    body.write(_artifact_header(cfg, f"replica={rep}"))
    if time_kind == "continuous":
        hp = HomogeneousPair(sigma, c=float(pcfg.get("c", 0.0)), k=k)
        horizon = float(_require(pcfg, "horizon", "partition"))
        trace = partitions.simulate_partition(hp, pi0, horizon, rng,
                                              grid=pcfg.get("grid"))
        rows = [(0.0, pi0)] + trace.jumps
        trace.write_csv(body)
        summary = {"jumps": len(trace.jumps),
                   "final": trace.state_at_end().to_string()}
    elif time_kind == "discrete":
        if sigma is None:
            raise UsageError("partition.time='discrete' needs a [measure] table")
        steps = int(_require(pcfg, "steps", "partition"))
        states, _ = partitions.run_partition_chain(sigma, pi0, steps, rng)
        rows = list(enumerate(states))
        body.write("step,partition\n")
        for m, pi in rows:
            body.write(f"{m},{pi.to_string()}\n")
        summary = {"steps": steps, "final": states[-1].to_string()}
    else:
        raise UsageError(f"unknown partition.time {time_kind!r}")
    if cfg["format"] == "json":
        payload = _json_meta(cfg, rep) | summary
        payload["trace"] = [{"at": t, "partition": pi.to_string()} for t, pi in rows]
        return rep, summary, {f"partition_trace_r{rep}.json": json.dumps(payload, sort_keys=True)}
    return rep, summary, {f"partition_trace_r{rep}.csv": body.getvalue()}


_REPLICA_RUNNERS = {
    "simulate-discrete": _replica_discrete,
    "simulate-continuous": _replica_continuous,
    "simulate-partition": _replica_partition,
}


def _replica_job(payload):
    mode, cfg, rep = payload
    return _REPLICA_RUNNERS[mode](cfg, rep)


def _run_replicated(mode: str, cfg: dict, out_dir: Path, workers: int,
                    timestamps: bool) -> int:
    replicas = int(cfg["replicas"])
    payloads = [(mode, cfg, rep) for rep in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replica_job, payloads))
    else:
        results = [_replica_job(p) for p in payloads]
    results.sort(key=lambda r: r[0])
    summary = _base_summary(cfg, mode, timestamps)
    if "measure" in cfg:
        summary["measure"] = cfg["measure"]
    summary["replica_summaries"] = [s for _, s, _ in results]
    for _, _, files in results:
        for name, content in files.items():
            (out_dir / name).write_text(content)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _kernel_from_config(cfg: dict) -> tuple[oracle.ExactKernel, dict]:
    ecfg = _require(cfg, "exact")
    family = _require(ecfg, "family", "exact")
    k = cfg["k"]
    n = int(_require(cfg, "n"))
    if family == "dirichlet":
        alpha = float(_require(ecfg, "alpha", "exact"))
        return oracle.dirichlet_kernel(n, k, alpha), {"family": family, "alpha": alpha}
    if family == "measure":
        sigma = measure_from_config(_require(cfg, "measure"), k)
        return oracle.discrete_kernel(n, sigma), {"family": family}
    if family == "generator":
        sigma = measure_from_config(cfg["measure"], k) if "measure" in cfg else None
        pair = CharacteristicPair(sigma, flips_from_config(cfg.get("flips"), k))
        return oracle.generator_kernel(n, pair), {"family": family}
    raise UsageError(f"unknown exact.family {family!r}")


def _run_exact(cfg: dict, out_dir: Path, timestamps: bool) -> int:
    kernel, meta = _kernel_from_config(cfg)
    labels = [kernel.label(i) for i in range(kernel.size)]
    body = io.StringIO()
    body.write(_artifact_header(cfg))
    body.write("state," + ",".join(labels) + "\n")
    for i in range(kernel.size):
        row = ",".join(format(v, ".17g") for v in kernel.matrix[i])
        body.write(f"{labels[i]},{row}\n")
    (out_dir / "exact_kernel.csv").write_text(body.getvalue())
    summary = _base_summary(cfg, "exact", timestamps) | meta | {
        "kind": kernel.kind, "states": kernel.size,
    }
    if meta.get("family") == "dirichlet":
        lam = discrete.dirichlet_stationary_colorings(cfg["n"], cfg["k"], meta["alpha"])
        rho = discrete.dirichlet_stationary_partitions(cfg["n"], cfg["k"], meta["alpha"])
        stat = io.StringIO()
        stat.write(_artifact_header(cfg))
        stat.write("state,probability\n")
        for lab, v in zip(labels, lam):
            stat.write(f"{lab},{format(v, '.17g')}\n")
        for pi, v in rho.items():
            stat.write(f"{pi.to_string()},{format(v, '.17g')}\n")
        (out_dir / "stationary.csv").write_text(stat.getvalue())
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _verify_checks(cfg: dict) -> list[oracle.CheckReport]:
    vcfg = _require(cfg, "verify")
    suite = _require(vcfg, "suite", "verify")
    k = cfg["k"]
    checks: list[oracle.CheckReport] = []
    if suite == "dirichlet":
        n_max = int(vcfg.get("n_max", 3))
        alphas = vcfg.get("alphas", [1.0])
        for alpha in alphas:
            kernels = {n: oracle.dirichlet_kernel(n, k, float(alpha))
                       for n in range(1, n_max + 1)}
            for n in range(1, n_max + 1):
                lam = discrete.dirichlet_stationary_colorings(n, k, float(alpha))
                rep = oracle.check_detailed_balance(kernels[n], lam)
                rep.info.update({"alpha": alpha, "n": n})
                checks.append(rep)
                rep = oracle.check_stationary(kernels[n], lam)
                rep.info.update({"alpha": alpha, "n": n})
                checks.append(rep)
                if n >= 2:
                    checks.append(oracle.check_exchangeable(kernels[n]))
                    checks.append(oracle.check_consistent(kernels[n], kernels[n - 1]))
    elif suite == "ehrenfest":
        n = int(vcfg.get("n", 2))
        fine, coarse = oracle.ehrenfest_kernel(n + 1), oracle.ehrenfest_kernel(n)
        checks.append(oracle.check_exchangeable(coarse))
        checks.append(oracle.check_exchangeable(fine))
        checks.append(oracle.check_consistent(fine, coarse))
    elif suite == "pair":
        n_max = int(vcfg.get("n_max", 2))
        sigma = measure_from_config(cfg["measure"], k) if "measure" in cfg else None
        pair = CharacteristicPair(sigma, flips_from_config(cfg.get("flips"), k))
        kernels = {n: oracle.generator_kernel(n, pair) for n in range(1, n_max + 1)}
        for n in range(2, n_max + 1):
            checks.append(oracle.check_exchangeable(kernels[n]))
            checks.append(oracle.check_consistent(kernels[n], kernels[n - 1]))
    else:
        raise UsageError(f"unknown verify.suite {suite!r}")
    return checks


def _run_verify(cfg: dict, out_dir: Path, timestamps: bool) -> int:
    checks = _verify_checks(cfg)
    all_passed = all(c.passed for c in checks)
    report = _base_summary(cfg, "verify", timestamps) | {
        "all_passed": all_passed,
        "checks": [c.to_dict() for c in checks],
    }
    (out_dir / "verify_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name} max_deviation={c.max_deviation:.3e}")
        if not c.passed and c.witness:
            print(f"     witness: {json.dumps(c.witness, sort_keys=True)}")
    return 0 if all_passed else 2


def _run_mixing(cfg: dict, out_dir: Path, timestamps: bool) -> int:
    mcfg = _require(cfg, "mixing")
    k = cfg["k"]
    n = int(_require(cfg, "n"))
    alpha = float(_require(mcfg, "alpha", "mixing"))
    kernel = oracle.dirichlet_kernel(n, k, alpha)
    lam = discrete.dirichlet_stationary_colorings(n, k, alpha)
    start = Coloring.from_string(str(_require(mcfg, "start", "mixing")), k=k)
    profile = oracle.mixing_profile(
        kernel, start, lam,
        max_steps=int(mcfg.get("max_steps", 200)),
        threshold=mcfg.get("threshold"),
    )
    body = io.StringIO()
    body.write(_artifact_header(cfg))
    body.write("step,tv_distance\n")
    for m, d in enumerate(profile):
        body.write(f"{m},{format(d, '.17g')}\n")
    (out_dir / "mixing.csv").write_text(body.getvalue())
    summary = _base_summary(cfg, "mixing", timestamps) | {
        "alpha": alpha, "steps": len(profile) - 1, "final_tv": float(profile[-1]),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def run(args) -> int:
    cfg = resolve_config(args)
    out_dir = Path(args.out_dir or cfg.get("out_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.mode in _REPLICA_RUNNERS:
        return _run_replicated(args.mode, cfg, out_dir, args.workers, args.timestamps)
    if args.mode == "exact":
        return _run_exact(cfg, out_dir, args.timestamps)
    if args.mode == "verify":
        return _run_verify(cfg, out_dir, args.timestamps)
    if args.mode == "mixing":
        return _run_mixing(cfg, out_dir, args.timestamps)
    raise UsageError(f"unknown mode {args.mode!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return run(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (InadmissibleMeasureError, HomogeneityError) as exc:
        print(f"inadmissible measure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
