"""Command-line front end: run, sweep, report.

Experiments are described by a single JSON config file; the full resolved
configuration (defaults included) is snapshotted next to the outputs so
runs are auditable and repeatable. Exit codes: 0 success, 2 config error,
3 runtime failure, 4 partial sweep success.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import baseline_ga, bo_loop, objective
from .acquisition import AcquisitionSpec
from .errors import ConfigError, DseError
from .evaluators import (
    BENCHMARKS,
    ExternalEvaluator,
    ParseRule,
    PpaSurfaceEvaluator,
    ScriptTemplate,
    SyntheticEvaluator,
)
from .experiment_log import ExperimentLog
from .param_space import space_from_config, space_to_config, default_cad_space

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_PARTIAL = 4


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config ({exc})") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(str(path), "top-level config must be an object")
    return cfg


def _field(cfg: dict, key: str, kinds, path: str, default="__required__"):
    if key not in cfg:
        if default == "__required__":
            raise ConfigError(f"{path}{key}", "missing required key")
        return default
    value = cfg[key]
    if kinds is not None and not isinstance(value, kinds):
        raise ConfigError(f"{path}{key}", f"expected {kinds}, got {type(value).__name__}")
    return value


def _build_evaluator(cfg: dict, config_dir: Path, seed: int):
    ev = _field(cfg, "evaluator", dict, "")
    etype = _field(ev, "type", str, "evaluator.")
    if etype == "synthetic":
        name = _field(ev, "name", str, "evaluator.")
        if name not in BENCHMARKS:
            raise ConfigError("evaluator.name", f"unknown benchmark {name!r}")
        return SyntheticEvaluator(name)
    if etype == "ppa-surface":
        noise = _field(ev, "noise", bool, "evaluator.", default=True)
        return PpaSurfaceEvaluator(seed=bo_loop.derive_seed(seed, 31), noise=noise)
    if etype == "external":
        template_path = config_dir / _field(ev, "template", str, "evaluator.")
        try:
            template_text = template_path.read_text()
        except OSError as exc:
            raise ConfigError("evaluator.template", f"cannot read ({exc})") from None
        rules_cfg = _field(ev, "parse_rules", list, "evaluator.")
        rules = []
        for i, r in enumerate(rules_cfg):
            if not isinstance(r, dict) or "metric" not in r or "prefix" not in r:
                raise ConfigError(
                    f"evaluator.parse_rules[{i}]", "needs 'metric' and 'prefix'"
                )
            rules.append(ParseRule(str(r["metric"]), str(r["prefix"])))
        if not rules:
            raise ConfigError("evaluator.parse_rules", "needs at least one rule")
        command = _field(ev, "command", list, "evaluator.")
        if not command or not all(isinstance(c, str) for c in command):
            raise ConfigError("evaluator.command", "must be a nonempty argv list of strings")
        timeout = _field(ev, "timeout", (int, float), "evaluator.", default=3600.0)
        space_cfg = _field(cfg, "space", (list, str), "", default=None)
        if space_cfg is None:
            raise ConfigError("space", "required for the external evaluator")
        try:
            space = (
                default_cad_space() if space_cfg == "default" else space_from_config(space_cfg)
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("space", str(exc)) from None
        template = ScriptTemplate(template_text, tuple(rules))
        # workdir is attached later, once the output directory is known
        return ExternalEvaluator(space, template, command, workdir=".", timeout=timeout)
    raise ConfigError("evaluator.type", f"unknown evaluator type {etype!r}")


def _build_objective(cfg: dict) -> objective.ObjectiveSpec:
    o = _field(cfg, "objective", dict, "", default={"mode": "single", "metric": "value"})
    refs = _field(o, "references", dict, "objective.", default=None)
    metrics = _field(o, "metrics", list, "objective.", default=list(objective.DEFAULT_METRICS))
    if len(metrics) != 3 or not all(isinstance(m, str) for m in metrics):
        raise ConfigError("objective.metrics", "must be three metric names")
    try:
        return objective.ObjectiveSpec(
            mode=_field(o, "mode", str, "objective."),
            metric=_field(o, "metric", str, "objective.", default=None),
            alpha1=float(_field(o, "alpha1", (int, float), "objective.", default=1.0)),
            alpha2=float(_field(o, "alpha2", (int, float), "objective.", default=1.0)),
            scaling=_field(o, "scaling", str, "objective.", default="none"),
            references=refs,
            metrics=tuple(metrics),
        )
    except ValueError as exc:
        raise ConfigError("objective", str(exc)) from None


def _build_acquisition(cfg: dict) -> AcquisitionSpec:
    a = _field(cfg, "acquisition", dict, "", default={"kind": "lcb"})
    zeta = _field(a, "zeta", (int, float), "acquisition.", default=None)
    try:
        return AcquisitionSpec(
            kind=_field(a, "kind", str, "acquisition."),
            kappa=float(_field(a, "kappa", (int, float), "acquisition.", default=2.0)),
            zeta=None if zeta is None else float(zeta),
        )
    except ValueError as exc:
        raise ConfigError("acquisition", str(exc)) from None


def _build_bo_config(cfg: dict, seed: int) -> bo_loop.BoConfig:
    b = _field(cfg, "bo", dict, "", default={})
    try:
        return bo_loop.BoConfig(
            init_samples=int(_field(b, "init_samples", int, "bo.", default=5)),
            max_iterations=int(_field(b, "max_iterations", int, "bo.", default=30)),
            acquisition=_build_acquisition(cfg),
            objective=_build_objective(cfg),
            seed=seed,
            refit_restarts=int(_field(b, "refit_restarts", int, "bo.", default=5)),
        )
    except ValueError as exc:
        raise ConfigError("bo", str(exc)) from None


def _build_ga_config(cfg: dict, bo_config: bo_loop.BoConfig, seed: int) -> baseline_ga.GaConfig:
    g = _field(cfg, "ga", (dict, str), "", default="budget-match")
    if g == "budget-match":
        return baseline_ga.budget_match(bo_config)
    if isinstance(g, str):
        raise ConfigError("ga", f"expected an object or 'budget-match', got {g!r}")
    try:
        return baseline_ga.GaConfig(
            population=int(_field(g, "population", int, "ga.")),
            generations=int(_field(g, "generations", int, "ga.")),
            tournament_k=int(_field(g, "tournament_k", int, "ga.", default=2)),
            crossover_rate=float(_field(g, "crossover_rate", (int, float), "ga.", default=0.9)),
            mutation_stddev=float(_field(g, "mutation_stddev", (int, float), "ga.", default=0.1)),
            elitism=int(_field(g, "elitism", int, "ga.", default=1)),
            seed=seed,
            max_evaluations=_field(g, "max_evaluations", int, "ga.", default=None),
        )
    except ValueError as exc:
        raise ConfigError("ga", str(exc)) from None


class Experiment:
    """Fully validated, ready-to-run experiment built from one config."""

    def __init__(self, cfg: dict, config_dir: Path, seed_override: int | None):
        self.seed = int(_field(cfg, "seed", int, "", default=0))
        if seed_override is not None:
            self.seed = seed_override
        self.engine = _field(cfg, "engine", str, "", default="bo")
        if self.engine not in ("bo", "ga"):
            raise ConfigError("engine", f"must be 'bo' or 'ga', got {self.engine!r}")
        self.evaluator = _build_evaluator(cfg, config_dir, self.seed)
        self.space = self.evaluator.space
        self.bo_config = _build_bo_config(cfg, self.seed)
        self.ga_config = _build_ga_config(cfg, self.bo_config, self.seed)
        sweep = _field(cfg, "sweep", list, "", default=None)
        self.sweep_weights = None
        if sweep is not None:
            weights = []
            for i, pair in enumerate(sweep):
                if (
                    not isinstance(pair, (list, tuple))
                    or len(pair) != 2
                    or not all(isinstance(v, (int, float)) for v in pair)
                ):
                    raise ConfigError(f"sweep[{i}]", "must be an [alpha1, alpha2] pair")
                weights.append((float(pair[0]), float(pair[1])))
            self.sweep_weights = weights
        self.output = _field(cfg, "output", str, "", default=None)

    def resolved(self) -> dict:
        return {
            "engine": self.engine,
            "seed": self.seed,
            "space": space_to_config(self.space),
            "evaluator": self.evaluator.describe(),
            "objective": self.bo_config.objective.to_dict(),
            "acquisition": self.bo_config.acquisition.to_dict(),
            "bo": {
                "init_samples": self.bo_config.init_samples,
                "max_iterations": self.bo_config.max_iterations,
                "refit_restarts": self.bo_config.refit_restarts,
            },
            "ga": self.ga_config.to_dict(),
            "sweep": self.sweep_weights,
        }


def _resolve_outdir(exp: Experiment, out_flag: str | None) -> Path:
    if out_flag:
        return Path(out_flag)
    base = Path(exp.output) if exp.output else Path("runs")
    return base / time.strftime("%Y%m%d-%H%M%S")


def _attach_workdir(exp: Experiment, outdir: Path) -> None:
    if isinstance(exp.evaluator, ExternalEvaluator):
        exp.evaluator.workdir = outdir


def _write_artifacts(outdir: Path, exp: Experiment, log) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    log.save(outdir / "log.jsonl")
    curve = bo_loop.incumbent_curve(log)
    bo_loop.write_incumbent_csv(curve, outdir / "incumbent.csv")
    resolved = exp.resolved()
    resolved["objective"] = log.header.get("objective", resolved["objective"])
    (outdir / "config.resolved.json").write_text(json.dumps(resolved, indent=2) + "\n")


def cmd_run(config_path, out=None, seed=None, dry_run=False) -> int:
    """Validate, run the configured engine, write log/curve/config artifacts."""
    try:
        cfg = load_config(config_path)
        exp = Experiment(cfg, Path(config_path).parent, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if dry_run:
        print(json.dumps(exp.resolved(), indent=2))
        return EXIT_OK
    outdir = _resolve_outdir(exp, out)
    _attach_workdir(exp, outdir)
    try:
        if exp.engine == "bo":
            log = bo_loop.run(exp.space, exp.evaluator, exp.bo_config)
        else:
            log = baseline_ga.ga_run(
                exp.space, exp.evaluator, exp.bo_config.objective, exp.ga_config
            )
        _write_artifacts(outdir, exp, log)
    except DseError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if log.header.get("interrupted"):
        print(f"interrupted; partial results in {outdir}", file=sys.stderr)
        return EXIT_RUNTIME
    best = log.best_record()
    print(f"run complete: {len(log.records)} evaluations, best {best.objective_value!r}")
    print(f"artifacts in {outdir}")
    return EXIT_OK


def cmd_sweep(config_path, out=None, seed=None) -> int:
    """Run one optimization per weight pair and merge the nondominated set."""
    try:
        cfg = load_config(config_path)
        exp = Experiment(cfg, Path(config_path).parent, seed)
        if not exp.sweep_weights:
            raise ConfigError("sweep", "missing or empty; sweep requires weight pairs")
        base_obj = exp.bo_config.objective
        specs = objective.weight_sweep(
            exp.sweep_weights,
            scaling=base_obj.scaling,
            references=base_obj.references,
            metrics=base_obj.metrics,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = _resolve_outdir(exp, out)
    _attach_workdir(exp, outdir)
    try:
        result = bo_loop.multi_run_pareto(exp.space, exp.evaluator, exp.bo_config, specs)
    except DseError as exc:
        print(f"sweep failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    outdir.mkdir(parents=True, exist_ok=True)
    for i, log in enumerate(result.logs):
        if log is None:
            continue
        rundir = outdir / f"run_{i:02d}"
        rundir.mkdir(parents=True, exist_ok=True)
        log.save(rundir / "log.jsonl")
        bo_loop.write_incumbent_csv(bo_loop.incumbent_curve(log), rundir / "incumbent.csv")
    objective.write_pareto_csv(result.front, outdir / "pareto.csv")
    resolved = exp.resolved()
    (outdir / "config.resolved.json").write_text(json.dumps(resolved, indent=2) + "\n")
    print(
        f"sweep complete: {len(result.front)} nondominated points "
        f"from {sum(log is not None for log in result.logs)}/{len(specs)} runs"
    )
    print(f"artifacts in {outdir}")
    for i, msg in result.errors:
        print(f"sweep entry {i} failed: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if result.errors else EXIT_OK


def cmd_report(log_path, compare=None) -> int:
    """Summarize a log; optionally emit a two-curve comparison CSV."""
    try:
        log = ExperimentLog.load(log_path)
        curve = bo_loop.incumbent_curve(log)
    except (OSError, ValueError, DseError) as exc:
        print(f"cannot report on {log_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    best = log.best_record()
    print(f"engine: {log.header.get('engine', '?')}  seed: {log.header.get('seed', '?')}")
    print(f"evaluations: {len(log.records)}  ok: {len(log.ok_records())}")
    print(f"best objective: {best.objective_value!r}")
    print(f"best parameters: {json.dumps(best.raw_params)}")
    print(f"best metrics: {json.dumps(best.metrics)}")
    totals: dict[str, float] = {}
    for rec in log.records:
        for k, v in (rec.timing or {}).items():
            totals[k] = totals.get(k, 0.0) + v
    print("timing totals: " + ", ".join(f"{k}={v:.3f}s" for k, v in sorted(totals.items())))
    trace = [r.gp_params for r in log.records if r.gp_params]
    if trace:
        print("hyperparameter trace (per refit iteration):")
        for i, params in enumerate(trace):
            ls = ",".join(f"{v:.3g}" for v in params["lengthscales"])
            print(
                f"  {i}: signal_variance={params['signal_variance']:.4g} "
                f"lengthscales=[{ls}] noise_variance={params['noise_variance']:.4g}"
            )
    outdir = Path(log_path).parent
    bo_loop.write_incumbent_csv(curve, outdir / "incumbent.csv")
    if compare is not None:
        try:
            other = ExperimentLog.load(compare)
            other_curve = bo_loop.incumbent_curve(other)
        except (OSError, ValueError, DseError) as exc:
            print(f"cannot report on {compare}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        rows = max(len(curve), len(other_curve))
        with open(outdir / "compare.csv", "w") as fh:
            fh.write("iteration,best_a,best_b\n")
            for i in range(rows):
                a = curve[min(i, len(curve) - 1)][1]
                b = other_curve[min(i, len(other_curve) - 1)][1]
                fh.write(f"{i},{a!r},{b!r}\n")
        print(f"comparison curve written to {outdir / 'compare.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dseopt",
        description="Black-box design-space exploration: surrogate-based search, "
        "GA baseline, weight sweeps, and run reporting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (default: runs/<timestamp>)")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--dry-run", action="store_true", help="validate and print only")

    p_sweep = sub.add_parser("sweep", help="run a weight sweep and merge the front")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--seed", type=int)

    p_report = sub.add_parser("report", help="summarize a log.jsonl")
    p_report.add_argument("log")
    p_report.add_argument("--compare", help="second log for a two-curve CSV")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, out=args.out, seed=args.seed, dry_run=args.dry_run)
    if args.command == "sweep":
        return cmd_sweep(args.config, out=args.out, seed=args.seed)
    return cmd_report(args.log, compare=args.compare)


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
