"""Sequential model-based optimization loop.

Each iteration solves the acquisition over the current surrogate, evaluates
the proposed point, and refits the surrogate hyperparameters on all
successful data. Failed evaluations are logged and skipped (they still
consume budget); the incumbent tracks the minimal scalarized target over
successful evaluations only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import acquisition as acq
from . import gp, objective
from .errors import AllInitFailedError, EmptyLogError, ModeMismatchError
from .evaluators import Evaluation
from .experiment_log import ExperimentLog, IterationRecord
from .param_space import ParameterSpace, space_to_config

# Stream tags for deriving independent deterministic substreams of one seed.
_TAG_INIT = 11
_TAG_PROPOSE = 13
_TAG_PROPOSE_RETRY = 17
_TAG_REFIT = 19


def derive_seed(*keys: int) -> int:
    """Deterministic child seed from a tuple of integer keys."""
    ss = np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in keys])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class BoConfig:
    """Budget, acquisition, objective and seeding for one run."""

    init_samples: int = 5
    max_iterations: int = 30
    acquisition: acq.AcquisitionSpec = field(
        default_factory=lambda: acq.AcquisitionSpec("lcb")
    )
    objective: objective.ObjectiveSpec = field(
        default_factory=lambda: objective.ObjectiveSpec(mode="single", metric="value")
    )
    seed: int = 0
    refit_restarts: int = 5

    def __post_init__(self):
        if self.init_samples < 1:
            raise ValueError("init_samples must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.refit_restarts < 1:
            raise ValueError("refit_restarts must be >= 1")


def _unscaled(spec: objective.ObjectiveSpec) -> objective.ObjectiveSpec:
    return replace(spec, scaling="none", references=None)


def run(space: ParameterSpace, evaluator, config: BoConfig) -> ExperimentLog:
    """Random initialization followed by acquisition-driven iterations.

    Deterministic for synthetic evaluators given ``config.seed``. Raises
    AllInitFailedError when the initial batch yields no usable evaluation.
    Interrupting mid-run returns the partial log with the header marked.
    """
    log = ExperimentLog()
    init_X = space.sample_uniform(config.init_samples, derive_seed(config.seed, _TAG_INIT))

    init_evals: list[tuple[np.ndarray, Evaluation, float]] = []
    for i, x in enumerate(init_X):
        t0 = time.perf_counter()
        ev = evaluator(x, i)
        init_evals.append((x, ev, time.perf_counter() - t0))
    ok_init = [
        (ev.metrics, objective.to_target(ev.metrics, _unscaled(config.objective)))
        for _, ev, _ in init_evals
        if ev.ok
    ]
    if not ok_init:
        raise AllInitFailedError("no successful evaluation in the initial batch")
    obj = objective.resolve_references(config.objective, ok_init)

    log.header = {
        "engine": "bo",
        "seed": config.seed,
        "init_samples": config.init_samples,
        "max_iterations": config.max_iterations,
        "refit_restarts": config.refit_restarts,
        "acquisition": config.acquisition.to_dict(),
        "objective": obj.to_dict(),
        "space": space_to_config(space),
    }

    history: set[tuple] = set()
    X_ok: list[np.ndarray] = []
    y_ok: list[float] = []
    incumbent: float | None = None
    index = 0

    for x, ev, dt in init_evals:
        raw = space.decode(x)
        history.add(space.assignment_key(raw))
        target = None
        if ev.ok:
            target = objective.to_target(ev.metrics, obj)
            X_ok.append(np.asarray(x, dtype=float))
            y_ok.append(target)
            incumbent = target if incumbent is None else min(incumbent, target)
        log.append(
            IterationRecord(
                index=index,
                phase="init",
                raw_params=raw,
                status=ev.status,
                reason=ev.reason,
                metrics=ev.metrics,
                objective_value=target,
                incumbent=incumbent,
                timing={"evaluate": dt},
            )
        )
        index += 1

    model = gp.fit_hyperparams(
        np.array(X_ok), np.array(y_ok), config.refit_restarts,
        derive_seed(config.seed, _TAG_REFIT, 0),
    )

    try:
        for t in range(1, config.max_iterations + 1):
            t0 = time.perf_counter()
            spec = config.acquisition.resolved(float(np.std(y_ok)))
            inc = acq.Incumbent(best_value=float(np.min(y_ok)))
            x = acq.propose(
                model, spec, inc, space, history, derive_seed(config.seed, _TAG_PROPOSE, t)
            )
            raw = space.decode(x)
            duplicate = False
            if space.assignment_key(raw) in history:
                x = acq.propose(
                    model, spec, inc, space, history,
                    derive_seed(config.seed, _TAG_PROPOSE_RETRY, t),
                )
                raw = space.decode(x)
                duplicate = space.assignment_key(raw) in history
            zeta = spec.zeta if spec.zeta is not None else 0.0
            acq_value = acq.acquisition_value(
                spec.kind, model.predict(x), inc, spec.kappa, zeta
            )
            gp_snapshot = model.params.to_dict()
            t_propose = time.perf_counter() - t0

            t0 = time.perf_counter()
            ev = evaluator(x, index)
            t_eval = time.perf_counter() - t0

            history.add(space.assignment_key(raw))
            target = None
            t_refit = 0.0
            if ev.ok:
                target = objective.to_target(ev.metrics, obj)
                X_ok.append(np.asarray(x, dtype=float))
                y_ok.append(target)
                incumbent = target if incumbent is None else min(incumbent, target)
                t0 = time.perf_counter()
                model = gp.fit_hyperparams(
                    np.array(X_ok), np.array(y_ok), config.refit_restarts,
                    derive_seed(config.seed, _TAG_REFIT, t),
                )
                t_refit = time.perf_counter() - t0

            log.append(
                IterationRecord(
                    index=index,
                    phase="search",
                    raw_params=raw,
                    status=ev.status,
                    reason=ev.reason,
                    metrics=ev.metrics,
                    objective_value=target,
                    incumbent=incumbent,
                    acquisition={
                        "kind": spec.kind,
                        "kappa": spec.kappa,
                        "zeta": zeta,
                        "value": acq_value,
                    },
                    gp_params=gp_snapshot,
                    duplicate=duplicate,
                    timing={"propose": t_propose, "evaluate": t_eval, "refit": t_refit},
                )
            )
            index += 1
    except KeyboardInterrupt:
        log.header["interrupted"] = True
    return log


def incumbent_curve(log: ExperimentLog) -> list[tuple[int, float]]:
    """Running minimum of the objective over successful evaluations."""
    curve: list[tuple[int, float]] = []
    best: float | None = None
    for rec in log.records:
        if rec.status == "ok" and rec.objective_value is not None:
            best = rec.objective_value if best is None else min(best, rec.objective_value)
        if best is not None:
            curve.append((rec.index, best))
    if not curve:
        raise EmptyLogError("log holds no successful evaluations")
    return curve


def write_incumbent_csv(curve: list[tuple[int, float]], path) -> None:
    with open(path, "w") as fh:
        fh.write("iteration,best\n")
        for i, best in curve:
            fh.write(f"{i},{best!r}\n")


@dataclass
class SweepResult:
    """Merged nondominated set plus the per-weight run logs."""

    front: list[tuple[dict, dict]]
    logs: list[ExperimentLog | None]
    errors: list[tuple[int, str]]


def multi_run_pareto(
    space: ParameterSpace,
    evaluator,
    base_config: BoConfig,
    sweep: list[objective.ObjectiveSpec],
) -> SweepResult:
    """One full run per scalarization; merge evaluations; extract the front.

    Run ``i`` uses seed ``base_config.seed + i``. Individual run failures are
    collected; at least one run must succeed.
    """
    for spec in sweep:
        if spec.mode != "scalarized":
            raise ModeMismatchError("weight sweeps require scalarized objective specs")
    logs: list[ExperimentLog | None] = []
    errors: list[tuple[int, str]] = []
    merged: list[tuple[dict, dict]] = []
    for i, spec in enumerate(sweep):
        cfg = replace(base_config, objective=spec, seed=base_config.seed + i)
        try:
            log = run(space, evaluator, cfg)
        except Exception as exc:  # noqa: BLE001 - per-entry isolation is the contract
            logs.append(None)
            errors.append((i, f"{type(exc).__name__}: {exc}"))
            continue
        logs.append(log)
        for rec in log.ok_records():
            merged.append((rec.raw_params, rec.metrics))
    if not any(log is not None for log in logs):
        raise AllInitFailedError(f"every sweep entry failed: {errors}")
    return SweepResult(front=objective.pareto_filter(merged), logs=logs, errors=errors)
