"""Metric scaling, scalarization, and Pareto-front extraction.

A metric vector is a plain dict of named positive reals (defaults: area,
energy, delay). Scalarization collapses it into one training target,

    alpha1 * area' + alpha2 * energy' + delay'

over scaled metrics, where the third metric's coefficient is fixed at 1.
Scaling either divides each metric by a per-metric reference (scale_down)
or multiplies by one (scale_up), so differently-sized metrics contribute
comparably to the weighted sum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptySweepError,
    MissingReferenceError,
    ModeMismatchError,
    UnknownMetricError,
)

DEFAULT_METRICS = ("area", "energy", "delay")
SCALINGS = ("none", "scale_down", "scale_up")


@dataclass(frozen=True)
class ObjectiveSpec:
    """How raw metric vectors become scalar training targets."""

    mode: str  # "single" | "scalarized"
    metric: str | None = None  # for mode="single"
    alpha1: float = 1.0
    alpha2: float = 1.0
    scaling: str = "none"
    references: Mapping[str, float] | None = None
    metrics: tuple[str, ...] = DEFAULT_METRICS

    def __post_init__(self):
        if self.mode not in ("single", "scalarized"):
            raise ValueError(f"mode must be 'single' or 'scalarized', got {self.mode!r}")
        if self.mode == "single" and not self.metric:
            raise ValueError("mode='single' requires a metric name")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValueError("weights must be >= 0")
        if self.scaling not in SCALINGS:
            raise ValueError(f"scaling must be one of {SCALINGS}")
        if self.references is not None:
            for k, v in self.references.items():
                if not v > 0:
                    raise ValueError(f"reference for {k!r} must be > 0")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "metric": self.metric,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "scaling": self.scaling,
            "references": dict(self.references) if self.references else None,
            "metrics": list(self.metrics),
        }


def scale(metrics: Mapping[str, float], spec: ObjectiveSpec) -> dict[str, float]:
    """Apply the spec's scaling strategy to every metric."""
    if spec.scaling == "none":
        return dict(metrics)
    refs = spec.references or {}
    out = {}
    for name, value in metrics.items():
        if name not in refs:
            raise MissingReferenceError(f"no scaling reference for metric {name!r}")
        if spec.scaling == "scale_down":
            out[name] = value / refs[name]
        else:
            out[name] = value * refs[name]
    return out


def scalarize(metrics: Mapping[str, float], spec: ObjectiveSpec) -> float:
    """Weighted sum of the scaled metric triple; third coefficient is 1."""
    if spec.mode != "scalarized":
        raise ModeMismatchError("scalarize requires mode='scalarized'")
    scaled = scale(metrics, spec)
    m1, m2, m3 = spec.metrics
    try:
        return spec.alpha1 * scaled[m1] + spec.alpha2 * scaled[m2] + scaled[m3]
    except KeyError as e:
        raise UnknownMetricError(f"metric {e.args[0]!r} missing from evaluation") from None


def single(metrics: Mapping[str, float], spec: ObjectiveSpec) -> float:
    """The scaled value of the spec's single target metric."""
    if spec.mode != "single":
        raise ModeMismatchError("single requires mode='single'")
    if spec.metric not in metrics:
        raise UnknownMetricError(f"metric {spec.metric!r} missing from evaluation")
    return scale(metrics, spec)[spec.metric]


def to_target(metrics: Mapping[str, float], spec: ObjectiveSpec) -> float:
    """Mode-aware mapping from a metric vector to the scalar training target."""
    if spec.mode == "single":
        return single(metrics, spec)
    return scalarize(metrics, spec)


def pareto_filter(points: Sequence[tuple]) -> list[tuple]:
    """Nondominated subset under componentwise minimization, input order kept.

    ``points`` holds (params, metrics) pairs; a point is dropped when some
    other point is <= in every metric and < in at least one.
    """
    if not points:
        return []
    names = sorted(points[0][1].keys())
    M = np.array([[p[1][k] for k in names] for p in points], dtype=float)
    n = M.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        le = np.all(M <= M[i], axis=1)
        lt = np.any(M < M[i], axis=1)
        if np.any(le & lt):
            keep[i] = False
    return [p for p, k in zip(points, keep) if k]


def weight_sweep(
    weights: Sequence[tuple[float, float]],
    *,
    scaling: str = "none",
    references: Mapping[str, float] | None = None,
    metrics: tuple[str, ...] = DEFAULT_METRICS,
) -> list[ObjectiveSpec]:
    """One scalarized spec per (alpha1, alpha2) pair, sharing scaling config."""
    if not weights:
        raise EmptySweepError("weight sweep needs at least one (alpha1, alpha2) pair")
    specs = []
    for a1, a2 in weights:
        if a1 < 0 or a2 < 0:
            raise ValueError("sweep weights must be >= 0")
        specs.append(
            ObjectiveSpec(
                mode="scalarized",
                alpha1=float(a1),
                alpha2=float(a2),
                scaling=scaling,
                references=dict(references) if references else None,
                metrics=metrics,
            )
        )
    return specs


def resolve_references(
    spec: ObjectiveSpec, evaluations: Sequence[tuple[Mapping[str, float], float]]
) -> ObjectiveSpec:
    """Fill in scaling references from the initial batch when absent.

    ``evaluations`` holds (metrics, unscaled_target) pairs from the first
    random batch. The batch's best (minimal unscaled target) sample anchors
    the references: scale_down divides by that sample's metric values;
    scale_up multiplies by max-magnitude/metric-magnitude so every metric
    lands at the largest metric's order.
    """
    if spec.scaling == "none" or spec.references is not None:
        return spec
    if not evaluations:
        raise MissingReferenceError("cannot derive references from an empty batch")
    best_metrics = min(evaluations, key=lambda e: e[1])[0]
    if spec.scaling == "scale_down":
        refs = {k: float(v) for k, v in best_metrics.items()}
    else:
        top = max(abs(v) for v in best_metrics.values())
        refs = {k: top / float(v) for k, v in best_metrics.items()}
    return replace(spec, references=refs)


def write_pareto_csv(front: Sequence[tuple], path) -> None:
    """CSV export: one metric per column, then raw parameter columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if not front:
            writer.writerow([])
            return
        params, metrics = front[0]
        metric_names = sorted(metrics.keys())
        param_names = list(params.keys())
        writer.writerow(metric_names + param_names)
        for params, metrics in front:
            writer.writerow(
                [repr(float(metrics[m])) for m in metric_names]
                + [repr(params[p]) if isinstance(params[p], float) else str(params[p]) for p in param_names]
            )
