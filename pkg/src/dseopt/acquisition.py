"""Acquisition functions and the next-point proposal search.

All four acquisitions are written for a minimization objective: LCB is
minimized during proposal, while UCB, POI and EI are maximized. POI and EI
measure improvement below the incumbent ``f*`` with trade-off margin
``zeta``; UCB/LCB trade exploitation against exploration through ``kappa``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
from scipy.special import erfc

from .errors import SpaceExhaustedError
from .gp import GpModel, Prediction
from .param_space import ParameterSpace

KINDS = ("ucb", "lcb", "poi", "ei")

N_STARTS = 512
N_REFINE = 10
MAX_SWEEPS = 50
COORD_TOL = 1e-6
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which acquisition to use and its trade-off scalar.

    ``kappa`` applies to ucb/lcb, ``zeta`` to poi/ei. ``zeta=None`` means
    auto: the optimization loop substitutes 0.01 * max(spread of observed
    targets, 1e-3) each iteration.
    """

    kind: str
    kappa: float = 2.0
    zeta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.zeta is not None and self.zeta < 0:
            raise ValueError("zeta must be >= 0")

    def resolved(self, target_spread: float) -> "AcquisitionSpec":
        """Concrete spec with the auto zeta rule applied."""
        if self.zeta is not None:
            return self
        return replace(self, zeta=0.01 * max(float(target_spread), 1e-3))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "kappa": self.kappa, "zeta": self.zeta}


@dataclass(frozen=True)
class Incumbent:
    """Best (minimal) objective value observed so far."""

    best_value: float


def normal_cdf(z):
    """Standard normal CDF via the complementary error function."""
    return 0.5 * erfc(-np.asarray(z, dtype=float) / math.sqrt(2.0))


def normal_pdf(z):
    """Standard normal density."""
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def ucb(pred: Prediction, kappa: float) -> float:
    """mean + kappa * std."""
    return pred.mean + kappa * math.sqrt(pred.variance)


def lcb(pred: Prediction, kappa: float) -> float:
    """mean - kappa * std; minimized during proposal."""
    return pred.mean - kappa * math.sqrt(pred.variance)


def poi(pred: Prediction, incumbent: Incumbent, zeta: float) -> float:
    """Probability that the outcome lands below incumbent - zeta."""
    sigma = math.sqrt(pred.variance)
    gap = incumbent.best_value - zeta - pred.mean
    if sigma == 0.0:
        return 1.0 if gap > 0.0 else 0.0
    return float(normal_cdf(gap / sigma))


def ei(pred: Prediction, incumbent: Incumbent, zeta: float) -> float:
    """Expected improvement below incumbent - zeta; always >= 0."""
    sigma = math.sqrt(pred.variance)
    u = incumbent.best_value - pred.mean - zeta
    if sigma == 0.0:
        return max(0.0, u)
    z = u / sigma
    return max(0.0, float(u * normal_cdf(z) + sigma * normal_pdf(z)))


def acquisition_value(
    kind: str, pred: Prediction, incumbent: Incumbent, kappa: float, zeta: float
) -> float:
    """The raw acquisition value for any kind (sign as defined, not flipped)."""
    if kind == "ucb":
        return ucb(pred, kappa)
    if kind == "lcb":
        return lcb(pred, kappa)
    if kind == "poi":
        return poi(pred, incumbent, zeta)
    return ei(pred, incumbent, zeta)


def _desirability(
    kind: str,
    means: np.ndarray,
    variances: np.ndarray,
    f_best: float,
    kappa: float,
    zeta: float,
) -> np.ndarray:
    """Vectorized 'higher is better' score used by the proposal search."""
    sigma = np.sqrt(variances)
    if kind == "ucb":
        return means + kappa * sigma
    if kind == "lcb":
        return -(means - kappa * sigma)
    gap = f_best - zeta - means
    if kind == "poi":
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(sigma > 0, gap / np.where(sigma > 0, sigma, 1.0), 0.0)
        smooth = normal_cdf(z)
        step = (gap > 0).astype(float)
        return np.where(sigma > 0, smooth, step)
    # ei
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, gap / np.where(sigma > 0, sigma, 1.0), 0.0)
    smooth = gap * normal_cdf(z) + sigma * normal_pdf(z)
    return np.maximum(np.where(sigma > 0, smooth, np.maximum(gap, 0.0)), 0.0)


def _score(model: GpModel, kind, P, f_best, kappa, zeta) -> np.ndarray:
    means, variances = model.predict_batch(P)
    return _desirability(kind, means, variances, f_best, kappa, zeta)


def _refine_batch(model, kind, X0, f_best, kappa, zeta) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate-wise golden-section ascent on the desirability, batched.

    Runs synchronized golden-section line searches over each coordinate for
    every candidate at once; a candidate only moves when the line search
    found a strictly better point.
    """
    X = X0.copy()
    m, d = X.shape
    vals = _score(model, kind, X, f_best, kappa, zeta)
    for _ in range(MAX_SWEEPS):
        max_move = 0.0
        for j in range(d):
            a = np.zeros(m)
            b = np.ones(m)
            while float(np.max(b - a)) > COORD_TOL:
                x1 = b - INV_PHI * (b - a)
                x2 = a + INV_PHI * (b - a)
                P = np.vstack([X, X])
                P[:m, j] = x1
                P[m:, j] = x2
                f = _score(model, kind, P, f_best, kappa, zeta)
                f1, f2 = f[:m], f[m:]
                left = f1 >= f2
                b = np.where(left, x2, b)
                a = np.where(left, a, x1)
            probe = 0.5 * (a + b)
            P = X.copy()
            P[:, j] = probe
            fnew = _score(model, kind, P, f_best, kappa, zeta)
            improve = fnew > vals
            moved = np.abs(probe - X[:, j]) * improve
            X[:, j] = np.where(improve, probe, X[:, j])
            vals = np.where(improve, fnew, vals)
            if moved.size:
                max_move = max(max_move, float(np.max(moved)))
        if max_move < COORD_TOL:
            break
    return X, vals


def propose(
    model: GpModel,
    spec: AcquisitionSpec,
    incumbent: Incumbent,
    space: ParameterSpace,
    history: Iterable[tuple],
    seed: int,
) -> np.ndarray:
    """Maximize the chosen acquisition and return an unevaluated point.

    Multi-start search: seeded uniform random starts scored in batch, the
    best few refined by coordinate-wise golden-section ascent. If the best
    refined point decodes to an assignment already in ``history``, the next
    candidates are tried, then seeded perturbations of the best; raises
    SpaceExhaustedError when everything collides.
    """
    if spec.kind in ("poi", "ei") and spec.zeta is None:
        raise ValueError("zeta must be resolved before proposing with poi/ei")
    kappa = spec.kappa
    zeta = spec.zeta if spec.zeta is not None else 0.0
    f_best = incumbent.best_value
    history = set(history)

    rng = np.random.default_rng(seed)
    starts = rng.random((N_STARTS, space.dim))
    des = _score(model, spec.kind, starts, f_best, kappa, zeta)
    top = np.argsort(des)[::-1][:N_REFINE]
    refined, vals = _refine_batch(model, spec.kind, starts[top], f_best, kappa, zeta)
    order = np.argsort(vals)[::-1]

    for idx in order:
        cand = refined[idx]
        if space.assignment_key(space.decode(cand)) not in history:
            return cand
    best = refined[order[0]]
    for _ in range(20):
        pert = np.clip(best + rng.uniform(-0.05, 0.05, space.dim), 0.0, 1.0)
        if space.assignment_key(space.decode(pert)) not in history:
            return pert
    raise SpaceExhaustedError("every decodable candidate was already evaluated")
