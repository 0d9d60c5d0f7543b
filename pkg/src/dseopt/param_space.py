"""Bounded mixed float/integer design spaces and their unit-cube encoding.

A space is an ordered list of named, typed, bounded parameters. All search
machinery (surrogate model, acquisition optimizer, GA) works on normalized
vectors in [0,1]^d; ``encode``/``decode`` form the bijection between raw
assignments and that coordinate system. Integer parameters are relaxed to
continuous coordinates and rounded on decode (ties away from zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    GridTooLargeError,
    NonIntegralValueError,
    OutOfBoundsError,
    UnknownParamError,
)

CONTINUOUS = "continuous"
INTEGER = "integer"

DEFAULT_GRID_CAP = 10**6


@dataclass(frozen=True)
class ParamDef:
    """One named, bounded design parameter."""

    name: str
    kind: str
    lower: float
    upper: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("parameter name must be nonempty")
        if self.kind not in (CONTINUOUS, INTEGER):
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError(f"{self.name}: bounds must be finite")
        if self.kind == CONTINUOUS:
            if not self.lower < self.upper:
                raise ValueError(f"{self.name}: continuous bounds require lower < upper")
        else:
            if not self.lower <= self.upper:
                raise ValueError(f"{self.name}: integer bounds require lower <= upper")
            if self.lower != int(self.lower) or self.upper != int(self.upper):
                raise ValueError(f"{self.name}: integer bounds must be integral")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered, immutable collection of parameters defining the search domain."""

    params: tuple[ParamDef, ...]

    def __post_init__(self):
        if len(self.params) < 1:
            raise ValueError("a space needs at least one parameter")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")

    @property
    def dim(self) -> int:
        return len(self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def encode(self, raw: Mapping[str, float]) -> np.ndarray:
        """Map a raw assignment to a normalized vector in [0,1]^d.

        ``raw`` must contain exactly the names of this space. Values must lie
        within bounds; integer parameters must be integral.
        """
        missing = set(self.names) - set(raw)
        extra = set(raw) - set(self.names)
        if missing or extra:
            raise UnknownParamError(
                f"assignment names do not match space (missing={sorted(missing)}, "
                f"unexpected={sorted(extra)})"
            )
        coords = np.empty(self.dim)
        for i, p in enumerate(self.params):
            v = float(raw[p.name])
            if not (p.lower <= v <= p.upper):
                raise OutOfBoundsError(
                    f"{p.name}={v} outside [{p.lower}, {p.upper}]"
                )
            if p.kind == INTEGER and v != int(v):
                raise NonIntegralValueError(f"{p.name}={v} must be integral")
            coords[i] = 0.0 if p.width == 0 else (v - p.lower) / p.width
        return coords

    def decode(self, v: Sequence[float] | np.ndarray) -> dict[str, float | int]:
        """Map a normalized vector back to a raw assignment.

        Continuous parameters map affinely; integer parameters round to the
        nearest integer with ties away from zero, clamped to bounds.
        """
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected vector of dimension {self.dim}, got shape {v.shape}"
            )
        out: dict[str, float | int] = {}
        for i, p in enumerate(self.params):
            x = p.lower + float(v[i]) * p.width
            if p.kind == INTEGER:
                k = int(math.copysign(math.floor(abs(x) + 0.5), x))
                k = min(max(k, int(p.lower)), int(p.upper))
                out[p.name] = k
            else:
                out[p.name] = x
        return out

    def sample_uniform(self, n: int, seed: int) -> np.ndarray:
        """Draw ``n`` normalized vectors uniformly; same seed, same output."""
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(seed)
        return rng.random((n, self.dim))

    def grid(self, points_per_dim: int, cap: int = DEFAULT_GRID_CAP) -> np.ndarray:
        """Full Cartesian grid of normalized vectors, endpoints included.

        Integer dimensions enumerate exactly their integral values regardless
        of ``points_per_dim``.
        """
        if points_per_dim < 2:
            raise ValueError("points_per_dim must be >= 2")
        axes = []
        total = 1
        for p in self.params:
            if p.kind == INTEGER:
                count = int(p.upper) - int(p.lower) + 1
                if p.width == 0:
                    axis = np.array([0.0])
                else:
                    axis = (np.arange(count) * 1.0) / p.width
            else:
                axis = np.linspace(0.0, 1.0, points_per_dim)
            axes.append(axis)
            total *= len(axis)
            if total > cap:
                raise GridTooLargeError(
                    f"grid would hold more than {cap} points"
                )
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def assignment_key(self, raw: Mapping[str, float]) -> tuple:
        """Hashable identity of a raw assignment, for dedup bookkeeping."""
        return tuple(raw[name] for name in self.names)


def space_from_config(entries: Iterable[Mapping]) -> ParameterSpace:
    """Build a space from config entries with keys name/kind/min/max."""
    defs = []
    for e in entries:
        defs.append(
            ParamDef(
                name=str(e["name"]),
                kind=str(e["kind"]),
                lower=float(e["min"]),
                upper=float(e["max"]),
            )
        )
    return ParameterSpace(tuple(defs))


def space_to_config(space: ParameterSpace) -> list[dict]:
    return [
        {"name": p.name, "kind": p.kind, "min": p.lower, "max": p.upper}
        for p in space.params
    ]


def default_cad_space() -> ParameterSpace:
    """The bundled default space: six synthesis/physical-design tool knobs."""
    return ParameterSpace(
        (
            ParamDef("max_delay", CONTINUOUS, 0.1, 0.5),
            ParamDef("clock_period", CONTINUOUS, 1.0, 2.0),
            ParamDef("pin_load", CONTINUOUS, 0.002, 0.006),
            ParamDef("output_delay", CONTINUOUS, 0.1, 0.5),
            ParamDef("core_utilization", CONTINUOUS, 0.5, 1.0),
            ParamDef("core_aspect_ratio", INTEGER, 1, 3),
        )
    )
