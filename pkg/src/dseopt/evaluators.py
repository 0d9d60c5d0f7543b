"""Black-box evaluation behind a uniform interface.

Three evaluator families share one calling convention (normalized vector in,
``Evaluation`` out): closed-form synthetic benchmarks, a synthetic
area/energy/delay response surface over the default tool-parameter space,
and an external-command harness that renders a script from a template, runs
a tool, and scrapes metrics from its output.

Metric values are always a function of the decoded raw parameters (plus the
noise seed where applicable), so replaying logged raw parameters reproduces
logged metrics bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import subprocess
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import UnknownBenchmarkError, UnresolvedPlaceholderError
from .param_space import CONTINUOUS, INTEGER, ParamDef, ParameterSpace, default_cad_space

STATUS_OK = "ok"
STATUS_SPAWN_FAILURE = "spawn_failure"
STATUS_TIMEOUT = "timeout"
STATUS_PARSE_FAILURE = "parse_failure"

DEFAULT_TIMEOUT = 3600.0
PPA_NOISE_FRACTION = 0.005


@dataclass
class Evaluation:
    """Outcome of one black-box evaluation."""

    raw_params: dict
    metrics: dict | None
    wall_time: float
    status: str = STATUS_OK
    reason: str | None = None

    def __post_init__(self):
        if (self.status == STATUS_OK) != (self.metrics is not None):
            raise ValueError("metrics must be present exactly when status is ok")

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


@dataclass(frozen=True)
class Benchmark:
    name: str
    space: ParameterSpace
    fn: Callable[[Mapping], float]
    optimum_value: float
    optimum_raw: dict


def _sphere(raw: Mapping) -> float:
    return float(sum((float(v) - 0.5) ** 2 for v in raw.values()))


def _rosenbrock(raw: Mapping) -> float:
    x, y = float(raw["x0"]), float(raw["x1"])
    return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2


_STEP_COST = (2.0, 0.0, 1.0, 3.0, 5.0, 4.0)


def _mixed_step(raw: Mapping) -> float:
    return (
        (float(raw["x0"]) - 3.0) ** 2
        + (float(raw["x1"]) + 1.0) ** 2
        + _STEP_COST[int(raw["x2"])]
    )


BENCHMARKS: dict[str, Benchmark] = {
    "sphere-d6": Benchmark(
        name="sphere-d6",
        space=ParameterSpace(
            tuple(ParamDef(f"x{i}", CONTINUOUS, 0.0, 1.0) for i in range(6))
        ),
        fn=_sphere,
        optimum_value=0.0,
        optimum_raw={f"x{i}": 0.5 for i in range(6)},
    ),
    "rosenbrock-d2": Benchmark(
        name="rosenbrock-d2",
        space=ParameterSpace(
            (ParamDef("x0", CONTINUOUS, -2.0, 2.0), ParamDef("x1", CONTINUOUS, -2.0, 2.0))
        ),
        fn=_rosenbrock,
        optimum_value=0.0,
        optimum_raw={"x0": 1.0, "x1": 1.0},
    ),
    "mixed-step-d3": Benchmark(
        name="mixed-step-d3",
        space=ParameterSpace(
            (
                ParamDef("x0", CONTINUOUS, 0.0, 4.0),
                ParamDef("x1", CONTINUOUS, -2.0, 2.0),
                ParamDef("x2", INTEGER, 0, 5),
            )
        ),
        fn=_mixed_step,
        optimum_value=0.0,
        optimum_raw={"x0": 3.0, "x1": -1.0, "x2": 1},
    ),
}


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise UnknownBenchmarkError(
            f"no benchmark {name!r}; registered: {sorted(BENCHMARKS)}"
        ) from None


def eval_synthetic(name: str, x: np.ndarray) -> Evaluation:
    """Evaluate a registered closed-form benchmark at a normalized point."""
    return SyntheticEvaluator(name)(x)


# --- synthetic area/energy/delay surface -----------------------------------
#
# Nominal (noise-free) response over the default tool-parameter space, from
# unit-interval features of the raw values:
#
#   effort  = 2.0 - clock_period                 tighter clock -> 1
#   slack   = (max_delay - 0.1) / 0.4            tighter delay constraint -> 0
#   drive   = (pin_load - 0.002) / 0.004
#   outcost = (output_delay - 0.1) / 0.4
#   density = (core_utilization - 0.5) / 0.5
#   square  = (core_aspect_ratio - 2)^2
#
#   delay  = 300 + 140*slack + 60*(1-effort) + 25*drive + 15*outcost
#            + 45*density^4 + 6*square
#   area   = 1700 + 420*effort + 330*(1-slack) + 150*drive - 320*density
#            + 35*square
#   energy = 5200 + 1500*effort + 1100*(1-slack) + 600*drive + 180*density^2
#            + 120*outcost + 90*square
#
# Tightening clock_period or max_delay trades delay down against area and
# energy up; raising core_utilization shrinks area while the density^4 term
# puts a delay cliff near full utilization.

def ppa_nominal(raw: Mapping) -> dict[str, float]:
    """Noise-free metric triple for one raw assignment of the default space."""
    effort = 2.0 - float(raw["clock_period"])
    slack = (float(raw["max_delay"]) - 0.1) / 0.4
    drive = (float(raw["pin_load"]) - 0.002) / 0.004
    outcost = (float(raw["output_delay"]) - 0.1) / 0.4
    density = (float(raw["core_utilization"]) - 0.5) / 0.5
    square = (float(raw["core_aspect_ratio"]) - 2.0) ** 2
    delay = (
        300.0 + 140.0 * slack + 60.0 * (1.0 - effort) + 25.0 * drive
        + 15.0 * outcost + 45.0 * density**4 + 6.0 * square
    )
    area = (
        1700.0 + 420.0 * effort + 330.0 * (1.0 - slack) + 150.0 * drive
        - 320.0 * density + 35.0 * square
    )
    energy = (
        5200.0 + 1500.0 * effort + 1100.0 * (1.0 - slack) + 600.0 * drive
        + 180.0 * density**2 + 120.0 * outcost + 90.0 * square
    )
    return {"area": area, "energy": energy, "delay": delay}


def _noise_stream(seed: int, raw: Mapping, names: Sequence[str]) -> np.random.Generator:
    """Generator keyed on (seed, raw values) so identical inputs repeat exactly."""
    buf = np.array([float(raw[n]) for n in names], dtype=float).tobytes()
    digest = hashlib.blake2b(buf, digest_size=8).digest()
    return np.random.default_rng(
        [int(seed) & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest, "little")]
    )


def eval_ppa_surface(x: np.ndarray, seed: int) -> Evaluation:
    """Noisy metric triple at a normalized point of the default space."""
    return PpaSurfaceEvaluator(seed=seed)(x)


def load_reference_front() -> dict:
    """Bundled grid-enumerated nondominated set of the nominal surface."""
    text = resources.files("dseopt").joinpath("data/ppa_front.json").read_text()
    return json.loads(text)


# --- evaluator objects ------------------------------------------------------


class SyntheticEvaluator:
    """Closed-form benchmark behind the common evaluator interface."""

    def __init__(self, name: str):
        self.benchmark = get_benchmark(name)
        self.space = self.benchmark.space
        self.metric_names = ("value",)

    def describe(self) -> dict:
        return {"type": "synthetic", "name": self.benchmark.name}

    def eval_raw(self, raw: Mapping, index: int = 0) -> Evaluation:
        t0 = time.perf_counter()
        value = self.benchmark.fn(raw)
        return Evaluation(dict(raw), {"value": float(value)}, time.perf_counter() - t0)

    def __call__(self, x: np.ndarray, index: int = 0) -> Evaluation:
        return self.eval_raw(self.space.decode(x), index)


class PpaSurfaceEvaluator:
    """Synthetic conflicting area/energy/delay surface with seeded noise."""

    def __init__(self, seed: int = 0, noise: bool = True):
        self.seed = int(seed)
        self.noise = noise
        self.space = default_cad_space()
        self.metric_names = ("area", "energy", "delay")

    def describe(self) -> dict:
        return {"type": "ppa-surface", "noise": self.noise, "noise_seed": self.seed}

    def eval_raw(self, raw: Mapping, index: int = 0) -> Evaluation:
        t0 = time.perf_counter()
        nominal = ppa_nominal(raw)
        if self.noise:
            rng = _noise_stream(self.seed, raw, self.space.names)
            metrics = {
                name: nominal[name] + rng.normal(0.0, PPA_NOISE_FRACTION * nominal[name])
                for name in self.metric_names
            }
        else:
            metrics = dict(nominal)
        return Evaluation(dict(raw), metrics, time.perf_counter() - t0)

    def __call__(self, x: np.ndarray, index: int = 0) -> Evaluation:
        return self.eval_raw(self.space.decode(x), index)


# --- external command harness -----------------------------------------------

_PLACEHOLDER = re.compile(r"\{\{([A-Za-z_]\w*)\}\}")
_ANY_PLACEHOLDER = re.compile(r"\{\{[^{}]*\}\}")


@dataclass(frozen=True)
class ParseRule:
    """Scrape rule: a line starting with ``prefix`` yields ``metric``."""

    metric: str
    prefix: str


@dataclass(frozen=True)
class ScriptTemplate:
    """Tool-launch script text with {{name}} placeholders plus scrape rules."""

    template_text: str
    parse_rules: tuple[ParseRule, ...] = field(default_factory=tuple)


def _format_value(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".6g")


def render_script(template: ScriptTemplate, raw: Mapping) -> str:
    """Substitute every placeholder; fail if any cannot be resolved."""

    def sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in raw:
            raise UnresolvedPlaceholderError(f"no value for placeholder {{{{{name}}}}}")
        return _format_value(raw[name])

    rendered = _PLACEHOLDER.sub(sub, template.template_text)
    leftover = _ANY_PLACEHOLDER.search(rendered)
    if leftover:
        raise UnresolvedPlaceholderError(f"unresolved placeholder {leftover.group(0)!r}")
    return rendered


def _first_numeric_token(text: str) -> float | None:
    for tok in text.split():
        try:
            return float(tok)
        except ValueError:
            continue
    return None


def parse_metrics(output: str, rules: Sequence[ParseRule]) -> dict[str, float]:
    """Apply rules line by line; the first match per metric wins."""
    found: dict[str, float] = {}
    for line in output.splitlines():
        stripped = line.lstrip()
        for rule in rules:
            if rule.metric in found:
                continue
            if stripped.startswith(rule.prefix):
                value = _first_numeric_token(stripped[len(rule.prefix):])
                if value is not None:
                    found[rule.metric] = value
        if len(found) == len(rules):
            break
    return found


def eval_external(
    template: ScriptTemplate,
    command: Sequence[str],
    workdir,
    timeout: float,
    raw: Mapping,
) -> Evaluation:
    """Render the script into ``workdir``, run the command there, parse stdout.

    Tool failures (cannot spawn, nonzero exit, timeout, missing metric)
    come back as distinct failed statuses rather than exceptions, so a
    search loop can record them and continue.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    script = render_script(template, raw)
    (workdir / "script.gen").write_text(script)
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(
            list(command),
            cwd=workdir,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        (workdir / "stdout.log").write_text(_coerce_text(exc.stdout))
        (workdir / "stderr.log").write_text(_coerce_text(exc.stderr))
        return Evaluation(
            dict(raw), None, time.perf_counter() - t0,
            status=STATUS_TIMEOUT, reason=f"timed out after {timeout}s",
        )
    except OSError as exc:
        return Evaluation(
            dict(raw), None, time.perf_counter() - t0,
            status=STATUS_SPAWN_FAILURE, reason=str(exc),
        )
    elapsed = time.perf_counter() - t0
    (workdir / "stdout.log").write_text(proc.stdout)
    (workdir / "stderr.log").write_text(proc.stderr)
    if proc.returncode != 0:
        return Evaluation(
            dict(raw), None, elapsed,
            status=STATUS_SPAWN_FAILURE, reason=f"exit status {proc.returncode}",
        )
    found = parse_metrics(proc.stdout, template.parse_rules)
    missing = [r.metric for r in template.parse_rules if r.metric not in found]
    if missing:
        return Evaluation(
            dict(raw), None, elapsed,
            status=STATUS_PARSE_FAILURE, reason=f"no match for metrics {missing}",
        )
    return Evaluation(dict(raw), found, elapsed)


def _coerce_text(data) -> str:
    if data is None:
        return ""
    if isinstance(data, bytes):
        return data.decode(errors="replace")
    return str(data)


class ExternalEvaluator:
    """Runs one external tool per evaluation in numbered iter_<k>/ subdirs."""

    def __init__(
        self,
        space: ParameterSpace,
        template: ScriptTemplate,
        command: Sequence[str],
        workdir,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        self.space = space
        self.template = template
        self.command = list(command)
        self.workdir = Path(workdir)
        self.timeout = float(timeout)
        self.metric_names = tuple(r.metric for r in template.parse_rules)

    def describe(self) -> dict:
        return {
            "type": "external",
            "command": self.command,
            "timeout": self.timeout,
            "parse_rules": [
                {"metric": r.metric, "prefix": r.prefix} for r in self.template.parse_rules
            ],
        }

    def eval_raw(self, raw: Mapping, index: int = 0) -> Evaluation:
        return eval_external(
            self.template,
            self.command,
            self.workdir / f"iter_{index}",
            self.timeout,
            raw,
        )

    def __call__(self, x: np.ndarray, index: int = 0) -> Evaluation:
        return self.eval_raw(self.space.decode(x), index)
