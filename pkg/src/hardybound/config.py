"""Run configuration: TOML documents (or ``key=value`` token lists) to :class:`RunConfig`.

Keys may be given at top level or inside ``[domain]``, ``[solver]`` and
``[bisect]`` tables::

    mode = "bisect"
    s = 0.5
    p = 2
    n = 64

    [domain]
    intervals = [[0, 1], [2, 4]]

    [bisect]
    rel_gap_target = 1e-3
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .driver import BisectConfig
from .errors import ConfigError, HardyBoundError
from .geometry import DomainSpec
from .nonlocal_core import KernelParams
from .solver import SolverConfig, StepRule, check_ball, default_ball

__all__ = ["MODES", "RunConfig", "parse_config", "parse_tokens"]

MODES = ("estimate", "certify", "bisect", "geometry", "selftest")

_TABLES = {
    "domain": {"intervals", "rectangle"},
    "solver": {
        "lambda", "ball_center", "ball_radius", "max_iters", "grad_tol",
        "step_initial", "step_shrink", "armijo", "memory",
    },
    "bisect": {"lambda_min", "lambda_max", "max_bisections", "rel_gap_target", "levels"},
}
_TOP = {"mode", "s", "p", "n", "alpha", "witness", "output", "seed"}
KNOWN_KEYS = _TOP.union(*_TABLES.values())


@dataclass(frozen=True)
class RunConfig:
    mode: str
    domain: DomainSpec
    params: KernelParams
    n: int
    levels: tuple[int, ...]
    solver: SolverConfig
    bisect: BisectConfig
    alpha: float = 0.5
    lam: float | None = None
    witness: str | None = None
    output: str | None = None
    seed: int = 0
    echo: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        """Every resolved setting, defaults included, in a JSON-ready form."""
        sv, bc = self.solver, self.bisect
        return {
            "mode": self.mode,
            "domain": self.domain.to_dict(),
            "s": self.params.s,
            "p": self.params.p,
            "N": self.params.N,
            "n": self.n,
            "levels": list(self.levels),
            "alpha": self.alpha,
            "lambda": self.lam,
            "witness": self.witness,
            "output": self.output,
            "seed": self.seed,
            "solver": {
                "ball_center": list(sv.ball_center),
                "ball_radius": sv.ball_radius,
                "max_iters": sv.max_iters,
                "grad_tol": sv.grad_tol,
                "step_initial": sv.step_rule.initial,
                "step_shrink": sv.step_rule.shrink,
                "armijo": sv.step_rule.armijo,
                "memory": sv.memory,
            },
            "bisect": {
                "lambda_min": bc.lambda_min,
                "lambda_max": bc.lambda_max,
                "max_bisections": bc.max_bisections,
                "rel_gap_target": bc.rel_gap_target,
            },
        }


def _scalar(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def parse_tokens(tokens) -> dict:
    """``["s=0.5", "intervals=[[0,1]]"]`` to a flat dict; values parse as TOML
    where possible and fall back to bare strings."""
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"expected key=value, got {tok!r}")
        key, _, value = tok.partition("=")
        out[key.strip()] = _scalar(value.strip())
    return out


def _load(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError:
        return parse_tokens(text.split())


def _flatten(doc: Mapping) -> dict:
    flat, unknown = {}, []
    for key, value in doc.items():
        if key in _TABLES and isinstance(value, Mapping):
            for sub, v in value.items():
                if sub in _TABLES[key]:
                    flat[sub] = v
                else:
                    unknown.append(f"{key}.{sub}")
        elif key in KNOWN_KEYS:
            flat[key] = value
        else:
            unknown.append(key)
    if unknown:
        raise ConfigError("unknown configuration keys: " + ", ".join(sorted(unknown)))
    return flat


def _number(flat: dict, key: str, default, kind=float):
    value = flat.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if kind is int:
        if value != int(value):
            raise ConfigError(f"{key} must be an integer")
        return int(value)
    value = float(value)
    if math.isnan(value):
        raise ConfigError(f"{key} must not be NaN")
    return value


def _domain(flat: dict, mode: str) -> DomainSpec:
    has_i, has_r = "intervals" in flat, "rectangle" in flat
    if has_i and has_r:
        raise ConfigError("give either domain.intervals or domain.rectangle, not both")
    try:
        if has_i:
            return DomainSpec.intervals(flat["intervals"])
        if has_r:
            return DomainSpec.rectangle(flat["rectangle"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc
    if mode == "selftest":
        return DomainSpec.intervals([[0, 1]])
    raise ConfigError("domain: missing; set intervals = [[a, b], ...] or rectangle = [[a1, b1], [a2, b2]]")


def parse_config(text: str = "", overrides: Mapping | None = None) -> RunConfig:
    """Validate a configuration document, apply ``overrides`` (flat keys,
    e.g. from command-line flags) and fill in defaults."""
    flat = _flatten(_load(text)) if text.strip() else {}
    if overrides:
        flat.update(_flatten({k: v for k, v in overrides.items() if v is not None}))
    echo = dict(flat)

    mode = flat.get("mode", "bisect")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {mode!r}")
    domain = _domain(flat, mode)
    try:
        params = KernelParams(_number(flat, "s", 0.5), _number(flat, "p", 2.0), domain.dimension)
    except HardyBoundError as exc:
        raise ConfigError(str(exc)) from exc

    n = _number(flat, "n", 64, int)
    if n < 1:
        raise ConfigError("n must be a positive integer")
    levels = flat.get("levels", [n])
    if not isinstance(levels, list) or not levels:
        raise ConfigError("levels must be a nonempty list of grid sizes")
    levels = tuple(_number({"levels": v}, "levels", None, int) for v in levels)

    center, radius = default_ball(domain)
    center = flat.get("ball_center", list(center))
    if not isinstance(center, list):
        center = [center]
    try:
        solver = SolverConfig(
            0.0,
            tuple(float(c) for c in center),
            _number(flat, "ball_radius", radius),
            max_iters=_number(flat, "max_iters", 1500, int),
            grad_tol=_number(flat, "grad_tol", 1e-10),
            step_rule=StepRule(
                _number(flat, "step_initial", 1.0),
                _number(flat, "step_shrink", 0.5),
                _number(flat, "armijo", 1e-4),
            ),
            memory=_number(flat, "memory", 12, int),
        )
        check_ball(domain, solver.ball_center, solver.ball_radius)
        bisect = BisectConfig(
            lambda_min=_number(flat, "lambda_min", 0.0),
            lambda_max=_number(flat, "lambda_max", None),
            max_bisections=_number(flat, "max_bisections", 40, int),
            rel_gap_target=_number(flat, "rel_gap_target", 1e-3),
            solver=solver,
            refinement_levels=levels,
        )
    except HardyBoundError as exc:
        raise ConfigError(str(exc)) from exc

    alpha = _number(flat, "alpha", 0.5)
    if not alpha > 0:
        raise ConfigError("alpha must be positive")
    lam = _number(flat, "lambda", None)
    if lam is not None and lam < 0:
        raise ConfigError("lambda must be nonnegative")
    if mode == "certify" and lam is None:
        raise ConfigError("certify mode needs lambda")
    witness = flat.get("witness")
    output = flat.get("output")
    for key, value in (("witness", witness), ("output", output)):
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{key} must be a path string")
    seed = _number(flat, "seed", 0, int)
    return RunConfig(mode, domain, params, n, levels, solver, bisect, alpha, lam,
                     witness, output, seed, echo)
