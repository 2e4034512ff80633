"""Experiment configuration: TOML loading and strict validation.

Validation never stops at the first problem: every violation is collected
with its field path and reported in one shot, including unknown keys
(probable typos).  Only a fully clean config is turned into the typed
``ExperimentConfig``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .diagnostics.drift import DEFAULT_A_GRID
from .assumptions import DEFAULT_RADII
from .errors import ConfigValidationError, ConfigurationError
from .integrator import LeapfrogConfig
from .kernel import HmcParams, KernelSpec, RandomizedSchedule, ScheduleEntry
from .potentials import FamilyConfig, VARIANTS

EXPERIMENTS = (
    "sample",
    "trace-energy",
    "horizon",
    "tail-accept",
    "drift",
    "rejection-mass",
    "smallset",
    "tv-decay",
    "check-assumptions",
    "decompose-energy",
)

# experiments that operate on a single (h, T) setting
FIXED_KERNEL_ONLY = frozenset(
    ("trace-energy", "horizon", "tail-accept", "drift", "rejection-mass", "smallset", "decompose-energy")
)

_TOP_KEYS = {"experiment", "output_dir", "seed", "potential", "kernel", "params"}

_VARIANT_KEYS = {
    "gaussian": {"precision"},
    "power": {"delta", "kappa"},
    "homogeneous_perturbed": {"m", "perturbation"},
    "double_well": {"scale"},
}


@dataclass
class ExperimentConfig:
    experiment: str
    potential: FamilyConfig
    kernel: KernelSpec
    seed: int
    output_dir: Path
    params: dict
    raw: dict


@dataclass(frozen=True)
class _Field:
    name: str
    kind: str
    required: bool = False
    default: object = None
    check: Optional[Callable[[object], Optional[str]]] = None


def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _at_least_1(v):
    return None if v >= 1 else "must be >= 1"


def _positive_list(v):
    return None if all(x > 0 for x in v) else "entries must be > 0"


def _nonneg_int_list(v):
    return None if all(x >= 0 for x in v) else "entries must be >= 0"


EXPERIMENT_PARAMS: dict[str, tuple[_Field, ...]] = {
    "sample": (
        _Field("n", "int", required=True, check=_at_least_1),
        _Field("q0", "float_list"),
    ),
    "trace-energy": (
        _Field("q0", "float_list", required=True),
        _Field("p0", "float_list", required=True),
    ),
    "horizon": (
        _Field("radii", "float_list", required=True, check=_positive_list),
        _Field("t_max", "int", required=True, check=_at_least_1),
        _Field("p_norm", "float", default=1.0, check=_positive),
        _Field("require_increasing", "bool", default=False),
    ),
    "tail-accept": (
        _Field("radii", "float_list", required=True, check=_positive_list),
        _Field("n_momenta", "int", required=True, check=_at_least_1),
        _Field("gamma", "float", default=0.0, check=_nonneg),
        _Field("require_full_at_largest", "bool", default=False),
        _Field("horizon_t_max", "int", check=_at_least_1),
    ),
    "drift": (
        _Field("radii", "float_list", required=True, check=_positive_list),
        _Field("n_momenta", "int", required=True, check=_at_least_1),
        _Field("a_grid", "float_list", default=list(DEFAULT_A_GRID), check=_positive_list),
        _Field("require_drift", "bool", default=False),
    ),
    "rejection-mass": (
        _Field("radii", "float_list", required=True, check=_positive_list),
        _Field("n_momenta", "int", required=True, check=_at_least_1),
        _Field("a", "float", default=1.0, check=_positive),
    ),
    "smallset": (
        _Field("R", "float", required=True, check=_positive),
        _Field("M", "float", required=True, check=_positive),
        _Field("grid_n", "int", required=True, check=_at_least_1),
        _Field("n_starts", "int", default=6, check=_at_least_1),
        _Field("n_samples", "int", default=256, check=lambda v: None if v >= 8 else "must be >= 8"),
        _Field("p_radius", "float", check=_positive),
    ),
    "tv-decay": (
        _Field("q0", "float_list", required=True),
        _Field("checkpoints", "int_list", required=True, check=_nonneg_int_list),
        _Field("n_chains", "int", required=True, check=lambda v: None if v >= 1000 else "must be >= 1000"),
        _Field("bins", "int", default=40, check=lambda v: None if v >= 4 else "must be >= 4"),
        _Field("bootstrap", "int", default=200, check=_at_least_1),
    ),
    "check-assumptions": (
        _Field("a1_beta", "float", check=_nonneg),
        _Field("a2_m", "float"),
        _Field("radii", "float_list", default=list(DEFAULT_RADII), check=_positive_list),
        _Field("n_samples", "int", default=64, check=_at_least_1),
        _Field("expect_a1", "bool"),
        _Field("expect_a2", "bool"),
    ),
    "decompose-energy": (
        _Field("q0", "float_list", required=True),
        _Field("p0", "float_list", required=True),
        _Field("quad_nodes", "int", default=32, check=lambda v: None if v >= 8 else "must be >= 8"),
    ),
}


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return _is_int(v) or isinstance(v, float)


def _coerce(field: _Field, value, path: str, errors: list[str]):
    kind = field.kind
    if kind == "int":
        if not _is_int(value):
            errors.append(f"{path}: must be an integer, got {value!r}")
            return None
        value = int(value)
    elif kind == "float":
        if not _is_num(value):
            errors.append(f"{path}: must be a number, got {value!r}")
            return None
        value = float(value)
    elif kind == "bool":
        if not isinstance(value, bool):
            errors.append(f"{path}: must be a boolean, got {value!r}")
            return None
    elif kind == "float_list":
        if not (isinstance(value, list) and value and all(_is_num(x) for x in value)):
            errors.append(f"{path}: must be a non-empty list of numbers, got {value!r}")
            return None
        value = [float(x) for x in value]
    elif kind == "int_list":
        if not (isinstance(value, list) and value and all(_is_int(x) for x in value)):
            errors.append(f"{path}: must be a non-empty list of integers, got {value!r}")
            return None
        value = [int(x) for x in value]
    elif kind == "str":
        if not isinstance(value, str):
            errors.append(f"{path}: must be a string, got {value!r}")
            return None
    if field.check is not None:
        msg = field.check(value)
        if msg is not None:
            errors.append(f"{path}: {msg}")
            return None
    return value


def _validate_potential(data, errors: list[str]) -> Optional[FamilyConfig]:
    if not isinstance(data, dict):
        errors.append("potential: must be a table")
        return None
    variant = data.get("variant")
    if variant is None:
        errors.append("potential.variant: required key is missing")
        return None
    if variant not in VARIANTS:
        errors.append(f"potential.variant: must be one of {list(VARIANTS)}, got {variant!r}")
        return None
    allowed = {"variant", "dim"} | _VARIANT_KEYS[variant]
    for k in data:
        if k not in allowed:
            errors.append(f"potential: unknown key '{k}' for variant {variant!r}")
    dim = data.get("dim")
    if dim is None:
        errors.append("potential.dim: required key is missing")
        return None
    if not (_is_int(dim) and dim >= 1):
        errors.append(f"potential.dim: must be an integer >= 1, got {dim!r}")
        return None
    kwargs = {k: data[k] for k in data if k in _VARIANT_KEYS[variant]}
    cfg = FamilyConfig(variant=variant, dim=int(dim), **kwargs)
    for msg in cfg.validate():
        errors.append(f"potential: {msg}")
    return cfg


def _validate_kernel(data, seed, experiment, errors: list[str]) -> Optional[KernelSpec]:
    if not isinstance(data, dict):
        errors.append("kernel: must be a table")
        return None
    has_fixed = "h" in data or "T" in data
    has_schedule = "schedule" in data
    for k in data:
        if k not in ("h", "T", "schedule"):
            errors.append(f"kernel: unknown key '{k}'")
    if has_fixed and has_schedule:
        errors.append("kernel: give either (h, T) or schedule, not both")
        return None
    if has_schedule:
        if experiment in FIXED_KERNEL_ONLY:
            errors.append(
                f"kernel: experiment '{experiment}' requires a fixed-parameter kernel (h, T)"
            )
            return None
        sched = data["schedule"]
        if not (isinstance(sched, list) and sched):
            errors.append("kernel.schedule: must be a non-empty list of entries")
            return None
        entries = []
        local_ok = True
        for i, e in enumerate(sched):
            if not isinstance(e, dict):
                errors.append(f"kernel.schedule[{i}]: must be a table with weight, h, T")
                local_ok = False
                continue
            for k in e:
                if k not in ("weight", "h", "T"):
                    errors.append(f"kernel.schedule[{i}]: unknown key '{k}'")
            w, h, T = e.get("weight"), e.get("h"), e.get("T")
            if not (_is_num(w) and w >= 0):
                errors.append(f"kernel.schedule[{i}].weight: must be a number >= 0, got {w!r}")
                local_ok = False
            if not (_is_num(h) and h > 0):
                errors.append(f"kernel.schedule[{i}].h: must be a number > 0, got {h!r}")
                local_ok = False
            if not (_is_int(T) and T >= 1):
                errors.append(f"kernel.schedule[{i}].T: must be an integer >= 1, got {T!r}")
                local_ok = False
            if local_ok:
                entries.append(ScheduleEntry(weight=float(w), h=float(h), T=int(T)))
        if not local_ok:
            return None
        try:
            return RandomizedSchedule(tuple(entries))
        except ConfigurationError as exc:
            errors.append(f"kernel.schedule: {exc}")
            return None
    # fixed-parameter kernel
    h, T = data.get("h"), data.get("T")
    ok = True
    if not (_is_num(h) and h > 0 and np.isfinite(h)):
        errors.append(f"kernel.h: must be a finite number > 0, got {h!r}")
        ok = False
    if not (_is_int(T) and T >= 1):
        errors.append(f"kernel.T: must be an integer >= 1, got {T!r}")
        ok = False
    if not ok or seed is None:
        return None
    return HmcParams(cfg=LeapfrogConfig(h=float(h), T=int(T)), seed=int(seed))


def validate_config(data: dict) -> ExperimentConfig:
    """Turn a parsed config mapping into a typed ExperimentConfig.

    Raises ConfigValidationError carrying *all* problems found.
    """
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigValidationError(["config root must be a table"])

    for k in data:
        if k not in _TOP_KEYS:
            errors.append(f"unknown key '{k}'")

    experiment = data.get("experiment")
    if experiment is None:
        errors.append("experiment: required key is missing")
    elif experiment not in EXPERIMENTS:
        errors.append(f"experiment: must be one of {list(EXPERIMENTS)}, got {experiment!r}")
        experiment = None

    seed = data.get("seed")
    if seed is None:
        errors.append("seed: required key is missing")
    elif not (_is_int(seed) and 0 <= seed < 2**64):
        errors.append(f"seed: must be an unsigned 64-bit integer, got {seed!r}")
        seed = None

    output_dir = data.get("output_dir")
    if output_dir is None:
        errors.append("output_dir: required key is missing")
    elif not isinstance(output_dir, str) or not output_dir:
        errors.append(f"output_dir: must be a non-empty string, got {output_dir!r}")
        output_dir = None

    potential = None
    if "potential" not in data:
        errors.append("potential: required table is missing")
    else:
        potential = _validate_potential(data["potential"], errors)

    kernel = None
    if "kernel" not in data:
        errors.append("kernel: required table is missing")
    else:
        kernel = _validate_kernel(data["kernel"], seed, experiment, errors)

    params: dict = {}
    if experiment is not None:
        spec = EXPERIMENT_PARAMS[experiment]
        given = data.get("params", {})
        if not isinstance(given, dict):
            errors.append("params: must be a table")
            given = {}
        known = {f.name for f in spec}
        for k in given:
            if k not in known:
                errors.append(f"params: unknown key '{k}' for experiment '{experiment}'")
        for f in spec:
            if f.name in given:
                v = _coerce(f, given[f.name], f"params.{f.name}", errors)
                if v is not None:
                    params[f.name] = v
            elif f.required:
                errors.append(f"params.{f.name}: required key is missing")
            elif f.default is not None:
                params[f.name] = f.default

        # cross-field constraints
        if potential is not None and not errors:
            d = potential.dim
            for key in ("q0", "p0"):
                if key in params and len(params[key]) != d:
                    errors.append(f"params.{key}: must have length dim = {d}")
            if experiment == "tv-decay" and d not in (1, 2):
                errors.append("potential.dim: tv-decay supports dim 1 or 2 only")
        if experiment == "check-assumptions" and "a1_beta" not in params and "a2_m" not in params:
            errors.append("params: check-assumptions needs at least one of a1_beta, a2_m")

    if errors:
        raise ConfigValidationError(errors)

    return ExperimentConfig(
        experiment=experiment,
        potential=potential,
        kernel=kernel,
        seed=int(seed),
        output_dir=Path(output_dir),
        params=params,
        raw=data,
    )


def load_config(path) -> ExperimentConfig:
    """Read a TOML file and validate it."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigValidationError([f"config file not found: {path}"]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigValidationError([f"config is not valid TOML: {exc}"]) from None
    return validate_config(data)
