"""JSON experiment configuration: schema, defaults and validation.

A config document looks like::

    {"experiment": "qrl_sweep", "output_dir": "out", "master_seed": 7,
     "params": {"n_realizations": 1000}}

Every parameter has a documented default (see :data:`SCHEMAS`); unknown
keys are errors. :func:`parse_config` reports every problem it finds, not
just the first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

EXPERIMENTS = ("qrl_sweep", "qrl_iterations", "lindblad_steady", "classify", "qrc")
TOP_LEVEL_KEYS = {"experiment", "output_dir", "master_seed", "params"}
MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Key:
    default: Any
    check: Callable[[Any], str | None]
    doc: str = ""


def _number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _integer(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def nonneg(v):
    return None if _number(v) and v >= 0 else "must be a nonnegative number"


def positive(v):
    return None if _number(v) and v > 0 else "must be a positive number"


def real(v):
    return None if _number(v) else "must be a finite number"


def unit_interval(v):
    return None if _number(v) and 0 <= v <= 1 else "must lie in [0,1]"


def open_unit(v):
    return None if _number(v) and 0 < v < 1 else "must lie in (0,1)"


def above_one(v):
    return None if _number(v) and v > 1 else "must be > 1"


def pos_int(v):
    return None if _integer(v) and v >= 1 else "must be a positive integer"


def nonneg_int(v):
    return None if _integer(v) and v >= 0 else "must be a nonnegative integer"


def optional(check):
    return lambda v: None if v is None else check(v)


def seed(v):
    return None if _integer(v) and 0 <= v <= MAX_SEED else "must be an integer in [0, 2**64)"


def one_of(*choices):
    return lambda v: None if v in choices else f"must be one of {', '.join(map(str, choices))}"


def list_of(check, min_len: int = 1):
    def _check(v):
        if not isinstance(v, list) or len(v) < min_len:
            return f"must be a list with at least {min_len} element(s)"
        for item in v:
            msg = check(item)
            if msg:
                return f"element {item!r} {msg}"
        return None

    return _check


def pair(check_a, check_b):
    def _check(v):
        if not isinstance(v, list) or len(v) != 2:
            return "must be a two-element list"
        return check_a(v[0]) or check_b(v[1])

    return _check


def string(v):
    return None if isinstance(v, str) and v else "must be a non-empty string"


def qubit_state(v):
    # [[re, im], [re, im]], normalized
    if not isinstance(v, list) or len(v) != 2 or any(
        not isinstance(a, list) or len(a) != 2 or not all(_number(x) for x in a) for a in v
    ):
        return "must be [[re0, im0], [re1, im1]]"
    norm = sum(x * x for a in v for x in a)
    return None if abs(norm - 1) <= 1e-10 else "must be a normalized qubit state"


_AGENT = {
    "reward_rate": Key(0.9, open_unit, "reward rate r"),
    "punishment_rate": Key(20 / 9, above_one, "punishment rate p"),
    "n_realizations": Key(1000, pos_int, "number of Monte Carlo realizations N"),
    "n_iterations": Key(500, pos_int, "iterations per realization K"),
    "initial_state": Key([[1.0, 0.0], [0.0, 0.0]], qubit_state, "initial agent state |phi_1> as [[re, im], [re, im]]"),
    "eigenbasis_angles": Key([1.0, 0.5], pair(real, real), "Bloch polar/azimuth angles of the ground state |->"),
    "window_fraction": Key(0.1, lambda v: None if _number(v) and 0 < v <= 1 else "must lie in (0,1]",
                           "final fraction of iterations averaged for F_a and W_a"),
}

SCHEMAS: dict[str, dict[str, Key]] = {
    "qrl_sweep": {
        "configs": Key([[0.0, 0.0], [0.5, 0.01], [0.5, 1.0]], list_of(pair(nonneg, nonneg)),
                       "(gamma0_tilde, T_tilde) pairs"),
        "tau_values": Key(None, optional(list_of(nonneg)), "explicit tau grid; null means tau_start/tau_stop/tau_num"),
        "tau_start": Key(0.0, nonneg, "first tau of the default grid"),
        "tau_stop": Key(4 * math.pi, nonneg, "last tau of the default grid"),
        "tau_num": Key(25, pos_int, "number of grid points"),
        **_AGENT,
    },
    "qrl_iterations": {
        "gamma0_values": Key([0.0, 0.5, 1.0], list_of(nonneg), "zero-temperature decay rates, one CSV each"),
        "T_tilde": Key(0.3, nonneg, "dimensionless temperature"),
        "tau_tilde": Key(1.0, nonneg, "dimensionless evolution time"),
        **_AGENT,
    },
    "lindblad_steady": {
        "reservoir": Key("thermal", one_of("thermal", "squeezed"), "two-qubit reservoir"),
        "nbar": Key(0.0, nonneg, "mean thermal excitation number (thermal)"),
        "r": Key(0.0, nonneg, "squeezing parameter (squeezed)"),
        "psi": Key(0.0, real, "squeezing angle (squeezed)"),
        "gamma": Key(1.0, positive, "spontaneous emission rate"),
        "n_random_states": Key(20, nonneg_int, "random initial states checked against long-time evolution"),
        "check_time": Key(100.0, positive, "evolution time (units of 1/gamma) for the check"),
    },
    "classify": {
        "dataset_csv": Key(None, optional(string), "f1,f2,f3,f4,label CSV; null means synthetic data"),
        "n_records": Key(40, pos_int, "synthetic dataset size"),
        "data_seed": Key(None, optional(seed), "synthetic data seed; null means master_seed"),
        "split_seed": Key(None, optional(seed), "train/test shuffle seed; null means master_seed"),
        "test_fraction": Key(0.3, open_unit, "fraction of records held out"),
        "reservoir": Key("thermal", one_of("thermal", "squeezed", "both"), "reservoir family searched"),
        "grid_step": Key(0.1, positive, "step of the nbar / r grid"),
    },
    "qrc": {
        "dataset_csv": Key(None, optional(string), "R,target,re_0,im_0,... CSV; null means synthetic data"),
        "n_qubits": Key(4, lambda v: None if _integer(v) and 2 <= v <= 8 else "must be an integer in [2,8]",
                        "qubits of the synthetic dataset"),
        "n_samples": Key(60, lambda v: None if _integer(v) and v >= 10 else "must be an integer >= 10",
                         "synthetic dataset size"),
        "n_gates": Key(None, optional(nonneg_int), "gates in the random circuit; null means 10 * n_qubits"),
        "data_seed": Key(None, optional(seed), "synthetic data seed; null means master_seed"),
        "circuit_seed": Key(None, optional(seed), "random circuit seed; null means master_seed"),
        "split_seed": Key(None, optional(seed), "train/test shuffle seed; null means master_seed"),
        "test_fraction": Key(0.3, open_unit, "fraction of samples held out"),
        "lambda": Key(1e-3, nonneg, "ridge regularization strength"),
        "noise_kinds": Key(["amplitude_damping", "phase_damping", "depolarizing"],
                           list_of(one_of("amplitude_damping", "phase_damping", "depolarizing"), min_len=0),
                           "noise channels compared against the noiseless baseline"),
        "p_values": Key([0.001, 0.005, 0.01, 0.05], list_of(unit_interval), "error probabilities"),
    },
}

_SEED_KEYS = ("data_seed", "split_seed", "circuit_seed")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    output_dir: str = "out"
    master_seed: int = 0

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "output_dir": self.output_dir,
            "master_seed": self.master_seed,
            "params": dict(self.params),
        }


def _validate(doc) -> tuple[list[str], ExperimentConfig | None]:
    errors: list[str] = []
    if not isinstance(doc, dict):
        return ["config must be a JSON object"], None
    for key in sorted(set(doc) - TOP_LEVEL_KEYS):
        errors.append(f"unknown top-level key {key!r}")
    exp = doc.get("experiment")
    if exp is None:
        errors.append("missing required key 'experiment'")
    elif exp not in EXPERIMENTS:
        errors.append(f"unknown experiment {exp!r}; expected one of {', '.join(EXPERIMENTS)}")
        exp = None
    out = doc.get("output_dir", "out")
    if string(out):
        errors.append("output_dir must be a non-empty string")
    master = doc.get("master_seed", 0)
    if seed(master):
        errors.append("master_seed must be an integer in [0, 2**64)")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        errors.append("params must be a JSON object")
        params = {}
    resolved = {}
    if exp is not None:
        schema = SCHEMAS[exp]
        for key in sorted(set(params) - set(schema)):
            errors.append(f"unknown parameter {key!r} for experiment {exp}")
        for key, entry in schema.items():
            value = params.get(key, entry.default)
            msg = entry.check(value)
            if msg:
                errors.append(f"{key} {msg}")
            resolved[key] = value
        if not errors:
            if exp == "qrl_sweep" and resolved["tau_values"] is None and resolved["tau_stop"] < resolved["tau_start"]:
                errors.append("tau_stop must not be smaller than tau_start")
            for key in _SEED_KEYS:
                if key in resolved and resolved[key] is None:
                    resolved[key] = master
    if errors:
        return errors, None
    return [], ExperimentConfig(exp, resolved, out, master)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config, filling defaults.

    Raises
    ------
    ConfigError
        Carrying the full list of problems in ``.errors``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON: {exc}"]) from None
    errors, cfg = _validate(doc)
    if errors:
        raise ConfigError(errors)
    return cfg


def describe_schema() -> str:
    """Human-readable list of parameters and defaults, used by ``--help``."""
    lines = []
    for exp, schema in SCHEMAS.items():
        lines.append(f"{exp}:")
        for key, entry in schema.items():
            lines.append(f"  {key} = {json.dumps(entry.default)}  {entry.doc}")
    return "\n".join(lines)
