"""Flat key-value experiment configuration.

The grammar is one dotted key per line, `section.key = value`, with `#`
comments and blank lines ignored.  There is no nesting and no quoting;
list values are whitespace-separated tokens.  Every key is registered
below with its type, so typos fail loudly with the offending line
number.  One file can feed several subcommands: each command reads the
keys it needs and ignores the rest of the registry.

Subspace states are given as `subspace.states = 00 11`, each token
either a computational bitstring or a comma-separated complex amplitude
list (`0.7071067811865476,0,0,0.7071067811865476j`) of length 2^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .core import StateVector
from .hamiltonians import IsingParams
from .training import OptimizerConfig, SubspaceBasis


class ConfigError(ValueError):
    """Config file problem with, when known, the 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


# key -> parser kind; kinds are resolved by _convert below
_REGISTRY = {
    "model.n_qubits": "int",
    "model.j": "float",
    "model.g": "float",
    "model.h": "float",
    "schedule.dt": "float",
    "schedule.n_steps": "int",
    "trotter.order": "int",
    "ansatz.family": "str",
    "ansatz.layers": "int",
    "optimizer.kind": "str",
    "optimizer.halting_threshold": "float",
    "optimizer.max_iterations": "int_or_none",
    "optimizer.learning_rate": "float",
    "subspace.states": "tokens",
    "training_set": "str",
    "random_sweep_count": "int",
    "shots": "int",
    "seed": "int",
    "output_path": "str",
    "bounds.f_basis": "floats",
    "bounds.f_plus": "floats",
    "bounds.f_minus": "float_or_none",
    "bounds.tol": "float",
    "grid.theta_points": "int",
    "grid.phi_points": "int",
    "sweep.epsilons": "floats",
    "sweep.theta": "float",
    "entanglement.theta_points": "int",
    "entanglement.subset": "tokens",
    "warmstart.dt": "float",
    "warmstart.r": "float_or_auto",
    "warmstart.r_fraction": "float",
    "warmstart.r0": "float",
    "warmstart.samples": "int",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved configuration shared by every subcommand."""

    model: IsingParams = IsingParams(n_qubits=2)
    dt: float = 0.1
    n_steps: int = 30
    trotter_order: int = 2
    ansatz_family: str = "su4-block"
    ansatz_layers: int = 1
    optimizer: OptimizerConfig = OptimizerConfig()
    subspace_specs: tuple[str, ...] = ("00", "11")
    training_set: str = "full"
    random_sweep_count: int = 500
    shots: int = 0
    seed: int = 0
    output_path: str = ""
    f_basis: tuple[float, ...] = (0.99, 0.99)
    f_plus: tuple[float, ...] = (0.99,)
    f_minus: Optional[float] = None
    bound_tol: float = 1e-8
    theta_points: int = 21
    phi_points: int = 21
    sweep_epsilons: tuple[float, ...] = (0.001, 0.005, 0.01, 0.05)
    sweep_theta: float = math.pi / 2
    entanglement_theta_points: int = 9
    entanglement_subset: tuple[int, ...] = ()
    warmstart_dt: float = 0.02
    warmstart_r: Optional[float] = None  # None means r_fraction * sqrt(r2_max)
    warmstart_r_fraction: float = 0.99
    warmstart_r0: float = 0.5
    warmstart_samples: int = 10_000
    _basis: SubspaceBasis = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("schedule.dt must be positive")
        if self.n_steps < 0:
            raise ConfigError("schedule.n_steps must be >= 0")
        if self.random_sweep_count < 0:
            raise ConfigError("random_sweep_count must be >= 0")
        if self.shots < 0:
            raise ConfigError("shots must be >= 0")
        basis = _parse_subspace(self.subspace_specs, self.model.n_qubits)
        object.__setattr__(self, "_basis", basis)

    @property
    def basis(self) -> SubspaceBasis:
        return self._basis

    def to_mapping(self) -> dict[str, str]:
        """Resolved values under their config keys, for the run manifest."""
        out = {
            "model.n_qubits": str(self.model.n_qubits),
            "model.j": _fmt(self.model.J),
            "model.g": _fmt(self.model.g),
            "model.h": _fmt(self.model.h),
            "schedule.dt": _fmt(self.dt),
            "schedule.n_steps": str(self.n_steps),
            "trotter.order": str(self.trotter_order),
            "ansatz.family": self.ansatz_family,
            "ansatz.layers": str(self.ansatz_layers),
            "optimizer.kind": self.optimizer.kind,
            "optimizer.halting_threshold": _fmt(self.optimizer.halting_threshold),
            "optimizer.max_iterations": ("none" if self.optimizer.max_iterations is None
                                         else str(self.optimizer.max_iterations)),
            "optimizer.learning_rate": _fmt(self.optimizer.learning_rate),
            "subspace.states": " ".join(self.subspace_specs),
            "training_set": self.training_set,
            "random_sweep_count": str(self.random_sweep_count),
            "shots": str(self.shots),
            "seed": str(self.seed),
            "output_path": self.output_path,
            "bounds.f_basis": " ".join(_fmt(v) for v in self.f_basis),
            "bounds.f_plus": " ".join(_fmt(v) for v in self.f_plus),
            "bounds.f_minus": "none" if self.f_minus is None else _fmt(self.f_minus),
            "bounds.tol": _fmt(self.bound_tol),
            "grid.theta_points": str(self.theta_points),
            "grid.phi_points": str(self.phi_points),
            "sweep.epsilons": " ".join(_fmt(v) for v in self.sweep_epsilons),
            "sweep.theta": _fmt(self.sweep_theta),
            "entanglement.theta_points": str(self.entanglement_theta_points),
            "entanglement.subset": " ".join(str(q) for q in self.entanglement_subset),
            "warmstart.dt": _fmt(self.warmstart_dt),
            "warmstart.r": "auto" if self.warmstart_r is None else _fmt(self.warmstart_r),
            "warmstart.r_fraction": _fmt(self.warmstart_r_fraction),
            "warmstart.r0": _fmt(self.warmstart_r0),
            "warmstart.samples": str(self.warmstart_samples),
        }
        return out


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _parse_subspace(specs, n_qubits: int) -> SubspaceBasis:
    states = []
    for spec in specs:
        if set(spec) <= {"0", "1"}:
            if len(spec) != n_qubits:
                raise ConfigError(
                    f"subspace.states: bitstring {spec!r} has {len(spec)} qubits, "
                    f"model has {n_qubits}")
            states.append(StateVector.from_bitstring(spec))
        elif "," in spec:
            try:
                amps = np.array([complex(tok) for tok in spec.split(",")])
            except ValueError:
                raise ConfigError(f"subspace.states: bad amplitude list {spec!r}")
            if amps.size != 2 ** n_qubits:
                raise ConfigError(
                    f"subspace.states: amplitude list has {amps.size} entries, "
                    f"expected {2 ** n_qubits}")
            states.append(StateVector(n_qubits, amps))
        else:
            raise ConfigError(f"subspace.states: unrecognized specifier {spec!r}")
    try:
        return SubspaceBasis(tuple(states), tuple(specs))
    except ValueError as exc:
        raise ConfigError(f"subspace.states: {exc}")


def _convert(key: str, raw: str, kind: str, line: int):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str":
            return raw
        if kind == "tokens":
            return tuple(raw.split())
        if kind == "floats":
            return tuple(float(tok) for tok in raw.split())
        if kind == "int_or_none":
            return None if raw == "none" else int(raw)
        if kind == "float_or_none":
            return None if raw == "none" else float(raw)
        if kind == "float_or_auto":
            return None if raw == "auto" else float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}", line)
    raise AssertionError(f"unhandled kind {kind}")


def parse_config_text(text: str) -> dict[str, tuple[object, int]]:
    """Parse to {key: (typed value, line number)}; every key validated."""
    seen: dict[str, tuple[object, int]] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _REGISTRY:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line "
                              f"{seen[key][1]})", lineno)
        seen[key] = (_convert(key, value, _REGISTRY[key], lineno), lineno)
    return seen


def resolve_config(parsed: dict[str, tuple[object, int]]) -> ExperimentConfig:
    def get(key, default):
        return parsed[key][0] if key in parsed else default

    try:
        model = IsingParams(n_qubits=get("model.n_qubits", 2),
                            J=get("model.j", 1.0), g=get("model.g", 1.0),
                            h=get("model.h", 1.0))
        optimizer = OptimizerConfig(
            kind=get("optimizer.kind", "sequential-minimal"),
            halting_threshold=get("optimizer.halting_threshold", 1e-4),
            max_iterations=get("optimizer.max_iterations", None),
            learning_rate=get("optimizer.learning_rate", 0.1),
            rng_seed=get("seed", 0))
        subset = tuple(int(tok) for tok in get("entanglement.subset", ()))
        return ExperimentConfig(
            model=model,
            dt=get("schedule.dt", 0.1),
            n_steps=get("schedule.n_steps", 30),
            trotter_order=get("trotter.order", 2),
            ansatz_family=get("ansatz.family", "su4-block"),
            ansatz_layers=get("ansatz.layers", 1),
            optimizer=optimizer,
            subspace_specs=tuple(get("subspace.states", ("00", "11"))),
            training_set=get("training_set", "full"),
            random_sweep_count=get("random_sweep_count", 500),
            shots=get("shots", 0),
            seed=get("seed", 0),
            output_path=get("output_path", ""),
            f_basis=get("bounds.f_basis", (0.99, 0.99)),
            f_plus=get("bounds.f_plus", (0.99,)),
            f_minus=get("bounds.f_minus", None),
            bound_tol=get("bounds.tol", 1e-8),
            theta_points=get("grid.theta_points", 21),
            phi_points=get("grid.phi_points", 21),
            sweep_epsilons=get("sweep.epsilons", (0.001, 0.005, 0.01, 0.05)),
            sweep_theta=get("sweep.theta", math.pi / 2),
            entanglement_theta_points=get("entanglement.theta_points", 9),
            entanglement_subset=subset,
            warmstart_dt=get("warmstart.dt", 0.02),
            warmstart_r=get("warmstart.r", None),
            warmstart_r_fraction=get("warmstart.r_fraction", 0.99),
            warmstart_r0=get("warmstart.r0", 0.5),
            warmstart_samples=get("warmstart.samples", 10_000),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}")
    return resolve_config(parse_config_text(text))


def override(config: ExperimentConfig, **changes) -> ExperimentConfig:
    """Copy with replacements; CLI flags land here."""
    current = {f.name: getattr(config, f.name) for f in fields(config)
               if f.name != "_basis"}
    if "seed" in changes and "optimizer" not in changes:
        current["optimizer"] = OptimizerConfig(
            kind=config.optimizer.kind,
            halting_threshold=config.optimizer.halting_threshold,
            max_iterations=config.optimizer.max_iterations,
            learning_rate=config.optimizer.learning_rate,
            rng_seed=changes["seed"])
    current.update(changes)
    return ExperimentConfig(**current)
