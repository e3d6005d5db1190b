"""Run configuration: YAML documents checked against a versioned JSON schema.

Units in the file are the lab ones (MHz, nm, mm^2, us); conversion to SI
happens only when building library objects.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import jsonschema
import yaml

from .couplings import ExperimentParams
from .polarizability import ExcitedLevel, TransitionManifold
from .scenarios import GEOMETRIES
from .tensor_algebra import half

__all__ = [
    "SCHEMA_VERSION",
    "SCHEMA",
    "ConfigError",
    "ManifoldConfig",
    "ExperimentConfig",
    "ScenarioSection",
    "SweepConfig",
    "KernelConfig",
    "OutputConfig",
    "RunConfig",
    "load_config",
    "apply_overrides",
]

SCHEMA_VERSION = 1

_spin = {"anyOf": [{"type": "number", "minimum": 0}, {"type": "string", "pattern": r"^\d+(/2)?$"}]}
_pos = {"type": "number", "exclusiveMinimum": 0}

SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "alignqnd run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "manifold": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ground_f": _spin,
                "j_ground": _spin,
                "j_excited": _spin,
                "nuclear_i": _spin,
                "wavelength_nm": _pos,
                "gamma_mhz": _pos,
                "excited_levels": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["f", "offset_mhz"],
                        "properties": {"f": _spin, "offset_mhz": {"type": "number"}},
                    },
                },
            },
        },
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "atoms_n": {"type": "number", "minimum": 0},
                "photons_n": {"type": "number", "minimum": 0},
                "beam_area_mm2": _pos,
                "pulse_duration_us": _pos,
                "detuning_mhz": {"type": "number"},
                "include_upper_in_noise": {"type": "boolean"},
            },
        },
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "geometry": {"enum": list(GEOMETRIES)},
                "include_noise": {"type": "boolean"},
                "larmor_phase": {"type": "number"},
                "compensate_light_shift": {"type": "boolean"},
                "kappa_v": {"type": ["number", "null"]},
                "kappa_t": {"type": ["number", "null"]},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "start": {"type": "number"},
                "stop": {"type": "number"},
                "steps": {"type": "integer", "minimum": 2},
                "normalized": {"type": "boolean"},
            },
        },
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kappa_t": {"type": "number", "minimum": 0, "maximum": 1},
                "grid": {"type": "integer", "minimum": 64},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": ["string", "null"]},
                "format": {"enum": ["csv", "json-lines"]},
            },
        },
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``path: message`` strings."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _spin_out(v) -> Union[int, str]:
    h = half(v)
    return h.twice // 2 if h.is_integer else str(h)


@dataclass
class ManifoldConfig:
    ground_f: Union[int, str] = 1
    j_ground: Union[int, str] = "1/2"
    j_excited: Union[int, str] = "3/2"
    nuclear_i: Union[int, str] = "3/2"
    wavelength_nm: float = 780.24
    gamma_mhz: float = 5.76
    excited_levels: List[Dict[str, Any]] = field(default_factory=lambda: [
        {"f": 0, "offset_mhz": 0.0},
        {"f": 1, "offset_mhz": 72.0},
        {"f": 2, "offset_mhz": 229.0},
    ])

    def build(self) -> TransitionManifold:
        return TransitionManifold(
            ground_f=half(self.ground_f), j_ground=half(self.j_ground),
            j_excited=half(self.j_excited), nuclear_i=half(self.nuclear_i),
            wavelength=self.wavelength_nm * 1e-9, gamma=self.gamma_mhz,
            excited_levels=tuple(ExcitedLevel(half(lv["f"]), float(lv["offset_mhz"]))
                                 for lv in self.excited_levels),
        )


@dataclass
class ExperimentConfig:
    atoms_n: float = 0.5e8
    photons_n: float = 0.5e8
    beam_area_mm2: float = 1.0
    pulse_duration_us: float = 0.5
    detuning_mhz: float = 38.0
    include_upper_in_noise: bool = False


@dataclass
class ScenarioSection:
    geometry: str = "double_pass"
    include_noise: bool = False
    larmor_phase: float = 0.0
    compensate_light_shift: bool = True
    kappa_v: Optional[float] = None
    kappa_t: Optional[float] = None


@dataclass
class SweepConfig:
    start: float = 5.0
    stop: float = 100.0
    steps: int = 500
    normalized: bool = True


@dataclass
class KernelConfig:
    kappa_t: float = 0.5
    grid: int = 512


@dataclass
class OutputConfig:
    path: Optional[str] = None
    format: str = "csv"


_SECTIONS = {
    "manifold": ManifoldConfig,
    "experiment": ExperimentConfig,
    "scenario": ScenarioSection,
    "sweep": SweepConfig,
    "kernel": KernelConfig,
    "output": OutputConfig,
}


@dataclass
class RunConfig:
    """Whole configuration; defaults describe the cold rubidium D2 setup."""

    manifold: ManifoldConfig = field(default_factory=ManifoldConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> Dict[str, Any]:
        d = {"schema_version": SCHEMA_VERSION}
        d.update(asdict(self))
        m = d["manifold"]
        for key in ("ground_f", "j_ground", "j_excited", "nuclear_i"):
            m[key] = _spin_out(m[key])
        m["excited_levels"] = [{"f": _spin_out(lv["f"]), "offset_mhz": float(lv["offset_mhz"])}
                               for lv in m["excited_levels"]]
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        validate(data)
        kw = {}
        for name, klass in _SECTIONS.items():
            section = data.get(name) or {}
            known = {f.name for f in fields(klass)}
            kw[name] = klass(**{k: copy.deepcopy(v) for k, v in section.items() if k in known})
        cfg = cls(**kw)
        cfg.check()
        return cfg

    def check(self):
        """Physics-level checks beyond the schema."""
        errors = []
        try:
            manifold = self.manifold.build()
        except (ValueError, TypeError) as exc:
            errors.append(f"manifold: {exc}")
            manifold = None
        if manifold is not None:
            try:
                self.params(manifold)
            except ValueError as exc:
                errors.append(f"experiment: {exc}")
        if self.sweep.stop <= self.sweep.start:
            errors.append("sweep: stop must exceed start")
        if errors:
            raise ConfigError(errors)

    def params(self, manifold: Optional[TransitionManifold] = None) -> ExperimentParams:
        e = self.experiment
        return ExperimentParams(
            atoms_n=e.atoms_n, photons_n=e.photons_n, beam_area=e.beam_area_mm2 * 1e-6,
            pulse_duration=e.pulse_duration_us * 1e-6, probe_detuning=e.detuning_mhz,
            manifold=manifold or self.manifold.build(),
            include_upper_in_noise=e.include_upper_in_noise,
        )


def validate(data: Any) -> None:
    """Raise :class:`ConfigError` with one message per schema violation."""
    if not isinstance(data, dict):
        raise ConfigError(["<root>: configuration must be a mapping"])
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errs:
        raise ConfigError([f"{'.'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
                           for e in errs])


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Sequence[str] = ()) -> RunConfig:
    """Read YAML (or use defaults when ``path`` is None) and apply ``key=value`` overrides."""
    if path is None:
        data = RunConfig().to_dict()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError([f"{path}: {exc.strerror}"]) from None
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError([f"{path}: not valid YAML ({exc})"]) from None
        if data is None:
            data = {}
    data = apply_overrides(data, overrides)
    return RunConfig.from_dict(data)


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Set dotted keys, e.g. ``experiment.detuning_mhz=35.7``; values parse as YAML scalars."""
    data = copy.deepcopy(data) if data else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError([f"--set {item!r}: expected key=value"])
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError([f"--set {key}: {p} is not a section"])
        node[parts[-1]] = yaml.safe_load(raw)
    return data
