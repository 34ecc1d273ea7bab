"""Run configuration: a single self-describing YAML document.

Schema (defaults in parentheses):

model:
  lattice: {dim (1), sites_per_dim (5), physical_length (2*pi)}
  species: [{name, mass}, ...]          # optional; built-ins supply defaults
  interaction: {name, coupling_strength (1.0)}   # phi3 | phi3-full | scalar-yukawa | free
  coupling (0.1)                        # default numeric series coupling
  policy (shirokov)                     # shirokov | weidlich
  order (2)                             # truncation order N >= 1
numerics:
  per_mode_cutoff (4)
  total_cutoff (4)
  lambdas ([0.02, 0.04, 0.08, 0.16])
  time_horizon (6.0)                    # in lattice-spacing units
  dimension_limit (200000)
checks:
  residuals: {enabled (true), slope_tolerance (0.4)}
  oracle:    {enabled (true), block (2)}
  momentum:  {enabled (true), tolerance (1e-10)}
  equal_time: {enabled (false), times, lambdas, block (2), tolerance (1e-8)}
  spacelike:  {enabled (false), grid: [[x, y, tau], ...], lambdas,
               block (2), slope (2.0), slope_tolerance (0.3)}
output:
  formats (["json"])                    # json, csv

Unknown keys anywhere are rejected with their full key path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .models import BUILTIN_INTERACTIONS


class ConfigError(ValueError):
    """Schema violation, reported with the offending key path."""


def _require_mapping(value, path):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(mapping, allowed, path):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key (allowed: {sorted(allowed)})")


def _get(mapping, key, path, kind, default, *, positive=False, minimum=None):
    value = mapping.get(key, default)
    if value is None:
        raise ConfigError(f"{path}.{key}: required")
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(
            f"{path}.{key}: expected {kind.__name__}, got {value!r}"
        )
    if positive and not value > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {value}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {value}")
    return value


def _get_float_list(mapping, key, path, default):
    value = mapping.get(key, default)
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(f"{path}.{key}: expected a list of numbers, got {value!r}")
    return [float(v) for v in value]


@dataclass
class SpeciesConfig:
    name: str
    mass: float


@dataclass
class CheckToggle:
    enabled: bool = True
    params: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    # model
    dim: int = 1
    sites_per_dim: int = 5
    physical_length: float = 2.0 * math.pi
    species: list[SpeciesConfig] | None = None
    interaction: str = "phi3"
    coupling_strength: float = 1.0
    coupling: float = 0.1
    policy: str = "shirokov"
    order: int = 2
    # numerics
    per_mode_cutoff: int = 4
    total_cutoff: int = 4
    lambdas: list[float] = field(default_factory=lambda: [0.02, 0.04, 0.08, 0.16])
    time_horizon: float = 6.0
    dimension_limit: int = 200_000
    # checks
    checks: dict[str, CheckToggle] = field(default_factory=dict)
    # output
    formats: list[str] = field(default_factory=lambda: ["json"])

    def echo(self) -> dict:
        """The fully-defaulted configuration, embedded in every report."""
        return {
            "model": {
                "lattice": {
                    "dim": self.dim,
                    "sites_per_dim": self.sites_per_dim,
                    "physical_length": self.physical_length,
                },
                "species": [{"name": s.name, "mass": s.mass}
                            for s in (self.species or [])] or None,
                "interaction": {
                    "name": self.interaction,
                    "coupling_strength": self.coupling_strength,
                },
                "coupling": self.coupling,
                "policy": self.policy,
                "order": self.order,
            },
            "numerics": {
                "per_mode_cutoff": self.per_mode_cutoff,
                "total_cutoff": self.total_cutoff,
                "lambdas": self.lambdas,
                "time_horizon": self.time_horizon,
                "dimension_limit": self.dimension_limit,
            },
            "checks": {
                name: {"enabled": t.enabled, **t.params}
                for name, t in sorted(self.checks.items())
            },
            "output": {"formats": self.formats},
        }


_CHECK_DEFAULTS = {
    "residuals": {"enabled": True, "slope_tolerance": 0.4},
    "oracle": {"enabled": True, "block": 2, "slope_tolerance": 0.4},
    "momentum": {"enabled": True, "tolerance": 1e-10},
    "equal_time": {"enabled": False, "times": [0.0, 1.0, 2.0],
                   "lambdas": [0.0, 0.1], "block": 2, "tolerance": 1e-8},
    "spacelike": {"enabled": False, "grid": [], "lambdas": [0.05, 0.1, 0.2],
                  "block": 2, "slope": 2.0, "slope_tolerance": 0.3},
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML configuration document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    doc = _require_mapping(doc, "<root>")
    _reject_unknown(doc, {"model", "numerics", "checks", "output"}, "<root>")

    cfg = RunConfig()

    model = _require_mapping(doc.get("model"), "model")
    _reject_unknown(model, {"lattice", "species", "interaction", "coupling",
                            "policy", "order"}, "model")
    lattice = _require_mapping(model.get("lattice"), "model.lattice")
    _reject_unknown(lattice, {"dim", "sites_per_dim", "physical_length"},
                    "model.lattice")
    cfg.dim = _get(lattice, "dim", "model.lattice", int, cfg.dim, minimum=1)
    cfg.sites_per_dim = _get(lattice, "sites_per_dim", "model.lattice", int,
                             cfg.sites_per_dim, minimum=1)
    if cfg.sites_per_dim % 2 == 0:
        raise ConfigError("model.lattice.sites_per_dim: must be odd "
                          f"(mode set closed under k -> -k), got {cfg.sites_per_dim}")
    cfg.physical_length = _get(lattice, "physical_length", "model.lattice", float,
                               cfg.physical_length, positive=True)

    species = model.get("species")
    if species is not None:
        if not isinstance(species, list):
            raise ConfigError("model.species: expected a list")
        parsed = []
        for i, entry in enumerate(species):
            entry = _require_mapping(entry, f"model.species[{i}]")
            _reject_unknown(entry, {"name", "mass"}, f"model.species[{i}]")
            name = _get(entry, "name", f"model.species[{i}]", str, None)
            mass = entry.get("mass")
            if not isinstance(mass, (int, float)) or isinstance(mass, bool) or mass <= 0:
                raise ConfigError(
                    f"model.species[{i}] ({name!r}): mass must be a positive number, "
                    f"got {mass!r}"
                )
            parsed.append(SpeciesConfig(name=name, mass=float(mass)))
        cfg.species = parsed

    interaction = _require_mapping(model.get("interaction"), "model.interaction")
    _reject_unknown(interaction, {"name", "coupling_strength"}, "model.interaction")
    cfg.interaction = _get(interaction, "name", "model.interaction", str,
                           cfg.interaction)
    if cfg.interaction not in BUILTIN_INTERACTIONS:
        raise ConfigError(
            f"model.interaction.name: unknown interaction {cfg.interaction!r} "
            f"(built-ins: {list(BUILTIN_INTERACTIONS)})"
        )
    cfg.coupling_strength = _get(interaction, "coupling_strength",
                                 "model.interaction", float, cfg.coupling_strength)
    cfg.coupling = _get(model, "coupling", "model", float, cfg.coupling)
    cfg.policy = _get(model, "policy", "model", str, cfg.policy)
    if cfg.policy not in ("shirokov", "weidlich"):
        raise ConfigError(f"model.policy: must be shirokov or weidlich, got {cfg.policy!r}")
    cfg.order = _get(model, "order", "model", int, cfg.order, minimum=1)

    numerics = _require_mapping(doc.get("numerics"), "numerics")
    _reject_unknown(numerics, {"per_mode_cutoff", "total_cutoff", "lambdas",
                               "time_horizon", "dimension_limit"}, "numerics")
    cfg.per_mode_cutoff = _get(numerics, "per_mode_cutoff", "numerics", int,
                               cfg.per_mode_cutoff, minimum=1)
    cfg.total_cutoff = _get(numerics, "total_cutoff", "numerics", int,
                            cfg.total_cutoff, minimum=1)
    cfg.lambdas = _get_float_list(numerics, "lambdas", "numerics", cfg.lambdas)
    cfg.time_horizon = _get(numerics, "time_horizon", "numerics", float,
                            cfg.time_horizon, positive=True)
    cfg.dimension_limit = _get(numerics, "dimension_limit", "numerics", int,
                               cfg.dimension_limit, minimum=1)

    checks = _require_mapping(doc.get("checks"), "checks")
    _reject_unknown(checks, set(_CHECK_DEFAULTS), "checks")
    for name, defaults in _CHECK_DEFAULTS.items():
        block = _require_mapping(checks.get(name), f"checks.{name}")
        _reject_unknown(block, set(defaults), f"checks.{name}")
        merged = {**defaults, **block}
        enabled = merged.pop("enabled")
        if not isinstance(enabled, bool):
            raise ConfigError(f"checks.{name}.enabled: expected a boolean")
        cfg.checks[name] = CheckToggle(enabled=enabled, params=merged)

    output = _require_mapping(doc.get("output"), "output")
    _reject_unknown(output, {"formats"}, "output")
    formats = output.get("formats", cfg.formats)
    if not isinstance(formats, list) or not all(isinstance(f, str) for f in formats):
        raise ConfigError("output.formats: expected a list of strings")
    for f in formats:
        if f not in ("json", "csv"):
            raise ConfigError(f"output.formats: unknown format {f!r} (json, csv)")
    cfg.formats = formats

    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
