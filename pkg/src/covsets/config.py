"""Experiment configuration: TOML parsing and validation.

Schema (all sections optional unless the experiment kind needs them)::

    kind = "hit-prob"        # bt-index | nesting-check | cover-sim | dim-est |
                             # hit-prob | percolate | limsup-hit
    seed = 12345             # master seed, unsigned 64-bit
    trials = 100
    depth = 14               # K: deepest block / level
    jobs = 0                 # worker processes, 0 = all cores
    out = "results"

    [space]                  # or: preset = "base2" | "base3-cantor" | "base-m-full"
    base = 3
    alphabet = [0, 1, 2]

    [sequence]
    kind = "power"           # power | profile | list
    alpha0 = "0.2"           # exact rational as a string, or a float
    # counts = { "5" = 6 }   # profile: block -> n_k
    # radii = ["1/2", "1/4"] # list

    [target]                 # or: preset = "whole" | "cantor"; or point = [digits]
    levels = [[0, 2]]
    cyclic = true

    [options]                # kind-specific knobs, see ``experiments``
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .covering import TargetSet
from .errors import ConfigError
from .process import PRESETS, preset_space
from .sequences import RadiusSequence
from .space import DigitSpace

KINDS = ("bt-index", "nesting-check", "cover-sim", "dim-est", "hit-prob", "percolate",
         "limsup-hit")
_NEEDS_SEQUENCE = {"bt-index", "cover-sim", "dim-est", "hit-prob"}
_NEEDS_TARGET = {"dim-est", "hit-prob", "percolate", "limsup-hit"}
_OPTIONS = {
    "bt-index": {"window", "alpha", "tol", "gap_c"},
    "nesting-check": {"k_max"},
    "cover-sim": {"window", "gap_c"},
    "hit-prob": {"window", "gap_c"},
    "dim-est": {"m0", "mode", "window", "gap_c"},
    "percolate": {"t", "p", "copies", "convention"},
    "limsup-hit": {"gamma1", "gamma2", "field", "dependence", "doubled", "window",
                   "count_levels"},
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    trials: int = 100
    depth: int = 12
    jobs: int = 0
    out: str = "results"
    space: dict = field(default_factory=dict)
    sequence: dict = field(default_factory=dict)
    target: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "trials": self.trials,
                "depth": self.depth, "jobs": self.jobs, "out": self.out,
                "space": self.space, "sequence": self.sequence, "target": self.target,
                "options": self.options}

    # -- builders; each raises ConfigError naming the offending field ----
    def build_space(self) -> DigitSpace:
        cfg = self.space
        try:
            if "preset" in cfg:
                if cfg["preset"] not in PRESETS:
                    raise ConfigError("space.preset", f"unknown preset {cfg['preset']!r}")
                return preset_space(cfg["preset"], cfg.get("base"))
            if "base" not in cfg:
                raise ConfigError("space.base", "missing")
            return DigitSpace.from_config(cfg)
        except (TypeError, ValueError) as exc:
            raise ConfigError("space", str(exc)) from exc

    def build_sequence(self, space: DigitSpace) -> RadiusSequence:
        cfg = self.sequence
        kind = cfg.get("kind", "power")
        base = int(cfg.get("base", space.base))
        if base != space.base:
            raise ConfigError("sequence.base", "must equal the space base")
        try:
            if kind == "power":
                if "alpha0" not in cfg:
                    raise ConfigError("sequence.alpha0", "missing")
                return RadiusSequence.power_law(Fraction(str(cfg["alpha0"])), base,
                                                grid=int(cfg.get("grid", 48)))
            if kind == "profile":
                return RadiusSequence.block_profile(cfg["counts"], base)
            if kind == "list":
                return RadiusSequence.explicit([Fraction(str(r)) for r in cfg["radii"]], base)
        except KeyError as exc:
            raise ConfigError(f"sequence.{exc.args[0]}", "missing") from exc
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError("sequence", str(exc)) from exc
        raise ConfigError("sequence.kind", f"unknown sequence kind {kind!r}")

    def build_target(self, space: DigitSpace) -> TargetSet:
        cfg = self.target
        try:
            if cfg.get("preset", "whole" if not cfg else None) == "whole":
                return TargetSet.whole(space)
            if cfg.get("preset") == "cantor":
                G = TargetSet.cantor()
            elif "point" in cfg:
                G = TargetSet.point(space.base, cfg["point"], cfg.get("tail_digit", 0))
            elif "levels" in cfg:
                G = TargetSet(space.base, tuple(tuple(x) for x in cfg["levels"]),
                              bool(cfg.get("cyclic", True)))
            else:
                raise ConfigError("target", "give preset, point or levels")
            G.check_inside(space, self.depth)
            return G
        except (TypeError, ValueError) as exc:
            raise ConfigError("target", str(exc)) from exc


def _int(data, key, default, lo=None):
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(key, f"must be >= {lo}")
    return value


def from_dict(data: dict) -> ExperimentConfig:
    if "kind" not in data:
        raise ConfigError("kind", "missing")
    if data["kind"] not in KINDS:
        raise ConfigError("kind", f"unknown kind {data['kind']!r}; choose from {KINDS}")
    for section in ("space", "sequence", "target", "options"):
        if not isinstance(data.get(section, {}), dict):
            raise ConfigError(section, "expected a table")
    unknown = set(data) - {"kind", "seed", "trials", "depth", "jobs", "out", "space",
                           "sequence", "target", "options"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    seed = _int(data, "seed", 0, 0)
    if seed >= 2**64:
        raise ConfigError("seed", "must fit in 64 bits")
    return ExperimentConfig(
        kind=data["kind"], seed=seed, trials=_int(data, "trials", 100, 1),
        depth=_int(data, "depth", 12, 1), jobs=_int(data, "jobs", 0, 0),
        out=str(data.get("out", "results")), space=dict(data.get("space", {})),
        sequence=dict(data.get("sequence", {})), target=dict(data.get("target", {})),
        options=dict(data.get("options", {})))


def load(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"TOML parse error: {exc}") from exc
    return from_dict(data)


def validate(cfg: ExperimentConfig) -> None:
    """Build every referenced object once so bad input fails before any trial runs."""
    unknown = set(cfg.options) - _OPTIONS[cfg.kind]
    if unknown:
        raise ConfigError(f"options.{sorted(unknown)[0]}", f"not an option of {cfg.kind}")
    space = cfg.build_space()
    if cfg.kind in _NEEDS_SEQUENCE:
        cfg.build_sequence(space)
    if cfg.kind in _NEEDS_TARGET:
        cfg.build_target(space)
