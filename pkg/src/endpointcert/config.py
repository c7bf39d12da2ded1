"""Scenario and sweep configuration files (YAML).

One scenario per file. Numbers that denote time or money are kept as exact
fractions (``0.1`` is read as 1/10). Ranges are written inline as
``{start: 0, stop: 100, step: 25}`` with ``stop`` inclusive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import yaml

from .adversary import STRATEGIES, AdversaryConfig, AdversaryConfigError
from .channels import ChannelError, ChannelProfile, preset

PROTOCOLS = ("basic1", "basic2", "p3", "p4")
SORTITION = ("distinct", "replace")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _frac(value, name: str) -> Fraction:
    if isinstance(value, bool) or value is None:
        raise ConfigError(name, f"expected a number, got {value!r}")
    try:
        return Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {value!r}") from None


def _int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {value}")
    return value


def _plain(x):
    """Render fractions as ints/floats/strings that parse back to the same value."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x)
        f = float(x)
        return f if Fraction(str(f)) == x else str(x)
    return x


def expand_range(value, name: str) -> list:
    """A scalar, a list, or an inclusive ``{start, stop, step}`` range."""
    if isinstance(value, Mapping):
        unknown = set(value) - {"start", "stop", "step"}
        if unknown:
            raise ConfigError(name, f"unknown range keys {sorted(unknown)}")
        try:
            start, stop = value["start"], value["stop"]
        except KeyError as exc:
            raise ConfigError(name, f"range needs {exc.args[0]!r}") from None
        step = value.get("step", 1)
        if step <= 0:
            raise ConfigError(name, "range step must be positive")
        out, x = [], start
        while x <= stop:
            out.append(x)
            x += step
        return out
    if isinstance(value, list):
        if not value:
            raise ConfigError(name, "grid must be non-empty")
        return list(value)
    return [value]


@dataclass
class TimingConfig:
    block_interval: Fraction = Fraction(15)
    propagation_delay: Fraction = Fraction(1)
    endpoint_delay: Fraction | None = None
    per_message_time: Fraction | None = None

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TimingConfig":
        _known(d, cls.__dataclass_fields__, "timing")
        t = cls()
        for key in ("block_interval", "propagation_delay", "endpoint_delay", "per_message_time"):
            if d.get(key) is not None:
                setattr(t, key, _frac(d[key], f"timing.{key}"))
        if t.block_interval <= 0:
            raise ConfigError("timing.block_interval", "must be positive")
        if t.propagation_delay < 0:
            raise ConfigError("timing.propagation_delay", "must be non-negative")
        if t.per_message_time is not None and t.per_message_time <= 0:
            raise ConfigError("timing.per_message_time", "must be positive")
        if t.endpoint_delay is not None and t.endpoint_delay < 0:
            raise ConfigError("timing.endpoint_delay", "must be non-negative")
        return t

    def to_dict(self) -> dict:
        return {k: _plain(v) for k, v in self.__dict__.items() if v is not None}


def _known(d: Mapping, allowed, where: str) -> None:
    if not isinstance(d, Mapping):
        raise ConfigError(where, "expected a mapping")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}" if where else sorted(unknown)[0], "unknown field")


def _adversary_from_dict(d: Mapping[str, Any]) -> AdversaryConfig:
    _known(d, AdversaryConfig.__dataclass_fields__, "adversary")
    strategy = d.get("strategy", "none")
    if strategy not in STRATEGIES:
        raise ConfigError("adversary.strategy", f"must be one of {', '.join(STRATEGIES)}")
    selection = d.get("selection", "random")
    if not (selection in ("first", "random") or (
            isinstance(selection, list) and all(isinstance(i, int) for i in selection))):
        raise ConfigError("adversary.selection", "must be 'first', 'random' or a list of ids")
    target = d.get("target_request")
    try:
        return AdversaryConfig(
            corrupted_count=_int(d.get("corrupted_count", 0), "adversary.corrupted_count", 0),
            cost_per_subject=_frac(d.get("cost_per_subject", 1), "adversary.cost_per_subject"),
            strategy=strategy,
            target_request=None if target is None else _int(target, "adversary.target_request", 0),
            selection=selection,
        )
    except AdversaryConfigError as exc:
        raise ConfigError("adversary", str(exc)) from None


def _adversary_to_dict(a: AdversaryConfig) -> dict:
    out = {
        "corrupted_count": a.corrupted_count,
        "cost_per_subject": _plain(a.cost_per_subject),
        "strategy": a.strategy,
        "selection": a.selection if isinstance(a.selection, str) else list(a.selection),
    }
    if a.target_request is not None:
        out["target_request"] = a.target_request
    return out


_PROFILE_KEYS = ("preset", "kind", "per_message_time", "delivery_delay", "spoofable",
                 "eavesdroppable", "cost_per_message")


@dataclass
class ScenarioConfig:
    protocol: str = "p3"
    population: int = 10
    committee: int = 3
    threshold: int | None = None
    sortition: str = "distinct"
    timing: TimingConfig = field(default_factory=TimingConfig)
    channel: str | dict = "email"
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    verifiers: int = 1
    offline_members: int = 0
    submit_time: Fraction | None = None
    seed: int = 0
    population_seed: int = 0
    trials: int = 1
    deadline_blocks: int = 10
    sweep: dict | None = None

    @property
    def k_bar(self) -> int:
        return self.committee if self.threshold is None else self.threshold

    def channel_profile(self) -> ChannelProfile:
        wanted = {"preset": self.channel} if isinstance(self.channel, str) else dict(self.channel)
        try:
            if "preset" in wanted:
                base = preset(wanted.pop("preset"))
                fields = {**base.__dict__, **wanted}
            else:
                missing = {"kind", "per_message_time", "delivery_delay", "spoofable", "eavesdroppable"} - set(wanted)
                if missing:
                    raise ConfigError("channel", f"explicit profile lacks {sorted(missing)}")
                fields = wanted
            if self.timing.per_message_time is not None:
                fields["per_message_time"] = self.timing.per_message_time
            if self.timing.endpoint_delay is not None:
                fields["delivery_delay"] = self.timing.endpoint_delay
            for key in ("per_message_time", "delivery_delay", "cost_per_message"):
                if key in fields:
                    fields[key] = _frac(fields[key], f"channel.{key}")
            return ChannelProfile(**fields)
        except ChannelError as exc:
            raise ConfigError("channel", str(exc)) from None

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ScenarioConfig":
        _known(d, cls.__dataclass_fields__, "")
        c = cls()
        if "protocol" in d:
            if d["protocol"] not in PROTOCOLS:
                raise ConfigError("protocol", f"must be one of {', '.join(PROTOCOLS)}")
            c.protocol = d["protocol"]
        for key, minimum in (("population", 1), ("committee", 1), ("verifiers", 0), ("offline_members", 0),
                             ("seed", 0), ("population_seed", 0), ("trials", 1), ("deadline_blocks", 1)):
            if key in d:
                setattr(c, key, _int(d[key], key, minimum))
        if d.get("threshold") is not None:
            c.threshold = _int(d["threshold"], "threshold", 1)
        if "sortition" in d:
            if d["sortition"] not in SORTITION:
                raise ConfigError("sortition", f"must be one of {', '.join(SORTITION)}")
            c.sortition = d["sortition"]
        if "timing" in d:
            c.timing = TimingConfig.from_dict(d["timing"] or {})
        if "channel" in d:
            ch = d["channel"]
            if isinstance(ch, Mapping):
                _known(ch, _PROFILE_KEYS, "channel")
                ch = dict(ch)
            elif not isinstance(ch, str):
                raise ConfigError("channel", "expected a preset name or a mapping")
            c.channel = ch
        if "adversary" in d:
            c.adversary = _adversary_from_dict(d["adversary"] or {})
        if d.get("submit_time") is not None:
            c.submit_time = _frac(d["submit_time"], "submit_time")
        if d.get("sweep") is not None:
            sweep = d["sweep"]
            _known(sweep, ("corrupted_count",), "sweep")
            values = expand_range(sweep["corrupted_count"], "sweep.corrupted_count")
            for v in values:
                _int(v, "sweep.corrupted_count", 0)
            c.sweep = {"corrupted_count": sweep["corrupted_count"]}
        c.validate()
        return c

    def validate(self) -> None:
        if self.k_bar > self.committee:
            raise ConfigError("threshold", f"must not exceed committee size {self.committee}")
        if self.sortition == "distinct" and self.committee > self.population:
            raise ConfigError("committee", f"cannot exceed population {self.population} with distinct sortition")
        if self.adversary.corrupted_count > self.population:
            raise ConfigError("adversary.corrupted_count", f"must not exceed population {self.population}")
        if self.offline_members > self.population:
            raise ConfigError("offline_members", f"must not exceed population {self.population}")
        if self.protocol in ("p3", "p4"):
            try:
                self.adversary.check_protocol(self.protocol)
            except AdversaryConfigError as exc:
                raise ConfigError("adversary.strategy", str(exc)) from None
        elif self.adversary.strategy not in ("none", "spoof"):
            raise ConfigError("adversary.strategy", "basic protocols support only 'none' or 'spoof'")
        if self.protocol == "basic1" and self.adversary.strategy == "spoof":
            raise ConfigError("adversary.strategy", "spoofing applies to responses sent from E (basic2)")
        if self.sweep is not None and self.adversary.strategy == "none":
            raise ConfigError("sweep", "a corrupted_count sweep needs an adversary strategy")
        self.channel_profile()

    def to_dict(self) -> dict:
        out = {
            "protocol": self.protocol,
            "population": self.population,
            "committee": self.committee,
            "threshold": self.threshold,
            "sortition": self.sortition,
            "timing": self.timing.to_dict(),
            "channel": self.channel if isinstance(self.channel, str) else {k: _plain(v) for k, v in self.channel.items()},
            "adversary": _adversary_to_dict(self.adversary),
            "verifiers": self.verifiers,
            "offline_members": self.offline_members,
            "submit_time": _plain(self.submit_time),
            "seed": self.seed,
            "population_seed": self.population_seed,
            "trials": self.trials,
            "deadline_blocks": self.deadline_blocks,
        }
        if self.sweep is not None:
            out["sweep"] = self.sweep
        return {k: v for k, v in out.items() if v is not None}


def _mapping(text: str) -> Mapping:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    if not isinstance(data, Mapping):
        raise ConfigError("<file>", "top level must be a mapping")
    return data


def parse_scenario(text: str) -> ScenarioConfig:
    return ScenarioConfig.from_dict(_mapping(text))


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text())


def dump_scenario(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


@dataclass
class SweepConfig:
    N: list[int] = field(default_factory=list)
    k: list[int] = field(default_factory=list)
    k_bar: list[int] = field(default_factory=list)
    m: list[int] = field(default_factory=list)
    timing: dict[str, list] | None = None
    montecarlo_trials: int = 0
    seed: int = 0

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SweepConfig":
        _known(d, ("security", "timing", "montecarlo_trials", "seed"), "")
        s = cls()
        if "security" in d:
            sec = d["security"]
            _known(sec, ("N", "k", "k_bar", "m"), "security")
            for key in ("N", "k", "k_bar", "m"):
                if key not in sec:
                    raise ConfigError(f"security.{key}", "missing grid")
                values = expand_range(sec[key], f"security.{key}")
                setattr(s, key, [_int(v, f"security.{key}") for v in values])
        if "timing" in d:
            tim = d["timing"]
            keys = ("block_interval", "propagation_delay", "request_wait", "endpoint_delay",
                    "per_message_time", "verifiers", "k")
            _known(tim, keys, "timing")
            grid = {}
            for key in keys:
                if key not in tim:
                    raise ConfigError(f"timing.{key}", "missing grid")
                values = expand_range(tim[key], f"timing.{key}")
                if key in ("verifiers", "k"):
                    grid[key] = [_int(v, f"timing.{key}", 0) for v in values]
                else:
                    grid[key] = [_frac(v, f"timing.{key}") for v in values]
            s.timing = grid
        if not s.N and s.timing is None:
            raise ConfigError("security", "a sweep needs a security or a timing grid")
        s.montecarlo_trials = _int(d.get("montecarlo_trials", 0), "montecarlo_trials", 0)
        s.seed = _int(d.get("seed", 0), "seed", 0)
        return s


def parse_sweep(text: str) -> SweepConfig:
    return SweepConfig.from_dict(_mapping(text))


def load_sweep(path: str | Path) -> SweepConfig:
    return parse_sweep(Path(path).read_text())
