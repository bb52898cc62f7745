"""Scenario files for the experiment harness.

A scenario file is one flat YAML mapping validated against the explicit
schema below.  Unknown keys are rejected, every complaint carries the
source line it came from, and the list-valued axes (``n_ues``, ``crs``,
``r_over_r3``, ``policy``) expand into a cartesian sweep of concrete
:class:`bccrsim.sim.Scenario` objects.

Precedence everywhere: command-line flags > file values > schema defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional, Union

import yaml

from bccrsim.analytics import BccrConfig, ResourceModel
from bccrsim.barring import (
    DynamicEstimated,
    DynamicFullState,
    StaticBarring,
    static_schedule_probability,
)
from bccrsim.bccr import ClassBandPolicy, UniformRandomPolicy, two_class_bands
from bccrsim.sim import Scenario
from bccrsim.traffic import TrafficModel

__all__ = ["ConfigError", "SweepPoint", "ScenarioFile", "loads", "load"]

_BARRING_CHOICES = ("none", "static", "dynamic-full", "dynamic-estimated")
_POLICY_CHOICES = ("uniform", "class-band")

_KEYS = frozenset(
    {
        "n_ues",
        "crs",
        "r_over_r3",
        "policy",
        "barring",
        "static_pb",
        "window_s",
        "alpha",
        "beta",
        "preambles",
        "slot_period_s",
        "msg1_cost",
        "msg3_cost",
        "msg1_to_msg3_slots",
        "msg3_to_msg4_slots",
        "backoff_window",
        "retry_cap",
        "horizon_slots",
        "class_mix",
        "replications",
        "seed",
        "out_dir",
        "trace",
    }
)


class ConfigError(ValueError):
    """Scenario file rejected; the message names the offending line."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _parse_yaml_mapping(text: str) -> dict[str, tuple[Any, int]]:
    """Compose the document once so every key keeps its source line."""
    loader = yaml.SafeLoader(text)
    try:
        try:
            root = loader.get_single_node()
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError(f"not valid YAML: {exc}", line) from exc
        if root is None:
            return {}
        if not isinstance(root, yaml.MappingNode):
            raise ConfigError(
                "scenario file must be a key: value mapping",
                root.start_mark.line + 1,
            )
        items: dict[str, tuple[Any, int]] = {}
        for key_node, value_node in root.value:
            line = key_node.start_mark.line + 1
            key = loader.construct_object(key_node, deep=True)
            if not isinstance(key, str):
                raise ConfigError(f"keys must be strings, got {key!r}", line)
            if key in items:
                raise ConfigError(f"duplicate key {key!r}", line)
            items[key] = (loader.construct_object(value_node, deep=True), line)
        return items
    finally:
        loader.dispose()


def _as_int(
    key: str, value: Any, line: int, minimum: Optional[int] = None
) -> int:
    # bool is an int subclass; a YAML `true` must not pass as 1
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}", line)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}", line)
    return value


def _as_float(
    key: str,
    value: Any,
    line: int,
    minimum: Optional[float] = None,
    exclusive: bool = False,
    maximum: Optional[float] = None,
) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}", line)
    out = float(value)
    if minimum is not None:
        if exclusive and out <= minimum:
            raise ConfigError(f"{key}: must be > {minimum}, got {out}", line)
        if not exclusive and out < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {out}", line)
    if maximum is not None and out > maximum:
        raise ConfigError(f"{key}: must be <= {maximum}, got {out}", line)
    return out


def _as_str(key: str, value: Any, line: int, choices: tuple[str, ...]) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}", line)
    if value not in choices:
        raise ConfigError(
            f"{key}: must be one of {', '.join(choices)}; got {value!r}", line
        )
    return value


def _as_bool(key: str, value: Any, line: int) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key}: expected true or false, got {value!r}", line)
    return value


def _as_axis(key: str, value: Any, line: int, one) -> tuple:
    """A sweep axis: either one value or a non-empty list of them."""
    if isinstance(value, list):
        if not value:
            raise ConfigError(f"{key}: sweep list must not be empty", line)
        return tuple(one(key, item, line) for item in value)
    return (one(key, value, line),)


@dataclass(frozen=True)
class SweepPoint:
    """One cell of the sweep grid."""

    n_ues: int
    crs: int
    r_over_r3: float
    policy: str

    @property
    def levels(self) -> int:
        return 2**self.crs if self.crs > 0 else 1


@dataclass(frozen=True)
class ScenarioFile:
    """A validated scenario document, axes still unexpanded."""

    n_ues_axis: tuple[int, ...]
    crs_axis: tuple[int, ...]
    r_over_r3_axis: tuple[float, ...]
    policy_axis: tuple[str, ...]
    barring: str
    static_pb: Union[None, float, tuple[tuple[str, float], ...]]
    window_s: float
    alpha: float
    beta: float
    preambles: int
    slot_period_s: float
    msg1_cost: float
    msg3_cost: float
    msg1_to_msg3_slots: int
    msg3_to_msg4_slots: int
    backoff_window: int
    retry_cap: Optional[int]
    horizon_slots: int
    class_mix: tuple[tuple[str, float], ...]
    replications: int
    seed: Optional[int]
    out_dir: Optional[str]
    trace: bool

    def sweep_points(self) -> tuple[SweepPoint, ...]:
        """Cartesian product of the axes in fixed (n, crs, cost, policy)
        order; output rows follow this order whatever the worker pool
        does."""
        return tuple(
            SweepPoint(n_ues=n, crs=k, r_over_r3=r, policy=p)
            for n in self.n_ues_axis
            for k in self.crs_axis
            for r in self.r_over_r3_axis
            for p in self.policy_axis
        )

    def retry_cycle_slots(self) -> float:
        """Mean slots between a failed attempt and its retry."""
        return (
            self.msg1_to_msg3_slots
            + self.msg3_to_msg4_slots
            + (self.backoff_window + 1) / 2.0
        )

    def barring_policy(
        self, n_ues: int
    ) -> Union[StaticBarring, DynamicFullState, DynamicEstimated]:
        if self.barring == "none":
            return StaticBarring(0.0)
        if self.barring == "static":
            if self.static_pb is None:
                return StaticBarring(
                    static_schedule_probability(
                        n_ues, self.preambles, self.retry_cycle_slots()
                    )
                )
            if isinstance(self.static_pb, tuple):
                return StaticBarring(dict(self.static_pb))
            return StaticBarring(self.static_pb)
        if self.barring == "dynamic-full":
            return DynamicFullState()
        return DynamicEstimated()

    def scenario(
        self, point: SweepPoint, *, seed: int, replicate_index: int = 0
    ) -> Scenario:
        """Materialize one sweep cell into a runnable scenario."""
        bccr: Optional[BccrConfig] = None
        policy: Union[UniformRandomPolicy, ClassBandPolicy, None] = None
        if point.crs > 0:
            bccr = BccrConfig.from_crs_count(
                point.crs, crs_cost=point.r_over_r3 * self.msg3_cost
            )
            if point.policy == "class-band":
                policy = two_class_bands(bccr.levels)
            else:
                policy = UniformRandomPolicy(bccr.levels)
        return Scenario(
            traffic=TrafficModel(
                n_ues=point.n_ues,
                window_s=self.window_s,
                alpha=self.alpha,
                beta=self.beta,
            ),
            seed=seed,
            bccr=bccr,
            barring=self.barring_policy(point.n_ues),
            priority_policy=policy,
            resources=ResourceModel(
                msg1_cost=self.msg1_cost, msg3_cost=self.msg3_cost
            ),
            class_mix=dict(self.class_mix),
            preamble_count=self.preambles,
            slot_period=self.slot_period_s,
            msg1_to_msg3_slots=self.msg1_to_msg3_slots,
            msg3_to_msg4_slots=self.msg3_to_msg4_slots,
            backoff_window=self.backoff_window,
            retry_cap=self.retry_cap,
            horizon_slots=self.horizon_slots,
            replicate_index=replicate_index,
        )

    def as_dict(self) -> dict[str, Any]:
        """The fully resolved document, for echoing into output metadata."""
        return {
            "n_ues": list(self.n_ues_axis),
            "crs": list(self.crs_axis),
            "r_over_r3": list(self.r_over_r3_axis),
            "policy": list(self.policy_axis),
            "barring": self.barring,
            "static_pb": (
                dict(self.static_pb)
                if isinstance(self.static_pb, tuple)
                else self.static_pb
            ),
            "window_s": self.window_s,
            "alpha": self.alpha,
            "beta": self.beta,
            "preambles": self.preambles,
            "slot_period_s": self.slot_period_s,
            "msg1_cost": self.msg1_cost,
            "msg3_cost": self.msg3_cost,
            "msg1_to_msg3_slots": self.msg1_to_msg3_slots,
            "msg3_to_msg4_slots": self.msg3_to_msg4_slots,
            "backoff_window": self.backoff_window,
            "retry_cap": self.retry_cap,
            "horizon_slots": self.horizon_slots,
            "class_mix": dict(self.class_mix),
            "replications": self.replications,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "trace": self.trace,
        }


def _class_mix(value: Any, line: int) -> tuple[tuple[str, float], ...]:
    if not isinstance(value, dict) or not value:
        raise ConfigError(
            "class_mix: expected a non-empty mapping of class name to fraction",
            line,
        )
    mix: list[tuple[str, float]] = []
    for name, fraction in value.items():
        if not isinstance(name, str) or not name:
            raise ConfigError(f"class_mix: class names must be strings, got {name!r}", line)
        mix.append((name, _as_float(f"class_mix[{name}]", fraction, line, minimum=0.0)))
    total = sum(f for _, f in mix)
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"class_mix: fractions must sum to 1, got {total}", line)
    return tuple(mix)


def _static_pb(
    value: Any, line: int, class_names: tuple[str, ...]
) -> Union[float, tuple[tuple[str, float], ...]]:
    if isinstance(value, dict):
        if set(value) != set(class_names):
            raise ConfigError(
                "static_pb: per-class probabilities must name exactly the"
                f" classes in class_mix ({', '.join(class_names)})",
                line,
            )
        return tuple(
            (name, _as_float(f"static_pb[{name}]", p, line, minimum=0.0, maximum=1.0))
            for name, p in value.items()
        )
    return _as_float("static_pb", value, line, minimum=0.0, maximum=1.0)


def loads(text: str) -> ScenarioFile:
    """Parse and validate a scenario document."""
    items = _parse_yaml_mapping(text)
    for key, (_, line) in items.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", line)

    def get(key: str, default: Any = None) -> tuple[Any, int, bool]:
        if key in items:
            value, line = items[key]
            return value, line, True
        return default, 0, False

    value, line, present = get("n_ues")
    if not present:
        raise ConfigError("n_ues is required")
    n_ues_axis = _as_axis("n_ues", value, line, lambda k, v, ln: _as_int(k, v, ln, 1))

    value, line, present = get("crs", 0)
    crs_axis = _as_axis("crs", value, line, lambda k, v, ln: _as_int(k, v, ln, 0))

    value, line, present = get("r_over_r3", 0.04)
    r_axis = _as_axis(
        "r_over_r3", value, line, lambda k, v, ln: _as_float(k, v, ln, 0.0)
    )

    value, line, present = get("policy", "uniform")
    policy_axis = _as_axis(
        "policy", value, line, lambda k, v, ln: _as_str(k, v, ln, _POLICY_CHOICES)
    )

    value, line, present = get("barring", "dynamic-estimated")
    barring = _as_str("barring", value, line, _BARRING_CHOICES) if present else value

    value, line, present = get("class_mix")
    class_mix = (
        _class_mix(value, line) if present else (("default", 1.0),)
    )
    class_names = tuple(name for name, _ in class_mix)

    value, line, present = get("static_pb")
    static_pb = _static_pb(value, line, class_names) if present else None
    if static_pb is not None and barring != "static":
        raise ConfigError("static_pb is only meaningful with barring: static", line)

    if "class-band" in policy_axis and set(class_names) != {"prio", "nonprio"}:
        _, line, _ = get("policy")
        raise ConfigError(
            "policy class-band needs class_mix with exactly the classes"
            " prio and nonprio",
            line,
        )

    value, line, present = get("window_s", 1.0)
    window_s = _as_float("window_s", value, line, minimum=0.0, exclusive=True)
    value, line, present = get("alpha", 3.0)
    alpha = _as_float("alpha", value, line, minimum=0.0, exclusive=True)
    value, line, present = get("beta", 4.0)
    beta = _as_float("beta", value, line, minimum=0.0, exclusive=True)
    value, line, present = get("preambles", 30)
    preambles = _as_int("preambles", value, line, minimum=1)
    value, line, present = get("slot_period_s", 0.005)
    slot_period_s = _as_float("slot_period_s", value, line, minimum=0.0, exclusive=True)
    value, line, present = get("msg1_cost", 6.0)
    msg1_cost = _as_float("msg1_cost", value, line, minimum=0.0, exclusive=True)
    value, line, present = get("msg3_cost", 2.0)
    msg3_cost = _as_float("msg3_cost", value, line, minimum=0.0, exclusive=True)
    value, line, present = get("msg1_to_msg3_slots", 3)
    d13 = _as_int("msg1_to_msg3_slots", value, line, minimum=0)
    value, line, present = get("msg3_to_msg4_slots", 2)
    d34 = _as_int("msg3_to_msg4_slots", value, line, minimum=0)
    value, line, present = get("backoff_window", 20)
    backoff_window = _as_int("backoff_window", value, line, minimum=1)
    value, line, present = get("retry_cap")
    retry_cap = _as_int("retry_cap", value, line, minimum=0) if value is not None else None
    value, line, present = get("horizon_slots", 1_000_000)
    horizon_slots = _as_int("horizon_slots", value, line, minimum=1)
    value, line, present = get("replications", 10)
    replications = _as_int("replications", value, line, minimum=1)
    value, line, present = get("seed")
    seed = _as_int("seed", value, line, minimum=0) if value is not None else None
    value, line, present = get("out_dir")
    if value is not None and not isinstance(value, str):
        raise ConfigError(f"out_dir: expected a string, got {value!r}", line)
    out_dir = value
    value, line, present = get("trace", False)
    trace = _as_bool("trace", value, line) if present else False

    return ScenarioFile(
        n_ues_axis=n_ues_axis,
        crs_axis=crs_axis,
        r_over_r3_axis=r_axis,
        policy_axis=policy_axis,
        barring=barring,
        static_pb=static_pb,
        window_s=window_s,
        alpha=alpha,
        beta=beta,
        preambles=preambles,
        slot_period_s=slot_period_s,
        msg1_cost=msg1_cost,
        msg3_cost=msg3_cost,
        msg1_to_msg3_slots=d13,
        msg3_to_msg4_slots=d34,
        backoff_window=backoff_window,
        retry_cap=retry_cap,
        horizon_slots=horizon_slots,
        class_mix=class_mix,
        replications=replications,
        seed=seed,
        out_dir=out_dir,
        trace=trace,
    )


def load(path: str) -> ScenarioFile:
    """Read and validate the scenario file at ``path``."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    return loads(text)
