"""Run configuration: JSON file schema, validation, defaults.

Schema (all keys optional except ``dut``):

.. code-block:: json

    {
      "dut": "rle",                  // "rle" | "axi" | "bridge:<host>:<port>"
      "agent": "random",             // "random" | "cem"
      "episodes": 1000,
      "seed": 0,
      "multipliers": {"e3_partial_count": 1.0},
      "agent_params": {
        "batch_size": 50, "elite_frac": 0.2, "smoothing": 0.7,
        "sigma_min_frac": 0.05, "prob_floor": 0.01
      },
      "dut_params": {                // axi only
        "fifo_depth": 4, "drain_period": 3,
        "cycles_per_step": 100, "region_size": 4096
      },
      "out_dir": "runs/rle_random_seed0"
    }

Multiplier keys must name events of the chosen design; events left out get
multiplier 0. Every key the file leaves out is defaulted and the applied
defaults are echoed into the run's summary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import axi, rle
from .errors import ConfigError

AGENT_KINDS = ("random", "cem")

AGENT_DEFAULTS = {
    "batch_size": 50,
    "elite_frac": 0.2,
    "smoothing": 0.7,
    "sigma_min_frac": 0.05,
    "prob_floor": 0.01,
}

AXI_DUT_DEFAULTS = {
    "fifo_depth": 4,
    "drain_period": 3,
    "cycles_per_step": 100,
    "region_size": 0x1000,
}

# Bundled designs: event names for early validation, no params / axi params.
DUT_EVENT_NAMES = {"rle": rle.EVENT_NAMES, "axi": axi.EVENT_NAMES}
DUT_PARAM_KEYS = {"rle": (), "axi": tuple(AXI_DUT_DEFAULTS)}

_TOP_KEYS = {
    "dut",
    "agent",
    "episodes",
    "seed",
    "multipliers",
    "agent_params",
    "dut_params",
    "out_dir",
}


@dataclass(frozen=True)
class RunConfig:
    dut: str
    agent: str = "random"
    episodes: int = 1000
    seed: int = 0
    multipliers: dict = field(default_factory=dict)
    agent_params: dict = field(default_factory=lambda: dict(AGENT_DEFAULTS))
    dut_params: dict = field(default_factory=dict)
    out_dir: str = ""
    defaulted: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "dut": self.dut,
            "agent": self.agent,
            "episodes": self.episodes,
            "seed": self.seed,
            "multipliers": dict(self.multipliers),
            "agent_params": dict(self.agent_params),
            "dut_params": dict(self.dut_params),
            "out_dir": self.out_dir,
        }


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _is_real(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def build_config(raw: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a raw mapping and apply defaults; overrides win over the file."""
    _require(isinstance(raw, dict), "config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key: {sorted(unknown)[0]}")
    merged = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            _require(key in _TOP_KEYS, f"unknown config key: {key}")
            merged[key] = value

    defaulted = []

    _require("dut" in merged, "config key 'dut' is required")
    dut = merged["dut"]
    _require(isinstance(dut, str), "config key 'dut' must be a string")
    is_bridge = dut.startswith("bridge:")
    _require(
        dut in DUT_EVENT_NAMES or is_bridge,
        f"unknown dut {dut!r}: expected 'rle', 'axi' or 'bridge:<host>:<port>'",
    )
    if is_bridge:
        endpoint = dut[len("bridge:") :]
        host, sep, port = endpoint.rpartition(":")
        _require(
            bool(host) and sep == ":" and port.isdigit(),
            f"bridge endpoint {endpoint!r} must look like <host>:<port>",
        )

    agent = merged.get("agent")
    if agent is None:
        agent = "random"
        defaulted.append("agent")
    _require(agent in AGENT_KINDS, f"unknown agent {agent!r}: expected one of {AGENT_KINDS}")

    episodes = merged.get("episodes")
    if episodes is None:
        episodes = 1000
        defaulted.append("episodes")
    _require(_is_int(episodes) and episodes >= 1, "config key 'episodes' must be a positive integer")

    seed = merged.get("seed")
    if seed is None:
        seed = 0
        defaulted.append("seed")
    _require(_is_int(seed) and seed >= 0, "config key 'seed' must be a non-negative integer")

    multipliers = merged.get("multipliers")
    if multipliers is None:
        multipliers = {}
        defaulted.append("multipliers")
    _require(isinstance(multipliers, dict), "config key 'multipliers' must be an object")
    for name, value in multipliers.items():
        _require(_is_real(value), f"multiplier for {name!r} must be a number")
    if not is_bridge:
        known = set(DUT_EVENT_NAMES[dut])
        bad = set(multipliers) - known
        if bad:
            raise ConfigError(f"unknown event in multipliers: {sorted(bad)[0]!r}")
    multipliers = {str(k): float(v) for k, v in multipliers.items()}

    agent_params = dict(AGENT_DEFAULTS)
    given = merged.get("agent_params")
    if given is None:
        defaulted.extend(f"agent_params.{k}" for k in AGENT_DEFAULTS)
    else:
        _require(isinstance(given, dict), "config key 'agent_params' must be an object")
        bad = set(given) - set(AGENT_DEFAULTS)
        if bad:
            raise ConfigError(f"unknown agent_params key: {sorted(bad)[0]!r}")
        for key, value in given.items():
            _require(_is_real(value), f"agent_params.{key} must be a number")
        defaulted.extend(f"agent_params.{k}" for k in AGENT_DEFAULTS if k not in given)
        agent_params.update(given)
    _require(
        _is_int(agent_params["batch_size"]) and agent_params["batch_size"] >= 1,
        "agent_params.batch_size must be a positive integer",
    )
    _require(0.0 < agent_params["elite_frac"] <= 1.0, "agent_params.elite_frac must be in (0, 1]")
    _require(0.0 <= agent_params["smoothing"] <= 1.0, "agent_params.smoothing must be in [0, 1]")
    _require(agent_params["sigma_min_frac"] > 0.0, "agent_params.sigma_min_frac must be > 0")
    _require(agent_params["prob_floor"] >= 0.0, "agent_params.prob_floor must be >= 0")

    dut_params = merged.get("dut_params")
    if dut_params is None:
        dut_params = {}
        defaulted.append("dut_params")
    _require(isinstance(dut_params, dict), "config key 'dut_params' must be an object")
    allowed = DUT_PARAM_KEYS.get(dut, ())
    bad = set(dut_params) - set(allowed)
    if bad:
        raise ConfigError(f"unknown dut_params key for {dut!r}: {sorted(bad)[0]!r}")
    for key, value in dut_params.items():
        _require(_is_int(value), f"dut_params.{key} must be an integer")

    out_dir = merged.get("out_dir")
    if out_dir is None:
        out_dir = f"runs/{dut.replace(':', '_')}_{agent}_seed{seed}"
        defaulted.append("out_dir")
    _require(isinstance(out_dir, str) and out_dir, "config key 'out_dir' must be a non-empty string")

    return RunConfig(
        dut=dut,
        agent=agent,
        episodes=episodes,
        seed=seed,
        multipliers=multipliers,
        agent_params=agent_params,
        dut_params=dict(dut_params),
        out_dir=out_dir,
        defaulted=tuple(defaulted),
    )


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Load and validate a config file; ConfigError names the offending key."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    return build_config(raw, overrides)
