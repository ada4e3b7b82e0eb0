"""Configuration: defaults, exhaustive validation, canonical digest.

The config is a JSON document with five sections (world, topology, workload,
ledger, experiment). Validation is strict: unknown sections or keys are hard
errors, every value is type- and range-checked, and the error message names
the offending key path and the constraint it violated. Silent defaults and
ignored typos are how simulation results stop being reproducible.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import ConfigError

# Default parameter set. The paper behind this architecture publishes no
# numeric topology, task or rate values, so these are declared defaults tuned
# to make the cloud-only baseline saturate near the top of the default user
# sweep while the fog-edge tiers stay uncongested. All of them are plain
# config keys and are recorded in every output's metadata.
DEFAULTS: dict = {
    "world": {
        "width": 1000.0,
        "height": 1000.0,
        "regions_x": 10,
        "regions_y": 10,
        "cell": 40.0,
        "proximity_radius": 30.0,
        "avatar_speed": 1.5,         # world units per second
        "movement_tick_ms": 1000.0,  # per-avatar tick cadence, phase-staggered
    },
    "topology": {
        "devices_per_fog": 2,
        "edges_per_region": 1,
        "device_mips": 500,
        "fog_mips": 8_000,
        "edge_mips": 20_000,
        "cloud_mips": 100_000,
        "links": {
            "device_fog": {"propagation_ms": 2.0, "bandwidth_mbps": 100},
            "fog_edge": {"propagation_ms": 5.0, "bandwidth_mbps": 1_000},
            "edge_cloud": {"propagation_ms": 15.0, "bandwidth_mbps": 10_000},
        },
    },
    "workload": {
        "user_count": 500,
        "message_rate_per_user_per_s": 0.05,
        "tx_rate_per_user_per_s": 0.01,
        "profiles": {
            "spatial_navigation": {"length_mi": 50, "upload_bytes": 2000, "download_bytes": 1000},
            "collision_detection": {
                "base_length_mi": 20,
                "per_neighbor_mi": 1,
                "upload_bytes": 1000,
                "download_bytes": 500,
            },
            "social_interaction": {"length_mi": 30, "upload_bytes": 1000, "download_bytes": 1000},
            "transaction_validation": {"length_mi": 2000, "upload_bytes": 2000, "download_bytes": 500},
            "universe_simulation": {"length_mi": 10_000, "period_ms": 1000.0,
                                    "upload_bytes": 0, "download_bytes": 0},
        },
    },
    "ledger": {
        "batch_size": 10,
        "tx_amount_max": 1000,
    },
    "experiment": {
        "horizon_ms": 600_000.0,
        "warmup_ms": 100_000.0,
        "replications": 3,
        "base_seed": 42,
        "user_count_sweep": [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000],
        "tx_rate_sweep": [1, 2, 5, 10, 20, 50],  # aggregate transactions per second
    },
}


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


# key path -> (checker, constraint description)
_CHECKS = {
    "world.width": (lambda v: _is_num(v) and v > 0, "number > 0"),
    "world.height": (lambda v: _is_num(v) and v > 0, "number > 0"),
    "world.regions_x": (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    "world.regions_y": (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    "world.cell": (lambda v: _is_num(v) and v > 0, "number > 0"),
    "world.proximity_radius": (lambda v: _is_num(v) and v > 0, "number > 0"),
    "world.avatar_speed": (lambda v: _is_num(v) and v >= 0, "number >= 0"),
    "world.movement_tick_ms": (lambda v: _is_num(v) and v > 0, "number > 0"),
    "topology.devices_per_fog": (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    "topology.edges_per_region": (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    "topology.device_mips": (lambda v: _is_int(v) and v > 0, "integer > 0"),
    "topology.fog_mips": (lambda v: _is_int(v) and v > 0, "integer > 0"),
    "topology.edge_mips": (lambda v: _is_int(v) and v > 0, "integer > 0"),
    "topology.cloud_mips": (lambda v: _is_int(v) and v > 0, "integer > 0"),
    "workload.user_count": (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    "workload.message_rate_per_user_per_s": (lambda v: _is_num(v) and v >= 0, "number >= 0"),
    "workload.tx_rate_per_user_per_s": (lambda v: _is_num(v) and v >= 0, "number >= 0"),
    "ledger.batch_size": (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    "ledger.tx_amount_max": (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    "experiment.horizon_ms": (lambda v: _is_num(v) and v >= 0, "number >= 0"),
    "experiment.warmup_ms": (lambda v: _is_num(v) and v >= 0, "number >= 0"),
    "experiment.replications": (lambda v: _is_int(v) and v >= 1, "integer >= 1"),
    "experiment.base_seed": (lambda v: _is_int(v) and 0 <= v < 2**64, "integer in [0, 2^64)"),
}

_LINK_CHECKS = {
    "propagation_ms": (lambda v: _is_num(v) and v >= 0, "number >= 0"),
    "bandwidth_mbps": (lambda v: _is_int(v) and v > 0, "integer > 0"),
}

_PROFILE_CHECKS = {
    "length_mi": (lambda v: _is_int(v) and v > 0, "integer > 0"),
    "base_length_mi": (lambda v: _is_int(v) and v > 0, "integer > 0"),
    "per_neighbor_mi": (lambda v: _is_int(v) and v >= 0, "integer >= 0"),
    "upload_bytes": (lambda v: _is_int(v) and v >= 0, "integer >= 0"),
    "download_bytes": (lambda v: _is_int(v) and v >= 0, "integer >= 0"),
    "period_ms": (lambda v: _is_num(v) and v > 0, "number > 0"),
}


def _deep_merge(base: dict, override: dict, path: str) -> dict:
    merged = dict(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {here!r} must be a section (object)")
            merged[key] = _deep_merge(base[key], value, here)
        else:
            merged[key] = value
    return merged


def _check_leaves(cfg: dict, checks: dict, path: str) -> None:
    for key, value in cfg.items():
        here = f"{path}.{key}" if path else key
        if isinstance(value, dict):
            _check_leaves(value, checks, here)
            continue
        check = checks.get(here)
        if check is None:
            # keys under links.*/profiles.* validate by leaf name
            leaf = here.rsplit(".", 1)[-1]
            check = _LINK_CHECKS.get(leaf) or _PROFILE_CHECKS.get(leaf)
        if check is None:
            continue
        ok, constraint = check[0](value), check[1]
        if not ok:
            raise ConfigError(f"config key {here!r} = {value!r}: must be {constraint}")


def resolve_config(overrides: dict | None = None) -> dict:
    """Merge overrides into the defaults and validate everything.

    Returns a fresh, fully-populated config dict. Raises ConfigError naming
    the bad key and the constraint it violates.
    """
    overrides = overrides or {}
    if not isinstance(overrides, dict):
        raise ConfigError("config root must be an object")
    cfg = _deep_merge(DEFAULTS, overrides, "")
    _check_leaves(cfg, _CHECKS, "")

    world = cfg["world"]
    if world["proximity_radius"] > world["cell"]:
        raise ConfigError(
            "config key 'world.proximity_radius' "
            f"= {world['proximity_radius']!r}: must be <= world.cell "
            f"({world['cell']!r}) so neighbor search stays a 3x3 cell scan"
        )
    exp = cfg["experiment"]
    if exp["warmup_ms"] > exp["horizon_ms"]:
        raise ConfigError(
            f"config key 'experiment.warmup_ms' = {exp['warmup_ms']!r}: "
            f"must be <= experiment.horizon_ms ({exp['horizon_ms']!r})"
        )
    for name in ("user_count_sweep", "tx_rate_sweep"):
        values = exp[name]
        if not isinstance(values, list) or not values:
            raise ConfigError(f"config key 'experiment.{name}': must be a non-empty list")
        for v in values:
            if not _is_num(v) or v <= 0:
                raise ConfigError(f"config key 'experiment.{name}': values must be numbers > 0")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError(f"config key 'experiment.{name}': values must be strictly increasing")
        if name == "user_count_sweep" and not all(_is_int(v) for v in values):
            raise ConfigError("config key 'experiment.user_count_sweep': values must be integers")
    return cfg


def load_config(path: str | Path) -> dict:
    """Read a JSON config file and resolve it against the defaults."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return resolve_config(data)


def config_digest(cfg: dict) -> str:
    """SHA-256 over the canonical JSON rendering of a resolved config."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()
