"""Run configuration files.

A run config is one JSON document:

    {
      "n_devices": 5,
      "partition": [[0, 14], [14, 28], ...],          // optional
      "network": {"b": 15e6, "l": 0.05, "p": 0.005,
                  "medium": "shared", "mtu": 1500},
      "T": 0.5,
      "transport": "simulated",                        // or "socket"
      "netem_mode": "expected",                        // or "stochastic"
      "seeds": {"weights": 1, "data": 7, "run": 3},
      "compute": {"edge_flops_per_s": 2e9,
                  "central_flops_per_s": 1e10},        // optional
      "energy": {"tx_power_w": 0.8, "per_byte_j": 0},  // optional
      "paths": {"weights": "w.bin", "data": "data/", "out": "out/"},
      "socket": {"central_addr": "127.0.0.1", "port": 7301}   // socket mode
    }

Validation failures name the offending field with a JSON pointer. The
environment variable EPIC_SEED, when set, overrides seeds/run.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .netem import EnergyModel, NetworkProfile
from .runtime import ComputeModel, InfraConfig, partition_receivers

ENV_SEED = "EPIC_SEED"


@dataclass(frozen=True)
class RunConfig:
    infra: InfraConfig
    weights_seed: int
    data_seed: int
    paths: dict[str, str]
    socket: dict


def _fail(pointer: str, why: str):
    raise ConfigError(f"{pointer}: {why}")


def _get(doc: dict, pointer: str, key: str, kind, required=True, default=None):
    here = f"{pointer}/{key}"
    if key not in doc:
        if required:
            _fail(here, "missing required field")
        return default
    val = doc[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is int and isinstance(val, float) and val.is_integer():
        val = int(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        _fail(here, f"expected {kind.__name__}, got {type(val).__name__}")
    return val


def _positive(pointer: str, key: str, val):
    if val <= 0:
        _fail(f"{pointer}/{key}", f"must be positive, got {val}")
    return val


def parse_run_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        _fail("", "run config must be a JSON object")

    n_devices = _positive("", "n_devices", _get(doc, "", "n_devices", int))
    deadline = _positive("", "T", _get(doc, "", "T", float))
    transport = _get(doc, "", "transport", str, required=False, default="simulated")
    if transport not in ("simulated", "socket"):
        _fail("/transport", f"must be 'simulated' or 'socket', got {transport!r}")
    netem_mode = _get(doc, "", "netem_mode", str, required=False, default="expected")

    net_doc = _get(doc, "", "network", dict)
    try:
        network = NetworkProfile(
            bandwidth_bps=_positive("/network", "b", _get(net_doc, "/network", "b", float)),
            base_latency_s=_get(net_doc, "/network", "l", float),
            loss_rate=_get(net_doc, "/network", "p", float, required=False, default=0.0),
            medium=_get(net_doc, "/network", "medium", str, required=False, default="dedicated"),
            mtu_bytes=_get(net_doc, "/network", "mtu", int, required=False, default=1500),
        )
    except ConfigError as exc:
        if str(exc).startswith("/network"):
            raise
        raise ConfigError(f"/network: {exc}") from exc

    partition = doc.get("partition")
    if partition is None:
        slices = partition_receivers(70, n_devices)
    else:
        if not isinstance(partition, list):
            _fail("/partition", "expected a list of [start, stop] pairs")
        slices = []
        for i, pair in enumerate(partition):
            if not (isinstance(pair, list) and len(pair) == 2):
                _fail(f"/partition/{i}", "expected a [start, stop] pair")
            slices.append((int(pair[0]), int(pair[1])))
        slices = tuple(slices)

    comp_doc = _get(doc, "", "compute", dict, required=False, default={})
    compute = ComputeModel(
        edge_flops_per_s=_get(comp_doc, "/compute", "edge_flops_per_s", float,
                              required=False, default=2e9),
        central_flops_per_s=_get(comp_doc, "/compute", "central_flops_per_s", float,
                                 required=False, default=1e10),
    )
    energy_doc = _get(doc, "", "energy", dict, required=False, default={})
    energy = EnergyModel(
        tx_power_w=_get(energy_doc, "/energy", "tx_power_w", float, required=False, default=0.8),
        per_byte_j=_get(energy_doc, "/energy", "per_byte_j", float, required=False, default=0.0),
    )

    seeds = _get(doc, "", "seeds", dict, required=False, default={})
    run_seed = _get(seeds, "/seeds", "run", int, required=False, default=0)
    env_seed = os.environ.get(ENV_SEED)
    if env_seed is not None:
        try:
            run_seed = int(env_seed)
        except ValueError:
            _fail("/seeds/run", f"{ENV_SEED} must be an integer, got {env_seed!r}")
    weights_seed = _get(seeds, "/seeds", "weights", int, required=False, default=1)
    data_seed = _get(seeds, "/seeds", "data", int, required=False, default=7)

    paths_doc = _get(doc, "", "paths", dict, required=False, default={})
    paths = {k: str(v) for k, v in paths_doc.items()}

    socket_doc = _get(doc, "", "socket", dict, required=False, default={})
    if transport == "socket":
        _get(socket_doc, "/socket", "central_addr", str)
        _get(socket_doc, "/socket", "port", int)

    try:
        infra = InfraConfig(
            n_devices=n_devices,
            partition=slices,
            network=network,
            deadline_s=deadline,
            transport=transport,
            compute=compute,
            energy=energy,
            netem_mode=netem_mode,
            seed=run_seed,
        )
    except ConfigError as exc:
        raise ConfigError(f"/: {exc}") from exc
    return RunConfig(
        infra=infra,
        weights_seed=weights_seed,
        data_seed=data_seed,
        paths=paths,
        socket=dict(socket_doc),
    )


def load_run_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"run config {p} does not exist")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"run config {p} is not valid JSON: {exc}") from exc
    return parse_run_config(doc)
