"""Distributed execution engine.

Phase 1: every edge worker encodes its receiver slice and ships the
latent. Phase 2: the central collector gathers latents in a hash-map
buffer keyed by (sample_id, device_id), tolerating out-of-order and
duplicate arrivals, and decodes as soon as all devices reported or the
per-sample timing budget is exhausted, whichever comes first. The budget
is T - T_d, where T is the end-to-end deadline and T_d the decoder's own
latency; late frames are counted and discarded, never applied
retroactively.

Two clock domains share this logic. Simulated mode derives every
timestamp from the network emulator plus a declared parametric compute
model (flop counts over configured device rates), which makes full runs
bit-reproducible. Socket mode (see transport.py) uses wall time.

Baseline pipelines for comparison:

* CENTRALIZED: edges forward raw slices; the central node runs the whole
  model.
* FLA: each edge runs a complete single-device model over its slice and
  the central node stitches the per-device column spans together.
* SLA: edges encode; the central node averages the received latents and
  decodes without cross-attention.
"""

from __future__ import annotations

import statistics
import threading
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, PartitionError
from .metrics import ssim
from .model import (
    LatentSet,
    LatentVector,
    ModelConfig,
    ModelWeights,
    VelocityMap,
    decode,
    decode_without_attention,
    encode,
    forward_full,
    fuse,
    validate_partition,
)
from .netem import EnergyModel, NetworkProfile, transmit_group
from .numerics import as_f32


class PipelineMode(Enum):
    CENTRALIZED = "centralized"
    FLA = "fla"
    SLA = "sla"
    EPIC = "epic"


# ---------------------------------------------------------------------------
# compute model and cost estimators


@dataclass(frozen=True)
class ComputeModel:
    """Declared device throughputs that turn flop counts into simulated
    seconds. These are configuration, not measurements."""

    edge_flops_per_s: float = 2e9
    central_flops_per_s: float = 1e10

    def __post_init__(self):
        if self.edge_flops_per_s <= 0 or self.central_flops_per_s <= 0:
            raise ConfigError("compute rates must be positive")


def encoder_flops(config: ModelConfig, n_t: int, width: int) -> int:
    """Multiply-add count (x2) of one encoder stack on an [C, n_t, width] slice."""
    h, w = n_t, width
    total = 0
    ch = config.encoder_channels
    for b in range(config.n_encoder_blocks):
        sw = 2 if w > 4 else 1
        ho = (h + 2 - 3) // 2 + 1
        wo = (w + 2 - 3) // sw + 1
        total += ho * wo * ch[b + 1] * ch[b] * 9 * 2
        h, w = ho, wo
    total += ch[-1] * h * w  # pooling
    return total


def fusion_flops(config: ModelConfig, k: int) -> int:
    dim, dk = config.latent_dim, config.d_k
    proj = 3 * k * dim * dk * 2
    attend = 2 * k * k * dk * 2
    out = k * dk * dim * 2
    return proj + attend + out


def _block_attention_flops(config: ModelConfig, c: int, h: int, w: int, k: int) -> int:
    dim, dk, dp = config.latent_dim, config.d_k, config.d_pos
    pixels = h * w
    q = pixels * (c + dp) * dk * 2
    kv = 2 * k * dim * dk * 2
    attend = 2 * pixels * k * dk * 2
    out = pixels * dk * c * 2
    return q + kv + attend + out


def decoder_flops(config: ModelConfig, k: int) -> int:
    """Cost of fuse + decode over k present latents."""
    if k < 1:
        raise ConfigError(f"decoder cost needs k >= 1, got {k}")
    total = fusion_flops(config, k)
    c0 = config.decoder_channels[0]
    h0, w0 = config.decoder_resolutions[0]
    total += config.latent_dim * c0 * h0 * w0 * 2
    for j in range(config.n_decoder_blocks):
        cin = config.decoder_channels[j]
        cout = config.decoder_channels[j + 1]
        h, w = config.decoder_resolutions[j + 1]
        total += h * w * cout * cin * 9 * 2
        total += _block_attention_flops(config, cout, h, w, k)
    ho, wo = config.output_dims
    total += ho * wo * config.decoder_channels[-1] * 2
    return total


def plain_decoder_flops(config: ModelConfig) -> int:
    """Cost of the attention-free decoder path (SLA central half)."""
    c0 = config.decoder_channels[0]
    h0, w0 = config.decoder_resolutions[0]
    total = config.latent_dim * c0 * h0 * w0 * 2
    for j in range(config.n_decoder_blocks):
        cin = config.decoder_channels[j]
        cout = config.decoder_channels[j + 1]
        h, w = config.decoder_resolutions[j + 1]
        total += h * w * cout * cin * 9 * 2
    ho, wo = config.output_dims
    total += ho * wo * config.decoder_channels[-1] * 2
    return total


def full_model_flops(config: ModelConfig, n_t: int, widths) -> int:
    total = sum(encoder_flops(config, n_t, w) for w in widths)
    return total + decoder_flops(config, len(list(widths)))


# ---------------------------------------------------------------------------
# infrastructure configuration


def partition_receivers(n_receivers: int = 70, n_devices: int = 5) -> tuple[tuple[int, int], ...]:
    """Contiguous near-equal receiver slices; the first n mod d are wider."""
    if not 1 <= n_devices <= n_receivers:
        raise ConfigError(
            f"n_devices must be in [1, {n_receivers}], got {n_devices}"
        )
    base, extra = divmod(n_receivers, n_devices)
    slices = []
    start = 0
    for i in range(n_devices):
        width = base + (1 if i < extra else 0)
        slices.append((start, start + width))
        start += width
    return tuple(slices)


@dataclass(frozen=True)
class InfraConfig:
    """Everything the runtime needs to place and time a run."""

    n_devices: int = 5
    partition: tuple[tuple[int, int], ...] = ()
    network: NetworkProfile = NetworkProfile()
    deadline_s: float = 0.5
    transport: str = "simulated"
    compute: ComputeModel = ComputeModel()
    energy: EnergyModel = EnergyModel()
    netem_mode: str = "expected"
    seed: int = 0
    # socket transport only; port 0 binds an ephemeral port
    socket_host: str = "127.0.0.1"
    socket_port: int = 0

    def __post_init__(self):
        if self.deadline_s <= 0:
            raise ConfigError(f"deadline must be > 0, got {self.deadline_s}")
        if self.transport not in ("simulated", "socket"):
            raise ConfigError(f"transport must be 'simulated' or 'socket', got {self.transport!r}")
        if self.netem_mode not in ("expected", "stochastic"):
            raise ConfigError(f"netem_mode must be 'expected' or 'stochastic', got {self.netem_mode!r}")
        if not self.partition:
            object.__setattr__(self, "partition", partition_receivers(70, self.n_devices))
        try:
            validate_partition(self.partition, self.partition[-1][1], self.n_devices)
        except PartitionError as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# hash-map buffer


class InsertOutcome(Enum):
    INSERTED = "inserted"
    DUPLICATE = "duplicate"
    STALE = "stale"


class _BufferState(Enum):
    COLLECTING = "collecting"
    RELEASED = "released"


@dataclass
class _BufferEntry:
    latents: dict[int, LatentVector] = field(default_factory=dict)
    arrivals: dict[int, float] = field(default_factory=dict)
    state: _BufferState = _BufferState.COLLECTING


class HashBuffer:
    """Out-of-order collector keyed by (sample_id, device_id).

    Inserts are idempotent per key; inserts after release or completion
    are counted as late and dropped. Safe for concurrent producers with a
    single consumer per sample.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._entries: dict[int, _BufferEntry] = {}
        self._completed: set[int] = set()
        self._late: dict[int, int] = {}

    def insert(self, sample_id: int, device_id: int, latent: LatentVector, t: float) -> InsertOutcome:
        with self._cond:
            if sample_id in self._completed:
                self._late[sample_id] = self._late.get(sample_id, 0) + 1
                return InsertOutcome.STALE
            entry = self._entries.setdefault(sample_id, _BufferEntry())
            if entry.state is not _BufferState.COLLECTING:
                self._late[sample_id] = self._late.get(sample_id, 0) + 1
                return InsertOutcome.STALE
            if device_id in entry.latents:
                return InsertOutcome.DUPLICATE
            entry.latents[device_id] = latent
            entry.arrivals[device_id] = t
            self._cond.notify_all()
            return InsertOutcome.INSERTED

    def insert_frame_latent(self, frame_latent: LatentVector, t: float) -> InsertOutcome:
        return self.insert(frame_latent.sample_id, frame_latent.device_id, frame_latent, t)

    def present_count(self, sample_id: int) -> int:
        with self._lock:
            entry = self._entries.get(sample_id)
            return 0 if entry is None else len(entry.latents)

    def finalize(self, sample_id: int, n_devices: int, deadline: float):
        """Close collection under the virtual clock.

        Returns (LatentSet, collect_time, released). collect_time is the
        last arrival when every device reported, or the deadline when the
        timeout release fired.
        """
        with self._cond:
            entry = self._entries.setdefault(sample_id, _BufferEntry())
            lset = LatentSet(n_devices)
            for lat in entry.latents.values():
                lset.add(lat)
            if len(entry.latents) == n_devices:
                collect_time = max(entry.arrivals.values())
                released = False
            else:
                collect_time = deadline
                released = True
            entry.state = _BufferState.RELEASED
            return lset, collect_time, released

    def collect_blocking(self, sample_id: int, n_devices: int, deadline_wall: float):
        """Wall-clock collection: wait until complete or the deadline."""
        with self._cond:
            while True:
                entry = self._entries.setdefault(sample_id, _BufferEntry())
                if len(entry.latents) == n_devices:
                    released = False
                    break
                remaining = deadline_wall - time.monotonic()
                if remaining <= 0:
                    released = True
                    break
                self._cond.wait(timeout=remaining)
            lset = LatentSet(n_devices)
            for lat in entry.latents.values():
                lset.add(lat)
            entry.state = _BufferState.RELEASED
            return lset, released

    def complete(self, sample_id: int) -> None:
        """Evict the sample; later frames for it are reported stale."""
        with self._cond:
            self._entries.pop(sample_id, None)
            self._completed.add(sample_id)

    def late_frames(self, sample_id: int) -> int:
        with self._lock:
            return self._late.get(sample_id, 0)


# ---------------------------------------------------------------------------
# run reports


@dataclass(frozen=True)
class SampleResult:
    sample_id: int
    status: str  # "ok" or "failed"
    mask: tuple[bool, ...]
    l_edge_s: float
    l_comm_s: float
    l_central_s: float
    l_total_s: float
    energy_j: float
    comm_bytes: int
    deadline_fired: bool
    deadline_met: bool
    late_frames: int
    ssim: float | None = None

    @property
    def comm_fraction_pct(self) -> float:
        return 100.0 * self.l_comm_s / self.l_total_s if self.l_total_s > 0 else 0.0


@dataclass
class RunReport:
    """Per-sample latency breakdown and totals for one pipeline run.

    l_edge is the slowest encode among the devices whose latents made the
    decode; l_comm is the remaining time until collection closed, so
    l_total = l_edge + l_comm + l_central always holds.
    """

    mode: PipelineMode
    n_devices: int
    profile_label: str
    deadline_s: float
    decode_budget_s: float
    rows: list[SampleResult] = field(default_factory=list)

    @property
    def ok_rows(self) -> list[SampleResult]:
        return [r for r in self.rows if r.status == "ok"]

    @property
    def total_energy_j(self) -> float:
        return sum(r.energy_j for r in self.rows)

    @property
    def total_comm_bytes(self) -> int:
        return sum(r.comm_bytes for r in self.rows)

    def mean(self, attr: str) -> float:
        rows = self.ok_rows
        if not rows:
            return 0.0
        return sum(getattr(r, attr) for r in rows) / len(rows)

    def mean_ssim(self) -> float | None:
        vals = [r.ssim for r in self.ok_rows if r.ssim is not None]
        return sum(vals) / len(vals) if vals else None


# ---------------------------------------------------------------------------
# helpers


def _as_wave(sample) -> np.ndarray:
    data = getattr(sample, "data", sample)
    return as_f32(data)


def _per_sample_drops(drop_devices, n_samples: int) -> list[frozenset[int]]:
    if drop_devices is None:
        return [frozenset()] * n_samples
    items = list(drop_devices)
    if items and isinstance(items[0], (list, tuple, set, frozenset)):
        if len(items) != n_samples:
            raise ConfigError(f"{len(items)} drop sets for {n_samples} samples")
        return [frozenset(int(d) for d in s) for s in items]
    return [frozenset(int(d) for d in items)] * n_samples


def _per_sample_delays(extra_delay_s, n_devices: int) -> dict[int, float]:
    if extra_delay_s is None:
        return {}
    return {int(d): float(v) for d, v in dict(extra_delay_s).items()}


def _maybe_ssim(vmap: VelocityMap, truth, velocity_range) -> float | None:
    if truth is None:
        return None
    gt = getattr(truth, "grid", None)
    if gt is None:
        gt = getattr(truth, "values", truth)
    return ssim(vmap.values, as_f32(gt), dynamic_range=velocity_range[1] - velocity_range[0])


def decode_time_budget(config: ModelConfig, compute: ComputeModel) -> float:
    """Simulated T_d: modeled cost of a full-mask fuse+decode."""
    return decoder_flops(config, config.n_devices) / compute.central_flops_per_s


def profile_decoder(weights: ModelWeights, trials: int = 5, seed: int = 1234) -> float:
    """One-time wall-clock profiling of the central decoder.

    Returns the median duration of fuse+decode over seeded dummy latents;
    socket mode uses this as T_d.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    cfg = weights.config
    durations = []
    for trial in range(trials):
        rng = np.random.Generator(np.random.Philox(key=(seed << 64) | trial))
        lset = LatentSet(cfg.n_devices)
        for d in range(cfg.n_devices):
            vals = rng.uniform(-1, 1, size=cfg.latent_dim).astype(np.float32)
            lset.add(LatentVector(values=vals, device_id=d))
        t0 = time.perf_counter()
        gl = fuse(lset, weights.fusion, cfg.n_heads)
        decode(gl, lset, weights)
        durations.append(time.perf_counter() - t0)
    return statistics.median(durations)


def _check_budget(deadline_s: float, decode_budget_s: float) -> None:
    if decode_budget_s >= deadline_s:
        raise ConfigError(
            f"decode budget T_d={decode_budget_s:.6g}s must be below the deadline "
            f"T={deadline_s:.6g}s"
        )


def _failed_row(sample_id, n_devices, deadline, t_d, energy_j, comm_bytes, late) -> SampleResult:
    return SampleResult(
        sample_id=sample_id,
        status="failed",
        mask=tuple([False] * n_devices),
        l_edge_s=0.0,
        l_comm_s=deadline,
        l_central_s=0.0,
        l_total_s=deadline,
        energy_j=energy_j,
        comm_bytes=comm_bytes,
        deadline_fired=True,
        deadline_met=True,
        late_frames=late,
        ssim=None,
    )


# ---------------------------------------------------------------------------
# the split pipeline


def run_epic(
    samples,
    weights: ModelWeights,
    infra: InfraConfig,
    extra_delay_s=None,
    drop_devices=None,
    ground_truth=None,
    collect_attention: list | None = None,
) -> tuple[list[VelocityMap | None], RunReport]:
    """Run the split pipeline over samples; see the module docstring.

    extra_delay_s maps device_id to an added edge-side delay (fault
    injection); drop_devices marks devices offline, either one set for all
    samples or one set per sample. A sample with no latents by the
    deadline is marked failed and the run continues.
    """
    cfg = weights.config
    if cfg.n_devices != infra.n_devices:
        raise ConfigError(
            f"weights built for {cfg.n_devices} devices, infra has {infra.n_devices}"
        )
    if infra.transport == "socket":
        from .transport import run_epic_socket

        return run_epic_socket(
            samples, weights, infra,
            extra_delay_s=extra_delay_s, drop_devices=drop_devices,
            ground_truth=ground_truth,
            host=infra.socket_host, port=infra.socket_port,
        )

    t_d = decode_time_budget(cfg, infra.compute)
    _check_budget(infra.deadline_s, t_d)
    deadline = infra.deadline_s - t_d
    delays = _per_sample_delays(extra_delay_s, cfg.n_devices)
    drops = _per_sample_drops(drop_devices, len(samples))
    latent_bytes = cfg.latent_dim * 4

    buffer = HashBuffer()
    maps: list[VelocityMap | None] = []
    report = RunReport(
        mode=PipelineMode.EPIC,
        n_devices=cfg.n_devices,
        profile_label=infra.network.label(),
        deadline_s=infra.deadline_s,
        decode_budget_s=t_d,
    )

    for idx, sample in enumerate(samples):
        wave = _as_wave(sample)
        slices = validate_partition(infra.partition, wave.shape[2], cfg.n_devices)
        dropped = drops[idx]
        active = [d for d in range(cfg.n_devices) if d not in dropped]

        latents = {}
        edge_t = {}
        for d, (a, b) in enumerate(slices):
            if d in dropped:
                continue
            latents[d] = encode(wave[:, :, a:b], weights.encoders[d], device_id=d, sample_id=idx)
            edge_t[d] = (
                encoder_flops(cfg, wave.shape[1], b - a) / infra.compute.edge_flops_per_s
                + delays.get(d, 0.0)
            )

        uplinks = transmit_group(
            [latent_bytes] * len(active),
            infra.network,
            infra.energy,
            mode=infra.netem_mode,
            seed=[infra.seed, idx],
            start_times=[edge_t[d] for d in active],
        )
        arrivals = sorted(
            zip((u.completion_s for u in uplinks), active), key=lambda item: (item[0], item[1])
        )
        energy_j = sum(u.energy_j for u in uplinks)
        comm_bytes = latent_bytes * len(active)

        on_time = [(t, d) for t, d in arrivals if t <= deadline]
        for t, d in on_time:
            buffer.insert(idx, d, latents[d], t)
        lset, collect_time, released = buffer.finalize(idx, cfg.n_devices, deadline)
        for t, d in arrivals:
            if t > deadline:
                buffer.insert(idx, d, latents[d], t)
        late = buffer.late_frames(idx)
        buffer.complete(idx)

        if len(lset) == 0:
            maps.append(None)
            report.rows.append(
                _failed_row(idx, cfg.n_devices, deadline, t_d, energy_j, comm_bytes, late)
            )
            continue

        gl = fuse(lset, weights.fusion, cfg.n_heads)
        vmap = decode(gl, lset, weights, attention_out=collect_attention)
        l_central = decoder_flops(cfg, len(lset)) / infra.compute.central_flops_per_s
        l_edge = max(edge_t[d] for d in lset.present_ids())
        l_total = collect_time + l_central
        gt = None if ground_truth is None else ground_truth[idx]
        maps.append(vmap)
        report.rows.append(
            SampleResult(
                sample_id=idx,
                status="ok",
                mask=tuple(bool(v) for v in lset.mask()),
                l_edge_s=l_edge,
                l_comm_s=collect_time - l_edge,
                l_central_s=l_central,
                l_total_s=l_total,
                energy_j=energy_j,
                comm_bytes=comm_bytes,
                deadline_fired=released,
                deadline_met=l_total <= infra.deadline_s,
                late_frames=late,
                ssim=_maybe_ssim(vmap, gt, cfg.velocity_range),
            )
        )
    return maps, report


# ---------------------------------------------------------------------------
# baseline pipelines


def _baseline_report(mode, cfg, infra, t_d) -> RunReport:
    return RunReport(
        mode=mode,
        n_devices=infra.n_devices,
        profile_label=infra.network.label(),
        deadline_s=infra.deadline_s,
        decode_budget_s=t_d,
    )


def run_baseline(
    mode: PipelineMode,
    samples,
    weights: ModelWeights,
    infra: InfraConfig,
    drop_devices=None,
    ground_truth=None,
) -> tuple[list[VelocityMap | None], RunReport]:
    """Comparison pipelines sharing the RunReport schema.

    CENTRALIZED and SLA take the same weights as the split pipeline; FLA
    needs single-device weights (one complete model per edge). Baselines
    have no timeout manager: they wait for every active device and the
    report simply records whether the deadline held. Offline devices are
    patched with zeros (CENTRALIZED raw columns), the range floor (FLA map
    spans) or dropped from the latent average (SLA).
    """
    if mode == PipelineMode.EPIC:
        return run_epic(samples, weights, infra, drop_devices=drop_devices,
                        ground_truth=ground_truth)
    if mode == PipelineMode.FLA:
        if weights.config.n_devices != 1:
            raise ConfigError("FLA needs single-device weights (a full model per edge)")
    elif weights.config.n_devices != infra.n_devices:
        raise ConfigError(
            f"weights built for {weights.config.n_devices} devices, infra has {infra.n_devices}"
        )

    cfg = weights.config
    drops = _per_sample_drops(drop_devices, len(samples))
    maps: list[VelocityMap | None] = []

    if mode == PipelineMode.CENTRALIZED:
        t_d = full_model_flops(cfg, 1000, [b - a for a, b in infra.partition]) / infra.compute.central_flops_per_s
        report = _baseline_report(mode, cfg, infra, t_d)
        for idx, sample in enumerate(samples):
            wave = _as_wave(sample)
            slices = validate_partition(infra.partition, wave.shape[2], cfg.n_devices)
            dropped = drops[idx]
            active = [d for d in range(cfg.n_devices) if d not in dropped]
            sizes = [wave[:, :, a:b].size * 4 for d, (a, b) in enumerate(slices) if d in active]
            uplinks = transmit_group(
                sizes, infra.network, infra.energy, mode=infra.netem_mode,
                seed=[infra.seed, idx], start_times=[0.0] * len(active),
            )
            filled = wave.copy()
            for d in dropped:
                a, b = slices[d]
                filled[:, :, a:b] = 0.0
            l_central = full_model_flops(cfg, wave.shape[1], [b - a for a, b in slices]) / infra.compute.central_flops_per_s
            vmap = forward_full(filled, weights, slices)
            collect = max((u.completion_s for u in uplinks), default=0.0)
            l_total = collect + l_central
            gt = None if ground_truth is None else ground_truth[idx]
            maps.append(vmap)
            report.rows.append(
                SampleResult(
                    sample_id=idx, status="ok",
                    mask=tuple(d in active for d in range(cfg.n_devices)),
                    l_edge_s=0.0, l_comm_s=collect, l_central_s=l_central,
                    l_total_s=l_total,
                    energy_j=sum(u.energy_j for u in uplinks),
                    comm_bytes=sum(sizes),
                    deadline_fired=False,
                    deadline_met=l_total <= infra.deadline_s,
                    late_frames=0,
                    ssim=_maybe_ssim(vmap, gt, cfg.velocity_range),
                )
            )
        return maps, report

    if mode == PipelineMode.FLA:
        report = _baseline_report(mode, cfg, infra, 0.0)
        v_min = cfg.velocity_range[0]
        ho, wo = cfg.output_dims
        for idx, sample in enumerate(samples):
            wave = _as_wave(sample)
            slices = validate_partition(infra.partition, wave.shape[2], infra.n_devices)
            dropped = drops[idx]
            active = [d for d in range(infra.n_devices) if d not in dropped]
            stitched = np.full((ho, wo), v_min, dtype=np.float32)
            edge_t = []
            sizes = []
            for d in active:
                a, b = slices[d]
                sub = forward_full(wave[:, :, a:b], weights, ((0, b - a),))
                span = _span_columns(wo, wave.shape[2], a, b)
                stitched[:, span[0] : span[1]] = sub.values[:, span[0] : span[1]]
                edge_t.append(
                    (encoder_flops(cfg, wave.shape[1], b - a) + decoder_flops(cfg, 1))
                    / infra.compute.edge_flops_per_s
                )
                sizes.append(ho * (span[1] - span[0]) * 4)
            uplinks = transmit_group(
                sizes, infra.network, infra.energy, mode=infra.netem_mode,
                seed=[infra.seed, idx], start_times=edge_t,
            )
            vmap = VelocityMap(values=stitched)
            collect = max((u.completion_s for u in uplinks), default=0.0)
            l_edge = max(edge_t, default=0.0)
            gt = None if ground_truth is None else ground_truth[idx]
            maps.append(vmap)
            report.rows.append(
                SampleResult(
                    sample_id=idx, status="ok",
                    mask=tuple(d in active for d in range(infra.n_devices)),
                    l_edge_s=l_edge, l_comm_s=collect - l_edge, l_central_s=0.0,
                    l_total_s=collect,
                    energy_j=sum(u.energy_j for u in uplinks),
                    comm_bytes=sum(sizes),
                    deadline_fired=False,
                    deadline_met=collect <= infra.deadline_s,
                    late_frames=0,
                    ssim=_maybe_ssim(vmap, gt, cfg.velocity_range),
                )
            )
        return maps, report

    # SLA
    t_d = plain_decoder_flops(cfg) / infra.compute.central_flops_per_s
    report = _baseline_report(mode, cfg, infra, t_d)
    latent_bytes = cfg.latent_dim * 4
    for idx, sample in enumerate(samples):
        wave = _as_wave(sample)
        slices = validate_partition(infra.partition, wave.shape[2], cfg.n_devices)
        dropped = drops[idx]
        active = [d for d in range(cfg.n_devices) if d not in dropped]
        if not active:
            maps.append(None)
            report.rows.append(_failed_row(idx, cfg.n_devices, 0.0, t_d, 0.0, 0, 0))
            continue
        latents = []
        edge_t = []
        for d in active:
            a, b = slices[d]
            latents.append(encode(wave[:, :, a:b], weights.encoders[d], device_id=d, sample_id=idx))
            edge_t.append(encoder_flops(cfg, wave.shape[1], b - a) / infra.compute.edge_flops_per_s)
        uplinks = transmit_group(
            [latent_bytes] * len(active), infra.network, infra.energy,
            mode=infra.netem_mode, seed=[infra.seed, idx], start_times=edge_t,
        )
        merged = (
            np.stack([lat.values for lat in latents])
            .astype(np.float64)
            .mean(axis=0)
            .astype(np.float32)
        )
        vmap = decode_without_attention(merged, weights)
        collect = max(u.completion_s for u in uplinks)
        l_edge = max(edge_t)
        l_total = collect + t_d
        gt = None if ground_truth is None else ground_truth[idx]
        maps.append(vmap)
        report.rows.append(
            SampleResult(
                sample_id=idx, status="ok",
                mask=tuple(d in active for d in range(cfg.n_devices)),
                l_edge_s=l_edge, l_comm_s=collect - l_edge, l_central_s=t_d,
                l_total_s=l_total,
                energy_j=sum(u.energy_j for u in uplinks),
                comm_bytes=latent_bytes * len(active),
                deadline_fired=False,
                deadline_met=l_total <= infra.deadline_s,
                late_frames=0,
                ssim=_maybe_ssim(vmap, gt, cfg.velocity_range),
            )
        )
    return maps, report


def _span_columns(out_w: int, n_rcv: int, a: int, b: int) -> tuple[int, int]:
    """Map a receiver slice [a, b) onto output-map columns."""
    lo = a * out_w // n_rcv
    hi = b * out_w // n_rcv
    return lo, hi


# ---------------------------------------------------------------------------
# robustness harness


def run_robustness_sweep(
    samples,
    weights: ModelWeights,
    infra: InfraConfig,
    drop_counts,
    modes=(PipelineMode.EPIC,),
    ground_truth=None,
    fla_weights: ModelWeights | None = None,
) -> dict[tuple[str, int], RunReport]:
    """For each k, drop k seeded-random devices per sample and rerun.

    k may reach n_devices; those samples surface as failed rows rather
    than crashing.
    """
    n = infra.n_devices
    results: dict[tuple[str, int], RunReport] = {}
    for k in drop_counts:
        k = int(k)
        if not 0 <= k <= n:
            raise ConfigError(f"drop count {k} outside [0, {n}]")
        drop_sets = []
        for idx in range(len(samples)):
            rng = np.random.default_rng([infra.seed, 7001, k, idx])
            drop_sets.append(frozenset(rng.choice(n, size=k, replace=False).tolist()) if k else frozenset())
        for mode in modes:
            w = weights
            if mode == PipelineMode.FLA:
                if fla_weights is None:
                    raise ConfigError("robustness sweep over FLA needs fla_weights")
                w = fla_weights
            _, report = run_baseline(
                mode, samples, w, infra, drop_devices=drop_sets, ground_truth=ground_truth
            )
            results[(mode.value, k)] = report
    return results
