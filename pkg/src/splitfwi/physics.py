"""Desk-scale 2D acoustic forward modeling.

Second-order leapfrog time stepping with a 5-point Laplacian on a uniform
grid. A 10-cell sponge collar with exponential damping surrounds the
interior and soaks up outgoing waves. Sources and receivers sit on the
surface row; each source fires a Ricker wavelet and every receiver samples
the pressure field once per timestep.

The module also hosts the root-cause analysis tools built on wave
superposition: differential records that isolate a region of interest by
subtracting a background simulation, and receiver energy distributions
over arbitrary receiver groups. A small seeded generator produces layered
and faulted velocity models paired with their simulated records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InputValidationError,
    PartitionError,
    ShapeError,
    StabilityError,
    ZeroEnergyError,
)
from .numerics import as_f32
from .tensorio import load_tensor, save_tensor

SPONGE_CELLS = 10
SPONGE_STRENGTH = 0.015
CFL_FACTOR = 0.5
DEFAULT_DT_FACTOR = 0.4


@dataclass(frozen=True)
class VelocityModel:
    """Subsurface velocity grid in m/s with its cell size in meters."""

    grid: np.ndarray  # [rows, cols] float32
    dx: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "grid", as_f32(self.grid))
        if self.grid.ndim != 2:
            raise ShapeError(f"velocity grid must be 2-D, got {self.grid.shape}")
        if self.dx <= 0:
            raise InputValidationError(f"dx must be positive, got {self.dx}")
        if not np.isfinite(self.grid).all() or (self.grid <= 0).any():
            raise InputValidationError("velocity grid must be finite and positive")


@dataclass(frozen=True)
class AcquisitionGeometry:
    """Surface acquisition: source columns, receiver columns, time sampling."""

    source_cols: tuple[int, ...]
    receiver_cols: tuple[int, ...]
    n_t: int
    dt: float
    f0: float = 15.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.n_t < 1:
            raise InputValidationError(f"n_t must be >= 1, got {self.n_t}")
        if self.dt <= 0 or self.f0 <= 0:
            raise InputValidationError("dt and f0 must be positive")
        if len(self.source_cols) < 1 or len(self.receiver_cols) < 1:
            raise InputValidationError("need at least one source and one receiver")


@dataclass(frozen=True)
class WaveformRecord:
    """Recorded pressure amplitudes [n_src, n_t, n_rcv]."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", as_f32(self.data))
        if self.data.ndim != 3:
            raise ShapeError(f"waveform record must be [n_src, n_t, n_rcv], got {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise InputValidationError("waveform record contains non-finite values")


@dataclass(frozen=True)
class EnergyDistribution:
    per_receiver: np.ndarray  # [n_rcv] float64, non-negative
    group_fractions: tuple[float, ...]


def default_geometry(
    n_sources: int = 5,
    n_receivers: int = 70,
    n_t: int = 1000,
    dx: float = 10.0,
    v_max: float = 4500.0,
    f0: float = 15.0,
) -> AcquisitionGeometry:
    """Evenly spread sources over the surface; one receiver per column.

    dt is tied to the global velocity ceiling (not the per-sample maximum)
    so every generated sample shares one time axis.
    """
    cols = np.round(np.linspace(0, n_receivers - 1, n_sources)).astype(int)
    return AcquisitionGeometry(
        source_cols=tuple(int(c) for c in cols),
        receiver_cols=tuple(range(n_receivers)),
        n_t=n_t,
        dt=DEFAULT_DT_FACTOR * dx / v_max,
        f0=f0,
    )


def ricker_wavelet(f0: float, n_t: int, dt: float, delay: float | None = None) -> np.ndarray:
    """Ricker pulse with peak frequency f0, delayed so the onset is ~0."""
    if delay is None:
        delay = 1.5 / f0
    t = np.arange(n_t) * dt - delay
    a = (np.pi * f0 * t) ** 2
    return ((1.0 - 2.0 * a) * np.exp(-a)).astype(np.float64)


def _sponge_taper(n_padded: int, pad: int) -> np.ndarray:
    taper = np.ones(n_padded, dtype=np.float64)
    ramp = np.exp(-((SPONGE_STRENGTH * np.arange(pad, 0, -1)) ** 2))
    taper[:pad] = ramp
    taper[-pad:] = ramp[::-1]
    return taper


def simulate(vm: VelocityModel, geom: AcquisitionGeometry) -> WaveformRecord:
    """Propagate every source through the model and record the surface row."""
    grid = vm.grid.astype(np.float64)
    rows, cols = grid.shape
    v_max = float(grid.max())
    bound = CFL_FACTOR * vm.dx / v_max
    if geom.dt > bound:
        raise StabilityError(
            f"dt={geom.dt:.6g}s violates the stability bound for v_max={v_max:.6g} m/s; "
            f"require dt <= {bound:.6g}s"
        )
    for c in geom.source_cols + geom.receiver_cols:
        if not 0 <= c < cols:
            raise InputValidationError(f"surface column {c} outside [0, {cols})")

    pad = SPONGE_CELLS
    vp = np.pad(grid, pad, mode="edge")
    coef = (vp * geom.dt / vm.dx) ** 2
    taper = _sponge_taper(rows + 2 * pad, pad)
    taper_c = _sponge_taper(cols + 2 * pad, pad)
    damp = np.outer(taper, taper_c)
    wavelet = geom.amplitude * ricker_wavelet(geom.f0, geom.n_t, geom.dt) * geom.dt**2
    rcv_cols = np.asarray(geom.receiver_cols, dtype=np.intp) + pad

    records = np.empty((len(geom.source_cols), geom.n_t, len(geom.receiver_cols)), dtype=np.float32)
    shape = vp.shape
    for s, src_col in enumerate(geom.source_cols):
        cur = np.zeros(shape, dtype=np.float64)
        prev = np.zeros(shape, dtype=np.float64)
        lap = np.zeros(shape, dtype=np.float64)
        for t in range(geom.n_t):
            lap[1:-1, 1:-1] = (
                cur[:-2, 1:-1]
                + cur[2:, 1:-1]
                + cur[1:-1, :-2]
                + cur[1:-1, 2:]
                - 4.0 * cur[1:-1, 1:-1]
            )
            nxt = 2.0 * cur - prev + coef * lap
            nxt[pad, pad + src_col] += wavelet[t]
            nxt *= damp
            cur *= damp
            records[s, t] = nxt[pad, rcv_cols].astype(np.float32)
            prev, cur = cur, nxt
    return WaveformRecord(data=records)


def differential_waveform(
    vm_with_roi: VelocityModel, vm_background: VelocityModel, geom: AcquisitionGeometry
) -> WaveformRecord:
    """Isolate a region's response by superposition: record(roi) - record(bg)."""
    if vm_with_roi.grid.shape != vm_background.grid.shape:
        raise ShapeError(
            f"velocity models differ: {vm_with_roi.grid.shape} vs {vm_background.grid.shape}"
        )
    if vm_with_roi.dx != vm_background.dx:
        raise ShapeError(
            f"grid spacing differs: {vm_with_roi.dx} vs {vm_background.dx}"
        )
    a = simulate(vm_with_roi, geom)
    b = simulate(vm_background, geom)
    return WaveformRecord(data=a.data - b.data)


def energy_distribution(rec: WaveformRecord, groups) -> EnergyDistribution:
    """Sum squared amplitudes per receiver and fraction them over groups.

    ``groups`` is a sequence of (start, stop) receiver ranges that must
    partition the receiver line.
    """
    n_rcv = rec.data.shape[2]
    ranges = tuple((int(a), int(b)) for a, b in groups)
    cursor = 0
    for i, (a, b) in enumerate(ranges):
        if a != cursor or b <= a:
            raise PartitionError(f"group {i} = [{a},{b}) breaks coverage at {cursor}")
        cursor = b
    if cursor != n_rcv:
        raise PartitionError(f"groups cover [0,{cursor}) but there are {n_rcv} receivers")
    per_receiver = (rec.data.astype(np.float64) ** 2).sum(axis=(0, 1))
    total = per_receiver.sum()
    if total == 0.0:
        raise ZeroEnergyError("all-zero record: energy fractions are undefined")
    fractions = tuple(float(per_receiver[a:b].sum() / total) for a, b in ranges)
    return EnergyDistribution(per_receiver=per_receiver, group_fractions=fractions)


# ---------------------------------------------------------------------------
# synthetic model families


def _layered_profile(rng: np.random.Generator, rows: int, v_lo: float, v_hi: float) -> np.ndarray:
    n_layers = int(rng.integers(2, 6))
    cuts = np.sort(rng.choice(np.arange(4, rows - 4), size=n_layers - 1, replace=False))
    velocities = rng.uniform(v_lo, v_hi, size=n_layers)
    profile = np.empty(rows, dtype=np.float64)
    start = 0
    for i, edge in enumerate(list(cuts) + [rows]):
        profile[start:edge] = velocities[i]
        start = edge
    return profile


def _make_model(rng: np.random.Generator, family: str, rows: int, cols: int,
                v_lo: float, v_hi: float, dx: float) -> VelocityModel:
    profile = _layered_profile(rng, rows, v_lo, v_hi)
    grid = np.tile(profile[:, None], (1, cols))
    if family == "faulted":
        fault_col = int(rng.integers(cols // 4, 3 * cols // 4))
        drift = float(rng.uniform(-1.5, 1.5))
        throw = int(rng.integers(3, 10))
        rr = np.arange(rows)[:, None]
        cc = np.arange(cols)[None, :]
        displaced = cc > fault_col + drift * rr
        shifted_profile = profile[np.clip(np.arange(rows) - throw, 0, rows - 1)]
        grid = np.where(displaced, shifted_profile[:, None], grid)
    return VelocityModel(grid=grid.astype(np.float32), dx=dx)


def generate_dataset(
    seed: int,
    n_samples: int,
    family: str = "layered",
    rows: int = 70,
    cols: int = 70,
    geometry: AcquisitionGeometry | None = None,
    velocity_range: tuple[float, float] = (1500.0, 4500.0),
    dx: float = 10.0,
) -> list[tuple[VelocityModel, WaveformRecord]]:
    """Seeded synthetic (velocity model, record) pairs.

    ``layered`` draws 2-5 horizontal layers with random velocities;
    ``faulted`` adds one dipping displacement. The same seed always yields
    bit-identical samples.
    """
    if n_samples < 1:
        raise InputValidationError(f"n_samples must be >= 1, got {n_samples}")
    if family not in ("layered", "faulted"):
        raise InputValidationError(f"unknown family {family!r}")
    v_lo, v_hi = velocity_range
    if geometry is None:
        geometry = default_geometry(n_receivers=cols, dx=dx, v_max=v_hi)
    samples = []
    for idx in range(n_samples):
        rng = np.random.default_rng([seed, idx])
        vm = _make_model(rng, family, rows, cols, v_lo, v_hi, dx)
        samples.append((vm, simulate(vm, geometry)))
    return samples


# ---------------------------------------------------------------------------
# dataset files


def save_dataset(samples, out_dir, *, seed: int, family: str, geometry: AcquisitionGeometry, dx: float = 10.0) -> Path:
    """Write one tensor file per velocity map and per record, plus a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i, (vm, rec) in enumerate(samples):
        v_name = f"sample_{i:04d}_velocity.tnsr"
        w_name = f"sample_{i:04d}_waveform.tnsr"
        save_tensor(vm.grid, out / v_name)
        save_tensor(rec.data, out / w_name)
        files.append({"velocity": v_name, "waveform": w_name})
    manifest = {
        "seed": seed,
        "family": family,
        "n_samples": len(samples),
        "dx": dx,
        "geometry": {
            "source_cols": list(geometry.source_cols),
            "receiver_cols": list(geometry.receiver_cols),
            "n_t": geometry.n_t,
            "dt": geometry.dt,
            "f0": geometry.f0,
            "amplitude": geometry.amplitude,
        },
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out / "manifest.json"


def load_dataset(in_dir) -> tuple[list[tuple[VelocityModel, WaveformRecord]], dict]:
    root = Path(in_dir)
    manifest = json.loads((root / "manifest.json").read_text())
    dx = float(manifest.get("dx", 10.0))
    samples = []
    for entry in manifest["files"]:
        vm = VelocityModel(grid=load_tensor(root / entry["velocity"]), dx=dx)
        rec = WaveformRecord(data=load_tensor(root / entry["waveform"]))
        samples.append((vm, rec))
    return samples, manifest
