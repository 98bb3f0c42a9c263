"""Stream-socket transport for the split pipeline.

The same frames that the simulated link accounts for are sent here for
real, length-delimited over TCP: a fixed 18-byte header declares the
payload length, so the reader pulls header, payload and CRC and hands the
whole buffer to the frame decoder. One writer per connection; the central
collector accepts any number of connections and funnels every decoded
latent into the shared hash-map buffer under wall-clock timestamps.

This module is the wall-time twin of the simulated path in runtime.py:
the pipeline logic (collect until complete or T - T_d, decode what
arrived) is identical, only the clock differs.
"""

from __future__ import annotations

import socket
import threading
import time

import numpy as np

from .errors import ProtocolError
from .model import LatentVector, VelocityMap, decode, fuse, validate_partition, encode
from .netem import FRAME_OVERHEAD, HEADER, HEADER_SIZE, Frame, FrameKind, frame_decode, frame_encode
from .runtime import (
    HashBuffer,
    InfraConfig,
    RunReport,
    SampleResult,
    PipelineMode,
    _as_wave,
    _check_budget,
    _failed_row,
    _maybe_ssim,
    _per_sample_delays,
    _per_sample_drops,
    profile_decoder,
)

__all__ = ["read_frame", "send_frame", "latent_from_frame", "latent_to_frame", "run_epic_socket"]


def _read_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock: socket.socket) -> Frame | None:
    """Read one length-delimited frame; None on a clean EOF."""
    head = _read_exact(sock, HEADER_SIZE)
    if head is None:
        return None
    magic, version, _, _, _, payload_len = HEADER.unpack(head)
    if magic != b"EP":
        raise ProtocolError(f"bad frame magic {magic!r} on stream")
    rest = _read_exact(sock, payload_len + 4)
    if rest is None:
        raise ProtocolError("stream closed mid-frame")
    return frame_decode(head + rest)


def send_frame(sock: socket.socket, frame_bytes: bytes) -> None:
    sock.sendall(frame_bytes)


def latent_to_frame(latent: LatentVector) -> bytes:
    return frame_encode(
        FrameKind.LATENT, latent.sample_id, latent.device_id,
        latent.values.astype("<f4").tobytes(),
    )


def latent_from_frame(frame: Frame) -> LatentVector:
    if frame.kind != FrameKind.LATENT:
        raise ProtocolError(f"expected a latent frame, got {frame.kind.name}")
    if len(frame.payload) % 4 != 0:
        raise ProtocolError(f"latent payload of {len(frame.payload)} bytes is not float32-aligned")
    values = np.frombuffer(frame.payload, dtype="<f4").copy()
    if not np.isfinite(values).all():
        raise ProtocolError("latent payload contains non-finite values")
    return LatentVector(values=values, device_id=frame.device_id, sample_id=frame.sample_id)


class _Collector:
    """Accepts device connections and feeds frames into the buffer."""

    def __init__(self, host: str, port: int, buffer: HashBuffer):
        self.buffer = buffer
        self._listener = socket.create_server((host, port))
        self._threads: list[threading.Thread] = []
        self._accepting = threading.Thread(target=self._accept_loop, daemon=True)
        self._closing = False

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def start(self) -> None:
        self._accepting.start()

    def _accept_loop(self) -> None:
        while True:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            t = threading.Thread(target=self._reader, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _reader(self, conn: socket.socket) -> None:
        with conn:
            while True:
                try:
                    frame = read_frame(conn)
                except ProtocolError:
                    if self._closing:
                        return
                    raise
                if frame is None:
                    return
                if frame.kind == FrameKind.CONTROL:
                    continue
                self.buffer.insert_frame_latent(latent_from_frame(frame), time.monotonic())

    def close(self) -> None:
        self._closing = True
        self._listener.close()
        for t in self._threads:
            t.join(timeout=2.0)


def _edge_worker(
    device_id: int,
    address: tuple[str, int],
    weights,
    slices,
    samples,
    dispatch: list[threading.Event],
    delay_s: float,
    drops: list[frozenset[int]],
    edge_done: list[dict[int, float]],
) -> None:
    a, b = slices[device_id]
    with socket.create_connection(address) as sock:
        for idx, sample in enumerate(samples):
            dispatch[idx].wait()
            if device_id in drops[idx]:
                continue
            t0 = time.monotonic()
            wave = _as_wave(sample)
            latent = encode(wave[:, :, a:b], weights.encoders[device_id],
                            device_id=device_id, sample_id=idx)
            if delay_s > 0.0:
                time.sleep(delay_s)
            edge_done[idx][device_id] = time.monotonic() - t0
            send_frame(sock, latent_to_frame(latent))


def run_epic_socket(
    samples,
    weights,
    infra: InfraConfig,
    extra_delay_s=None,
    drop_devices=None,
    ground_truth=None,
    host: str = "127.0.0.1",
    port: int = 0,
    profile_trials: int = 3,
) -> tuple[list[VelocityMap | None], RunReport]:
    """Wall-clock twin of run_epic over localhost TCP.

    Edge workers run as threads, one connection each; the decode budget
    T_d comes from one-time wall profiling of the decoder.
    """
    cfg = weights.config
    t_d = profile_decoder(weights, trials=profile_trials)
    _check_budget(infra.deadline_s, t_d)
    delays = _per_sample_delays(extra_delay_s, cfg.n_devices)
    drops = _per_sample_drops(drop_devices, len(samples))
    latent_bytes = cfg.latent_dim * 4

    first = _as_wave(samples[0]) if samples else None
    slices = validate_partition(infra.partition, first.shape[2], cfg.n_devices) if samples else ()

    buffer = HashBuffer()
    collector = _Collector(host, port, buffer)
    collector.start()

    dispatch = [threading.Event() for _ in samples]
    edge_done: list[dict[int, float]] = [dict() for _ in samples]
    workers = [
        threading.Thread(
            target=_edge_worker,
            args=(d, collector.address, weights, slices, samples, dispatch,
                  delays.get(d, 0.0), drops, edge_done),
            daemon=True,
        )
        for d in range(cfg.n_devices)
    ]
    for w in workers:
        w.start()

    maps: list[VelocityMap | None] = []
    report = RunReport(
        mode=PipelineMode.EPIC,
        n_devices=cfg.n_devices,
        profile_label=f"socket:{collector.address[0]}:{collector.address[1]}",
        deadline_s=infra.deadline_s,
        decode_budget_s=t_d,
    )
    try:
        for idx in range(len(samples)):
            t0 = time.monotonic()
            dispatch[idx].set()
            lset, released = buffer.collect_blocking(
                idx, cfg.n_devices, t0 + infra.deadline_s - t_d
            )
            collect_time = time.monotonic() - t0
            if len(lset) == 0:
                buffer.complete(idx)
                maps.append(None)
                report.rows.append(
                    _failed_row(idx, cfg.n_devices, collect_time, t_d, 0.0, 0,
                                buffer.late_frames(idx))
                )
                continue
            d0 = time.monotonic()
            gl = fuse(lset, weights.fusion, cfg.n_heads)
            vmap = decode(gl, lset, weights)
            l_central = time.monotonic() - d0
            buffer.complete(idx)
            l_edge = max(
                (edge_done[idx].get(d, 0.0) for d in lset.present_ids()), default=0.0
            )
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
                    energy_j=0.0,
                    comm_bytes=(latent_bytes + FRAME_OVERHEAD) * len(lset),
                    deadline_fired=released,
                    deadline_met=l_total <= infra.deadline_s,
                    late_frames=buffer.late_frames(idx),
                    ssim=_maybe_ssim(vmap, gt, cfg.velocity_range),
                )
            )
    finally:
        for ev in dispatch:
            ev.set()
        for w in workers:
            w.join(timeout=5.0)
        collector.close()
    return maps, report
