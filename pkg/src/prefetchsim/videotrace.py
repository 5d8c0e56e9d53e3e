"""Variable-bitrate video traces and the receiver-side rate estimator.

A trace is a frame rate plus per-frame byte sizes.  Traces can be loaded
from simple CSV files or synthesized to match target average/peak bitrates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

BITS_PER_BYTE = 8
BITS_PER_MBIT = 1.0e6

# Clipped log-normal shape parameter used for synthetic frame sizes.
SYNTH_SIGMA = 1.2
SYNTH_AVG_TOLERANCE = 0.02

# fps, average Mbps, peak Mbps for the bundled synthetic profiles.
SYNTH_PROFILES = {
    "hd": (24.0, 1.6, 42.0),
    "sd": (25.0, 0.6, 6.9),
}


class TraceFormatError(ValueError):
    """Raised when a trace file cannot be parsed."""


@dataclass(frozen=True, eq=False)
class FrameTrace:
    """An immutable frame-size sequence at a fixed frame rate.

    cumulative_bytes has length n_frames+1 with cumulative_bytes[k] equal to
    the bytes occupied by frames 0..k-1, so frame k spans the byte range
    [cumulative_bytes[k], cumulative_bytes[k+1]).
    """

    fps: float
    frame_bytes: np.ndarray
    cumulative_bytes: np.ndarray

    @classmethod
    def from_sizes(cls, fps: float, sizes) -> "FrameTrace":
        if fps <= 0:
            raise ValueError(f"fps must be positive, got {fps}")
        arr = np.asarray(sizes, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("trace needs at least one frame")
        if np.any(arr <= 0):
            raise ValueError("all frame sizes must be positive")
        cum = np.zeros(arr.size + 1, dtype=np.int64)
        np.cumsum(arr, out=cum[1:])
        return cls(fps=fps, frame_bytes=arr, cumulative_bytes=cum)

    @property
    def n_frames(self) -> int:
        return int(self.frame_bytes.size)

    @property
    def total_bytes(self) -> int:
        return int(self.cumulative_bytes[-1])

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.fps

    @property
    def avg_mbps(self) -> float:
        return self.total_bytes * BITS_PER_BYTE * self.fps / (self.n_frames * BITS_PER_MBIT)

    @property
    def peak_mbps(self) -> float:
        return float(self.frame_bytes.max()) * BITS_PER_BYTE * self.fps / BITS_PER_MBIT

    def byte_offset_at_frame(self, frame: int) -> int:
        """Bytes strictly before the given frame index."""
        if not 0 <= frame <= self.n_frames:
            raise IndexError(f"frame {frame} out of range 0..{self.n_frames}")
        return int(self.cumulative_bytes[frame])

    def frame_at_byte_offset(self, nbytes: float) -> int:
        """Number of frames fully contained in the first nbytes bytes."""
        if nbytes < 0:
            raise ValueError("byte offset must be non-negative")
        return int(
            np.searchsorted(self.cumulative_bytes, nbytes, side="right") - 1
        )

    def tiled_to(self, n_frames: int) -> "FrameTrace":
        """Trace of exactly n_frames frames, repeating from the start as
        needed (looping playback of the same clip)."""
        if n_frames <= 0:
            raise ValueError("tiled trace needs at least one frame")
        if n_frames == self.n_frames:
            return self
        return FrameTrace.from_sizes(self.fps, np.resize(self.frame_bytes, n_frames))


def load_trace(path: str) -> FrameTrace:
    """Load a trace file: header line "fps,<value>" then one integer frame
    size (bytes) per line."""
    with open(path) as fh:
        header = fh.readline()
        parts = header.strip().split(",")
        if len(parts) != 2 or parts[0].strip().lower() != "fps":
            raise TraceFormatError(f"{path}:1: expected header 'fps,<value>'")
        try:
            fps = float(parts[1])
        except ValueError as exc:
            raise TraceFormatError(f"{path}:1: bad fps value {parts[1]!r}") from exc
        if fps <= 0:
            raise TraceFormatError(f"{path}:1: fps must be positive")
        sizes = []
        for lineno, line in enumerate(fh, start=2):
            text = line.strip()
            if not text:
                continue
            try:
                size = int(text)
            except ValueError as exc:
                raise TraceFormatError(
                    f"{path}:{lineno}: frame size must be an integer, got {text!r}"
                ) from exc
            if size <= 0:
                raise TraceFormatError(f"{path}:{lineno}: frame size must be positive")
            sizes.append(size)
    if not sizes:
        raise TraceFormatError(f"{path}: trace has no frames")
    return FrameTrace.from_sizes(fps, sizes)


def save_trace(trace: FrameTrace, path: str) -> None:
    """Write a trace in the same format load_trace reads."""
    with open(path, "w") as fh:
        fps = trace.fps
        fh.write(f"fps,{int(fps) if float(fps).is_integer() else fps}\n")
        fh.write("\n".join(str(int(s)) for s in trace.frame_bytes))
        fh.write("\n")


def synthesize_trace(
    fps: float,
    avg_mbps: float,
    peak_mbps: float,
    duration_s: float,
    seed,
) -> FrameTrace:
    """Generate a clipped log-normal frame-size sequence hitting the target
    average bitrate (within 2%) without exceeding the target peak.

    Sizes are drawn log-normal (sigma=1.2), clipped at the per-frame peak
    size, and scaled so the realized mean matches the per-frame average; the
    scale is found by bisection, which converges because the clipped mean is
    continuous and strictly increasing in the scale until it saturates at
    the peak.
    """
    if fps <= 0 or avg_mbps <= 0 or duration_s <= 0:
        raise ValueError("fps, avg_mbps and duration_s must be positive")
    if peak_mbps <= avg_mbps:
        raise ValueError("peak bitrate must exceed average bitrate")
    n_frames = int(round(duration_s * fps))
    if n_frames < 200:
        raise ValueError("synthetic trace must cover at least 200 frames")

    avg_bytes = avg_mbps * BITS_PER_MBIT / (BITS_PER_BYTE * fps)
    peak_bytes = peak_mbps * BITS_PER_MBIT / (BITS_PER_BYTE * fps)

    rng = np.random.default_rng(seed)
    shape = rng.lognormal(mean=0.0, sigma=SYNTH_SIGMA, size=n_frames)

    def clipped_mean(scale: float) -> float:
        return float(np.minimum(scale * shape, peak_bytes).mean())

    lo, hi = 0.0, avg_bytes / float(shape.mean())
    while clipped_mean(hi) < avg_bytes:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if clipped_mean(mid) < avg_bytes:
            lo = mid
        else:
            hi = mid
    scale = 0.5 * (lo + hi)

    sizes = np.minimum(np.round(scale * shape), np.floor(peak_bytes))
    sizes = np.maximum(sizes, 1.0).astype(np.int64)
    trace = FrameTrace.from_sizes(fps, sizes)

    if abs(trace.avg_mbps - avg_mbps) > SYNTH_AVG_TOLERANCE * avg_mbps:
        raise ValueError(
            f"synthesized average {trace.avg_mbps:.4f} Mbps missed target {avg_mbps} Mbps"
        )
    return trace


def synthesize_profile(profile: str, duration_s: float, seed) -> FrameTrace:
    """Synthesize one of the bundled profiles ('hd' or 'sd')."""
    try:
        fps, avg, peak = SYNTH_PROFILES[profile]
    except KeyError:
        raise ValueError(
            f"unknown profile {profile!r}; choose from {sorted(SYNTH_PROFILES)}"
        ) from None
    return synthesize_trace(fps, avg, peak, duration_s, seed)


@dataclass(frozen=True)
class EwmaRate:
    """Exponentially weighted moving average of a rate, in Mbps.

    weight is the share given to the newest sample.  The estimate starts at
    zero: before any video has played there is no throughput evidence, so
    the receiver assumes none.
    """

    value_mbps: float = 0.0
    weight: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"weight must be in (0, 1], got {self.weight}")
        if self.value_mbps < 0.0:
            raise ValueError("rate estimate cannot be negative")


def ewma_update(est: EwmaRate, sample_mbps: float) -> EwmaRate:
    """Fold one sample into the estimate: w*sample + (1-w)*value."""
    if sample_mbps < 0.0:
        raise ValueError("rate sample cannot be negative")
    value = est.weight * sample_mbps + (1.0 - est.weight) * est.value_mbps
    return replace(est, value_mbps=value)


def ewma_update_many(est: EwmaRate, samples_mbps: np.ndarray) -> EwmaRate:
    """Fold a sample sequence in order, equivalent to repeated ewma_update."""
    m = len(samples_mbps)
    if m == 0:
        return est
    samples = np.asarray(samples_mbps, dtype=np.float64)
    if np.any(samples < 0.0):
        raise ValueError("rate sample cannot be negative")
    w = est.weight
    decay = (1.0 - w) ** np.arange(m - 1, -1, -1)
    value = est.value_mbps * (1.0 - w) ** m + w * float(np.dot(decay, samples))
    return replace(est, value_mbps=value)


def frame_rate_samples_mbps(trace: FrameTrace, start: int, stop: int) -> np.ndarray:
    """Instantaneous bitrate samples for frames [start, stop): the rate a
    frame's bytes represent over one frame interval."""
    sizes = trace.frame_bytes[start:stop]
    return sizes * (BITS_PER_BYTE * trace.fps / BITS_PER_MBIT)
