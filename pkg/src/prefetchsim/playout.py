"""Receiver-side playout buffer with stall accounting.

The download path hands the buffer byte deliveries; the buffer decides when
playback starts, when each frame actually plays, and how many frames get
paused waiting for data.

Model: playback starts the instant the first playout_threshold_frames frames
are fully buffered (interpolated within a delivery interval, not snapped to
its end).  From then on frame n is due at start + stall_shift + n/fps.  If a
frame's data has not arrived by its due time, playback pauses once for that
frame and resumes the moment the data is complete; the wait is added to
stall_shift, delaying all later frames.  At most one frame is ever waited on
at a time, and a frame is counted paused at most once, so a delivery outage
costs one paused frame until data flows again.  Ties (data complete exactly
at the due time, within PLAYOUT_EPS) play without pausing.

advance_playout processes a whole delivery interval at once under a constant
delivery rate, which lets the frame bookkeeping be vectorized; the result is
identical to stepping frame by frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .videotrace import (
    EwmaRate,
    FrameTrace,
    ewma_update_many,
    frame_rate_samples_mbps,
)

# Tie tolerance, seconds: availability within this of the due time plays.
PLAYOUT_EPS = 1e-9
# Byte comparisons tolerate accumulated float error well below one byte.
BYTE_EPS = 1e-6


@dataclass
class StreamState:
    """One video stream: its trace, rate estimate, buffer and stall ledger."""

    trace: FrameTrace
    ewma: EwmaRate
    threshold_frames: int
    received_bytes: float = 0.0
    next_frame: int = 0
    playout_started: bool = False
    start_time_s: float = math.nan
    stall_shift_s: float = 0.0
    paused_frames: int = 0
    waiting: bool = False
    waiting_due_s: float = math.nan
    playback_done: bool = False
    _clock_s: float = 0.0
    _interval_bytes: float = 0.0

    def __post_init__(self):
        if self.threshold_frames < 0:
            raise ValueError("start threshold cannot be negative")
        # A short clip cannot demand more startup frames than it has.
        self.threshold_frames = min(self.threshold_frames, self.trace.n_frames)

    @property
    def total_bytes(self) -> int:
        return self.trace.total_bytes

    @property
    def remaining_bytes(self) -> float:
        return max(0.0, self.total_bytes - self.received_bytes)

    @property
    def download_done(self) -> bool:
        return self.remaining_bytes <= BYTE_EPS

    def deliver_bytes(self, nbytes: float) -> None:
        """Append nbytes to the buffer (capped at the trace size)."""
        if nbytes < 0:
            raise ValueError("cannot deliver a negative byte count")
        take = min(nbytes, self.remaining_bytes)
        self.received_bytes += take
        self._interval_bytes += take

    def advance_playout(self, now_s: float) -> None:
        """Play out through time now_s, assuming the bytes delivered since
        the previous call arrived at a constant rate over the interval."""
        t0 = self._clock_s
        if now_s < t0 - PLAYOUT_EPS:
            raise ValueError(f"playout clock moved backwards: {t0} -> {now_s}")
        t1 = max(now_s, t0)
        span = t1 - t0
        rate = self._interval_bytes / span if span > 0 else 0.0
        frontier0 = self.received_bytes - self._interval_bytes
        self._interval_bytes = 0.0
        self._clock_s = t1
        if self.playback_done:
            return

        cum = self.trace.cumulative_bytes

        if not self.playout_started:
            need = float(cum[self.threshold_frames])
            start = self._time_bytes_reached(need, t0, t1, frontier0, rate)
            if start is None:
                return
            self.playout_started = True
            self.start_time_s = start
            self.stall_shift_s = 0.0

        first = self.next_frame
        if self.waiting:
            need = float(cum[self.next_frame + 1])
            avail = self._time_bytes_reached(need, t0, t1, frontier0, rate)
            if avail is None:
                return
            self.stall_shift_s += avail - self.waiting_due_s
            self.waiting = False
            self.waiting_due_s = math.nan
            self.next_frame += 1
            if self.next_frame >= self.trace.n_frames:
                self.playback_done = True
                self._fold_played(first)
                return

        fps = self.trace.fps
        n = self.next_frame
        base = self.start_time_s + self.stall_shift_s + n / fps
        if base > t1 + PLAYOUT_EPS:
            self._fold_played(first)
            return

        # Frames whose due time could fall inside this interval: due times
        # only move later, so base + (j-n)/fps <= t1 bounds the candidates.
        j_hi = n + int(math.floor((t1 - base) * fps + PLAYOUT_EPS))
        j_hi = min(j_hi, self.trace.n_frames - 1)
        if j_hi < n:
            self._fold_played(first)
            return

        need = cum[n + 1 : j_hi + 2].astype(np.float64)
        if rate > 0.0:
            avail = np.where(
                need <= frontier0 + BYTE_EPS,
                t0,
                t0 + (need - frontier0) / rate,
            )
        else:
            avail = np.where(need <= frontier0 + BYTE_EPS, t0, np.inf)
        offsets = np.arange(j_hi - n + 1, dtype=np.float64) / fps
        gaps = avail - offsets

        running = np.maximum.accumulate(gaps)
        prior = np.empty_like(running)
        prior[0] = base
        if prior.size > 1:
            np.maximum(base, running[:-1], out=prior[1:])
        paused_mask = gaps > prior + PLAYOUT_EPS
        play = np.maximum(prior, gaps) + offsets

        beyond = play > t1 + PLAYOUT_EPS
        if not beyond.any():
            committed = j_hi - n + 1
            self.paused_frames += int(paused_mask.sum())
            self.stall_shift_s += float(max(prior[-1], gaps[-1])) - base
            self.next_frame = j_hi + 1
            if self.next_frame >= self.trace.n_frames:
                self.playback_done = True
        else:
            k = int(np.argmax(beyond))
            self.paused_frames += int(paused_mask[:k].sum())
            self.stall_shift_s += float(prior[k]) - base
            self.next_frame = n + k
            due = float(prior[k] + offsets[k])
            if due <= t1 + PLAYOUT_EPS:
                # Due inside the interval but data not: stall begins here.
                self.paused_frames += 1
                self.waiting = True
                self.waiting_due_s = due
        self._fold_played(first)

    def _time_bytes_reached(
        self, need: float, t0: float, t1: float, frontier0: float, rate: float
    ) -> float | None:
        """Earliest time in [t0, t1] at which the buffer holds need bytes,
        or None if it does not within the interval."""
        if need <= frontier0 + BYTE_EPS:
            return t0
        if rate <= 0.0:
            return None
        t = t0 + (need - frontier0) / rate
        return t if t <= t1 + PLAYOUT_EPS else None

    def _fold_played(self, first: int) -> None:
        if self.next_frame > first:
            samples = frame_rate_samples_mbps(self.trace, first, self.next_frame)
            self.ewma = ewma_update_many(self.ewma, samples)
