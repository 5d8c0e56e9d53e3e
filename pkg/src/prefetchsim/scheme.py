"""Access schemes: who serves each stream, at what rate, from which source.

Three schemes are modeled:

* mobile-only: every byte rides the cellular network for the whole drive.
* wifi-noprefetch: inside a hotspot the streams share the hotspot's ADSL
  backhaul instead of cellular; outside they use cellular.
* wifi-prefetch: like wifi-noprefetch, but on every hotspot exit (and once
  at departure) the client predicts where its playback buffer will be when
  it reaches the next worthwhile hotspot and instructs that hotspot to start
  caching the stream from that byte offset.  Cached bytes are served over
  the fast hotspot radio instead of the slow backhaul.

Inside a hotspot under wifi-prefetch a stream walks three consecutive byte
ranges: the gap between its buffer and the cache start (backhaul), the
cached range (radio-speed local cache), and everything after (backhaul
again).  Radio capacity is shared among the streams by max-min fairness,
with backhaul-bound streams additionally capped by an equal split of the
ADSL line.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .playout import BYTE_EPS, StreamState
from .route import CELLULAR, WIFI, RealizedRoute, Route
from .videotrace import BITS_PER_BYTE, BITS_PER_MBIT, EwmaRate


class SchemeKind(enum.Enum):
    MOBILE_ONLY = "mobile-only"
    WIFI_NO_PREFETCH = "wifi-noprefetch"
    WIFI_PREFETCH = "wifi-prefetch"

    @classmethod
    def from_token(cls, token: str) -> "SchemeKind":
        for kind in cls:
            if kind.value == token:
                return kind
        raise ValueError(
            f"unknown scheme {token!r}; choose from {[k.value for k in cls]}"
        )


# Delivery sources, also used as timeline/energy labels.
SOURCE_CELLULAR = "cellular"
SOURCE_BACKHAUL = "wifi-backhaul"
SOURCE_CACHE = "wifi-cache"
SOURCE_IDLE = "idle"

WIFI_SOURCES = (SOURCE_BACKHAUL, SOURCE_CACHE)


def estimate_offset(
    est: EwmaRate, time_to_next_wifi_s: float, current_position_bytes: float
) -> float:
    """Predicted buffer position (bytes) when the next hotspot is reached:
    current position plus the estimated download rate times the travel time."""
    if time_to_next_wifi_s < 0:
        raise ValueError("travel time cannot be negative")
    if current_position_bytes < 0:
        raise ValueError("byte position cannot be negative")
    extra = est.value_mbps * time_to_next_wifi_s * BITS_PER_MBIT / BITS_PER_BYTE
    return current_position_bytes + extra


def fair_shares(capacity_mbps: float, caps_mbps: list[float]) -> list[float]:
    """Max-min fair split of capacity under per-user caps.

    Progressive filling: users are satisfied in order of ascending cap, each
    taking min(cap, equal share of what remains).  Work-conserving up to the
    smaller of the capacity and the cap total.
    """
    if capacity_mbps < 0:
        raise ValueError("capacity cannot be negative")
    n = len(caps_mbps)
    shares = [0.0] * n
    if n == 0 or capacity_mbps == 0:
        return shares
    remaining = capacity_mbps
    left = n
    for i in sorted(range(n), key=caps_mbps.__getitem__):
        give = min(caps_mbps[i], remaining / left)
        shares[i] = give
        remaining -= give
        left -= 1
    return shares


@dataclass
class CacheEntry:
    """Per-stream cache state at one hotspot: a byte range being replicated.

    The hotspot fills [start_bytes, start_bytes + cached_bytes) and will not
    cache past the end of the clip (cap_bytes).
    """

    start_bytes: float
    cap_bytes: float
    cached_bytes: float = 0.0

    @property
    def remaining_capacity(self) -> float:
        return max(0.0, self.cap_bytes - self.cached_bytes)


@dataclass
class HotspotCache:
    """One outstanding prefetch instruction: target hotspot and its entries."""

    segment_pos: int
    instruct_time_s: float
    entries: dict[int, CacheEntry] = field(default_factory=dict)

    def fillable(self) -> list[int]:
        return [i for i, e in self.entries.items() if e.remaining_capacity > BYTE_EPS]


@dataclass
class PhaseCursor:
    """Remaining bytes of the in-hotspot delivery phases for one stream.

    Phase 1 bridges the gap from the buffer to the cache start over the
    backhaul, phase 2 drains the cached range over the radio, phase 3 is
    plain backhaul for the rest of the stay.
    """

    gap_bytes: float = 0.0
    cached_bytes: float = 0.0

    @property
    def phase(self) -> int:
        if self.gap_bytes > BYTE_EPS:
            return 1
        if self.cached_bytes > BYTE_EPS:
            return 2
        return 3

    def consume(self, nbytes: float) -> None:
        if self.gap_bytes > BYTE_EPS:
            self.gap_bytes = max(0.0, self.gap_bytes - nbytes)
        elif self.cached_bytes > BYTE_EPS:
            self.cached_bytes = max(0.0, self.cached_bytes - nbytes)

    @property
    def phase_remaining(self) -> float:
        if self.gap_bytes > BYTE_EPS:
            return self.gap_bytes
        if self.cached_bytes > BYTE_EPS:
            return self.cached_bytes
        return float("inf")


@dataclass
class TransferPlan:
    """Per-stream delivery decision for one planning window."""

    sources: list[str]
    rates_mbps: list[float]


class SchemeState:
    """Mutable per-run scheme bookkeeping (prefetch instruction, phases)."""

    def __init__(self, kind: SchemeKind):
        self.kind = kind
        self.pending_cache: HotspotCache | None = None
        self.cursors: list[PhaseCursor] | None = None

    def issue_instruction(
        self,
        route: Route,
        streams: list[StreamState],
        exited_pos: int | None,
        now_s: float,
    ) -> None:
        """Predict buffer positions and instruct the next worthwhile hotspot.

        Called at departure (exited_pos=None) and on every hotspot exit.  A
        hotspot is worthwhile if its nominal radio rate beats the nominal
        cellular rate of the segment being entered.  Travel time is measured
        on the nominal schedule, the only schedule the client knows.
        """
        if self.kind is not SchemeKind.WIFI_PREFETCH:
            return
        segments = route.segments
        if exited_pos is None:
            entered_pos = 0
            nominal_now = 0.0
        else:
            entered_pos = exited_pos + 1
            if entered_pos >= len(segments):
                return
            nominal_now = segments[exited_pos].nominal_end_s
        cellular_here = route.nominal_cellular_anywhere()[entered_pos]

        target = None
        for pos in range(entered_pos, len(segments)):
            seg = segments[pos]
            if seg.access == WIFI and seg.wifi_mbps > cellular_here:
                target = pos
                break
        if target is None:
            return

        travel_s = segments[target].nominal_start_s - nominal_now
        entries: dict[int, CacheEntry] = {}
        for i, stream in enumerate(streams):
            if stream.download_done:
                continue
            start = estimate_offset(stream.ewma, travel_s, stream.received_bytes)
            start = min(start, float(stream.total_bytes))
            cap = stream.total_bytes - start
            if cap <= BYTE_EPS:
                continue
            entries[i] = CacheEntry(start_bytes=start, cap_bytes=cap)
        # A fresh instruction supersedes any outstanding one.
        self.pending_cache = HotspotCache(
            segment_pos=target, instruct_time_s=now_s, entries=entries
        )

    def enter_hotspot(self, pos: int, streams: list[StreamState]) -> None:
        """Fix the delivery phases for a hotspot stay.

        The cache stops filling the moment the vehicle arrives; only the
        cached range ahead of each stream's buffer is worth serving locally.
        """
        cache = None
        if (
            self.kind is SchemeKind.WIFI_PREFETCH
            and self.pending_cache is not None
            and self.pending_cache.segment_pos == pos
        ):
            cache = self.pending_cache
            self.pending_cache = None

        cursors = []
        for i, stream in enumerate(streams):
            cursor = PhaseCursor()
            entry = cache.entries.get(i) if cache is not None else None
            if entry is not None:
                frontier = stream.received_bytes
                cache_end = entry.start_bytes + entry.cached_bytes
                if frontier < entry.start_bytes - BYTE_EPS:
                    cursor.gap_bytes = entry.start_bytes - frontier
                    cursor.cached_bytes = entry.cached_bytes
                elif frontier < cache_end - BYTE_EPS:
                    cursor.cached_bytes = cache_end - frontier
                remaining = stream.remaining_bytes
                cursor.gap_bytes = min(cursor.gap_bytes, remaining)
                cursor.cached_bytes = min(
                    cursor.cached_bytes, remaining - cursor.gap_bytes
                )
            cursors.append(cursor)
        self.cursors = cursors

    def leave_hotspot(self) -> None:
        self.cursors = None

    def plan_rates(
        self,
        realized: RealizedRoute,
        pos: int,
        streams: list[StreamState],
    ) -> TransferPlan:
        """Source and rate for every stream while segment pos is current."""
        n = len(streams)
        sources = [SOURCE_IDLE] * n
        rates = [0.0] * n
        active = [i for i, s in enumerate(streams) if not s.download_done]
        if not active:
            return TransferPlan(sources, rates)

        access = realized.route.segments[pos].access
        if self.kind is SchemeKind.MOBILE_ONLY or access == CELLULAR:
            cell = realized.cellular_anywhere()[pos]
            share = cell / len(active)
            for i in active:
                sources[i] = SOURCE_CELLULAR
                rates[i] = share
            return TransferPlan(sources, rates)

        adsl = realized.adsl_mbps[pos]
        if self.kind is SchemeKind.WIFI_NO_PREFETCH:
            share = adsl / len(active)
            for i in active:
                sources[i] = SOURCE_BACKHAUL
                rates[i] = share
            return TransferPlan(sources, rates)

        if self.cursors is None:
            raise RuntimeError("hotspot planning requires enter_hotspot first")
        wifi = realized.wifi_mbps[pos]
        backhaul_users = [i for i in active if self.cursors[i].phase != 2]
        caps = []
        for i in active:
            if self.cursors[i].phase == 2:
                caps.append(float("inf"))
            else:
                caps.append(adsl / len(backhaul_users))
        shares = fair_shares(wifi, caps)
        for i, share in zip(active, shares):
            sources[i] = SOURCE_CACHE if self.cursors[i].phase == 2 else SOURCE_BACKHAUL
            rates[i] = share
        return TransferPlan(sources, rates)

    def consume(self, stream_idx: int, nbytes: float) -> None:
        """Advance the in-hotspot phase cursor after a delivery."""
        if self.cursors is not None:
            self.cursors[stream_idx].consume(nbytes)

    def phase_remaining(self, stream_idx: int) -> float:
        if self.cursors is None:
            return float("inf")
        return self.cursors[stream_idx].phase_remaining
