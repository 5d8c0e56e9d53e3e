"""Drive-route model: segments, access types, calibration tables, per-run sampling.

A route is an ordered list of contiguous road segments.  Each segment offers
exactly one access network: wide-area cellular, or a roadside WiFi hotspot
backed by an ADSL line.  Nominal throughputs come from drive-by field
measurements; per-run realizations jitter both the segment boundaries and the
throughput levels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

CELLULAR = "cellular"
WIFI = "wifi"

# A realized segment may never collapse below this duration.
MIN_SEGMENT_S = 1.0

DEFAULT_WIFI_WARMUP_S = 20.0
DEFAULT_SEGMENT_S = 18.0

# Fallback hotspot rates (Mbps) for layouts denser than the measured drive:
# the mid-range calibration bucket.
EXTRA_HOTSPOT_WIFI_MBPS = 16.74
EXTRA_HOTSPOT_ADSL_MBPS = 8.37


@dataclass(frozen=True)
class SnrBand:
    """One row of the signal-strength calibration: throughputs for an SNR band.

    The band covers (snr_lower_db, snr_upper_db]: lower bound exclusive,
    upper bound inclusive.  Unbounded ends use +/- inf.
    """

    snr_lower_db: float
    snr_upper_db: float
    wifi_mbps: float
    adsl_mbps: float

    def __post_init__(self):
        if not self.snr_lower_db < self.snr_upper_db:
            raise ValueError("SNR band bounds must satisfy lower < upper")
        if self.wifi_mbps <= 0 or self.adsl_mbps <= 0:
            raise ValueError("calibration throughputs must be positive")
        if self.wifi_mbps <= self.adsl_mbps:
            raise ValueError("radio rate must exceed backhaul rate in every band")


@dataclass(frozen=True)
class SnrCalibrationTable:
    """Maps measured WiFi SNR to (radio, backhaul) throughput in Mbps.

    Rows are ordered from strongest signal to weakest and must tile the whole
    real line without gaps or overlap.
    """

    bands: tuple[SnrBand, ...]

    def __post_init__(self):
        if not self.bands:
            raise ValueError("calibration table needs at least one band")
        if not math.isinf(self.bands[0].snr_upper_db):
            raise ValueError("strongest band must be unbounded above")
        if not math.isinf(self.bands[-1].snr_lower_db):
            raise ValueError("weakest band must be unbounded below")
        for hi, lo in zip(self.bands, self.bands[1:]):
            if hi.snr_lower_db != lo.snr_upper_db:
                raise ValueError("calibration bands must be contiguous")

    def lookup(self, snr_db: float) -> tuple[float, float]:
        """Return (wifi_mbps, adsl_mbps) for the band containing snr_db."""
        for band in self.bands:
            if band.snr_lower_db < snr_db <= band.snr_upper_db:
                return band.wifi_mbps, band.adsl_mbps
        # Only reachable for nan input.
        raise ValueError(f"SNR {snr_db!r} matches no calibration band")


DEFAULT_SNR_TABLE = SnrCalibrationTable(
    bands=(
        SnrBand(-50.0, math.inf, 19.90, 15.87),
        SnrBand(-60.0, -50.0, 18.30, 11.86),
        SnrBand(-70.0, -60.0, 17.76, 10.13),
        SnrBand(-80.0, -70.0, 17.23, 9.46),
        SnrBand(-90.0, -80.0, 16.74, 8.37),
        SnrBand(-math.inf, -90.0, 16.16, 6.81),
    )
)


def snr_to_throughput(
    snr_db: float, table: SnrCalibrationTable = DEFAULT_SNR_TABLE
) -> tuple[float, float]:
    """Look up the (wifi, adsl) Mbps pair for a measured SNR value."""
    return table.lookup(snr_db)


@dataclass(frozen=True)
class Segment:
    """One contiguous stretch of road with a single serving network.

    Cellular segments carry cellular_mbps; hotspot segments carry the radio
    rate wifi_mbps and the backhaul rate adsl_mbps.  Rates are nominal; see
    sample_realization for per-run jitter.
    """

    index: int
    access: str
    nominal_start_s: float
    nominal_duration_s: float
    cellular_mbps: float | None = None
    wifi_mbps: float | None = None
    adsl_mbps: float | None = None

    def __post_init__(self):
        if self.access not in (CELLULAR, WIFI):
            raise ValueError(f"unknown access type {self.access!r}")
        if self.nominal_duration_s <= 0:
            raise ValueError("segment duration must be positive")
        if self.nominal_start_s < 0:
            raise ValueError("segment start must be non-negative")
        if self.access == CELLULAR:
            if self.cellular_mbps is None or self.cellular_mbps <= 0:
                raise ValueError("cellular segment needs a positive cellular rate")
        else:
            if self.wifi_mbps is None or self.wifi_mbps <= 0:
                raise ValueError("hotspot segment needs a positive radio rate")
            if self.adsl_mbps is None or self.adsl_mbps <= 0:
                raise ValueError("hotspot segment needs a positive backhaul rate")
            if self.wifi_mbps <= self.adsl_mbps:
                raise ValueError("hotspot radio rate must exceed its backhaul rate")

    @property
    def nominal_end_s(self) -> float:
        return self.nominal_start_s + self.nominal_duration_s


@dataclass(frozen=True)
class Route:
    """An ordered, contiguous sequence of segments starting at time zero."""

    segments: tuple[Segment, ...]
    wifi_warmup_s: float = DEFAULT_WIFI_WARMUP_S

    def __post_init__(self):
        if not self.segments:
            raise ValueError("route needs at least one segment")
        if self.wifi_warmup_s < 0:
            raise ValueError("warmup time must be non-negative")
        if self.segments[0].nominal_start_s != 0.0:
            raise ValueError("route must start at t=0")
        if self.segments[0].access != CELLULAR:
            raise ValueError("route must begin on a cellular segment")
        for a, b in zip(self.segments, self.segments[1:]):
            if not math.isclose(a.nominal_end_s, b.nominal_start_s, abs_tol=1e-9):
                raise ValueError("segments must be contiguous in time")
            if a.access == WIFI and b.access == WIFI:
                raise ValueError("adjacent hotspot segments are not allowed")

    @property
    def total_duration_s(self) -> float:
        return self.segments[-1].nominal_end_s

    def wifi_positions(self) -> list[int]:
        """0-based positions of hotspot segments, in route order."""
        return [i for i, s in enumerate(self.segments) if s.access == WIFI]

    def nominal_cellular_anywhere(self) -> list[float]:
        """Per-segment nominal cellular rate, hotspot gaps filled from the
        nearest preceding cellular segment (cellular coverage is continuous
        along the drive; hotspot rows simply were not measured for it)."""
        rates: list[float] = []
        last = None
        for seg in self.segments:
            if seg.access == CELLULAR:
                last = seg.cellular_mbps
            rates.append(last)
        if any(r is None for r in rates):
            raise ValueError("no cellular rate available before first hotspot")
        return rates


# Field-measured defaults: 16 segments of 18 s each, four hotspots.
# (index, access, cellular, wifi, adsl) in Mbps.
_MEASURED_DRIVE = (
    (1, CELLULAR, 4.83, None, None),
    (2, WIFI, None, 16.16, 6.81),
    (3, CELLULAR, 4.22, None, None),
    (4, CELLULAR, 4.58, None, None),
    (5, CELLULAR, 4.58, None, None),
    (6, WIFI, None, 16.74, 8.37),
    (7, CELLULAR, 6.48, None, None),
    (8, CELLULAR, 6.72, None, None),
    (9, CELLULAR, 6.72, None, None),
    (10, WIFI, None, 16.74, 8.37),
    (11, CELLULAR, 4.72, None, None),
    (12, CELLULAR, 4.72, None, None),
    (13, CELLULAR, 6.51, None, None),
    (14, WIFI, None, 17.23, 9.46),
    (15, CELLULAR, 5.82, None, None),
    (16, CELLULAR, 5.82, None, None),
)

SUPPORTED_HOTSPOT_COUNTS = (2, 4, 8)


def build_route(
    num_hotspots: int = 4,
    scale_m: float = 1.0,
    scale_w: float = 1.0,
    scale_a: float = 1.0,
    wifi_warmup_s: float = DEFAULT_WIFI_WARMUP_S,
) -> Route:
    """Build the measured drive route with a chosen hotspot density.

    num_hotspots=4 is the drive as measured (hotspots at segments 2, 6, 10,
    14).  num_hotspots=2 keeps only segments 2 and 10 as hotspots; the
    removed ones revert to cellular at the rate of the nearest preceding
    cellular segment.  num_hotspots=8 adds a hotspot on every even segment;
    the added ones get the mid-range calibration rates.

    scale_m / scale_w / scale_a multiply every cellular / radio / backhaul
    rate after the layout is fixed.
    """
    if num_hotspots not in SUPPORTED_HOTSPOT_COUNTS:
        raise ValueError(
            f"num_hotspots must be one of {SUPPORTED_HOTSPOT_COUNTS}, got {num_hotspots}"
        )
    for name, value in (("scale_m", scale_m), ("scale_w", scale_w), ("scale_a", scale_a)):
        if value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")

    rows = [list(r) for r in _MEASURED_DRIVE]
    if num_hotspots == 2:
        # Drop hotspots 6 and 14; inherit the preceding cellular rate.
        for idx in (6, 14):
            prev_cell = next(
                row[2] for row in reversed(rows[: idx - 1]) if row[1] == CELLULAR
            )
            rows[idx - 1] = [idx, CELLULAR, prev_cell, None, None]
    elif num_hotspots == 8:
        for idx in (4, 8, 12, 16):
            rows[idx - 1] = [
                idx,
                WIFI,
                None,
                EXTRA_HOTSPOT_WIFI_MBPS,
                EXTRA_HOTSPOT_ADSL_MBPS,
            ]

    segments = []
    for idx, access, cell, wifi, adsl in rows:
        start = (idx - 1) * DEFAULT_SEGMENT_S
        segments.append(
            Segment(
                index=idx,
                access=access,
                nominal_start_s=start,
                nominal_duration_s=DEFAULT_SEGMENT_S,
                cellular_mbps=None if cell is None else cell * scale_m,
                wifi_mbps=None if wifi is None else wifi * scale_w,
                adsl_mbps=None if adsl is None else adsl * scale_a,
            )
        )
    return Route(segments=tuple(segments), wifi_warmup_s=wifi_warmup_s)


@dataclass(frozen=True)
class RealizedRoute:
    """One Monte Carlo draw of a route: jittered boundaries and rates.

    boundaries_s[i] is the realized end time of segment i; segment 0 starts
    at t=0.  Rate tuples align with route.segments and hold None where the
    segment has no such network.
    """

    route: Route
    boundaries_s: tuple[float, ...]
    cellular_mbps: tuple[float | None, ...]
    wifi_mbps: tuple[float | None, ...]
    adsl_mbps: tuple[float | None, ...]

    def __post_init__(self):
        n = len(self.route.segments)
        for field_name in ("boundaries_s", "cellular_mbps", "wifi_mbps", "adsl_mbps"):
            if len(getattr(self, field_name)) != n:
                raise ValueError(f"{field_name} must have one entry per segment")
        prev = 0.0
        for b in self.boundaries_s:
            if b < prev + MIN_SEGMENT_S - 1e-9:
                raise ValueError("realized segments must last at least the minimum")
            prev = b

    @property
    def end_s(self) -> float:
        return self.boundaries_s[-1]

    def start_of(self, pos: int) -> float:
        return 0.0 if pos == 0 else self.boundaries_s[pos - 1]

    def end_of(self, pos: int) -> float:
        return self.boundaries_s[pos]

    def cellular_anywhere(self) -> list[float]:
        """Realized cellular rate per segment, hotspot gaps filled from the
        nearest preceding cellular segment."""
        rates: list[float] = []
        last = None
        for seg, cell in zip(self.route.segments, self.cellular_mbps):
            if seg.access == CELLULAR:
                last = cell
            rates.append(last)
        if any(r is None for r in rates):
            raise ValueError("no cellular rate available before first hotspot")
        return rates


def sample_realization(
    route: Route,
    time_var: float,
    thr_var: float,
    rng: np.random.Generator,
) -> RealizedRoute:
    """Draw one realization of segment timing and throughputs.

    Each segment's duration d maps to uniform([(1-time_var)d,
    (1+time_var)d]), sampled in route order (so the first handover at
    nominal 18 s with 10% variability lands in [16.2, 19.8] s) and clamped
    to at least MIN_SEGMENT_S; boundaries are the running sums, which keeps
    them strictly increasing and the route's shape intact at any
    variability.  Each nominal rate x maps to uniform([(1-thr_var)x,
    (1+thr_var)x]), constant within the segment for the whole run.

    Draw order is fixed (all durations first, then per-segment rates with
    wifi before adsl) so that realizations stay comparable across parameter
    changes that do not touch the sampled quantities.
    """
    for name, v in (("time_var", time_var), ("thr_var", thr_var)):
        if not 0.0 <= v < 1.0:
            raise ValueError(f"{name} must be in [0, 1), got {v}")

    boundaries = []
    prev = 0.0
    for seg in route.segments:
        d = seg.nominal_duration_s
        d = rng.uniform((1.0 - time_var) * d, (1.0 + time_var) * d)
        prev = prev + max(d, MIN_SEGMENT_S)
        boundaries.append(prev)

    def jitter(x: float) -> float:
        return float(rng.uniform((1.0 - thr_var) * x, (1.0 + thr_var) * x))

    cellular = []
    wifi = []
    adsl = []
    for seg in route.segments:
        if seg.access == CELLULAR:
            cellular.append(jitter(seg.cellular_mbps))
            wifi.append(None)
            adsl.append(None)
        else:
            cellular.append(None)
            wifi.append(jitter(seg.wifi_mbps))
            adsl.append(jitter(seg.adsl_mbps))

    return RealizedRoute(
        route=route,
        boundaries_s=tuple(boundaries),
        cellular_mbps=tuple(cellular),
        wifi_mbps=tuple(wifi),
        adsl_mbps=tuple(adsl),
    )


def load_route_csv(path: str, wifi_warmup_s: float = DEFAULT_WIFI_WARMUP_S) -> Route:
    """Load a route from CSV with columns
    index,access,start_s,cellular_mbps,wifi_mbps,adsl_mbps.

    Rows must be sorted by start time.  Segment durations come from
    consecutive starts; the final segment reuses the previous duration, so a
    route file needs at least two rows.  Empty rate cells mean "not offered".
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"index", "access", "start_s", "cellular_mbps", "wifi_mbps", "adsl_mbps"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"route file {path} missing columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append(
                    (
                        int(row["index"]),
                        row["access"].strip().lower(),
                        float(row["start_s"]),
                        _opt_float(row["cellular_mbps"]),
                        _opt_float(row["wifi_mbps"]),
                        _opt_float(row["adsl_mbps"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad route row: {exc}") from exc
    if len(rows) < 2:
        raise ValueError(f"route file {path} needs at least two segments")
    starts = [r[2] for r in rows]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError(f"route file {path} must be sorted by start_s")
    durations = [b - a for a, b in zip(starts, starts[1:])]
    durations.append(durations[-1])

    segments = tuple(
        Segment(
            index=idx,
            access=access,
            nominal_start_s=start,
            nominal_duration_s=dur,
            cellular_mbps=cell,
            wifi_mbps=wifi,
            adsl_mbps=adsl,
        )
        for (idx, access, start, cell, wifi, adsl), dur in zip(rows, durations)
    )
    return Route(segments=segments, wifi_warmup_s=wifi_warmup_s)


def load_snr_table_csv(path: str) -> SnrCalibrationTable:
    """Load a calibration table from CSV with columns
    snr_lower_db,snr_upper_db,wifi_mbps,adsl_mbps (empty bound = unbounded)."""
    bands = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"snr_lower_db", "snr_upper_db", "wifi_mbps", "adsl_mbps"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"calibration file {path} missing columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                lower = _opt_float(row["snr_lower_db"])
                upper = _opt_float(row["snr_upper_db"])
                bands.append(
                    SnrBand(
                        snr_lower_db=-math.inf if lower is None else lower,
                        snr_upper_db=math.inf if upper is None else upper,
                        wifi_mbps=float(row["wifi_mbps"]),
                        adsl_mbps=float(row["adsl_mbps"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad calibration row: {exc}") from exc
    return SnrCalibrationTable(bands=tuple(bands))


def _opt_float(cell: str | None) -> float | None:
    if cell is None or cell.strip() == "":
        return None
    return float(cell)
