"""Engine vs. brute-force oracle on small hand-built scenarios.

Every scenario here uses zero variability and event times that land on
tick boundaries, so the windowed engine and the continuous oracle must
agree exactly: same paused counts, same per-source byte totals, same
energy.  Scenario shapes stay tiny (at most 3 segments, at most 20
frames) so the oracle stays obviously correct.
"""

from __future__ import annotations

import numpy as np
import pytest

from prefetchsim import (
    CELLULAR,
    WIFI,
    FrameTrace,
    Route,
    ScenarioConfig,
    SchemeKind,
    Segment,
    run_once,
)
from tests.oracle import OracleSegment, OracleStream, oracle_run


def make_route(spec, warmup_s):
    """spec rows: ("c", duration, cellular) or ("w", duration, wifi, adsl)."""
    segs = []
    t = 0.0
    for k, row in enumerate(spec):
        if row[0] == "c":
            segs.append(
                Segment(
                    index=k + 1,
                    access=CELLULAR,
                    nominal_start_s=t,
                    nominal_duration_s=row[1],
                    cellular_mbps=row[2],
                )
            )
        else:
            segs.append(
                Segment(
                    index=k + 1,
                    access=WIFI,
                    nominal_start_s=t,
                    nominal_duration_s=row[1],
                    wifi_mbps=row[2],
                    adsl_mbps=row[3],
                )
            )
        t += row[1]
    return Route(segments=tuple(segs), wifi_warmup_s=warmup_s)


def make_oracle_segments(spec):
    out = []
    t = 0.0
    for row in spec:
        t += row[1]
        if row[0] == "c":
            out.append(OracleSegment(access=CELLULAR, end_s=t, cellular_mbps=row[2]))
        else:
            out.append(
                OracleSegment(access=WIFI, end_s=t, wifi_mbps=row[2], adsl_mbps=row[3])
            )
    return out


def run_both(spec, sizes, fps, threshold, scheme, n_streams=1, warmup_s=20.0,
             tick_s=0.01):
    route = make_route(spec, warmup_s)
    horizon = route.total_duration_s
    config = ScenarioConfig(
        scheme=SchemeKind.from_token(scheme),
        num_streams=n_streams,
        time_var=0.0,
        thr_var=0.0,
        synth_profile=None,
        runs=1,
        tick_s=tick_s,
        playout_threshold_frames=threshold,
        wifi_warmup_s=warmup_s,
    )
    trace = FrameTrace.from_sizes(fps, sizes)
    engine = run_once(config, 0, route=route, trace=trace)

    # Mirror the engine's looping: the oracle sees the same effective clip.
    n_eff = int(np.ceil(horizon * fps - 1e-9)) + threshold
    eff_sizes = list(np.resize(np.asarray(sizes, dtype=np.int64), n_eff))
    streams = [OracleStream(fps=fps, sizes=eff_sizes, threshold=threshold)
               for _ in range(n_streams)]
    oracle = oracle_run(
        make_oracle_segments(spec), streams, scheme, horizon, warmup_s=warmup_s
    )
    return engine, oracle, n_eff


def assert_exact(engine, oracle):
    assert engine.paused_total == oracle.paused_total
    assert list(engine.paused_per_stream) == oracle.paused_per_stream
    assert list(engine.frames_played_per_stream) == oracle.played_per_stream
    for key in ("cellular", "wifi-backhaul", "wifi-cache"):
        assert engine.bytes_by_source[key] == pytest.approx(
            oracle.bytes_by_source[key], abs=1e-6
        )
    for got, want in zip(engine.frontier_per_stream, oracle.frontier_per_stream):
        assert got == pytest.approx(want, abs=1e-6)
    assert engine.account.cellular_mb == pytest.approx(oracle.cellular_mb, abs=1e-12)
    assert engine.account.wifi_mb == pytest.approx(oracle.wifi_mb, abs=1e-12)
    assert engine.account.wifi_on_s == pytest.approx(oracle.wifi_on_s, abs=1e-9)
    assert engine.account.wifi_transfer_s == pytest.approx(
        oracle.wifi_transfer_s, abs=1e-9
    )
    assert engine.energy_j == pytest.approx(oracle.energy_j, rel=1e-12, abs=1e-9)


def test_micro_single_cell_sufficient():
    # Fast link, tiny clip: no pauses, all bytes cellular.
    spec = [("c", 6.0, 4.0)]
    engine, oracle, n_eff = run_both(spec, [4000] * 17, 2.5, 2, "mobile-only")
    assert n_eff <= 20
    assert engine.paused_total == 0
    assert engine.bytes_by_source["cellular"] == pytest.approx(17 * 4000)
    assert_exact(engine, oracle)


def test_micro_single_cell_starved():
    # Link slower than the playback rate: pauses accumulate one per frame
    # once the startup buffer drains.
    spec = [("c", 7.0, 0.064)]
    engine, oracle, n_eff = run_both(spec, [4000] * 20, 2.5, 2, "mobile-only")
    assert n_eff <= 20
    assert engine.paused_total == 8
    assert engine.frames_played_per_stream == (14,)
    assert_exact(engine, oracle)


def test_micro_hotspot_relief_no_prefetch():
    # One stall bridges into the hotspot where the backhaul rescues it.
    spec = [("c", 2.0, 0.05), ("w", 2.0, 0.8, 0.4), ("c", 2.0, 0.05)]
    engine, oracle, n_eff = run_both(spec, [6000] * 16, 2.5, 1, "wifi-noprefetch")
    assert n_eff <= 20
    assert engine.paused_total == 1
    assert engine.bytes_by_source["cellular"] == pytest.approx(12500.0)
    assert engine.bytes_by_source["wifi-backhaul"] == pytest.approx(83500.0)
    assert engine.bytes_by_source["wifi-cache"] == pytest.approx(0.0)
    assert_exact(engine, oracle)


def test_micro_prefetch_cache_phases():
    # Cache filled ahead of arrival, then radio-rate catch-up, then the
    # tail over the backhaul; energy follows the byte split exactly.
    spec = [("c", 3.0, 0.08), ("w", 2.0, 1.6, 0.4), ("c", 3.0, 0.08)]
    engine, oracle, n_eff = run_both(
        spec, [10000] * 18, 2.0, 2, "wifi-prefetch", warmup_s=1.0
    )
    assert n_eff <= 20
    assert engine.bytes_by_source["cellular"] == pytest.approx(30000.0)
    assert engine.bytes_by_source["wifi-cache"] == pytest.approx(120000.0)
    assert engine.bytes_by_source["wifi-backhaul"] == pytest.approx(30000.0)
    assert engine.account.wifi_on_s == pytest.approx(3.0)
    assert engine.account.wifi_transfer_s == pytest.approx(1.2)
    assert engine.energy_j == pytest.approx(5.136)
    assert_exact(engine, oracle)


def test_micro_prefetch_two_streams_share():
    # Two identical streams split cellular, cache fill, radio, and the
    # capped backhaul evenly all the way through.
    spec = [("c", 3.0, 0.4), ("w", 2.0, 1.6, 0.8), ("c", 3.0, 0.4)]
    engine, oracle, n_eff = run_both(
        spec, [9000] * 18, 2.0, 2, "wifi-prefetch", n_streams=2, warmup_s=1.0
    )
    assert n_eff <= 20
    assert engine.bytes_by_source["cellular"] == pytest.approx(150000.0)
    assert engine.bytes_by_source["wifi-cache"] == pytest.approx(150000.0)
    assert engine.bytes_by_source["wifi-backhaul"] == pytest.approx(24000.0)
    assert engine.frontier_per_stream == pytest.approx((162000.0, 162000.0))
    assert_exact(engine, oracle)


def test_micro_pending_stall_at_horizon():
    # The last reachable frame arrives exactly at the end of the run; the
    # stall before it is counted once.
    spec = [("c", 4.0, 0.008)]
    engine, oracle, n_eff = run_both(spec, [2000] * 11, 2.5, 1, "mobile-only")
    assert n_eff <= 20
    assert engine.paused_total == 1
    assert engine.frames_played_per_stream == (2,)
    assert engine.bytes_by_source["cellular"] == pytest.approx(4000.0)
    assert_exact(engine, oracle)


def test_micro_mobile_only_inherits_cellular_in_wifi():
    # A cellular-only phone keeps the last roadside rate through a hotspot
    # and spends no WiFi energy at all.
    spec = [("c", 2.0, 0.2), ("w", 2.0, 9.9, 5.0), ("c", 2.0, 0.3)]
    engine, oracle, n_eff = run_both(spec, [50000] * 17, 2.5, 2, "mobile-only")
    assert n_eff <= 20
    assert engine.bytes_by_source["cellular"] == pytest.approx(175000.0)
    assert engine.bytes_by_source["wifi-backhaul"] == 0.0
    assert engine.bytes_by_source["wifi-cache"] == 0.0
    assert engine.account.wifi_on_s == 0.0
    assert engine.energy_j == pytest.approx(17.5)
    assert engine.paused_total == 2
    assert_exact(engine, oracle)


def test_rich_route_close_to_oracle():
    # Two hotspots, a mid-route instruction driven by the observed frame
    # rate, and a cache that hits its capacity cap.  Event times no longer
    # land on ticks, so a fine tick must get close, not exact.
    spec = [
        ("c", 20.0, 0.16),
        ("w", 10.0, 1.6, 0.24),
        ("c", 20.0, 0.08),
        ("w", 10.0, 1.6, 0.24),
        ("c", 10.0, 0.08),
    ]
    fps, threshold = 2.0, 20
    sizes = [8000 + (j % 5) * 1000 for j in range(160)]
    engine, oracle, _ = run_both(
        spec, sizes, fps, threshold, "wifi-prefetch", warmup_s=5.0, tick_s=0.001
    )
    assert abs(engine.paused_total - oracle.paused_total) <= 1
    for key in ("cellular", "wifi-backhaul", "wifi-cache"):
        got = engine.bytes_by_source[key]
        want = oracle.bytes_by_source[key]
        assert got == pytest.approx(want, rel=5e-3, abs=500.0)
    assert engine.frontier_per_stream[0] == pytest.approx(
        oracle.frontier_per_stream[0], rel=1e-3
    )
    # The mid-route instruction must have produced some cached bytes.
    assert oracle.bytes_by_source["wifi-cache"] > 0.0
