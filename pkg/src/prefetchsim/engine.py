"""Fixed-tick Monte Carlo engine: one run = one realized drive.

The simulation clock advances on a fixed tick.  Between structural events
(segment crossings, phase or cache exhaustion, download completion) every
delivery rate is constant, so the engine processes maximal runs of identical
ticks in one step; results are identical to ticking one step at a time, just
cheaper.  Playback feedback (the rate estimate driving prefetch offsets) is
only read at hotspot exits, which are always window edges.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import (
    BYTES_PER_MB,
    INTERFACE_CELLULAR,
    INTERFACE_WIFI,
    EnergyAccount,
    EnergyModel,
)
from .playout import BYTE_EPS, StreamState
from .route import (
    WIFI,
    Route,
    build_route,
    load_route_csv,
    sample_realization,
)
from .scheme import (
    SOURCE_BACKHAUL,
    SOURCE_CACHE,
    SOURCE_CELLULAR,
    SchemeKind,
    SchemeState,
    WIFI_SOURCES,
)
from .videotrace import (
    BITS_PER_BYTE,
    BITS_PER_MBIT,
    EwmaRate,
    FrameTrace,
    load_trace,
    synthesize_profile,
)

BYTES_PER_S_PER_MBPS = BITS_PER_MBIT / BITS_PER_BYTE

# Seed-stream tags keeping the trace draw disjoint from per-run draws.
_TRACE_STREAM = 0
_RUN_STREAM = 1

# Default number of streams per synthetic profile.
DEFAULT_STREAMS = {"hd": 4, "sd": 11}

CI95_Z = 1.96


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything defining one scenario (a set of Monte Carlo runs)."""

    scheme: SchemeKind
    num_streams: int = 4
    num_hotspots: int = 4
    scale_m: float = 1.0
    scale_w: float = 1.0
    scale_a: float = 1.0
    time_var: float = 0.10
    thr_var: float = 0.20
    trace_path: str | None = None
    synth_profile: str | None = "hd"
    runs: int = 120
    base_seed: int = 0
    tick_s: float = 0.01
    playout_threshold_frames: int = 200
    wifi_warmup_s: float = 20.0
    ewma_weight: float = 0.1
    route_path: str | None = None
    energy_model: EnergyModel = EnergyModel()

    def validate(self) -> None:
        if self.num_streams < 1:
            raise ValueError("need at least one stream")
        if self.runs < 1:
            raise ValueError("need at least one run")
        if self.base_seed < 0:
            raise ValueError("seed must be non-negative")
        if self.tick_s <= 0:
            raise ValueError("tick must be positive")
        if self.playout_threshold_frames < 1:
            raise ValueError("start threshold must be at least one frame")
        if self.trace_path is not None and self.synth_profile is not None:
            raise ValueError("give either a trace file or a synthetic profile, not both")
        # Route and rate parameters are validated where the route is built.


def build_scenario_route(config: ScenarioConfig) -> Route:
    """The route a scenario drives: a loaded file, or the measured layout.

    Rate scale factors apply to the generated layout only; a route file is
    taken as-is.
    """
    if config.route_path is not None:
        return load_route_csv(config.route_path, wifi_warmup_s=config.wifi_warmup_s)
    return build_route(
        num_hotspots=config.num_hotspots,
        scale_m=config.scale_m,
        scale_w=config.scale_w,
        scale_a=config.scale_a,
        wifi_warmup_s=config.wifi_warmup_s,
    )


def build_scenario_trace(config: ScenarioConfig, route: Route) -> FrameTrace:
    """The frame trace all streams play: loaded, or synthesized once per
    scenario from a seed stream disjoint from the per-run streams."""
    if config.trace_path is not None:
        return load_trace(config.trace_path)
    if config.synth_profile is None:
        raise ValueError("a trace file or a synthetic profile is required")
    seed = np.random.SeedSequence([config.base_seed, _TRACE_STREAM])
    return synthesize_profile(config.synth_profile, route.total_duration_s, seed)


def run_rng(base_seed: int, run_index: int) -> np.random.Generator:
    """Per-run generator; runs are independent streams of one base seed."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([base_seed, _RUN_STREAM, run_index]))
    )


@dataclass(frozen=True)
class RunResult:
    """Outcome of a single realized drive."""

    paused_total: int
    paused_per_stream: tuple[int, ...]
    energy_j: float
    account: EnergyAccount
    bytes_by_source: dict[str, float]
    frontier_per_stream: tuple[float, ...]
    frames_played_per_stream: tuple[int, ...]
    horizon_s: float


def run_once(
    config: ScenarioConfig,
    run_index: int,
    route: Route | None = None,
    trace: FrameTrace | None = None,
    timeline=None,
) -> RunResult:
    """Simulate one run.  route/trace may be passed in so a scenario builds
    them once; timeline, if given, must be a csv.writer-style object and
    receives one row per stream per constant-rate window."""
    config.validate()
    if route is None:
        route = build_scenario_route(config)
    if trace is None:
        trace = build_scenario_trace(config, route)

    rng = run_rng(config.base_seed, run_index)
    realized = sample_realization(route, config.time_var, config.thr_var, rng)

    dt = config.tick_s
    # The drive lasts the route's nominal duration; timing variability moves
    # the handovers within that window.  Boundaries snap to the first tick at
    # or after them; the final segment stretches to the horizon if its
    # measured end lands earlier, and segments pushed past the horizon are
    # simply never reached.
    end_tick = int(math.ceil(route.total_duration_s / dt - 1e-9))
    bticks: list[int] = []
    prev = 0
    for b in realized.boundaries_s:
        k = max(int(math.ceil(b / dt - 1e-9)), prev + 1)
        bticks.append(k)
        prev = k
    bticks[-1] = max(bticks[-1], end_tick)
    t_end = end_tick * dt

    # Streams play the clip on a loop for the whole drive; the effective
    # trace covers every frame that could come due plus the startup buffer.
    n_frames = int(math.ceil(t_end * trace.fps - 1e-9)) + config.playout_threshold_frames
    eff_trace = trace.tiled_to(n_frames)
    streams = [
        StreamState(
            trace=eff_trace,
            ewma=EwmaRate(0.0, config.ewma_weight),
            threshold_frames=config.playout_threshold_frames,
        )
        for _ in range(config.num_streams)
    ]

    state = SchemeState(config.scheme)
    state.issue_instruction(route, streams, None, 0.0)

    by_source = {SOURCE_CELLULAR: 0.0, SOURCE_BACKHAUL: 0.0, SOURCE_CACHE: 0.0}
    wifi_transfer_s = 0.0
    segments = route.segments
    nseg = len(segments)
    pos = 0
    tick = 0

    while tick < end_tick:
        while pos < nseg and bticks[pos] <= tick:
            old = pos
            pos += 1
            now = tick * dt
            if segments[old].access == WIFI:
                state.leave_hotspot()
                state.issue_instruction(route, streams, old, now)
            if pos < nseg and segments[pos].access == WIFI:
                state.enter_hotspot(pos, streams)
        if pos >= nseg:
            break

        plan = state.plan_rates(realized, pos, streams)
        rates_bps = [r * BYTES_PER_S_PER_MBPS for r in plan.rates_mbps]

        fills: list[tuple] = []
        cache = state.pending_cache
        if cache is not None:
            fillable = cache.fillable()
            if fillable:
                share = (
                    realized.adsl_mbps[cache.segment_pos]
                    * BYTES_PER_S_PER_MBPS
                    / len(fillable)
                )
                fills = [(cache.entries[i], share) for i in fillable]

        # Longest run of ticks over which no rate or phase can change.
        limit = bticks[pos] - tick
        for i, stream in enumerate(streams):
            r = rates_bps[i]
            if r <= 0.0:
                continue
            cap = min(state.phase_remaining(i), stream.remaining_bytes)
            limit = min(limit, int(cap / (r * dt) + 1e-9))
        for entry, share in fills:
            limit = min(limit, int(entry.remaining_capacity / (share * dt) + 1e-9))
        m = max(1, limit)
        span = m * dt
        t1 = (tick + m) * dt

        any_wifi = False
        for i, stream in enumerate(streams):
            r = rates_bps[i]
            if r > 0.0:
                give = min(r * span, state.phase_remaining(i), stream.remaining_bytes)
                src = plan.sources[i]
                by_source[src] += give
                state.consume(i, give)
                stream.deliver_bytes(give)
                if src in WIFI_SOURCES:
                    any_wifi = True
            stream.advance_playout(t1)
            if timeline is not None:
                timeline.writerow(
                    [
                        f"{tick * dt:.6f}",
                        i,
                        plan.sources[i],
                        f"{plan.rates_mbps[i]:.6f}",
                        f"{stream.received_bytes:.1f}",
                        stream.next_frame,
                        stream.paused_frames,
                    ]
                )
        for entry, share in fills:
            entry.cached_bytes += min(share * span, entry.remaining_capacity)
        if any_wifi:
            wifi_transfer_s += span
        tick += m

    account = EnergyAccount()
    account.add_transfer(INTERFACE_CELLULAR, by_source[SOURCE_CELLULAR] / BYTES_PER_MB)
    account.add_transfer(
        INTERFACE_WIFI,
        (by_source[SOURCE_BACKHAUL] + by_source[SOURCE_CACHE]) / BYTES_PER_MB,
    )
    if config.scheme is not SchemeKind.MOBILE_ONLY:
        on_s = _wifi_on_seconds(route, bticks, dt, t_end)
        account.add_wifi_time(on_s=on_s, transfer_s=min(wifi_transfer_s, on_s))

    return RunResult(
        paused_total=sum(s.paused_frames for s in streams),
        paused_per_stream=tuple(s.paused_frames for s in streams),
        energy_j=account.total_j(config.energy_model),
        account=account,
        bytes_by_source=by_source,
        frontier_per_stream=tuple(s.received_bytes for s in streams),
        frames_played_per_stream=tuple(s.next_frame for s in streams),
        horizon_s=t_end,
    )


def _wifi_on_seconds(route: Route, bticks: list[int], dt: float, t_end: float) -> float:
    """Union length of the radio-on windows: warmup before each hotspot
    through its exit, clipped to the run."""
    intervals = []
    for p in route.wifi_positions():
        start = (bticks[p - 1] if p > 0 else 0) * dt - route.wifi_warmup_s
        stop = bticks[p] * dt
        intervals.append((max(0.0, start), min(stop, t_end)))
    intervals.sort()
    total = 0.0
    cur_start, cur_stop = None, None
    for start, stop in intervals:
        if stop <= start:
            continue
        if cur_stop is None or start > cur_stop:
            if cur_stop is not None:
                total += cur_stop - cur_start
            cur_start, cur_stop = start, stop
        else:
            cur_stop = max(cur_stop, stop)
    if cur_stop is not None:
        total += cur_stop - cur_start
    return total


@dataclass(frozen=True)
class MetricSummary:
    """Mean with a 95% normal-approximation confidence halfwidth."""

    mean: float
    std: float
    ci95_halfwidth: float


def summarize(values) -> MetricSummary:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot summarize zero samples")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return MetricSummary(
        mean=mean, std=std, ci95_halfwidth=CI95_Z * std / math.sqrt(arr.size)
    )


@dataclass(frozen=True)
class ScenarioResult:
    """Monte Carlo summary of one scenario."""

    config: ScenarioConfig
    paused: MetricSummary
    energy_j: MetricSummary
    runs: int
    paused_runs: tuple[int, ...]
    energy_runs: tuple[float, ...]


def _pool_run(args) -> RunResult:
    config, run_index, route, trace = args
    return run_once(config, run_index, route=route, trace=trace)


def run_scenario(config: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    """Run all Monte Carlo repetitions of one scenario.

    Results are independent of jobs: each run's randomness depends only on
    (base_seed, run_index), and collection preserves run order.
    """
    config.validate()
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    route = build_scenario_route(config)
    trace = build_scenario_trace(config, route)
    if jobs == 1 or config.runs == 1:
        results = [
            run_once(config, i, route=route, trace=trace) for i in range(config.runs)
        ]
    else:
        work = [(config, i, route, trace) for i in range(config.runs)]
        chunk = max(1, config.runs // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_pool_run, work, chunksize=chunk))
    return ScenarioResult(
        config=config,
        paused=summarize([r.paused_total for r in results]),
        energy_j=summarize([r.energy_j for r in results]),
        runs=config.runs,
        paused_runs=tuple(r.paused_total for r in results),
        energy_runs=tuple(r.energy_j for r in results),
    )


def sweep(
    configs: list[ScenarioConfig], jobs: int = 1, progress=None
) -> list[ScenarioResult]:
    """Run a list of scenarios in order; progress, if given, is called as
    progress(done, total, config) after each scenario."""
    if not configs:
        raise ValueError("sweep needs at least one scenario")
    results = []
    for i, config in enumerate(configs):
        results.append(run_scenario(config, jobs=jobs))
        if progress is not None:
            progress(i + 1, len(configs), config)
    return results
