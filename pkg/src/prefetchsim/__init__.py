"""Trace-driven simulator of vehicular video streaming over integrated
cellular/WiFi access, with predictive hotspot prefetching."""

from .energy import EnergyAccount, EnergyModel
from .engine import (
    MetricSummary,
    RunResult,
    ScenarioConfig,
    ScenarioResult,
    build_scenario_route,
    build_scenario_trace,
    run_once,
    run_scenario,
    summarize,
    sweep,
)
from .playout import StreamState
from .route import (
    CELLULAR,
    WIFI,
    RealizedRoute,
    Route,
    Segment,
    SnrCalibrationTable,
    build_route,
    load_route_csv,
    sample_realization,
    snr_to_throughput,
)
from .scheme import SchemeKind, SchemeState, estimate_offset, fair_shares
from .videotrace import (
    EwmaRate,
    FrameTrace,
    ewma_update,
    load_trace,
    synthesize_trace,
)

__version__ = "0.1.0"

__all__ = [
    "CELLULAR",
    "WIFI",
    "EnergyAccount",
    "EnergyModel",
    "MetricSummary",
    "RunResult",
    "ScenarioConfig",
    "ScenarioResult",
    "StreamState",
    "RealizedRoute",
    "Route",
    "Segment",
    "SnrCalibrationTable",
    "SchemeKind",
    "SchemeState",
    "EwmaRate",
    "FrameTrace",
    "build_route",
    "build_scenario_route",
    "build_scenario_trace",
    "estimate_offset",
    "ewma_update",
    "fair_shares",
    "load_route_csv",
    "load_trace",
    "run_once",
    "run_scenario",
    "sample_realization",
    "snr_to_throughput",
    "summarize",
    "sweep",
    "synthesize_trace",
    "__version__",
]
