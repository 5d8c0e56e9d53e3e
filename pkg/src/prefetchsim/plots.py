"""Figure rendering for sweep results: one errorbar plot per metric."""

from __future__ import annotations

AXIS_LABELS = {
    "streams": "concurrent streams",
    "hotspots": "hotspots along the route",
    "scale_m": "cellular rate scale",
    "scale_w": "WiFi radio rate scale",
    "scale_a": "ADSL backhaul rate scale",
    "time_var": "segment timing variability",
    "thr_var": "throughput variability",
}

_METRICS = (
    ("paused", "paused frames per run", lambda r: r.paused),
    ("energy", "energy per run (J)", lambda r: r.energy_j),
)


def render_sweep_figures(results, axis: str, axis_values, schemes, out_base: str):
    """Render errorbar figures (mean +/- 95% CI, one line per scheme) for a
    sweep.  Writes <out_base>_paused.png and <out_base>_energy.png and
    returns the paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if len(results) != len(axis_values) * len(schemes):
        raise ValueError("results do not tile the axis/scheme grid")

    by_scheme = {s: [] for s in schemes}
    for i, _v in enumerate(axis_values):
        for j, s in enumerate(schemes):
            by_scheme[s].append(results[i * len(schemes) + j])

    paths = []
    xlabel = AXIS_LABELS.get(axis, axis)
    for suffix, ylabel, metric in _METRICS:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for s in schemes:
            summaries = [metric(r) for r in by_scheme[s]]
            ax.errorbar(
                axis_values,
                [m.mean for m in summaries],
                yerr=[m.ci95_halfwidth for m in summaries],
                marker="o",
                capsize=3,
                label=s.value,
            )
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.4)
        ax.legend()
        fig.tight_layout()
        path = f"{out_base}_{suffix}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths
