"""Device energy accounting for the two radios.

Transfer energy is charged per megabyte moved over each interface; the WiFi
radio additionally burns idle power whenever it is powered but not
transferring (including the warm-up window before each hotspot).  The
cellular radio's idle draw is folded into its per-MB cost, so only its
transferred volume is tracked.
"""

from __future__ import annotations

from dataclasses import dataclass

BYTES_PER_MB = 1.0e6

INTERFACE_CELLULAR = "cellular"
INTERFACE_WIFI = "wifi"


@dataclass(frozen=True)
class EnergyModel:
    """Per-interface energy costs."""

    cellular_j_per_mb: float = 100.0
    cellular_idle_w: float = 0.0
    wifi_j_per_mb: float = 5.0
    wifi_idle_w: float = 0.77

    def __post_init__(self):
        for name in ("cellular_j_per_mb", "cellular_idle_w", "wifi_j_per_mb", "wifi_idle_w"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} cannot be negative")


@dataclass
class EnergyAccount:
    """Volumes and radio-on times accumulated over one run."""

    cellular_mb: float = 0.0
    wifi_mb: float = 0.0
    wifi_on_s: float = 0.0
    wifi_transfer_s: float = 0.0

    def add_transfer(self, interface: str, mb: float) -> None:
        if mb < 0:
            raise ValueError("transferred volume cannot be negative")
        if interface == INTERFACE_CELLULAR:
            self.cellular_mb += mb
        elif interface == INTERFACE_WIFI:
            self.wifi_mb += mb
        else:
            raise ValueError(f"unknown interface {interface!r}")

    def add_wifi_time(self, on_s: float = 0.0, transfer_s: float = 0.0) -> None:
        if on_s < 0 or transfer_s < 0:
            raise ValueError("durations cannot be negative")
        self.wifi_on_s += on_s
        self.wifi_transfer_s += transfer_s
        if self.wifi_transfer_s > self.wifi_on_s + 1e-9:
            raise ValueError("WiFi cannot transfer longer than it is powered")

    def total_j(self, model: EnergyModel) -> float:
        """Total device energy: per-MB transfer costs plus WiFi idle burn
        while powered but not transferring."""
        idle_s = max(0.0, self.wifi_on_s - self.wifi_transfer_s)
        return (
            self.cellular_mb * model.cellular_j_per_mb
            + self.wifi_mb * model.wifi_j_per_mb
            + idle_s * model.wifi_idle_w
        )
