"""Unit tests for the device energy model."""

from __future__ import annotations

import pytest

from prefetchsim import EnergyAccount, EnergyModel


class TestEnergyModel:
    def test_defaults(self):
        m = EnergyModel()
        assert (m.cellular_j_per_mb, m.wifi_j_per_mb) == (100.0, 5.0)
        assert (m.cellular_idle_w, m.wifi_idle_w) == (0.0, 0.77)

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="wifi_idle_w"):
            EnergyModel(wifi_idle_w=-0.1)


class TestEnergyAccount:
    def test_total_combines_transfer_and_idle(self):
        acct = EnergyAccount()
        acct.add_transfer("cellular", 2.0)
        acct.add_transfer("wifi", 10.0)
        acct.add_wifi_time(on_s=100.0, transfer_s=40.0)
        # 2 MB * 100 J/MB + 10 MB * 5 J/MB + 60 s * 0.77 W
        assert acct.total_j(EnergyModel()) == pytest.approx(200.0 + 50.0 + 46.2)

    def test_cellular_only_has_no_idle_term(self):
        acct = EnergyAccount()
        acct.add_transfer("cellular", 3.5)
        assert acct.total_j(EnergyModel()) == pytest.approx(350.0)

    def test_unknown_interface(self):
        with pytest.raises(ValueError, match="unknown interface"):
            EnergyAccount().add_transfer("bluetooth", 1.0)

    def test_negative_volume(self):
        with pytest.raises(ValueError):
            EnergyAccount().add_transfer("wifi", -1.0)

    def test_transfer_cannot_exceed_on_time(self):
        acct = EnergyAccount()
        with pytest.raises(ValueError, match="powered"):
            acct.add_wifi_time(on_s=1.0, transfer_s=2.0)

    def test_times_accumulate(self):
        acct = EnergyAccount()
        acct.add_wifi_time(on_s=10.0, transfer_s=4.0)
        acct.add_wifi_time(on_s=5.0, transfer_s=5.0)
        assert acct.wifi_on_s == 15.0
        assert acct.wifi_transfer_s == 9.0
