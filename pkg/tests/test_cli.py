"""End-to-end and unit tests for the command-line interface."""

from __future__ import annotations

import json
import os

import pytest

from prefetchsim.cli import (
    CSV_COLUMNS,
    ENV_SEED,
    TIMELINE_COLUMNS,
    ConfigError,
    build_parser,
    main,
    merge_settings,
    parse_axis_values,
    parse_config_file,
)

# Fast settings shared by the end-to-end invocations.
FAST = ["--streams", "1", "--runs", "2", "--synth", "hd"]


def settings_for(argv):
    return merge_settings(build_parser().parse_args(argv))


class TestConfigFile:
    def test_parse_with_comments(self, tmp_path):
        p = tmp_path / "sim.conf"
        p.write_text(
            "# comment line\n"
            "runs = 7   # trailing comment\n"
            "scheme=mobile-only\n"
            "\n"
            "scale_w = 1.2\n"
        )
        values = parse_config_file(str(p))
        assert values == {"runs": 7, "scheme": "mobile-only", "scale_w": 1.2}

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "sim.conf"
        p.write_text("velocity=3\n")
        with pytest.raises(ConfigError, match=r"sim\.conf:1: unknown key"):
            parse_config_file(str(p))

    def test_duplicate_key(self, tmp_path):
        p = tmp_path / "sim.conf"
        p.write_text("runs=1\nruns=2\n")
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_file(str(p))

    def test_missing_equals(self, tmp_path):
        p = tmp_path / "sim.conf"
        p.write_text("runs 5\n")
        with pytest.raises(ConfigError, match="key=value"):
            parse_config_file(str(p))

    def test_bad_value_type(self, tmp_path):
        p = tmp_path / "sim.conf"
        p.write_text("runs=many\n")
        with pytest.raises(ConfigError, match=r"sim\.conf:1: bad value"):
            parse_config_file(str(p))

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config_file("/no/such/file.conf")


class TestMerging:
    def test_flags_beat_file_beats_default(self, tmp_path):
        p = tmp_path / "sim.conf"
        p.write_text("runs=7\ntick=0.02\n")
        s = settings_for(["run", "--config", str(p), "--runs", "3"])
        assert s["runs"] == 3  # flag wins
        assert s["tick"] == 0.02  # file wins over default
        assert s["hotspots"] == 4  # default

    def test_trace_flag_clears_default_synth(self):
        s = settings_for(["run", "--trace", "clip.trace"])
        assert s["trace"] == "clip.trace"
        assert s["synth"] is None

    def test_trace_and_synth_flags_conflict(self):
        with pytest.raises(ConfigError, match="mutually exclusive"):
            settings_for(["run", "--trace", "clip.trace", "--synth", "hd"])

    def test_synth_flag_beats_file_trace(self, tmp_path):
        p = tmp_path / "sim.conf"
        p.write_text("trace=clip.trace\n")
        s = settings_for(["run", "--config", str(p), "--synth", "sd"])
        assert s["trace"] is None
        assert s["synth"] == "sd"

    def test_bad_synth_profile(self):
        with pytest.raises(ConfigError, match="synth must be"):
            settings_for(["run", "--synth", "4k"])

    def test_bad_axis(self):
        with pytest.raises(ConfigError, match="axis must be"):
            settings_for(["sweep", "--axis", "speed"])

    def test_seed_env_fallback(self, monkeypatch):
        monkeypatch.setenv(ENV_SEED, "77")
        assert settings_for(["run"])["seed"] == 77
        monkeypatch.delenv(ENV_SEED)
        assert settings_for(["run"])["seed"] == 0

    def test_seed_flag_beats_env(self, monkeypatch):
        monkeypatch.setenv(ENV_SEED, "77")
        assert settings_for(["run", "--seed", "5"])["seed"] == 5

    def test_bad_env_seed(self, monkeypatch):
        monkeypatch.setenv(ENV_SEED, "abc")
        with pytest.raises(ConfigError, match=ENV_SEED):
            settings_for(["run"])


class TestAxisValues:
    def test_defaults_per_axis(self):
        s = settings_for(["sweep", "--axis", "hotspots"])
        assert parse_axis_values(s, "hotspots") == [2, 4, 8]
        assert parse_axis_values(s, "thr_var") == [0.2, 0.4, 0.6, 0.8]

    def test_streams_defaults_follow_profile(self):
        s = settings_for(["sweep", "--axis", "streams", "--synth", "sd"])
        assert parse_axis_values(s, "streams") == [8, 9, 10, 11]
        s = settings_for(["sweep", "--axis", "streams"])  # hd default
        assert parse_axis_values(s, "streams") == [2, 3, 4, 5]

    def test_explicit_values(self):
        s = settings_for(["sweep", "--axis", "hotspots", "--axis-values", "2, 8"])
        assert parse_axis_values(s, "hotspots") == [2, 8]

    def test_bad_values(self):
        s = settings_for(["sweep", "--axis", "hotspots", "--axis-values", "2,x"])
        with pytest.raises(ConfigError, match="bad axis value"):
            parse_axis_values(s, "hotspots")


class TestRunCommand:
    def test_summary_and_outputs(self, tmp_path, capsys):
        out = tmp_path / "result.csv"
        tl = tmp_path / "timeline.csv"
        rc = main(
            ["run", *FAST, "--scheme", "wifi-prefetch",
             "--out", str(out), "--timeline", str(tl)]
        )
        assert rc == 0
        text = capsys.readouterr().out
        assert "paused_frames mean=" in text
        assert "energy_j mean=" in text

        lines = out.read_text().splitlines()
        header_idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
        assert lines[header_idx] == ",".join(CSV_COLUMNS)
        assert lines[header_idx + 1].startswith("-,wifi-prefetch,")
        assert any(l.startswith("# schemes=wifi-prefetch") for l in lines)

        tl_lines = tl.read_text().splitlines()
        assert tl_lines[0] == ",".join(TIMELINE_COLUMNS)
        assert len(tl_lines) > 10
        first = tl_lines[1].split(",")
        assert first[0] == "0.000000"
        assert first[2] in ("cellular", "wifi-backhaul", "wifi-cache", "idle")

    def test_unknown_scheme_fails_cleanly(self, capsys):
        rc = main(["run", *FAST, "--scheme", "teleport"])
        assert rc == 1
        assert "error: unknown scheme" in capsys.readouterr().err

    def test_unsupported_hotspot_count(self, capsys):
        rc = main(["run", *FAST, "--hotspots", "3"])
        assert rc == 1
        assert "num_hotspots" in capsys.readouterr().err

    def test_route_file_run(self, tmp_path, capsys):
        route = tmp_path / "route.csv"
        route.write_text(
            "index,access,start_s,cellular_mbps,wifi_mbps,adsl_mbps\n"
            "1,cellular,0,4.0,,\n"
            "2,wifi,30,,16.0,8.0\n"
            "3,cellular,60,4.0,,\n"
        )
        rc = main(["run", *FAST, "--route", str(route)])
        assert rc == 0
        assert "paused_frames" in capsys.readouterr().out


class TestSweepCommand:
    def test_axis_required(self, capsys):
        rc = main(["sweep", *FAST])
        assert rc == 1
        assert "needs an axis" in capsys.readouterr().err

    def test_csv_rows_and_order(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(
            ["sweep", *FAST, "--axis", "streams", "--axis-values", "1,2",
             "--schemes", "mobile-only,wifi-prefetch", "--out", str(out)]
        )
        assert rc == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == ",".join(CSV_COLUMNS)
        cells = [l.split(",")[:2] for l in lines[1:]]
        assert cells == [
            ["1", "mobile-only"],
            ["1", "wifi-prefetch"],
            ["2", "mobile-only"],
            ["2", "wifi-prefetch"],
        ]

    def test_echo_block_records_config(self, tmp_path):
        out = tmp_path / "sweep.csv"
        main(["sweep", *FAST, "--axis", "hotspots", "--axis-values", "2,4",
              "--schemes", "mobile-only", "--seed", "5", "--out", str(out)])
        text = out.read_text()
        assert "# seed=5\n" in text
        assert "# axis=hotspots\n" in text
        assert "# axis_values=2,4\n" in text

    def test_repeat_invocations_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", *FAST, "--axis", "hotspots", "--axis-values", "2,4",
                "--schemes", "wifi-prefetch"]
        assert main([*argv, "--out", str(a)]) == 0
        assert main([*argv, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_json_matches_csv(self, tmp_path):
        c, j = tmp_path / "s.csv", tmp_path / "s.json"
        argv = ["sweep", *FAST, "--axis", "hotspots", "--axis-values", "2,4",
                "--schemes", "mobile-only"]
        main([*argv, "--out", str(c)])
        main([*argv, "--format", "json", "--out", str(j)])
        payload = json.loads(j.read_text())
        assert payload["config"]["axis"] == "hotspots"
        csv_rows = [l.split(",") for l in c.read_text().splitlines()
                    if not l.startswith("#")][1:]
        assert len(payload["results"]) == len(csv_rows) == 2
        for rec, row in zip(payload["results"], csv_rows):
            assert rec["scheme"] == row[1]
            assert rec["paused_mean"] == pytest.approx(float(row[2]), abs=1e-6)
            assert rec["energy_mean_j"] == pytest.approx(float(row[4]), abs=1e-6)


class TestReproduceCommand:
    def test_writes_every_sweep(self, tmp_path, capsys):
        out_dir = tmp_path / "results"
        rc = main(
            ["reproduce", *FAST, "--runs", "1", "--no-figures",
             "--out-dir", str(out_dir)]
        )
        assert rc == 0
        names = sorted(os.listdir(out_dir))
        assert names == [
            "sweep_backhaul_scale.csv",
            "sweep_cellular_scale.csv",
            "sweep_hotspots.csv",
            "sweep_streams.csv",
            "sweep_throughput_variability.csv",
            "sweep_time_variability.csv",
            "sweep_wifi_scale.csv",
        ]
        listed = capsys.readouterr().out.splitlines()
        assert len(listed) == 7
        for name in names:
            lines = (out_dir / name).read_text().splitlines()
            assert any(l.startswith("# axis=") for l in lines)
            data = [l for l in lines if not l.startswith("#")]
            assert data[0] == ",".join(CSV_COLUMNS)
            assert len(data) > 1
