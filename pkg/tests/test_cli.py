import os

import pytest

from easyo.cli import load_config, main
from easyo.model import ConfigError, Params


def test_gen_topology_roundtrip(tmp_path):
    path = tmp_path / "topo.cfg"
    rc = main(["gen-topology", "--nodes", "20", "--channels", "14",
               "--seed", "7", "--out", str(path)])
    assert rc == 0
    net, params = load_config(str(path))
    assert net.n_nodes == 20
    assert 60 <= net.n_links <= 96
    net2, _ = load_config(str(path))
    assert [(l.tx, l.rx, l.channel, l.distance) for l in net.links] == \
        [(l.tx, l.rx, l.channel, l.distance) for l in net2.links]


def test_missing_config_exits_1(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "nope.cfg"), "--slots", "5"])
    assert rc == 1
    assert "nope.cfg" in capsys.readouterr().err


def test_unknown_key_diagnostic(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[params]\nfrobnicate = 1\n")
    with pytest.raises(ConfigError, match="line 2.*frobnicate"):
        load_config(str(cfg))


def test_run_small_scenario(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "[params]\nV = 300\nslots = 250\nseed = 3\n"
        "[generator]\nnodes = 6\nchannels = 3\nsessions = 2\n"
        "links = 14\nseed = 21\n")
    out = tmp_path / "out"
    rc = main(["run", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    for name in ("slots.csv", "state.csv", "summary.csv"):
        assert (out / name).exists()
    header = (out / "slots.csv").read_text().splitlines()[0]
    assert header.split(",")[:5] == ["slot", "objective", "avg_objective",
                                     "utility", "cost"]


def test_run_deterministic_bytes(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "[params]\nV = 300\nslots = 200\nseed = 3\n"
        "[generator]\nnodes = 6\nchannels = 3\nsessions = 2\n"
        "links = 14\nseed = 21\n")
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")])
    for name in ("slots.csv", "state.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_sweep_rows(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "[params]\nslots = 150\nseed = 3\n"
        "[generator]\nnodes = 6\nchannels = 3\nsessions = 2\n"
        "links = 14\nseed = 21\n")
    out = tmp_path / "sweep"
    rc = main(["sweep", "--config", str(cfg), "--V-list", "100,300",
               "--out", str(out)])
    assert rc == 0
    rows = (out / "summary.csv").read_text().splitlines()
    assert len(rows) == 3
    assert (out / "V100_seed3" / "slots.csv").exists()
    assert (out / "V300_seed4" / "slots.csv").exists()


def test_audit_subcommand(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "[params]\nV = 200\nslots = 120\nseed = 1\n"
        "[generator]\nnodes = 6\nchannels = 3\nsessions = 2\n"
        "links = 14\nseed = 21\n")
    rc = main(["audit", "--config", str(cfg), "--full",
               "--out", str(tmp_path / "audit")])
    assert rc == 0
    assert "audits=120 violations=0" in capsys.readouterr().out


def test_delta_monitor_flags_headroom_free_scenario(tmp_path, capsys):
    # unit distances leave capacities far above delta * p: exit code 2
    cfg = tmp_path / "hot.cfg"
    cfg.write_text(
        "[params]\nV = 50\nslots = 300\nseed = 2\nn0 = 1.0\n"
        "[nodes]\n0 ME 0.0 0.0\n1 ME 1.0 0.0\n2 ME 2.0 0.0\n"
        "[links]\n0 1 0\n1 2 1\n1 0 2\n2 1 3\n"
        "[sessions]\n0 0 2\n")
    rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "hot")])
    assert rc == 2
    assert "monitor violations" in capsys.readouterr().err


def test_env_var_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("EASYO_OUT", str(tmp_path / "envout"))
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "[params]\nslots = 60\nseed = 3\n"
        "[generator]\nnodes = 6\nchannels = 3\nsessions = 2\n"
        "links = 14\nseed = 21\n")
    rc = main(["run", "--config", str(cfg)])
    assert rc == 0
    assert (tmp_path / "envout" / "run" / "summary.csv").exists()


def test_bcd_trace_file(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "[params]\nV = 400\nslots = 400\nseed = 3\n"
        "[generator]\nnodes = 6\nchannels = 3\nsessions = 2\n"
        "links = 14\nseed = 21\n")
    out = tmp_path / "out"
    rc = main(["run", "--config", str(cfg), "--bcd-trace",
               "--out", str(out)])
    assert rc == 0
    lines = (out / "bcd_trace.csv").read_text().splitlines()
    assert lines[0] == "slot,iteration,objective"
    assert len(lines) > 1
