"""The figure pipeline consumes the simulator only through its CLI and
documented CSV files: fixtures shell out to `easyo` to produce real data.
"""

import os
import subprocess
import sys

import pytest

from easyo_plots.cli import main
from easyo_plots.figures import (plot_bcd, plot_sensitivity,
                                 plot_trajectories, plot_v_sweep)
from easyo_plots.io import SchemaError, read_csv

CONFIG = """\
[params]
V = 400
slots = 400
seed = 3
[generator]
nodes = 6
channels = 3
sessions = 2
links = 14
seed = 21
"""


def easyo(*args):
    proc = subprocess.run([sys.executable, "-m", "easyo.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def sweep_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    cfg = root / "net.cfg"
    cfg.write_text(CONFIG)
    out = root / "sweep"
    easyo("sweep", "--config", str(cfg), "--V-list", "100,300,600",
          "--out", str(out), "--bcd-trace")
    return out


def test_v_sweep_panels(sweep_dir, tmp_path):
    res = plot_v_sweep(str(sweep_dir / "summary.csv"), str(tmp_path))
    assert len(res.paths) == 1
    assert os.path.exists(res.paths[0])
    assert res.bounds_dominate
    assert res.max_queue_sample > 0


def test_v_sweep_rejects_single_row(sweep_dir, tmp_path):
    lines = (sweep_dir / "summary.csv").read_text().splitlines()
    short = tmp_path / "one.csv"
    short.write_text("\n".join(lines[:2]) + "\n")
    with pytest.raises(SchemaError, match="2 sweep rows"):
        plot_v_sweep(str(short), str(tmp_path))


def test_v_sweep_names_missing_column(sweep_dir, tmp_path):
    table = (sweep_dir / "summary.csv").read_text().splitlines()
    header = table[0].split(",")
    drop = header.index("avg_energy")
    rows = [",".join(v for i, v in enumerate(r.split(",")) if i != drop)
            for r in table]
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(rows) + "\n")
    with pytest.raises(SchemaError, match="avg_energy"):
        plot_v_sweep(str(bad), str(tmp_path))


def test_trajectories_bounds_dominate(sweep_dir, tmp_path):
    runs = [d for d in sorted(sweep_dir.iterdir())
            if d.is_dir() and (d / "state.csv").exists()]
    assert runs
    res = plot_trajectories(str(runs[-1]), str(tmp_path))
    assert os.path.exists(res.paths[0])
    assert res.max_queue_sample <= res.queue_bound
    assert res.max_energy_sample <= res.energy_bound


def test_bcd_traces_monotone(sweep_dir, tmp_path):
    runs = [d for d in sorted(sweep_dir.iterdir())
            if d.is_dir() and (d / "bcd_trace.csv").exists()]
    assert runs
    traced = 0
    for run in runs:
        if len(read_csv(str(run / "bcd_trace.csv")).get("slot", [])):
            res = plot_bcd(str(run / "bcd_trace.csv"), str(tmp_path / run.name))
            assert os.path.exists(res.paths[0])
            traced += 1
    assert traced >= 1


def test_bcd_flags_nonmonotone_trace(tmp_path):
    bad = tmp_path / "trace.csv"
    bad.write_text("slot,iteration,objective\n5,0,2.0\n5,1,1.0\n")
    with pytest.raises(SchemaError, match="non-monotone"):
        plot_bcd(str(bad), str(tmp_path))


def test_sensitivity_bars(sweep_dir, tmp_path):
    res = plot_sensitivity(str(sweep_dir.parent), str(tmp_path))
    assert os.path.exists(res.paths[0])


def test_cli_end_to_end(sweep_dir, tmp_path):
    rc = main(["--in", str(sweep_dir), "--out", str(tmp_path),
               "--figs", "v_sweep,trajectories,bcd"])
    assert rc == 0
    assert (tmp_path / "v_sweep.png").exists()
    pngs = list(tmp_path.rglob("*.png"))
    assert len(pngs) >= 3


def test_cli_unknown_figure(tmp_path):
    rc = main(["--in", str(tmp_path), "--out", str(tmp_path),
               "--figs", "volcano"])
    assert rc == 1


def test_cli_missing_inputs(tmp_path):
    rc = main(["--in", str(tmp_path), "--out", str(tmp_path),
               "--figs", "v_sweep"])
    assert rc == 1
