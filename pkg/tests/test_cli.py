import csv
import json
import os

import numpy as np
import pytest

from otoc_lab.cli import main
from otoc_lab.config import OUTPUT_DIR_ENV, build_config
from otoc_lab.experiments import TIMESCALE_COLUMNS, otoc_header, qpd_header, run_experiment
from otoc_lab.parallel import ordered_map
from otoc_lab.plotting import PlotError, emit_plot


def read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def square(x):
    return x * x


def test_ordered_map():
    assert ordered_map(square, range(7)) == [x * x for x in range(7)]
    assert ordered_map(square, range(7), workers=3) == [x * x for x in range(7)]
    with pytest.raises(ValueError):
        ordered_map(square, [1], workers=0)


def test_otoc_csv_grid(tmp_path):
    out = tmp_path / "otoc"
    code = main(["run", "--experiment", "otoc", "--protocols", "ideal,weak", "--output-dir", str(out)])
    assert code == 0
    header, rows = read_rows(out / "otoc.csv")
    assert header == otoc_header(["ideal", "weak"])
    assert len(rows) == 601
    t = np.array([float(r[0]) for r in rows])
    assert np.abs(t - np.arange(601) * 0.1).max() < 1e-12
    assert (out / "otoc.svg").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["t_max_us"] == 60.0
    assert manifest["config"]["protocols"] == ["ideal", "weak"]
    assert "otoc.csv" in manifest["files"] and "version" in manifest
    assert (out / "otoc.csv").read_bytes().endswith(b"\n")


def test_qpd_csv_normalized(tmp_path):
    out = tmp_path / "qpd"
    assert main(["run", "--experiment", "qpd", "--t-max-us", "1", "--output-dir", str(out)]) == 0
    header, rows = read_rows(out / "qpd.csv")
    assert header == qpd_header()
    assert header[1:3] == ["re_p_0000", "im_p_0000"] and header[-1] == "im_p_1111"
    for r in rows:
        vals = np.array([float(x) for x in r[1:]])
        assert abs(vals[0::2].sum() - 1) < 1e-8 and abs(vals[1::2].sum()) < 1e-8
    svg = (out / "qpd.svg").read_text()
    assert 'id="nonclassical-below"' in svg and 'id="nonclassical-above"' in svg


def test_sweep_rows(tmp_path):
    out = tmp_path / "sweep"
    cmd = ["run", "--experiment", "sweep", "--t-max-us", "0.5", "--t2-star-us", "none", "--output-dir", str(out)]
    assert main(cmd) == 0
    header, rows = read_rows(out / "timescales.csv")
    assert header == list(TIMESCALE_COLUMNS)
    assert len(rows) == 15
    h = np.array([float(r[0]) for r in rows])
    assert np.abs(h - np.linspace(0, 0.5, 15)).max() < 1e-15
    assert abs(h[1] - 0.0357142857) < 1e-9
    for r in rows:
        for value, flag in zip(r[1:4], r[5:8]):
            assert flag in ("0", "1") and (value == "") == (flag == "1")


def test_nonclassicality_band(tmp_path):
    out = tmp_path / "nc"
    assert main(["run", "--experiment", "nonclassicality", "--t-max-us", "3", "--output-dir", str(out)]) == 0
    header, rows = read_rows(out / "timescales.csv")
    assert len(rows) == 1 and rows[0][7] == "0"
    svg = (out / "nonclassicality.svg").read_text()
    assert 'id="tm-tz-band"' in svg


def test_env_var_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert main(["run", "--t-max-us", "0.2", "--protocols", "ideal", "--no-plot"]) == 0
    assert (tmp_path / "env" / "otoc.csv").exists()
    assert not (tmp_path / "env" / "otoc.svg").exists()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "a.cfg"
    cfg.write_text("experiment = otoc\nprotocols = ideal\nt_max_us = 0.5\n")
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--t-max-us", "0.3", "--output-dir", str(out), "--no-plot"]) == 0
    _, rows = read_rows(out / "otoc.csv")
    assert len(rows) == 4


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["run", "--n-qubits", "1", "--output-dir", str(tmp_path)]) == 1
    assert "n_qubits" in capsys.readouterr().err
    assert main(["run", "--dt-integration-us", "0.03", "--output-dir", str(tmp_path)]) == 1
    assert "dt_integration_us" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "none.cfg")]) == 1


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_output(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    assert main(["run", "--t-max-us", "0.2", "--protocols", "ideal", "--output-dir", str(locked / "x")]) == 2


def test_output_path_is_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--t-max-us", "0.2", "--protocols", "ideal", "--output-dir", str(blocker)]) == 2


def test_plot_subcommand(tmp_path, capsys):
    out = tmp_path / "o"
    main(["run", "--t-max-us", "0.5", "--protocols", "ideal,interferometric", "--output-dir", str(out), "--no-plot"])
    svg = tmp_path / "fig.svg"
    assert main(["plot", str(out / "otoc.csv"), "--kind", "otoc", "--output", str(svg)]) == 0
    text = svg.read_text()
    assert text.count('id="curve-') == 2
    assert 'id="curve-ideal"' in text and 'id="curve-interferometric"' in text
    assert "μs" in text or "&#956;s" in text or "\\u03bcs" in text or "(μs)" in text


def test_plot_errors_write_nothing(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("t_us,re_F_ideal,im_F_ideal\n")
    with pytest.raises(PlotError):
        emit_plot(empty, "otoc")
    assert not (tmp_path / "empty.svg").exists()
    bad = tmp_path / "bad.csv"
    bad.write_text("t_us,re_F_ideal\n0.0,abc\n")
    assert main(["plot", str(bad), "--kind", "otoc"]) == 1
    assert not (tmp_path / "bad.svg").exists()
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("t_us,n_tilde\n0.0\n")
    assert main(["plot", str(ragged), "--kind", "nonclassicality"]) == 1
    assert main(["plot", str(tmp_path / "missing.csv"), "--kind", "qpd"]) == 1
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("t_us,n_tilde\n0.0,0.0\n0.1,0.0\n")
    with pytest.raises(PlotError):
        emit_plot(wrong, "qpd")
    assert not (tmp_path / "wrong.svg").exists()


def test_plots_are_reproducible(tmp_path):
    csv_path = tmp_path / "nonclassicality.csv"
    t = np.arange(0, 10.1, 0.1)
    y = np.interp(t, [0, 2, 5, 8, 10], [0, 0, 0.3, 0, 0])
    csv_path.write_text("t_us,n_tilde\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, y)))
    first = emit_plot(csv_path, "nonclassicality", tmp_path / "a.svg").read_bytes()
    second = emit_plot(csv_path, "nonclassicality", tmp_path / "b.svg").read_bytes()
    assert first == second
    assert b'id="tm-tz-band"' in first


def test_ratio_plot(tmp_path):
    path = tmp_path / "timescales.csv"
    path.write_text(
        ",".join(TIMESCALE_COLUMNS) + "\n0.0,1.0,2.0,3.0,1.0,0,0,0\n0.5,1.0,2.0,,,0,0,1\n"
    )
    text = emit_plot(path, "ratio").read_text()
    assert 'id="curve-ratio"' in text


def test_run_experiment_determinism_and_workers(tmp_path):
    base = {"experiment": "nonclassicality", "t_max_us": "2", "plot": "false"}
    outs = []
    for name, workers in (("a", "1"), ("b", "1"), ("c", "4")):
        cfg = build_config({}, dict(base, output_dir=str(tmp_path / name), worker_count=workers))
        run_experiment(cfg)
        outs.append((tmp_path / name / "nonclassicality.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
