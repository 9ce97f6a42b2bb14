"""Rendering tests against small synthetic CSVs.

The CSVs here carry the same headers the simulator writes, so the
column contract is exercised without running any dynamics.
"""

import numpy as np
import pytest

from qswitch_figures import (
    FigureError,
    FigureSpec,
    MissingColumnError,
    load_csv,
    render,
    render_sweep,
    render_trace,
)
from qswitch_figures.cli import main

TRAJECTORY_HEADER = (
    "t,re_fin,im_fin,ps_g,ds,pq_g,dq_g,ps_f,pq_f,dq_f,"
    "re_fout_g,im_fout_g,re_fout_f,im_fout_f,delta_q,delta_s,"
    "n_int,n_out,n_in,n_decoh"
)


def _write_csv(path, header, columns):
    rows = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join("%.9e" % v for v in row) + "\n")
    return path


def _trace_csv(path, n=121):
    t = np.linspace(0.0, 30.0, n)
    fin = np.exp(-((t - 6.0) ** 2) / 4.0)
    ps_g = 0.97 * np.exp(-((t - 15.0) ** 2) / 36.0)
    fout = 0.5 * np.exp(-((t - 24.0) ** 2) / 4.0)
    delta_q = np.where((t > 8.0) & (t < 22.0), 30.0, -10.0)
    zeros = np.zeros_like(t)
    cols = [
        t, fin, zeros, ps_g, zeros, zeros, zeros, ps_g, zeros, zeros,
        -fout, zeros, fout, zeros, delta_q, np.full_like(t, -40.0),
        zeros, zeros, zeros, zeros,
    ]
    return _write_csv(path, TRAJECTORY_HEADER, cols)


def _fig3b_csv(path):
    omega_q = np.array([10.0, 20.0, 40.0, 80.0])
    infid = (1.0 / omega_q) ** 2 * 3.0
    cols = [
        omega_q,
        1.0 - infid,
        infid,
        (1.0 / omega_q) ** 2,
        np.full(4, np.pi),
        1.0 - 0.5 * infid,
        np.full(4, 0.999),
    ]
    header = (
        "omega_q,fidelity,infidelity,kappa_over_omega_q_sq,"
        "conditional_phase_rad,p_return,p_out_emission"
    )
    return _write_csv(path, header, cols)


def _fig3a_csv(path):
    gamma = np.logspace(-1, 1, 9)
    p_out = 1.0 - 0.4 * (np.log10(gamma) - 0.2) ** 2
    return _write_csv(
        path, "gamma,p_out,residual", [gamma, p_out, 1.0 - p_out]
    )


def test_load_csv_round_trip(tmp_path):
    path = _fig3a_csv(tmp_path / "a.csv")
    names, data = load_csv(path)
    assert names == ("gamma", "p_out", "residual")
    assert data.shape == (9, 3)
    assert np.isclose(data[0, 0], 0.1)


def test_load_csv_rejects_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(FigureError):
        load_csv(path)


def test_load_csv_rejects_header_only(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("gamma,p_out,residual\n")
    with pytest.raises(FigureError, match="no data rows"):
        load_csv(path)


def test_load_csv_rejects_column_count_mismatch(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("a,b,c\n1.0,2.0\n")
    with pytest.raises(Exception):
        load_csv(path)


def test_spec_rejects_unknown_kind(tmp_path):
    with pytest.raises(FigureError, match="kind"):
        FigureSpec(csv=tmp_path / "x.csv", kind="scatter", out=tmp_path / "x")


def test_trace_writes_png_and_svg(tmp_path):
    csv = _trace_csv(tmp_path / "fig2.csv")
    written = render_trace(csv, tmp_path / "figs" / "fig2")
    assert [p.suffix for p in written] == [".png", ".svg"]
    for p in written:
        assert p.exists()
        assert p.stat().st_size > 0


def test_trace_labels_present_in_svg(tmp_path):
    csv = _trace_csv(tmp_path / "fig2.csv")
    _, svg = render_trace(csv, tmp_path / "fig2")
    text = svg.read_text()
    assert "population / intensity" in text


def test_trace_missing_column_names_it(tmp_path):
    header = "t,re_fin,im_fin,delta_q"
    t = np.linspace(0.0, 1.0, 5)
    csv = _write_csv(
        tmp_path / "short.csv", header, [t, t, t, t]
    )
    with pytest.raises(MissingColumnError, match="ps_g"):
        render_trace(csv, tmp_path / "short")


def test_rendering_is_idempotent_and_leaves_input_alone(tmp_path):
    csv = _trace_csv(tmp_path / "fig2.csv")
    before = csv.read_bytes()
    first = render_trace(csv, tmp_path / "fig2")
    snap = [p.read_bytes() for p in first]
    second = render_trace(csv, tmp_path / "fig2")
    assert first == second
    assert [p.read_bytes() for p in second] == snap
    assert csv.read_bytes() == before


def test_sweep_loglog_with_overlay(tmp_path):
    csv = _fig3b_csv(tmp_path / "fig3b.csv")
    written = render_sweep(
        csv,
        tmp_path / "fig3b",
        kind="sweep-loglog",
        y=("infidelity",),
        overlay="kappa_over_omega_q_sq",
    )
    for p in written:
        assert p.stat().st_size > 0
    text = written[1].read_text()
    assert "infidelity" in text
    assert "kappa_over_omega_q_sq" in text


def test_sweep_overlay_missing_column(tmp_path):
    csv = _fig3a_csv(tmp_path / "fig3a.csv")
    with pytest.raises(MissingColumnError, match="kappa_over_omega_q_sq"):
        render_sweep(
            csv,
            tmp_path / "fig3a",
            kind="sweep-loglog",
            y=("p_out",),
            overlay="kappa_over_omega_q_sq",
        )


def test_sweep_semilog_annotates_data_peak(tmp_path):
    csv = _fig3a_csv(tmp_path / "fig3a.csv")
    names, data = load_csv(csv)
    peak_gamma = data[np.argmax(data[:, 1]), 0]
    _, svg = render_sweep(
        csv, tmp_path / "fig3a", kind="sweep-semilog", y=("p_out",)
    )
    text = svg.read_text()
    assert ("peak at gamma = %.3g" % peak_gamma) in text


def test_sweep_default_series_are_all_non_axis_columns(tmp_path):
    csv = _fig3a_csv(tmp_path / "fig3a.csv")
    _, svg = render_sweep(csv, tmp_path / "fig3a", kind="sweep-semilog")
    text = svg.read_text()
    assert "p_out" in text
    assert "residual" in text


def test_sweep_rejects_unknown_kind(tmp_path):
    csv = _fig3a_csv(tmp_path / "fig3a.csv")
    with pytest.raises(FigureError, match="sweep"):
        render_sweep(csv, tmp_path / "fig3a", kind="trace")


def test_render_dispatches_on_kind(tmp_path):
    csv = _trace_csv(tmp_path / "fig2.csv")
    spec = FigureSpec(csv=csv, kind="trace", out=tmp_path / "fig2")
    written = render(spec)
    assert all(p.exists() for p in written)


def test_cli_renders_and_prints_paths(tmp_path, capsys):
    csv = _trace_csv(tmp_path / "fig2.csv")
    code = main(
        ["--csv", str(csv), "--kind", "trace", "--out", str(tmp_path / "fig2")]
    )
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2
    assert out[0].endswith("fig2.png")
    assert out[1].endswith("fig2.svg")


def test_cli_missing_column_is_an_input_error(tmp_path, capsys):
    csv = _fig3a_csv(tmp_path / "fig3a.csv")
    code = main(
        [
            "--csv", str(csv),
            "--kind", "sweep-loglog",
            "--y", "no_such_column",
            "--out", str(tmp_path / "fig3a"),
        ]
    )
    assert code == 1
    assert "no_such_column" in capsys.readouterr().err


def test_cli_missing_file_is_an_io_error(tmp_path, capsys):
    code = main(
        [
            "--csv", str(tmp_path / "nope.csv"),
            "--kind", "trace",
            "--out", str(tmp_path / "nope"),
        ]
    )
    assert code == 3
    assert "i/o error" in capsys.readouterr().err


def test_cli_rejects_unknown_kind(tmp_path):
    with pytest.raises(SystemExit):
        main(
            [
                "--csv", str(tmp_path / "x.csv"),
                "--kind", "pie",
                "--out", str(tmp_path / "x"),
            ]
        )
