import csv
import io

import numpy as np
import pytest

from lbstab import cli


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def test_modes_af(capsys):
    code, out, _ = _run(capsys, "modes", "--model", "product-af", "--u-min", "-1", "--u-max", "1", "--u-steps", "101")
    assert code == 0
    header, rows = _table(out)
    assert header[0].startswith("u[") and len(header) == 9
    data = np.array(rows, dtype=float)
    assert np.max(np.abs(data[:, 6])) < 1e-12
    last = data[-1]
    assert last[0] == 1.0 and last[3] == pytest.approx(1.0) and abs(last[4]) < 1e-15


def test_modes_iso_pressure_constant(capsys):
    code, out, _ = _run(capsys, "modes", "--model", "product-iso", "--u-steps", "11")
    data = np.array(_table(out)[1], dtype=float)
    np.testing.assert_allclose(data[:, 1], 1 / 3)


def test_fig1_cells():
    s = 1 / np.sqrt(3)
    assert cli.fig1_cell(s, -s)[:3] == (1, 1, 1)
    assert cli.fig1_cell(1.2, -0.5)[3] is True
    assert cli.fig1_cell(1.0, 0.0)[4] is True
    assert cli.fig1_cell(0.4, 0.4)[:2] == ("", "")


def test_fig1_table(capsys):
    code, out, _ = _run(capsys, "fig1")
    header, rows = _table(out)
    assert header == cli.FIG1_HEADER
    kinds = [r[0] for r in rows]
    assert kinds.count("necessary_box") == 4 and kinds.count("cfl_box") == 4
    assert kinds.count("cell") == 61 * 61


def test_root_locus(capsys, tmp_path):
    svg = tmp_path / "locus.svg"
    code, out, err = _run(capsys, "root-locus", "--model", "product-af", "--k-points", "256", "--svg", str(svg))
    assert code == 0
    assert "nu=" in err and "0.9994" in err
    _, rows = _table(out)
    data = np.array([r[2:] for r in rows], dtype=float)
    assert data[:, 2].max() <= 1 + 1e-9
    k0 = data[np.array([float(r[0]) for r in rows]) == 0.0]
    assert np.sum(np.abs(k0[:, 0] - 1) + np.abs(k0[:, 1]) < 1e-12) == 2
    assert svg.read_text().startswith("<svg")


def test_root_locus_isotropic_unstable(capsys):
    _, out, _ = _run(capsys, "root-locus", "--model", "product-iso", "--k-points", "64")
    assert max(float(r[4]) for r in _table(out)[1]) > 1


def test_root_locus_rejects_2d(capsys):
    code, _, err = _run(capsys, "root-locus", "--grid", "16,16")
    assert code == cli.EXIT_CONFIG and "D1Q3" in err


def test_fig3_small(capsys, tmp_path):
    cfg = cli.build_config(cli.build_parser().parse_args(["fig3", "--k-points", "32", "--out", str(tmp_path / "a.csv")]))
    cli.cmd_fig3(cfg, nus=[1e-3, 1e-1])
    header, rows = _table((tmp_path / "a.csv").read_text())
    assert header == ["model", "nu[dx^2/dt]", "u_max[c]"]
    u = {(r[0], float(r[1])): float(r[2]) for r in rows}
    assert [r[0] for r in rows] == ["poly2"] * 2 + ["product-iso"] * 2 + ["product-af"] * 2
    for nu in (1e-3, 1e-1):
        assert u[("product-af", nu)] == 1.0
        assert u[("product-iso", nu)] <= 1 - 1 / np.sqrt(3) + 1e-3
        assert u[("poly2", nu)] <= u[("product-iso", nu)]


def test_fig3_default_grid():
    nus = cli.fig3_nus()
    assert len(nus) == 12 and nus[0] == 1e-5 and nus[-1] == 1e-1


def test_simulate_zero_amplitude(capsys):
    code, out, _ = _run(capsys, "simulate", "--model", "product-af", "--u", "0.5", "--beta", "0.9", "--eps", "0", "--steps", "20", "--grid", "16,4")
    assert code == 0
    header, rows = _table(out)
    assert header[-1] == "status" and len(rows) == 21
    assert max(float(r[1]) for r in rows) < 1e-13
    assert {r[-1] for r in rows} == {"ok"}


def test_simulate_unstable_exit_code(capsys):
    code, out, _ = _run(capsys, "simulate", "--model", "product-iso", "--u", "0.6", "--nu", "1e-3", "--steps", "10000", "--grid", "64")
    assert code == cli.EXIT_UNSTABLE
    assert _table(out)[1][-1][-1].startswith("unstable")


def test_simulate_af_fast_flow(capsys, tmp_path):
    out = tmp_path / "af.csv"
    code, _, _ = _run(capsys, "simulate", "--model", "product-af", "--u", "0.9", "--nu", "1e-5", "--steps", "2000", "--grid", "32,4", "--out", str(out))
    assert code == 0
    assert {r[-1] for r in _table(out.read_text())[1]} == {"ok"}


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--beta", "0.9", "--nu", "0.1"],
        ["simulate", "--beta", "1.5"],
        ["simulate", "--nu", "-1"],
        ["simulate"],
        ["modes", "--u-min", "0.5", "--u-max", "0.1"],
        ["modes", "--u", "1.5"],
        ["simulate", "--beta", "0.9", "--grid", "8", "--mode-index", "8"],
        ["modes", "--model", "bogus"],
    ],
)
def test_config_errors(capsys, argv):
    with pytest.raises(SystemExit) if "bogus" in argv else _no_raise():
        code, _, _ = _run(capsys, *argv)
        assert code == cli.EXIT_CONFIG


class _no_raise:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def test_byte_identical_reruns(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        cli.main(["root-locus", "--model", "product-iso", "--k-points", "32", "--out", str(path)])
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_banner_reports_implied_viscosity(capsys):
    _run(capsys, "simulate", "--beta", "0.9994", "--steps", "1", "--grid", "8")
    err = capsys.readouterr().err
    code, _, err = _run(capsys, "simulate", "--beta", "0.9994", "--steps", "1", "--grid", "8")
    assert "nu=0.0001000600360216" in err


def test_verify_passes(capsys):
    code, out, _ = _run(capsys, "verify")
    assert code == 0
    assert out.count("PASS") == len(out.strip().splitlines())
