"""Tests for CSV, summary and SVG export."""

import csv

import numpy as np
import pytest

from hsctrl.models.constraints import ConsolidatedConstraint, DiskInterior, alpha_grid
from hsctrl.services.export import csv_header, export_csv, export_summary, export_svg, summary_lines
from hsctrl.services.plant import chained_integrator_plant
from hsctrl.services.simulator import SimConfig, simulate
from tests.test_simulator import X0, integrator_controller

HEADER_2X2 = "t,x1_1,x1_2,x2_1,x2_2,alpha_h,alpha_s,e_s,rho_n,rho_r,phi_h,phi_gamma,u_1,u_2"


@pytest.fixture(scope="module")
def short_run():
    """Half a second of the integrator scenario, every 10th step logged."""
    ctrl = integrator_controller()
    result = simulate(chained_integrator_plant(2, 1), ctrl, SimConfig(dt=1e-3, t_final=0.5, log_stride=10), X0)
    return ctrl, result


def test_csv_header_layout():
    assert ",".join(csv_header(2, 2)) == HEADER_2X2
    assert csv_header(1, 1) == ["t", "x1_1", "alpha_h", "alpha_s", "e_s", "rho_n", "rho_r", "phi_h", "phi_gamma", "u_1"]


def test_csv_rows_match_records(short_run, tmp_path):
    """One LF-terminated row per logged record with 12 significant digits."""
    _, result = short_run
    path = export_csv(result, tmp_path / "out" / "trajectory.csv", 2, 1)
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == csv_header(2, 1)
    assert len(rows) == len(result.records) + 1 == 51
    last = result.records[-1]
    values = [float(v) for v in rows[-1]]
    assert values[0] == pytest.approx(last.t)
    assert values[1:3] == pytest.approx(last.x.tolist(), rel=1e-11)
    assert values[3] == pytest.approx(last.diagnostics.alpha_h, rel=1e-11)
    assert values[-2:] == pytest.approx(last.u.tolist(), rel=1e-11)


def test_csv_digits_override(short_run, tmp_path):
    _, result = short_run
    path = export_csv(result, tmp_path / "coarse.csv", 2, 1, digits=3)
    second_row = path.read_text().splitlines()[2].split(",")
    assert all(len(v.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 3 for v in second_row)


def test_summary_lines(short_run, tmp_path):
    _, result = short_run
    lines = summary_lines(result)
    assert lines[0] == "status=completed"
    assert "deadlock_suspected=false" in lines
    assert f"records={len(result.records)}" in lines
    path = export_summary(result, tmp_path / "summary.txt")
    assert path.read_text().endswith("monitor_failures=0\n")


def test_svg_export_is_deterministic(short_run, tmp_path):
    """Identical results give byte-identical SVG files."""
    ctrl, result = short_run
    first = export_svg(result, tmp_path / "a", ctrl, box=[(-6.0, 6.0), (-6.0, 6.0)], grid_points=40)
    second = export_svg(result, tmp_path / "b", ctrl, box=[(-6.0, 6.0), (-6.0, 6.0)], grid_points=40)
    assert [p.name for p in first] == ["trajectory.svg", "constraints.svg"]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().lstrip().startswith("<?xml")


def test_contour_grid_sign_matches_constraint():
    """On a 200 x 200 grid alpha > 0 exactly inside the disk."""
    c = ConsolidatedConstraint((DiskInterior(center=(1.0, -0.5), radius=2.0),), 10.0)
    xs = np.linspace(-3.0, 5.0, 200)
    ys = np.linspace(-4.5, 3.5, 200)
    grid = alpha_grid(c, 0.0, xs, ys)
    gx, gy = np.meshgrid(xs, ys)
    inside = (gx - 1.0) ** 2 + (gy + 0.5) ** 2 < 4.0
    assert np.array_equal(grid > 0.0, inside)
