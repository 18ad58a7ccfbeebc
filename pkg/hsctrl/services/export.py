"""
Result export: trajectory CSV, run summary and SVG quick-look plots.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import structlog  # noqa: E402

from hsctrl.core.config import settings  # noqa: E402
from hsctrl.models.constraints import alpha_grid  # noqa: E402
from hsctrl.services.controller import ControllerConfig  # noqa: E402
from hsctrl.services.simulator import SimResult  # noqa: E402

logger = structlog.get_logger(__name__)

SCALAR_COLUMNS = ("alpha_h", "alpha_s", "e_s", "rho_n", "rho_r", "phi_h", "phi_gamma")

# Fixed metadata so identical runs give identical files
plt.rcParams["svg.hashsalt"] = "hsctrl"
_SVG_METADATA = {"Date": None}


def csv_header(n: int, r: int) -> List[str]:
    states = [f"x{i}_{j}" for i in range(1, r + 1) for j in range(1, n + 1)]
    return ["t", *states, *SCALAR_COLUMNS, *(f"u_{j}" for j in range(1, n + 1))]


def _fmt(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def export_csv(result: SimResult, path: Path, n: int, r: int, digits: Optional[int] = None) -> Path:
    """One row per logged record; LF line endings, ``digits`` significant digits"""
    digits = digits or settings.CSV_SIGNIFICANT_DIGITS
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(csv_header(n, r))
        for rec in result.records:
            d = rec.diagnostics
            scalars = (d.alpha_h, d.alpha_s, d.e_s, d.rho_n, rec.rho_r, d.phi_h, d.phi_gamma)
            row = [rec.t, *rec.x, *scalars, *rec.u]
            writer.writerow([_fmt(float(v), digits) for v in row])
    logger.debug("CSV written", path=str(path), rows=len(result.records))
    return path


def _format_optional(value: Optional[float]) -> str:
    return "none" if value is None else _fmt(value, 12)


def summary_lines(result: SimResult) -> List[str]:
    s = result.summary
    status = result.status
    intervals = ";".join(f"{_fmt(a, 12)}-{_fmt(b, 12)}" for a, b in s.soft_violation_intervals)
    return [
        f"status={status.kind.value}",
        f"status_t={_format_optional(status.t)}",
        f"status_layer={status.layer if status.layer is not None else 'none'}",
        f"records={len(result.records)}",
        f"min_alpha_h={_fmt(s.min_alpha_h, 12)}",
        f"max_rho_r={_fmt(s.max_rho_r, 12)}",
        f"soft_satisfied_from={_format_optional(s.soft_satisfied_from)}",
        f"soft_violation_intervals={intervals or 'none'}",
        f"deadlock_suspected={'true' if s.deadlock_suspected else 'false'}",
        f"monitor_failures={s.monitor_failures}",
    ]


def export_summary(result: SimResult, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(summary_lines(result)) + "\n", encoding="utf-8")
    return path


def _plot_box(result: SimResult, margin: float = 1.0) -> List[Tuple[float, float]]:
    xy = np.array([rec.x[:2] for rec in result.records])
    return [(float(xy[:, k].min()) - margin, float(xy[:, k].max()) + margin) for k in range(2)]


def _snapshot_times(result: SimResult, count: int = 4) -> List[float]:
    times = [rec.t for rec in result.records]
    if len(times) == 1:
        return times
    picks = np.linspace(0, len(times) - 1, count).round().astype(int)
    return [times[k] for k in sorted(set(picks.tolist()))]


def export_svg(
    result: SimResult,
    directory: Path,
    ctrl: ControllerConfig,
    box: Optional[Sequence[Tuple[float, float]]] = None,
    snapshots: Optional[Sequence[float]] = None,
    grid_points: int = 120,
) -> List[Path]:
    """
    ``trajectory.svg``: the x1 plane path with the zero level sets of alpha_h
    (solid) and alpha_s (dashed) at the snapshot times; planar systems only.
    ``constraints.svg``: alpha_h, alpha_s and the relaxed bound rho_s over time.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    if not result.records:
        return written

    if ctrl.n == 2:
        box = list(box) if box is not None else _plot_box(result)
        xs = np.linspace(box[0][0], box[0][1], grid_points)
        ys = np.linspace(box[1][0], box[1][1], grid_points)
        xy = np.array([rec.x[:2] for rec in result.records])
        fig, ax = plt.subplots(figsize=(7, 6))
        times = list(snapshots) if snapshots else _snapshot_times(result)
        colors = plt.cm.viridis(np.linspace(0.0, 0.9, len(times)))
        for color, t in zip(colors, times):
            ax.contour(xs, ys, alpha_grid(ctrl.hard, t, xs, ys), levels=[0.0], colors=[color], linestyles="solid")
            ax.contour(xs, ys, alpha_grid(ctrl.soft, t, xs, ys), levels=[0.0], colors=[color], linestyles="dashed")
            ax.plot([], [], color=color, label=f"t={t:.3g} s")
        ax.plot(xy[:, 0], xy[:, 1], color="black", linewidth=1.2, label="x1")
        ax.plot(xy[0, 0], xy[0, 1], "o", color="black")
        ax.set_xlabel("x1_1 [m]")
        ax.set_ylabel("x1_2 [m]")
        ax.set_aspect("equal", adjustable="box")
        ax.legend(loc="upper right", fontsize="small")
        path = directory / "trajectory.svg"
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
        plt.close(fig)
        written.append(path)

    t = np.array([rec.t for rec in result.records])
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t, [rec.diagnostics.alpha_h for rec in result.records], label="alpha_h")
    ax.plot(t, [rec.diagnostics.alpha_s for rec in result.records], label="alpha_s")
    ax.plot(t, [rec.diagnostics.rho_s for rec in result.records], linestyle="dotted", label="rho_s")
    ax.axhline(0.0, color="grey", linewidth=0.8)
    ax.set_xlabel("t [s]")
    ax.legend(loc="lower right", fontsize="small")
    path = directory / "constraints.svg"
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    written.append(path)

    logger.debug("SVG written", files=[str(p) for p in written])
    return written
