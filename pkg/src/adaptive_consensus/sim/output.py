"""CSV and SVG writers for trajectory logs."""
from __future__ import annotations

import csv
import html
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .config import SimConfig
from .diagnostics import compute_V, error_series, rate_table
from .engine import TrajectoryLog

_FMT = "%.17g"


def trajectory_columns(log: TrajectoryLog, config: SimConfig) -> dict[str, np.ndarray]:
    cols: dict[str, np.ndarray] = {"t": log.t, "sigma": log.sigma}
    v = log.v
    for k in range(v.shape[1]):
        cols[f"v[{k + 1}]"] = v[:, k]
    n = len(config.agents)
    x, v_hat = log.x, log.v_hat
    st = log.S_tilde_norms(config.exosystem.S)
    for i in range(n):
        for k in range(x.shape[2]):
            cols[f"x{i + 1}[{k + 1}]"] = x[:, i, k]
        for k in range(v_hat.shape[2]):
            cols[f"vhat{i + 1}[{k + 1}]"] = v_hat[:, i, k]
        cols[f"Stilde_norm{i + 1}"] = st[:, i]
        cols[f"s{i + 1}"] = log.s[:, i]
        cols[f"u{i + 1}"] = log.u[:, i]
        th = log.theta_hat(i)
        for k in range(th.shape[1]):
            cols[f"thetahat{i + 1}[{k + 1}]"] = th[:, k]
    cols["V"] = compute_V(log, config)
    return cols


def write_columns(path: str | Path, cols: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    names = list(cols)
    data = np.column_stack([np.asarray(cols[c], dtype=float) for c in names])
    fmt = [("%d" if c == "sigma" else _FMT) for c in names]
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt=fmt)
    return path


def read_columns(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, k] for k, name in enumerate(header)}


def write_rates(path: str | Path, rows: Sequence[dict]) -> Path:
    path = Path(path)
    fields = ["quantity", "lambda", "r_squared", "t_from", "t_to", "samples", "note"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fields})
    return path


# --- minimal SVG line charts -----------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + 0.5 * step, step)]


def svg_line_chart(path: str | Path, t: np.ndarray, series: Mapping[str, np.ndarray], title: str,
                   ylabel: str = "", width: int = 720, height: int = 400, max_points: int = 2000) -> Path:
    path = Path(path)
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    stride = max(1, int(np.ceil(t.size / max_points)))
    ts = t[::stride]
    ys = {k: np.asarray(v)[::stride] for k, v in series.items()}
    t0, t1 = float(ts[0]), float(ts[-1]) if ts[-1] > ts[0] else float(ts[0]) + 1.0
    finite = np.concatenate([y[np.isfinite(y)] for y in ys.values()]) if ys else np.array([0.0])
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def sx(v):
        return left + (v - t0) / (t1 - t0) * pw

    def sy(v):
        return top + (hi - v) / (hi - lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-size="15">{html.escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for tv in _ticks(t0, t1):
        x = sx(tv)
        out.append(f'<line x1="{x:.1f}" y1="{top + ph}" x2="{x:.1f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{top + ph + 18}" text-anchor="middle">{tv:g}</text>')
    for yv in _ticks(lo, hi):
        y = sy(yv)
        out.append(f'<line x1="{left - 5}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">{yv:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">t</text>')
    if ylabel:
        out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {top + ph / 2})">{html.escape(ylabel)}</text>')
    for k, (name, y) in enumerate(ys.items()):
        color = _PALETTE[k % len(_PALETTE)]
        ok = np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(ts[ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly + 4}">{html.escape(name)}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path


def write_plots(out_dir: Path, log: TrajectoryLog, config: SimConfig) -> list[Path]:
    r = log.r
    t = log.t
    v = log.v
    x0 = log.x0
    leader = {f"x0[{k + 1}]": v[:, k] for k in range(r)}
    leader.update({f"w[{k + 1}]": v[:, r + k] for k in range(v.shape[1] - r)})
    xhat_err, what_err, track = {}, {}, {}
    for i in range(len(config.agents)):
        for k in range(r):
            xhat_err[f"agent {i + 1}, x{k + 1}"] = log.v_hat[:, i, k] - x0[:, k]
            track[f"agent {i + 1}, x{k + 1}"] = log.x[:, i, k] - x0[:, k]
        for k in range(v.shape[1] - r):
            what_err[f"agent {i + 1}, w{k + 1}"] = log.v_hat[:, i, r + k] - log.w[:, k]
    return [
        svg_line_chart(out_dir / "leader_states.svg", t, leader, "Leader states v = (x0, w)"),
        svg_line_chart(out_dir / "xhat_errors.svg", t, xhat_err, "Estimation errors xhat_i - x0"),
        svg_line_chart(out_dir / "what_errors.svg", t, what_err, "Estimation errors what_i - w"),
        svg_line_chart(out_dir / "tracking_errors.svg", t, track, "Tracking errors x_i - x0"),
    ]


def write_outputs(out_dir: str | Path, log: TrajectoryLog, config: SimConfig) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectory": write_columns(out / "trajectory.csv", trajectory_columns(log, config)),
        "errors": write_columns(out / "errors.csv", {"t": log.t, **error_series(log, config)}),
        "rates": write_rates(out / "rates.csv", rate_table(log, config)),
    }
    for p in write_plots(out, log, config):
        paths[p.stem] = p
    return paths
