"""Post-run diagnostics computed from a :class:`TrajectoryLog`."""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from ..graph import h_matrix
from .config import SimConfig
from .engine import TrajectoryLog

LOG_FLOOR = 1e-12
MIN_SAMPLES = 10


class RateFit(NamedTuple):
    lam: float
    r_squared: float
    window: tuple[float, float]
    samples: int


def fit_rate(times, norms, window: Sequence[float] | None = None) -> RateFit:
    """Least-squares line through ``(t, log ||.||)``; ``lam`` is minus the slope.

    Samples at or below ``LOG_FLOOR`` are dropped. ``window`` defaults to the
    second half of the time span.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if times.shape != norms.shape or times.ndim != 1:
        raise ValueError("times and norms must be 1-d arrays of equal length")
    if window is None:
        window = (0.5 * (times[0] + times[-1]), times[-1])
    ta, tb = float(window[0]), float(window[1])
    mask = (times >= ta) & (times <= tb) & (norms > LOG_FLOOR) & np.isfinite(norms)
    count = int(mask.sum())
    if count < MIN_SAMPLES:
        raise ValueError(f"only {count} samples above {LOG_FLOOR:g} in [{ta:g}, {tb:g}], need {MIN_SAMPLES}")
    t = times[mask]
    y = np.log(norms[mask])
    A = np.column_stack([t, np.ones_like(t)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(-float(slope), r2, (ta, tb), count)


def resolvable_window(times, norms, floor: float = 1e-10) -> tuple[float, float]:
    """Second half of the span during which ``norms`` stays above ``floor``.

    Errors that reach round-off long before the end of a run carry no rate
    information afterwards; this picks the tail of the part that does.
    """
    times = np.asarray(times, dtype=float)
    above = np.nonzero(np.asarray(norms) > floor)[0]
    if above.size == 0:
        raise ValueError(f"signal never exceeds {floor:g}")
    t_end = times[above[-1]]
    return 0.5 * (times[0] + t_end), t_end


def compute_V(log: TrajectoryLog, config: SimConfig) -> np.ndarray:
    """``V = 1/2 sum_i (s_i^2 + theta_tilde_i' Lambda_i theta_tilde_i)`` at every grid point."""
    V = 0.5 * np.sum(log.s ** 2, axis=1)
    for i, (agent, ctrl) in enumerate(zip(config.agents, config.controllers)):
        err = log.theta_hat(i) - agent.theta
        lam = ctrl.gain_matrix(agent.m)
        V = V + 0.5 * np.einsum("ki,ij,kj->k", err, lam, err)
    return V


def identity_residual(log: TrajectoryLog, config: SimConfig) -> np.ndarray:
    """Residual of ``x_r + sum_j beta_j x_(r-j) = s + x_hat_r + sum_j beta_j x_hat_(r-j)``.

    Shape ``(K, N)``. Uses the logged estimate the law actually consumed
    (``x0`` under the decentralized law).
    """
    r = log.r
    x = log.x
    ref = np.broadcast_to(log.x0[:, None, :], x.shape) if config.law == "decentralized" else log.v_hat[:, :, :r]
    out = np.empty(log.s.shape)
    for i, ctrl in enumerate(config.controllers):
        lhs = x[:, i, r - 1].copy()
        rhs = log.s[:, i] + ref[:, i, r - 1]
        for j, b in enumerate(ctrl.beta, start=1):
            lhs += b * x[:, i, r - 1 - j]
            rhs += b * ref[:, i, r - 1 - j]
        out[:, i] = lhs - rhs
    return out


def coupling_history(log: TrajectoryLog, config: SimConfig) -> np.ndarray:
    """Consensus corrections of the reference estimates at every grid point, ``(K, N, r)``."""
    r = log.r
    mu2 = config.observer.mu2
    out = np.empty(log.x.shape)
    x_hat = log.v_hat[:, :, :r]
    x0 = log.x0
    for sigma in np.unique(log.sigma):
        g = config.family[int(sigma)]
        idx = log.sigma == sigma
        minus_h = -h_matrix(g)
        lead = g.adjacency[1:, 0]
        out[idx] = mu2 * (np.einsum("ij,kjs->kis", minus_h, x_hat[idx])
                          + lead[None, :, None] * x0[idx][:, None, :])
    return out


class ZDiagnostics(NamedTuple):
    t: np.ndarray
    z: np.ndarray          # (K, N, r-1)
    residual: np.ndarray   # (K, N), NaN where the stencil is invalid


def z_diagnostics(log: TrajectoryLog, config: SimConfig) -> ZDiagnostics:
    """Lower-state observer gaps ``z = x_(1..r-1) - x_hat_(1..r-1)`` and the
    residual of ``z' = A z + u_bar`` with ``z'`` from centred differences.

    Grid points whose three-point stencil touches a switching instant, and the
    two end points, get NaN.
    """
    r = log.r
    if r < 2:
        raise ValueError("z-coordinates need r >= 2")
    z = log.x[:, :, :r - 1] - log.v_hat[:, :, :r - 1]
    xd = coupling_history(log, config)
    t = log.t
    K, N = log.s.shape
    residual = np.full((K, N), np.nan)
    if K < 3:
        return ZDiagnostics(t, z, residual)
    dz = (z[2:] - z[:-2]) / (t[2:] - t[:-2])[:, None, None]
    zc = z[1:-1]
    for i, ctrl in enumerate(config.controllers):
        beta = np.asarray(ctrl.beta)
        A = np.zeros((r - 1, r - 1))
        A[np.arange(r - 2), np.arange(1, r - 1)] = 1.0
        A[-1] = -beta[::-1]
        ubar = -xd[1:-1, i, :r - 1].copy()
        ubar[:, -1] += log.s[1:-1, i]
        res = dz[:, i] - (zc[:, i] @ A.T + ubar)
        residual[1:-1, i] = np.linalg.norm(res, axis=1)
    smooth = (log.sigma[:-2] == log.sigma[1:-1]) & (log.sigma[1:-1] == log.sigma[2:])
    h_left, h_right = np.diff(t)[:-1], np.diff(t)[1:]
    smooth &= np.isclose(h_left, h_right, rtol=1e-9, atol=0.0)
    residual[1:-1][~smooth] = np.nan
    return ZDiagnostics(t, z, residual)


def error_series(log: TrajectoryLog, config: SimConfig) -> dict[str, np.ndarray]:
    """Per-agent error norms keyed by CSV column name."""
    r = log.r
    out = {}
    S = config.exosystem.S
    xhat_err = np.linalg.norm(log.v_hat[:, :, :r] - log.x0[:, None, :], axis=2)
    what_err = np.linalg.norm(log.v_hat[:, :, r:] - log.w[:, None, :], axis=2)
    track = log.tracking_errors()
    vt = log.v_tilde_norms()
    st = log.S_tilde_norms(S)
    for i in range(len(config.agents)):
        out[f"xhat_err{i + 1}"] = xhat_err[:, i]
        out[f"what_err{i + 1}"] = what_err[:, i]
        out[f"track_err{i + 1}"] = track[:, i]
        out[f"vtilde_norm{i + 1}"] = vt[:, i]
        out[f"Stilde_norm{i + 1}"] = st[:, i]
    out["vtilde_norm"] = np.sqrt(np.sum(vt ** 2, axis=1))
    out["Stilde_norm"] = np.sqrt(np.sum(st ** 2, axis=1))
    out["track_err"] = np.sqrt(np.sum(track ** 2, axis=1))
    return out


def rate_table(log: TrajectoryLog, config: SimConfig) -> list[dict]:
    """Exponential rate fits for the stacked observer errors and the tracking error."""
    errs = error_series(log, config)
    rows = []
    for name in ("Stilde_norm", "vtilde_norm", "track_err"):
        try:
            window = resolvable_window(log.t, errs[name])
            fit = fit_rate(log.t, errs[name], window)
            rows.append({"quantity": name, "lambda": fit.lam, "r_squared": fit.r_squared,
                         "t_from": fit.window[0], "t_to": fit.window[1], "samples": fit.samples})
        except ValueError as exc:
            rows.append({"quantity": name, "lambda": float("nan"), "r_squared": float("nan"),
                         "t_from": float("nan"), "t_to": float("nan"), "samples": 0, "note": str(exc)})
    return rows
