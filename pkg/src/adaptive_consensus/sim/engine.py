"""Closed-loop assembly and switch-aligned fixed-step RK4 integration."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ..controller import compute_p_and_s, control_and_adaptation
from ..graph import Digraph, SwitchingSchedule, check_jointly_connected, h_matrix
from ..leader import check_assumption1
from .config import SimConfig, ValidationError

log = logging.getLogger(__name__)

_SWITCH_TOL = 1e-12


class SimulationBlowUp(ArithmeticError):
    def __init__(self, t: float, detail: str = ""):
        self.t = t
        super().__init__(f"non-finite state at t = {t:.6g}" + (f": {detail}" if detail else ""))


class StateLayout:
    """Offsets of ``(v, S_hat_1..N, v_hat_1..N, x_1..N, theta_hat_1..N)`` in the flat state."""

    def __init__(self, q: int, n: int, r: int, ms: Sequence[int]):
        self.q, self.n, self.r, self.ms = q, n, r, tuple(ms)
        o = 0
        self.v = slice(o, o + q); o += q
        self.S_hat = slice(o, o + n * q * q); o += n * q * q
        self.v_hat = slice(o, o + n * q); o += n * q
        self.x = slice(o, o + n * r); o += n * r
        self.theta = []
        for m in self.ms:
            self.theta.append(slice(o, o + m))
            o += m
        self.theta_all = slice(self.theta[0].start if self.theta else o, o)
        self.size = o

    def pack(self, v, S_hats, v_hats, xs, theta_hats) -> np.ndarray:
        y = np.empty(self.size)
        y[self.v] = v
        y[self.S_hat] = np.asarray(S_hats, dtype=float).ravel()
        y[self.v_hat] = np.asarray(v_hats, dtype=float).ravel()
        y[self.x] = np.asarray(xs, dtype=float).ravel()
        for sl, th in zip(self.theta, theta_hats):
            y[sl] = th
        return y

    # views along the last axis so they work on a single state or a stack of them
    def get_v(self, y):
        return y[..., self.v]

    def get_S_hat(self, y):
        return y[..., self.S_hat].reshape(y.shape[:-1] + (self.n, self.q, self.q))

    def get_v_hat(self, y):
        return y[..., self.v_hat].reshape(y.shape[:-1] + (self.n, self.q))

    def get_x(self, y):
        return y[..., self.x].reshape(y.shape[:-1] + (self.n, self.r))

    def get_theta(self, y, i: int):
        return y[..., self.theta[i]]


class ClosedLoop:
    """Right-hand side of the full closed loop for a fixed configuration."""

    def __init__(self, config: SimConfig):
        self.config = config
        ex = config.exosystem
        self.S = np.array(ex.S)
        self.r, self.n_w, self.q = ex.r, ex.n_w, ex.q
        self.n = len(config.agents)
        self.layout = StateLayout(self.q, self.n, self.r, [a.m for a in config.agents])
        self.mu1 = config.observer.mu1
        self.mu2 = config.observer.mu2
        self.decentralized = config.law == "decentralized"
        self.S_flat = self.S.ravel()
        self._cache = {}

    def _graph_terms(self, graph: Digraph):
        """``(-H, leader column)`` so that the neighbour sum is ``-H z + a_i0 z_0``."""
        key = id(graph)
        terms = self._cache.get(key)
        if terms is None:
            terms = (-h_matrix(graph), graph.adjacency[1:, 0].copy()[:, None], graph)
            self._cache[key] = terms
        return terms[0], terms[1]

    def derivative(self, t: float, y: np.ndarray, graph: Digraph, aux: dict | None = None) -> np.ndarray:
        L = self.layout
        r, q, n = self.r, self.q, self.n
        minus_h, lead = self._graph_terms(graph)
        v = y[L.v]
        S_hats = y[L.S_hat].reshape(n, q * q)
        v_hats = y[L.v_hat].reshape(n, q)
        xs = y[L.x].reshape(n, r)

        dy = np.empty_like(y)
        dv = self.S @ v
        dy[L.v] = dv
        dy[L.S_hat] = (self.mu1 * (minus_h @ S_hats + lead * self.S_flat)).ravel()
        dvh = (S_hats.reshape(n, q, q) @ v_hats[:, :, None])[:, :, 0] + self.mu2 * (minus_h @ v_hats + lead * v)
        dy[L.v_hat] = dvh.ravel()

        # per-agent work on plain floats; numpy scalar arithmetic dominates otherwise
        xs_l = xs.tolist()
        w = v[r:].tolist()
        if self.decentralized:
            ref = [v[:r].tolist()] * n
            ref_dot = [dv[:r].tolist()] * n
            w_used = [w] * n
        else:
            vh_l = v_hats.tolist()
            dvh_l = dvh.tolist()
            ref = [row[:r] for row in vh_l]
            ref_dot = [row[:r] for row in dvh_l]
            w_used = [row[r:] for row in vh_l]
        dx = dy[L.x].reshape(n, r)
        dx[:, :-1] = xs[:, 1:]
        last = [0.0] * n
        theta_dots = []
        for i, (agent, ctrl) in enumerate(zip(self.config.agents, self.config.controllers)):
            fe = compute_p_and_s(xs_l[i], ref[i], ref_dot[i], ctrl.beta)
            f = agent.regressor(xs[i], t)
            u, theta_dot = control_and_adaptation(f, agent.disturbance(w_used[i]), fe.s, fe.p_dot,
                                                  y[L.theta[i]], ctrl)
            last[i] = float(f @ agent.theta) + agent.disturbance(w) + u
            theta_dots.append(theta_dot)
            if aux is not None:
                aux["u"][i] = u
                aux["s"][i] = fe.s
        dx[:, -1] = last
        dy[L.theta_all] = np.concatenate(theta_dots)
        return dy


def closed_loop_derivative(y: np.ndarray, t: float, config: SimConfig, sigma: int | None = None):
    """Closed-loop derivative at ``(t, y)`` under graph ``sigma`` (default: the schedule's)."""
    loop = ClosedLoop(config)
    if y.shape != (loop.layout.size,):
        raise ValueError(f"state must have size {loop.layout.size}, got {y.shape}")
    schedule = config.schedule_for(max(config.T, t))
    graph = config.family[sigma if sigma is not None else schedule.sigma(t)]
    return loop.derivative(t, y, graph)


def rk4_step(y: np.ndarray, t: float, dt: float, f: Callable[[float, np.ndarray], np.ndarray],
             switch_times: Sequence[float] | None = None, k1: np.ndarray | None = None) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step.

    If ``switch_times`` is given, a switching instant strictly inside
    ``(t, t + dt)`` is an error: the caller must split the step there.
    """
    if switch_times is not None:
        for ts in switch_times:
            if t + _SWITCH_TOL < ts < t + dt - _SWITCH_TOL:
                raise ValueError(f"step [{t}, {t + dt}] straddles the switching instant {ts}")
    if k1 is None:
        k1 = f(t, y)
    h2 = 0.5 * dt
    k2 = f(t + h2, y + h2 * k1)
    k3 = f(t + h2, y + h2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def switch_aligned_grid(schedule: SwitchingSchedule, T: float, dt: float):
    """Yield ``(t_start, n_steps, h, sigma)`` segments covering ``[0, T]``.

    Each switching interval gets ``ceil(length / dt)`` equal steps, so every
    switching instant is a grid point and no step exceeds ``dt``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    for a, b, sigma in schedule.intervals():
        if a >= T:
            break
        b = min(b, T)
        length = b - a
        if length <= 0:
            continue
        steps = max(1, math.ceil(length / dt - 1e-9))
        yield a, steps, length / steps, sigma


@dataclass
class TrajectoryLog:
    t: np.ndarray
    sigma: np.ndarray
    states: np.ndarray
    u: np.ndarray
    s: np.ndarray
    layout: StateLayout
    r: int

    def __len__(self):
        return self.t.size

    @property
    def v(self):
        return self.layout.get_v(self.states)

    @property
    def x0(self):
        return self.v[:, :self.r]

    @property
    def w(self):
        return self.v[:, self.r:]

    @property
    def x(self):
        return self.layout.get_x(self.states)

    @property
    def v_hat(self):
        return self.layout.get_v_hat(self.states)

    @property
    def S_hat(self):
        return self.layout.get_S_hat(self.states)

    def theta_hat(self, i: int):
        return self.layout.get_theta(self.states, i)

    def S_tilde_norms(self, S: np.ndarray) -> np.ndarray:
        """Per-agent Frobenius norms of ``S_hat_i - S``, shape ``(K, N)``."""
        d = self.S_hat - S
        return np.sqrt(np.einsum("knij,knij->kn", d, d))

    def v_tilde_norms(self) -> np.ndarray:
        d = self.v_hat - self.v[:, None, :]
        return np.sqrt(np.einsum("kni,kni->kn", d, d))

    def tracking_errors(self) -> np.ndarray:
        d = self.x - self.x0[:, None, :]
        return np.sqrt(np.einsum("kni,kni->kn", d, d))


def check_assumptions(config: SimConfig) -> None:
    spectrum = check_assumption1(config.exosystem)
    if not spectrum.ok:
        raise ValidationError("exosystem", f"eigenvalues of S must be distinct with zero real parts, "
                                            f"got {np.round(spectrum.eigenvalues, 6).tolist()}")
    sched = config.connectivity_schedule()
    result = check_jointly_connected(config.family, sched, config.epsilon_for(sched))
    if not result.connected:
        raise ValidationError("schedule", f"switching graphs are not jointly connected: {result.reason}")


def run(config: SimConfig) -> TrajectoryLog:
    """Integrate the closed loop on ``[0, config.T]`` and log every grid point."""
    if not config.waive_assumptions:
        check_assumptions(config)
    loop = ClosedLoop(config)
    L = loop.layout
    T, dt = config.T, config.dt
    schedule = config.schedule_for(T)

    segments = list(switch_aligned_grid(schedule, T, dt))
    total = sum(seg[1] for seg in segments) + 1
    n = loop.n
    times = np.empty(total)
    sigmas = np.empty(total, dtype=int)
    states = np.empty((total, L.size))
    us = np.empty((total, n))
    ss = np.empty((total, n))

    y = config.initial_state(L)
    if not np.all(np.isfinite(y)):
        raise SimulationBlowUp(0.0, "initial state")
    k = 0
    aux = {"u": None, "s": None}
    # overflow shows up as a non-finite state and is reported as SimulationBlowUp
    with np.errstate(over="ignore", invalid="ignore"):
        y, k = _integrate(loop, config, segments, y, times, sigmas, states, us, ss, aux)
    t_end = T if segments else 0.0
    sigma_end = schedule.sigma(t_end)
    aux["u"], aux["s"] = us[k], ss[k]
    loop.derivative(t_end, y, config.family[sigma_end], aux)
    times[k], sigmas[k], states[k] = t_end, sigma_end, y
    log.debug("integrated %d steps to t = %g", k, t_end)
    return TrajectoryLog(times, sigmas, states, us, ss, L, loop.r)


def _integrate(loop, config, segments, y, times, sigmas, states, us, ss, aux):
    k = 0
    for t0, steps, h, sigma in segments:
        graph = config.family[sigma]

        def f(t, z, graph=graph):
            return loop.derivative(t, z, graph)

        for j in range(steps):
            t = t0 + j * h
            aux["u"], aux["s"] = us[k], ss[k]
            k1 = loop.derivative(t, y, graph, aux)
            times[k], sigmas[k], states[k] = t, sigma, y
            y = rk4_step(y, t, h, f, k1=k1)
            if not np.all(np.isfinite(y)):
                raise SimulationBlowUp(t + h)
            k += 1
    return y, k


class ObserverLog(NamedTuple):
    t: np.ndarray
    sigma: np.ndarray
    v: np.ndarray        # (K, q)
    S_hat: np.ndarray    # (K, N, q, q)
    v_hat: np.ndarray    # (K, N, q)

    def v_tilde_norm(self) -> np.ndarray:
        """Stacked Euclidean norm of ``v_hat_i - v`` at every grid point."""
        d = self.v_hat - self.v[:, None, :]
        return np.sqrt(np.einsum("kni,kni->k", d, d))


def run_observer(config: SimConfig) -> ObserverLog:
    """Integrate only the leader and the adaptive observer bank.

    The observer does not depend on the followers' plants, so this reproduces
    the estimation part of :func:`run` exactly, and stays meaningful when the
    full loop is unstable.
    """
    S = np.array(config.exosystem.S)
    q, n = config.exosystem.q, len(config.agents)
    mu1, mu2 = config.observer.mu1, config.observer.mu2
    schedule = config.schedule_for(config.T)
    y = np.concatenate([config.v0, np.ravel(config.init.S_hat), np.ravel(config.init.v_hat)])
    nS = n * q * q
    times, sigmas, ys = [0.0], [schedule.sigma(0.0)], [y]
    for t0, steps, h, sigma in switch_aligned_grid(schedule, config.T, config.dt):
        g = config.family[sigma]
        minus_h, lead = -h_matrix(g), g.adjacency[1:, 0][:, None]

        def f(t, z, minus_h=minus_h, lead=lead):
            v = z[:q]
            Sh = z[q:q + nS].reshape(n, q * q)
            vh = z[q + nS:].reshape(n, q)
            dS = mu1 * (minus_h @ Sh + lead * S.ravel())
            dvh = (Sh.reshape(n, q, q) @ vh[:, :, None])[:, :, 0] + mu2 * (minus_h @ vh + lead * v)
            return np.concatenate([S @ v, dS.ravel(), dvh.ravel()])

        for j in range(steps):
            y = rk4_step(y, t0 + j * h, h, f)
            times.append(t0 + (j + 1) * h)
            sigmas.append(sigma)
            ys.append(y)
    if len(times) > 1:
        sigmas[-1] = schedule.sigma(times[-1])
    arr = np.array(ys)
    return ObserverLog(np.array(times), np.array(sigmas), arr[:, :q],
                       arr[:, q:q + nS].reshape(-1, n, q, q), arr[:, q + nS:].reshape(-1, n, q))


def simulate_stilde(family, schedule: SwitchingSchedule, mu1: float, S_tilde0, dt: float, T: float):
    """Integrate the stacked matrix-estimate error ``S~' = -mu1 (H_sigma (x) I) S~`` alone.

    ``S_tilde0`` has shape ``(N, q, q)``; returns ``(times, norms)`` with the
    stacked Frobenius norm at every grid point.
    """
    z = np.array(S_tilde0, dtype=float)
    shape = z.shape
    z = z.reshape(shape[0], -1)
    hs = {i: -mu1 * h_matrix(family[i]) for i in set(schedule.indices)}
    times = [0.0]
    norms = [float(np.linalg.norm(z))]
    flat = z.ravel()
    for t0, steps, h, sigma in switch_aligned_grid(schedule, T, dt):
        m = hs[sigma]

        def f(t, y, m=m):
            return (m @ y.reshape(shape[0], -1)).ravel()

        for j in range(steps):
            flat = rk4_step(flat, t0 + j * h, h, f)
            times.append(t0 + (j + 1) * h)
            norms.append(float(np.sqrt(flat @ flat)))
    return np.array(times), np.array(norms)
