"""Simulation configuration: dataclass form plus the JSON document loader.

JSON layout (top-level keys)::

    exosystem   {"r", "alpha", "Sb", "v0"}  or  {"frequencies": {"reference", "disturbance"}, "v0"}
    agents      [{"r", "theta", "regressor", "coefficients"?, "disturbance"}, ...]
    graphs      {"node_count", "family": [{"edges": [[src, dst, (w)], ...]} | {"adjacency": [[...]]}]}
    schedule    {"type": "periodic", "T0", "cycle"} | {"type": "explicit", "switch_times", "indices", "dwell"?}
    observer    {"mu0", "mu1", "mu2"}
    controller  {"beta", "k", "Lambda"?, "allow_small_k"?}  or a list with one entry per agent
    init        {"x", "v_hat", "S_hat"?, "S_a_hat"?, "S_b_hat"?, "theta_hat"?}
    sim         {"dt", "T", "law"?, "epsilon"?, "waive_assumptions"?, "out"?}
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..controller import ControllerParams
from ..graph import Digraph, GraphFamily, SwitchingSchedule, periodic_schedule, validate_digraph
from ..leader import Exosystem
from ..observer import ObserverParams
from ..plant import AgentModel, monomial_disturbance, parse_monomials, polynomial_regressor, van_der_pol_regressor

TOP_LEVEL_KEYS = ("exosystem", "agents", "graphs", "schedule", "observer", "controller", "init", "sim")
LAWS = ("distributed", "decentralized")


class ValidationError(ValueError):
    """Configuration problem, tagged with the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class PeriodicSpec:
    period: float
    cycle: tuple[int, ...]

    def build(self, horizon: float) -> SwitchingSchedule:
        return periodic_schedule(self.period, self.cycle, horizon)


@dataclass(frozen=True)
class ExplicitSpec:
    switch_times: tuple[float, ...]
    indices: tuple[int, ...]
    dwell: float | None = None

    def build(self, horizon: float) -> SwitchingSchedule:
        keep = [k for k, t in enumerate(self.switch_times) if k == 0 or t < horizon]
        return SwitchingSchedule(tuple(self.switch_times[k] for k in keep),
                                 tuple(self.indices[k] for k in keep),
                                 end=max(horizon, self.switch_times[keep[-1]]), dwell=self.dwell)


@dataclass(frozen=True, eq=False)
class InitialConditions:
    x: np.ndarray          # (N, r)
    v_hat: np.ndarray      # (N, q)
    S_hat: np.ndarray      # (N, q, q)
    theta_hat: tuple       # N vectors


@dataclass(frozen=True, eq=False)
class SimConfig:
    exosystem: Exosystem
    v0: np.ndarray
    agents: tuple[AgentModel, ...]
    family: GraphFamily
    schedule: PeriodicSpec | ExplicitSpec
    observer: ObserverParams
    controllers: tuple[ControllerParams, ...]
    init: InitialConditions
    dt: float = 1e-3
    T: float = 100.0
    law: str = "distributed"
    epsilon: float | None = None
    waive_assumptions: bool = False
    out: str | None = None
    source: dict = field(default=None, repr=False)

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)

    def schedule_for(self, horizon: float) -> SwitchingSchedule:
        return self.schedule.build(horizon)

    def connectivity_schedule(self) -> SwitchingSchedule:
        """Schedule over which joint connectivity is decided: one period for
        periodic signals, the configured horizon otherwise."""
        if isinstance(self.schedule, PeriodicSpec):
            return self.schedule.build(self.schedule.period)
        return self.schedule.build(self.T)

    def epsilon_for(self, schedule: SwitchingSchedule) -> float:
        if self.epsilon is not None:
            return self.epsilon
        if isinstance(self.schedule, PeriodicSpec):
            return 2.0 * self.schedule.period
        return 2.0 * max(b - a for a, b, _ in schedule.intervals())

    def initial_state(self, layout) -> np.ndarray:
        return layout.pack(self.v0, self.init.S_hat, self.init.v_hat, self.init.x, self.init.theta_hat)


def validate(c: SimConfig) -> None:
    ex = c.exosystem
    r, q = ex.r, ex.q
    n = len(c.agents)
    if not (c.dt > 0 and np.isfinite(c.dt)):
        raise ValidationError("sim.dt", f"must be positive, got {c.dt}")
    if not (c.T >= 0 and np.isfinite(c.T)):
        raise ValidationError("sim.T", f"must be non-negative, got {c.T}")
    if c.law not in LAWS:
        raise ValidationError("sim.law", f"must be one of {LAWS}, got {c.law!r}")
    if np.shape(c.v0) != (q,):
        raise ValidationError("exosystem.v0", f"expected {q} entries, got shape {np.shape(c.v0)}")
    if n < 1:
        raise ValidationError("agents", "at least one follower is required")
    for i, a in enumerate(c.agents):
        if a.r != r:
            raise ValidationError(f"agents[{i}].r", f"plant order {a.r} differs from exosystem order {r}")
    if c.family.node_count != n + 1:
        raise ValidationError("graphs.node_count", f"expected {n + 1} nodes (leader + {n}), got {c.family.node_count}")
    for k, g in enumerate(c.family.graphs):
        problems = validate_digraph(g)
        if problems:
            raise ValidationError(f"graphs.family[{k}]", "; ".join(problems))
    sched = c.schedule_for(max(c.T, c.dt))
    try:
        sched.check_family(c.family)
    except ValueError as exc:
        raise ValidationError("schedule", str(exc)) from None
    if c.dt > sched.dwell * (1 + 1e-12):
        raise ValidationError("sim.dt", f"step {c.dt} exceeds the dwell time {sched.dwell}")
    if len(c.controllers) != n:
        raise ValidationError("controller", f"expected {n} controller entries, got {len(c.controllers)}")
    for i, (ctrl, a) in enumerate(zip(c.controllers, c.agents)):
        if ctrl.r != r:
            raise ValidationError(f"controller[{i}].beta", f"need {r - 1} coefficients, got {len(ctrl.beta)}")
        try:
            ctrl.gain_matrix(a.m)
        except ValueError as exc:
            raise ValidationError(f"controller[{i}].Lambda", str(exc)) from None
    init = c.init
    if np.shape(init.x) != (n, r):
        raise ValidationError("init.x", f"expected shape ({n}, {r}), got {np.shape(init.x)}")
    if np.shape(init.v_hat) != (n, q):
        raise ValidationError("init.v_hat", f"expected shape ({n}, {q}), got {np.shape(init.v_hat)}")
    if np.shape(init.S_hat) != (n, q, q):
        raise ValidationError("init.S_hat", f"expected shape ({n}, {q}, {q}), got {np.shape(init.S_hat)}")
    if len(init.theta_hat) != n:
        raise ValidationError("init.theta_hat", f"expected {n} vectors, got {len(init.theta_hat)}")
    for i, (th, a) in enumerate(zip(init.theta_hat, c.agents)):
        if np.shape(th) != (a.m,):
            raise ValidationError(f"init.theta_hat[{i}]", f"expected {a.m} entries, got {np.shape(th)}")


# --- JSON document -> SimConfig --------------------------------------------

def _get(d: dict, key: str, path: str, default: Any = ...):
    if not isinstance(d, dict):
        raise ValidationError(path, f"expected an object, got {type(d).__name__}")
    if key not in d:
        if default is ...:
            raise ValidationError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return d[key]


def _array(value, path: str, ndim: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(path, f"expected numbers, got {value!r}") from None
    if ndim is not None and arr.ndim != ndim and arr.size:
        raise ValidationError(path, f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(path, "contains non-finite values")
    return arr


def _exosystem(d: dict) -> tuple[Exosystem, np.ndarray]:
    p = "exosystem"
    if "frequencies" in d:
        fr = d["frequencies"]
        ex = Exosystem.from_frequencies(_get(fr, "reference", f"{p}.frequencies"),
                                        fr.get("disturbance", []))
    else:
        alpha = _array(_get(d, "alpha", p), f"{p}.alpha", 1)
        if "r" in d and int(d["r"]) != alpha.size:
            raise ValidationError(f"{p}.r", f"r = {d['r']} but alpha has {alpha.size} entries")
        sb = _array(d.get("Sb", []), f"{p}.Sb")
        try:
            ex = Exosystem(alpha, sb.reshape(sb.shape if sb.ndim == 2 else (0, 0)) if sb.size else np.zeros((0, 0)))
        except ValueError as exc:
            raise ValidationError(f"{p}.Sb", str(exc)) from None
    v0 = _array(_get(d, "v0", p), f"{p}.v0", 1)
    return ex, v0


def _disturbance(spec, path: str, n_w: int):
    if spec is None or spec == 0 or spec == "0":
        return monomial_disturbance([])
    try:
        if isinstance(spec, str):
            return monomial_disturbance(parse_monomials(spec, "w", n_w))
        terms = [(t["coef"], t["powers"]) if isinstance(t, dict) else (t[0], t[1]) for t in spec]
        for _, powers in terms:
            if len(powers) != n_w:
                raise ValueError(f"monomial powers need {n_w} entries, got {powers}")
        return monomial_disturbance(terms)
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ValidationError(path, f"bad disturbance expression: {exc}") from None


def _regressor(d: dict, path: str, r: int):
    kind = d.get("regressor", "van_der_pol")
    if kind == "van_der_pol":
        if r != 2:
            raise ValidationError(f"{path}.regressor", "van_der_pol needs r = 2")
        return van_der_pol_regressor
    if kind == "polynomial":
        table = _get(d, "coefficients", path)
        rows = []
        try:
            for k, row in enumerate(table):
                if isinstance(row, str):
                    rows.append(parse_monomials(row, "x", r))
                else:
                    rows.append([(t["coef"], t["powers"]) if isinstance(t, dict) else (t[0], t[1]) for t in row])
                    for _, powers in rows[-1]:
                        if len(powers) != r:
                            raise ValueError(f"row {k}: powers need {r} entries")
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ValidationError(f"{path}.coefficients", str(exc)) from None
        return polynomial_regressor(rows)
    raise ValidationError(f"{path}.regressor", f"unknown regressor {kind!r} (van_der_pol | polynomial)")


def _graphs(d: dict, n_agents: int) -> GraphFamily:
    p = "graphs"
    node_count = int(d.get("node_count", n_agents + 1))
    family = _get(d, "family", p)
    if not isinstance(family, list) or not family:
        raise ValidationError(f"{p}.family", "expected a non-empty list of graphs")
    graphs = []
    for k, g in enumerate(family):
        gp = f"{p}.family[{k}]"
        try:
            if isinstance(g, dict) and "adjacency" in g:
                graphs.append(Digraph(_array(g["adjacency"], f"{gp}.adjacency", 2)))
            elif isinstance(g, dict) and "edges" in g:
                graphs.append(Digraph.from_edges(node_count, g["edges"]))
            else:
                raise ValidationError(gp, "expected 'adjacency' or 'edges'")
        except ValidationError:
            raise
        except (ValueError, TypeError) as exc:
            raise ValidationError(gp, str(exc)) from None
    try:
        return GraphFamily(tuple(graphs))
    except ValueError as exc:
        raise ValidationError(f"{p}.family", str(exc)) from None


def _schedule(d: dict):
    p = "schedule"
    kind = d.get("type", "periodic")
    if kind == "periodic":
        period = float(d.get("T0", 1.0))
        cycle = tuple(int(i) for i in _get(d, "cycle", p))
        if period <= 0 or not cycle:
            raise ValidationError(p, "periodic schedule needs T0 > 0 and a non-empty cycle")
        return PeriodicSpec(period, cycle)
    if kind == "explicit":
        times = tuple(float(t) for t in _get(d, "switch_times", p))
        indices = tuple(int(i) for i in _get(d, "indices", p))
        spec = ExplicitSpec(times, indices, d.get("dwell"))
        try:
            spec.build(times[-1] if times else 0.0)
        except (ValueError, IndexError) as exc:
            raise ValidationError(p, str(exc)) from None
        return spec
    raise ValidationError(f"{p}.type", f"unknown schedule type {kind!r} (periodic | explicit)")


def _controllers(spec, n: int) -> tuple[ControllerParams, ...]:
    entries = spec if isinstance(spec, list) else [spec] * n
    out = []
    for i, c in enumerate(entries):
        path = f"controller[{i}]" if isinstance(spec, list) else "controller"
        lam = c.get("Lambda")
        try:
            out.append(ControllerParams(tuple(_get(c, "beta", path)), float(_get(c, "k", path)),
                                        None if lam is None else _array(lam, f"{path}.Lambda", 2),
                                        bool(c.get("allow_small_k", False))))
        except ValidationError:
            raise
        except (ValueError, TypeError) as exc:
            raise ValidationError(path, str(exc)) from None
    return tuple(out)


def _per_agent(value, n: int, path: str, ndim: int) -> np.ndarray:
    """Accept either one entry per agent or a single shared entry."""
    arr = _array(value, path)
    if arr.ndim == ndim - 1:
        arr = np.broadcast_to(arr, (n,) + arr.shape).copy()
    return arr


def from_dict(doc: dict, *, dt: float | None = None, T: float | None = None) -> SimConfig:
    if not isinstance(doc, dict):
        raise ValidationError("<root>", "config must be a JSON object")
    unknown = sorted(set(doc) - set(TOP_LEVEL_KEYS))
    if unknown:
        raise ValidationError("<root>", f"unknown top-level keys {unknown}")
    ex, v0 = _exosystem(_get(doc, "exosystem", ""))
    r, q, n_w = ex.r, ex.q, ex.n_w

    agents_doc = _get(doc, "agents", "")
    if not isinstance(agents_doc, list) or not agents_doc:
        raise ValidationError("agents", "expected a non-empty list")
    agents = []
    for i, a in enumerate(agents_doc):
        path = f"agents[{i}]"
        ar = int(a.get("r", r))
        theta = _array(_get(a, "theta", path), f"{path}.theta", 1)
        agents.append(AgentModel(ar, theta, _regressor(a, path, ar),
                                 _disturbance(a.get("disturbance"), f"{path}.disturbance", n_w),
                                 name=a.get("name", f"agent{i + 1}")))
    n = len(agents)

    family = _graphs(_get(doc, "graphs", ""), n)
    schedule = _schedule(_get(doc, "schedule", ""))

    obs = _get(doc, "observer", "")
    try:
        observer = ObserverParams(float(obs.get("mu0", obs.get("mu2", 1.0))),
                                  float(_get(obs, "mu1", "observer")), float(_get(obs, "mu2", "observer")))
    except ValidationError:
        raise
    except (ValueError, TypeError) as exc:
        raise ValidationError("observer", str(exc)) from None

    controllers = _controllers(_get(doc, "controller", ""), n)

    init = _get(doc, "init", "")
    x = _array(_get(init, "x", "init"), "init.x")
    v_hat = _array(_get(init, "v_hat", "init"), "init.v_hat")
    if "S_hat" in init:
        S_hat = _per_agent(init["S_hat"], n, "init.S_hat", 3)
    else:
        S_a = _per_agent(init.get("S_a_hat", np.zeros((r, r))), n, "init.S_a_hat", 3)
        S_b = _per_agent(init.get("S_b_hat", np.zeros((n_w, n_w))), n, "init.S_b_hat", 3)
        if S_a.shape != (n, r, r) or S_b.shape != (n, n_w, n_w):
            raise ValidationError("init", f"S_a_hat/S_b_hat must be {r}x{r} / {n_w}x{n_w}")
        S_hat = np.zeros((n, q, q))
        S_hat[:, :r, :r] = S_a
        S_hat[:, r:, r:] = S_b
    if "theta_hat" in init:
        th = init["theta_hat"]
        theta_hat = tuple(_array(t, f"init.theta_hat[{i}]", 1) for i, t in enumerate(th))
    else:
        theta_hat = tuple(np.zeros(a.m) for a in agents)

    sim = doc.get("sim", {})
    return SimConfig(
        exosystem=ex, v0=v0, agents=tuple(agents), family=family, schedule=schedule,
        observer=observer, controllers=controllers,
        init=InitialConditions(x, v_hat, S_hat, theta_hat),
        dt=float(dt if dt is not None else sim.get("dt", 1e-3)),
        T=float(T if T is not None else sim.get("T", 100.0)),
        law=sim.get("law", "distributed"),
        epsilon=sim.get("epsilon"),
        waive_assumptions=bool(sim.get("waive_assumptions", False)),
        out=sim.get("out"),
        source=doc,
    )


def load_config(path: str | Path, **overrides) -> SimConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return from_dict(doc, **overrides)
