"""Follower plants: order-r integrator chains with a linearly parameterised
nonlinearity and an exosystem-driven disturbance on the last state."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Regressor = Callable[[np.ndarray, float], np.ndarray]
Disturbance = Callable[[np.ndarray], float]


@dataclass(frozen=True, eq=False)
class AgentModel:
    r: int
    theta: np.ndarray
    regressor: Regressor
    disturbance: Disturbance
    name: str = field(default="")

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("plant order r must be at least 1")
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self) -> int:
        return self.theta.size


def plant_derivative(model: AgentModel, x, u: float, w, t: float = 0.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != (model.r,):
        raise ValueError(f"state must have shape ({model.r},), got {x.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w)) and np.isfinite(u)):
        raise ValueError(f"non-finite plant input at t = {t}: x={x}, u={u}, w={w}")
    f = model.regressor(x, t)
    dx = np.empty_like(x)
    dx[:-1] = x[1:]
    dx[-1] = f @ model.theta + model.disturbance(w) + u
    return dx


def van_der_pol_regressor(x: np.ndarray, t: float = 0.0) -> np.ndarray:
    x1, x2 = x[0], x[1]
    return np.array([-x1, x2 * (1.0 - x1 * x1)])


# --- polynomial building blocks -------------------------------------------

Term = tuple[float, tuple[int, ...]]

_FACTOR = re.compile(r"^(?:(?P<num>[0-9.eE+-]+)|(?P<var>[a-z])(?P<idx>\d+)(?:\^(?P<pow>\d+))?)$")


def parse_monomials(expr: str, var: str, dim: int) -> list[Term]:
    """Parse ``"w1^2*w2^2 + 3*w1*w2 - w2"`` into ``[(coef, powers), ...]``.

    Variable indices are 1-based; ``dim`` is the number of variables.
    """
    text = expr.replace(" ", "").replace("**", "^")
    if not text:
        raise ValueError("empty polynomial expression")
    if text[0] not in "+-":
        text = "+" + text
    # split on signs that are not part of an exponent like 1e-3
    parts = re.split(r"(?<![0-9.][eE])([+-])", text)[1:]
    terms = []
    for sign, body in zip(parts[::2], parts[1::2]):
        if not body:
            raise ValueError(f"dangling sign in {expr!r}")
        coef = -1.0 if sign == "-" else 1.0
        powers = [0] * dim
        for factor in body.split("*"):
            m = _FACTOR.match(factor)
            if not m:
                raise ValueError(f"cannot parse factor {factor!r} in {expr!r}")
            if m.group("num") is not None:
                coef *= float(m.group("num"))
                continue
            if m.group("var") != var:
                raise ValueError(f"unknown variable {factor!r} in {expr!r}, expected {var}1..{var}{dim}")
            k = int(m.group("idx"))
            if not 1 <= k <= dim:
                raise ValueError(f"variable {factor!r} out of range 1..{dim}")
            powers[k - 1] += int(m.group("pow") or 1)
        terms.append((coef, tuple(powers)))
    return terms


def _eval_terms(terms: Sequence[Term], z: np.ndarray) -> float:
    total = 0.0
    for coef, powers in terms:
        prod = coef
        for zk, p in zip(z, powers):
            if p:
                prod *= zk ** p
        total += prod
    return float(total)


def monomial_disturbance(terms: Sequence[Term]) -> Disturbance:
    terms = [(float(c), tuple(int(p) for p in pw)) for c, pw in terms]

    def d(w: np.ndarray) -> float:
        return _eval_terms(terms, w)

    d.terms = terms
    return d


def polynomial_regressor(table: Sequence[Sequence[Term]]) -> Regressor:
    """Regressor whose ``k``-th entry is the polynomial ``table[k]`` in ``x``."""
    table = [[(float(c), tuple(int(p) for p in pw)) for c, pw in row] for row in table]

    def f(x: np.ndarray, t: float = 0.0) -> np.ndarray:
        return np.array([_eval_terms(row, x) for row in table])

    f.table = table
    return f


def van_der_pol_fleet() -> list[AgentModel]:
    """The four van der Pol followers with their parameters and disturbances."""
    disturbances = [
        lambda w: w[0] ** 2 * w[1] ** 2,
        lambda w: w[0] * w[1] ** 3,
        lambda w: w[0] ** 3 + w[0] * w[1],
        lambda w: w[1] ** 4,
    ]
    thetas = [(4.0, 5.0), (3.0, 1.0), (2.0, 5.0), (5.0, 3.0)]
    return [AgentModel(2, th, van_der_pol_regressor, d, name=f"vdp{i + 1}")
            for i, (th, d) in enumerate(zip(thetas, disturbances))]
