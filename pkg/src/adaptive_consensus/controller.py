"""Distributed adaptive tracking law and its decentralized (leader-aware) baseline."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

MIN_GAIN = 1.25


def routh_hurwitz(coeffs: Sequence[float]) -> bool:
    """True iff the polynomial ``coeffs[0] s^n + ... + coeffs[n]`` has all roots
    in the open left half-plane. Uses the Routh array, no root finding."""
    c = [float(x) for x in coeffs]
    if not c or not np.all(np.isfinite(c)):
        raise ValueError(f"polynomial coefficients must be finite and non-empty: {coeffs!r}")
    if c[0] <= 0:
        raise ValueError(f"leading coefficient must be positive, got {c[0]}")
    n = len(c) - 1
    if n == 0:
        return True
    if any(x <= 0 for x in c):
        return False
    width = len(c) // 2 + 2
    rows = [c[0::2], c[1::2]]
    rows = [row + [0.0] * (width - len(row)) for row in rows]
    while len(rows) < n + 1:
        a, b = rows[-2], rows[-1]
        if b[0] <= 0:
            return False
        rows.append([(b[0] * a[k + 1] - a[0] * b[k + 1]) / b[0] for k in range(width - 1)] + [0.0])
    return all(row[0] > 0 for row in rows)


def hurwitz_check(beta: Sequence[float]) -> bool:
    """Stability of ``l^(r-1) + beta_1 l^(r-2) + ... + beta_(r-1)``."""
    return routh_hurwitz([1.0, *beta])


@dataclass(frozen=True, eq=False)
class ControllerParams:
    beta: tuple[float, ...]
    k: float
    Lambda: np.ndarray = None
    allow_small_k: bool = False
    _Lambda_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        object.__setattr__(self, "beta", beta)
        if any(b <= 0 for b in beta):
            raise ValueError(f"beta must be positive, got {beta}")
        if not hurwitz_check(beta):
            raise ValueError(f"beta {beta} does not give a Hurwitz polynomial")
        if not self.k > 0:
            raise ValueError(f"gain k must be positive, got {self.k}")
        if self.k < MIN_GAIN and not self.allow_small_k:
            raise ValueError(f"gain k = {self.k} is below {MIN_GAIN}; set allow_small_k to override")
        if self.Lambda is not None:
            lam = np.atleast_2d(np.asarray(self.Lambda, dtype=float))
            if lam.shape[0] != lam.shape[1] or not np.allclose(lam, lam.T):
                raise ValueError("Lambda must be a symmetric matrix")
            eig = np.linalg.eigvalsh(lam)
            if eig.min() <= 0:
                raise ValueError("Lambda must be positive definite (singular or indefinite gain)")
            inv = np.linalg.inv(lam)
            for arr in (lam, inv):
                arr.setflags(write=False)
            object.__setattr__(self, "Lambda", lam)
            object.__setattr__(self, "_Lambda_inv", inv)
        else:
            object.__setattr__(self, "_Lambda_inv", None)

    @property
    def r(self) -> int:
        return len(self.beta) + 1

    def gain_matrix(self, m: int) -> np.ndarray:
        if self.Lambda is None:
            return np.eye(m)
        if self.Lambda.shape != (m, m):
            raise ValueError(f"Lambda shape {self.Lambda.shape} does not match regressor dimension {m}")
        return self.Lambda

    def adapt(self, f: np.ndarray, s: float) -> np.ndarray:
        """``Lambda^-1 f s``."""
        if self._Lambda_inv is None:
            return f * s
        return self._Lambda_inv @ f * s


class FilteredError(NamedTuple):
    p: float
    p_dot: float
    s: float


def compute_p_and_s(x, x_hat, x_hat_dot, beta: Sequence[float]) -> FilteredError:
    """Reference ``p_r``, its derivative and the filtered tracking error ``s = x_r - p_r``.

    ``x_hat_dot`` must be the observer's own derivative of ``x_hat`` at the
    same instant; the chain structure ``x_s' = x_(s+1)`` is used for ``x'``.
    """
    r = len(x)
    if len(x_hat) != r or len(x_hat_dot) != r or len(beta) != r - 1:
        raise ValueError(f"dimension mismatch: x {len(x)}, x_hat {len(x_hat)}, "
                         f"x_hat_dot {len(x_hat_dot)}, beta {len(beta)}")
    p = x_hat[r - 1]
    p_dot = x_hat_dot[r - 1]
    for j in range(1, r):
        b = beta[j - 1]
        p -= b * (x[r - 1 - j] - x_hat[r - 1 - j])
        p_dot -= b * (x[r - j] - x_hat_dot[r - 1 - j])
    p, p_dot = float(p), float(p_dot)
    return FilteredError(p, p_dot, float(x[r - 1]) - p)


def control_and_adaptation(f, d_value: float, s: float, p_dot: float, theta_hat,
                           params: ControllerParams) -> tuple[float, np.ndarray]:
    """Certainty-equivalence control and the gradient adaptation law.

    ``f`` is the regressor evaluated at the agent's state, ``d_value`` the
    disturbance model evaluated at the *estimated* ``w_hat``.
    """
    f = np.asarray(f, dtype=float)
    u = -float(f @ theta_hat) - d_value - params.k * s + p_dot
    return u, params.adapt(f, s)


def decentralized_baseline(x, x0, x0_dot, w, theta_hat, params: ControllerParams,
                           regressor, disturbance, t: float = 0.0):
    """Same law with the true leader state and disturbance driver in place of estimates."""
    fe = compute_p_and_s(x, x0, x0_dot, params.beta)
    f = regressor(np.asarray(x, dtype=float), t)
    u, theta_dot = control_and_adaptation(f, disturbance(np.asarray(w, dtype=float)), fe.s,
                                          fe.p_dot, theta_hat, params)
    return u, theta_dot, fe
