"""Leader exosystem ``v' = S v`` with ``S = diag(S_a, S_b)``.

``S_a`` is in companion form (ones on the superdiagonal, ``alpha`` on the
bottom row) and generates the reference ``x0``; ``S_b`` generates the
disturbance driver ``w``. The stacked leader state is ``v = (x0, w)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as P


def companion(alpha: Sequence[float]) -> np.ndarray:
    r = len(alpha)
    m = np.zeros((r, r))
    m[np.arange(r - 1), np.arange(1, r)] = 1.0
    m[-1] = alpha
    return m


@dataclass(frozen=True, eq=False)
class Exosystem:
    alpha: np.ndarray
    S_b: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if alpha.ndim != 1 or alpha.size < 1:
            raise ValueError("alpha must be a non-empty vector")
        s_b = np.asarray(self.S_b, dtype=float)
        if s_b.size == 0:
            s_b = np.zeros((0, 0))
        if s_b.ndim != 2 or s_b.shape[0] != s_b.shape[1]:
            raise ValueError(f"S_b must be square, got shape {s_b.shape}")
        for arr in (alpha, s_b):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "S_b", s_b)
        S = build_S(self)
        S.setflags(write=False)
        object.__setattr__(self, "_S", S)

    @classmethod
    def from_frequencies(cls, reference: Sequence[float], disturbance: Sequence[float] = ()) -> "Exosystem":
        """Exosystem whose modes are ``+-i*omega`` for each listed frequency.

        A zero frequency contributes a single zero eigenvalue (a constant).
        ``S_a`` is the companion matrix of the product of the mode polynomials;
        ``S_b`` is block diagonal with 2x2 rotation blocks.
        """
        poly = np.array([1.0])
        for om in reference:
            poly = P.polymul(poly, [0.0, 1.0] if om == 0 else [om * om, 0.0, 1.0])
        # monic lambda^r - alpha_r lambda^(r-1) - ... - alpha_1
        alpha = -poly[:-1] + 0.0
        blocks = []
        for om in disturbance:
            blocks.append(np.zeros((1, 1)) if om == 0 else np.array([[0.0, om], [-om, 0.0]]))
        n_w = sum(b.shape[0] for b in blocks)
        s_b = np.zeros((n_w, n_w))
        k = 0
        for b in blocks:
            d = b.shape[0]
            s_b[k:k + d, k:k + d] = b
            k += d
        return cls(alpha, s_b)

    @property
    def r(self) -> int:
        return self.alpha.size

    @property
    def n_w(self) -> int:
        return self.S_b.shape[0]

    @property
    def q(self) -> int:
        return self.r + self.n_w

    @property
    def S_a(self) -> np.ndarray:
        return companion(self.alpha)

    @property
    def S(self) -> np.ndarray:
        return self._S


def build_S(e: Exosystem) -> np.ndarray:
    r, n_w = e.alpha.size, e.S_b.shape[0]
    S = np.zeros((r + n_w, r + n_w))
    S[:r, :r] = companion(e.alpha)
    S[r:, r:] = e.S_b
    return S


class SpectrumCheck(NamedTuple):
    ok: bool
    eigenvalues: np.ndarray

    def __bool__(self):
        return self.ok


def check_assumption1(e: Exosystem, tol: float = 1e-8) -> SpectrumCheck:
    """Eigenvalues of ``S`` must be distinct and lie on the imaginary axis."""
    if e.q > 16:
        raise ValueError(f"spectrum check is meant for q <= 16, got q = {e.q}")
    try:
        eig = np.linalg.eigvals(e.S)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigenvalue computation failed: {exc}") from exc
    on_axis = bool(np.all(np.abs(eig.real) <= tol))
    dist = np.abs(eig[:, None] - eig[None, :])
    dist[np.diag_indices_from(dist)] = np.inf
    distinct = bool(np.all(dist > tol))
    order = np.lexsort((eig.real, eig.imag))
    return SpectrumCheck(on_axis and distinct, eig[order])


def leader_derivative(e: Exosystem, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (e.q,):
        raise ValueError(f"leader state must have shape ({e.q},), got {v.shape}")
    return e.S @ v
