"""Distributed observers of the leader.

Followers are stacked along the first axis: ``S_hats`` has shape ``(N, q, q)``
and ``v_hats`` shape ``(N, q)``. The leader enters every neighbour sum as
virtual node 0 with estimates ``(S, v)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import Digraph


@dataclass(frozen=True)
class ObserverParams:
    mu0: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0

    def __post_init__(self):
        for name in ("mu0", "mu1", "mu2"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"observer gain {name} must be positive, got {value}")


def _consensus(a: np.ndarray, leader: np.ndarray, followers: np.ndarray) -> np.ndarray:
    """``sum_j a_ij (z_j - z_i)`` for every follower ``i``, with ``z_0 = leader``.

    ``a`` is the full ``(N+1, N+1)`` adjacency; the trailing axes of
    ``leader`` / ``followers`` are flattened for the product.
    """
    n = followers.shape[0]
    flat = followers.reshape(n, -1)
    rows = a[1:]
    stacked = np.vstack([leader.reshape(1, -1), flat])
    out = rows @ stacked - rows.sum(axis=1)[:, None] * flat
    return out.reshape(followers.shape)


def _check_bank(g: Digraph, S: np.ndarray, v: np.ndarray, v_hats: np.ndarray, S_hats=None):
    n = g.follower_count
    q = v.shape[0]
    if S.shape != (q, q):
        raise ValueError(f"leader matrix shape {S.shape} does not match state dimension {q}")
    if v_hats.shape != (n, q):
        raise ValueError(f"v_hats must have shape ({n}, {q}), got {v_hats.shape}")
    if S_hats is not None and S_hats.shape != (n, q, q):
        raise ValueError(f"S_hats must have shape ({n}, {q}, {q}), got {S_hats.shape}")


def adaptive_observer_derivative(S_hats, v_hats, g: Digraph, S, v, params: ObserverParams):
    """Time derivatives ``(dS_hats, dv_hats)`` of the adaptive distributed observer."""
    S_hats = np.asarray(S_hats, dtype=float)
    v_hats = np.asarray(v_hats, dtype=float)
    S = np.asarray(S, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_bank(g, S, v, v_hats, S_hats)
    a = g.adjacency
    dS = params.mu1 * _consensus(a, S, S_hats)
    dv = np.einsum("nij,nj->ni", S_hats, v_hats) + params.mu2 * _consensus(a, v, v_hats)
    return dS, dv


def static_observer_derivative(v_hats, g: Digraph, S, v, params: ObserverParams):
    """Observer in which every follower knows ``S``; gain ``mu0``."""
    v_hats = np.asarray(v_hats, dtype=float)
    S = np.asarray(S, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_bank(g, S, v, v_hats)
    return v_hats @ S.T + params.mu0 * _consensus(g.adjacency, v, v_hats)


class Estimate(NamedTuple):
    x_hat: np.ndarray
    w_hat: np.ndarray
    S_a_hat: np.ndarray
    S_b_hat: np.ndarray
    alpha_hat: np.ndarray


def split_estimate(S_hat, v_hat, r: int, n_w: int) -> Estimate:
    S_hat = np.asarray(S_hat, dtype=float)
    v_hat = np.asarray(v_hat, dtype=float)
    q = r + n_w
    if v_hat.shape != (q,) or S_hat.shape != (q, q):
        raise ValueError(f"estimate dimensions {S_hat.shape}, {v_hat.shape} do not match r + n_w = {q}")
    S_a = S_hat[:r, :r]
    return Estimate(v_hat[:r], v_hat[r:], S_a, S_hat[r:, r:], S_a[-1].copy())


def join_estimate(est: Estimate) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`split_estimate` for block-diagonal estimates."""
    r, n_w = est.x_hat.size, est.w_hat.size
    S_hat = np.zeros((r + n_w, r + n_w))
    S_hat[:r, :r] = est.S_a_hat
    S_hat[r:, r:] = est.S_b_hat
    return S_hat, np.concatenate([est.x_hat, est.w_hat])


def coupling_terms(v_hats, g: Digraph, v, mu2: float, r: int) -> np.ndarray:
    """Consensus corrections ``mu2 * sum_j a_ij (xhat_sj - xhat_si)``, shape ``(N, r)``."""
    v_hats = np.asarray(v_hats, dtype=float)
    v = np.asarray(v, dtype=float)
    n = g.follower_count
    if v_hats.ndim != 2 or v_hats.shape[0] != n or v_hats.shape[1] != v.shape[0] or r > v.shape[0]:
        raise ValueError(f"v_hats shape {v_hats.shape} inconsistent with graph/leader")
    return mu2 * _consensus(g.adjacency, v[:r], v_hats[:, :r])


def observer_errors(S_hats, v_hats, S, v) -> tuple[float, float]:
    """Stacked norms ``(||S_tilde||_F, ||v_tilde||_2)``."""
    S_t = np.asarray(S_hats) - np.asarray(S)
    v_t = np.asarray(v_hats) - np.asarray(v)
    return float(np.sqrt(np.sum(S_t * S_t))), float(np.sqrt(np.sum(v_t * v_t)))
