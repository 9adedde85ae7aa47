"""Block coordinate descent on a perturbed RBM energy, started from data."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .model import BinaryState
from .perturbation import PerturbedParams


@dataclass
class DescendResult:
    state: BinaryState
    steps_taken: int
    converged: bool
    # (v, h) after every half-update, only filled when requested
    trajectory: list = field(default_factory=list)


def perturbed_energy(v, h, pp) -> np.ndarray:
    """-(v'W~h + a~'v + b~'h); batched over leading axes."""
    v = np.asarray(v, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    return -(np.einsum("...i,...ij,...j->...", v, pp.W, h) + (v * pp.a).sum(-1) + (h * pp.b).sum(-1))


def _hidden_update(v, pp):
    # strict threshold: an activation of exactly 0 gives 0
    return (pp.b + v @ pp.W > 0).astype(np.uint8)


def _visible_update(h, pp):
    return (pp.a + h @ pp.W.T > 0).astype(np.uint8)


def descend_sweep(s: BinaryState, pp: PerturbedParams) -> BinaryState:
    """One full sweep: hidden block from v, then visible block from the new h."""
    if s.v.shape != (pp.n,) or s.h.shape != (pp.m,):
        raise InvalidArgumentError(
            f"state shapes ({s.v.shape}, {s.h.shape}) do not match model ({pp.n}, {pp.m})"
        )
    h = _hidden_update(s.v.astype(np.float64), pp)
    v = _visible_update(h.astype(np.float64), pp)
    return BinaryState(v, h)


def perturb_and_descend(v0, pp: PerturbedParams, K: int, record: bool = False) -> DescendResult:
    """Descend from v0 for at most K sweeps or until a sweep changes nothing.

    h is initialized by the hidden half-update from v0. With ``record`` the
    state after every half-update is kept in ``trajectory``, starting with
    (v0, h0).
    """
    if int(K) != K or K < 1:
        raise InvalidArgumentError(f"K must be a positive integer, got {K}")
    v = np.asarray(v0)
    if v.shape != (pp.n,):
        raise InvalidArgumentError(f"v0 has shape {v.shape}, expected ({pp.n},)")
    v = BinaryState(v, np.zeros(pp.m)).v
    h = _hidden_update(v.astype(np.float64), pp)
    trajectory = [(v, h)] if record else []
    converged = False
    steps = 0
    while steps < K:
        h_new = _hidden_update(v.astype(np.float64), pp)
        if record:
            trajectory.append((v, h_new))
        v_new = _visible_update(h_new.astype(np.float64), pp)
        if record:
            trajectory.append((v_new, h_new))
        steps += 1
        unchanged = np.array_equal(v_new, v) and np.array_equal(h_new, h)
        v, h = v_new, h_new
        if unchanged:
            converged = True
            break
    return DescendResult(BinaryState(v, h), steps, converged, trajectory)


def descend_batch(V0, W, A, B, K: int):
    """Vectorized descent for a batch of particles.

    V0: (P, n) start vectors. W: (n, m) shared or (P, n, m) per particle.
    A: (P, n), B: (P, m) perturbed biases. Each particle stops independently,
    so row k matches ``perturb_and_descend`` on its own parameters.

    Returns (V, H, steps, converged).
    """
    if int(K) != K or K < 1:
        raise InvalidArgumentError(f"K must be a positive integer, got {K}")
    V = np.asarray(V0, dtype=np.float64).copy()
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    shared = W.ndim == 2

    def up(v):
        act = v @ W if shared else np.einsum("pi,pij->pj", v, W)
        return (B + act > 0).astype(np.float64)

    def down(h):
        act = h @ W.T if shared else np.einsum("pij,pj->pi", W, h)
        return (A + act > 0).astype(np.float64)

    H = up(V)
    P = V.shape[0]
    steps = np.zeros(P, dtype=np.int64)
    converged = np.zeros(P, dtype=bool)
    active = np.ones(P, dtype=bool)
    for _ in range(int(K)):
        if not active.any():
            break
        h_new = up(V)
        v_new = down(h_new)
        same = np.all(v_new == V, axis=1) & np.all(h_new == H, axis=1)
        steps[active] += 1
        V[active] = v_new[active]
        H[active] = h_new[active]
        converged |= active & same
        active &= ~same
    return V.astype(np.uint8), H.astype(np.uint8), steps, converged
