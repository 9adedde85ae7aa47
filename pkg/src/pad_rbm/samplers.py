"""Block Gibbs (CD / PCD), exact perturb-and-MAP, and the log Z upper-bound probe."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidArgumentError, StateError
from .model import (
    BinaryState,
    ModelParams,
    all_bit_vectors,
    hidden_conditional,
    visible_conditional,
)
from .perturbation import NoiseSource, sample_gumbel, sample_logistic

MAX_JOINT_UNITS = 16


def _bernoulli(probs, src: NoiseSource) -> np.ndarray:
    # bit = 1 iff u < p, one u per unit in row-major order
    return (src.uniform(probs.shape) < probs).astype(np.uint8)


def gibbs_sweep_arrays(V, p: ModelParams, src: NoiseSource):
    """Batched block Gibbs sweep: h ~ p(h|v), then v ~ p(v|h). V is (P, n) or (n,)."""
    H = _bernoulli(hidden_conditional(V, p), src)
    V = _bernoulli(visible_conditional(H, p), src)
    return V, H


def gibbs_sweep(s: BinaryState, p: ModelParams, src: NoiseSource) -> BinaryState:
    if s.v.shape != (p.n,) or s.h.shape != (p.m,):
        raise InvalidArgumentError(
            f"state shapes ({s.v.shape}, {s.h.shape}) do not match model ({p.n}, {p.m})"
        )
    v, h = gibbs_sweep_arrays(s.v, p, src)
    return BinaryState(v, h)


def _check_K(K):
    if int(K) != K or K < 1:
        raise InvalidArgumentError(f"K must be a positive integer, got {K}")
    return int(K)


def cd_arrays(batch, p: ModelParams, K: int, src: NoiseSource):
    """CD-K negative particles as arrays (V, H)."""
    K = _check_K(K)
    V = np.asarray(batch)
    if V.ndim != 2 or V.shape[0] == 0:
        raise InvalidArgumentError("batch must be a nonempty 2-D array of bit vectors")
    if V.shape[1] != p.n:
        raise InvalidArgumentError(f"batch width {V.shape[1]} does not match n={p.n}")
    H = _bernoulli(hidden_conditional(V, p), src)
    for _ in range(K):
        V, H = gibbs_sweep_arrays(V, p, src)
    return V, H


def cd_particles(batch, p: ModelParams, K: int, src: NoiseSource) -> list:
    """One particle per batch row: K Gibbs sweeps from (v = data, h ~ p(h|data))."""
    V, H = cd_arrays(batch, p, K, src)
    return [BinaryState(v, h) for v, h in zip(V, H)]


@dataclass
class ChainState:
    """Persistent Gibbs chains; particle count is fixed once initialized."""

    V: np.ndarray | None = None
    H: np.ndarray | None = None
    updates: int = 0

    @classmethod
    def from_data(cls, data, p: ModelParams, src: NoiseSource) -> "ChainState":
        V = np.asarray(data, dtype=np.uint8)
        if V.ndim != 2 or V.shape[0] == 0 or V.shape[1] != p.n:
            raise InvalidArgumentError("chains must start from a nonempty (P, n) data array")
        H = _bernoulli(hidden_conditional(V, p), src)
        return cls(V.copy(), H)

    @property
    def initialized(self) -> bool:
        return self.V is not None

    @property
    def particles(self) -> list:
        if not self.initialized:
            return []
        return [BinaryState(v, h) for v, h in zip(self.V, self.H)]

    def __len__(self):
        return 0 if self.V is None else self.V.shape[0]


def pcd_update(cs: ChainState, p: ModelParams, K: int, src: NoiseSource) -> ChainState:
    """Advance every persistent chain K sweeps under the current parameters."""
    K = _check_K(K)
    if not cs.initialized:
        raise StateError("persistent chains are not initialized")
    if cs.V.shape[1] != p.n:
        raise InvalidArgumentError("chain width does not match the model")
    V, H = cs.V, cs.H
    for _ in range(K):
        V, H = gibbs_sweep_arrays(V, p, src)
    return ChainState(V, H, cs.updates + 1)


def _joint_neg_energies(p: ModelParams):
    V = all_bit_vectors(p.n)
    H = all_bit_vectors(p.m)
    neg_e = V @ p.W @ H.T + (V @ p.a)[:, None] + (H @ p.b)[None, :]
    return neg_e.ravel(), V, H


def perturb_and_map_exact(p: ModelParams, src: NoiseSource, size=None, shift: float = 0.0):
    """argmax over all joint states of -E(x) + eps(x), eps(x) iid standard Gumbel.

    Each draw is an exact sample from the Gibbs distribution. ``shift`` adds a
    constant to every energy. Returns a BinaryState, or (V, H) arrays when
    ``size`` is given.
    """
    if p.n + p.m > MAX_JOINT_UNITS:
        raise CapacityError(
            f"perturb-and-MAP enumeration needs n + m <= {MAX_JOINT_UNITS}, got {p.n + p.m}"
        )
    neg_e, V, H = _joint_neg_energies(p)
    neg_e = neg_e - shift
    k = 1 if size is None else int(size)
    idx = np.empty(k, dtype=np.int64)
    # chunk to bound memory on 2**16-state models
    chunk = max(1, 2**22 // neg_e.size)
    for start in range(0, k, chunk):
        stop = min(k, start + chunk)
        g = sample_gumbel(src, (stop - start, neg_e.size))
        idx[start:stop] = np.argmax(neg_e + g, axis=1)
    vi, hi = np.divmod(idx, 2**p.m)
    Vs = V[vi].astype(np.uint8)
    Hs = H[hi].astype(np.uint8)
    if size is None:
        return BinaryState(Vs[0], Hs[0])
    return Vs, Hs


def logz_upper_bound_estimate(p: ModelParams, trials: int, beta: float = 1.0, src: NoiseSource = None):
    """Mean and standard error of max_x {-E(x) + beta * (L_a'v + L_b'h)}.

    L_a, L_b are fresh logistic bias noise each trial (first-order
    perturbation). This is the unit-wise zero-mean Gumbel perturbation, whose
    expected maximum upper-bounds log Z at beta = 1. Single trial: stderr 0.
    """
    if p.n + p.m > MAX_JOINT_UNITS:
        raise CapacityError(
            f"bound probe enumeration needs n + m <= {MAX_JOINT_UNITS}, got {p.n + p.m}"
        )
    if int(trials) != trials or trials < 1:
        raise InvalidArgumentError(f"trials must be a positive integer, got {trials}")
    if src is None:
        raise InvalidArgumentError("a NoiseSource is required")
    beta = float(beta)
    if beta < 0:
        raise InvalidArgumentError("beta must be >= 0")
    trials = int(trials)
    # enumerate the smaller side, maximize the other side in closed form
    visible_side = p.n <= p.m
    X = all_bit_vectors(p.n if visible_side else p.m)
    vals = np.empty(trials)
    chunk = max(1, 2**20 // (X.shape[0] * max(p.n, p.m)))
    for start in range(0, trials, chunk):
        t = min(trials, start + chunk) - start
        la = beta * sample_logistic(src, (t, p.n))
        lb = beta * sample_logistic(src, (t, p.m))
        if visible_side:
            field = X @ p.W  # (2^n, m)
            lin = X @ p.a  # (2^n,)
            # (t, 2^n): enumerated side + noise, plus best response of other side
            own = lin[None, :] + la @ X.T
            other = np.maximum(0.0, p.b[None, None, :] + lb[:, None, :] + field[None, :, :]).sum(-1)
        else:
            field = X @ p.W.T
            lin = X @ p.b
            own = lin[None, :] + lb @ X.T
            other = np.maximum(0.0, p.a[None, None, :] + la[:, None, :] + field[None, :, :]).sum(-1)
        vals[start : start + t] = (own + other).max(axis=1)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr
