"""Gumbel / logistic noise and first- and second-order perturbed RBMs.

Noise is consumed from a :class:`NoiseSource` in a fixed order so a given
(seed, stream id) always yields the same perturbation:

1. uncovered visible units, ascending, two Gumbels each ``(eps(x=1), eps(x=0))``;
2. uncovered hidden units, ascending, likewise;
3. matched pairs in ascending ``(i, j)``, four Gumbels each
   ``(eps(0,0), eps(0,1), eps(1,0), eps(1,1))`` with ``eps(y, z)`` the noise on
   the assignment ``v_i = y, h_j = z``.

With an empty matching steps 1-2 cover every unit, so second order reduces to
first order draw for draw.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .model import ModelParams

_MASK64 = (1 << 64) - 1


class NoiseSource:
    """Reproducible stream of uniforms on the open interval (0, 1).

    Single consumer: draws advance internal state.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed, self.stream_id]))
        )

    @classmethod
    def derive(cls, seed: int, purpose: str, *index: int) -> "NoiseSource":
        """Stream keyed by (seed, purpose, index...), independent of call order."""
        key = purpose + ":" + ",".join(str(int(i)) for i in index)
        digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
        return cls(seed, int.from_bytes(digest, "little"))

    def uniform(self, size=None):
        u = self._rng.random(size)
        # random() is on [0, 1); exact zeros are redrawn in place
        if size is None:
            while u == 0.0:
                u = self._rng.random()
            return u
        zero = u == 0.0
        while np.any(zero):
            u[zero] = self._rng.random(int(zero.sum()))
            zero = u == 0.0
        return u

    def gauss(self, size=None):
        return self._rng.standard_normal(size)

    def integers(self, high, size=None):
        return self._rng.integers(0, high, size)

    def permutation(self, k):
        return self._rng.permutation(k)


def gumbel_from_uniform(u):
    """Standard Gumbel quantile: -log(-log(u))."""
    return -np.log(-np.log(u))


def sample_gumbel(src: NoiseSource, size=None):
    """Standard Gumbel(0, 1) variates."""
    g = gumbel_from_uniform(src.uniform(size))
    return float(g) if size is None else g


def sample_logistic(src: NoiseSource, size=None):
    """Standard logistic variates, realized as the difference of two Gumbels.

    For each output the first Gumbel drawn is eps(1), the second eps(0).
    """
    shape = (2,) if size is None else tuple(np.atleast_1d(size)) + (2,)
    g = sample_gumbel(src, shape)
    out = g[..., 0] - g[..., 1]
    return float(out) if size is None else out


class Order(enum.Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class Matching:
    """Set of (visible, hidden) index pairs with no repeated row or column."""

    pairs: tuple = ()

    def __post_init__(self):
        pairs = tuple(sorted((int(i), int(j)) for i, j in self.pairs))
        object.__setattr__(self, "pairs", pairs)

    def validate(self, n: int, m: int) -> None:
        rows = [i for i, _ in self.pairs]
        cols = [j for _, j in self.pairs]
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise InvalidArgumentError(f"matching repeats a row or column: {self.pairs}")
        for i, j in self.pairs:
            if not (0 <= i < n and 0 <= j < m):
                raise InvalidArgumentError(f"pair ({i}, {j}) out of range for ({n}, {m})")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass(frozen=True, eq=False)
class PerturbedParams:
    """Perturbed RBM parameters plus the noise scale and order that produced them."""

    W: np.ndarray
    a: np.ndarray
    b: np.ndarray
    beta: float
    order: Order
    matching: Matching | None = field(default=None)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.W.shape[1]

    def as_model(self) -> ModelParams:
        return ModelParams(self.W, self.a, self.b)

    def __eq__(self, other):
        if not isinstance(other, PerturbedParams):
            return NotImplemented
        return (
            np.array_equal(self.W, other.W)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
            and self.beta == other.beta
            and self.order == other.order
            and self.matching == other.matching
        )

    __hash__ = None


def _check_beta(beta):
    beta = float(beta)
    if not np.isfinite(beta) or beta < 0:
        raise InvalidArgumentError(f"beta must be finite and >= 0, got {beta}")
    return beta


def perturb_first_order(p: ModelParams, beta: float, src: NoiseSource) -> PerturbedParams:
    """Add beta-scaled logistic noise to every bias; W is left unchanged."""
    beta = _check_beta(beta)
    la = sample_logistic(src, p.n)
    lb = sample_logistic(src, p.m)
    return PerturbedParams(
        W=p.W.copy(),
        a=p.a + beta * la,
        b=p.b + beta * lb,
        beta=beta,
        order=Order.FIRST,
    )


def perturb_second_order(
    p: ModelParams, mt: Matching, beta: float, src: NoiseSource
) -> PerturbedParams:
    """Gumbel-perturb the 2x2 factors of matched pairs, logistic on the rest.

    For a matched pair (i, j) the factor table y*W_ij*z + a_i*y + b_j*z gets
    beta * eps(y, z) added (up to the constant beta * eps(0, 0)), which is
    expressed through W_ij, a_i and b_j.
    """
    beta = _check_beta(beta)
    mt.validate(p.n, p.m)
    rows = np.array([i for i, _ in mt.pairs], dtype=np.int64)
    cols = np.array([j for _, j in mt.pairs], dtype=np.int64)
    free_v = np.setdiff1d(np.arange(p.n), rows)
    free_h = np.setdiff1d(np.arange(p.m), cols)

    W = p.W.copy()
    a = p.a.copy()
    b = p.b.copy()
    a[free_v] += beta * sample_logistic(src, len(free_v))
    b[free_h] += beta * sample_logistic(src, len(free_h))
    if len(mt):
        g = sample_gumbel(src, (len(mt), 4))
        e00, e01, e10, e11 = g[:, 0], g[:, 1], g[:, 2], g[:, 3]
        W[rows, cols] += beta * (e11 - e01 - e10 + e00)
        a[rows] += beta * (e10 - e00)
        b[cols] += beta * (e01 - e00)
    return PerturbedParams(W=W, a=a, b=b, beta=beta, order=Order.SECOND, matching=mt)


def perturb(p: ModelParams, beta: float, src: NoiseSource, order=Order.FIRST, mt=None):
    order = Order(order)
    if order is Order.FIRST:
        return perturb_first_order(p, beta, src)
    if mt is None:
        raise InvalidArgumentError("second-order perturbation needs a matching")
    return perturb_second_order(p, mt, beta, src)
