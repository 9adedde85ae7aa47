"""Binary RBM parameters, energy, conditionals and exact-enumeration oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .errors import CapacityError, InvalidArgumentError

MAX_ENUM_UNITS = 20
MAX_VISIBLE_DIST = 16


def softplus(x):
    """log(1 + exp(x)), overflow-safe."""
    return np.logaddexp(0.0, x)


def sigmoid(x):
    return expit(x)


@dataclass(frozen=True)
class ModelParams:
    """RBM parameters: W (n x m), visible biases a (n,), hidden biases b (m,)."""

    W: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if W.ndim != 2:
            raise InvalidArgumentError(f"W must be 2-D, got shape {W.shape}")
        n, m = W.shape
        if n < 1 or m < 1:
            raise InvalidArgumentError("n and m must be positive")
        if a.shape != (n,) or b.shape != (m,):
            raise InvalidArgumentError(
                f"bias shapes {a.shape}, {b.shape} do not match W {W.shape}"
            )
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("parameters must be finite")
        for arr in (W, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.W.shape[1]

    @classmethod
    def zeros(cls, n: int, m: int) -> "ModelParams":
        return cls(np.zeros((n, m)), np.zeros(n), np.zeros(m))

    @classmethod
    def random(cls, n: int, m: int, rng: np.random.Generator, scale: float = 1.0) -> "ModelParams":
        return cls(
            scale * rng.standard_normal((n, m)),
            scale * rng.standard_normal(n),
            scale * rng.standard_normal(m),
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.a, self.b])

    @classmethod
    def from_flat(cls, x, n: int, m: int) -> "ModelParams":
        x = np.asarray(x, dtype=np.float64)
        return cls(x[: n * m].reshape(n, m), x[n * m : n * m + n], x[n * m + n :])

    def replace(self, W=None, a=None, b=None) -> "ModelParams":
        return ModelParams(
            self.W if W is None else W,
            self.a if a is None else a,
            self.b if b is None else b,
        )

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            np.array_equal(self.W, other.W)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )

    __hash__ = None


@dataclass(frozen=True)
class BinaryState:
    """A joint configuration of visible bits v and hidden bits h."""

    v: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        v = _as_bits(self.v, "v")
        h = _as_bits(self.h, "h")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "h", h)

    def __eq__(self, other):
        if not isinstance(other, BinaryState):
            return NotImplemented
        return np.array_equal(self.v, other.v) and np.array_equal(self.h, other.h)

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    """A list of length-n visible bit vectors, stored as an (N, n) uint8 array."""

    examples: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.examples)
        if x.ndim != 2:
            raise InvalidArgumentError(f"examples must be 2-D, got shape {x.shape}")
        if x.shape[0] == 0:
            raise InvalidArgumentError("dataset is empty")
        if x.shape[1] == 0:
            raise InvalidArgumentError("examples must have at least one bit")
        if not np.all((x == 0) | (x == 1)):
            raise InvalidArgumentError("examples must be binary")
        x = x.astype(np.uint8)
        x.setflags(write=False)
        object.__setattr__(self, "examples", x)

    @property
    def n(self) -> int:
        return self.examples.shape[1]

    def __len__(self):
        return self.examples.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.examples, other.examples)

    __hash__ = None


def _as_bits(x, name):
    x = np.asarray(x)
    if x.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a 1-D bit vector")
    if not np.all((x == 0) | (x == 1)):
        raise InvalidArgumentError(f"{name} must contain only 0/1")
    return x.astype(np.uint8)


def _check_last_dim(x, size, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != size:
        raise InvalidArgumentError(f"{name} has shape {x.shape}, expected trailing dimension {size}")
    return x


def energy(s: BinaryState, p: ModelParams) -> float:
    """E(v, h) = -(v'Wh + a'v + b'h)."""
    if s.v.shape != (p.n,) or s.h.shape != (p.m,):
        raise InvalidArgumentError(
            f"state shapes ({s.v.shape}, {s.h.shape}) do not match model ({p.n}, {p.m})"
        )
    v = s.v.astype(np.float64)
    h = s.h.astype(np.float64)
    return float(-(v @ p.W @ h + p.a @ v + p.b @ h))


def energies(v, h, p: ModelParams) -> np.ndarray:
    """Batched energy for arrays v (..., n), h (..., m)."""
    v = _check_last_dim(v, p.n, "v")
    h = _check_last_dim(h, p.m, "h")
    return -(np.einsum("...i,ij,...j->...", v, p.W, h) + v @ p.a + h @ p.b)


def hidden_conditional(v, p: ModelParams) -> np.ndarray:
    """p(h_j = 1 | v) for every j; accepts a single vector or a batch."""
    v = _check_last_dim(v, p.n, "v")
    return sigmoid(p.b + v @ p.W)


def visible_conditional(h, p: ModelParams) -> np.ndarray:
    """p(v_i = 1 | h) for every i; accepts a single vector or a batch."""
    h = _check_last_dim(h, p.m, "h")
    return sigmoid(p.a + h @ p.W.T)


def unnorm_log_marginal(v, p: ModelParams):
    """log sum_h exp(-E(v, h)) = a'v + sum_j softplus(b_j + (W'v)_j).

    Returns a float for a single vector, an array for a batch.
    """
    v = _check_last_dim(v, p.n, "v")
    out = v @ p.a + softplus(p.b + v @ p.W).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _unnorm_log_marginal_hidden(h, p: ModelParams):
    h = _check_last_dim(h, p.m, "h")
    return h @ p.b + softplus(p.a + h @ p.W.T).sum(axis=-1)


def all_bit_vectors(k: int) -> np.ndarray:
    """All 2**k bit vectors of length k, first bit most significant."""
    codes = np.arange(2**k, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.float64)


def log_partition_exact(p: ModelParams) -> float:
    """Exact log Z, enumerating the smaller layer."""
    if min(p.n, p.m) > MAX_ENUM_UNITS:
        raise CapacityError(
            f"exact log Z needs min(n, m) <= {MAX_ENUM_UNITS}, got ({p.n}, {p.m})"
        )
    if p.n <= p.m:
        return float(logsumexp(unnorm_log_marginal(all_bit_vectors(p.n), p)))
    return float(logsumexp(_unnorm_log_marginal_hidden(all_bit_vectors(p.m), p)))


def avg_log_likelihood_exact(d: Dataset | np.ndarray, p: ModelParams) -> float:
    """Mean over examples of log p(v)."""
    x = d.examples if isinstance(d, Dataset) else np.asarray(d)
    if x.ndim != 2 or x.shape[1] != p.n:
        raise InvalidArgumentError(f"data shape {x.shape} does not match n={p.n}")
    logz = log_partition_exact(p)
    return float(np.mean(unnorm_log_marginal(x.astype(np.float64), p)) - logz)


def exact_visible_distribution(p: ModelParams) -> np.ndarray:
    """p(v) for all 2**n visible vectors, indexed by the binary code of v (v_0 most significant)."""
    if p.n > MAX_VISIBLE_DIST:
        raise CapacityError(
            f"visible distribution needs n <= {MAX_VISIBLE_DIST}, got n={p.n}"
        )
    logz = log_partition_exact(p)
    return np.exp(unnorm_log_marginal(all_bit_vectors(p.n), p) - logz)


def exact_joint_distribution(p: ModelParams) -> np.ndarray:
    """p(v, h) over all 2**(n+m) joint states; index = code(v) * 2**m + code(h)."""
    if p.n + p.m > MAX_VISIBLE_DIST:
        raise CapacityError(f"joint distribution needs n + m <= {MAX_VISIBLE_DIST}")
    V = all_bit_vectors(p.n)
    H = all_bit_vectors(p.m)
    neg_e = V @ p.W @ H.T + (V @ p.a)[:, None] + (H @ p.b)[None, :]
    neg_e = neg_e.ravel()
    return np.exp(neg_e - logsumexp(neg_e))


def bits_to_index(x) -> np.ndarray:
    """Inverse of all_bit_vectors row order for a batch of bit vectors."""
    x = np.asarray(x, dtype=np.int64)
    k = x.shape[-1]
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return x @ weights


def model_expectations_exact(p: ModelParams):
    """Exact <v h'>, <v>, <h> under the model, by enumerating visible states."""
    probs = exact_visible_distribution(p)
    V = all_bit_vectors(p.n)
    sig = hidden_conditional(V, p)
    dW = (V * probs[:, None]).T @ sig
    da = probs @ V
    db = probs @ sig
    return dW, da, db
