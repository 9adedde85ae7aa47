"""Gradient assembly, parameter updates and the PD / CD / PCD training loop."""
from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .descend import descend_batch
from .errors import InvalidArgumentError
from .matching import influence_weights, max_weight_matching
from .model import (
    Dataset,
    ModelParams,
    avg_log_likelihood_exact,
    hidden_conditional,
    visible_conditional,
)
from .perturbation import NoiseSource, Order, perturb
from .samplers import ChainState, cd_arrays, pcd_update

log = logging.getLogger(__name__)


class Algorithm(enum.Enum):
    PD = "pd"
    CD = "cd"
    PCD = "pcd"


class NoiseSharing(enum.Enum):
    PER_PARTICLE = "per-particle"
    PER_MINIBATCH = "per-minibatch"


@dataclass(frozen=True)
class TrainConfig:
    algorithm: Algorithm = Algorithm.PD
    hidden: int = 8
    K: int = 10
    beta: float = 1.0
    perturb_order: Order = Order.FIRST
    noise_sharing: NoiseSharing = NoiseSharing.PER_PARTICLE
    matching_cadence: int = 1
    learning_rate: float = 0.05
    epochs: int = 10
    batch_size: int = 16
    seed: int = 0
    weight_decay: float = 0.0
    momentum: float = 0.0
    particle_count: int | None = None
    # use p(h | v_final) instead of the descended h in the negative phase
    mean_field_hidden: bool = False
    # exact log-likelihood is logged only while min(n, m) <= this
    loglik_max_units: int = 16
    threads: int = 1

    def __post_init__(self):
        coerce = {
            "algorithm": Algorithm,
            "perturb_order": Order,
            "noise_sharing": NoiseSharing,
        }
        for name, kind in coerce.items():
            try:
                object.__setattr__(self, name, kind(getattr(self, name)))
            except ValueError as exc:
                raise InvalidArgumentError(f"{name}: {exc}") from None
        self.validate()

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise InvalidArgumentError(msg)

        need(_is_int(self.hidden) and self.hidden >= 1, "hidden must be a positive integer")
        need(_is_int(self.K) and self.K >= 1, "K must be a positive integer")
        need(np.isfinite(self.beta) and self.beta >= 0, "beta must be >= 0")
        need(_is_int(self.matching_cadence) and self.matching_cadence >= 1, "matching_cadence must be >= 1")
        need(np.isfinite(self.learning_rate) and self.learning_rate > 0, "learning_rate must be > 0")
        need(_is_int(self.epochs) and self.epochs >= 0, "epochs must be a nonnegative integer")
        need(_is_int(self.batch_size) and self.batch_size >= 1, "batch_size must be >= 1")
        need(_is_int(self.seed), "seed must be an integer")
        need(self.weight_decay >= 0, "weight_decay must be >= 0")
        need(0 <= self.momentum < 1, "momentum must be in [0, 1)")
        need(
            self.particle_count is None or (_is_int(self.particle_count) and self.particle_count >= 1),
            "particle_count must be a positive integer",
        )
        need(_is_int(self.threads) and self.threads >= 1, "threads must be >= 1")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def with_overrides(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


def _is_int(x):
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


@dataclass
class Gradient:
    dW: np.ndarray
    da: np.ndarray
    db: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt((self.dW**2).sum() + (self.da**2).sum() + (self.db**2).sum()))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.dW.ravel(), self.da, self.db])


@dataclass
class MetricsRecord:
    epoch: int
    step: int
    exact_avg_loglik: float | None
    recon_error: float
    grad_norm: float
    mean_hidden_activation: float
    wall_ms: float


def positive_phase(batch, p: ModelParams) -> Gradient:
    """Data statistics with hidden units averaged out exactly."""
    V = np.asarray(batch, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] == 0:
        raise InvalidArgumentError("positive phase needs a nonempty batch")
    sig = hidden_conditional(V, p)
    N = V.shape[0]
    return Gradient(V.T @ sig / N, V.mean(axis=0), sig.mean(axis=0))


def negative_phase(particles) -> Gradient:
    """Fantasy-particle statistics. Accepts a list of BinaryState or a (V, H) pair."""
    if isinstance(particles, tuple) and len(particles) == 2 and isinstance(particles[0], np.ndarray):
        V, H = particles
    else:
        particles = list(particles)
        if not particles:
            raise InvalidArgumentError("negative phase needs at least one particle")
        V = np.stack([s.v for s in particles])
        H = np.stack([s.h for s in particles])
    V = np.asarray(V, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    if V.shape[0] == 0:
        raise InvalidArgumentError("negative phase needs at least one particle")
    N = V.shape[0]
    return Gradient(V.T @ H / N, V.mean(axis=0), H.mean(axis=0))


def assemble_gradient(pos: Gradient, neg: Gradient) -> Gradient:
    if pos.dW.shape != neg.dW.shape or pos.da.shape != neg.da.shape or pos.db.shape != neg.db.shape:
        raise InvalidArgumentError("positive and negative phase shapes differ")
    return Gradient(pos.dW - neg.dW, pos.da - neg.da, pos.db - neg.db)


def exact_gradient(data, p: ModelParams) -> Gradient:
    """Gradient with the negative phase taken from the enumerated model."""
    from .model import model_expectations_exact

    dW, da, db = model_expectations_exact(p)
    return assemble_gradient(positive_phase(data, p), Gradient(dW, da, db))


@dataclass
class MomentumState:
    W: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @classmethod
    def zeros_like(cls, p: ModelParams):
        return cls(np.zeros_like(p.W), np.zeros_like(p.a), np.zeros_like(p.b))


def sgd_step(p: ModelParams, g: Gradient, cfg: TrainConfig, mom: MomentumState | None = None):
    """Gradient ascent step with optional momentum; weight decay on W only.

    Returns (new params, new momentum state).
    """
    if g.dW.shape != p.W.shape or g.da.shape != p.a.shape or g.db.shape != p.b.shape:
        raise InvalidArgumentError("gradient shape does not match the model")
    lr = cfg.learning_rate
    if mom is None:
        mom = MomentumState.zeros_like(p)
    stepW = lr * (g.dW - cfg.weight_decay * p.W)
    step_a = lr * g.da
    step_b = lr * g.db
    mu = cfg.momentum
    if mu > 0:
        stepW = mu * mom.W + stepW
        step_a = mu * mom.a + step_a
        step_b = mu * mom.b + step_b
    return ModelParams(p.W + stepW, p.a + step_a, p.b + step_b), MomentumState(stepW, step_a, step_b)


class _MatchingCache:
    def __init__(self, cadence):
        self.cadence = cadence
        self.mt = None

    def get(self, p, step):
        if self.mt is None or step % self.cadence == 0:
            self.mt = max_weight_matching(influence_weights(p))
        return self.mt


def negative_particles_pd(batch, p: ModelParams, cfg: TrainConfig, seed_step: int = 0, matching=None):
    """Perturb-and-descend fantasy particles, one per batch row.

    Each particle's perturbation comes from its own stream keyed by
    (seed, step, particle); with PER_MINIBATCH every row shares particle 0's.
    Returns (V, H) arrays.
    """
    V0 = np.asarray(batch)
    if V0.ndim != 2 or V0.shape[0] == 0:
        raise InvalidArgumentError("PD needs a nonempty batch")
    P = V0.shape[0]
    second = cfg.perturb_order is Order.SECOND
    if second and matching is None:
        matching = max_weight_matching(influence_weights(p))
    shared = cfg.noise_sharing is NoiseSharing.PER_MINIBATCH
    draws = 1 if shared else P
    pps = [
        perturb(p, cfg.beta, NoiseSource.derive(cfg.seed, "pd", seed_step, k), cfg.perturb_order, matching)
        for k in range(draws)
    ]
    if shared:
        pps = pps * P
    A = np.stack([pp.a for pp in pps])
    B = np.stack([pp.b for pp in pps])
    W = np.stack([pp.W for pp in pps]) if second else p.W

    def run(sl):
        Wk = W if W.ndim == 2 else W[sl]
        return descend_batch(V0[sl], Wk, A[sl], B[sl], cfg.K)

    if cfg.threads > 1 and P > 1:
        bounds = np.linspace(0, P, min(cfg.threads, P) + 1).astype(int)
        slices = [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            parts = list(ex.map(run, slices))
        V = np.concatenate([r[0] for r in parts])
        H = np.concatenate([r[1] for r in parts])
    else:
        V, H, _, _ = run(slice(0, P))
    return V, H


def reconstruction_error(data, p: ModelParams) -> float:
    """Mean per-bit mismatch of v -> p(h|v) -> [p(v|h) > 0.5]."""
    V = np.asarray(data, dtype=np.float64)
    rec = visible_conditional(hidden_conditional(V, p), p) > 0.5
    return float(np.mean(rec != (V > 0.5)))


def init_params(n: int, m: int, seed: int) -> ModelParams:
    """W ~ N(0, 0.01^2), zero biases."""
    src = NoiseSource.derive(seed, "init")
    return ModelParams(0.01 * src.gauss((n, m)), np.zeros(n), np.zeros(m))


def train(d: Dataset, cfg: TrainConfig, init: ModelParams | None = None, callback=None):
    """Train an RBM on ``d``; returns (params, list of MetricsRecord).

    The three algorithms share the positive phase and the update; only the
    negative particles differ. Deterministic given ``cfg.seed``.
    """
    cfg.validate()
    if not isinstance(d, Dataset):
        d = Dataset(d)
    data = d.examples
    N, n = data.shape
    m = cfg.hidden
    p = init if init is not None else init_params(n, m, cfg.seed)
    if (p.n, p.m) != (n, m):
        raise InvalidArgumentError(f"initial model ({p.n}, {p.m}) does not match ({n}, {m})")
    track_ll = min(n, m) <= cfg.loglik_max_units
    mom = MomentumState.zeros_like(p)
    cache = _MatchingCache(cfg.matching_cadence)
    chains = None
    if cfg.algorithm is Algorithm.PCD:
        count = cfg.particle_count or min(cfg.batch_size, N)
        start = data[np.arange(count) % N]
        chains = ChainState.from_data(start, p, NoiseSource.derive(cfg.seed, "pcd-init"))

    metrics = []
    step = 0
    for epoch in range(cfg.epochs):
        order = NoiseSource.derive(cfg.seed, "shuffle", epoch).permutation(N)
        for lo in range(0, N, cfg.batch_size):
            t0 = time.perf_counter()
            batch = data[order[lo : lo + cfg.batch_size]]
            pos = positive_phase(batch, p)
            if cfg.algorithm is Algorithm.PD:
                mt = cache.get(p, step) if cfg.perturb_order is Order.SECOND else None
                V, H = negative_particles_pd(batch, p, cfg, step, mt)
            elif cfg.algorithm is Algorithm.CD:
                V, H = cd_arrays(batch, p, cfg.K, NoiseSource.derive(cfg.seed, "cd", step))
            else:
                chains = pcd_update(chains, p, cfg.K, NoiseSource.derive(cfg.seed, "pcd", step))
                V, H = chains.V, chains.H
            if cfg.mean_field_hidden:
                H = hidden_conditional(V, p)
            g = assemble_gradient(pos, negative_phase((V, H)))
            p, mom = sgd_step(p, g, cfg, mom)
            wall = (time.perf_counter() - t0) * 1000.0
            rec = MetricsRecord(
                epoch=epoch,
                step=step,
                exact_avg_loglik=avg_log_likelihood_exact(d, p) if track_ll else None,
                recon_error=reconstruction_error(batch, p),
                grad_norm=g.norm(),
                mean_hidden_activation=float(hidden_conditional(batch, p).mean()),
                wall_ms=wall,
            )
            metrics.append(rec)
            if callback is not None:
                callback(rec)
            step += 1
        log.debug("epoch %d done, step %d", epoch, step)
    return p, metrics
