"""Oracle-backed self-checks shared by the CLI and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ModelParams,
    avg_log_likelihood_exact,
    bits_to_index,
    exact_joint_distribution,
    log_partition_exact,
)
from .perturbation import NoiseSource
from .samplers import logz_upper_bound_estimate, perturb_and_map_exact
from .training import exact_gradient

LEMMA1_TV = 0.02
GRADCHECK_RTOL = 1e-6
GRADCHECK_STEP = 1e-4
BOUND_SIGMAS = 3.0


@dataclass
class CheckResult:
    name: str
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def describe(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {self.detail} statistic={self.statistic:.6g} threshold={self.threshold:.6g} {verdict}"


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def lemma1_check(p: ModelParams, draws: int = 200_000, seed: int = 0) -> CheckResult:
    """TV distance between perturb-and-MAP samples and the exact joint distribution."""
    exact = exact_joint_distribution(p)
    V, H = perturb_and_map_exact(p, NoiseSource.derive(seed, "lemma1"), size=draws)
    idx = bits_to_index(V) * 2**p.m + bits_to_index(H)
    emp = np.bincount(idx, minlength=exact.size) / draws
    tv = tv_distance(emp, exact)
    return CheckResult("lemma1", tv, LEMMA1_TV, tv < LEMMA1_TV, f"draws={draws} tv")


def bound_check(p: ModelParams, trials: int = 10_000, seed: int = 0) -> CheckResult:
    """Perturbed-max estimate must not fall below exact log Z by more than 3 stderr."""
    mean, se = logz_upper_bound_estimate(p, trials, 1.0, NoiseSource.derive(seed, "bound"))
    logz = log_partition_exact(p)
    margin = mean - logz
    return CheckResult(
        "bound",
        margin,
        -BOUND_SIGMAS * se,
        margin >= -BOUND_SIGMAS * se,
        f"mean={mean:.6f} stderr={se:.3g} logZ={logz:.6f} mean-logZ",
    )


def finite_difference_gradient(data, p: ModelParams, step: float = GRADCHECK_STEP) -> np.ndarray:
    """Central differences of the exact average log-likelihood, flat (W, a, b) order."""
    x = p.flat()
    out = np.empty_like(x)
    for k in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[k] += step
        lo[k] -= step
        f_hi = avg_log_likelihood_exact(data, ModelParams.from_flat(hi, p.n, p.m))
        f_lo = avg_log_likelihood_exact(data, ModelParams.from_flat(lo, p.n, p.m))
        out[k] = (f_hi - f_lo) / (2 * step)
    return out


def relative_error(a, b) -> np.ndarray:
    """|a - b| / max(|a|, |b|), with 0/0 taken as 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.abs(a), np.abs(b))
    return np.abs(a - b) / np.where(scale > 0, scale, 1.0)


def gradient_check(p: ModelParams, data=None, seed: int = 0) -> CheckResult:
    if data is None:
        src = NoiseSource.derive(seed, "gradcheck-data")
        data = (src.uniform((8, p.n)) < 0.5).astype(np.uint8)
    analytic = exact_gradient(data, p).flat()
    numeric = finite_difference_gradient(data, p)
    err = float(relative_error(analytic, numeric).max())
    return CheckResult("gradcheck", err, GRADCHECK_RTOL, err < GRADCHECK_RTOL, "max relative error")
