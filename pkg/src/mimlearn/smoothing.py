"""Ornstein-Uhlenbeck smoothing and gradient simulation from label queries.

``T_rho y(x) = E_z y(sqrt(1 - rho^2) x + rho z)``. Its gradient is estimated
from N queries around ``x`` by Stein's identity:

    grad T_rho y(x) ~ sqrt(1 - rho^2) / (N rho) * sum_j y(sqrt(1 - rho^2) x + rho z_j) z_j

The z_j come in antithetic pairs (z, -z), which keeps the estimator unbiased
and cancels the even part of y around the query centre.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .gaussian_core import chunks, derive_seed, make_rng, pairwise_sum

# queries materialized at once: chunk_points * inner_samples * d floats
_WORK_FLOATS = 4_000_000


@dataclass(frozen=True)
class SmoothingParams:
    """Noise level ``rho``, inner query count per point, failure probability and label bound."""

    rho: float
    inner_samples: int
    delta: float = 0.05
    label_bound: float | None = None

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ParameterError(f"rho must lie in (0, 1), got {self.rho}")
        if int(self.inner_samples) < 1:
            raise ParameterError("inner_samples must be >= 1")
        if not 0.0 < self.delta <= 1.0:
            raise ParameterError("delta must lie in (0, 1]")
        if self.label_bound is not None and self.label_bound <= 0:
            raise ParameterError("label_bound must be positive")

    @property
    def shrink(self) -> float:
        return math.sqrt(1.0 - self.rho**2)

    def to_dict(self) -> dict:
        return {"rho": self.rho, "inner_samples": int(self.inner_samples), "delta": self.delta,
                "label_bound": self.label_bound}

    @classmethod
    def from_dict(cls, data: dict) -> "SmoothingParams":
        return cls(float(data["rho"]), int(data["inner_samples"]), float(data.get("delta", 0.05)),
                   data.get("label_bound"))

    @classmethod
    def planned(cls, d: int, label_bound: float, rho: float, eps: float, delta: float) -> "SmoothingParams":
        """Parameters whose inner count meets :func:`gradient_sample_count`."""
        n = gradient_sample_count(d, label_bound, rho, eps, delta)
        return cls(rho, n, delta, label_bound)


def gradient_sample_count(d: int, M_inf: float, rho: float, eps: float, delta: float) -> int:
    """Queries per point so that the gradient estimate is eps-accurate w.p. 1 - delta.

    ``N = ceil(8 d M_inf^2 ln(2d/delta) / (rho^2 eps^2))``.
    """
    if d < 1 or M_inf <= 0 or eps <= 0 or not 0 < rho < 1 or not 0 < delta <= 1:
        raise ParameterError("gradient_sample_count needs d >= 1, M_inf > 0, eps > 0, rho in (0,1), delta in (0,1]")
    n = 8.0 * d * M_inf**2 * math.log(2.0 * d / delta) / (rho**2 * eps**2)
    return max(1, math.ceil(n))


def truncate_label(y, M_prime: float):
    """Clip ``y`` symmetrically to [-M_prime, M_prime]."""
    if M_prime <= 0:
        raise ParameterError("M_prime must be positive")
    out = np.clip(y, -M_prime, M_prime)
    return float(out) if np.ndim(out) == 0 else out


def antithetic_normals(rng: np.random.Generator, shape: tuple[int, ...], n: int) -> np.ndarray:
    """n standard normal vectors per leading index, arranged as (z, -z) pairs.

    Returns an array of shape ``shape + (n, d)`` where the last entry of ``shape``
    is d. An odd ``n`` adds one unpaired draw.
    """
    *lead, d = shape
    half = n // 2
    Z = rng.standard_normal((*lead, half + n % 2, d))
    return np.concatenate([Z[..., :half, :], -Z[..., :half, :], Z[..., half:, :]], axis=-2)


def _resolve_rng(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return derive_seed(rng)
    return int(rng)


def _chunk_size(n_points: int, inner: int, d: int) -> int:
    return max(1, min(n_points, _WORK_FLOATS // max(1, inner * d)))


def _inner_blocks(inner: int, d: int) -> list[tuple[int, int]]:
    # even block sizes keep every antithetic pair inside one block
    block = max(2, (_WORK_FLOATS // max(1, d)) // 2 * 2)
    return chunks(inner, block)


def _batched(o, X: np.ndarray, p: SmoothingParams, rng, gradient: bool, workers: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    N = int(p.inner_samples)
    base = _resolve_rng(rng)
    c, s = p.shrink, p.rho
    spans = chunks(n, _chunk_size(n, N, d))
    blocks = _inner_blocks(N, d) if len(spans) == n and N * d > _WORK_FLOATS else [(0, N)]

    def work(idx):
        lo, hi = spans[idx]
        m = hi - lo
        # charge first: a refusal leaves the chunk unevaluated but counted
        o.ledger.charge_queries(m * N)
        acc = []
        for b, (blo, bhi) in enumerate(blocks):
            local = make_rng(base, idx) if len(blocks) == 1 else make_rng(base, idx, b)
            Z = antithetic_normals(local, (m, d), bhi - blo)
            pts = c * X[lo:hi, None, :] + s * Z
            y = o.labels(pts.reshape(-1, d)).reshape(m, bhi - blo)
            if p.label_bound is not None:
                y = np.clip(y, -p.label_bound, p.label_bound)
            acc.append(np.einsum("mn,mnd->md", y, Z) if gradient else y.sum(axis=1))
        total = pairwise_sum(acc)
        return total * (c / (N * s)) if gradient else total / N

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(spans))))
    else:
        parts = []
        for i in range(len(spans)):
            parts.append(work(i))
    return np.concatenate(parts, axis=0)


def smoothed_values(o, X, p: SmoothingParams, rng, workers: int = 1) -> np.ndarray:
    """Monte-Carlo T_rho y at each row of X; consumes len(X) * N queries."""
    return _batched(o, X, p, rng, gradient=False, workers=workers)


def smoothed_gradients(o, X, p: SmoothingParams, rng, workers: int = 1) -> np.ndarray:
    """Stein-identity estimates of grad T_rho y at each row of X, shape (n, d).

    ``rng`` is a Generator or an integer seed. Point chunks draw from streams
    derived from that seed, so results do not depend on ``workers``.
    """
    return _batched(o, X, p, rng, gradient=True, workers=workers)


def smoothed_value(o, x, p: SmoothingParams, rng) -> float:
    """Unbiased estimate of T_rho y(x) from exactly ``p.inner_samples`` queries."""
    return float(smoothed_values(o, np.asarray(x, dtype=float)[None, :], p, rng)[0])


def smoothed_gradient(o, x, p: SmoothingParams, rng) -> np.ndarray:
    """Unbiased estimate of grad T_rho y(x) from exactly ``p.inner_samples`` queries."""
    return smoothed_gradients(o, np.asarray(x, dtype=float)[None, :], p, rng)[0]


def exact_smoothed(f, x, rho: float, rule=None, rotation=None) -> float:
    """T_rho f(x) by tensor quadrature, for test oracles in low dimension."""
    from .gaussian_core import gauss_rule, tensor_expectation

    x = np.asarray(x, dtype=float)
    c = math.sqrt(1.0 - rho**2)
    rule = rule or gauss_rule(80)
    return tensor_expectation(lambda z: f(c * x + rho * z), [rule] * len(x), rotation)


__all__ = [
    "SmoothingParams",
    "antithetic_normals",
    "exact_smoothed",
    "gradient_sample_count",
    "smoothed_gradient",
    "smoothed_gradients",
    "smoothed_value",
    "smoothed_values",
    "truncate_label",
]
