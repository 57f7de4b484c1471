"""Influence-matrix estimation and eigenvalue-threshold subspace selection.

The smoothed influence matrix ``E[grad T_rho y (grad T_rho y)^T]`` is
estimated from query-simulated gradients. By default each outer point gets two
independent gradient estimates g1 and g2, and the estimator averages
``(g1 g2^T + g2 g1^T) / 2``. That is unbiased because the two estimates share
no noise. Squaring a single estimate instead inflates the diagonal by the
estimator's noise covariance; ``paired=False`` restores that form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ParameterError
from .gaussian_core import Subspace, chunks, derive_seed, make_rng, pairwise_sum
from .smoothing import SmoothingParams, smoothed_gradients

log = logging.getLogger(__name__)

_NEG_EIG_WARN = -1e-8
_OUTER_CHUNK = 256


@dataclass
class InfluenceEstimate:
    """Symmetric d x d estimate together with how it was produced."""

    matrix: np.ndarray
    outer_samples: int
    params: SmoothingParams | None = None
    seed: int | None = None
    paired: bool = True
    points: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ParameterError("influence matrix must be square")
        self.matrix = 0.5 * (M + M.T)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "outer_samples": int(self.outer_samples),
            "params": None if self.params is None else self.params.to_dict(),
            "seed": self.seed,
            "paired": self.paired,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InfluenceEstimate":
        params = data.get("params")
        return cls(
            np.asarray(data["matrix"], dtype=float),
            int(data["outer_samples"]),
            None if params is None else SmoothingParams.from_dict(params),
            data.get("seed"),
            bool(data.get("paired", True)),
        )


@dataclass
class SubspaceSelection:
    """Retained subspace (eigenvalues >= threshold) and the eigenvalues that were dropped."""

    subspace: Subspace
    threshold: float
    discarded_eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.subspace.dim

    def to_dict(self) -> dict:
        return {
            "subspace": self.subspace.to_dict(),
            "threshold": self.threshold,
            "discarded_eigenvalues": np.asarray(self.discarded_eigenvalues).tolist(),
        }


def estimate_influence(o, p: SmoothingParams, outer_samples: int, rng, paired: bool = True,
                       workers: int = 1, keep_points: bool = False) -> InfluenceEstimate:
    """Estimate the smoothed influence matrix of the oracle's label function.

    Draws ``outer_samples`` Gaussian points (charged as samples) and spends
    ``outer_samples * inner_samples`` queries per gradient estimate, so twice
    that when ``paired``.
    """
    if outer_samples < 1:
        raise ParameterError("outer_samples must be >= 1")
    seed = derive_seed(rng) if isinstance(rng, np.random.Generator) else int(rng)
    d = o.ambient_dim
    o.ledger.charge_samples(outer_samples)
    X = make_rng(seed, 0).standard_normal((outer_samples, d))
    parts = []
    for idx, (lo, hi) in enumerate(chunks(outer_samples, _OUTER_CHUNK)):
        g1 = smoothed_gradients(o, X[lo:hi], p, make_rng(seed, 1, idx), workers)
        if paired:
            g2 = smoothed_gradients(o, X[lo:hi], p, make_rng(seed, 2, idx), workers)
            cross = g1.T @ g2
            parts.append(0.5 * (cross + cross.T))
        else:
            parts.append(g1.T @ g1)
    M = pairwise_sum(parts) / outer_samples
    return InfluenceEstimate(M, outer_samples, p, seed, paired, X if keep_points else None)


def _canonical_eig(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails on symmetric input
        cond = np.linalg.cond(M) if np.all(np.isfinite(M)) else math.inf
        raise NumericError(f"eigendecomposition failed (condition number {cond:.3e})") from exc
    # eigenvalue descending, then first nonzero component positive, then lexicographic
    for j in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, j]) > 1e-12)
        if nz.size and V[nz[0], j] < 0:
            V[:, j] = -V[:, j]
    order = sorted(range(len(w)), key=lambda j: (-w[j], tuple(V[:, j])))
    return w[order], V[:, order]


def top_subspace(est: InfluenceEstimate | np.ndarray, eta: float) -> SubspaceSelection:
    """Span of the eigenvectors whose eigenvalue is at least ``eta``."""
    if eta <= 0:
        raise ParameterError("eta must be positive")
    M = est.matrix if isinstance(est, InfluenceEstimate) else np.asarray(est, dtype=float)
    M = 0.5 * (M + M.T)
    if not np.all(np.isfinite(M)):
        raise NumericError("influence matrix has non-finite entries")
    w, V = _canonical_eig(M)
    if w.size and w[-1] < _NEG_EIG_WARN:
        log.warning("influence estimate has eigenvalue %.3e < 0 (estimation noise)", w[-1])
    keep = int(np.sum(w >= eta))
    bound = dimension_bound(max(float(np.trace(M)), 0.0), eta)
    if keep > bound:
        # only possible when negative eigenvalues pull the trace down; the trace bound wins
        log.warning("%d eigenvalues reach eta but the trace allows %d; keeping the top %d", keep, bound, bound)
        keep = bound
    sub = Subspace(V[:, :keep], eigenvalues=w[:keep])
    return SubspaceSelection(sub, float(eta), w[keep:])


def dimension_bound(trace: float, eta: float) -> int:
    """floor(trace / eta): no more eigenvalues than this can reach ``eta``."""
    if eta <= 0 or trace < 0:
        raise ParameterError("dimension_bound needs eta > 0 and trace >= 0")
    return int(math.floor(trace / eta + 1e-12))


def select_threshold(mode: str, eps: float, k: int, M: float = 1.0) -> float:
    """Eigenvalue threshold: eps^2/(32 k M) on the real path, eps^2/(32 k) on the Boolean path."""
    if not 0 < eps < 1 or k < 1 or M <= 0:
        raise ParameterError("select_threshold needs eps in (0,1), k >= 1, M > 0")
    if mode in ("real", "real_l22"):
        return eps**2 / (32.0 * k * M)
    if mode in ("boolean", "boolean_l1"):
        return eps**2 / (32.0 * k)
    raise ParameterError(f"unknown mode {mode!r}")


__all__ = [
    "InfluenceEstimate",
    "SubspaceSelection",
    "dimension_bound",
    "estimate_influence",
    "select_threshold",
    "top_subspace",
]
