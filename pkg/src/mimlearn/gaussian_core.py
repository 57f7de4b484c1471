"""Numerics under the standard Gaussian measure.

Normalized (probabilists') Hermite polynomials, multi-index bookkeeping,
quadrature rules against N(0, 1), orthonormal subspaces and random streams.
Everything here is a pure function of its inputs; randomness is drawn only
from explicitly passed ``numpy.random.Generator`` objects.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, NumericError, ParameterError, SizeError

MultiIndex = tuple[int, ...]

_INT64_MAX = 2**63 - 1
_ORTHO_TOL = 1e-10


# --------------------------------------------------------------------------
# Hermite polynomials
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HermiteTable:
    """Recurrence coefficients for H_0..H_max_degree.

    H_{n+1}(x) = a[n] * x * H_n(x) - b[n] * H_{n-1}(x) with
    a[n] = 1/sqrt(n+1) and b[n] = sqrt(n/(n+1)). This keeps every H_n at unit
    Gaussian norm, so there is no factorial rescaling that could overflow.
    """

    max_degree: int
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)

    def values(self, x, degree: int | None = None) -> np.ndarray:
        """All of H_0(x)..H_degree(x), stacked on a new trailing axis."""
        degree = self.max_degree if degree is None else degree
        if degree > self.max_degree:
            raise ParameterError(f"degree {degree} exceeds table max {self.max_degree}")
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (degree + 1,))
        out[..., 0] = 1.0
        if degree >= 1:
            out[..., 1] = x
        for n in range(1, degree):
            out[..., n + 1] = self.a[n] * x * out[..., n] - self.b[n] * out[..., n - 1]
        return out


@functools.lru_cache(maxsize=32)
def hermite_table(max_degree: int) -> HermiteTable:
    if max_degree < 0:
        raise ParameterError("max_degree must be >= 0")
    n = np.arange(max(max_degree, 1), dtype=float)
    a = 1.0 / np.sqrt(n + 1.0)
    b = np.sqrt(n / (n + 1.0))
    a.setflags(write=False)
    b.setflags(write=False)
    return HermiteTable(max_degree, a, b)


def hermite_eval(table: HermiteTable, degree: int, x):
    """Normalized Hermite polynomial H_degree at ``x`` (scalar or array)."""
    if degree < 0 or degree > table.max_degree:
        raise ParameterError(f"degree {degree} outside table range 0..{table.max_degree}")
    vals = table.values(x, degree)[..., degree]
    return float(vals) if np.ndim(vals) == 0 else vals


def hermite_multi_eval(table: HermiteTable, index: Sequence[int], x) -> float:
    """H_I(x) = prod_i H_{I_i}(x_i)."""
    x = np.asarray(x, dtype=float)
    if len(index) != x.shape[-1]:
        raise DimensionMismatchError(f"index has {len(index)} entries but x has {x.shape[-1]}")
    if len(index) == 0:
        return 1.0
    H = table.values(x, max(index))
    out = np.prod(H[..., np.arange(len(index)), list(index)], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def multi_index_count(dim: int, max_degree: int) -> int:
    return math.comb(dim + max_degree, dim)


def enumerate_multi_indices(dim: int, max_degree: int) -> list[MultiIndex]:
    """All multi-indices of total degree <= max_degree in graded-lex order.

    Within a degree, tuples are ascending lexicographically, so for dim=2,
    degree 1 gives (0, 1) before (1, 0).
    """
    if dim < 0 or max_degree < 0:
        raise ParameterError("dim and max_degree must be non-negative")
    count = multi_index_count(dim, max_degree)
    if count > _INT64_MAX:
        raise SizeError(f"{count} multi-indices overflow a 64-bit count")
    if dim == 0:
        return [()]
    out: list[MultiIndex] = []
    for deg in range(max_degree + 1):
        out.extend(_compositions(deg, dim))
    return out


def _compositions(total: int, parts: int) -> Iterable[MultiIndex]:
    # ascending lex: first entry runs 0..total
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def hermite_features(Z: np.ndarray, indices: Sequence[MultiIndex]) -> np.ndarray:
    """Design matrix Phi[n, j] = H_{indices[j]}(Z[n]) for Z of shape (n, r)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    n, r = Z.shape
    idx = np.asarray(indices, dtype=np.intp).reshape(len(indices), r)
    if r == 0:
        return np.ones((n, len(indices)))
    max_deg = int(idx.max()) if idx.size else 0
    H = hermite_table(max_deg).values(Z, max_deg)  # (n, r, m+1)
    Phi = np.ones((n, len(indices)))
    for coord in range(r):
        Phi *= H[:, coord, idx[:, coord]]
    return Phi


# --------------------------------------------------------------------------
# Subspaces
# --------------------------------------------------------------------------


def _canonical_signs(basis: np.ndarray) -> np.ndarray:
    # first component with |v_i| > tol is made positive
    out = basis.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


@dataclass
class Subspace:
    """Orthonormal basis (d x r) of an r-dimensional subspace of R^d."""

    basis: np.ndarray
    eigenvalues: np.ndarray | None = None

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2:
            raise DimensionMismatchError("basis must be a d x r matrix")
        d, r = B.shape
        if r > d:
            raise DimensionMismatchError(f"rank {r} exceeds ambient dimension {d}")
        if r and np.max(np.abs(B.T @ B - np.eye(r))) > _ORTHO_TOL:
            q, rr = np.linalg.qr(B)
            # keep orientation of the original columns
            q = q * np.sign(np.where(np.diag(rr) == 0, 1.0, np.diag(rr)))
            B = q
        self.basis = B
        if self.eigenvalues is not None:
            self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
            if self.eigenvalues.shape != (r,):
                raise DimensionMismatchError("one eigenvalue per basis column required")

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None, tol: float = 1e-10) -> "Subspace":
        """Subspace spanned by the rows of ``vectors`` (rank-revealing)."""
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        if V.size == 0:
            if ambient_dim is None:
                raise DimensionMismatchError("ambient_dim needed for an empty span")
            return cls(np.zeros((ambient_dim, 0)))
        u, s, _ = np.linalg.svd(V.T, full_matrices=False)
        rank = int(np.sum(s > tol * max(1.0, s[0])))
        return cls(_canonical_signs(u[:, :rank]))

    @classmethod
    def coordinate(cls, ambient_dim: int, axes: Sequence[int]) -> "Subspace":
        return cls(np.eye(ambient_dim)[:, list(axes)])

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(np.eye(ambient_dim))

    def embed(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.basis.T

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def to_dict(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "basis": self.basis.T.tolist(),  # one row per basis vector
            "eigenvalues": None if self.eigenvalues is None else self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Subspace":
        d = int(data["ambient_dim"])
        rows = np.asarray(data["basis"], dtype=float).reshape(-1, d)
        ev = data.get("eigenvalues")
        return cls(rows.T, None if ev is None else np.asarray(ev, dtype=float))


def project(s: Subspace, x) -> np.ndarray:
    """Coordinates of ``x`` (a vector or a batch of rows) in the basis of ``s``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != s.ambient_dim:
        raise DimensionMismatchError(f"x has length {x.shape[-1]}, subspace lives in R^{s.ambient_dim}")
    return x @ s.basis


def principal_angles(a: Subspace, b: Subspace) -> np.ndarray:
    """Principal angles in radians, ascending, between two subspaces."""
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatchError("subspaces live in different ambient spaces")
    if a.dim == 0 or b.dim == 0:
        return np.zeros(0)
    if a.dim < b.dim:
        a, b = b, a
    # arccos loses half the digits near 0, so small angles come from the sines
    cos = np.clip(np.linalg.svd(a.basis.T @ b.basis, compute_uv=False), 0.0, 1.0)
    resid = b.basis - a.basis @ (a.basis.T @ b.basis)
    sin = np.clip(np.sort(np.linalg.svd(resid, compute_uv=False)), 0.0, 1.0)
    ang = np.where(cos**2 >= 0.5, np.arcsin(sin), np.arccos(cos))
    return np.sort(ang)


def subspace_distance(a: Subspace, b: Subspace) -> float:
    """Largest principal angle, or pi/2 when ``b`` is not contained in a same-size ``a``."""
    ang = principal_angles(a, b)
    if ang.size < max(a.dim, b.dim):
        return math.pi / 2 if min(a.dim, b.dim) < b.dim else float(ang.max(initial=0.0))
    return float(ang.max(initial=0.0))


# --------------------------------------------------------------------------
# Quadrature against N(0, 1)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "gauss"

    @property
    def node_count(self) -> int:
        return self.nodes.size


@functools.lru_cache(maxsize=16)
def gauss_rule(node_count: int = 200) -> QuadratureRule:
    """Gauss-Hermite rule for E_{z~N(0,1)}; exact up to degree 2n-1."""
    if node_count < 1:
        raise ParameterError("node_count must be >= 1")
    x, w = np.polynomial.hermite_e.hermegauss(node_count)
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w, "gauss")


@functools.lru_cache(maxsize=16)
def split_rule(node_count: int = 200) -> QuadratureRule:
    """Mirrored half-range Gauss rule with ``node_count // 2`` nodes per side.

    Exact for any function that is a polynomial of degree < node_count on
    each half-line separately, e.g. ReLU or |x|, which plain Gauss-Hermite
    integrates only to ~1e-3.
    """
    half = node_count // 2
    if half < 1:
        raise ParameterError("split rule needs at least 2 nodes")
    x, w = _half_range_gauss(half)
    nodes = np.concatenate([-x[::-1], x])
    weights = np.concatenate([w[::-1], w]) / 2.0
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, "split")


def _half_range_gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    # Chebyshev's moment algorithm in extended precision (the moment map is
    # badly conditioned), then Golub-Welsch in double precision.
    import mpmath

    with mpmath.workdps(60 + 3 * n):
        moments = [mpmath.power(2, mpmath.mpf(k) / 2) * mpmath.gamma(mpmath.mpf(k + 1) / 2) / mpmath.sqrt(mpmath.pi)
                   for k in range(2 * n)]
        alpha = [moments[1] / moments[0]]
        beta = [moments[0]]
        sig_prev = [mpmath.mpf(0)] * (2 * n)
        sig = list(moments)
        for k in range(1, n):
            nxt = [mpmath.mpf(0)] * (2 * n)
            for l in range(k, 2 * n - k):
                nxt[l] = sig[l + 1] - alpha[k - 1] * sig[l] - beta[k - 1] * sig_prev[l]
            alpha.append(nxt[k + 1] / nxt[k] - sig[k] / sig[k - 1])
            beta.append(nxt[k] / sig[k - 1])
            sig_prev, sig = sig, nxt
        a = np.array([float(v) for v in alpha])
        b = np.array([float(mpmath.sqrt(v)) for v in beta[1:]])
    J = np.diag(a) + np.diag(b, 1) + np.diag(b, -1)
    nodes = np.linalg.eigvalsh(J)
    # Christoffel numbers 1 / sum_k p_k(x)^2 keep full relative accuracy in
    # the far tail, where eigenvector-based weights are pure round-off
    p_prev = np.zeros_like(nodes)
    p = np.ones_like(nodes)
    total = p * p
    for k in range(n - 1):
        p_next = ((nodes - a[k]) * p - (b[k - 1] if k else 0.0) * p_prev) / b[k]
        p_prev, p = p, p_next
        total += p * p
    weights = 1.0 / total
    return nodes, weights / weights.sum()


def gauss_quadrature_expectation(rule: QuadratureRule, f: Callable) -> float:
    """Sum_i w_i f(z_i), an approximation of E_{z~N(0,1)}[f(z)].

    ``f`` is called once on the full node array.
    """
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.shape != rule.nodes.shape:
        vals = np.array([float(f(z)) for z in rule.nodes])
    if not np.all(np.isfinite(vals)):
        raise NumericError("integrand is not finite at every quadrature node")
    return float(np.dot(rule.weights, vals))


def tensor_expectation(f: Callable, rules: Sequence[QuadratureRule], rotation=None) -> float:
    """E[f(x)] for x ~ N(0, I_k) on a tensor grid.

    ``f`` receives an (N, k) array of points. With ``rotation`` (an orthogonal
    k x k matrix Q) the grid is laid out along the columns of Q, i.e. f is
    evaluated at Q @ y; this lets a kink along any direction be aligned with a
    split rule.
    """
    grids = np.meshgrid(*[r.nodes for r in rules], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wgrid = functools.reduce(np.multiply.outer, [r.weights for r in rules]).ravel()
    if rotation is not None:
        pts = pts @ np.asarray(rotation, dtype=float).T
    vals = np.asarray(f(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericError("integrand is not finite at every quadrature node")
    return float(np.dot(wgrid, vals))


def hermite_coefficients(f: Callable, dim: int, max_degree: int, rules=None, rotation=None) -> dict:
    """Hermite coefficients E[f(x) H_I(x)] for |I| <= max_degree by tensor quadrature."""
    rules = rules or [gauss_rule()] * dim
    indices = enumerate_multi_indices(dim, max_degree)
    grids = np.meshgrid(*[r.nodes for r in rules], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wgrid = functools.reduce(np.multiply.outer, [r.weights for r in rules]).ravel()
    if rotation is not None:
        pts = pts @ np.asarray(rotation, dtype=float).T
    fv = np.asarray(f(pts), dtype=float)
    Phi = hermite_features(pts, indices)
    coef = (wgrid * fv) @ Phi
    return dict(zip(indices, coef.tolist()))


def gaussian_marginalize(f: Callable, s: Subspace, rule: QuadratureRule | None = None) -> Callable:
    """The operator Pi_V: x -> E_{z ~ N(V-perp)}[f(proj_V x + z)].

    The orthogonal complement is integrated on a tensor grid, so this is only
    practical when dim(V-perp) <= 3.
    """
    rule = rule or gauss_rule(60)
    d = s.ambient_dim
    comp = Subspace.span(np.eye(d) - s.projector(), ambient_dim=d) if s.dim < d else Subspace(np.zeros((d, 0)))
    k = comp.dim
    if k == 0:
        return f
    grids = np.meshgrid(*([rule.nodes] * k), indexing="ij")
    zc = np.stack([g.ravel() for g in grids], axis=1) @ comp.basis.T  # (G, d)
    wz = functools.reduce(np.multiply.outer, [rule.weights] * k).ravel()
    P = s.projector()

    def marginal(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        base = x @ P
        pts = base[:, None, :] + zc[None, :, :]
        vals = np.asarray(f(pts.reshape(-1, d)), dtype=float).reshape(len(x), -1)
        return vals @ wz

    return marginal


# --------------------------------------------------------------------------
# Random streams
# --------------------------------------------------------------------------


def make_rng(seed, *task) -> np.random.Generator:
    """Generator for (seed, task...) so parallel tasks get independent, reproducible streams."""
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed)] + [int(t) for t in task]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))


def sample_standard_normal(dim: int, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """``dim`` i.i.d. N(0, 1) draws (or an (n, dim) batch when ``n`` is given)."""
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    if n is None:
        return rng.standard_normal(dim)
    return rng.standard_normal((n, dim))


def pairwise_sum(parts: list):
    """Fixed-order pairwise reduction; results do not depend on worker timing."""
    if not parts:
        raise ValueError("nothing to sum")
    parts = list(parts)
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def chunks(total: int, size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


__all__ = [
    "HermiteTable",
    "MultiIndex",
    "QuadratureRule",
    "Subspace",
    "chunks",
    "derive_seed",
    "enumerate_multi_indices",
    "gauss_quadrature_expectation",
    "gauss_rule",
    "gaussian_marginalize",
    "hermite_coefficients",
    "hermite_eval",
    "hermite_features",
    "hermite_multi_eval",
    "hermite_table",
    "make_rng",
    "multi_index_count",
    "pairwise_sum",
    "principal_angles",
    "project",
    "sample_standard_normal",
    "split_rule",
    "subspace_distance",
    "tensor_expectation",
]
