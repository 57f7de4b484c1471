"""Hermite-polynomial hypotheses on a subspace and their L2 / L1 fitting back-ends."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import DimensionMismatchError, NumericError, ParameterError
from .gaussian_core import Subspace, enumerate_multi_indices, hermite_features, multi_index_count, project

log = logging.getLogger(__name__)

RIDGE = 1e-8
REFINE_STEPS = 2
_EVAL_FLOATS = 4_000_000


@dataclass
class PolynomialHypothesis:
    """p(x) = sum_I c_I H_I(project(V, x)) with |I| <= degree.

    When ``clip`` is set the value is clipped to [-clip, clip], i.e. projected
    onto the range of the (truncated) labels it was fitted to.
    """

    subspace: Subspace
    degree: int
    indices: list
    coef: np.ndarray
    clip: float | None = None

    def __post_init__(self):
        self.indices = [tuple(int(i) for i in I) for I in self.indices]
        self.coef = np.asarray(self.coef, dtype=float).reshape(-1)
        if len(self.indices) != self.coef.size:
            raise DimensionMismatchError("one coefficient per multi-index required")
        r = self.subspace.dim
        for I in self.indices:
            if len(I) != r:
                raise DimensionMismatchError(f"multi-index {I} does not match dim(V)={r}")
            if sum(I) > self.degree:
                raise ParameterError(f"multi-index {I} exceeds degree {self.degree}")

    @property
    def coefficients(self) -> dict:
        return dict(zip(self.indices, self.coef.tolist()))

    @classmethod
    def from_coefficients(cls, subspace: Subspace, degree: int, coefficients: dict) -> "PolynomialHypothesis":
        return cls(subspace, degree, list(coefficients), np.array(list(coefficients.values()), dtype=float))

    @classmethod
    def zero(cls, subspace: Subspace) -> "PolynomialHypothesis":
        return cls(subspace, 0, [(0,) * subspace.dim], np.zeros(1))

    def __call__(self, x):
        return evaluate(self, x)

    def to_dict(self) -> dict:
        return {
            "kind": "polynomial",
            "ambient_dim": self.subspace.ambient_dim,
            "subspace": self.subspace.basis.T.tolist(),
            "degree": self.degree,
            "coefficients": [[list(I), c] for I, c in zip(self.indices, self.coef.tolist())],
            "clip": self.clip,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolynomialHypothesis":
        d = int(data["ambient_dim"])
        rows = np.asarray(data["subspace"], dtype=float).reshape(-1, d)
        coeffs = data["coefficients"]
        return cls(Subspace(rows.T), int(data["degree"]), [tuple(I) for I, _ in coeffs],
                   np.array([c for _, c in coeffs], dtype=float), data.get("clip"))


@dataclass
class BooleanHypothesis:
    """sign(poly(x)) with sign(0) = +1."""

    poly: PolynomialHypothesis
    objective: float | None = None

    def __call__(self, x):
        return evaluate(self, x)

    def to_dict(self) -> dict:
        out = self.poly.to_dict()
        out["kind"] = "boolean"
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BooleanHypothesis":
        return cls(PolynomialHypothesis.from_dict(data))


def hypothesis_from_dict(data: dict):
    if data.get("kind") == "boolean":
        return BooleanHypothesis.from_dict(data)
    return PolynomialHypothesis.from_dict(data)


def _as_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(points, tuple) and len(points) == 2 and isinstance(points[0], np.ndarray):
        X, y = points
    else:
        pts = list(points)
        if not pts:
            raise ParameterError("at least one point is required")
        X = np.array([p[0] for p in pts], dtype=float)
        y = np.array([p[1] for p in pts], dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(X) != len(y) or len(y) == 0:
        raise ParameterError("need matching, non-empty X and y")
    return X, y


def design_matrix(X: np.ndarray, v: Subspace, m: int) -> tuple[np.ndarray, list]:
    """Hermite features of the projected points, in graded-lex order."""
    if m < 0:
        raise ParameterError("degree must be >= 0")
    count = multi_index_count(v.dim, m)
    indices = enumerate_multi_indices(v.dim, m)
    Phi = hermite_features(project(v, X), indices)
    if Phi.shape[1] != count:  # pragma: no cover - enumeration and count share a formula
        raise NumericError("feature enumeration is inconsistent")
    return Phi, indices


def _warn_if_underdetermined(n_features: int, n_points: int) -> None:
    if n_features > n_points:
        log.warning("%d features exceed the %d training points; the fit relies on the ridge", n_features, n_points)


def l2_fit(points, v: Subspace, m: int, ridge: float = RIDGE) -> PolynomialHypothesis:
    """Least-squares fit over degree <= m Hermite polynomials in the V coordinates.

    Solves ``(Phi^T Phi / n + ridge I) c = Phi^T y / n`` followed by a few
    steps of iterative refinement toward the unregularized solution.
    """
    X, y = _as_arrays(points)
    Phi, indices = design_matrix(X, v, m)
    n, F = Phi.shape
    _warn_if_underdetermined(F, n)
    G = Phi.T @ Phi / n
    Gr = G.copy()
    Gr[np.diag_indices(F)] += ridge
    rhs = Phi.T @ y / n
    try:
        c = np.linalg.solve(Gr, rhs)
        # refinement against the unregularized system removes the ridge's
        # shrinkage; corrections stay in range(G), so a singular G is still safe
        for _ in range(REFINE_STEPS):
            c = c + np.linalg.solve(Gr, rhs - G @ c)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"normal equations are singular even with ridge {ridge}") from exc
    if not np.all(np.isfinite(c)):
        raise NumericError("least-squares solution is not finite")
    return PolynomialHypothesis(v, m, indices, c)


def _l1_primal(Phi: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    n, F = Phi.shape
    # variables [c (free, F), t (>= 0, n)];  Phi c - t <= y,  -Phi c - t <= -y
    A = sp.bmat([[sp.csr_matrix(Phi), -sp.identity(n)], [sp.csr_matrix(-Phi), -sp.identity(n)]], format="csr")
    b = np.concatenate([y, -y])
    cost = np.concatenate([np.zeros(F), np.ones(n)])
    bounds = [(None, None)] * F + [(0, None)] * n
    res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status == 2:  # pragma: no cover - the LP is feasible by construction
        raise RuntimeError("L1 regression LP reported infeasible")
    if res.status != 0:
        raise NumericError(f"L1 regression LP did not converge: {res.message}")
    return res.x[:F], float(res.fun)


def _l1_lp(Phi: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact L1 regression through the dual LP.

    The dual ``max y.u  s.t.  Phi^T u = 0, |u_i| <= 1`` has n bounded variables
    and only F equality rows, which HiGHS solves far faster than the primal
    with its 2n slack constraints. The coefficients are the negated equality
    multipliers. If the recovered objective disagrees with the dual optimum
    the primal is solved instead.
    """
    F = Phi.shape[1]
    res = linprog(-y, A_eq=Phi.T, b_eq=np.zeros(F), bounds=(-1.0, 1.0), method="highs")
    if res.status == 0:
        c = -np.asarray(res.eqlin.marginals, dtype=float)
        obj = float(np.abs(Phi @ c - y).sum())
        if abs(obj + res.fun) <= 1e-7 * max(1.0, abs(res.fun)):
            return c, obj
        log.warning("dual L1 solution failed the duality-gap check; solving the primal")
    return _l1_primal(Phi, y)


def _l1_subgradient(Phi: np.ndarray, y: np.ndarray, iters: int = 2000) -> tuple[np.ndarray, float]:
    # fixed step schedule 1/sqrt(t), warm-started from the least-squares solution
    n, F = Phi.shape
    G = Phi.T @ Phi / n + RIDGE * np.eye(F)
    c = np.linalg.solve(G, Phi.T @ y / n)
    best, best_obj = c.copy(), float(np.abs(Phi @ c - y).sum())
    for t in range(1, iters + 1):
        g = Phi.T @ np.sign(Phi @ c - y) / n
        c = c - g / math.sqrt(t)
        obj = float(np.abs(Phi @ c - y).sum())
        if obj < best_obj:
            best, best_obj = c.copy(), obj
    return best, best_obj


def l1_fit(points, v: Subspace, m: int, method: str = "lp") -> BooleanHypothesis:
    """Minimize sum_i |p(x_i) - y_i| over degree <= m polynomials and return sign(p).

    ``method="lp"`` solves the exact linear program with HiGHS; ``"subgradient"``
    is an approximate fallback for very large n.
    """
    X, y = _as_arrays(points)
    Phi, indices = design_matrix(X, v, m)
    _warn_if_underdetermined(Phi.shape[1], Phi.shape[0])
    if method == "lp":
        c, obj = _l1_lp(Phi, y)
    elif method == "subgradient":
        c, obj = _l1_subgradient(Phi, y)
    else:
        raise ParameterError(f"unknown L1 method {method!r}")
    return BooleanHypothesis(PolynomialHypothesis(v, m, indices, c), obj)


def degree_for(mode: str, L_or_gamma: float, eps: float, cap: int = 20) -> int:
    """Regression degree: ceil(L/eps^2) on the real path, ceil(Gamma^2/eps^4) on the Boolean path."""
    if L_or_gamma <= 0 or eps <= 0 or cap < 0:
        raise ParameterError("degree_for needs positive arguments")
    if mode == "real":
        m = math.ceil(L_or_gamma / eps**2 - 1e-12)
    elif mode == "boolean":
        m = math.ceil(L_or_gamma**2 / eps**4 - 1e-12)
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    if m > cap:
        log.warning("degree %d exceeds the cap; clamping to %d", m, cap)
        return cap
    return max(m, 0)


def evaluate(h, x):
    """Polynomial value, or sign of it for a Boolean hypothesis, at a point or rows of X."""
    poly = h.poly if isinstance(h, BooleanHypothesis) else h
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != poly.subspace.ambient_dim:
        raise DimensionMismatchError(f"x has length {X.shape[1]}, hypothesis lives in R^{poly.subspace.ambient_dim}")
    Z = project(poly.subspace, X)
    rows = max(1, _EVAL_FLOATS // max(1, len(poly.indices)))
    vals = np.concatenate([hermite_features(Z[lo:lo + rows], poly.indices) @ poly.coef
                           for lo in range(0, len(Z), rows)]) if len(Z) else np.zeros(0)
    if poly.clip is not None:
        vals = np.clip(vals, -poly.clip, poly.clip)
    if isinstance(h, BooleanHypothesis):
        vals = np.where(vals >= 0, 1.0, -1.0)
    return float(vals[0]) if single else vals


def predict(h, X) -> np.ndarray:
    """Vectorized prediction for any hypothesis type with a ``__call__``."""
    return np.asarray(h(np.atleast_2d(X)), dtype=float)


def empirical_error(h, points, mode: str) -> float:
    """Mean squared, 0-1 (sign mismatch) or absolute error of ``h`` on labelled points."""
    X, y = _as_arrays(points)
    p = predict(h, X)
    if mode == "l22":
        return float(np.mean((p - y) ** 2))
    if mode == "l1":
        return float(np.mean(np.abs(p - y)))
    if mode == "zero_one":
        return float(np.mean(np.where(p >= 0, 1, -1) != np.where(y >= 0, 1, -1)))
    raise ParameterError(f"unknown mode {mode!r}")


__all__ = [
    "BooleanHypothesis",
    "PolynomialHypothesis",
    "RIDGE",
    "degree_for",
    "design_matrix",
    "empirical_error",
    "evaluate",
    "hypothesis_from_dict",
    "l1_fit",
    "l2_fit",
    "predict",
]

