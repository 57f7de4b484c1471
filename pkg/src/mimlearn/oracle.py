"""Label oracles for the agnostic query model.

A :class:`LabelOracle` couples a planted target (:class:`TargetSpec`) with a
fixed corruption (:class:`CorruptionSpec`). The corrupted label is a
deterministic function of ``x`` alone, so querying the same point twice gives
the same answer. Every query and every Gaussian sample is charged to a
:class:`BudgetLedger`.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BudgetExhaustedError, DimensionMismatchError, ParameterError

BOOLEAN_VARIANTS = {"ltf", "intersection_halfspaces", "function_of_halfspaces", "lowdim_ptf"}
REAL_VARIANTS = {"relu", "lipschitz_sim", "sum_relus", "linear_comb_relus", "deep_relu_net"}
VARIANTS = BOOLEAN_VARIANTS | REAL_VARIANTS
CORRUPTIONS = {"none", "region_flip", "hash_flip", "additive_bounded", "replace_region"}

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _sign(t):
    # sign(0) := +1 everywhere in this package
    return np.where(t >= 0, 1.0, -1.0)


def relu(t):
    return np.maximum(t, 0.0)


# name -> (g, g', Lipschitz constant); derivatives use the right-derivative at kinks
LINKS: dict[str, tuple[Callable, Callable, float]] = {
    "identity": (lambda t: t, lambda t: np.ones_like(t), 1.0),
    "relu": (relu, lambda t: (t >= 0).astype(float), 1.0),
    "abs": (np.abs, lambda t: np.where(t >= 0, 1.0, -1.0), 1.0),
    "tanh": (np.tanh, lambda t: 1.0 - np.tanh(t) ** 2, 1.0),
    "sin": (np.sin, np.cos, 1.0),
    "sigmoid": (lambda t: 1.0 / (1.0 + np.exp(-t)), lambda t: np.exp(-t) / (1.0 + np.exp(-t)) ** 2, 0.25),
    "leaky_relu": (lambda t: np.where(t >= 0, t, 0.1 * t), lambda t: np.where(t >= 0, 1.0, 0.1), 1.0),
}


# --------------------------------------------------------------------------
# Targets
# --------------------------------------------------------------------------


@dataclass
class TargetSpec:
    """A member of one of the supported concept classes.

    Conventions: halfspaces are ``sign(w . x - threshold)``, ReLU units are
    ``ReLU(w . x - threshold)`` (threshold defaults to 0), ``signs`` are the
    outer +-1 weights of a linear combination of ReLUs, and ``layers`` holds
    W_1..W_L of a deep network (W_L has one row). ``truth_table[b]`` is the
    label when bit i of b is set iff halfspace i is positive. ``poly_terms``
    are (exponents, coefficient) monomials in the coordinates ``weights @ x``.
    """

    variant: str
    weights: np.ndarray | None = None
    thresholds: np.ndarray | None = None
    signs: np.ndarray | None = None
    layers: list | None = None
    link: str | None = None
    truth_table: list | None = None
    poly_terms: list | None = None
    bound: float | None = None
    width_bound: int | None = None
    k: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unsupported variant {self.variant!r}")
        if self.variant == "deep_relu_net":
            if not self.layers:
                raise ParameterError("deep_relu_net needs layers")
            self.layers = [np.atleast_2d(np.asarray(W, dtype=float)) for W in self.layers]
            for a, b in zip(self.layers, self.layers[1:]):
                if b.shape[1] != a.shape[0]:
                    raise DimensionMismatchError("consecutive layer shapes do not chain")
            if self.layers[-1].shape[0] != 1:
                raise DimensionMismatchError("last layer must have a single output")
            mats = self.layers
        else:
            if self.weights is None:
                raise ParameterError(f"{self.variant} needs weights")
            self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
            mats = [self.weights]
            rows = self.weights.shape[0]
            if self.thresholds is None:
                self.thresholds = np.zeros(rows)
            self.thresholds = np.asarray(self.thresholds, dtype=float).reshape(-1)
            if self.thresholds.shape != (rows,):
                raise DimensionMismatchError("one threshold per weight row required")
            if self.signs is not None:
                self.signs = np.asarray(self.signs, dtype=float).reshape(-1)
                if self.signs.shape != (rows,):
                    raise DimensionMismatchError("one sign per weight row required")
        for W in mats:
            if not np.all(np.isfinite(W)):
                raise ParameterError("non-finite parameter")
        self._validate_class()

    def _validate_class(self):
        v = self.variant
        if v in ("relu", "ltf", "lipschitz_sim") and self.weights.shape[0] != 1:
            raise DimensionMismatchError(f"{v} takes exactly one weight vector")
        if v == "lipschitz_sim" and self.link not in LINKS:
            raise ParameterError(f"unknown link {self.link!r}; choose from {sorted(LINKS)}")
        if v == "linear_comb_relus":
            if self.signs is None:
                self.signs = np.ones(self.weights.shape[0])
            if not np.all(np.isin(self.signs, (-1.0, 1.0))):
                raise ParameterError("linear_comb_relus output weights must be +-1")
        if v == "function_of_halfspaces":
            n = self.weights.shape[0]
            if self.truth_table is None or len(self.truth_table) != 2**n:
                raise ParameterError(f"truth_table must have 2**{n} entries")
            self.truth_table = [1.0 if t > 0 else -1.0 for t in self.truth_table]
        if v == "lowdim_ptf":
            if not self.poly_terms:
                raise ParameterError("lowdim_ptf needs poly_terms")
            k = self.weights.shape[0]
            terms = []
            for exps, c in self.poly_terms:
                exps = tuple(int(e) for e in exps)
                if len(exps) != k or min(exps) < 0:
                    raise DimensionMismatchError("each monomial needs one exponent per weight row")
                terms.append((exps, float(c)))
            self.poly_terms = terms
        if self.bound is not None and v in ("relu", "sum_relus", "linear_comb_relus", "lipschitz_sim"):
            if np.max(np.linalg.norm(self.weights, axis=1)) > self.bound + 1e-12:
                raise ParameterError("a weight norm exceeds the declared bound")
        if v == "deep_relu_net":
            if self.bound is not None and max(np.linalg.norm(W, 2) for W in self.layers) > self.bound + 1e-12:
                raise ParameterError("a layer operator norm exceeds the declared bound")
            if self.width_bound is not None and max(W.shape[0] for W in self.layers) > self.width_bound:
                raise ParameterError("a layer is wider than the declared width bound")
        if self.k is not None and self.k != self.relevant_subspace_rank():
            raise ParameterError(f"declared k={self.k} but weights span rank {self.relevant_subspace_rank()}")

    @property
    def ambient_dim(self) -> int:
        return (self.layers[0] if self.variant == "deep_relu_net" else self.weights).shape[1]

    @property
    def is_boolean(self) -> bool:
        return self.variant in BOOLEAN_VARIANTS

    def first_layer(self) -> np.ndarray:
        return self.layers[0] if self.variant == "deep_relu_net" else self.weights

    def relevant_subspace_rank(self) -> int:
        return int(np.linalg.matrix_rank(self.first_layer(), tol=1e-10))

    def relevant_subspace(self):
        from .gaussian_core import Subspace

        return Subspace.span(self.first_layer(), ambient_dim=self.ambient_dim)

    def __call__(self, X):
        return eval_target(self, X)

    def to_dict(self) -> dict:
        out: dict = {"variant": self.variant}
        if self.variant == "deep_relu_net":
            out["layers"] = [W.tolist() for W in self.layers]
        else:
            out["weights"] = self.weights.tolist()
            out["thresholds"] = self.thresholds.tolist()
        for key in ("link", "truth_table", "bound", "width_bound", "k"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.signs is not None:
            out["signs"] = self.signs.tolist()
        if self.poly_terms is not None:
            out["poly_terms"] = [[list(e), c] for e, c in self.poly_terms]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TargetSpec":
        known = {"variant", "weights", "thresholds", "signs", "layers", "link", "truth_table",
                 "poly_terms", "bound", "width_bound", "k"}
        extra = set(data) - known
        if extra:
            raise ParameterError(f"unknown target keys: {sorted(extra)}")
        return cls(**data)


def eval_target(spec: TargetSpec, x):
    """Exact forward evaluation of the planted target at a point or a batch of rows."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != spec.ambient_dim:
        raise DimensionMismatchError(f"x has length {X.shape[1]}, target lives in R^{spec.ambient_dim}")
    v = spec.variant
    if v == "deep_relu_net":
        h = X.T
        for W in spec.layers[:-1]:
            h = relu(W @ h)
        out = (spec.layers[-1] @ h)[0]
    else:
        pre = X @ spec.weights.T - spec.thresholds  # (n, k)
        if v == "relu":
            out = relu(pre[:, 0])
        elif v == "sum_relus":
            out = relu(pre).sum(axis=1)
        elif v == "linear_comb_relus":
            out = relu(pre) @ spec.signs
        elif v == "lipschitz_sim":
            out = LINKS[spec.link][0](pre[:, 0])
        elif v == "ltf":
            out = _sign(pre[:, 0])
        elif v == "intersection_halfspaces":
            out = np.where(np.all(pre >= 0, axis=1), 1.0, -1.0)
        elif v == "function_of_halfspaces":
            bits = (pre >= 0).astype(np.int64) @ (1 << np.arange(pre.shape[1], dtype=np.int64))
            out = np.asarray(spec.truth_table)[bits]
        elif v == "lowdim_ptf":
            z = X @ spec.weights.T
            val = np.zeros(len(X))
            for exps, c in spec.poly_terms:
                val += c * np.prod(z ** np.asarray(exps, dtype=float), axis=1)
            out = _sign(val - spec.thresholds[0])
        else:  # pragma: no cover - guarded by TargetSpec
            raise ParameterError(v)
    return float(out[0]) if single else out


def target_gradient(spec: TargetSpec, x) -> np.ndarray:
    """Gradient of a real-valued target, with 1{t >= 0} at ReLU kinks."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    v = spec.variant
    if spec.is_boolean:
        raise ParameterError("Boolean targets have no gradient")
    if v == "deep_relu_net":
        grads = np.empty_like(X)
        for i, xi in enumerate(X):
            J = np.eye(spec.ambient_dim)
            h = xi
            for W in spec.layers[:-1]:
                pre = W @ h
                mask = (pre >= 0).astype(float)
                J = (mask[:, None] * W) @ J
                h = relu(pre)
            grads[i] = (spec.layers[-1] @ J)[0]
        return grads
    pre = X @ spec.weights.T - spec.thresholds
    if v == "relu":
        return (pre >= 0).astype(float) @ spec.weights
    if v == "sum_relus":
        return (pre >= 0).astype(float) @ spec.weights
    if v == "linear_comb_relus":
        return ((pre >= 0) * spec.signs).astype(float) @ spec.weights
    if v == "lipschitz_sim":
        return LINKS[spec.link][1](pre[:, :1]) * spec.weights[0]
    raise ParameterError(v)  # pragma: no cover


@dataclass(frozen=True)
class ClassParameters:
    """(M, L, k) of the bounded-variation class or (Gamma, k) of the surface-area class."""

    k: int
    M: float | None = None
    L: float | None = None
    gamma: float | None = None

    def to_dict(self) -> dict:
        return {"M": self.M, "L": self.L, "k": self.k, "gamma": self.gamma}


def class_parameters(spec: TargetSpec) -> ClassParameters:
    """Class parameters of the planted target, every O(.) constant set to 1.

    relu ||w|| <= M0            -> (sqrt(3) M0^2, M0^2, 1)
    lipschitz_sim, link L_g     -> (M0^2 L_g^2, L_g, 1)
    sum/linear comb of k ReLUs  -> (k M0^2, k M0^2, k)
    deep net                    -> ((k M S)^L, (k M S)^L, k)
    ltf                         -> Gamma = 1/sqrt(2 pi)
    intersection of k           -> Gamma = sqrt(ln k), floored at 1/sqrt(2 pi)
    function of l halfspaces    -> Gamma = l;  degree-l PTF -> Gamma = l
    """
    v = spec.variant
    if v == "deep_relu_net":
        k = spec.layers[0].shape[0]
        M = max(np.linalg.norm(W, 2) for W in spec.layers)
        S = max(W.shape[0] for W in spec.layers)
        val = float((k * M * S) ** len(spec.layers))
        return ClassParameters(k=k, M=val, L=val)
    norms = np.linalg.norm(spec.weights, axis=1)
    M0 = float(spec.bound if spec.bound is not None else norms.max())
    rows = spec.weights.shape[0]
    if v == "relu":
        return ClassParameters(k=1, M=math.sqrt(3.0) * M0**2, L=M0**2)
    if v == "lipschitz_sim":
        Lg = LINKS[spec.link][2]
        return ClassParameters(k=1, M=M0**2 * Lg**2, L=Lg)
    if v in ("sum_relus", "linear_comb_relus"):
        return ClassParameters(k=rows, M=rows * M0**2, L=rows * M0**2)
    if v == "ltf":
        return ClassParameters(k=1, gamma=_INV_SQRT_2PI)
    if v == "intersection_halfspaces":
        return ClassParameters(k=rows, gamma=max(math.sqrt(math.log(rows)), _INV_SQRT_2PI))
    if v == "function_of_halfspaces":
        return ClassParameters(k=rows, gamma=float(rows))
    if v == "lowdim_ptf":
        degree = max(sum(e) for e, _ in spec.poly_terms)
        return ClassParameters(k=rows, gamma=float(max(degree, 1)))
    raise ParameterError(f"unsupported variant {v!r}")  # pragma: no cover


# --------------------------------------------------------------------------
# Corruptions
# --------------------------------------------------------------------------


_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def cell_uniform(X: np.ndarray, cell: float, seed: int) -> np.ndarray:
    """A uniform [0, 1) value per axis-aligned cube of side ``cell``, fixed by ``seed``."""
    cells = np.floor(np.asarray(X, dtype=float) / cell).astype(np.int64).view(np.uint64)
    h = np.full(cells.shape[0], np.uint64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _splitmix(h + _GOLDEN)
        for j in range(cells.shape[1]):
            h = _splitmix(h ^ (cells[:, j] + _GOLDEN * np.uint64(j + 1)))
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


@dataclass
class CorruptionSpec:
    """A fixed adversarial modification of the clean label.

    region_flip      flip the Boolean label on {direction . x >= threshold}
    hash_flip        flip on cubes of side ``cell`` whose seeded hash is below ``rate``
    additive_bounded add bound * s(x), s one of sign(direction . x - threshold),
                     cos(frequency * direction . x) or a +-1 per-cube hash
    replace_region   label := value on {direction . x >= threshold}
    """

    kind: str = "none"
    rate: float = 0.0
    bound: float = 0.0
    direction: np.ndarray | None = None
    threshold: float = 0.0
    seed: int = 0
    cell: float = 1e-3
    shape: str = "sign"
    frequency: float = 1.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in CORRUPTIONS:
            raise ParameterError(f"unknown corruption kind {self.kind!r}")
        if self.direction is not None:
            self.direction = np.asarray(self.direction, dtype=float).reshape(-1)
        needs_dir = self.kind in ("region_flip", "replace_region") or (
            self.kind == "additive_bounded" and self.shape in ("sign", "cos"))
        if needs_dir and self.direction is None:
            raise ParameterError(f"{self.kind} needs a direction")
        if self.kind == "hash_flip" and not 0.0 <= self.rate <= 1.0:
            raise ParameterError("rate must lie in [0, 1]")
        if self.kind == "additive_bounded" and self.shape not in ("sign", "cos", "hash"):
            raise ParameterError(f"unknown additive shape {self.shape!r}")
        if self.bound < 0 or self.cell <= 0:
            raise ParameterError("bound must be >= 0 and cell > 0")

    @property
    def is_boolean_safe(self) -> bool:
        return self.kind in ("none", "region_flip", "hash_flip")

    def apply(self, X: np.ndarray, clean: np.ndarray) -> np.ndarray:
        k = self.kind
        if k == "none":
            return clean
        if k == "hash_flip":
            return np.where(cell_uniform(X, self.cell, self.seed) < self.rate, -clean, clean)
        if k == "additive_bounded" and self.shape == "hash":
            u = cell_uniform(X, self.cell, self.seed)
            return clean + self.bound * np.where(u < 0.5, -1.0, 1.0)
        proj = X @ self.direction
        if k == "region_flip":
            return np.where(proj >= self.threshold, -clean, clean)
        if k == "replace_region":
            return np.where(proj >= self.threshold, self.value, clean)
        if self.shape == "sign":
            return clean + self.bound * _sign(proj - self.threshold)
        return clean + self.bound * np.cos(self.frequency * proj)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        defaults = CorruptionSpec()
        for key in ("rate", "bound", "threshold", "seed", "cell", "shape", "frequency", "value"):
            val = getattr(self, key)
            if val != getattr(defaults, key):
                out[key] = val
        if self.direction is not None:
            out["direction"] = self.direction.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CorruptionSpec":
        known = {"kind", "rate", "bound", "direction", "threshold", "seed", "cell", "shape", "frequency", "value"}
        extra = set(data) - known
        if extra:
            raise ParameterError(f"unknown corruption keys: {sorted(extra)}")
        return cls(**data)


# --------------------------------------------------------------------------
# Budget and oracle
# --------------------------------------------------------------------------


@dataclass
class BudgetLedger:
    """Query and sample counters with optional hard caps.

    A request that would overrun a cap consumes what is left, records it and
    then raises, so the counters never undercount what was actually used.
    """

    query_cap: int | None = None
    sample_cap: int | None = None
    queries_used: int = 0
    samples_used: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def charge_queries(self, n: int) -> None:
        self._charge("queries", n)

    def charge_samples(self, n: int) -> None:
        self._charge("samples", n)

    def _charge(self, kind: str, n: int) -> None:
        with self._lock:
            used = self.queries_used if kind == "queries" else self.samples_used
            cap = self.query_cap if kind == "queries" else self.sample_cap
            take = n if cap is None else min(n, max(cap - used, 0))
            if kind == "queries":
                self.queries_used += take
            else:
                self.samples_used += take
            if take < n:
                raise BudgetExhaustedError(kind, used + take, cap)

    def remaining_queries(self) -> float:
        return math.inf if self.query_cap is None else self.query_cap - self.queries_used

    def remaining_samples(self) -> float:
        return math.inf if self.sample_cap is None else self.sample_cap - self.samples_used


class LabelOracle:
    """Query and sample access to a fixed label function y(x).

    ``target`` is a :class:`TargetSpec` or any vectorized callable mapping an
    (n, d) array to n labels; ``boolean`` must be given for callables.
    ``label_bound`` clips every returned label to [-bound, bound].
    """

    def __init__(self, target, corruption: CorruptionSpec | None = None, ledger: BudgetLedger | None = None,
                 label_bound: float | None = None, boolean: bool | None = None, ambient_dim: int | None = None):
        self.target = target
        self.corruption = corruption or CorruptionSpec()
        self.ledger = ledger if ledger is not None else BudgetLedger()
        self.label_bound = label_bound
        if isinstance(target, TargetSpec):
            self.boolean = target.is_boolean if boolean is None else boolean
            self.ambient_dim = target.ambient_dim
        else:
            if ambient_dim is None:
                raise ParameterError("ambient_dim is required for callable targets")
            self.boolean = bool(boolean)
            self.ambient_dim = ambient_dim
        if self.boolean and not self.corruption.is_boolean_safe:
            raise ParameterError(f"{self.corruption.kind} corruption produces non-Boolean labels")

    def with_truncation(self, bound: float) -> "LabelOracle":
        """Same label function clipped to [-bound, bound], sharing this ledger."""
        return LabelOracle(self.target, self.corruption, self.ledger, bound, self.boolean, self.ambient_dim)

    def clean(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.target(X), dtype=float)

    def labels(self, X) -> np.ndarray:
        """y(X) without touching the ledger (harness-side evaluation)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.ambient_dim:
            raise DimensionMismatchError(f"x has length {X.shape[1]}, oracle lives in R^{self.ambient_dim}")
        y = self.corruption.apply(X, self.clean(X))
        if self.label_bound is not None:
            y = np.clip(y, -self.label_bound, self.label_bound)
        return y

    def query(self, x) -> float:
        self.ledger.charge_queries(1)
        return float(self.labels(np.asarray(x, dtype=float)[None, :])[0])

    def query_batch(self, X) -> np.ndarray:
        """Labels at every row of X; charges len(X) queries before evaluating."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.ledger.charge_queries(len(X))
        return self.labels(X)

    def draw_samples(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        self.ledger.charge_samples(n)
        X = rng.standard_normal((n, self.ambient_dim))
        return X, self.labels(X)

    def draw_sample(self, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        X, y = self.draw_samples(1, rng)
        return X[0], float(y[0])


def query(o: LabelOracle, x) -> float:
    return o.query(x)


def draw_sample(o: LabelOracle, rng: np.random.Generator):
    return o.draw_sample(rng)


def opt_error(o: LabelOracle, mode: str, n: int, rng: np.random.Generator, chunk: int = 200_000) -> float:
    """Monte-Carlo error of the clean planted target against the corrupted labels.

    An upper bound on opt for any class containing the target. Budget exempt.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if mode not in ("l22", "zero_one", "l1"):
        raise ParameterError(f"unknown mode {mode!r}")
    total = 0.0
    for lo in range(0, n, chunk):
        m = min(chunk, n - lo)
        X = rng.standard_normal((m, o.ambient_dim))
        clean = o.clean(X)
        y = o.corruption.apply(X, clean)
        if mode == "l22":
            total += float(np.sum((clean - y) ** 2))
        elif mode == "l1":
            total += float(np.sum(np.abs(clean - y)))
        else:
            total += float(np.sum(_sign(clean) != _sign(y)))
    return total / n


def load_specs(path) -> tuple[TargetSpec, CorruptionSpec]:
    with open(path) as fh:
        data = json.load(fh)
    return TargetSpec.from_dict(data["target"]), CorruptionSpec.from_dict(data.get("corruption", {"kind": "none"}))


def random_unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    V = rng.standard_normal((count, dim))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def planted_frame(rng: np.random.Generator, d: int, k: int) -> np.ndarray:
    """k orthonormal rows spanning a uniformly random k-dimensional subspace of R^d."""
    q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return q.T


__all__ = [
    "BOOLEAN_VARIANTS",
    "BudgetLedger",
    "ClassParameters",
    "CorruptionSpec",
    "LINKS",
    "LabelOracle",
    "REAL_VARIANTS",
    "TargetSpec",
    "cell_uniform",
    "class_parameters",
    "draw_sample",
    "eval_target",
    "load_specs",
    "opt_error",
    "planted_frame",
    "query",
    "random_unit_vectors",
    "relu",
    "target_gradient",
]

