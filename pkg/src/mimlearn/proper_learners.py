"""Proper learners for halfspaces and ReLUs: influence PCA, an explicit cover of the
reduced subspace, and empirical risk minimization over that cover.

Candidates are ``sign(u . x + t)`` for halfspaces and ``s * ReLU(u . x + t)``
for ReLUs, with ``u`` a unit vector in the selected subspace.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .errors import BudgetExhaustedError, DimensionMismatchError, ParameterError, SizeError
from .gaussian_core import Subspace, derive_seed, make_rng
from .influence_pca import estimate_influence, top_subspace
from .smoothing import SmoothingParams, gradient_sample_count

log = logging.getLogger(__name__)

DEFAULT_COVER_CAP = 2_000_000
DEFAULT_INNER_CAP = 4096
_LOSS_CHUNK = 4_000_000


@dataclass(frozen=True)
class Candidate:
    """A proper hypothesis: ``sign(u . x + t)`` or ``scale * ReLU(u . x + t)``."""

    direction: np.ndarray
    bias: float
    kind: str
    scale: float = 1.0

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=float).reshape(-1)
        if abs(np.linalg.norm(u) - 1.0) > 1e-10:
            raise ParameterError("candidate direction must be a unit vector")
        if self.kind not in ("ltf", "relu"):
            raise ParameterError(f"unknown candidate kind {self.kind!r}")
        object.__setattr__(self, "direction", u)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.direction.size:
            raise DimensionMismatchError("point dimension does not match the candidate")
        pre = X @ self.direction + self.bias
        out = np.where(pre >= 0, 1.0, -1.0) if self.kind == "ltf" else self.scale * np.maximum(pre, 0.0)
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "direction": self.direction.tolist(), "bias": float(self.bias),
                "scale": float(self.scale)}

    @classmethod
    def from_dict(cls, data: dict) -> "Candidate":
        return cls(np.asarray(data["direction"], dtype=float), float(data["bias"]), data["kind"],
                   float(data.get("scale", 1.0)))


@dataclass
class CoverSpec:
    """Grid parameters: angular pitch ``resolution`` on the sphere of ``subspace``,
    biases on [-T, T] with step at most ``resolution`` and, for ReLUs, a
    geometric scale grid from ``resolution * norm_bound`` to ``norm_bound``."""

    subspace: Subspace
    resolution: float
    kind: str = "ltf"
    norm_bound: float = 1.0
    threshold_range: float | None = None
    cap: int = DEFAULT_COVER_CAP

    def __post_init__(self):
        if not 0 < self.resolution < 1 and not (self.kind == "ltf" and self.resolution <= math.pi / 2):
            raise ParameterError("resolution must lie in (0, 1)")
        if self.kind not in ("ltf", "relu"):
            raise ParameterError(f"unknown cover kind {self.kind!r}")
        if self.norm_bound <= 0:
            raise ParameterError("norm_bound must be positive")
        if self.threshold_range is None:
            self.threshold_range = default_threshold_range(min(self.resolution, 0.999))
        if self.threshold_range < 0:
            raise ParameterError("threshold_range must be >= 0")


def default_threshold_range(resolution: float) -> float:
    """T with P(|z| > T) small enough: the (1 - resolution/4) standard normal quantile."""
    return float(norm.ppf(1.0 - resolution / 4.0))


def sphere_grid(dim: int, pitch: float) -> np.ndarray:
    """Deterministic product grid on S^{dim-1} in hyperspherical coordinates.

    Polar angles sit at the midpoints of ceil(pi/pitch) equal cells; the last
    (azimuthal) angle gets ceil(2 pi prod(sin) / pitch) equally spaced values
    starting at 0, so neighbouring points are at most about ``pitch`` apart.
    """
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    n_polar = max(1, math.ceil(math.pi / pitch - 1e-12))
    polar = (np.arange(n_polar) + 0.5) * math.pi / n_polar
    out = []

    def rec(prefix: list[float]):
        if len(prefix) == dim - 2:
            radius = float(np.prod(np.sin(prefix))) if prefix else 1.0
            n_az = max(1, math.ceil(2 * math.pi * radius / pitch - 1e-12))
            for j in range(n_az):
                out.append(_from_angles(prefix + [2 * math.pi * j / n_az], dim))
            return
        for a in polar:
            rec(prefix + [float(a)])

    rec([])
    return np.array(out)


def _from_angles(angles: Sequence[float], dim: int) -> np.ndarray:
    v = np.empty(dim)
    s = 1.0
    for i, a in enumerate(angles):
        v[i] = s * math.cos(a)
        s *= math.sin(a)
    v[dim - 1] = s
    # exact zeros for the axis-aligned points of coarse grids
    v[np.abs(v) < 1e-15] = 0.0
    return v / np.linalg.norm(v)


def bias_grid(T: float, step: float) -> np.ndarray:
    """Odd number of equally spaced biases on [-T, T] with spacing <= step (includes 0)."""
    if T == 0:
        return np.zeros(1)
    intervals = math.ceil(2 * T / step - 1e-12)
    intervals += intervals % 2
    return np.linspace(-T, T, intervals + 1)


def scale_grid(resolution: float, M: float) -> np.ndarray:
    scales = [resolution * M]
    while scales[-1] * (1 + resolution) < M:
        scales.append(scales[-1] * (1 + resolution))
    if scales[-1] < M:
        scales.append(M)
    return np.array(scales)


class Cover(Sequence):
    """Lazily indexed candidate set; enumeration is direction-major, then bias, then scale."""

    def __init__(self, spec: CoverSpec):
        self.spec = spec
        coords = sphere_grid(spec.subspace.dim, spec.resolution)
        self.directions = coords @ spec.subspace.basis.T  # (n_dir, d) ambient unit vectors
        self.biases = bias_grid(spec.threshold_range, spec.resolution)
        self.scales = scale_grid(spec.resolution, spec.norm_bound) if spec.kind == "relu" else np.ones(1)
        if len(self) > spec.cap:
            raise SizeError(f"cover has {len(self)} candidates, above the cap {spec.cap}; use a larger resolution")

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.directions), len(self.biases), len(self.scales)

    def __len__(self) -> int:
        a, b, c = self.shape
        return a * b * c

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        _, nb, ns = self.shape
        di, rest = divmod(i, nb * ns)
        bi, si = divmod(rest, ns)
        u = self.directions[di] / np.linalg.norm(self.directions[di])
        return Candidate(u, float(self.biases[bi]), self.spec.kind, float(self.scales[si]))


def sphere_grid_size(dim: int, pitch: float, limit: float = 1e8) -> float:
    """len(sphere_grid(dim, pitch)) computed from the radii alone; inf beyond ``limit``."""
    if dim == 1:
        return 2
    n_polar = max(1, math.ceil(math.pi / pitch - 1e-12))
    polar_sin = np.sin((np.arange(n_polar) + 0.5) * math.pi / n_polar)
    radii = np.ones(1)
    for _ in range(dim - 2):
        if radii.size * n_polar > limit:
            return math.inf
        radii = np.multiply.outer(radii, polar_sin).ravel()
    total = float(np.sum(np.maximum(1, np.ceil(2 * math.pi * radii / pitch - 1e-12))))
    return total if total <= limit else math.inf


def cover_size(dim: int, resolution: float, kind: str = "ltf", norm_bound: float = 1.0,
               threshold_range: float | None = None) -> float:
    """Number of candidates ``build_cover`` would produce (inf when astronomically large)."""
    T = default_threshold_range(min(resolution, 0.999)) if threshold_range is None else threshold_range
    n_s = len(scale_grid(resolution, norm_bound)) if kind == "relu" else 1
    total = sphere_grid_size(dim, resolution) * len(bias_grid(T, resolution)) * n_s
    return int(total) if math.isfinite(total) else total


def build_cover(spec: CoverSpec) -> Cover:
    """Deterministic cover of the candidates whose direction lies in ``spec.subspace``."""
    if spec.subspace.dim < 1:
        raise ParameterError("cannot cover a 0-dimensional subspace")
    size = cover_size(spec.subspace.dim, spec.resolution, spec.kind, spec.norm_bound, spec.threshold_range)
    if size > spec.cap:
        raise SizeError(f"a cover of a {spec.subspace.dim}-dimensional subspace at resolution "
                        f"{spec.resolution} has {size} candidates, above the cap {spec.cap}; "
                        "use a larger resolution")
    return Cover(spec)


def _loss_table(cover: Cover, X: np.ndarray, y: np.ndarray, loss: str) -> np.ndarray:
    """Empirical loss of every candidate, flattened in enumeration order."""
    n = len(X)
    nd, nb, ns = cover.shape
    proj = X @ cover.directions.T  # (n, nd)
    out = np.empty((nd, nb, ns))
    per = max(1, _LOSS_CHUNK // max(1, n * nb))
    for lo in range(0, nd, per):
        hi = min(nd, lo + per)
        pre = proj[:, lo:hi, None] + cover.biases[None, None, :]  # (n, dirs, biases)
        if loss == "zero_one":
            pred = np.where(pre >= 0, 1.0, -1.0)
            out[lo:hi, :, 0] = np.mean(pred != np.where(y >= 0, 1.0, -1.0)[:, None, None], axis=0)
        else:
            r = np.maximum(pre, 0.0)
            # mean (s r - y)^2 = s^2 E r^2 - 2 s E[r y] + E y^2
            r2 = np.mean(r * r, axis=0)
            ry = np.einsum("ndb,n->db", r, y) / n
            y2 = float(np.mean(y * y))
            s = cover.scales
            out[lo:hi] = s**2 * r2[..., None] - 2 * s * ry[..., None] + y2
    return out.reshape(-1)


def erm_select(candidates, points, loss: str = "zero_one") -> Candidate:
    """Candidate with the smallest empirical loss; ties go to the lowest index."""
    if loss not in ("zero_one", "l22"):
        raise ParameterError(f"unknown loss {loss!r}")
    X, y = points
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(candidates) == 0 or len(X) == 0:
        raise ParameterError("erm_select needs candidates and points")
    if isinstance(candidates, Cover):
        losses = _loss_table(candidates, X, y, loss)
    else:
        losses = np.array([_candidate_loss(c, X, y, loss) for c in candidates])
    return candidates[int(np.argmin(losses))]


def _candidate_loss(c: Candidate, X: np.ndarray, y: np.ndarray, loss: str) -> float:
    p = c(X)
    if loss == "zero_one":
        return float(np.mean(p != np.where(y >= 0, 1.0, -1.0)))
    return float(np.mean((p - y) ** 2))


@dataclass
class ProperConfig:
    """Optional overrides for the proper learners; ``None`` means the default schedule."""

    rho: float | None = None
    eta: float | None = None
    inner_samples: int | None = None
    inner_cap: int = DEFAULT_INNER_CAP
    outer_samples: int = 2000
    erm_samples: int | None = None
    cover_resolution: float | None = None
    cover_cap: int = DEFAULT_COVER_CAP
    brute_force_cap: int = 5000
    paired: bool = True
    workers: int = 1
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ProperReport:
    """Stage artifacts filled in by a proper learner run."""

    rho: float | None = None
    eta: float | None = None
    trace: float | None = None
    inner_samples: int | None = None
    outer_samples: int = 0
    erm_samples: int = 0
    dim_v: int = 0
    eigenvalues: list = field(default_factory=list)
    cover_size: int = 0
    brute_force: bool = False
    subspace: Subspace | None = None
    train_loss: float | None = None


def plan_inner(d: int, label_bound: float, rho: float, eps: float, delta: float, cap: int) -> int:
    n = gradient_sample_count(d, label_bound, rho, eps, delta)
    if n > cap:
        log.warning("planner asks for %d queries per gradient; capping at %d", n, cap)
        return cap
    return n


def _proper(o, eps: float, delta: float, kind: str, M: float, cfg: ProperConfig | None,
            report: ProperReport | None):
    cfg = cfg or ProperConfig()
    report = report if report is not None else ProperReport()
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise ParameterError("eps and delta must lie in (0, 1)")
    if kind == "ltf" and not o.boolean:
        raise ParameterError("proper_learn_ltf needs a Boolean oracle")
    if kind == "relu" and o.boolean:
        raise ParameterError("proper_learn_relu needs a real-valued oracle")
    d = o.ambient_dim
    rng = make_rng(cfg.seed, 7)
    resolution = cfg.cover_resolution or eps
    loss = "zero_one" if kind == "ltf" else "l22"

    if cover_size(d, resolution, kind, M) <= cfg.brute_force_cap:
        # small ambient dimension: search the full sphere, no influence estimate needed
        V = Subspace.full(d)
        report.brute_force = True
    else:
        rho = cfg.rho if cfg.rho is not None else eps**2 / 32.0
        eta = cfg.eta if cfg.eta is not None else (eps**2 / 32.0 if kind == "ltf" else eps**2 / (32.0 * M))
        label_bound = 1.0 if kind == "ltf" else math.sqrt(M / eps)
        inner = cfg.inner_samples or plan_inner(d, label_bound, rho, eps, delta, cfg.inner_cap)
        p = SmoothingParams(rho, inner, delta, None if kind == "ltf" else label_bound)
        source = o if kind == "ltf" else o.with_truncation(label_bound)
        try:
            est = estimate_influence(source, p, cfg.outer_samples, derive_seed(rng), cfg.paired, cfg.workers)
        except BudgetExhaustedError as exc:
            raise exc.with_stage("influence-estimation")
        sel = top_subspace(est, eta)
        V = sel.subspace
        if V.dim == 0:
            log.warning("no eigenvalue reaches eta=%.3g; falling back to the top eigenvector", eta)
            w, vecs = np.linalg.eigh(est.matrix)
            V = Subspace.span(vecs[:, -1][None, :], ambient_dim=d)
        report.rho, report.eta, report.inner_samples, report.trace = rho, eta, inner, est.trace
        report.outer_samples = cfg.outer_samples
        report.eigenvalues = sel.subspace.eigenvalues.tolist() if sel.subspace.eigenvalues is not None else []

    cover = build_cover(CoverSpec(V, resolution, kind, M, cap=cfg.cover_cap))
    m = cfg.erm_samples or erm_sample_count(V.dim, eps, delta, M if kind == "relu" else 1.0)
    try:
        X, y = o.draw_samples(m, make_rng(derive_seed(rng)))
    except BudgetExhaustedError as exc:
        raise exc.with_stage("erm")
    best = erm_select(cover, (X, y), loss)
    report.dim_v, report.cover_size, report.erm_samples, report.subspace = V.dim, len(cover), m, V
    report.train_loss = _candidate_loss(best, X, y, loss)
    return best


def erm_sample_count(dim_v: int, eps: float, delta: float, M: float = 1.0) -> int:
    """m = ceil(M dim(V) ln(1/delta) / eps^2)."""
    return max(1, math.ceil(M * max(dim_v, 1) * math.log(1.0 / delta) / eps**2))


def proper_learn_ltf(o, eps: float, delta: float, cfg: ProperConfig | None = None,
                     report: ProperReport | None = None) -> Candidate:
    """Agnostic proper halfspace learner with queries; returns the ERM winner of the cover."""
    return _proper(o, eps, delta, "ltf", 1.0, cfg, report)


def proper_learn_relu(o, eps: float, delta: float, M: float, cfg: ProperConfig | None = None,
                      report: ProperReport | None = None) -> Candidate:
    """Agnostic proper ReLU learner with queries; labels are truncated at sqrt(M/eps) for smoothing."""
    if M <= 0:
        raise ParameterError("M must be positive")
    return _proper(o, eps, delta, "relu", M, cfg, report)


__all__ = [
    "Candidate",
    "Cover",
    "CoverSpec",
    "ProperConfig",
    "ProperReport",
    "bias_grid",
    "build_cover",
    "cover_size",
    "default_threshold_range",
    "erm_sample_count",
    "erm_select",
    "plan_inner",
    "proper_learn_ltf",
    "proper_learn_relu",
    "scale_grid",
    "sphere_grid",
    "sphere_grid_size",
]
