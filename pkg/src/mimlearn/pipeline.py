"""End-to-end learners, experiment orchestration and reporting.

Two improper learners and two wrappers around the proper learners:

* ``real_mim``: truncate labels, estimate the smoothed influence matrix,
  keep its large-eigenvalue subspace V, then least-squares Hermite regression on V.
* ``boolean_mim``: same reduction for +-1 labels, then L1 regression and sign.
* ``proper_ltf`` / ``proper_relu``: see :mod:`mimlearn.proper_learners`.

An experiment config (JSON) names a planted target and corruption, the learner
settings and optional budget caps. :func:`run_experiment` runs it and measures
the hypothesis on a fresh held-out Gaussian sample that does not touch the budget.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import BudgetExhaustedError, ConfigError, ParameterError, SizeError
from .gaussian_core import Subspace, make_rng, multi_index_count, principal_angles
from .influence_pca import InfluenceEstimate, estimate_influence, select_threshold, top_subspace
from .oracle import (BudgetLedger, CorruptionSpec, LabelOracle, TargetSpec, class_parameters,
                     planted_frame, random_unit_vectors)
from .proper_learners import ProperConfig, ProperReport, plan_inner, proper_learn_ltf, proper_learn_relu
from .regression import BooleanHypothesis, degree_for, empirical_error, l1_fit, l2_fit
from .smoothing import SmoothingParams

log = logging.getLogger(__name__)

MODES = ("real_mim", "boolean_mim", "proper_ltf", "proper_relu")
STAGES = ("influence", "selection", "fit", "evaluation")
CSV_COLUMNS = ["mode", "d", "k", "eps", "seed", "dimV", "Nq", "Ns", "train_err", "test_err", "opt_ub",
               "excess"] + [f"wall_ms_{s}" for s in STAGES]

# stream tags for make_rng(seed, tag)
_RNG_INFLUENCE, _RNG_FIT, _RNG_TEST, _RNG_PLANT = 1, 2, 3, 4


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass
class LearnerConfig:
    """Learner settings. ``None`` overrides fall back to the default schedule;
    class parameters may be ``"auto"`` (read from the planted target)."""

    mode: str
    eps: float
    delta: float = 0.05
    M: float | str = "auto"
    L: float | str = "auto"
    k: int | str = "auto"
    gamma: float | str = "auto"
    rho: float | None = None
    c_rho: float = 1.0
    eta: float | None = None
    degree: int | None = None
    degree_cap: int | None = None
    inner_samples: int | None = None
    inner_cap: int = 4096
    outer_samples: int | None = None
    fit_samples: int | None = None
    samples: int = 10_000
    influence_fraction: float = 0.2
    max_features: int = 20_000
    samples_per_feature: float = 50.0
    cover_resolution: float | None = None
    cover_cap: int = 2_000_000
    l1_method: str = "lp"
    clip_output: bool = True
    paired: bool = True
    budget_queries: int | None = None
    budget_samples: int | None = None
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}", ("mode",))
        for name in ("eps", "delta"):
            val = getattr(self, name)
            if not 0 < val < 1:
                raise ConfigError(f"must lie in (0, 1), got {val}", (name,))
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name in ("mode", "eps", "delta", "paired", "l1_method", "clip_output", "samples_per_feature", "seed") or val is None or val == "auto":
                continue
            if isinstance(val, (int, float)) and val <= 0:
                raise ConfigError(f"must be positive, got {val}", (f.name,))

    @property
    def effective_degree_cap(self) -> int:
        if self.degree_cap is not None:
            return self.degree_cap
        return 10 if self.mode == "boolean_mim" else 20

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class ResolvedParams:
    M: float | None
    L: float | None
    k: int
    gamma: float | None


def resolve_class_params(cfg: LearnerConfig, target: TargetSpec | None) -> ResolvedParams:
    """Fill ``"auto"`` class parameters from the target; ones that cannot be read stay ``None``.

    The learner schedules raise a ConfigError for any ``None`` they need.
    """
    auto = class_parameters(target) if target is not None else None

    def pick(name, auto_val):
        val = getattr(cfg, name)
        return auto_val if val == "auto" else val

    k = pick("k", auto.k if auto else None)
    if k is None:
        raise ConfigError("'auto' needs a planted target", ("k",))
    return ResolvedParams(
        M=pick("M", auto.M if auto else None),
        L=pick("L", auto.L if auto else None),
        k=int(k),
        gamma=pick("gamma", auto.gamma if auto else None),
    )


def _schema() -> dict:
    text = resources.files("mimlearn").joinpath("schemas/config.schema.json").read_text()
    return json.loads(text)


def validate_config(data: dict) -> None:
    """Check ``data`` against the shipped JSON schema; errors name the offending key path."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), e.validator != "required"))
    if not errors:
        return
    err = errors[0]
    path = list(err.absolute_path)
    if err.validator == "required":
        missing = [key for key in err.validator_value if key not in err.instance]
        path += missing[:1]
    elif err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path += extra[:1]
    raise ConfigError(err.message, path)


def _complement_direction(rng: np.random.Generator, frame: np.ndarray) -> np.ndarray:
    d = frame.shape[1]
    v = rng.standard_normal(d)
    v -= frame.T @ (frame @ v)
    return v / np.linalg.norm(v)


def planted_target(spec: dict, seed: int) -> tuple[TargetSpec, np.ndarray]:
    """Random member of a class on a uniformly random k-dimensional subspace.

    ``spec`` holds ``variant``, ``d`` and ``k`` (and ``link`` for SIMs).
    Returns the target and its orthonormal frame (k x d).
    """
    rng = make_rng(int(spec.get("seed", seed)), _RNG_PLANT)
    d, k, variant = int(spec["d"]), int(spec.get("k", 1)), spec["variant"]
    W = planted_frame(rng, d, k)
    if variant in ("relu", "ltf", "lipschitz_sim"):
        W = W[:1]
    extra: dict = {}
    if variant == "lipschitz_sim":
        extra["link"] = spec.get("link", "tanh")
    if variant == "linear_comb_relus":
        extra["signs"] = spec.get("signs", [1.0 if i % 2 == 0 else -1.0 for i in range(k)])
    if variant == "function_of_halfspaces":
        extra["truth_table"] = spec.get("truth_table") or [1.0 if bin(b).count("1") % 2 else -1.0 for b in range(2**k)]
    if variant == "lowdim_ptf":
        extra["poly_terms"] = spec.get("poly_terms") or [[[2] + [0] * (k - 1), 1.0], [[0] * k, -1.0]]
    if variant == "deep_relu_net":
        width = int(spec.get("width", k))
        hidden = random_unit_vectors(rng, width, k) / math.sqrt(width)
        return TargetSpec("deep_relu_net", layers=[W, hidden, np.ones((1, width)) / math.sqrt(width)]), W
    thresholds = spec.get("thresholds")
    return TargetSpec(variant, weights=W, thresholds=thresholds, **extra), W


def build_oracle(data: dict, seed: int, ledger: BudgetLedger | None = None):
    """Oracle, target and planted frame described by a config's target/corruption sections."""
    if "planted" in data:
        target, frame = planted_target(data["planted"], seed)
    else:
        target = TargetSpec.from_dict(copy.deepcopy(data["target"]))
        frame = target.first_layer()
    corr = dict(data.get("corruption", {"kind": "none"}))
    if corr.get("direction") == "complement":
        corr["direction"] = _complement_direction(make_rng(seed, _RNG_PLANT, 1), target.relevant_subspace().basis.T)
    elif corr.get("direction") == "planted":
        corr["direction"] = target.relevant_subspace().basis[:, 0]
    corruption = CorruptionSpec.from_dict(corr)
    return LabelOracle(target, corruption, ledger), target, frame


def config_from_dict(data: dict, seed: int | None = None, budget_queries: int | None = None,
                     budget_samples: int | None = None) -> LearnerConfig:
    validate_config(data)
    kwargs = {"mode": data["mode"], "eps": data["eps"], "delta": data.get("delta", 0.05),
              "seed": data.get("seed", 0) if seed is None else seed}
    for key in ("M", "L", "k", "gamma"):
        if key in data.get("class_params", {}):
            kwargs[key] = data["class_params"][key]
    kwargs.update(data.get("overrides", {}))
    budget = data.get("budget", {})
    kwargs["budget_queries"] = budget_queries if budget_queries is not None else budget.get("queries")
    kwargs["budget_samples"] = budget_samples if budget_samples is not None else budget.get("samples")
    if "workers" in data:
        kwargs["workers"] = data["workers"]
    if "paired" in data:
        kwargs["paired"] = data["paired"]
    return LearnerConfig(**kwargs)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    """Everything needed to audit and reproduce one learner run."""

    config: dict
    mode: str
    d: int
    k: int
    eps: float
    seed: int
    queries_used: int = 0
    samples_used: int = 0
    planned_queries: int | None = None
    planned_samples: int | None = None
    params: dict = field(default_factory=dict)
    dim_v: int = 0
    eigenvalues: list = field(default_factory=list)
    principal_angles: list | None = None
    train_error: float | None = None
    test_error: float | None = None
    opt_ub: float | None = None
    excess: float | None = None
    error_mode: str = "l22"
    hypothesis: dict | None = None
    timings_ms: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self, include_timings: bool = True) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        if not include_timings:
            out.pop("timings_ms")
        return _jsonable(out)

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), sort_keys=True, indent=2) + "\n"

    def csv_row(self) -> dict:
        row = {"mode": self.mode, "d": self.d, "k": self.k, "eps": self.eps, "seed": self.seed, "dimV": self.dim_v,
               "Nq": self.queries_used, "Ns": self.samples_used, "train_err": self.train_error,
               "test_err": self.test_error, "opt_ub": self.opt_ub, "excess": self.excess}
        for s in STAGES:
            row[f"wall_ms_{s}"] = self.timings_ms.get(s)
        return row


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


class _Stage:
    """Context manager that times a stage and tags budget errors with its name."""

    def __init__(self, report: ExperimentReport | None, key: str, tag: str):
        self.report, self.key, self.tag = report, key, tag

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if self.report is not None:
            self.report.timings_ms[self.key] = self.report.timings_ms.get(self.key, 0.0) + \
                1000.0 * (time.perf_counter() - self.t0)
        if isinstance(exc, BudgetExhaustedError) and exc.stage is None:
            exc.with_stage(self.tag)
        return False


# --------------------------------------------------------------------------
# Learners
# --------------------------------------------------------------------------


def _sample_split(cfg: LearnerConfig) -> tuple[int, int]:
    outer = cfg.outer_samples or max(1, int(round(cfg.influence_fraction * cfg.samples)))
    fit = cfg.fit_samples or max(1, cfg.samples - outer)
    return outer, fit


def _real_schedule(cfg: LearnerConfig, d: int, cp: ResolvedParams) -> dict:
    if cp.M is None or cp.L is None:
        raise ConfigError("real_mim needs M and L", ("class_params",))
    eps = cfg.eps
    label_bound = math.sqrt(cp.M / eps)
    rho = cfg.rho or min(cfg.c_rho * eps**2, 0.5)
    outer, fit = _sample_split(cfg)
    inner = cfg.inner_samples or plan_inner(d, label_bound, rho, eps, cfg.delta, cfg.inner_cap)
    eta = cfg.eta or select_threshold("real", eps, cp.k, cp.M)
    degree = cfg.degree if cfg.degree is not None else degree_for("real", cp.L, eps, cfg.effective_degree_cap)
    return {"rho": rho, "eta": eta, "inner_samples": inner, "outer_samples": outer, "fit_samples": fit,
            "degree": degree, "label_bound": label_bound}


def _boolean_schedule(cfg: LearnerConfig, d: int, cp: ResolvedParams) -> dict:
    if cp.gamma is None:
        raise ConfigError("boolean_mim needs gamma", ("class_params",))
    eps = cfg.eps
    rho = cfg.rho or min(eps / (32.0 * cp.gamma), 0.5)
    outer, fit = _sample_split(cfg)
    inner = cfg.inner_samples or plan_inner(d, 1.0, rho, eps, cfg.delta, cfg.inner_cap)
    eta = cfg.eta or select_threshold("boolean", eps, cp.k)
    degree = cfg.degree if cfg.degree is not None else degree_for("boolean", cp.gamma, eps, cfg.effective_degree_cap)
    return {"rho": rho, "eta": eta, "inner_samples": inner, "outer_samples": outer, "fit_samples": fit,
            "degree": degree, "label_bound": 1.0}


def planned_budget(cfg: LearnerConfig, d: int, cp: ResolvedParams) -> dict:
    """Query and sample totals the schedule will consume (samples may depend on dim V)."""
    if cfg.mode in ("real_mim", "boolean_mim"):
        s = _real_schedule(cfg, d, cp) if cfg.mode == "real_mim" else _boolean_schedule(cfg, d, cp)
        per = 2 if cfg.paired else 1
        return {"queries": per * s["outer_samples"] * s["inner_samples"],
                "samples": s["outer_samples"] + s["fit_samples"], "schedule": s}
    return {"queries": None, "samples": None, "schedule": {}}


def _select(est, eta: float, report: ExperimentReport | None) -> Subspace:
    sel = top_subspace(est, eta)
    if report is not None:
        report.dim_v = sel.dim
        report.eigenvalues = [] if sel.subspace.eigenvalues is None else sel.subspace.eigenvalues.tolist()
    return sel.subspace


def feature_limited_degree(dim_v: int, degree: int, n: int, samples_per_feature: float) -> int:
    """Largest m <= degree whose Hermite feature count leaves ``samples_per_feature`` samples each."""
    m = degree
    while m > 0 and multi_index_count(dim_v, m) * samples_per_feature > n:
        m -= 1
    return m


def _fit_degree(dim_v: int, sched: dict, cfg: LearnerConfig, report: ExperimentReport | None) -> int:
    degree = sched["degree"]
    if cfg.degree is None and cfg.samples_per_feature:
        limited = feature_limited_degree(dim_v, degree, sched["fit_samples"], cfg.samples_per_feature)
        if limited < degree:
            log.warning("degree %d lowered to %d to keep %g samples per feature in dim(V)=%d",
                        degree, limited, cfg.samples_per_feature, dim_v)
            degree = limited
    if report is not None:
        report.params["degree"] = degree
    _check_features(dim_v, degree, cfg, sched["fit_samples"])
    return degree


def _check_features(dim_v: int, degree: int, cfg: LearnerConfig, n: int) -> None:
    F = multi_index_count(dim_v, degree)
    if F > cfg.max_features:
        raise SizeError(f"{F} Hermite features for dim(V)={dim_v}, degree {degree} exceed max_features="
                        f"{cfg.max_features}; raise eta or lower the degree")
    if F > n:
        log.warning("%d features exceed the %d regression samples", F, n)


def _reduce(o, cfg: LearnerConfig, sched: dict, source, report: ExperimentReport | None):
    p = SmoothingParams(sched["rho"], sched["inner_samples"], cfg.delta, sched["label_bound"])
    workers = cfg.workers
    with _Stage(report, "influence", "influence-estimation"):
        est = estimate_influence(source, p, sched["outer_samples"], make_rng(cfg.seed, _RNG_INFLUENCE),
                                 cfg.paired, workers)
    with _Stage(report, "selection", "subspace-selection"):
        V = _select(est, sched["eta"], report)
    if report is not None:
        report.params = {k: v for k, v in sched.items()}
        report.params["trace"] = est.trace
    return V, est


def learn_real_mim(o: LabelOracle, cfg: LearnerConfig, report: ExperimentReport | None = None,
                   class_params: ResolvedParams | None = None, schedule: dict | None = None,
                   artifacts: dict | None = None):
    """Truncate, reduce by influence PCA, then least-squares Hermite regression on V.

    When ``artifacts`` is a dict it receives the influence estimate, the
    schedule and the regression samples, enough for :func:`replay_fit`.
    """
    if o.boolean:
        raise ParameterError("learn_real_mim needs a real-valued oracle")
    cp = class_params or resolve_class_params(cfg, o.target if isinstance(o.target, TargetSpec) else None)
    sched = schedule or _real_schedule(cfg, o.ambient_dim, cp)
    truncated = o.with_truncation(sched["label_bound"])
    V, est = _reduce(o, cfg, sched, truncated, report)
    with _Stage(report, "fit", "regression"):
        X, y = truncated.draw_samples(sched["fit_samples"], make_rng(cfg.seed, _RNG_FIT))
    _keep(artifacts, est, sched, X, y)
    return _fit(cfg, sched, V, X, y, report)


def learn_boolean_mim(o: LabelOracle, cfg: LearnerConfig, report: ExperimentReport | None = None,
                      class_params: ResolvedParams | None = None, schedule: dict | None = None,
                      artifacts: dict | None = None) -> BooleanHypothesis:
    """Reduce by influence PCA of the smoothed +-1 labels, then L1 regression and sign."""
    if not o.boolean:
        raise ParameterError("learn_boolean_mim needs a Boolean oracle")
    cp = class_params or resolve_class_params(cfg, o.target if isinstance(o.target, TargetSpec) else None)
    sched = schedule or _boolean_schedule(cfg, o.ambient_dim, cp)
    V, est = _reduce(o, cfg, sched, o, report)
    with _Stage(report, "fit", "regression"):
        X, y = o.draw_samples(sched["fit_samples"], make_rng(cfg.seed, _RNG_FIT))
    _keep(artifacts, est, sched, X, y)
    return _fit(cfg, sched, V, X, y, report)


def _keep(artifacts, est, sched, X, y) -> None:
    if artifacts is not None:
        artifacts.update({"influence": est, "schedule": dict(sched), "X": X, "y": y})


def _fit(cfg: LearnerConfig, sched: dict, V: Subspace, X, y, report: ExperimentReport | None):
    """Regression stage shared by the learners and by :func:`replay_fit`."""
    with _Stage(report, "fit", "regression"):
        degree = _fit_degree(V.dim, sched, cfg, report)
        if cfg.mode == "boolean_mim":
            h = l1_fit((X, y), V, degree, method=cfg.l1_method)
        else:
            h = l2_fit((X, y), V, degree)
            if cfg.clip_output:
                h.clip = sched["label_bound"]
    if report is not None:
        report.train_error = empirical_error(h, (X, y), "zero_one" if cfg.mode == "boolean_mim" else "l22")
    return h


def save_artifacts(artifacts: dict, out_dir) -> None:
    """Write influence.json, schedule.json and samples.npz for a later :func:`replay_fit`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "influence.json").write_text(json.dumps(artifacts["influence"].to_dict(), sort_keys=True, indent=2) + "\n")
    (out / "schedule.json").write_text(json.dumps(_jsonable(artifacts["schedule"]), sort_keys=True, indent=2) + "\n")
    np.savez(out / "samples.npz", X=artifacts["X"], y=artifacts["y"])


def load_artifacts(out_dir) -> dict:
    out = Path(out_dir)
    with np.load(out / "samples.npz") as npz:
        X, y = npz["X"], npz["y"]
    return {"influence": InfluenceEstimate.from_dict(json.loads((out / "influence.json").read_text())),
            "schedule": json.loads((out / "schedule.json").read_text()), "X": X, "y": y}


def replay_fit(artifacts, cfg: LearnerConfig):
    """Re-run subspace selection and regression from saved stage artifacts (a dict or a directory)."""
    if not isinstance(artifacts, dict):
        artifacts = load_artifacts(artifacts)
    sched = artifacts["schedule"]
    V = _select(artifacts["influence"], sched["eta"], None)
    return _fit(cfg, sched, V, artifacts["X"], artifacts["y"], None)


def _proper_config(cfg: LearnerConfig) -> ProperConfig:
    return ProperConfig(rho=cfg.rho, eta=cfg.eta, inner_samples=cfg.inner_samples, inner_cap=cfg.inner_cap,
                        outer_samples=cfg.outer_samples or 2000, erm_samples=cfg.fit_samples,
                        cover_resolution=cfg.cover_resolution, cover_cap=cfg.cover_cap, paired=cfg.paired,
                        workers=cfg.workers, seed=cfg.seed)


def _learn_proper(o, cfg: LearnerConfig, cp: ResolvedParams, report: ExperimentReport | None):
    pr = ProperReport()
    t0 = time.perf_counter()
    if cfg.mode == "proper_ltf":
        h = proper_learn_ltf(o, cfg.eps, cfg.delta, _proper_config(cfg), pr)
    else:
        M = float(cfg.M) if cfg.M != "auto" else float(cp.M if cp.M is not None else 1.0)
        if cfg.M == "auto" and isinstance(o.target, TargetSpec):
            M = float(np.max(np.linalg.norm(o.target.first_layer(), axis=1)))
        h = proper_learn_relu(o, cfg.eps, cfg.delta, M, _proper_config(cfg), pr)
    if report is not None:
        report.timings_ms["fit"] = 1000.0 * (time.perf_counter() - t0)
        report.dim_v = pr.dim_v
        report.eigenvalues = list(pr.eigenvalues)
        report.params = {"rho": pr.rho, "eta": pr.eta, "trace": pr.trace, "inner_samples": pr.inner_samples,
                         "outer_samples": pr.outer_samples, "erm_samples": pr.erm_samples,
                         "cover_size": pr.cover_size, "brute_force": pr.brute_force}
        report.train_error = pr.train_loss
        per = 2 if cfg.paired else 1
        report.planned_queries = 0 if pr.brute_force else per * pr.outer_samples * pr.inner_samples
        report.planned_samples = (0 if pr.brute_force else pr.outer_samples) + pr.erm_samples
    return h, pr.subspace


# --------------------------------------------------------------------------
# Experiments
# --------------------------------------------------------------------------


def _error_mode(mode: str) -> str:
    return "zero_one" if mode in ("boolean_mim", "proper_ltf") else "l22"


def _evaluate(o: LabelOracle, h, mode: str, n: int, seed: int) -> tuple[float, float]:
    """Test error of h and of the clean target against the corrupted labels, on the same points."""
    rng = make_rng(seed, _RNG_TEST)
    err_h = err_opt = 0.0
    chunk = 100_000
    for lo in range(0, n, chunk):
        m = min(chunk, n - lo)
        X = rng.standard_normal((m, o.ambient_dim))
        clean = o.clean(X)
        y = o.corruption.apply(X, clean)
        pred = np.asarray(h(X), dtype=float)
        if mode == "zero_one":
            sy = np.where(y >= 0, 1, -1)
            err_h += float(np.sum(np.where(pred >= 0, 1, -1) != sy))
            err_opt += float(np.sum(np.where(clean >= 0, 1, -1) != sy))
        else:
            err_h += float(np.sum((pred - y) ** 2))
            err_opt += float(np.sum((clean - y) ** 2))
    return err_h / n, err_opt / n


def run_config(data: dict, seed: int | None = None, deterministic: bool = False,
               budget_queries: int | None = None, budget_samples: int | None = None,
               artifacts: dict | None = None) -> tuple:
    """Run one experiment described by an already-parsed config dict.

    Returns ``(report, hypothesis)``. For the query learners, a dict passed as
    ``artifacts`` is filled with the stage outputs used by :func:`replay_fit`.
    """
    cfg = config_from_dict(data, seed, budget_queries, budget_samples)
    if deterministic:
        cfg.workers = 1
    ledger = BudgetLedger(cfg.budget_queries, cfg.budget_samples)
    o, target, frame = build_oracle(data, cfg.seed, ledger)
    cp = resolve_class_params(cfg, target)
    report = ExperimentReport(config=_jsonable(data), mode=cfg.mode, d=o.ambient_dim, k=cp.k, eps=cfg.eps,
                              seed=cfg.seed, error_mode=_error_mode(cfg.mode))
    handler = _WarningCollector()
    logging.getLogger("mimlearn").addHandler(handler)
    try:
        if cfg.mode in ("real_mim", "boolean_mim"):
            plan = planned_budget(cfg, o.ambient_dim, cp)
            report.planned_queries, report.planned_samples = plan["queries"], plan["samples"]
            learner = learn_real_mim if cfg.mode == "real_mim" else learn_boolean_mim
            h = learner(o, cfg, report, cp, plan["schedule"], artifacts)
            V = Subspace(np.asarray(h.poly.subspace.basis if isinstance(h, BooleanHypothesis) else h.subspace.basis))
        else:
            h, V = _learn_proper(o, cfg, cp, report)
        report.queries_used, report.samples_used = ledger.queries_used, ledger.samples_used
        planted = Subspace.span(frame, ambient_dim=o.ambient_dim)
        if V is not None and V.dim and planted.dim:
            report.principal_angles = principal_angles(V, planted).tolist()
        with _Stage(report, "evaluation", "evaluation"):
            n_test = int(data.get("test_samples", 100_000))
            report.test_error, report.opt_ub = _evaluate(o, h, report.error_mode, n_test, cfg.seed)
        report.excess = report.test_error - report.opt_ub
        report.hypothesis = h.to_dict()
    finally:
        logging.getLogger("mimlearn").removeHandler(handler)
    report.warnings = handler.messages
    return report, h


class _WarningCollector(logging.Handler):
    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record):
        self.messages.append(record.getMessage())


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc


def write_report(report: ExperimentReport, out_dir, deterministic: bool) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(include_timings=not deterministic))
    (out / "timings.json").write_text(json.dumps(_jsonable(report.timings_ms), sort_keys=True, indent=2) + "\n")
    write_csv([report], out / "report.csv")


def write_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in reports:
            w.writerow(r.csv_row())


def run_experiment(cfg, out_dir=None, seed: int | None = None, deterministic: bool = False,
                   budget_queries: int | None = None, budget_samples: int | None = None,
                   keep_artifacts: bool = False) -> ExperimentReport:
    """Run a config (path or dict); write report.json, timings.json and report.csv to ``out_dir``.

    In deterministic mode wall-clock timings are left out of report.json so
    that the same config and seed reproduce it byte for byte. With
    ``keep_artifacts`` the influence estimate, schedule and regression samples
    are also written to ``out_dir/artifacts``.
    """
    data = load_config(cfg) if isinstance(cfg, (str, os.PathLike)) else cfg
    artifacts = {} if keep_artifacts else None
    report, _ = run_config(data, seed, deterministic, budget_queries, budget_samples, artifacts)
    if out_dir is not None:
        write_report(report, out_dir, deterministic)
        if artifacts:
            save_artifacts(artifacts, Path(out_dir) / "artifacts")
    return report


def compare_baseline(cfg, out_dir=None, seed: int | None = None, deterministic: bool = False) -> tuple:
    """Query pipeline versus sample-only ambient Hermite regression at matched oracle access.

    The baseline draws as many samples as the pipeline used queries plus
    samples, and fits degree ``baseline.degree`` polynomials on all of R^d.
    """
    data = load_config(cfg) if isinstance(cfg, (str, os.PathLike)) else copy.deepcopy(cfg)
    ours, _ = run_config(data, seed, deterministic)
    lcfg = config_from_dict(data, seed)
    base_spec = data.get("baseline", {})
    o, target, frame = build_oracle(data, lcfg.seed, BudgetLedger())
    cp = resolve_class_params(lcfg, target)
    d = o.ambient_dim
    degree = base_spec.get("degree")
    if degree is None:
        if lcfg.mode == "boolean_mim":
            degree = degree_for("boolean", cp.gamma, lcfg.eps, lcfg.effective_degree_cap)
        else:
            degree = degree_for("real", cp.L, lcfg.eps, lcfg.effective_degree_cap)
    n = int(base_spec.get("samples", ours.queries_used + ours.samples_used))
    base = ExperimentReport(config=_jsonable(data), mode="baseline_" + lcfg.mode, d=d, k=cp.k, eps=lcfg.eps,
                            seed=lcfg.seed, error_mode=_error_mode(lcfg.mode))
    F = multi_index_count(d, degree)
    if F > n:
        msg = f"baseline has {F} ambient features but only {n} samples"
        log.warning(msg)
        base.warnings.append(msg)
    if F > int(base_spec.get("max_features", 50_000)):
        raise SizeError(f"baseline feature count {F} is too large; set baseline.degree")
    with _Stage(base, "fit", "baseline-regression"):
        X, y = o.draw_samples(n, make_rng(lcfg.seed, _RNG_FIT, 99))
        V = Subspace.full(d)
        if lcfg.mode == "boolean_mim":
            h = l1_fit((X, y), V, degree, method=lcfg.l1_method)
            base.train_error = empirical_error(h, (X, y), "zero_one")
        else:
            y = np.clip(y, -math.sqrt(cp.M / lcfg.eps), math.sqrt(cp.M / lcfg.eps)) if cp.M else y
            h = l2_fit((X, y), V, degree)
            base.train_error = empirical_error(h, (X, y), "l22")
    base.samples_used, base.queries_used = o.ledger.samples_used, o.ledger.queries_used
    base.dim_v = d
    base.params = {"degree": degree, "features": F, "samples": n}
    with _Stage(base, "evaluation", "evaluation"):
        base.test_error, base.opt_ub = _evaluate(o, h, base.error_mode, int(data.get("test_samples", 100_000)),
                                                 lcfg.seed)
    base.excess = base.test_error - base.opt_ub
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        pair = {"query_pipeline": ours.to_dict(not deterministic), "baseline": base.to_dict(not deterministic)}
        (out / "comparison.json").write_text(json.dumps(pair, sort_keys=True, indent=2) + "\n")
        write_csv([ours, base], out / "comparison.csv")
    return ours, base


def _sweep_job(args):
    data, deterministic = args
    report, _ = run_config(data, None, deterministic)
    return report


def sweep_configs(data: dict) -> list[dict]:
    """Expand a config's ``sweep`` section (lists of eps, seed, d, k) into single-run configs."""
    spec = data.get("sweep", {})
    base = {k: v for k, v in data.items() if k != "sweep"}
    eps_list = spec.get("eps", [base["eps"]])
    seeds = spec.get("seeds", [base.get("seed", 0)])
    ds = spec.get("d", [None])
    ks = spec.get("k", [None])
    runs = []
    for d in ds:
        for k in ks:
            for eps in eps_list:
                for s in seeds:
                    run = copy.deepcopy(base)
                    run["eps"], run["seed"] = eps, s
                    if d is not None or k is not None:
                        if "planted" not in run:
                            raise ConfigError("sweeping d or k needs a 'planted' target", ("sweep",))
                        if d is not None:
                            run["planted"]["d"] = d
                        if k is not None:
                            run["planted"]["k"] = k
                    runs.append(run)
    return runs


def sweep(cfg, out_dir=None, deterministic: bool = False, workers: int = 1) -> list[ExperimentReport]:
    """Run every configuration of a sweep; returns the reports and writes sweep.csv."""
    data = load_config(cfg) if isinstance(cfg, (str, os.PathLike)) else cfg
    runs = sweep_configs(data)
    for run in runs:
        validate_config(run)
    jobs = [(run, deterministic) for run in runs]
    if workers > 1 and not deterministic:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_sweep_job, jobs))
    else:
        reports = [_sweep_job(j) for j in jobs]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(reports, out / "sweep.csv")
    return reports


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    w.writeheader()
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


__all__ = [
    "CSV_COLUMNS",
    "ExperimentReport",
    "LearnerConfig",
    "MODES",
    "build_oracle",
    "compare_baseline",
    "config_from_dict",
    "learn_boolean_mim",
    "learn_real_mim",
    "load_config",
    "planned_budget",
    "planted_target",
    "reports_to_csv",
    "resolve_class_params",
    "run_config",
    "replay_fit",
    "run_experiment",
    "save_artifacts",
    "load_artifacts",
    "sweep",
    "sweep_configs",
    "validate_config",
]
