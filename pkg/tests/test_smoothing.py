import math

import numpy as np
import pytest
from scipy.stats import norm

from mimlearn.errors import BudgetExhaustedError, ParameterError
from mimlearn.gaussian_core import gauss_rule, hermite_features, make_rng
from mimlearn.oracle import BudgetLedger, LabelOracle, TargetSpec, eval_target
from mimlearn.smoothing import (
    SmoothingParams,
    antithetic_normals,
    exact_smoothed,
    gradient_sample_count,
    smoothed_gradient,
    smoothed_gradients,
    smoothed_value,
    smoothed_values,
    truncate_label,
)


def e(i, d):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def fn_oracle(f, d, boolean=False, ledger=None):
    return LabelOracle(f, ledger=ledger, boolean=boolean, ambient_dim=d)


def test_params_validation():
    with pytest.raises(ParameterError):
        SmoothingParams(0.0, 10)
    with pytest.raises(ParameterError):
        SmoothingParams(1.0, 10)
    with pytest.raises(ParameterError):
        SmoothingParams(0.5, 0)


@pytest.mark.parametrize("c, n", [(2.5, 1), (-0.3, 7), (1.0, 1000)])
def test_smoothed_value_of_constant(c, n):
    o = fn_oracle(lambda X: np.full(len(X), c), 3)
    assert smoothed_value(o, np.ones(3), SmoothingParams(0.4, n), 0) == pytest.approx(c, abs=1e-12)
    assert o.ledger.queries_used == n


@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9])
def test_exact_smoothed_linear(rho):
    w = np.array([0.6, -0.8])
    x = np.array([1.3, 0.4])
    val = exact_smoothed(lambda Z: Z @ w, x, rho)
    assert val == pytest.approx(math.sqrt(1 - rho**2) * (w @ x), abs=1e-12)


@pytest.mark.parametrize("x1", [-1.5, 0.0, 0.7, 2.2])
def test_exact_smoothed_hermite_eigenfunction(x1):
    h2 = lambda Z: hermite_features(Z, [(2,)])[:, 0]  # noqa: E731
    val = exact_smoothed(h2, np.array([x1]), 0.6)
    assert abs(val - 0.64 * (x1**2 - 1) / math.sqrt(2)) <= 1e-8


@pytest.mark.parametrize("rho", [0.25, 0.6])
def test_gradient_linear_in_expectation(rho):
    # E[y(c x + rho z) z] * c / rho per coordinate, by 1-d quadrature along each axis
    w = np.array([0.3, -1.1, 0.5])
    x = np.array([0.2, 1.0, -0.7])
    c = math.sqrt(1 - rho**2)
    rule = gauss_rule(40)
    expect = []
    for i in range(3):
        z = rule.nodes
        pts = c * x[None, :] + rho * np.outer(z, e(i, 3))
        expect.append(c / rho * np.dot(rule.weights, (pts @ w) * z))
    assert np.allclose(expect, c * w, atol=1e-8)


def test_gradient_of_constant_is_small():
    d, N, c, rho = 6, 400, 1.7, 0.3
    o = fn_oracle(lambda X: np.full(len(X), c), d)
    g = smoothed_gradient(o, np.ones(d), SmoothingParams(rho, N), 3)
    assert np.linalg.norm(g) <= 3 * c * math.sqrt(d / N) / rho


def test_ltf_derivative_at_zero():
    rho, N = 0.5, 100_000
    c = math.sqrt(1 - rho**2)
    o = LabelOracle(TargetSpec("ltf", weights=[[1.0]]))
    g = smoothed_gradient(o, np.zeros(1), SmoothingParams(rho, N), 11)[0]
    truth = c / rho * math.sqrt(2 / math.pi)
    # antithetic pairs are perfectly correlated here, so the effective count is N/2
    se = c / rho * math.sqrt(2.0 / N)
    assert abs(g - truth) <= 4 * se


def test_rho_zero_is_rejected():
    with pytest.raises(ParameterError):
        SmoothingParams(0.0, 5)


def test_gradient_sample_count_formula():
    n = gradient_sample_count(10, 1.0, 0.25, 0.05, 0.05)
    assert n == math.ceil(8 * 10 * math.log(400) / (0.0625 * 0.0025))
    a = gradient_sample_count(7, 2.0, 0.3, 0.1, 0.02)
    b = gradient_sample_count(7, 2.0, 0.3, 0.2, 0.02)
    assert abs(a / 4 - b) <= 1
    assert gradient_sample_count(3, 1.0, 0.5, 1.0, 1.0) == math.ceil(8 * 3 * math.log(6) / 0.25)
    assert gradient_sample_count(1, 1e-6, 0.99, 100.0, 1.0) >= 1


@pytest.mark.parametrize("field, values", [("d", [1, 2, 8]), ("M", [0.5, 1, 3]), ("inv_eps", [2, 5, 20]),
                                           ("inv_delta", [2, 10, 100]), ("inv_rho", [1.5, 4, 10])])
def test_gradient_sample_count_monotone(field, values):
    base = dict(d=4, M=1.0, inv_eps=5, inv_delta=10, inv_rho=4)
    counts = []
    for v in values:
        a = dict(base, **{field: v})
        counts.append(gradient_sample_count(a["d"], a["M"], 1 / a["inv_rho"], 1 / a["inv_eps"], 1 / a["inv_delta"]))
    assert counts == sorted(counts)


def test_planned_params():
    p = SmoothingParams.planned(10, 1.0, 0.25, 0.05, 0.05)
    assert p.inner_samples == gradient_sample_count(10, 1.0, 0.25, 0.05, 0.05)


@pytest.mark.parametrize("y, m, expected", [(3.7, 2, 2), (-0.5, 2, -0.5), (-9, 4, -4)])
def test_truncate_label(y, m, expected):
    assert truncate_label(y, m) == expected


def test_truncate_label_rejects_nonpositive():
    with pytest.raises(ParameterError):
        truncate_label(1.0, 0.0)


def test_antithetic_pairs():
    Z = antithetic_normals(make_rng(0), (3, 4), 6)
    assert Z.shape == (3, 6, 4)
    assert np.array_equal(Z[:, :3], -Z[:, 3:])
    assert antithetic_normals(make_rng(0), (2, 5), 7).shape == (2, 7, 5)


def test_budget_failure_counts_partial_queries():
    o = LabelOracle(TargetSpec("ltf", weights=[e(0, 3)]), ledger=BudgetLedger(query_cap=250))
    with pytest.raises(BudgetExhaustedError):
        smoothed_gradients(o, np.zeros((5, 3)), SmoothingParams(0.3, 100), 0)
    assert o.ledger.queries_used == 250


def test_results_do_not_depend_on_workers():
    o = LabelOracle(TargetSpec("relu", weights=[e(0, 5)]))
    X = make_rng(1).standard_normal((300, 5))
    p = SmoothingParams(0.3, 20_000)
    a = smoothed_gradients(o, X, p, 42, workers=1)
    b = smoothed_gradients(o, X, p, 42, workers=4)
    assert np.array_equal(a, b)


def test_large_inner_count_is_blocked_and_deterministic():
    o = LabelOracle(TargetSpec("relu", weights=[e(0, 4)]))
    p = SmoothingParams(0.5, 1_500_001)
    g1 = smoothed_gradient(o, np.ones(4), p, 5)
    g2 = smoothed_gradient(o, np.ones(4), p, 5)
    assert np.array_equal(g1, g2)
    assert o.ledger.queries_used == 2 * 1_500_001
    c = math.sqrt(0.75)
    assert np.linalg.norm(g1 - c * norm.cdf(c / 0.5) * e(0, 4)) <= 0.02


def _zoo(d):
    rng = make_rng(77)
    w = rng.standard_normal((3, d))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return [
        TargetSpec("relu", weights=[w[0]]),
        TargetSpec("ltf", weights=[w[1]], thresholds=[0.3]),
        TargetSpec("sum_relus", weights=w),
        TargetSpec("intersection_halfspaces", weights=w[:2]),
        TargetSpec("lipschitz_sim", weights=[w[2]], link="tanh"),
    ]


@pytest.mark.parametrize("rho", [0.1, 0.3, 0.6])
@pytest.mark.parametrize("idx", range(5))
def test_contraction(rho, idx):
    d = 4
    spec = _zoo(d)[idx]
    o = LabelOracle(spec)
    X = make_rng(idx).standard_normal((4000, d))
    p = SmoothingParams(rho, 32)
    # product of two independent estimates is unbiased for (T f)^2
    t1 = smoothed_values(o, X, p, 1)
    t2 = smoothed_values(o, X, p, 2)
    diff = t1 * t2 - o.labels(X) ** 2
    assert diff.mean() <= 4 * diff.std() / math.sqrt(len(diff))


@pytest.mark.parametrize("spec", [TargetSpec("ltf", weights=[[0.6, 0.8, 0.0]], thresholds=[0.2]),
                                  TargetSpec("intersection_halfspaces", weights=[[1.0, 0, 0], [0, 1.0, 0]])])
def test_boolean_lipschitz(spec):
    rho = 0.3
    o = LabelOracle(spec)
    rng = make_rng(5)
    p = SmoothingParams(rho, 20_000)
    for i in range(100):
        x = rng.standard_normal(3)
        x2 = x + 0.3 * rng.standard_normal(3)
        # common random numbers keep the difference quotient accurate
        a = smoothed_value(o, x, p, 1000 + i)
        b = smoothed_value(o, x2, p, 1000 + i)
        assert abs(a - b) / np.linalg.norm(x - x2) <= (1 + 0.05) / rho


def _smoothing_distance_targets(d):
    return [
        TargetSpec("relu", weights=[e(0, d)]),
        ("linear", e(1, d)),
        TargetSpec("sum_relus", weights=np.eye(d)[:3], thresholds=[0.0, 0.5, -0.5]),
    ]


@pytest.mark.parametrize("rho", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("idx", range(3))
def test_smoothing_distance(rho, idx):
    d = 4
    t = _smoothing_distance_targets(d)[idx]
    if isinstance(t, tuple):
        w = t[1]
        o = fn_oracle(lambda X: X @ w, d)
        grad2 = lambda X: np.full(len(X), w @ w)  # noqa: E731
    else:
        from mimlearn.oracle import target_gradient

        o = LabelOracle(t)
        grad2 = lambda X: np.sum(target_gradient(t, X) ** 2, axis=1)  # noqa: E731
    X = make_rng(10 + idx).standard_normal((20_000, d))
    f = o.labels(X)
    p = SmoothingParams(rho, 16)
    t1 = smoothed_values(o, X, p, 3)
    t2 = smoothed_values(o, X, p, 4)
    diff = (t1 - f) * (t2 - f) - 2 * rho**2 * grad2(X)
    assert diff.mean() <= 4 * diff.std() / math.sqrt(len(diff))


@pytest.mark.parametrize("rho", [0.05, 0.1, 0.3])
@pytest.mark.parametrize("theta", [0.0, 0.8])
def test_boolean_correlation(rho, theta):
    d = 3
    o = LabelOracle(TargetSpec("ltf", weights=[[0.0, 0.6, 0.8]], thresholds=[theta]))
    X = make_rng(3).standard_normal((20_000, d))
    vals = o.labels(X) * smoothed_values(o, X, SmoothingParams(rho, 16), 9)
    bound = 1 - 2 * math.sqrt(math.pi) * rho / math.sqrt(2 * math.pi)
    assert vals.mean() >= bound - 4 * vals.std() / math.sqrt(len(vals))


def _gradient_truth(kind, x, w, rho):
    c = math.sqrt(1 - rho**2)
    t = c * (w @ x) / rho
    if kind == "linear":
        return c * w
    if kind == "relu":
        return c * w * norm.cdf(t)
    return c * w * 2 * norm.pdf(t) / rho


@pytest.mark.parametrize("kind", ["linear", "relu", "ltf"])
def test_gradient_unbiased(kind):
    d, rho = 3, 0.4
    w = np.array([0.6, 0.0, 0.8])
    x = np.array([0.3, -1.0, 0.2])
    f = {"linear": lambda X: X @ w, "relu": lambda X: np.maximum(X @ w, 0), "ltf": lambda X: np.where(X @ w >= 0, 1.0, -1.0)}
    o = fn_oracle(f[kind], d, boolean=(kind == "ltf"))
    G = smoothed_gradients(o, np.tile(x, (10_000, 1)), SmoothingParams(rho, 8), 17)
    truth = _gradient_truth(kind, x, w, rho)
    se = G.std(axis=0) / math.sqrt(len(G))
    assert np.all(np.abs(G.mean(axis=0) - truth) <= 4 * se + 1e-12)


def test_exact_smoothed_matches_closed_form_relu():
    # at x = 0 the kink sits at z = 0, where the split rule is exact
    from mimlearn.gaussian_core import split_rule

    rho = 0.3
    val = exact_smoothed(lambda Z: np.maximum(Z[:, 0], 0.0), np.array([0.0]), rho, split_rule(100))
    assert abs(val - rho / math.sqrt(2 * math.pi)) <= 1e-10
