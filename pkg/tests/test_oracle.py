import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimlearn.errors import BudgetExhaustedError, DimensionMismatchError, ParameterError
from mimlearn.gaussian_core import make_rng
from mimlearn.oracle import (
    BudgetLedger,
    CorruptionSpec,
    LabelOracle,
    TargetSpec,
    class_parameters,
    draw_sample,
    eval_target,
    opt_error,
    query,
    random_unit_vectors,
    target_gradient,
)


def e(i, d):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def ltf(d=5, theta=0.0):
    return TargetSpec("ltf", weights=[e(0, d)], thresholds=[theta])


@pytest.mark.parametrize(
    "spec, x, expected",
    [
        (TargetSpec("relu", weights=[e(0, 4)]), [2.0, 0.3, -1.0, 5.0], 2.0),
        (ltf(4), [-0.5, 1.0, 1.0, 1.0], -1.0),
    ],
)
def test_eval_target_examples(spec, x, expected):
    assert eval_target(spec, np.array(x)) == expected


@pytest.mark.parametrize("t", [-3.2, -0.1, 0.0, 0.7, 11.0])
def test_sum_relus_is_abs(t):
    spec = TargetSpec("sum_relus", weights=[e(0, 3), -e(0, 3)])
    assert eval_target(spec, np.array([t, 0.4, -2.0])) == pytest.approx(abs(t), abs=1e-15)


def test_eval_target_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        eval_target(ltf(4), np.zeros(3))


def test_non_finite_parameter_rejected():
    with pytest.raises(ParameterError):
        TargetSpec("relu", weights=[[np.nan, 1.0]])


def test_declared_k_must_match_rank():
    with pytest.raises(ParameterError):
        TargetSpec("sum_relus", weights=[e(0, 3), 2 * e(0, 3)], k=2)
    assert TargetSpec("sum_relus", weights=[e(0, 3), e(1, 3)], k=2).relevant_subspace().dim == 2


def test_weight_bound_enforced():
    with pytest.raises(ParameterError):
        TargetSpec("relu", weights=[2 * e(0, 3)], bound=1.0)


def test_deep_net_bounds_enforced():
    W1 = np.eye(3)[:2] * 3.0
    with pytest.raises(ParameterError):
        TargetSpec("deep_relu_net", layers=[W1, np.ones((1, 2))], bound=2.0)
    with pytest.raises(ParameterError):
        TargetSpec("deep_relu_net", layers=[np.eye(3), np.ones((1, 3))], width_bound=2)


def test_function_of_halfspaces_truth_table():
    spec = TargetSpec("function_of_halfspaces", weights=[e(0, 2), e(1, 2)], truth_table=[-1, 1, 1, -1])
    X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    assert eval_target(spec, X).tolist() == [-1.0, 1.0, 1.0, -1.0]  # XOR


def test_lowdim_ptf():
    spec = TargetSpec("lowdim_ptf", weights=[e(0, 3)], thresholds=[1.0], poly_terms=[[[2], 1.0]])
    assert eval_target(spec, np.array([[2.0, 0, 0], [0.5, 0, 0]])).tolist() == [1.0, -1.0]


def test_query_examples():
    o = LabelOracle(TargetSpec("relu", weights=[e(0, 3)]), CorruptionSpec("hash_flip", rate=0.5, seed=3),
                    boolean=False)
    x = np.array([0.3, -1.2, 0.8])
    assert query(o, x) == query(o, x)
    assert o.ledger.queries_used == 2
    clean = LabelOracle(TargetSpec("relu", weights=[e(0, 3)]))
    assert query(clean, x) == eval_target(clean.target, x)


def test_query_cap():
    o = LabelOracle(ltf(), ledger=BudgetLedger(query_cap=5))
    for _ in range(5):
        o.query(np.ones(5))
    with pytest.raises(BudgetExhaustedError):
        o.query(np.ones(5))
    assert o.ledger.queries_used == 5


def test_partial_batch_is_counted():
    o = LabelOracle(ltf(), ledger=BudgetLedger(query_cap=7))
    o.query_batch(np.ones((4, 5)))
    with pytest.raises(BudgetExhaustedError):
        o.query_batch(np.ones((4, 5)))
    assert o.ledger.queries_used == 7


def test_draw_sample_examples():
    o = LabelOracle(ltf(6), CorruptionSpec("hash_flip", rate=0.1, seed=9))
    a = [draw_sample(o, make_rng(4)) for _ in range(1)]
    b = [draw_sample(o, make_rng(4)) for _ in range(1)]
    assert np.array_equal(a[0][0], b[0][0]) and a[0][1] == b[0][1]
    r1, r2 = make_rng(8), make_rng(8)
    seq1 = [draw_sample(o, r1) for _ in range(5)]
    seq2 = [draw_sample(o, r2) for _ in range(5)]
    assert all(np.array_equal(p[0], q[0]) and p[1] == q[1] for p, q in zip(seq1, seq2))

    clean = LabelOracle(ltf(6))
    _, y = clean.draw_samples(10_000, make_rng(5))
    assert abs(y.mean()) <= 0.05
    X, y = o.draw_samples(10_000, make_rng(6))
    assert abs(np.mean(y != o.clean(X)) - 0.1) <= 0.01


@pytest.mark.parametrize("rate", [0.01, 0.05, 0.1, 0.2])
def test_hash_flip_rate(rate):
    o = LabelOracle(ltf(8), CorruptionSpec("hash_flip", rate=rate, seed=21))
    X = make_rng(31).standard_normal((100_000, 8))
    assert abs(np.mean(o.labels(X) != o.clean(X)) - rate) <= 0.01


def test_opt_error_examples():
    none = LabelOracle(ltf(5))
    assert opt_error(none, "zero_one", 10_000, make_rng(1)) == 0.0
    flip = LabelOracle(ltf(5), CorruptionSpec("hash_flip", rate=0.05, seed=2))
    assert abs(opt_error(flip, "zero_one", 100_000, make_rng(2)) - 0.05) <= 0.01
    relu = LabelOracle(TargetSpec("relu", weights=[e(0, 5)]),
                       CorruptionSpec("additive_bounded", bound=0.1, direction=e(1, 5)))
    assert abs(opt_error(relu, "l22", 100_000, make_rng(3)) - 0.01) <= 0.003
    assert relu.ledger.queries_used == 0 and relu.ledger.samples_used == 0


@pytest.mark.parametrize(
    "spec, expected",
    [
        (TargetSpec("relu", weights=[e(0, 4)]), (math.sqrt(3), 1.0, 1, None)),
        (TargetSpec("sum_relus", weights=[e(0, 4), e(1, 4), e(2, 4)]), (3.0, 3.0, 3, None)),
        (TargetSpec("intersection_halfspaces", weights=np.eye(6)[:4]), (None, None, 4, math.sqrt(math.log(4)))),
        (ltf(4), (None, None, 1, 1 / math.sqrt(2 * math.pi))),
    ],
)
def test_class_parameters_examples(spec, expected):
    cp = class_parameters(spec)
    M, L, k, gamma = expected
    assert cp.k == k
    for got, want in ((cp.M, M), (cp.L, L), (cp.gamma, gamma)):
        if want is None:
            assert got is None
        else:
            assert got == pytest.approx(want, rel=1e-12)


def test_function_semantics_under_all_corruptions():
    d = 4
    rng = make_rng(7)
    X = rng.standard_normal((50, d))
    configs = [
        (ltf(d), CorruptionSpec("region_flip", direction=e(1, d), threshold=0.5)),
        (ltf(d), CorruptionSpec("hash_flip", rate=0.3, seed=5)),
        (TargetSpec("relu", weights=[e(0, d)]), CorruptionSpec("additive_bounded", bound=0.2, shape="hash")),
        (TargetSpec("relu", weights=[e(0, d)]), CorruptionSpec("additive_bounded", bound=0.2, shape="cos",
                                                                 direction=e(2, d), frequency=3.0)),
        (TargetSpec("relu", weights=[e(0, d)]), CorruptionSpec("replace_region", direction=e(3, d), value=2.0)),
    ]
    for target, corr in configs:
        o = LabelOracle(target, corr)
        first = o.query_batch(X)
        for _ in range(100):
            assert np.array_equal(o.query_batch(X), first)
        if target.is_boolean:
            assert set(np.unique(first)) <= {-1.0, 1.0}
        else:
            assert np.all(np.isfinite(first))


def test_boolean_oracle_rejects_real_corruption():
    with pytest.raises(ParameterError):
        LabelOracle(ltf(), CorruptionSpec("additive_bounded", bound=0.1, shape="hash"))


@settings(max_examples=50, deadline=None)
@given(ops=st.lists(st.tuples(st.sampled_from(["q", "qb", "s"]), st.integers(1, 20)), max_size=30))
def test_budget_exactness(ops):
    o = LabelOracle(ltf(3))
    rng = make_rng(0)
    nq = ns = 0
    for kind, n in ops:
        if kind == "q":
            for _ in range(n):
                o.query(np.zeros(3))
            nq += n
        elif kind == "qb":
            o.query_batch(np.zeros((n, 3)))
            nq += n
        else:
            o.draw_samples(n, rng)
            ns += n
    assert (o.ledger.queries_used, o.ledger.samples_used) == (nq, ns)


@pytest.mark.parametrize("seed", range(6))
def test_variance_identity_sum_relus(seed):
    rng = make_rng(seed)
    d = int(rng.integers(2, 11))
    k = int(rng.integers(1, 9))
    spec = TargetSpec("sum_relus", weights=random_unit_vectors(rng, k, d), thresholds=rng.normal(0, 0.5, k))
    X = rng.standard_normal((100_000, d))
    g2 = np.sum(target_gradient(spec, X) ** 2, axis=1)
    f2 = eval_target(spec, X) ** 2
    diff = g2 - 2 * f2
    assert diff.mean() <= 4 * diff.std() / math.sqrt(len(diff))


@pytest.mark.parametrize("seed", range(4))
def test_deep_net_gradient_bound(seed):
    rng = make_rng(seed)
    d = 6
    widths = [d, 5, 4, 1]
    layers = [rng.standard_normal((widths[i + 1], widths[i])) / 2 for i in range(3)]
    spec = TargetSpec("deep_relu_net", layers=layers)
    bound = math.prod(np.linalg.norm(W, 2) * math.sqrt(W.shape[0]) for W in layers)
    X = rng.standard_normal((100, d))
    h = 1e-6
    for x in X:
        fd = np.array([(eval_target(spec, x + h * e(i, d)) - eval_target(spec, x - h * e(i, d))) / (2 * h)
                       for i in range(d)])
        assert np.linalg.norm(fd) <= bound + 1e-6
        assert np.linalg.norm(target_gradient(spec, x)[0]) <= bound + 1e-9


def test_target_gradient_kink_is_right_derivative():
    spec = TargetSpec("relu", weights=[e(0, 2)])
    assert target_gradient(spec, np.zeros(2))[0].tolist() == [1.0, 0.0]


def test_spec_json_round_trip():
    t = TargetSpec("linear_comb_relus", weights=[e(0, 3), e(1, 3)], signs=[1, -1], bound=1.0)
    c = CorruptionSpec("additive_bounded", bound=0.1, direction=e(2, 3), shape="cos", frequency=2.0)
    t2 = TargetSpec.from_dict(t.to_dict())
    c2 = CorruptionSpec.from_dict(c.to_dict())
    X = make_rng(0).standard_normal((20, 3))
    assert np.array_equal(eval_target(t, X), eval_target(t2, X))
    assert np.array_equal(c.apply(X, np.zeros(20)), c2.apply(X, np.zeros(20)))
