import numpy as np
import pytest

from helpers import make_matrix
from laborscope.exceptions import ConfigError, DataError, NumericError
from laborscope.factorization import (
    FitConfig,
    TopicModel,
    TopicNMF,
    fit_model,
    load_model,
    nndsvd_init,
    normalize,
    objective,
    save_model,
)


def random_nonneg(rng, r, o, density=0.7):
    x = rng.uniform(0, 10, size=(r, o))
    x[rng.random(size=x.shape) > density] = 0.0
    return x


# -------------------------------------------------------------- objective

def test_objective_hand_value():
    # residual is the 1x1 matrix [1]; half its squared norm is 0.5
    assert objective([[1.0]], [[0.0]], [[0.0]]) == 0.5


def test_objective_matches_double_loop(rng):
    x = rng.uniform(0, 5, size=(4, 6))
    w = rng.uniform(0, 1, size=(4, 2))
    h = rng.uniform(0, 1, size=(2, 6))
    resid = x - w @ h
    want = 0.5 * sum(resid[i, j] ** 2 for i in range(4) for j in range(6))
    assert objective(x, w, h) == pytest.approx(want, rel=1e-14)


def test_objective_shape_check():
    with pytest.raises(DataError, match="conform"):
        objective(np.ones((2, 2)), np.ones((2, 1)), np.ones((2, 2)))


# -------------------------------------------------------------- fit config

def test_fit_config_validation():
    FitConfig()
    with pytest.raises(ConfigError):
        FitConfig(k=0)
    with pytest.raises(ConfigError):
        FitConfig(max_iter=0)
    with pytest.raises(ConfigError):
        FitConfig(tol=0.0)
    with pytest.raises(ConfigError):
        FitConfig(solver="gd")
    with pytest.raises(ConfigError):
        FitConfig(init="zeros")


# ------------------------------------------------------------------ nndsvd

def test_nndsvd_shapes_and_strict_positivity(rng):
    x = random_nonneg(rng, 8, 12)
    w, h = nndsvd_init(x, 4)
    assert w.shape == (8, 4) and h.shape == (4, 12)
    # zeros are floored so multiplicative updates cannot lock them
    assert w.min() > 0 and h.min() > 0


def test_nndsvd_deterministic(rng):
    x = random_nonneg(rng, 6, 7)
    w1, h1 = nndsvd_init(x, 3)
    w2, h2 = nndsvd_init(x, 3)
    assert np.array_equal(w1, w2) and np.array_equal(h1, h2)


def test_nndsvd_rank_one_recovers_product():
    u = np.array([1.0, 2.0, 3.0])
    v = np.array([4.0, 0.5, 1.0, 2.0])
    x = np.outer(u, v)
    w, h = nndsvd_init(x, 1)
    assert np.allclose(w @ h, x, atol=1e-10)


def test_nndsvd_k_bounds(rng):
    x = random_nonneg(rng, 4, 5)
    with pytest.raises(ConfigError):
        nndsvd_init(x, 0)
    with pytest.raises(ConfigError):
        nndsvd_init(x, 5)


# --------------------------------------------------------------- estimator

def test_mu_objective_never_increases(rng):
    for _ in range(5):
        x = random_nonneg(rng, 12, 9)
        est = TopicNMF(k=3, solver="mu", max_iter=80, tol=1e-12)
        est.fit(x)
        trace = est.objective_trace_
        assert all(trace[i + 1] <= trace[i] * (1 + 1e-9) + 1e-15
                   for i in range(len(trace) - 1))


def test_trace_starts_at_initial_objective(rng):
    x = random_nonneg(rng, 6, 6)
    est = TopicNMF(k=2, max_iter=5, tol=1e-15)
    est.fit(x)
    w0, h0 = nndsvd_init(x, 2)
    assert est.objective_trace_[0] == pytest.approx(objective(x, w0, h0), rel=1e-14)


def test_hals_decreases_objective(rng):
    x = random_nonneg(rng, 10, 8)
    est = TopicNMF(k=3, solver="hals", max_iter=50, tol=1e-12, seed=1)
    est.fit(x)
    trace = est.objective_trace_
    assert trace[-1] < trace[0]
    assert est.components_.min() >= 0


def test_convergence_flag_and_iterations(rng):
    x = np.outer(rng.uniform(1, 2, 8), rng.uniform(1, 2, 5))
    est = TopicNMF(k=1, max_iter=500, tol=1e-10)
    est.fit(x)
    assert est.converged_
    assert est.n_iter_ < 500
    assert len(est.objective_trace_) == est.n_iter_ + 1


def test_fit_transform_returns_w(rng):
    x = random_nonneg(rng, 7, 6)
    est = TopicNMF(k=2, max_iter=100)
    w = est.fit_transform(x)
    assert w.shape == (7, 2)
    assert w.min() >= 0
    assert est.components_.shape == (2, 6)


def test_transform_solves_w_for_new_rows(rng):
    w_true = rng.uniform(0.5, 2, size=(9, 3))
    h_true = np.zeros((3, 12))
    for t in range(3):
        h_true[t, 4 * t:4 * t + 4] = rng.uniform(0.5, 1.5, 4)
    x = w_true @ h_true
    est = TopicNMF(k=3, max_iter=400, tol=1e-12)
    est.fit(x)
    w2 = est.transform(x)
    rel = np.linalg.norm(x - w2 @ est.components_) / np.linalg.norm(x)
    assert rel < 1e-3
    with pytest.raises(DataError, match="columns"):
        est.transform(x[:, :5])


def test_transform_requires_fit():
    with pytest.raises(DataError, match="fit"):
        TopicNMF(k=1).transform(np.ones((2, 2)))


def test_fit_rejects_bad_inputs(rng):
    with pytest.raises(DataError, match="zero"):
        TopicNMF(k=1).fit(np.zeros((3, 3)))
    with pytest.raises(ConfigError, match="exceeds"):
        TopicNMF(k=4).fit(np.ones((3, 3)))
    with pytest.raises(DataError):
        TopicNMF(k=1).fit(-np.ones((2, 2)))


def test_random_init_seeded(rng):
    x = random_nonneg(rng, 6, 6)
    a = TopicNMF(k=2, init="random", seed=5, max_iter=10, tol=1e-15)
    b = TopicNMF(k=2, init="random", seed=5, max_iter=10, tol=1e-15)
    c = TopicNMF(k=2, init="random", seed=6, max_iter=10, tol=1e-15)
    assert np.array_equal(a.fit_transform(x), b.fit_transform(x))
    assert not np.array_equal(a.fit_transform(x), c.fit_transform(x))


def test_estimator_get_params():
    est = TopicNMF(k=4, solver="hals")
    params = est.get_params()
    assert params["k"] == 4 and params["solver"] == "hals"


# ------------------------------------------------------------- TopicModel

def test_model_rejects_increasing_trace_under_mu():
    w, h = np.ones((2, 1)), np.ones((1, 2))
    with pytest.raises(NumericError, match="increased"):
        TopicModel(w=w, h=h, k=1, region_labels=("a", "b"),
                   occupation_labels=("x", "y"),
                   objective_trace=(1.0, 2.0), solver="mu")
    # hals makes no monotonicity promise
    TopicModel(w=w, h=h, k=1, region_labels=("a", "b"),
               occupation_labels=("x", "y"),
               objective_trace=(1.0, 2.0), solver="hals")


def test_model_validates_shapes_and_labels():
    w, h = np.ones((2, 2)), np.ones((2, 3))
    with pytest.raises(DataError):
        TopicModel(w=w, h=h, k=3, region_labels=("a", "b"),
                   occupation_labels=("x", "y", "z"), objective_trace=(1.0,))
    with pytest.raises(DataError):
        TopicModel(w=w, h=h, k=2, region_labels=("a",),
                   occupation_labels=("x", "y", "z"), objective_trace=(1.0,))
    with pytest.raises(DataError, match="negative"):
        TopicModel(w=w, h=h, k=2, region_labels=("a", "b"),
                   occupation_labels=("x", "y", "z"), objective_trace=(-1.0,))


def test_fit_model_on_labeled_matrix(rng):
    x = make_matrix(random_nonneg(rng, 6, 8))
    model = fit_model(x, FitConfig(k=2, max_iter=60))
    assert model.k == 2
    assert model.region_labels == x.region_labels
    assert model.final_objective == model.objective_trace[-1]
    assert model.n_regions == 6 and model.n_occupations == 8


# -------------------------------------------------------------- normalize

def test_normalize_hand_value():
    model = TopicModel(w=np.array([[1.0], [3.0]]), h=np.array([[2.0, 2.0]]),
                       k=1, region_labels=("a", "b"),
                       occupation_labels=("x", "y"), objective_trace=(1.0,))
    norm = normalize(model)
    assert norm.h.tolist() == [[0.5, 0.5]]
    assert norm.w.tolist() == [[4.0], [12.0]]
    assert np.allclose(norm.w @ norm.h, model.w @ model.h)


def test_normalize_idempotent_and_flags_zero_topics():
    w = np.array([[1.0, 2.0], [3.0, 4.0]])
    h = np.array([[1.0, 1.0], [0.0, 0.0]])
    model = TopicModel(w=w, h=h, k=2, region_labels=("a", "b"),
                       occupation_labels=("x", "y"), objective_trace=(1.0,))
    norm = normalize(model)
    assert norm.zero_topics == (2,)
    assert normalize(norm) is norm
    # zero row is left alone
    assert norm.h[1].tolist() == [0.0, 0.0]


def test_normalize_unit_l1_rows(rng):
    x = make_matrix(random_nonneg(rng, 8, 10))
    model = normalize(fit_model(x, FitConfig(k=3, max_iter=80)))
    sums = model.h.sum(axis=1)
    assert np.allclose(sums, 1.0, atol=1e-12)


# -------------------------------------------------------------- model I/O

def test_model_round_trip_exact(tmp_path, rng):
    x = make_matrix(random_nonneg(rng, 6, 9))
    model = fit_model(x, FitConfig(k=2, max_iter=40), year=2016)
    save_model(model, tmp_path / "m")
    back = load_model(tmp_path / "m")
    assert np.array_equal(back.w, model.w)
    assert np.array_equal(back.h, model.h)
    assert back.objective_trace == model.objective_trace
    assert back.year == 2016
    assert back.solver == model.solver
    assert back.converged == model.converged
    assert back.region_labels == model.region_labels


def test_load_model_missing_file(tmp_path):
    (tmp_path / "m").mkdir()
    with pytest.raises(DataError, match="w.csv"):
        load_model(tmp_path / "m")
