import math

import numpy as np
import pytest

import sessionlen as sl
from sessionlen.testing import approx, random_users


def _instance(seed, n_users=30, max_sessions=6, d=3, corruption=0.0):
    data = sl.simulate_sessions(n_users,
                                n_sessions=(1, max_sessions),
                                dim=d,
                                mean=0.0,
                                corruption_rate=corruption,
                                seed=seed)
    return data.x, data.y - data.y.mean(), data.user_ids


def _objective_by_loops(y, f, mu, s, users, lam, delta, omega):
    index = {u: i for i, u in enumerate(sorted(set(users)))}
    total = omega
    for k in range(len(y)):
        total += (y[k] - f[k] - mu[index[users[k]]] - s[k])**2
    total += lam * sum(m * m for m in mu)
    total += 2 * delta * sum(abs(v) for v in s)
    return total


def test_user_index():
    index = sl.UserIndex.from_ids(['b', 'a', 'b', 'c', 'b'])
    assert list(index.users) == ['a', 'b', 'c']
    np.testing.assert_array_equal(index.codes, [1, 0, 1, 2, 1])
    np.testing.assert_array_equal(index.counts, [1, 3, 1])
    np.testing.assert_allclose(index.user_sums([1, 2, 3, 4, 5]), [2, 9, 4])
    np.testing.assert_allclose(index.expand([10, 20, 30]),
                               [20, 10, 20, 30, 20])


def test_objective_by_hand():
    users = np.array(['a', 'a', 'b'], dtype=object)
    index = sl.UserIndex.from_ids(users)
    y = np.array([1.0, -2.0, 0.5])
    zero = np.zeros(3)
    assert sl.objective(y, y, np.zeros(2), zero, index, 1.0, 1.0) == 0.0
    assert sl.objective(y, zero, np.zeros(2), zero, index, 1.0,
                        math.inf) == approx(5.25)


@pytest.mark.parametrize('seed', range(5))
def test_objective_matches_loops(seed):
    rng = np.random.default_rng(seed)
    users = random_users(6, 4, seed=seed)
    n = len(users)
    index = sl.UserIndex.from_ids(users)
    y, f, s = rng.normal(size=n), rng.normal(size=n), rng.normal(size=n)
    mu = rng.normal(size=index.n_users)
    lam, delta, omega = 0.7, 1.3, 2.5
    assert sl.objective(y, f, mu, s, index, lam, delta,
                        omega) == approx(_objective_by_loops(
                            y, f, mu, s, users, lam, delta, omega),
                                         rel=1e-12)


def test_infinite_penalties_drop_terms():
    users = random_users(4, 3)
    index = sl.UserIndex.from_ids(users)
    y = np.random.default_rng(1).normal(size=len(users))
    zero = np.zeros(len(users))
    mu = np.zeros(index.n_users)
    assert sl.objective(y, zero, mu, zero, index, math.inf,
                        math.inf) == approx(float(np.dot(y, y)))
    # with s = 0 the robust objective equals the plain one
    assert sl.objective(y, zero, mu + 0.3, zero, index, 2.0,
                        5.0) == sl.objective(y, zero, mu + 0.3, zero, index,
                                             2.0, math.inf)


def test_huber_loss():
    assert sl.huber_loss(0.0, 1.0) == 0.0
    assert sl.huber_loss(2.0, 1.0) == approx(3.0)
    assert sl.huber_loss(-2.0, 1.0) == approx(3.0)
    a = np.linspace(-1.5, 1.5, 31)
    np.testing.assert_array_equal(sl.huber_loss(a, 1.5), a * a)


def test_mu_step():
    index = sl.UserIndex.from_ids(['a', 'a', 'b'])
    mu = sl.mu_step(np.array([1.0, 3.0, 4.0]), np.zeros(3), index, 2.0)
    np.testing.assert_allclose(mu, [1.0, 4.0 / 3])
    r = np.array([0.5, -1.0, 2.0])
    np.testing.assert_array_equal(sl.mu_step(r, r, index, 1.0), [0.0, 0.0])
    np.testing.assert_allclose(sl.mu_step(r, np.zeros(3), index, 1e-12),
                               [-0.25, 2.0])
    np.testing.assert_array_equal(
        sl.mu_step(r, np.zeros(3), index, math.inf), [0.0, 0.0])


def test_s_step():
    index = sl.UserIndex.from_ids(['a', 'b'])
    np.testing.assert_array_equal(
        sl.s_step(np.array([0.5, -1.0]), np.zeros(2), index, 2.0), [0, 0])
    np.testing.assert_allclose(
        sl.s_step(np.array([5.0, -4.0]), np.array([0.0, 1.0]), index, 2.0),
        [3.0, -3.0])
    np.testing.assert_array_equal(
        sl.s_step(np.array([9.0, 9.0]), np.zeros(2), index, math.inf),
        [0.0, 0.0])


def test_s_step_residuals_bounded():
    rng = np.random.default_rng(3)
    users = random_users(10, 5)
    index = sl.UserIndex.from_ids(users)
    r = rng.normal(scale=4, size=len(users))
    mu = rng.normal(size=index.n_users)
    s = sl.s_step(r, mu, index, 1.5)
    eta = r - index.expand(mu)
    assert np.all(np.abs(eta - s) <= 1.5 + 1e-12)


@pytest.mark.parametrize('seed', range(100))
def test_corruption_minimized_out_is_huber(seed):
    rng = np.random.default_rng(seed)
    users = random_users(5, 6, seed=seed)
    index = sl.UserIndex.from_ids(users)
    y = rng.normal(scale=3, size=len(users))
    f = rng.normal(size=len(users))
    mu = rng.normal(size=index.n_users)
    lam, delta = rng.uniform(0.1, 5), rng.uniform(0.1, 3)
    s = sl.s_step(y - f, mu, index, delta)
    joint = sl.objective(y, f, mu, s, index, lam, delta, 0.4)
    huber = sl.huber_objective(y, f, mu, index, lam, delta, 0.4)
    assert joint == approx(huber, rel=1e-10, abs=1e-10)
    # any other s does no better
    other = s + rng.normal(scale=0.1, size=len(s))
    assert sl.objective(y, f, mu, other, index, lam, delta, 0.4) >= joint


def test_bcd_without_oracle_is_model1():
    users = random_users(40, 6, seed=2)
    y = np.random.default_rng(2).normal(size=len(users))
    y = y - y.mean()
    cfg = sl.BcdConfig(lam=1.7)
    model = sl.bcd_fit(np.zeros((len(y), 0)), y, users, sl.OracleSpec.none(),
                       cfg)
    vc = sl.VarianceComponents(1.0, 1.7, 0.0)
    fit = sl.model1_fit_arrays(y, users, vc)
    np.testing.assert_allclose(model.user_effects.to_numpy(),
                               fit.means.to_numpy(),
                               rtol=1e-12)
    assert list(model.user_effects.index) == list(fit.means.index)
    assert model.converged
    assert model.n_iter == 2


@pytest.mark.parametrize('seed', range(3))
def test_bcd_ridge_reaches_joint_minimizer(seed):
    x, y, users = _instance(seed)
    alpha, lam = 2.0, 1.5
    cfg = sl.BcdConfig(lam=lam, eps=1e-14, max_iters=5000)
    model = sl.bcd_fit(x, y, users, sl.OracleSpec.ridge(alpha), cfg)
    exact = sl.augmented_ridge_solve(x, y, users, alpha, lam)
    assert model.final_objective == approx(exact.objective, rel=1e-6)
    np.testing.assert_allclose(model.oracle.beta, exact.beta, atol=1e-4)
    np.testing.assert_allclose(model.user_effects.to_numpy(),
                               exact.user_effects.to_numpy(),
                               atol=1e-4)


def test_augmented_solution_is_stationary():
    x, y, users = _instance(7)
    alpha, lam = 0.5, 3.0
    exact = sl.augmented_ridge_solve(x, y, users, alpha, lam)
    index = sl.UserIndex.from_ids(users)
    mu = exact.user_effects.to_numpy()
    resid = y - x @ exact.beta - index.expand(mu)
    np.testing.assert_allclose(x.T @ resid, alpha * exact.beta, atol=1e-9)
    np.testing.assert_allclose(index.user_sums(resid), lam * mu, atol=1e-9)


def test_bcd_infinite_lambda_is_plain_ridge():
    x, y, users = _instance(4)
    model = sl.bcd_fit(x, y, users, sl.OracleSpec.ridge(1.0),
                       sl.BcdConfig(lam=math.inf))
    expected = sl.ridge_solve(sl.precompute_gram(x), x.T @ y, 1.0).beta
    np.testing.assert_allclose(model.oracle.beta, expected, rtol=1e-12)
    assert np.all(model.user_effects.to_numpy() == 0)
    assert model.n_iter == 1
    # a very large finite lambda approaches the same fit
    big = sl.bcd_fit(x, y, users, sl.OracleSpec.ridge(1.0),
                     sl.BcdConfig(lam=1e9, eps=1e-12, max_iters=50))
    np.testing.assert_allclose(big.oracle.beta, expected, atol=1e-6)
    assert np.max(np.abs(big.user_effects.to_numpy())) < 1e-6


@pytest.mark.parametrize('seed', range(50))
def test_bcd_objective_monotone(seed):
    x, y, users = _instance(seed, corruption=0.1)
    kinds = [
        sl.OracleSpec.ridge(1.0),
        sl.OracleSpec.lasso(0.5),
        sl.OracleSpec.none(),
    ]
    spec = kinds[seed % 3]
    delta = math.inf if seed % 2 else 0.8
    cfg = sl.BcdConfig(lam=2.0, delta=delta, eps=1e-10, max_iters=200)
    model = sl.bcd_fit(x, y, users, spec, cfg)
    trace = np.asarray(model.objective_trace)
    assert np.all(np.diff(trace) <= 1e-8 * np.maximum(1.0, np.abs(trace[:-1])))


def test_bcd_default_stopping_rule():
    # the covariate is constant within each user, so f and mu trade off
    # slowly and several iterations are needed
    rng = np.random.default_rng(12)
    c = rng.normal(size=50)
    users = np.repeat(np.array([f'u{i:02d}' for i in range(50)], dtype=object),
                      10)
    x = np.repeat(c, 10)[:, None]
    y = 3 * x[:, 0] + rng.normal(scale=0.01, size=len(users))
    alpha = float(x[:, 0] @ x[:, 0])
    cfg = sl.BcdConfig(lam=1.0)
    assert cfg.eps == 0.01
    model = sl.bcd_fit(x, y, users, sl.OracleSpec.ridge(alpha), cfg)
    trace = model.objective_trace
    assert model.converged
    assert model.n_iter == len(trace) >= 3
    assert abs(trace[-1] - trace[-2]) / trace[-2] <= 0.01
    assert abs(trace[-2] - trace[-3]) / trace[-3] > 0.01


def test_bcd_fixed_point():
    x, y, users = _instance(11, corruption=0.1)
    spec = sl.OracleSpec.ridge(1.0)
    cfg = sl.BcdConfig(lam=2.0, delta=1.0, eps=1e-14, max_iters=5000)
    solver = sl.OracleSolver(x)
    model = sl.bcd_fit(x, y, users, spec, cfg, solver=solver)
    index = sl.UserIndex.from_ids(users)
    mu = model.user_effects.to_numpy()
    s = model.corruption
    refit = solver.fit(spec, y - index.expand(mu) - s)
    np.testing.assert_allclose(refit.beta, model.oracle.beta, atol=1e-6)
    f = model.oracle.predict(x)
    np.testing.assert_allclose(sl.mu_step(y - f, s, index, 2.0), mu,
                               atol=1e-6)


def test_bcd_robust_absorbs_corruption():
    data = sl.simulate_sessions(200,
                                n_sessions=(3, 8),
                                dim=2,
                                corruption_rate=0.05,
                                corruption_scale=8.0,
                                seed=3)
    y = data.y - data.y.mean()
    model = sl.bcd_fit(data.x, y, data.user_ids, sl.OracleSpec.ridge(1.0),
                       sl.BcdConfig(lam=1.0, delta=2.0))
    corrupted = data.corruption > 0
    assert np.mean(model.corruption[corrupted] > 0) > 0.9
    assert np.mean(model.corruption[~corrupted] != 0) < 0.2


class _CountingSolver(sl.OracleSolver):
    calls = 0

    def fit(self, spec, z, warm_start=None):
        self.calls += 1
        return super().fit(spec, z, warm_start)


def test_boosted_without_user_effects_is_one_oracle_call():
    x, y, users = _instance(5)
    solver = _CountingSolver(x)
    spec = sl.OracleSpec.boosted(sl.GbtParams(n_trees=10, max_depth=3))
    model = sl.bcd_fit(x, y, users, spec,
                       sl.BcdConfig(lam=math.inf, delta=math.inf),
                       solver=solver)
    assert solver.calls == 1
    direct = sl.gbt_fit(x, y, spec.gbt)
    np.testing.assert_array_equal(model.oracle.predict(x),
                                  sl.gbt_predict(direct, x))


def test_bcd_boosted_with_user_effects():
    x, y, users = _instance(6, n_users=60)
    spec = sl.OracleSpec.boosted(sl.GbtParams(n_trees=10, max_depth=2))
    model = sl.bcd_fit(x, y, users, spec, sl.BcdConfig(lam=2.0))
    assert model.n_iter >= 2
    assert model.oracle.penalty() == 0.0
    assert np.any(model.user_effects.to_numpy() != 0)


def test_linear_objective_rise_is_an_error():
    x, y, users = _instance(8)

    class _Worsening(sl.OracleSolver):
        def fit(self, spec, z, warm_start=None):
            fitted = super().fit(spec, z, warm_start)
            fitted.beta = fitted.beta + 0.5 * self.calls
            self.calls += 1
            return fitted

        calls = 0

    with pytest.raises(sl.ConvergenceError, match='rose'):
        sl.bcd_fit(x, y, users, sl.OracleSpec.ridge(1.0),
                   sl.BcdConfig(lam=1.0, eps=1e-12), solver=_Worsening(x))


def test_predict_log():
    x, y, users = _instance(9)
    model = sl.bcd_fit(x, y, users, sl.OracleSpec.ridge(1.0),
                       sl.BcdConfig(lam=1.0))
    user = users[0]
    row = x[0]
    expected = float(np.dot(model.oracle.beta, row)) + model.user_effects[user]
    assert sl.predict_log(model, row, user) == approx(expected, rel=1e-12)
    assert sl.predict_log(model, row, 'stranger') == approx(
        float(np.dot(model.oracle.beta, row)), rel=1e-12)
    many = sl.predict_log_many(model, x[:3], ['stranger', user, user])
    assert many[0] == approx(float(x[0] @ model.oracle.beta))
    with pytest.raises(sl.SchemaMismatchError):
        sl.predict_log(model, np.zeros(x.shape[1] + 1), user)


def test_predict_log_zero_oracle():
    users = np.array(['a', 'a', 'b'], dtype=object)
    model = sl.bcd_fit(np.zeros((3, 0)), np.array([1.0, 2.0, -3.0]), users,
                       sl.OracleSpec.none(), sl.BcdConfig(lam=1.0))
    assert sl.predict_log(model, np.zeros(0), 'a') == model.user_effects['a']


def test_bcd_config_dict():
    cfg = sl.BcdConfig(lam=math.inf, delta=2.0, eps=1e-3, max_iters=9)
    d = cfg.to_dict()
    assert d['lam'] is None
    assert sl.BcdConfig.from_dict(d) == cfg
    assert cfg.robust
    with pytest.raises(AssertionError):
        sl.BcdConfig(lam=0.0)


def test_oracle_spec_dict():
    for spec in (sl.OracleSpec.ridge(2.0), sl.OracleSpec.lasso(0.1),
                 sl.OracleSpec.boosted(sl.GbtParams(n_trees=3)),
                 sl.OracleSpec.none()):
        assert sl.OracleSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(AssertionError):
        sl.OracleSpec('ridge')
    with pytest.raises(AssertionError):
        sl.OracleSpec('forest')
