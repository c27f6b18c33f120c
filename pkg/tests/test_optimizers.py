import math

import numpy as np
import pytest

from arcm import (
    HyperParams,
    ModelSpec,
    ObjectiveModel,
    StopCriteria,
    SyntheticSpec,
    arcm_step,
    baseline_step,
    gen_synthetic,
    make_objective,
    make_state,
    momentum_search,
    quadratic_objective,
    rho,
    rosenbrock_objective,
    run,
    sigma_update,
)
from arcm.errors import ConfigurationError, NumericError

from conftest import rng_for


# ---------------------------------------------------------------- params


def test_hyperparams_validation_messages():
    with pytest.raises(ConfigurationError, match="gamma2 must satisfy"):
        HyperParams(gamma2=1.5)
    with pytest.raises(ConfigurationError, match="gamma2 must satisfy"):
        HyperParams(gamma2=0.3, gamma3=0.5)
    with pytest.raises(ConfigurationError, match="gamma1"):
        HyperParams(gamma1=1.0)
    with pytest.raises(ConfigurationError, match="eta"):
        HyperParams(eta1=0.9, eta2=0.1)
    with pytest.raises(ConfigurationError, match="sigma0"):
        HyperParams(sigma0=1e-6, sigma_min=1e-4)
    with pytest.raises(ConfigurationError, match="tau"):
        HyperParams(tau=1.0)
    with pytest.raises(ConfigurationError, match="alpha"):
        HyperParams(alpha1=-0.1)
    # zero momentum caps are allowed (ARC reduction)
    HyperParams(alpha1=0.0, alpha2=0.0)


def test_paper_defaults():
    p = HyperParams()
    assert (p.sigma0, p.tau, p.alpha1, p.alpha2) == (1.0, 0.5, 0.1, 1.0)
    assert (p.eta1, p.eta2) == (0.1, 0.9)
    assert p.krylov_max_dim == 50


# ---------------------------------------------------------------- rho


def test_rho_cases():
    assert rho(1.0, 0.5, 0.5) == 1.0
    assert rho(1.0, 1.2, 0.5) == pytest.approx(-0.4)
    assert rho(1.0, 0.95, 1e-18) == float("-inf")


# ---------------------------------------------------------------- sigma


def test_sigma_update_truth_table():
    p = HyperParams()
    assert sigma_update(1.0, 0.95, p) == 0.5      # very successful, gamma3
    assert sigma_update(1.0, 0.5, p) == 1.0       # successful, gamma2 = 1
    assert sigma_update(1.0, 0.05, p) == 2.0      # unsuccessful, gamma1
    assert sigma_update(1.5e-4, 0.95, p) == p.sigma_min  # floor binds


# ---------------------------------------------------------------- momentum


def test_momentum_zero_buffer_returns_beta_max():
    model = quadratic_objective(np.eye(2), np.zeros(2))
    p = HyperParams()
    s = np.array([0.3, 0.0])
    y = np.array([0.7, 0.0])
    f_y = model.value(y)
    beta, z, f_z = momentum_search(model, np.array([1.0, 0.0]), y, f_y,
                                   np.zeros(2), s, p)
    assert beta == min(p.tau, p.alpha1 * 0.3, p.alpha2 * 0.09)
    assert np.array_equal(z, y)
    assert f_z == f_y


def test_momentum_quadratic_cap_dominates_near_optimum():
    model = quadratic_objective(np.eye(2), np.zeros(2))
    p = HyperParams()  # tau=0.5, alpha1=0.1, alpha2=1.0
    s = np.array([1e-4, 0.0])
    y = np.array([1.0 - 1e-4, 0.0])
    beta, _, _ = momentum_search(model, np.array([1.0, 0.0]), y,
                                 model.value(y), np.zeros(2), s, p)
    assert beta == pytest.approx(1e-8, rel=1e-12)


def test_momentum_helps_with_short_step_toward_optimum():
    # overestimated penalty makes the step short; the buffer points at the
    # origin, so a positive beta strictly improves f
    model = quadratic_objective(np.eye(2), np.zeros(2))
    p = HyperParams(alpha1=10.0, alpha2=10.0)
    x = np.array([1.0, 0.0])
    s = np.array([-0.2, 0.0])
    y = x + s
    v_prev = np.array([-0.5, 0.0])
    beta, z, f_z = momentum_search(model, x, y, model.value(y), v_prev, s, p)
    assert beta > 0.0
    assert f_z < model.value(y)
    assert np.array_equal(z, x + beta * v_prev + s)


def test_momentum_never_increases_f():
    model = rosenbrock_objective(2)
    p = HyperParams(alpha1=5.0, alpha2=50.0, momentum_halvings=3)
    rng = rng_for(8)
    for _ in range(20):
        x = rng.standard_normal(2)
        s = 0.1 * rng.standard_normal(2)
        v_prev = rng.standard_normal(2)
        y = x + s
        f_y = model.value(y)
        beta, z, f_z = momentum_search(model, x, y, f_y, v_prev, s, p)
        assert f_z <= f_y
        assert 0.0 <= beta <= min(p.tau, p.alpha1 * np.linalg.norm(s),
                                  p.alpha2 * np.linalg.norm(s) ** 2)


# ---------------------------------------------------------------- steps


def test_arcm_first_step_on_quadratic_is_very_successful():
    d = 6
    model = quadratic_objective(np.eye(d), np.zeros(d))
    p = HyperParams(sigma0=1e-3, sigma_min=1e-6)
    state = make_state("ARCm", model, np.ones(d) / math.sqrt(d), p)
    state2, rec = arcm_step(state, model, p)
    assert rec.accepted == "very_success"
    assert rec.rho == pytest.approx(1.0, abs=1e-2)
    assert state2.sigma == max(p.sigma_min, p.gamma3 * p.sigma0)


def test_momentum_recursion_and_beta_bound():
    model = rosenbrock_objective(2)
    p = HyperParams()
    state = make_state("ARCm", model, np.array([-1.2, 1.0]), p)
    v = np.zeros(2)
    for _ in range(25):
        prev_v = state.v.copy()
        prev_x = state.x.copy()
        state, rec = arcm_step(state, model, p)
        if rec.accepted == "fail":
            assert np.array_equal(state.v, prev_v)
            assert np.array_equal(state.x, prev_x)
            assert rec.beta == 0.0
        else:
            snorm = rec.step_norm
            assert 0.0 <= rec.beta <= min(p.tau, p.alpha1 * snorm,
                                          p.alpha2 * snorm**2) + 1e-15
            # v_k = beta v_{k-1} + s_k reconstructed from the motion
            s = (state.x - prev_x) - rec.beta * prev_v
            assert np.allclose(state.v, rec.beta * prev_v + s, atol=1e-12)


def test_rosenbrock_run_is_monotone_and_converges():
    model = rosenbrock_objective(2)
    trace = run("ARCm", model, np.array([-1.2, 1.0]), HyperParams(),
                StopCriteria(grad_tol=1e-6, max_iter=100))
    fs = [r.f for r in trace.records] + [trace.final_f]
    assert all(fs[i + 1] <= fs[i] + 1e-12 for i in range(len(fs) - 1))
    assert trace.stop_reason == "grad_tol"
    assert trace.final_grad_norm <= 1e-6
    assert len(trace.records) <= 100


def test_stationary_start_stops_immediately():
    model = quadratic_objective(np.eye(3), np.zeros(3))
    trace = run("ARCm", model, np.zeros(3), HyperParams(),
                StopCriteria(grad_tol=1e-8, max_iter=10))
    assert trace.stop_reason == "grad_tol"
    assert len(trace.records) == 0


def test_arc_reduction_identity():
    model = rosenbrock_objective(2)
    x0 = np.array([-1.2, 1.0])
    stop = StopCriteria(grad_tol=1e-6, max_iter=100)
    ta = run("ARCm", model, x0, HyperParams(alpha1=0.0, alpha2=0.0), stop)
    tb = run("ARC", model, x0, HyperParams(), stop)
    assert len(ta.records) == len(tb.records)
    for ra, rb in zip(ta.records, tb.records):
        assert (ra.k, ra.f, ra.grad_norm, ra.sigma, ra.step_norm, ra.rho,
                ra.accepted, ra.beta, ra.momentum_sign, ra.krylov_dim,
                ra.model_decrease) == \
               (rb.k, rb.f, rb.grad_norm, rb.sigma, rb.step_norm, rb.rho,
                rb.accepted, rb.beta, rb.momentum_sign, rb.krylov_dim,
                rb.model_decrease)


def test_cr_monotone_on_quadratic():
    d = 5
    model = quadratic_objective(np.eye(d), np.zeros(d))
    # quadratic has Lipschitz-zero Hessian, any fixed penalty is safe
    trace = run("CR", model, rng_for(3).standard_normal(d),
                HyperParams(fixed_m=1.0), StopCriteria(grad_tol=1e-8,
                                                       max_iter=100))
    fs = [r.f for r in trace.records] + [trace.final_f]
    assert all(fs[i + 1] <= fs[i] + 1e-14 for i in range(len(fs) - 1))
    assert trace.stop_reason == "grad_tol"
    assert all(r.sigma == 1.0 for r in trace.records)


def test_crm_monotone_and_converges():
    model = rosenbrock_objective(2)
    trace = run("CRm", model, np.array([-1.2, 1.0]),
                HyperParams(fixed_m=500.0),
                StopCriteria(grad_tol=1e-5, max_iter=3000))
    fs = [r.f for r in trace.records] + [trace.final_f]
    assert all(fs[i + 1] <= fs[i] + 1e-12 for i in range(len(fs) - 1))
    assert trace.stop_reason == "grad_tol"
    assert any(r.beta > 0 for r in trace.records)


def test_tr_first_step_is_newton_on_quadratic():
    d = 4
    rng = rng_for(5)
    a = rng.standard_normal((d, d))
    h = a @ a.T + d * np.eye(d)
    b = rng.standard_normal(d)
    model = quadratic_objective(h, b)
    x0 = rng.standard_normal(d)
    p = HyperParams(tr_radius0=1e3, tr_radius_max=1e4)
    state = make_state("TR", model, x0, p)
    state2, rec = baseline_step("TR", state, model, p)
    newton = np.linalg.solve(h, h @ x0 - b)
    assert np.allclose(state2.x, x0 - newton, atol=1e-8)
    assert rec.rho == pytest.approx(1.0, abs=1e-9)
    assert rec.accepted == "very_success"


def test_tr_radius_update_rules():
    model = rosenbrock_objective(2)
    p = HyperParams(tr_radius0=1.0, tr_radius_max=4.0)
    trace = run("TR", model, np.array([-1.2, 1.0]), p,
                StopCriteria(grad_tol=1e-6, max_iter=200))
    assert trace.stop_reason == "grad_tol"
    radius = p.tr_radius0
    for rec in trace.records:
        assert rec.sigma == radius
        if rec.accepted == "fail":
            radius = 0.5 * radius
        elif rec.accepted == "very_success":
            radius = min(2.0 * radius, p.tr_radius_max)


# ---------------------------------------------------------------- run


def test_quadratic_deep_tolerance_run():
    model = quadratic_objective(np.eye(10), np.zeros(10))
    x0 = rng_for(5).standard_normal(10)
    trace = run("ARCm", model, x0, HyperParams(),
                StopCriteria(grad_tol=1e-10, max_iter=50))
    assert trace.stop_reason == "grad_tol"
    assert len(trace.records) <= 5


def test_max_iter_budget_gives_exactly_one_record():
    model = quadratic_objective(np.eye(4), np.zeros(4))
    trace = run("ARCm", model, np.ones(4), HyperParams(),
                StopCriteria(grad_tol=1e-14, max_iter=1))
    assert len(trace.records) == 1
    assert trace.stop_reason == "max_iter"


def test_run_determinism_excluding_wall_time():
    ds = gen_synthetic(SyntheticSpec(n=80, d=12, label_noise=0.05,
                                     task="classification", seed=3))
    model = make_objective(ModelSpec(kind="logistic_nonconvex", dataset=ds,
                                     chi=0.1))
    x0 = rng_for(1).standard_normal(12)
    stop = StopCriteria(grad_tol=1e-8, max_iter=200)
    t1 = run("ARCm", model, x0, HyperParams(), stop, solver="krylov")
    t2 = run("ARCm", model, x0, HyperParams(), stop, solver="krylov")
    assert len(t1.records) == len(t2.records)
    for a, b in zip(t1.records, t2.records):
        assert (a.k, a.f, a.grad_norm, a.sigma, a.step_norm, a.rho,
                a.accepted, a.beta, a.momentum_sign, a.krylov_dim,
                a.model_decrease) == \
               (b.k, b.f, b.grad_norm, b.sigma, b.step_norm, b.rho,
                b.accepted, b.beta, b.momentum_sign, b.krylov_dim,
                b.model_decrease)
    assert np.array_equal(t1.final_x, t2.final_x)


def test_stagnation_after_fifty_consecutive_failures():
    # a descent direction exists but every trial value is poisoned
    calls = {"n": 0}

    def value(x):
        calls["n"] += 1
        if calls["n"] <= 1:
            return float(x[0] ** 2)
        return float("nan")

    model = ObjectiveModel(dim=1, value=value,
                           gradient=lambda x: 2.0 * x,
                           hessian_vec=lambda x, v: 2.0 * v,
                           dense_hessian=lambda x: np.array([[2.0]]))
    trace = run("ARCm", model, np.array([1.0]), HyperParams(),
                StopCriteria(grad_tol=1e-8, max_iter=500))
    assert trace.stop_reason == "stagnation"
    assert len(trace.records) == 50
    assert all(r.accepted == "fail" for r in trace.records)


def test_nonfinite_objective_at_x0_raises():
    model = ObjectiveModel(dim=1, value=lambda x: float("inf"),
                           gradient=lambda x: np.zeros(1),
                           hessian_vec=lambda x, v: v)
    with pytest.raises(NumericError):
        run("ARCm", model, np.zeros(1), HyperParams(),
            StopCriteria(grad_tol=1e-6, max_iter=5))


def test_negative_curvature_escape_from_saddle():
    def value(x):
        return float(0.5 * x[0] ** 2 - 0.5 * x[1] ** 2 + 0.25 * x[1] ** 4)

    def grad(x):
        return np.array([x[0], -x[1] + x[1] ** 3])

    def dense(x):
        return np.array([[1.0, 0.0], [0.0, -1.0 + 3.0 * x[1] ** 2]])

    model = ObjectiveModel(dim=2, value=value, gradient=grad,
                           hessian_vec=lambda x, v: dense(x) @ v,
                           dense_hessian=dense, name="saddle")
    for solver in ("exact", "krylov"):
        trace = run("ARCm", model, np.zeros(2), HyperParams(),
                    StopCriteria(grad_tol=1e-8, max_iter=100), solver=solver)
        assert trace.final_f == pytest.approx(-0.25, abs=1e-8)


def test_lemma4_cubic_budget_on_traces():
    p = HyperParams()
    model = rosenbrock_objective(2)
    trace = run("ARCm", model, np.array([-1.2, 1.0]), p,
                StopCriteria(grad_tol=1e-6, max_iter=200))
    total = sum(r.step_norm**3 for r in trace.records if r.accepted != "fail")
    budget = 12.0 * (trace.records[0].f - trace.final_f) / (p.eta1 * p.sigma_min)
    assert total <= budget


def test_momentum_trial_values_recorded():
    ds = gen_synthetic(SyntheticSpec(n=100, d=10, label_noise=0.05,
                                     task="classification", seed=6))
    model = make_objective(ModelSpec(kind="logistic_nonconvex", dataset=ds,
                                     chi=0.1))
    trace = run("ARCm", model, 3.0 * rng_for(2).standard_normal(10),
                HyperParams(), StopCriteria(grad_tol=1e-8, max_iter=200))
    fs = [r.f for r in trace.records] + [trace.final_f]
    for i, rec in enumerate(trace.records):
        if rec.accepted != "fail":
            assert rec.f_trial is not None
            # momentum never undoes the accepted decrease: f(z) <= f(y)
            assert fs[i + 1] <= rec.f_trial
