import time

import numpy as np
import pytest
from scipy.linalg import solve_continuous_are

from wing_lqg.errors import (
    InsufficientDataError,
    NoStabilizingSolutionError,
    ParameterError,
    PolicyIterationError,
    StabilizabilityError,
)
from wing_lqg.modal import BeamParameters, build_basis
from wing_lqg.riccati import (
    ModalKernelIterate,
    WeightSpec,
    care_residual,
    decay_diagnostics,
    gain_from_kernel,
    initial_iterate,
    initial_iterate_bending,
    initial_iterate_torsion,
    is_detectable,
    is_stabilizable,
    kernel_gain_profile,
    policy_cost,
    policy_iterate,
    reconstruct_kernel,
    run_policy_iteration,
    solve_are,
)
from wing_lqg.statespace import build_modal_system, example_system


@pytest.fixture(scope="module")
def sys4():
    return example_system(4)


@pytest.fixture(scope="module")
def weights4():
    return WeightSpec.power_law(4, twist_start=1)


def test_solve_are_matches_scipy(sys4):
    Q, R = np.eye(16), np.eye(2)
    sol = solve_are(sys4.A, sys4.B, Q, R)
    ref = solve_continuous_are(sys4.A, sys4.B, Q, R)
    assert np.max(np.abs(sol.P - ref)) < 1e-7 * np.max(np.abs(ref))
    assert sol.relative_residual < 1e-10
    assert np.all(np.linalg.eigvalsh(sol.P) > -1e-10)
    assert np.all(sol.closed_loop.real < 0)
    assert np.allclose(sol.K, np.linalg.solve(R, sys4.B.T @ sol.P))


def test_scalar_closed_form():
    # a = 1, b = 1, q = 1, r = 1: p = 1 + sqrt(2)
    sol = solve_are([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    assert sol.P[0, 0] == pytest.approx(1 + np.sqrt(2), rel=1e-14)


def test_residual_helper():
    A, B, Q, R = np.array([[0.0]]), np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]])
    r, rel = care_residual(A, B, Q, R, np.array([[1.0]]))
    assert r == pytest.approx(0.0, abs=1e-15) and rel == pytest.approx(0.0, abs=1e-15)


def test_unstabilizable_pair_names_mode():
    A = np.diag([1.0, -1.0])
    B = np.array([[0.0], [1.0]])
    assert not is_stabilizable(A, B)
    with pytest.raises(StabilizabilityError) as exc:
        solve_are(A, B, np.eye(2), np.eye(1), labels=["x1", "x2"])
    assert exc.value.state_label == "x1"


def test_undetectable_pair():
    A = np.diag([1.0, -1.0])
    B = np.eye(2)
    Q = np.diag([0.0, 1.0])
    assert not is_detectable(A, np.sqrt(Q))
    with pytest.raises(StabilizabilityError):
        solve_are(A, B, Q, np.eye(2))


def test_imaginary_axis_hamiltonian_without_checks():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    with pytest.raises(NoStabilizingSolutionError):
        solve_are(A, B, np.zeros((2, 2)), np.eye(1), check=False)


def test_bad_inputs():
    with pytest.raises(ParameterError):
        solve_are(np.eye(2), np.ones((2, 1)), np.eye(2), -np.eye(1))
    with pytest.raises(ParameterError):
        solve_are(np.eye(2), np.ones((2, 1)), np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(1))
    with pytest.raises(ParameterError):
        WeightSpec.power_law(4, r_bend=8, r_twist=7, theorem_mode=True)
    WeightSpec.power_law(4, r_bend=10, r_twist=10, theorem_mode=True)


def test_weight_spec_shapes(weights4):
    assert weights4.N == 4 and weights4.Q().shape == (16, 16)
    w = WeightSpec.power_law(3, q=2.0, r_bend=2.0, r_twist=1.0, twist_start=0)
    assert np.allclose(w.q_bend[:, 0], [2.0, 0.5, 2.0 / 9])
    assert np.allclose(w.q_twist[:, 0], [2.0, 2.0, 1.0])
    assert np.allclose(WeightSpec.power_law(2, R=np.diag([2.0, 4.0]), B=(2.0, 1.0)).Gamma, np.diag([2.0, 0.25]))


def test_initial_iterate_solves_decoupled_scalar_problem():
    # with S_y = 0 a single torsion mode is an exact 2x2 ARE; the closed form
    # must reproduce its (3,4) and (4,4) entries
    params = BeamParameters(S_y=0.0)
    basis = build_basis(1.0, 1, twist_start=1)
    w = WeightSpec.power_law(1, twist_start=1)
    system = build_modal_system(params, basis)
    sub = np.ix_([2, 3], [2, 3])
    ref = solve_continuous_are(system.A[sub], system.B[[2, 3]][:, [1]], np.eye(2), np.eye(1))
    p33, p34, p44 = initial_iterate_torsion(0, w, params, basis)
    assert p34 == pytest.approx(ref[0, 1], rel=1e-12)
    assert p44 == pytest.approx(ref[1, 1], rel=1e-12)
    assert p33 > 0
    p11, p12, p22 = initial_iterate_bending(1, w, params, basis)
    assert p12 > 0 and p22 > 0 and p11 > 0


def test_rationalized_root_survives_tiny_weights():
    params = BeamParameters()
    basis = build_basis(1.0, 16)
    w = WeightSpec.power_law(16, r_bend=10, r_twist=10)
    _, p12, _ = initial_iterate_bending(16, w, params, basis)
    assert p12 > 0


def test_kernel_views_and_records(weights4):
    it = initial_iterate(weights4, BeamParameters(), build_basis(1.0, 4, twist_start=1))
    assert it.bend.shape == (4, 4, 2, 2)
    assert it.bend[1, 1, 0, 1] == it.Pi[1, 5]
    assert it.twist[2, 2, 1, 1] == it.Pi[14, 14]
    recs = list(it.records(twist_start=1))
    assert len(recs) == 3 * 16 * 4
    fam, a, b, i, j, _ = recs[-1]
    assert (fam, a, b, i, j) == ("cross", 4, 4, 2, 4)


def test_policy_iteration_converges_to_are(sys4, weights4):
    res = run_policy_iteration(weights4, sys4.params, sys4.basis, system=sys4)
    assert res.converged and len(res.iterates) < 20
    ref = solve_are(sys4.A, sys4.B, weights4.Q(), weights4.R)
    P = res.final.P_std(sys4.M)
    assert np.max(np.abs(P - ref.P)) < 1e-6 * np.max(np.abs(ref.P))
    assert np.allclose(gain_from_kernel(res.final, sys4, weights4), ref.K, atol=1e-8)


def test_policy_iteration_decoupled_path():
    s = example_system(3, S_y=0.0)
    w = WeightSpec.power_law(3, twist_start=1)
    res = run_policy_iteration(w, s.params, s.basis, system=s)
    ref = solve_continuous_are(s.A, s.B, w.Q(), w.R)
    assert np.max(np.abs(res.final.P_std(s.M) - ref)) < 1e-8 * np.max(np.abs(ref))


def test_policy_costs_do_not_increase(sys4, weights4):
    res = run_policy_iteration(weights4, sys4.params, sys4.basis, system=sys4)
    x0 = np.random.default_rng(3).standard_normal((5, 16))
    costs = np.array([policy_cost(it, sys4, weights4, x0) for it in res.iterates])
    assert np.all(np.diff(costs, axis=0) <= 1e-9 * costs[:-1])


def test_non_stabilizing_iterate_raises(sys4, weights4):
    zero = ModalKernelIterate(np.zeros((16, 16)))
    with pytest.raises(PolicyIterationError) as exc:
        policy_iterate(zero, weights4, sys4.params, sys4.basis, system=sys4)
    assert "ζ" in exc.value.pair
    assert np.all(np.isinf(policy_cost(zero, sys4, weights4, np.ones(16))))


def test_kernel_reconstruction_and_gain_profile(sys4, weights4):
    res = run_policy_iteration(weights4, sys4.params, sys4.basis, system=sys4)
    Pk = reconstruct_kernel(res.final, sys4.basis, 0.3, 0.7)
    Pk_t = reconstruct_kernel(res.final, sys4.basis, 0.7, 0.3)
    assert np.allclose(Pk, Pk_t.T)
    prof = kernel_gain_profile(res.final, sys4, weights4, np.linspace(0, 1, 5))
    assert prof.shape == (5, 2, 4)
    # displacement gains vanish at the clamped root
    assert np.allclose(prof[0, :, 0], 0.0, atol=1e-12)


def test_decay_diagnostics():
    N = 16
    params = BeamParameters()
    basis = build_basis(1.0, N)
    w = WeightSpec.power_law(N, r_bend=10, r_twist=10)
    rep = decay_diagnostics(initial_iterate(w, params, basis), w, basis)
    assert rep.hypotheses_met
    for key in ("P11", "P12", "P22"):
        assert rep[key].meets_order, rep[key]
    assert rep["P12"].status == "summable"
    with pytest.raises(InsufficientDataError):
        b3 = build_basis(1.0, 3)
        w3 = WeightSpec.power_law(3)
        decay_diagnostics(initial_iterate(w3, params, b3), w3, b3)


def test_are_runtime_16_states(sys4):
    t0 = time.perf_counter()
    solve_are(sys4.A, sys4.B, np.eye(16), np.eye(2))
    assert time.perf_counter() - t0 < 0.1


def test_rigid_twist_initial_iterate():
    # eta_0 = 0 with unit weights and constants: P34 = 1, P44 = sqrt(3), P33 = 1 * sqrt(3)
    params = BeamParameters()
    basis = build_basis(1.0, 1, twist_start=0)
    w = WeightSpec.power_law(1, twist_start=0)
    p33, p34, p44 = initial_iterate_torsion(0, w, params, basis)
    assert p34 == pytest.approx(1.0, rel=1e-15)
    assert p44 == pytest.approx(np.sqrt(3.0), rel=1e-15)
    assert p33 == pytest.approx(np.sqrt(3.0), rel=1e-15)
    with pytest.raises(ParameterError):
        initial_iterate_torsion(0, w, params, basis, p330_gamma="g33")
