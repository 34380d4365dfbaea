import numpy as np
import pytest
from scipy.linalg import solve_continuous_are

from wing_lqg.errors import DetectabilityError, ParameterError
from wing_lqg.kalman import (
    NoiseSpec,
    assemble_compensator,
    assemble_estimator,
    build_measurement,
    design_filter,
    match_spectra,
)
from wing_lqg.riccati import care_residual, solve_are
from wing_lqg.statespace import example_system


@pytest.fixture(scope="module")
def sys4():
    return example_system(4)


@pytest.fixture(scope="module")
def noise4():
    return NoiseSpec.default(4)


def test_measurement_rows(sys4):
    C = build_measurement(sys4.basis)
    assert np.allclose(C[0, 4:8], [2 * np.sin(m.nuL) for m in sys4.basis.bending])
    assert np.allclose(C[1, 12:16], [(-1.0) ** m for m in (1, 2, 3, 4)])
    assert np.count_nonzero(C[:, :4]) == 0 and np.count_nonzero(C[:, 8:12]) == 0


def test_noise_spec_validation():
    with pytest.raises(ParameterError):
        NoiseSpec(np.zeros((4, 1)), np.zeros((2, 2)))
    with pytest.raises(ParameterError):
        NoiseSpec.default(2, intensity=-1.0)
    assert NoiseSpec.default(2, n_extra=8).B_noise.shape == (16, 2)


def test_filter_matches_scipy_dual(sys4, noise4):
    filt = design_filter(sys4, noise4)
    V = noise4.D @ noise4.D.T
    W = noise4.B_noise @ noise4.B_noise.T
    ref = solve_continuous_are(sys4.A.T, sys4.C.T, W, V)
    assert np.max(np.abs(filt.P - ref)) < 1e-7 * np.max(np.abs(ref))
    assert np.allclose(filt.K, ref @ sys4.C.T @ np.linalg.inv(V), atol=1e-8)
    assert np.all(filt.error_poles.real < 0)
    _, rel = care_residual(sys4.A.T, sys4.C.T, W, V, filt.P)
    assert rel < 1e-8


def test_filter_reports_invisible_mode():
    s = example_system(4, twist_start=0)
    with pytest.raises(DetectabilityError) as exc:
        design_filter(s, NoiseSpec.default(4))
    assert exc.value.mode == "ζ3_1 (twist m=0)"


def test_estimator_matrix(sys4, noise4):
    filt = design_filter(sys4, noise4)
    est = assemble_estimator(sys4, filt)
    assert np.allclose(est.A_est, sys4.A - filt.K @ sys4.C)


def test_separation_principle(sys4, noise4):
    reg = solve_are(sys4.A, sys4.B, np.eye(16), np.eye(2))
    filt = design_filter(sys4, noise4)
    comp = assemble_compensator(sys4, reg, filt, noise4)
    assert comp.A.shape == (32, 32) and comp.noise_input.shape == (32, 4)
    union = np.r_[reg.closed_loop, filt.error_poles]
    assert match_spectra(comp.eigenvalues(), union) < 1e-8


def test_match_spectra():
    assert match_spectra([1, 2j], [2j, 1]) == 0.0
    assert match_spectra([1], [1, 2]) == np.inf
    assert match_spectra([], []) == 0.0
    assert match_spectra([0.0, 1.0], [0.1, 1.0]) == pytest.approx(0.1)
