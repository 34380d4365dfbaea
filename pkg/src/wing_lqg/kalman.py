"""Tip-rate measurement, steady-state Kalman filter and LQG compensator.

The sensors measure bending and twist rate at the tip::

    psi = C zeta + D w,   C = [[Phi_n(L) on zeta2], [Theta_m(L) on zeta4]]

and the process noise enters through ``B_noise``.  The filter Riccati
equation is the dual of the regulator one, solved here by passing the
transposed data to :func:`~wing_lqg.riccati.solve_are`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DetectabilityError, ParameterError, StabilizabilityError
from .modal import ModalBasis
from .riccati import RiccatiSolution, solve_are, uncontrollable_modes


def build_measurement(basis: ModalBasis) -> np.ndarray:
    """``2 x 4N`` matrix mapping the modal state to tip bending and twist rates."""
    N = basis.N
    C = np.zeros((2, 4 * N))
    C[0, N:2 * N] = [m.tip_value for m in basis.bending]
    C[1, 3 * N:4 * N] = [m.tip_value for m in basis.torsion]
    return C


@dataclass(frozen=True)
class NoiseSpec:
    """Process-noise input ``B_noise`` (n x q) and measurement-noise factor ``D`` (2 x 2)."""

    B_noise: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if D.shape != (2, 2):
            raise ParameterError("D must be 2x2")
        try:
            np.linalg.cholesky(D @ D.T)
        except np.linalg.LinAlgError:
            raise ParameterError("D D^T must be positive definite") from None
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "B_noise", np.atleast_2d(np.asarray(self.B_noise, dtype=float)))

    @classmethod
    def default(cls, N: int, *, intensity: float = 1.0, d11: float = 1.0, d22: float = 1.0,
                n_extra: int = 0) -> "NoiseSpec":
        """Unit disturbance on every bending-rate and twist-rate coefficient.

        ``n_extra`` appends zero rows for additional (e.g. aerodynamic) states.
        """
        if intensity < 0:
            raise ParameterError("noise intensity must be non-negative")
        Bn = np.zeros((4 * N + n_extra, 2))
        Bn[N:2 * N, 0] = intensity
        Bn[3 * N:4 * N, 1] = intensity
        return cls(Bn, np.diag([d11, d22]))


@dataclass(frozen=True)
class FilterDesign:
    """Steady-state filter: error covariance ``P``, gain ``K`` (n x 2), error poles ``eig(A - K C)``."""

    P: np.ndarray
    K: np.ndarray
    error_poles: np.ndarray
    riccati: RiccatiSolution = field(repr=False)


def _name(system, idx: int) -> str:
    if hasattr(system, "mode_name"):
        return system.mode_name(idx)
    return f"state {idx}"


def design_filter(system, noise: NoiseSpec) -> FilterDesign:
    """Steady-state Kalman filter for ``system`` (any object with ``A`` and ``C``).

    Raises
    ------
    DetectabilityError
        If a measured column is numerically zero for some mode, or a
        marginally stable or unstable mode is invisible to the sensors.
    StabilizabilityError
        If ``(A, B_noise)`` is not stabilizable.
    """
    A = np.asarray(system.A, dtype=float)
    C = np.asarray(system.C, dtype=float)
    Bn = noise.B_noise
    if Bn.shape[0] != A.shape[0]:
        raise ParameterError(f"B_noise has {Bn.shape[0]} rows, system has {A.shape[0]} states")
    basis = getattr(system, "basis", None)
    if basis is not None:
        for m in basis.bending:
            if abs(m.tip_value) < 1e-6 * np.sqrt(m.norm_sq):
                raise DetectabilityError("tip sensor is blind to", f"bending mode n={m.index}")
    bad = uncontrollable_modes(A.T, C.T)
    if bad:
        s, vec = bad[0]
        raise DetectabilityError(
            f"(A, C) is not detectable, eigenvalue {s:.6g} is unobservable",
            _name(system, int(np.argmax(np.abs(vec)))),
        )
    bad = uncontrollable_modes(A, Bn)
    if bad:
        s, vec = bad[0]
        raise StabilizabilityError("(A, B_noise) is not stabilizable", s, _name(system, int(np.argmax(np.abs(vec)))))
    V = noise.D @ noise.D.T
    sol = solve_are(A.T, C.T, Bn @ Bn.T, V, check=False)
    P = np.array(sol.P)
    K = np.linalg.solve(V, C @ P).T
    poles = np.linalg.eigvals(A - K @ C)
    for arr in (P, K, poles):
        arr.setflags(write=False)
    return FilterDesign(P, K, poles, sol)


@dataclass(frozen=True)
class Estimator:
    """``zhat' = A_est zhat + B u + K psi`` with innovations ``psi - C zhat``."""

    A_est: np.ndarray
    B: np.ndarray
    K: np.ndarray
    C: np.ndarray


def assemble_estimator(system, filt: FilterDesign) -> Estimator:
    A = np.asarray(system.A)
    C = np.asarray(system.C)
    return Estimator(A - filt.K @ C, np.asarray(system.B), filt.K, C)


@dataclass(frozen=True)
class Compensator:
    """Plant plus estimator closed loop.

    State ``[zeta; zhat]``, control ``u = -K_reg zhat``.  ``noise_input`` maps
    ``[process noise (q); measurement noise (2)]`` into the augmented state.
    """

    A: np.ndarray
    noise_input: np.ndarray
    K_reg: np.ndarray
    K_filt: np.ndarray
    C: np.ndarray
    D: np.ndarray
    n_plant: int

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)


def assemble_compensator(system, regulator: RiccatiSolution, filt: FilterDesign, noise: NoiseSpec) -> Compensator:
    """Close the loop ``u = -K_reg zhat`` around plant and estimator."""
    A = np.asarray(system.A)
    B = np.asarray(system.B)
    C = np.asarray(system.C)
    Kr = np.asarray(regulator.K)
    Kf = np.asarray(filt.K)
    n = A.shape[0]
    Acl = np.block([[A, -B @ Kr], [Kf @ C, A - B @ Kr - Kf @ C]])
    q = noise.B_noise.shape[1]
    G = np.zeros((2 * n, q + 2))
    G[:n, :q] = noise.B_noise
    G[n:, q:] = Kf @ noise.D
    return Compensator(Acl, G, Kr, Kf, C, noise.D, n)


def match_spectra(a, b) -> float:
    """Largest distance between two eigenvalue multisets under optimal pairing.

    Returns ``inf`` when the sizes differ.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        return float("inf")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())
