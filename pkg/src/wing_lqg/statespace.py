"""Finite-dimensional modal model of the coupled bending-torsion beam.

The state is ``zeta = [zeta1; zeta2; zeta3; zeta4]`` with ``N`` coefficients
per block: bending displacement, bending velocity, twist angle and twist
rate.  Dynamics are kept in the implicit form ``M zeta' = F zeta + G u`` and
the explicit pair ``A = M^-1 F``, ``B = M^-1 G`` is cached.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .kalman import build_measurement
from .modal import BeamParameters, ModalBasis, build_basis


def state_labels(N: int) -> list[str]:
    return [f"ζ{b}_{k}" for b in range(1, 5) for k in range(1, N + 1)]


@dataclass(frozen=True)
class ModalSystem:
    """Modal state-space model.

    Attributes
    ----------
    N : int
        Modes per family; the state dimension is ``4 N``.
    M, F, G : ndarray
        Implicit-form matrices.
    A, B : ndarray
        ``M^-1 F`` and ``M^-1 G``.
    C : ndarray
        ``2 x 4N`` tip-rate measurement matrix.
    """

    params: BeamParameters
    basis: ModalBasis = field(repr=False)
    M: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    consistent_mass: bool = False

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def n_states(self) -> int:
        return 4 * self.basis.N

    @property
    def labels(self) -> list[str]:
        return state_labels(self.N)

    def block(self, k: int) -> slice:
        """Slice of state block ``k`` (1..4)."""
        N = self.N
        return slice((k - 1) * N, k * N)

    def mode_name(self, state_index: int) -> str:
        """Readable name of a state coordinate, e.g. ``zeta3_1 (twist m=0)``."""
        N = self.N
        blk, k = divmod(state_index, N)
        if blk < 2:
            tag = f"bend n={k + 1}"
        else:
            tag = f"twist m={self.basis.twist_label(k)}"
        return f"{self.labels[state_index]} ({tag})"

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)


def _inertia_coupling(basis: ModalBasis, consistent: bool):
    N = basis.N
    if not consistent:
        eye = np.eye(N)
        return eye, eye
    cross = basis.gram[:N, N:]
    return cross / basis.norms_bend[:, None], cross.T / basis.norms_twist[:, None]


def build_modal_system(
    params: BeamParameters, basis: ModalBasis, *, consistent_mass: bool = False
) -> ModalSystem:
    """Assemble ``M``, ``F``, ``G`` for the truncated modal expansion.

    With ``consistent_mass=False`` (default) the inertial coupling between
    bending and twist coefficients is the identity, i.e. coefficient ``n``
    of bending couples to coefficient ``n`` of twist.  The consistent option
    replaces it with normalized cross inner products ``<Phi_n, Theta_m>``.
    """
    if abs(basis.L - params.L) > 1e-12 * params.L:
        raise ParameterError(f"basis span {basis.L} differs from beam span {params.L}")
    N = basis.N
    n = 4 * N
    s1, s2, s3, s4 = (slice(k * N, (k + 1) * N) for k in range(4))
    lam = np.array([m.eigenvalue for m in basis.bending])
    eta = np.array([m.eigenvalue for m in basis.torsion])
    dphi0 = np.array([m.phi_prime_0 for m in basis.bending])
    theta0 = np.array([m.root_value for m in basis.torsion])

    F = np.zeros((n, n))
    F[s1, s2] = np.eye(N)
    F[s2, s1] = params.EI * np.diag(lam)
    F[s3, s4] = np.eye(N)
    F[s4, s3] = params.GJ * np.diag(eta)

    G = np.zeros((n, 2))
    G[s2, 0] = params.EI * dphi0 * params.B1
    G[s4, 1] = params.GJ * theta0 * params.B2

    c_bt, c_tb = _inertia_coupling(basis, consistent_mass)
    M = np.eye(n)
    M[s2, s2] = params.mu * np.eye(N)
    M[s2, s4] = -params.S_y * c_bt
    M[s4, s2] = -params.S_y * c_tb
    M[s4, s4] = params.I_y * np.eye(N)

    A = np.linalg.solve(M, F)
    B = np.linalg.solve(M, G)
    C = build_measurement(basis)
    for arr in (M, F, G, A, B, C):
        arr.setflags(write=False)
    return ModalSystem(params, basis, M, F, G, A, B, C, consistent_mass)


def example_system(N: int = 4, *, twist_start: int = 1, **beam) -> ModalSystem:
    """Unit-constant beam with ``S_y = 1/2`` on ``[0, 1]`` unless overridden."""
    values = dict(mu=1.0, EI=1.0, GJ=1.0, S_y=0.5, I_y=1.0, L=1.0)
    values.update(beam)
    params = BeamParameters(**values)
    return build_modal_system(params, build_basis(params.L, N, twist_start=twist_start))


def reconstruct_fields(system: ModalSystem, state, y) -> dict[str, np.ndarray]:
    """Physical fields from modal coefficients.

    Parameters
    ----------
    state : array_like, shape (4N,) or (T, 4N)
    y : array_like
        Span positions.

    Returns
    -------
    dict
        ``w``, ``w_t``, ``theta``, ``theta_t`` arrays of shape ``(T, len(y))``
        (or ``(len(y),)`` for a single state).
    """
    state = np.asarray(state, dtype=float)
    single = state.ndim == 1
    z = np.atleast_2d(state)
    if z.shape[1] != system.n_states:
        raise ParameterError(f"state has {z.shape[1]} entries, expected {system.n_states}")
    phi = system.basis.phi(y)
    theta = system.basis.theta(y)
    out = {
        "w": z[:, system.block(1)] @ phi.T,
        "w_t": z[:, system.block(2)] @ phi.T,
        "theta": z[:, system.block(3)] @ theta.T,
        "theta_t": z[:, system.block(4)] @ theta.T,
    }
    if single:
        out = {k: v[0] for k, v in out.items()}
    return out


def energy_matrix(system: ModalSystem) -> np.ndarray:
    """Symmetric ``W`` with modal energy ``E = 1/2 zeta^T W zeta``."""
    N = system.N
    W = np.zeros((4 * N, 4 * N))
    s1, s3 = system.block(1), system.block(3)
    W[s1, s1] = -system.F[system.block(2), s1]
    W[s3, s3] = -system.F[system.block(4), s3]
    vel = np.r_[np.arange(N, 2 * N), np.arange(3 * N, 4 * N)]
    W[np.ix_(vel, vel)] = system.M[np.ix_(vel, vel)]
    return W


def energy(system: ModalSystem, state) -> np.ndarray | float:
    """Modal energy of one state or of each row of a trajectory."""
    W = energy_matrix(system)
    z = np.asarray(state, dtype=float)
    if z.ndim == 1:
        return 0.5 * float(z @ W @ z)
    return 0.5 * np.einsum("ti,ij,tj->t", z, W, z)
