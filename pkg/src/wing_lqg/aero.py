"""Jones approximation of Wagner unsteady aerodynamics and the combined wing model.

Sign conventions: plunge ``h = w`` is positive up, angle of attack
``alpha = theta`` is positive nose-up, lift is positive up.

Each bending and torsion mode carries a two-state aerodynamic lag::

    xi_(1:2, n)' = A_j xi_(1:2, n) - B_j zeta2_n
    xi_(3:4, m)' = A_j xi_(3:4, m) + B_j (U + b (1/2 - a)) zeta3_m

State ordering of the combined system is
``[zeta1, zeta2, zeta3, zeta4, xi1, xi2, xi3, xi4]`` with ``N`` entries each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditionedBasisError, ParameterError
from .modal import GRAM_CONDITION_LIMIT, ModalBasis
from .statespace import ModalSystem, state_labels


@dataclass(frozen=True)
class AeroParameters:
    """Half chord ``b``, elastic-axis offset ``a``, air density and freestream speed."""

    b: float = 0.5
    a: float = 0.0
    rho_inf: float = 0.0889
    U_inf: float = 45.0

    def __post_init__(self):
        if not (self.b > 0 and self.rho_inf > 0 and self.U_inf >= 0):
            raise ParameterError("need b > 0, rho_inf > 0 and U_inf >= 0")
        if not all(math.isfinite(v) for v in (self.b, self.a, self.rho_inf, self.U_inf)):
            raise ParameterError("aerodynamic parameters must be finite")

    @property
    def U_eff(self) -> float:
        """Coefficient of ``alpha`` in the aerodynamic input."""
        return self.U_inf + self.b * (0.5 - self.a)


@dataclass(frozen=True)
class JonesModel:
    A: np.ndarray = field(default_factory=lambda: np.array([[0.0, 1.0], [-0.0137, -0.3455]]))
    B: np.ndarray = field(default_factory=lambda: np.array([[0.0], [1.0]]))
    C: np.ndarray = field(default_factory=lambda: np.array([[0.0068, 0.1080]]))
    D: float = 0.5

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.linalg.eigvals(self.A).real)

    def step_response(self, t) -> np.ndarray:
        """Output for a unit step input, from the closed-form matrix exponential."""
        t = np.asarray(t, dtype=float)
        Ainv_B = np.linalg.solve(self.A, self.B)
        w, V = np.linalg.eig(self.A)
        Vinv = np.linalg.inv(V)
        # x(t) = A^-1 (e^{At} - I) B
        out = np.empty(t.shape)
        for idx, ti in np.ndenumerate(t):
            eAt = (V * np.exp(w * ti)) @ Vinv
            x = (eAt.real - np.eye(2)) @ Ainv_B
            out[idx] = (self.C @ x).item() + self.D
        return out


def aero_input(params: AeroParameters, h_dot, alpha):
    """Aerodynamic input ``-h_dot + (U + b (1/2 - a)) alpha``."""
    return -h_dot + params.U_eff * alpha


def lift_per_span(params: AeroParameters, h_dd, alpha, alpha_d, alpha_dd, h_d, psi_a):
    """Lift per unit span.  Linear in all inputs; arrays broadcast."""
    b, a, rho, U = params.b, params.a, params.rho_inf, params.U_inf
    apparent = rho * math.pi * b * (-h_dd + U * alpha_d - b * a * alpha_dd)
    quasi = math.pi * rho * U * (-h_d + U * alpha + b * (0.5 - a) * alpha_d)
    return apparent + quasi - 2.0 * math.pi * b * rho * U * psi_a


def moment_per_span(params: AeroParameters, h_dd, alpha, alpha_d, alpha_dd, h_d, psi_a):
    """Pitching moment per unit span about the elastic axis."""
    b, a, rho, U = params.b, params.a, params.rho_inf, params.U_inf
    apparent = rho * math.pi * b**2 * (-a * h_dd + (a - 0.5) * U * alpha_d - b * (a**2 + 0.125) * alpha_dd)
    quasi = math.pi * b * rho * U * (a + 0.5) * (-h_d + U * alpha + b * (0.5 - a) * alpha_d)
    return apparent + quasi - 2.0 * math.pi * b * rho * U * (a + 0.5) * psi_a


@dataclass(frozen=True)
class AeroBlock:
    """Aerodynamic lag states driven by the beam.

    ``xi' = A xi + drive @ zeta``; ``psi_coeffs = out_xi @ xi + out_zeta @ zeta``
    gives the aerodynamic output field coefficients on ``[Phi_1..Phi_N, Theta..]``.
    """

    A: np.ndarray
    drive: np.ndarray
    out_xi: np.ndarray
    out_zeta: np.ndarray
    N: int


def build_aero_modal(params: AeroParameters, jones: JonesModel, basis: ModalBasis) -> AeroBlock:
    N = basis.N
    I = np.eye(N)
    Aj, Bj, Cj = jones.A, jones.B, jones.C
    Apair = np.kron(Aj, I)
    A = np.zeros((4 * N, 4 * N))
    A[:2 * N, :2 * N] = Apair
    A[2 * N:, 2 * N:] = Apair
    drive = np.zeros((4 * N, 4 * N))
    # zeta2 -> (xi1, xi2); zeta3 -> (xi3, xi4)
    drive[:2 * N, N:2 * N] = -np.kron(Bj, I)
    drive[2 * N:, 2 * N:3 * N] = params.U_eff * np.kron(Bj, I)
    out_xi = np.zeros((2 * N, 4 * N))
    out_xi[:N, :2 * N] = np.kron(Cj, I)
    out_xi[N:, 2 * N:] = np.kron(Cj, I)
    out_zeta = np.zeros((2 * N, 4 * N))
    out_zeta[:N, N:2 * N] = -jones.D * I
    out_zeta[N:, 2 * N:3 * N] = jones.D * params.U_eff * I
    return AeroBlock(A, drive, out_xi, out_zeta, N)


def aero_labels(N: int) -> list[str]:
    return [f"ξ{b}_{k}" for b in range(1, 5) for k in range(1, N + 1)]


@dataclass(frozen=True)
class CombinedSystem:
    """Beam plus aerodynamic lag states, dimension ``8 N``."""

    beam: ModalSystem
    jones: JonesModel
    aero_params: AeroParameters
    aero: AeroBlock = field(repr=False)
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    coupling: str = "one-way"

    @property
    def N(self) -> int:
        return self.beam.N

    @property
    def n_states(self) -> int:
        return 8 * self.beam.N

    @property
    def labels(self) -> list[str]:
        return state_labels(self.N) + aero_labels(self.N)

    @property
    def basis(self) -> ModalBasis:
        return self.beam.basis

    def mode_name(self, idx: int) -> str:
        n = self.beam.n_states
        if idx < n:
            return self.beam.mode_name(idx)
        return self.labels[idx]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)


def _family_projector(basis: ModalBasis, family: str) -> np.ndarray:
    """Map from nodal values to coefficients of one family (``N x n_nodes``)."""
    N = basis.N
    sl = slice(0, N) if family == "bend" else slice(N, 2 * N)
    gram = basis.gram[sl, sl]
    cond = float(np.linalg.cond(gram))
    if cond > GRAM_CONDITION_LIMIT:
        raise IllConditionedBasisError(cond)
    E = basis.phi(basis.nodes) if family == "bend" else basis.theta(basis.nodes)
    return np.linalg.solve(gram, E.T * basis.weights)


def _force_maps(comb_beam: ModalSystem, aero: AeroBlock, params: AeroParameters, jones: JonesModel):
    """Modal lift and moment as linear maps of the state and of its derivative."""
    basis = comb_beam.basis
    N = basis.N
    n = 8 * N
    y = basis.nodes
    Ephi, Eth = basis.phi(y), basis.theta(y)

    def sel(block):  # block 0..7 of the combined state
        S = np.zeros((N, n))
        S[:, block * N:(block + 1) * N] = np.eye(N)
        return S

    h_d = Ephi @ sel(1)
    alpha = Eth @ sel(2)
    alpha_d = Eth @ sel(3)
    coeffs = np.hstack([aero.out_zeta, aero.out_xi])  # psi coefficients from state
    psi = Ephi @ coeffs[:N] + Eth @ coeffs[N:]
    zero = np.zeros_like(h_d)
    h_dd_acc = Ephi @ sel(1)
    alpha_dd_acc = Eth @ sel(3)
    lift_x = lift_per_span(params, zero, alpha, alpha_d, zero, h_d, psi)
    lift_dx = lift_per_span(params, h_dd_acc, zero, zero, alpha_dd_acc, zero, zero)
    mom_x = moment_per_span(params, zero, alpha, alpha_d, zero, h_d, psi)
    mom_dx = moment_per_span(params, h_dd_acc, zero, zero, alpha_dd_acc, zero, zero)
    Pb = _family_projector(basis, "bend")
    Pt = _family_projector(basis, "twist")
    return Pb @ lift_x, Pb @ lift_dx, Pt @ mom_x, Pt @ mom_dx


def assemble_combined(
    beam: ModalSystem,
    aero: AeroBlock,
    coupling: str,
    basis: ModalBasis,
    params: AeroParameters,
    jones: JonesModel | None = None,
) -> CombinedSystem:
    """Combined ``8 N`` model.

    ``coupling="one-way"``: the beam drives the aerodynamic states and is not
    affected by them, so the state matrix is block lower triangular.

    ``coupling="two-way"``: lift is projected onto the bending family and
    added to the bending-momentum rows, moment is projected onto the torsion
    family and added to the torsion-momentum rows.  Acceleration terms of the
    closures enter the mass matrix.  This closure is a modelling choice of
    this package and is not taken from a reference model.
    """
    jones = jones or JonesModel()
    if coupling not in ("one-way", "two-way"):
        raise ParameterError(f"coupling must be 'one-way' or 'two-way', got {coupling!r}")
    if basis.N != beam.N or aero.N != beam.N:
        raise ParameterError("beam, aero block and basis disagree on N")
    N = beam.N
    nb = 4 * N
    n = 8 * N
    M = np.eye(n)
    F = np.zeros((n, n))
    G = np.zeros((n, 2))
    M[:nb, :nb] = beam.M
    F[:nb, :nb] = beam.F
    G[:nb] = beam.G
    F[nb:, :nb] = aero.drive
    F[nb:, nb:] = aero.A
    if coupling == "two-way":
        lx, ldx, mx, mdx = _force_maps(beam, aero, params, jones)
        r2 = slice(N, 2 * N)
        r4 = slice(3 * N, 4 * N)
        F[r2] += lx
        F[r4] += mx
        M[r2] -= ldx
        M[r4] -= mdx
    A = np.linalg.solve(M, F)
    B = np.linalg.solve(M, G)
    C = np.hstack([beam.C, np.zeros((2, nb))])
    for arr in (A, B, C):
        arr.setflags(write=False)
    return CombinedSystem(beam, jones, params, aero, A, B, C, coupling)


def build_combined(beam: ModalSystem, params: AeroParameters | None = None, *, coupling: str = "one-way",
                   jones: JonesModel | None = None) -> CombinedSystem:
    """Convenience wrapper around :func:`build_aero_modal` and :func:`assemble_combined`."""
    params = params or AeroParameters()
    jones = jones or JonesModel()
    block = build_aero_modal(params, jones, beam.basis)
    return assemble_combined(beam, block, coupling, beam.basis, params, jones)


def design_combined_lqr(comb: CombinedSystem, Q, R):
    from .riccati import solve_are

    return solve_are(comb.A, comb.B, Q, R, labels=comb.labels)
