"""Riccati equations for the modal beam model.

Two routes to the optimal regulator are provided:

* :func:`solve_are`, a dense solver for ``A^T P + P A + Q - P B R^-1 B^T P = 0``
  based on an ordered Schur decomposition of the Hamiltonian followed by one
  Newton correction;
* modal policy iteration on the kernel coefficient table ``Pi``.  The
  operator kernel of the infinite-dimensional problem expands as
  ``P(y1, y2) = sum Pi_(ia)(jb) basis_ia(y1) basis_jb(y2)``, and ``Pi`` solves
  the implicit-form equation

      F^T Pi M + M Pi F + Q = M Pi G R^-1 G^T Pi M,

  so that ``P_std = M Pi M`` solves the explicit one and the feedback is
  ``u = -K zeta`` with ``K = R^-1 G^T Pi M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    DegenerateModeError,
    InsufficientDataError,
    NoStabilizingSolutionError,
    ParameterError,
    PolicyIterationError,
    StabilizabilityError,
)
from .modal import BeamParameters, ModalBasis

# ---------------------------------------------------------------------------
# dense solver


def _check_spd(R: np.ndarray, name: str = "R") -> np.ndarray:
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[0] != R.shape[1] or not np.allclose(R, R.T, rtol=1e-12, atol=0):
        raise ParameterError(f"{name} must be square and symmetric")
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise ParameterError(f"{name} must be positive definite") from None
    return 0.5 * (R + R.T)


def uncontrollable_modes(A, B, *, tol: float = 1e-9, unstable_only: bool = True):
    """PBH test.  Returns ``(eigenvalue, left eigvector)`` pairs that ``B`` cannot reach.

    A mode is flagged when the smallest singular value of ``[A - s I, B]``
    falls below ``tol * max(1, ||[A, B]||)``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    scale = max(1.0, np.linalg.norm(np.hstack([A, B]), 2))
    eigs = np.linalg.eigvals(A)
    found = []
    for s in eigs:
        if unstable_only and s.real < -tol * scale:
            continue
        mat = np.hstack([A - s * np.eye(n), B.astype(complex)])
        u, sv, _ = np.linalg.svd(mat)
        if sv[-1] <= tol * scale:
            found.append((complex(s), u[:, -1]))
    return found


def is_stabilizable(A, B, tol: float = 1e-9) -> bool:
    return not uncontrollable_modes(A, B, tol=tol)


def is_detectable(A, C, tol: float = 1e-9) -> bool:
    return not uncontrollable_modes(np.asarray(A).T, np.asarray(C).T, tol=tol)


@dataclass(frozen=True)
class RiccatiSolution:
    """Stabilizing solution of a continuous-time algebraic Riccati equation.

    ``K = R^-1 B^T P`` and ``closed_loop`` holds the eigenvalues of ``A - B K``.
    """

    P: np.ndarray
    K: np.ndarray
    closed_loop: np.ndarray
    residual: float
    relative_residual: float


def care_residual(A, B, Q, R, P) -> tuple[float, float]:
    """Frobenius residual of the Riccati equation and a scale-aware relative version."""
    S = B @ np.linalg.solve(R, B.T)
    AP = A.T @ P
    PSP = P @ S @ P
    res = AP + AP.T + Q - PSP
    r = float(np.linalg.norm(res))
    scale = np.linalg.norm(Q) + 2.0 * np.linalg.norm(AP) + np.linalg.norm(PSP)
    return r, r / max(scale, np.finfo(float).tiny)


def solve_are(A, B, Q, R, *, check: bool = True, labels: Sequence[str] | None = None) -> RiccatiSolution:
    """Stabilizing solution of ``A^T P + P A + Q - P B R^-1 B^T P = 0``.

    Parameters
    ----------
    A, B, Q, R : array_like
        ``Q`` symmetric positive semidefinite, ``R`` symmetric positive definite.
    check : bool, default True
        Run PBH stabilizability and detectability tests first so that failures
        name the offending mode.
    labels : sequence of str, optional
        State names used in error messages.

    Raises
    ------
    NoStabilizingSolutionError
        If the Hamiltonian has eigenvalues on the imaginary axis or the
        stable invariant subspace is not a graph.
    StabilizabilityError
        If ``(A, B)`` is not stabilizable or ``(A, Q)`` not detectable.
    """
    A = np.asarray(A, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = np.asarray(Q, dtype=float)
    R = _check_spd(R)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or Q.shape != (n, n) or R.shape[0] != B.shape[1]:
        raise ParameterError("inconsistent Riccati dimensions")
    if not np.allclose(Q, Q.T, atol=1e-12 * max(1.0, np.abs(Q).max(initial=0.0))):
        raise ParameterError("Q must be symmetric")
    Q = 0.5 * (Q + Q.T)

    def name(vec):
        if labels is None:
            return f"state {int(np.argmax(np.abs(vec)))}"
        return labels[int(np.argmax(np.abs(vec)))]

    if check:
        bad = uncontrollable_modes(A, B)
        if bad:
            s, vec = bad[0]
            raise StabilizabilityError("(A, B) is not stabilizable", s, name(vec))
        w, V = np.linalg.eigh(Q)
        Cq = (V * np.sqrt(np.clip(w, 0.0, None))).T
        bad = uncontrollable_modes(A.T, Cq.T)
        if bad:
            s, vec = bad[0]
            raise StabilizabilityError("(A, Q) is not detectable", s, name(vec))

    S = B @ np.linalg.solve(R, B.T)
    H = np.block([[A, -S], [-Q, -A.T]])
    hnorm = max(1.0, np.linalg.norm(H, 1))
    T, Z, sdim = sla.schur(H, output="real", sort="lhp")
    ev = np.linalg.eigvals(T)
    if np.min(np.abs(ev.real)) <= 1e-10 * hnorm or sdim != n:
        raise NoStabilizingSolutionError(
            "Hamiltonian has eigenvalues on the imaginary axis; no stabilizing solution"
        )
    Z11, Z21 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(Z11) > 1e14:
        raise NoStabilizingSolutionError("stable invariant subspace is not a graph")
    P = np.linalg.solve(Z11.T, Z21.T).T
    P = 0.5 * (P + P.T)

    # one Newton (Kleinman) correction
    r0, rel0 = care_residual(A, B, Q, R, P)
    K = np.linalg.solve(R, B.T @ P)
    Acl = A - B @ K
    if np.all(np.linalg.eigvals(Acl).real < 0):
        P1 = sla.solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K))
        P1 = 0.5 * (P1 + P1.T)
        r1, rel1 = care_residual(A, B, Q, R, P1)
        if r1 < r0:
            P, r0, rel0 = P1, r1, rel1
    K = np.linalg.solve(R, B.T @ P)
    cl = np.linalg.eigvals(A - B @ K)
    if np.any(cl.real >= 0):
        raise NoStabilizingSolutionError("computed solution is not stabilizing")
    for arr in (P, K, cl):
        arr.setflags(write=False)
    return RiccatiSolution(P, K, cl, r0, rel0)


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightSpec:
    """State and control weights in modal coordinates.

    ``q_bend[n-1] = (Q11_n, Q22_n)`` weights bending displacement and velocity
    coefficients; ``q_twist`` does the same for twist.  ``R`` is the 2x2
    control weight and ``Gamma = B R^-1 B`` with ``B = diag(B1, B2)``.
    """

    q_bend: np.ndarray
    q_twist: np.ndarray
    R: np.ndarray
    B: tuple = (1.0, 1.0)
    r_bend: float = 0.0
    r_twist: float = 0.0

    def __post_init__(self):
        qb = np.asarray(self.q_bend, dtype=float)
        qt = np.asarray(self.q_twist, dtype=float)
        if qb.ndim != 2 or qb.shape[1] != 2 or qt.shape != qb.shape:
            raise ParameterError("q_bend and q_twist must both have shape (N, 2)")
        if np.any(qb < 0) or np.any(qt < 0) or not (np.all(np.isfinite(qb)) and np.all(np.isfinite(qt))):
            raise ParameterError("state weights must be non-negative and finite")
        R = _check_spd(self.R)
        if R.shape != (2, 2):
            raise ParameterError("R must be 2x2")
        object.__setattr__(self, "q_bend", qb)
        object.__setattr__(self, "q_twist", qt)
        object.__setattr__(self, "R", R)

    @property
    def N(self) -> int:
        return self.q_bend.shape[0]

    @property
    def Gamma(self) -> np.ndarray:
        Bm = np.diag(self.B)
        return Bm @ np.linalg.solve(self.R, Bm)

    def Q(self) -> np.ndarray:
        """Diagonal ``4N x 4N`` state weight in zeta coordinates."""
        return np.diag(np.concatenate([self.q_bend[:, 0], self.q_bend[:, 1], self.q_twist[:, 0], self.q_twist[:, 1]]))

    @classmethod
    def power_law(
        cls,
        N: int,
        *,
        q: float = 1.0,
        r_bend: float = 0.0,
        r_twist: float = 0.0,
        R=None,
        B=(1.0, 1.0),
        twist_start: int = 0,
        theorem_mode: bool = False,
    ) -> "WeightSpec":
        """Weights ``q / n^r_bend`` for bending and ``q / max(m, 1)^r_twist`` for twist.

        With ``theorem_mode=True`` the decay exponents must satisfy the
        hypotheses under which the kernel series converge
        (``r_bend > 8``, ``r_twist > 6``).
        """
        if theorem_mode and not (r_bend > 8 and r_twist > 6):
            raise ParameterError(
                f"theorem mode requires r_bend > 8 and r_twist > 6, got {r_bend}, {r_twist}"
            )
        n = np.arange(1, N + 1, dtype=float)
        m = np.maximum(np.arange(twist_start, twist_start + N, dtype=float), 1.0)
        qb = q / n**r_bend
        qt = q / m**r_twist
        R = np.eye(2) if R is None else R
        return cls(np.column_stack([qb, qb]), np.column_stack([qt, qt]), R, tuple(B), r_bend, r_twist)


# ---------------------------------------------------------------------------
# kernel coefficient tables


@dataclass(frozen=True)
class ModalKernelIterate:
    """Coefficient table of a kernel iterate.

    The canonical storage is the ``4N x 4N`` matrix ``Pi`` whose rows and
    columns follow the state ordering.  The views ``bend``, ``twist`` and
    ``cross`` have shape ``(N, N, 2, 2)``: ``bend[a, b, i, j]`` is the
    coefficient of ``Phi_a(y1) Phi_b(y2)`` in kernel entry ``(i+1, j+1)``,
    ``twist[a, b, i, j]`` that of ``Theta_a Theta_b`` in entry ``(i+3, j+3)``
    and ``cross[a, b, i, j]`` that of ``Phi_a Theta_b`` in entry ``(i+1, j+3)``.
    """

    Pi: np.ndarray
    k: int = 0

    @property
    def N(self) -> int:
        return self.Pi.shape[0] // 4

    def _view(self, rows: tuple, cols: tuple) -> np.ndarray:
        N = self.N
        out = np.empty((N, N, 2, 2))
        for i, r in enumerate(rows):
            for j, c in enumerate(cols):
                out[:, :, i, j] = self.Pi[r * N:(r + 1) * N, c * N:(c + 1) * N]
        return out

    @property
    def bend(self) -> np.ndarray:
        return self._view((0, 1), (0, 1))

    @property
    def twist(self) -> np.ndarray:
        return self._view((2, 3), (2, 3))

    @property
    def cross(self) -> np.ndarray:
        return self._view((0, 1), (2, 3))

    def P_std(self, M: np.ndarray) -> np.ndarray:
        """Explicit-form Riccati matrix ``M Pi M``."""
        return M @ self.Pi @ M

    def records(self, twist_start: int = 0):
        """Rows ``(family, index1, index2, i, j, value)`` with 1-based kernel entries."""
        N = self.N
        for fam, view, off_i, off_j, lab in (
            ("bend", self.bend, 1, 1, (lambda a: a + 1, lambda b: b + 1)),
            ("twist", self.twist, 3, 3, (lambda a: a + twist_start, lambda b: b + twist_start)),
            ("cross", self.cross, 1, 3, (lambda a: a + 1, lambda b: b + twist_start)),
        ):
            for a in range(N):
                for b in range(N):
                    for i in range(2):
                        for j in range(2):
                            yield fam, lab[0](a), lab[1](b), i + off_i, j + off_j, float(view[a, b, i, j])


def initial_iterate_bending(
    n: int, weights: WeightSpec, params: BeamParameters, basis: ModalBasis
) -> tuple[float, float, float]:
    """Closed-form decoupled starting values ``(P11, P12, P22)`` for bending mode ``n``.

    ``n`` is 1-based.  ``P12`` is the positive root of the scalar quadratic
    for the Riccati (1,2) entry, written in rationalized form so that tiny
    weights at high mode numbers do not cancel.  ``P22`` and ``P11`` follow
    the reference closed forms as written.
    """
    mode = basis.bending[n - 1]
    dphi = mode.phi_prime_0
    if not math.isfinite(dphi) or dphi == 0.0:
        raise DegenerateModeError(f"bending mode {n} has zero root slope Phi'(0)")
    g11, g22 = np.diag(weights.Gamma)
    if g11 <= 0 or g22 <= 0:
        raise ParameterError("Gamma must have positive diagonal entries")
    q11, q22 = weights.q_bend[n - 1]
    EI, mu, Iy = params.EI, params.mu, params.I_y
    lamEI = mode.eigenvalue * EI
    c = g11 * (EI * dphi) ** 2
    if q11 == 0.0:
        p12 = 0.0
    else:
        p12 = q11 / (abs(lamEI) + math.sqrt(lamEI**2 + q11 * c))
    p22 = math.sqrt(2.0 * Iy * p12 + q22) / (math.sqrt(g22) * Iy * EI * dphi)
    p11 = -mode.eigenvalue * mu * Iy * EI * p22 + mu * EI * p12 * g11 * Iy * EI * p22 * dphi
    return p11, p12, p22


def initial_iterate_torsion(
    k: int, weights: WeightSpec, params: BeamParameters, basis: ModalBasis, *, p330_gamma: str = "g11"
) -> tuple[float, float, float]:
    """Closed-form decoupled starting values ``(P33, P34, P44)`` for torsion coordinate ``k``.

    ``k`` is 0-based within the torsion family.  The ``P33`` term uses
    ``-eta`` so that it is non-negative for every mode (the same positivity
    the bending term obtains from ``-lambda``).  ``p330_gamma`` picks which
    diagonal entry of ``Gamma`` multiplies the quadratic term.
    """
    if p330_gamma not in ("g11", "g22"):
        raise ParameterError("p330_gamma must be 'g11' or 'g22'")
    mode = basis.torsion[k]
    g11, g22 = np.diag(weights.Gamma)
    if g11 <= 0 or g22 <= 0:
        raise ParameterError("Gamma must have positive diagonal entries")
    q33, q44 = weights.q_twist[k]
    GJ, Iy = params.GJ, params.I_y
    etaGJ = mode.eigenvalue * GJ
    c = g22 * GJ**2
    if q33 == 0.0:
        p34 = 0.0
    else:
        p34 = q33 / (abs(etaGJ) + math.sqrt(etaGJ**2 + q33 * c))
    p44 = math.sqrt(2.0 * Iy * p34 + q44) / (math.sqrt(g22) * Iy * GJ)
    g = g11 if p330_gamma == "g11" else g22
    p33 = (-etaGJ * p44 + GJ**2 * p34 * g * p44) / Iy
    return p33, p34, p44


def initial_iterate(
    weights: WeightSpec, params: BeamParameters, basis: ModalBasis, *, p330_gamma: str = "g11"
) -> ModalKernelIterate:
    """Diagonal starting table: one decoupled 2x2 block per mode, cross tables zero."""
    N = basis.N
    if weights.N != N:
        raise ParameterError(f"weights are for N={weights.N}, basis has N={N}")
    Pi = np.zeros((4 * N, 4 * N))
    for a in range(N):
        p11, p12, p22 = initial_iterate_bending(a + 1, weights, params, basis)
        i1, i2 = a, N + a
        Pi[i1, i1], Pi[i1, i2], Pi[i2, i1], Pi[i2, i2] = p11, p12, p12, p22
        p33, p34, p44 = initial_iterate_torsion(a, weights, params, basis, p330_gamma=p330_gamma)
        i3, i4 = 2 * N + a, 3 * N + a
        Pi[i3, i3], Pi[i3, i4], Pi[i4, i3], Pi[i4, i4] = p33, p34, p34, p44
    Pi.setflags(write=False)
    return ModalKernelIterate(Pi, 0)


# ---------------------------------------------------------------------------
# policy iteration


def kernel_feedback(Pi: np.ndarray, system, weights: WeightSpec) -> np.ndarray:
    """``K = R^-1 G^T Pi M`` for a coefficient table ``Pi``."""
    return np.linalg.solve(weights.R, system.G.T @ Pi @ system.M)


def _lyapunov_decoupled(Acl: np.ndarray, rhs: np.ndarray, N: int, decoupled: bool) -> np.ndarray:
    """Solve ``Acl^T X + X Acl = -rhs``; per family when the blocks decouple."""
    if not decoupled:
        X = sla.solve_continuous_lyapunov(Acl.T, -rhs)
        return 0.5 * (X + X.T)
    X = np.zeros_like(rhs)
    for idx in (np.r_[0:2 * N], np.r_[2 * N:4 * N]):
        sub = np.ix_(idx, idx)
        Xb = sla.solve_continuous_lyapunov(Acl[sub].T, -rhs[sub])
        X[sub] = 0.5 * (Xb + Xb.T)
    return X


def policy_iterate(
    prev: ModalKernelIterate,
    weights: WeightSpec,
    params: BeamParameters,
    basis: ModalBasis,
    *,
    system=None,
) -> ModalKernelIterate:
    """One step of modal policy iteration.

    The feedback induced by ``prev`` is evaluated exactly: the next table
    solves the closed-loop Lyapunov equation of that policy,

        (A - B K_k)^T X + X (A - B K_k) + Q + K_k^T R K_k = 0,   Pi_{k+1} = M^-1 X M^-1.

    Raises
    ------
    PolicyIterationError
        If the feedback from ``prev`` is not stabilizing, so that the
        Lyapunov operator ``lambda_i + lambda_j`` is singular or the policy
        cost is unbounded.
    """
    if system is None:
        from .statespace import build_modal_system

        system = build_modal_system(params, basis)
    N = system.N
    K = kernel_feedback(prev.Pi, system, weights)
    Acl = system.A - system.B @ K
    ev, V = np.linalg.eig(Acl)
    worst = int(np.argmax(ev.real))
    if ev[worst].real >= -1e-12 * max(1.0, np.abs(ev).max()):
        # the Lyapunov operator has a (near) zero eigenvalue lambda_i + conj(lambda_i)
        pair = system.mode_name(int(np.argmax(np.abs(V[:, worst]))))
        raise PolicyIterationError(
            f"iterate {prev.k} gives a non-stabilizing policy (closed-loop eigenvalue {ev[worst]:.6g})",
            pair,
        )
    rhs = weights.Q() + K.T @ weights.R @ K
    decoupled = params.S_y == 0.0 and not getattr(system, "consistent_mass", False)
    X = _lyapunov_decoupled(Acl, rhs, N, decoupled)
    Minv = np.linalg.inv(system.M)
    Pi = Minv @ X @ Minv.T
    Pi = 0.5 * (Pi + Pi.T)
    Pi.setflags(write=False)
    return ModalKernelIterate(Pi, prev.k + 1)


def policy_cost(iterate: ModalKernelIterate, system, weights: WeightSpec, x0) -> np.ndarray:
    """Infinite-horizon cost ``x0^T X x0`` of the feedback induced by ``iterate``.

    ``x0`` may be a single state or an array of states (one per row).
    """
    K = kernel_feedback(iterate.Pi, system, weights)
    Acl = system.A - system.B @ K
    if np.any(np.linalg.eigvals(Acl).real >= 0):
        return np.full(np.atleast_2d(x0).shape[0], np.inf)
    X = sla.solve_continuous_lyapunov(Acl.T, -(weights.Q() + K.T @ weights.R @ K))
    x = np.atleast_2d(np.asarray(x0, dtype=float))
    return np.einsum("ki,ij,kj->k", x, X, x)


@dataclass
class PolicyIterationResult:
    iterates: list = field(default_factory=list)
    converged: bool = False
    change: float = math.inf

    @property
    def final(self) -> ModalKernelIterate:
        return self.iterates[-1]


def run_policy_iteration(
    weights: WeightSpec,
    params: BeamParameters,
    basis: ModalBasis,
    *,
    tol: float = 1e-9,
    max_iter: int = 200,
    initial: ModalKernelIterate | None = None,
    system=None,
) -> PolicyIterationResult:
    """Iterate from the closed-form table until the sup-norm change is small.

    The stopping test is relative, ``max|Pi_{k+1} - Pi_k| < tol * max(1, max|Pi_{k+1}|)``,
    because an absolute threshold sits below round-off once entries are large.
    """
    if system is None:
        from .statespace import build_modal_system

        system = build_modal_system(params, basis)
    it = initial if initial is not None else initial_iterate(weights, params, basis)
    result = PolicyIterationResult([it])
    for _ in range(max_iter):
        nxt = policy_iterate(it, weights, params, basis, system=system)
        result.iterates.append(nxt)
        result.change = float(np.max(np.abs(nxt.Pi - it.Pi)))
        it = nxt
        if result.change < tol * max(1.0, float(np.max(np.abs(nxt.Pi)))):
            result.converged = True
            break
    return result


# ---------------------------------------------------------------------------
# kernel reconstruction and gains


def _basis_row_values(basis: ModalBasis, y, deriv: int = 0) -> np.ndarray:
    """Values of the 4N expansion functions at positions ``y``, shape (len(y), 4, 4N)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    N = basis.N
    out = np.zeros((y.size, 4, 4 * N))
    phi = basis.phi(y, deriv)
    th = basis.theta(y, deriv)
    out[:, 0, 0:N] = phi
    out[:, 1, N:2 * N] = phi
    out[:, 2, 2 * N:3 * N] = th
    out[:, 3, 3 * N:4 * N] = th
    return out


def reconstruct_kernel(iterate: ModalKernelIterate, basis: ModalBasis, y1, y2) -> np.ndarray:
    """4x4 kernel ``P(y1, y2)`` from the coefficient table."""
    e1 = _basis_row_values(basis, y1)[0]
    e2 = _basis_row_values(basis, y2)[0]
    return e1 @ iterate.Pi @ e2.T


def gain_from_kernel(iterate: ModalKernelIterate, system, weights: WeightSpec) -> np.ndarray:
    """Modal feedback matrix from the kernel at the root.

    Bending: ``EI * sum_n Phi_n'(0) Pi[(2,n), :]``; torsion:
    ``GJ * sum_m Theta_m(0) Pi[(4,m), :]``; then scaled by ``R^-1 B`` and
    mapped through ``M``.
    """
    params, basis = system.params, system.basis
    N = basis.N
    Pi = iterate.Pi
    dphi0 = np.array([m.phi_prime_0 for m in basis.bending])
    th0 = np.array([m.root_value for m in basis.torsion])
    row1 = params.EI * dphi0 @ Pi[N:2 * N, :]
    row2 = params.GJ * th0 @ Pi[3 * N:4 * N, :]
    Bm = np.diag(weights.B)
    return np.linalg.solve(weights.R, Bm @ np.vstack([row1, row2])) @ system.M


def kernel_gain_profile(iterate: ModalKernelIterate, system, weights: WeightSpec, y) -> np.ndarray:
    """Spatial feedback gain ``K(y)``, shape ``(len(y), 2, 4)``.

    Entry ``[:, r, j]`` multiplies field ``j`` (w, w_t, theta, theta_t) in
    control ``r`` so that ``u = -integral K(y) z(y) dy`` up to the
    normalization of the basis.
    """
    params, basis = system.params, system.basis
    N = basis.N
    y = np.atleast_1d(np.asarray(y, dtype=float))
    Pi = iterate.Pi
    # M acts pointwise on the field vector
    Mp = np.array(
        [[1, 0, 0, 0], [0, params.mu, 0, -params.S_y], [0, 0, 1, 0], [0, -params.S_y, 0, params.I_y]],
        dtype=float,
    )
    dphi0 = np.array([m.phi_prime_0 for m in basis.bending])
    th0 = np.array([m.root_value for m in basis.torsion])
    row1 = params.EI * dphi0 @ Pi[N:2 * N, :]
    row2 = params.GJ * th0 @ Pi[3 * N:4 * N, :]
    E = _basis_row_values(basis, y)  # (ny, 4, 4N)
    k1 = np.einsum("c,yjc->yj", row1, E)
    k2 = np.einsum("c,yjc->yj", row2, E)
    raw = np.stack([k1, k2], axis=1)  # (ny, 2, 4)
    scale = np.linalg.solve(weights.R, np.diag(weights.B))
    return np.einsum("rs,ysj,jk->yrk", scale, raw, Mp)


# ---------------------------------------------------------------------------
# decay of the closed-form table


@dataclass(frozen=True)
class DecayFit:
    name: str
    slope: float
    predicted: float
    indices: tuple

    @property
    def meets_order(self) -> bool:
        return self.slope <= self.predicted + 0.5

    @property
    def status(self) -> str:
        # sum_n n^s converges iff s < -1; a slope within 0.1 of -1 is marginal
        if self.slope < -1.1:
            return "summable"
        if self.slope <= -0.9:
            return "marginal"
        return "divergent"

    @property
    def summable(self) -> bool:
        return self.status == "summable"


@dataclass(frozen=True)
class DecayReport:
    r_bend: float
    r_twist: float
    fits: dict

    @property
    def hypotheses_met(self) -> bool:
        return self.r_bend > 8 and self.r_twist > 6

    @property
    def all_summable(self) -> bool:
        return all(f.summable for f in self.fits.values())

    def __getitem__(self, key: str) -> DecayFit:
        return self.fits[key]


def _fit_slope(idx: np.ndarray, vals: np.ndarray) -> float:
    vals = np.abs(vals)
    keep = vals > 0
    if keep.sum() < 3:
        return -math.inf
    return float(np.polyfit(np.log(idx[keep]), np.log(vals[keep]), 1)[0])


def decay_diagnostics(iterate: ModalKernelIterate, weights: WeightSpec, basis: ModalBasis) -> DecayReport:
    """Log-log slopes of the diagonal entries of the closed-form table.

    Slopes are fitted over mode numbers ``>= 2``.  Predicted orders for weight
    exponent ``r``: ``P12 ~ n^(-r-4)``, ``P22 ~ n^(-1-r/2)``, ``P11 ~ n^(3-r/2)``
    and for torsion ``P34 ~ m^(-r-2)``, ``P44 ~ m^(-r/2)``, ``P33 ~ m^(2-r/2)``.

    Raises
    ------
    InsufficientDataError
        With fewer than four modes per family.
    """
    N = iterate.N
    if N < 4:
        raise InsufficientDataError(f"need at least 4 modes to fit decay rates, got {N}")
    rb, rt = weights.r_bend, weights.r_twist
    n = np.arange(1, N + 1, dtype=float)
    m = np.array([t.index for t in basis.torsion], dtype=float)
    d = np.diag(iterate.Pi)
    s1 = np.array([iterate.Pi[N + a, a] for a in range(N)])
    s3 = np.array([iterate.Pi[3 * N + a, 2 * N + a] for a in range(N)])
    bsel = n >= 2
    tsel = m >= 2
    series = {
        "P11": (n, d[0:N], 3 - rb / 2, bsel),
        "P12": (n, s1, -rb - 4, bsel),
        "P22": (n, d[N:2 * N], -1 - rb / 2, bsel),
        "P33": (m, d[2 * N:3 * N], 2 - rt / 2, tsel),
        "P34": (m, s3, -rt - 2, tsel),
        "P44": (m, d[3 * N:4 * N], -rt / 2, tsel),
    }
    fits = {}
    for key, (idx, vals, pred, sel) in series.items():
        if sel.sum() < 3:
            raise InsufficientDataError(f"too few modes with index >= 2 to fit {key}")
        fits[key] = DecayFit(key, _fit_slope(idx[sel], vals[sel]), pred, tuple(int(i) for i in idx[sel]))
    return DecayReport(rb, rt, fits)
