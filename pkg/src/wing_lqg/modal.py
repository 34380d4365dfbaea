"""Bending and torsion eigenbases of a clamped-free beam on [0, L].

Bending modes are eigenfunctions of the fourth derivative with a pinned
root (w = w'' = 0 at y = 0) and a free tip (w'' = w''' = 0 at y = L)::

    Phi_n(y) = sin(nu_n y) + d_n sinh(nu_n y),   d_n = sin(nu_n L) / sinh(nu_n L)

where nu_n L is the n-th positive root of tan x = tanh x.  Torsion modes are
free-free cosines ``Theta_m(y) = cos(m pi y / L)``.

Hyperbolic terms are always evaluated as ratios ``sinh(nu y) / sinh(nu L)``
so that nothing overflows for large mode numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainError,
    IllConditionedBasisError,
    ParameterError,
    RootFindingError,
)

GRAM_CONDITION_LIMIT = 1e8
_BRACKET_OFFSET = 1e-12


@dataclass(frozen=True)
class BeamParameters:
    """Physical constants of the beam and its root actuators.

    Parameters
    ----------
    mu : float
        Mass per unit span.
    EI, GJ : float
        Bending and torsional stiffness.
    S_y : float
        Static mass moment per unit span (inertial bending-torsion coupling).
    I_y : float
        Mass moment of inertia per unit span.
    L : float
        Span.
    B1, B2 : float
        Gains of the root bending-moment and torque actuators.
    """

    mu: float = 1.0
    EI: float = 1.0
    GJ: float = 1.0
    S_y: float = 0.0
    I_y: float = 1.0
    L: float = 1.0
    B1: float = 1.0
    B2: float = 1.0

    def __post_init__(self):
        for name in ("mu", "EI", "GJ", "I_y", "L"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be positive and finite, got {value!r}")
        for name in ("S_y", "B1", "B2"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.mu * self.I_y - self.S_y**2 <= 0:
            raise ParameterError(
                f"inertia block is not positive definite: mu*I_y - S_y^2 = "
                f"{self.mu * self.I_y - self.S_y**2:.6g}"
            )


def bending_residual(x: float) -> float:
    """Scaled frequency determinant ``(cos x sinh x - cosh x sin x) / cosh x``."""
    return math.cos(x) * math.tanh(x) - math.sin(x)


def _bisect_root(n: int, rel_tol: float, max_iter: int) -> float:
    lo = n * math.pi
    hi = (n + 0.5) * math.pi - _BRACKET_OFFSET

    def h(x):
        return math.tanh(x) - math.tan(x)

    h_lo, h_hi = h(lo), h(hi)
    if not (h_lo > 0 and h_hi < 0):
        raise RootFindingError(f"no sign change for bending root {n}", (lo, hi))
    for _ in range(max_iter):
        if hi - lo <= rel_tol * lo:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        h_mid = h(mid)
        if h_mid > 0:
            lo = mid
        elif h_mid < 0:
            hi = mid
        else:
            return mid
    raise RootFindingError(f"bisection budget exhausted for bending root {n}", (lo, hi))


def find_bending_roots(
    L: float, N: int, *, rel_tol: float = 1e-13, max_iter: int = 200
) -> list[float]:
    """Return the first ``N`` bending wavenumbers ``nu_n`` for span ``L``.

    Each root of ``tan(nu L) = tanh(nu L)`` is isolated in
    ``[n pi, (n + 1/2) pi)`` (in units of ``nu L``) and bisected until the
    bracket is narrower than ``rel_tol`` relative to its lower end.

    Raises
    ------
    ParameterError
        If ``L <= 0`` or ``N < 0``.
    RootFindingError
        If a bracket shows no sign change or bisection does not converge.
    """
    if not (math.isfinite(L) and L > 0):
        raise ParameterError(f"span must be positive, got {L!r}")
    if int(N) != N or N < 0:
        raise ParameterError(f"mode count must be a non-negative integer, got {N!r}")
    return [_bisect_root(n, rel_tol, max_iter) / L for n in range(1, int(N) + 1)]


@dataclass(frozen=True)
class BendingMode:
    index: int
    nu: float
    L: float

    @property
    def nuL(self) -> float:
        return self.nu * self.L

    @property
    def eigenvalue(self) -> float:
        """Eigenvalue of the second-derivative-squared operator, ``-nu^4``."""
        return -self.nu**4

    @property
    def d_coeff(self) -> float:
        # sin(x)/sinh(x) without overflow
        x = self.nuL
        return math.sin(x) * 2.0 * math.exp(-x) / (-math.expm1(-2.0 * x))

    @property
    def phi_prime_0(self) -> float:
        return self.nu * (1.0 + self.d_coeff)

    @property
    def tip_value(self) -> float:
        """``Phi_n(L) = 2 sin(nu L)`` (uses the frequency equation)."""
        return 2.0 * math.sin(self.nuL)

    @property
    def norm_sq(self) -> float:
        """Closed-form squared L2 norm on [0, L].

        The sin*sinh cross term vanishes at a root of the frequency equation.
        """
        nu, L, x = self.nu, self.L, self.nuL
        s = math.sin(x)
        trig = L / 2.0 - math.sin(2.0 * x) / (4.0 * nu)
        hyp = s * s / math.tanh(x) / (2.0 * nu) - self.d_coeff**2 * L / 2.0
        return trig + hyp


@dataclass(frozen=True)
class TorsionMode:
    index: int
    L: float

    @property
    def wavenumber(self) -> float:
        return self.index * math.pi / self.L

    @property
    def eigenvalue(self) -> float:
        return -self.wavenumber**2

    @property
    def root_value(self) -> float:
        return 1.0

    @property
    def tip_value(self) -> float:
        return -1.0 if self.index % 2 else 1.0

    @property
    def norm_sq(self) -> float:
        return self.L if self.index == 0 else self.L / 2.0


def _check_domain(y: np.ndarray, L: float) -> None:
    tol = 1e-12 * L
    if np.any(~np.isfinite(y)) or np.any(y < -tol) or np.any(y > L + tol):
        bad = y[(y < -tol) | (y > L + tol) | ~np.isfinite(y)]
        raise DomainError(f"position {bad.flat[0]!r} outside [0, {L!r}]")


def eval_phi(mode: BendingMode, y, deriv: int = 0):
    """Evaluate a bending mode or one of its first three derivatives.

    Parameters
    ----------
    mode : BendingMode
    y : float or array_like
        Positions in [0, L].
    deriv : {0, 1, 2, 3}

    Returns
    -------
    float or ndarray
        Same shape as ``y``.
    """
    if deriv not in (0, 1, 2, 3):
        raise ParameterError(f"derivative order must be 0..3, got {deriv!r}")
    scalar = np.ndim(y) == 0
    y = np.asarray(y, dtype=float)
    _check_domain(y, mode.L)
    nu, L = mode.nu, mode.L
    s = nu * y
    trig = (np.sin, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))[deriv](s)
    # sinh(nu y)/sinh(nu L) or cosh(nu y)/sinh(nu L)
    sign = 1.0 if deriv % 2 else -1.0
    ratio = (np.exp(nu * (y - L)) + sign * np.exp(-nu * (y + L))) / (-math.expm1(-2.0 * nu * L))
    out = nu**deriv * (trig + math.sin(nu * L) * ratio)
    return float(out) if scalar else out


def eval_theta(mode: TorsionMode, y, deriv: int = 0):
    """Evaluate a torsion mode or one of its first two derivatives."""
    if deriv not in (0, 1, 2):
        raise ParameterError(f"derivative order must be 0..2, got {deriv!r}")
    scalar = np.ndim(y) == 0
    y = np.asarray(y, dtype=float)
    _check_domain(y, mode.L)
    k = mode.wavenumber
    out = (np.cos, lambda v: -k * np.sin(v), lambda v: -k * k * np.cos(v))[deriv](k * y)
    return float(out) if scalar else out


@dataclass(frozen=True)
class ModalBasis:
    """Truncated bending and torsion bases with quadrature and Gram data.

    Attributes
    ----------
    bending, torsion : tuple
        ``N`` modes of each family.  Torsion mode numbers run from
        ``twist_start`` to ``twist_start + N - 1``.
    nodes, weights : ndarray
        Gauss-Legendre rule on [0, L].
    gram : ndarray
        ``2N x 2N`` inner products, bending block first.
    """

    L: float
    N: int
    twist_start: int
    bending: tuple
    torsion: tuple
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)

    @property
    def norms_bend(self) -> np.ndarray:
        return np.array([m.norm_sq for m in self.bending])

    @property
    def norms_twist(self) -> np.ndarray:
        return np.array([m.norm_sq for m in self.torsion])

    @property
    def gram_condition(self) -> float:
        return float(np.linalg.cond(self.gram)) if self.N else 1.0

    def phi(self, y, deriv: int = 0) -> np.ndarray:
        """Values of all bending modes, shape ``(len(y), N)``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return np.column_stack([eval_phi(m, y, deriv) for m in self.bending]) if self.N else np.empty((y.size, 0))

    def theta(self, y, deriv: int = 0) -> np.ndarray:
        """Values of all torsion modes, shape ``(len(y), N)``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return np.column_stack([eval_theta(m, y, deriv) for m in self.torsion]) if self.N else np.empty((y.size, 0))

    def twist_label(self, k: int) -> int:
        """Torsion mode number of the k-th (0-based) torsion coordinate."""
        return self.twist_start + k


def quadrature_rule(L: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * L * (x + 1.0), 0.5 * L * w


def build_basis(
    L: float, N: int, *, twist_start: int = 0, quad_order: int | None = None
) -> ModalBasis:
    """Construct the modal basis and its Gram matrix.

    Parameters
    ----------
    L : float
        Span.
    N : int
        Modes per family.
    twist_start : int, default 0
        First torsion mode number.  ``0`` includes the rigid twist mode.
    quad_order : int, optional
        Gauss-Legendre order; defaults to ``max(64, 8 N)``.
    """
    if twist_start < 0:
        raise ParameterError("twist_start must be non-negative")
    nus = find_bending_roots(L, N)
    bending = tuple(BendingMode(i + 1, nu, L) for i, nu in enumerate(nus))
    torsion = tuple(TorsionMode(twist_start + k, L) for k in range(N))
    order = quad_order if quad_order is not None else max(64, 8 * N)
    nodes, weights = quadrature_rule(L, order)
    if N:
        values = np.hstack(
            [
                np.column_stack([eval_phi(m, nodes) for m in bending]),
                np.column_stack([eval_theta(m, nodes) for m in torsion]),
            ]
        )
        gram = values.T @ (weights[:, None] * values)
    else:
        gram = np.zeros((0, 0))
    for arr in (nodes, weights, gram):
        arr.setflags(write=False)
    return ModalBasis(L, int(N), int(twist_start), bending, torsion, nodes, weights, gram)


def inner_product(f: Callable, g: Callable, basis: ModalBasis) -> float:
    """L2 inner product of two callables using the basis quadrature rule."""
    y = basis.nodes
    return float(np.sum(basis.weights * np.asarray(f(y)) * np.asarray(g(y))))


def project(
    f: Callable, basis: ModalBasis, family: str = "all"
) -> np.ndarray:
    """Least-squares coefficients of ``f`` in the basis.

    Parameters
    ----------
    f : callable
        Vectorized function of position.
    family : {"all", "bend", "twist"}
        Project onto the combined ``2N`` basis or one family.

    Raises
    ------
    IllConditionedBasisError
        If the relevant Gram block has condition number above 1e8.
    """
    N = basis.N
    sl = {"all": slice(0, 2 * N), "bend": slice(0, N), "twist": slice(N, 2 * N)}.get(family)
    if sl is None:
        raise ParameterError(f"unknown family {family!r}")
    gram = basis.gram[sl, sl]
    cond = float(np.linalg.cond(gram))
    if cond > GRAM_CONDITION_LIMIT:
        raise IllConditionedBasisError(cond)
    y = basis.nodes
    vals = np.hstack([basis.phi(y), basis.theta(y)])[:, sl]
    rhs = vals.T @ (basis.weights * np.asarray(f(y), dtype=float))
    return np.linalg.solve(gram, rhs)


def mode_table(basis: ModalBasis) -> list[dict]:
    """Rows describing every mode, used for the modes CSV."""
    rows = []
    for m in basis.bending:
        rows.append(
            dict(kind="bend", index=m.index, nu_or_m=m.nu, eigenvalue=m.eigenvalue,
                 phi_prime_0=m.phi_prime_0, norm_sq=m.norm_sq)
        )
    for m in basis.torsion:
        rows.append(
            dict(kind="twist", index=m.index, nu_or_m=float(m.index), eigenvalue=m.eigenvalue,
                 phi_prime_0=float("nan"), norm_sq=m.norm_sq)
        )
    return rows


def bending_roots_table(L: float, N: int) -> Sequence[float]:
    """Dimensionless roots ``nu_n L``."""
    return [nu * L for nu in find_bending_roots(L, N)]
