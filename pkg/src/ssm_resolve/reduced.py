"""Polar form of the reduced dynamics and fixed-point analysis.

On the conjugate slice s1 = rho * e^{i theta}, s2 = conj(s1), with the phase
measured against the drive (psi = theta - Omega * t), the reduced flow
collapses to an autonomous planar field

    rho' = a(rho) + eps * (f1(rho) cos psi + f2(rho) sin psi)
    psi' = b(rho) - Omega + (eps/rho) * (g1(rho) cos psi - g2(rho) sin psi)

with a(rho) = sum a_i rho**(2i+1), b(rho) = sum b_i rho**(2i) from the
unforced stage, and f/g even polynomials assembled from the forced reduced
coefficients.  Periodic responses of the full system correspond to fixed
points u = (rho, Omega, psi) of this field; their stability is read off its
2x2 Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, SingularChartError
from .ssm_auto import AutonomousSsm
from .ssm_forced import ForcedReduction

#: |Re(eigenvalue)| below this is reported as fold-degenerate, not classified
STABILITY_MARGIN = 1e-8


def _even_val(coeffs: np.ndarray, rho):
    """sum coeffs[i] * rho**(2i)."""
    u = np.asarray(rho, dtype=float) ** 2
    return np.polynomial.polynomial.polyval(u, coeffs)


def _even_dval(coeffs: np.ndarray, rho):
    """d/drho of sum coeffs[i] * rho**(2i)."""
    rho = np.asarray(rho, dtype=float)
    if len(coeffs) < 2:
        return np.zeros_like(rho)
    idx = np.arange(1, len(coeffs))
    return rho * np.polynomial.polynomial.polyval(rho ** 2, 2 * idx * coeffs[1:])


@dataclass
class ReducedDynamics:
    """Coefficients of the planar polar field at one forcing frequency."""
    omega: float
    order: int
    lambda_master: complex
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    eps: float | None = None

    @property
    def M(self) -> int:
        """Expansion half-order (order = 2M + 1)."""
        return len(self.a_coeffs) - 1

    def a_of(self, rho):
        return np.asarray(rho) * _even_val(self.a_coeffs, rho)

    def da_of(self, rho):
        return (_even_val(self.a_coeffs, rho)
                + np.asarray(rho) * _even_dval(self.a_coeffs, rho))

    def b_of(self, rho):
        return _even_val(self.b_coeffs, rho)

    def db_of(self, rho):
        return _even_dval(self.b_coeffs, rho)

    def f1_of(self, rho):
        return _even_val(self.f1, rho)

    def f2_of(self, rho):
        return _even_val(self.f2, rho)

    def g1_of(self, rho):
        return _even_val(self.g1, rho)

    def g2_of(self, rho):
        return _even_val(self.g2, rho)


@dataclass
class FixedPointU:
    """One periodic-response point u = (rho, Omega, psi) with its tags."""
    rho: float
    omega: float
    psi: float
    stability: str = "fold-degenerate"  # "stable" | "unstable" | "fold-degenerate"
    physical_amplitude: float | None = None
    branch: str | None = None  # "K+" | "K-" when traced from the quadratic
    eps: float | None = None

    def __post_init__(self):
        if self.rho < 0:
            raise ValidationError("amplitude rho must be >= 0")
        self.psi = float(np.mod(self.psi, 2 * np.pi))

    @property
    def stable(self) -> bool | None:
        if self.stability == "fold-degenerate":
            return None
        return self.stability == "stable"


def assemble_polar(ssm: AutonomousSsm, fr: ForcedReduction,
                   eps: float | None = None) -> ReducedDynamics:
    """Combine the unforced and forced reduced coefficients into polar form.

    ``f1/g2`` share the real part and ``f2/g1`` the imaginary part of the
    diagonal forced coefficients; the off-diagonal contribution enters the
    four of them with alternating sign.
    """
    if fr.order != ssm.order:
        raise ValidationError(
            f"forced correction was computed at order {fr.order}, "
            f"manifold at order {ssm.order}")
    lam = ssm.lambda_master
    a = np.concatenate(([lam.real], ssm.gamma.real))
    b = np.concatenate(([lam.imag], ssm.gamma.imag))
    c, d = fr.c_res, fr.d_pm
    return ReducedDynamics(omega=fr.omega, order=ssm.order, lambda_master=lam,
                           a_coeffs=a, b_coeffs=b,
                           f1=c.real + d.real, f2=c.imag - d.imag,
                           g1=c.imag + d.imag, g2=c.real - d.real,
                           eps=eps)


def _resolve(rd: ReducedDynamics, eps) -> float:
    if eps is None:
        eps = rd.eps
    if eps is None:
        raise ValidationError("forcing amplitude eps is required")
    return float(eps)


def zero_problem(rd: ReducedDynamics, u, eps: float | None = None):
    """Fixed-point equations F(u) = (rho', rho * psi') at u = (rho, Omega, psi).

    Zeros of both components are periodic responses.  The second component
    carries the extra factor rho so the pair stays regular through rho -> 0.
    """
    eps = _resolve(rd, eps)
    rho, omega, psi = u
    rho = np.asarray(rho, dtype=float)
    cp, sp = np.cos(psi), np.sin(psi)
    f1 = rd.a_of(rho) + eps * (rd.f1_of(rho) * cp + rd.f2_of(rho) * sp)
    f2 = (rd.b_of(rho) - omega) * rho + eps * (rd.g1_of(rho) * cp
                                               - rd.g2_of(rho) * sp)
    return f1, f2


@dataclass
class StabilityReport:
    """Classification of one polar fixed point."""
    u: FixedPointU
    eigenvalues: np.ndarray
    jacobian: np.ndarray
    label: str  # "stable" | "unstable" | "fold-degenerate"

    @property
    def stable(self) -> bool | None:
        if self.label == "fold-degenerate":
            return None
        return self.label == "stable"


def fixed_point_stability(rd: ReducedDynamics, u,
                          eps: float | None = None) -> StabilityReport:
    """Classify a fixed point u = (rho, Omega, psi) by the polar Jacobian.

    The Jacobian differentiates the true planar field (rho', psi') — with its
    1/rho forcing term — analytically in (rho, psi) at fixed Omega and eps.
    Both eigenvalue real parts negative means stable; a real part within
    STABILITY_MARGIN of zero is reported as fold-degenerate.
    """
    eps = _resolve(rd, eps)
    rho, omega, psi = float(u[0]), float(u[1]), float(u[2])
    if rho <= 0:
        raise SingularChartError(
            "stability chart is singular at rho = 0; use a positive amplitude")
    cp, sp = np.cos(psi), np.sin(psi)
    f1, f2 = rd.f1_of(rho), rd.f2_of(rho)
    g1, g2 = rd.g1_of(rho), rd.g2_of(rho)
    dg1, dg2 = _even_dval(rd.g1, rho), _even_dval(rd.g2, rho)

    j11 = rd.da_of(rho) + eps * (_even_dval(rd.f1, rho) * cp
                                 + _even_dval(rd.f2, rho) * sp)
    j12 = eps * (-f1 * sp + f2 * cp)
    j21 = rd.db_of(rho) + eps * ((dg1 / rho - g1 / rho ** 2) * cp
                                 - (dg2 / rho - g2 / rho ** 2) * sp)
    j22 = eps * (-g1 * sp - g2 * cp) / rho
    jac = np.array([[j11, j12], [j21, j22]], dtype=float)
    eig = np.linalg.eigvals(jac)
    re = eig.real
    if np.any(np.abs(re) < STABILITY_MARGIN):
        label = "fold-degenerate"
    elif np.all(re < 0):
        label = "stable"
    else:
        label = "unstable"
    point = FixedPointU(rho=rho, omega=omega, psi=psi, stability=label,
                        eps=eps)
    return StabilityReport(u=point, eigenvalues=eig, jacobian=jac, label=label)


def polar_field(rd: ReducedDynamics, u, eps: float | None = None):
    """The raw planar field (rho', psi') at u; singular at rho = 0."""
    rho = np.asarray(u[0], dtype=float)
    if np.any(rho <= 0):
        raise SingularChartError(
            "polar field is singular at rho = 0; use a positive amplitude")
    f1, f2 = zero_problem(rd, u, eps=eps)
    return f1, f2 / rho
