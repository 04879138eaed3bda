"""Forced response curves: tracing, folds, components, physical amplitudes.

A periodic response at amplitude rho and frequency Omega exists when the
polar fixed-point equations admit a solution in psi.  Eliminating psi with
the tangent half-angle K = tan(psi/2) turns the radial equation into the
quadratic

    (a - eps*f1) K**2 + 2*eps*f2 K + (a + eps*f1) = 0,

whose discriminant (up to a factor 4) is  disc = eps**2 (f1**2 + f2**2) - a**2.
Real responses exist where disc >= 0; disc = 0 marks folds of the response
curve over the frequency axis.  The curve is traced on a rho grid: at each
admissible rho and branch, the remaining phase equation G = 0 is solved for
Omega (the f/g coefficients themselves depend on Omega, so the solve wraps
the forced-stage computation), every solution is verified against the full
zero problem and stability-tagged, and the accepted points are grouped into
connected components by proximity in the (Omega, rho) plane.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ValidationError
from .polyalg import dense_eval
from .ssm_auto import AutonomousSsm
from .ssm_forced import ForcedReduction, compute_nonautonomous_ssm
from .reduced import (ReducedDynamics, FixedPointU, assemble_polar,
                      zero_problem, fixed_point_stability)

#: |a - eps*f1| below this switches the K quadratic to its linear limit
DEGENERATE_LEAD = 1e-14
#: convergence target on |G| in the Omega solve
G_TOL = 1e-12
#: verification bound on the full zero problem at accepted points
POINT_TOL = 1e-10
#: relative bound on the discriminant at reported folds
FOLD_TOL = 1e-12

BRANCHES = ("K+", "K-")


def discriminant(rd: ReducedDynamics, rho, eps: float):
    """eps**2 (f1**2 + f2**2) - a**2 at amplitude rho."""
    a = rd.a_of(rho)
    return eps ** 2 * (rd.f1_of(rho) ** 2 + rd.f2_of(rho) ** 2) - a ** 2


def k_branches(rd: ReducedDynamics, rho: float, eps: float) -> list[float]:
    """Real roots K of the radial equation at amplitude rho.

    Returns zero, one, or two values ordered (K+, K-); an empty list means
    no response exists at this amplitude.  A degenerate leading coefficient
    yields the linear root plus ``math.inf`` standing for the K -> infinity
    solution (psi = pi).
    """
    a = float(rd.a_of(rho))
    f1 = float(rd.f1_of(rho))
    f2 = float(rd.f2_of(rho))
    lead = a - eps * f1
    if abs(lead) < DEGENERATE_LEAD:
        b_lin = 2 * eps * f2
        if abs(b_lin) < DEGENERATE_LEAD:
            return []
        return [-(a + eps * f1) / b_lin, math.inf]
    disc = eps ** 2 * (f1 ** 2 + f2 ** 2) - a ** 2
    if disc < 0:
        return []
    root = math.sqrt(disc)
    return [(-eps * f2 + root) / lead, (-eps * f2 - root) / lead]


def psi_from_k(k: float) -> float:
    """Phase from the tangent half-angle; infinity maps to psi = pi."""
    if math.isinf(k):
        return math.pi
    return math.atan2(2 * k, 1 - k * k) % (2 * math.pi)


def frc_G(rd: ReducedDynamics, rho: float, omega: float, eps: float,
          branch: str) -> float | None:
    """Phase-equation residual at the branch's psi; None if no such branch.

    The radial equation is satisfied identically by the K construction, so
    this scalar is the only remaining condition on Omega.
    """
    if branch not in BRANCHES:
        raise ValidationError(f"unknown branch {branch!r}; expected K+ or K-")
    ks = k_branches(rd, rho, eps)
    if len(ks) <= BRANCHES.index(branch):
        return None
    psi = psi_from_k(ks[BRANCHES.index(branch)])
    cp, sp = math.cos(psi), math.sin(psi)
    return float((rd.b_of(rho) - omega) * rho
                 + eps * (rd.g1_of(rho) * cp - rd.g2_of(rho) * sp))


@dataclass
class FrcCurve:
    """Sampled forced response curve at one forcing amplitude."""
    eps: float
    order: int
    points: list[FixedPointU]
    folds: np.ndarray
    components: list[list[int]]
    rho_max: float
    n_rho: int
    omega_window: tuple[float, float] | None = None
    skipped: list[tuple[float, str, str]] = field(default_factory=list)

    def component_of(self, index: int) -> int:
        for ci, members in enumerate(self.components):
            if index in members:
                return ci
        raise ValidationError(f"point index {index} not in any component")


def _rd_at(ssm: AutonomousSsm, omega: float, eps: float,
           cache: dict) -> ReducedDynamics:
    rd = cache.get(omega)
    if rd is None:
        rd = assemble_polar(ssm, compute_nonautonomous_ssm(ssm, omega), eps)
        cache[omega] = rd
    return rd


def _solve_omega(ssm: AutonomousSsm, rho: float, eps: float, branch: str,
                 omega0: float, cache: dict, psi_double: bool = False,
                 max_iter: int = 50):
    """Safeguarded secant iteration for G(Omega) = 0 at fixed (rho, branch).

    With ``psi_double`` the phase is frozen at the double root
    K = -eps*f2/(a - eps*f1) instead of the branch root, which keeps the
    iteration defined on the far side of a fold (used to bracket folds).
    Returns (omega, rd, G) or None on divergence.
    """
    def g_of(om: float):
        rd = _rd_at(ssm, om, eps, cache)
        if psi_double:
            a = float(rd.a_of(rho))
            f1 = float(rd.f1_of(rho))
            f2 = float(rd.f2_of(rho))
            lead = a - eps * f1
            k = math.inf if abs(lead) < DEGENERATE_LEAD else -eps * f2 / lead
            psi = psi_from_k(k)
            g = float((rd.b_of(rho) - om) * rho
                      + eps * (rd.g1_of(rho) * math.cos(psi)
                               - rd.g2_of(rho) * math.sin(psi)))
            return g, rd
        return frc_G(rd, rho, om, eps, branch), rd

    om = float(omega0)
    g, rd = g_of(om)
    if g is None:
        return None
    h = 1e-7 * max(1.0, abs(om))
    for _ in range(max_iter):
        if abs(g) <= G_TOL:
            return om, rd, g
        g2, _ = g_of(om + h)
        if g2 is None or g2 == g:
            return None
        slope = (g2 - g) / h
        step = -g / slope
        # safeguard: halve the step until the residual actually shrinks
        for _ in range(12):
            g_new, rd_new = g_of(om + step)
            if g_new is not None and abs(g_new) < abs(g):
                break
            step /= 2
        else:
            return None
        om, g, rd = om + step, g_new, rd_new
    return (om, rd, g) if abs(g) <= G_TOL else None


def trace_frc(ssm: AutonomousSsm, mm, eps: float, rho_max: float,
              n_rho: int, omega_window: tuple[float, float] | None = None) -> FrcCurve:
    """Trace the forced response curve on a rho grid.

    Parameters
    ----------
    ssm : AutonomousSsm
    mm : ModalModel
        The modal model the manifold was built from (kept for signature
        symmetry with the rest of the pipeline; the manifold carries it too).
    eps : float
        Forcing amplitude (> 0).
    rho_max, n_rho : float, int
        Upper end and resolution of the amplitude grid.
    omega_window : (float, float), optional
        Keep only responses with Omega inside this closed interval.
    """
    if eps <= 0:
        raise ValidationError("eps must be > 0 (use the unforced analysis "
                              "for eps = 0)")
    if rho_max <= 0 or n_rho < 2:
        raise ValidationError("need rho_max > 0 and n_rho >= 2")

    grid = np.linspace(0.0, rho_max, n_rho + 1)[1:]
    step = grid[1] - grid[0]
    cache: dict = {}
    points: list[FixedPointU] = []
    skipped: list[tuple[float, str, str]] = []
    disc_trace: dict[str, list[tuple[float, float]]] = {b: [] for b in BRANCHES}

    warm: dict[str, float | None] = {b: None for b in BRANCHES}
    for rho in grid:
        rho = float(rho)
        for branch in BRANCHES:
            sign = +1 if branch == "K+" else -1
            rd0 = _rd_at(ssm, warm[branch] if warm[branch] is not None
                         else float(np.polynomial.polynomial.polyval(
                             rho ** 2, np.concatenate((
                                 [ssm.lambda_master.imag], ssm.gamma.imag)))),
                         eps, cache)
            disc0 = float(discriminant(rd0, rho, eps))
            seed = rd0.b_of(rho) + sign * math.sqrt(max(disc0, 0.0)) / rho
            sol = _solve_omega(ssm, rho, eps, branch, seed, cache)
            if sol is None:
                # try the plain backbone seed before giving up
                sol = _solve_omega(ssm, rho, eps, branch,
                                   float(rd0.b_of(rho)), cache)
            if sol is None:
                disc_here = float(discriminant(rd0, rho, eps))
                if disc_here >= 0:
                    skipped.append((rho, branch, "omega iteration diverged"))
                disc_trace[branch].append((rho, disc_here))
                warm[branch] = None
                continue
            om, rd, g = sol
            disc_trace[branch].append((rho, float(discriminant(rd, rho, eps))))
            warm[branch] = om
            ks = k_branches(rd, rho, eps)
            if len(ks) <= BRANCHES.index(branch):
                continue
            psi = psi_from_k(ks[BRANCHES.index(branch)])
            f1v, f2v = zero_problem(rd, (rho, om, psi), eps=eps)
            if max(abs(float(f1v)), abs(float(f2v))) > POINT_TOL:
                skipped.append((rho, branch, "zero-problem residual too large"))
                continue
            if omega_window is not None and not (
                    omega_window[0] <= om <= omega_window[1]):
                skipped.append((rho, branch, "omega outside window"))
                continue
            rep = fixed_point_stability(rd, (rho, om, psi), eps=eps)
            points.append(FixedPointU(rho=rho, omega=om, psi=psi,
                                      stability=rep.label, branch=branch,
                                      eps=eps))

    folds = _locate_folds(ssm, eps, disc_trace, cache)
    components = _group_components(points, step, folds)
    return FrcCurve(eps=eps, order=ssm.order, points=points,
                    folds=np.asarray(folds), components=components,
                    rho_max=rho_max, n_rho=n_rho,
                    omega_window=omega_window, skipped=skipped)


def _locate_folds(ssm: AutonomousSsm, eps: float, disc_trace: dict,
                  cache: dict) -> list[float]:
    """Bisect the discriminant (along the double-root Omega) at sign changes."""

    def disc_at(rho: float) -> float:
        seed_rd = _rd_at(ssm, float(np.polynomial.polynomial.polyval(
            rho ** 2, np.concatenate(([ssm.lambda_master.imag],
                                      ssm.gamma.imag)))), eps, cache)
        sol = _solve_omega(ssm, rho, eps, "K+", float(seed_rd.b_of(rho)),
                           cache, psi_double=True)
        rd = sol[1] if sol is not None else seed_rd
        return float(discriminant(rd, rho, eps))

    folds: list[float] = []
    by_rho: dict[float, float] = {}
    for b in disc_trace:
        for (r, d) in disc_trace[b]:
            by_rho.setdefault(round(r, 15), d)
    samples = sorted(by_rho.items())
    for (r0, d0), (r1, d1) in zip(samples[:-1], samples[1:]):
        if d0 == 0.0:
            folds.append(float(r0))
        if d0 * d1 < 0:
            rho_f = brentq(disc_at, r0, r1, xtol=1e-15, rtol=8.9e-16)
            folds.append(float(rho_f))
    if samples and samples[-1][1] == 0.0:
        folds.append(float(samples[-1][0]))
    # de-duplicate folds found from both branch traces
    folds.sort()
    out: list[float] = []
    for r in folds:
        if not out or abs(r - out[-1]) > 1e-12 * max(1.0, abs(r)):
            out.append(r)
    return out


def _group_components(points: list[FixedPointU], step: float,
                      folds=()) -> list[list[int]]:
    """Union points within (2 grid steps, 4 * median Omega-gap) adjacency.

    The Omega scale is measured locally: each same-branch chain gap is
    compared against the median of itself and its two flanking gaps, and a
    point's own scale (used for cross-branch pairing near folds) is the
    median of its nearest chain gaps.  A local median is essential: the
    low-amplitude tail of the main branch has Omega steps growing like
    1/rho**2, so a single global median would cut a perfectly smooth curve
    into fragments, while a genuine jump still towers over its neighbors.

    The two branch segments of one curve meet exactly at folds, where their
    Omega values coalesce only in the limit; on a fine rho grid the last
    sampled rows can still be several local Omega scales apart.  Each
    located fold therefore stitches together the nearest point of either
    branch within two grid steps of it.
    """
    n = len(points)
    if n == 0:
        return []
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    rho_tol = 2 * step * (1 + 1e-9)
    scale = np.zeros(n)
    for b in BRANCHES:
        chain = sorted((i for i in range(n) if points[i].branch == b),
                       key=lambda i: points[i].rho)
        gaps = [abs(points[i].omega - points[j].omega)
                for i, j in zip(chain[:-1], chain[1:])]
        for k, (i, j) in enumerate(zip(chain[:-1], chain[1:])):
            if points[j].rho - points[i].rho > rho_tol:
                continue
            local = float(np.median(gaps[max(0, k - 1):k + 2]))
            if gaps[k] <= 4 * max(local, 1e-15):
                union(i, j)
        for pos, i in enumerate(chain):
            near = gaps[max(0, pos - 2):pos + 2]
            scale[i] = float(np.median(near)) if near else 0.0

    by_rho = sorted(range(n), key=lambda i: points[i].rho)
    rhos = [points[i].rho for i in by_rho]
    for pos, i in enumerate(by_rho):
        lo = bisect_left(rhos, points[i].rho - rho_tol, 0, pos)
        for j in by_rho[lo:pos]:
            if points[i].branch == points[j].branch:
                continue
            if abs(points[i].omega - points[j].omega) <= 4 * max(scale[i],
                                                                 scale[j]):
                union(i, j)

    for rho_f in folds:
        pair = []
        for b in BRANCHES:
            best = min((i for i in range(n) if points[i].branch == b
                        and abs(points[i].rho - rho_f) <= rho_tol),
                       key=lambda i: abs(points[i].rho - rho_f),
                       default=None)
            if best is not None:
                pair.append(best)
        if len(pair) == 2:
            union(*pair)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    comps = list(groups.values())
    comps.sort(key=lambda members: min(points[i].rho for i in members))
    return comps


def physical_amplitude(ssm: AutonomousSsm, fr: ForcedReduction,
                       u: FixedPointU, coord: int,
                       eps: float | None = None, n_phase: int = 256) -> float:
    """Peak |x_coord| of the reconstructed periodic orbit.

    The orbit is x(phi) = T (W0 + eps W1)(rho e^{i(psi+phi)},
    rho e^{-i(psi+phi)}, phi) over one forcing period; the maximum over a
    phase grid (>= 256 points) is polished by a local bounded search so the
    returned peak is grid-independent.
    """
    if eps is None:
        eps = u.eps
    if eps is None:
        raise ValidationError("forcing amplitude eps is required")
    mm = ssm.mm
    row0 = np.einsum("l,lpq->pq", mm.T[coord, :], ssm.w0_dense)
    rowp = np.einsum("l,lpq->pq", mm.T[coord, :], fr.w_plus)
    rowm = np.einsum("l,lpq->pq", mm.T[coord, :], fr.w_minus)

    def value(phi):
        s1 = u.rho * np.exp(1j * (u.psi + np.asarray(phi)))
        s2 = np.conj(s1)
        x = (dense_eval(row0, s1, s2)
             + eps * (np.exp(1j * np.asarray(phi)) * dense_eval(rowp, s1, s2)
                      + np.exp(-1j * np.asarray(phi)) * dense_eval(rowm, s1, s2)))
        return np.abs(np.real(x))

    n = max(int(n_phase), 256)
    phis = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    vals = value(phis)
    k = int(np.argmax(vals))
    lo, hi = phis[k] - 2 * np.pi / n, phis[k] + 2 * np.pi / n
    res = minimize_scalar(lambda p: -float(value(p)), bounds=(lo, hi),
                          method="bounded",
                          options={"xatol": 1e-12, "maxiter": 200})
    return float(max(vals[k], -res.fun))
