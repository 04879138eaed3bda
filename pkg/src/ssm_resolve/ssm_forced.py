"""First-order-in-forcing correction to the invariant manifold.

With physical forcing ``eps * f * cos(Omega t)`` the manifold and its reduced
dynamics acquire O(eps) corrections, each split into two harmonics:

    W(s, t) = W0(s) + eps * (e^{+i Omega t} Wp(s) + e^{-i Omega t} Wm(s))
    R(s, t) = R0(s) + eps * (e^{+i Omega t} Rp(s) + e^{-i Omega t} Rm(s))

Matching the invariance equation at O(eps) per harmonic gives, coefficient by
coefficient in the master monomials s1**k1 * s2**k2,

    (lam_i - <k, lam_E> -/+ i*Omega) * w_{i,k} = r_{i,k} [master rows]
                                                 + alpha_{i,k}

where alpha collects already-known lower-degree data: the resonant part of R0
acting on the correction, the higher-degree embedding carrying the reduced
correction, the nonlinearity's Jacobian along the unforced manifold, and (at
degree zero) the forcing itself.  Slots whose denominator degenerates as
Omega approaches the master frequency are classified *structurally* (by the
exponent pattern, not by the numeric value of Omega): there the embedding
coefficient is set to zero and the reduced coefficient takes the slack.  All
other slots are enslaved by a scalar division, guarded against accidental
near-resonance with non-master modes.

Everything downstream (response curves, fold points, isola geometry) consumes
the reduced coefficients collected here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InternalResonanceError
from .polyalg import dense_mask, dense_zero, dense_mul, dense_pow, dense_eval
from .ssm_auto import AutonomousSsm

#: relative threshold on enslaved denominators (vs max(|lam_i|, |Omega|))
ENSLAVED_GUARD = 1e-8


def leading_forcing_coefficient(mm) -> complex:
    """Forcing amplitude seen by the master mode: (T^-1 F)_1 / 2.

    This is the degree-zero reduced coefficient of the e^{+i Omega t}
    harmonic; it is independent of Omega and sets the scale of every
    forced-response feature.
    """
    return complex(mm.F_m[0]) / 2.0


def _dense_truncate(arr: np.ndarray, order: int) -> np.ndarray:
    out = np.array(arr[..., :order + 1, :order + 1])
    out[..., ~dense_mask(order)] = 0.0
    return out


def _forced_caches(ssm: AutonomousSsm) -> dict:
    """Omega-independent work arrays shared by every forced solve."""
    cache = ssm.caches.get("forced")
    if cache is not None:
        return cache
    mm = ssm.mm
    d1 = ssm.order - 1
    w0 = ssm.w0_dense
    n2 = w0.shape[0]

    x = {v: _dense_truncate(np.einsum("l,lpq->pq", mm.T[v, :], w0), d1)
         for v in mm.active_vars}

    dw = np.zeros((2, n2, d1 + 1, d1 + 1), dtype=complex)
    mult = np.arange(1, d1 + 2)
    dw[0] = w0[:, 1:d1 + 2, :d1 + 1] * mult[None, :, None]
    dw[1] = w0[:, :d1 + 1, 1:d1 + 2] * mult[None, None, :]
    dw[:, :, ~dense_mask(d1)] = 0.0

    jac_factors = []
    for t in mm.terms:
        per_var = {}
        for j, e in enumerate(t.exponents):
            if not e:
                continue
            prod = dense_zero(d1)
            prod[0, 0] = 1.0
            for v, ev in enumerate(t.exponents):
                p = ev - (1 if v == j else 0)
                if p:
                    prod = dense_mul(prod, dense_pow(x[v], p, d1), d1)
            per_var[j] = t.coeff * e * prod
        jac_factors.append(per_var)

    cache = {"d1": d1, "x": x, "dw": dw, "jac": jac_factors}
    ssm.caches["forced"] = cache
    return cache


@dataclass
class ForcedReduction:
    """O(eps) manifold and reduced-dynamics correction at one frequency.

    ``w_plus``/``w_minus`` hold the embedding corrections of the two
    harmonics as dense coefficient arrays (rows, k1, k2); ``r_plus``/
    ``r_minus`` the reduced-field corrections for the two master rows.
    ``c_res[i]`` is the e^{+} reduced coefficient on the diagonal slot
    (i, i) of row 1; ``d_pm[i]`` the e^{-} row-1 coefficient on slot
    (i+1, i-1) — together they are exactly the data entering the polar
    fixed-point problem.
    """
    omega: float
    order: int
    lambda_master: complex
    w_plus: np.ndarray
    w_minus: np.ndarray
    r_plus: np.ndarray
    r_minus: np.ndarray
    c_res: np.ndarray
    d_pm: np.ndarray
    forcing_half: np.ndarray
    min_enslaved_den: float

    @property
    def half_order(self) -> int:
        return len(self.c_res) - 1

    def w1_at(self, s1, s2, phase) -> np.ndarray:
        """Evaluate the time-dependent correction at forcing phase Omega*t."""
        wp = dense_eval(self.w_plus, s1, s2)
        wm = dense_eval(self.w_minus, s1, s2)
        return np.exp(1j * phase) * wp + np.exp(-1j * phase) * wm

    def r1_at(self, s1, s2, phase) -> np.ndarray:
        rp = dense_eval(self.r_plus, s1, s2)
        rm = dense_eval(self.r_minus, s1, s2)
        return np.exp(1j * phase) * rp + np.exp(-1j * phase) * rm


def compute_nonautonomous_ssm(ssm: AutonomousSsm, omega: float,
                              *, guard: float = ENSLAVED_GUARD) -> ForcedReduction:
    """Solve the O(eps) invariance equation at forcing frequency ``omega``.

    The expansion runs to total degree ``ssm.order - 1``, which is exactly
    what the unforced embedding of degree ``ssm.order`` supports.
    """
    mm = ssm.mm
    cache = _forced_caches(ssm)
    d1 = cache["d1"]
    lam = mm.eigenvalues
    n2 = len(lam)
    lam1, lam2 = lam[0], lam[1]
    f_half = mm.F_m / 2.0
    w0 = ssm.w0_dense

    sides = {}
    min_den = np.inf
    for sign in (+1, -1):
        w1 = dense_zero(d1, rows=n2)
        r1 = dense_zero(d1, rows=2)
        filled: list[tuple[int, int, int, complex]] = []
        xw1 = {j: None for j in mm.active_vars}

        for d in range(d1 + 1):
            k1 = np.arange(d + 1)
            k2 = d - k1

            cross = np.zeros((n2, d + 1), dtype=complex)
            for j0, (g1, g2) in enumerate(zip(ssm.gamma, ssm.gamma_row2)):
                j = j0 + 1
                p1, p2 = k1 - j, k2 - j
                ok = (p1 >= 0) & (p2 >= 0)
                if np.any(ok):
                    weight = g1 * p1[ok] + g2 * p2[ok]
                    cross[:, ok] += weight[None, :] * w1[:, p1[ok], p2[ok]]

            carry = np.zeros((n2, d + 1), dtype=complex)
            for jrow, kp1, kp2, val in filled:
                m1 = k1 - kp1 + (1 if jrow == 0 else 0)
                m2 = k2 - kp2 + (1 if jrow == 1 else 0)
                mj = m1 if jrow == 0 else m2
                ok = (m1 >= 0) & (m2 >= 0) & (mj >= 1)
                if np.any(ok):
                    carry[:, ok] += (val * mj[ok])[None, :] * w0[:, m1[ok], m2[ok]]

            jac = np.zeros((n2, d + 1), dtype=complex)
            if d >= 1 and mm.terms:
                for j in mm.active_vars:
                    xw1[j] = np.einsum("l,lpq->pq", mm.T[j, :], w1)
                for t, per_var in zip(mm.terms, cache["jac"]):
                    acc = np.zeros(d + 1, dtype=complex)
                    for j, u in per_var.items():
                        acc += dense_mul(u, xw1[j], d1)[k1, k2]
                    jac += np.multiply.outer(t.beta, acc)

            alpha = cross + carry - jac
            if d == 0:
                alpha[:, 0] -= f_half

            den = (lam[:, None] - (k1 * lam1 + k2 * lam2)[None, :]
                   - sign * 1j * omega)
            resonant = np.zeros((n2, d + 1), dtype=bool)
            resonant[0] = (k1 - k2) == (1 - sign)
            resonant[1] = (k1 - k2) == -(1 + sign)

            scale = np.maximum(np.abs(lam), abs(omega))
            small = (np.abs(den) < guard * scale[:, None]) & ~resonant
            if np.any(small):
                i, kk = np.argwhere(small)[0]
                raise InternalResonanceError(
                    f"enslaved coefficient near-resonant at Omega={omega:g}: "
                    f"|lambda_{i} - <({k1[kk]},{k2[kk]}), lambda_master> "
                    f"{'-' if sign > 0 else '+'} i*Omega| = "
                    f"{abs(den[i, kk]):.3e}")

            if np.any(~resonant):
                min_den = min(min_den, float(np.abs(den[~resonant]).min()))
            vals = np.where(resonant, 0.0, alpha / den)
            w1[:, k1, k2] = vals
            for i in (0, 1):
                hit = np.flatnonzero(resonant[i])
                for kk in hit:
                    val = -alpha[i, kk]
                    r1[i, k1[kk], k2[kk]] = val
                    filled.append((i, int(k1[kk]), int(k2[kk]), val))

        sides[sign] = (w1, r1)

    w_plus, r_plus = sides[+1]
    w_minus, r_minus = sides[-1]

    m_res = d1 // 2
    c_res = np.array([r_plus[0, i, i] for i in range(m_res + 1)])
    d_pm = np.zeros(m_res + 1, dtype=complex)
    for i in range(1, m_res + 1):
        d_pm[i] = r_minus[0, i + 1, i - 1]

    return ForcedReduction(omega=float(omega), order=ssm.order,
                           lambda_master=ssm.lambda_master,
                           w_plus=w_plus, w_minus=w_minus,
                           r_plus=r_plus, r_minus=r_minus,
                           c_res=c_res, d_pm=d_pm,
                           forcing_half=f_half,
                           min_enslaved_den=float(min_den))


def _exact_jacobian_apply(mm, q: np.ndarray, u: np.ndarray) -> np.ndarray:
    """DG(q) @ u evaluated exactly from the modal nonlinearity terms."""
    out = np.zeros_like(u)
    if not mm.terms:
        return out
    xq = mm.T @ q
    xu = mm.T @ u
    for t in mm.terms:
        acc = np.zeros(q.shape[1:], dtype=complex)
        for j, e in enumerate(t.exponents):
            if not e:
                continue
            fac = t.coeff * e
            factor = np.ones(q.shape[1:], dtype=complex) * fac
            for v, ev in enumerate(t.exponents):
                p = ev - (1 if v == j else 0)
                if p:
                    factor = factor * xq[v] ** p
            acc += factor * xu[j]
        out += np.multiply.outer(t.beta, acc)
    return out


def forced_residual(ssm: AutonomousSsm, fr: ForcedReduction, samples) -> dict:
    """O(eps) invariance defect per harmonic at sample points s1 (s2 = conj).

    The nonlinearity Jacobian is evaluated exactly at the unforced embedding,
    so the defect measures the truncation error of the correction itself.
    Relative values are scaled by |forcing|/2 + |Lambda W1| per sample.
    """
    mm = ssm.mm
    s1 = np.atleast_1d(np.asarray(samples, dtype=complex))
    s2 = np.conj(s1)
    npts = len(s1)
    n2 = len(mm.eigenvalues)
    d1 = fr.order - 1

    q0 = ssm.w0_at(s1, s2).reshape(n2, -1)
    r0 = ssm.r0_at(s1, s2)

    dw0 = _forced_caches(ssm)["dw"]
    dw0_1 = dense_eval(dw0[0], s1, s2).reshape(n2, -1)
    dw0_2 = dense_eval(dw0[1], s1, s2).reshape(n2, -1)

    worst_abs = np.zeros(npts)
    scale = np.full(npts, np.linalg.norm(fr.forcing_half))
    for sign, w1arr, r1arr in ((+1, fr.w_plus, fr.r_plus),
                               (-1, fr.w_minus, fr.r_minus)):
        w1v = dense_eval(w1arr, s1, s2).reshape(n2, -1)
        idx = np.arange(1, d1 + 1)
        dwa = np.zeros_like(w1arr)
        dwa[:, :d1, :] = w1arr[:, 1:, :] * idx[None, :, None]
        dwb = np.zeros_like(w1arr)
        dwb[:, :, :d1] = w1arr[:, :, 1:] * idx[None, None, :]
        dw1_1 = dense_eval(dwa, s1, s2).reshape(n2, -1)
        dw1_2 = dense_eval(dwb, s1, s2).reshape(n2, -1)
        r1v = dense_eval(r1arr, s1, s2).reshape(2, -1)

        lin = mm.eigenvalues[:, None] * w1v
        res = (sign * 1j * fr.omega * w1v
               + dw1_1 * r0[0] + dw1_2 * r0[1]
               + dw0_1 * r1v[0] + dw0_2 * r1v[1]
               - lin
               - _exact_jacobian_apply(mm, q0, w1v)
               - fr.forcing_half[:, None])
        worst_abs = np.maximum(worst_abs, np.linalg.norm(res, axis=0))
        scale = np.maximum(scale, np.linalg.norm(lin, axis=0))

    rel = worst_abs / np.maximum(scale, 1e-300)
    return {
        "absolute": worst_abs,
        "relative": rel,
        "max_absolute": float(worst_abs.max()),
        "max_relative": float(rel.max()),
    }


def forced_residual_slope(ssm: AutonomousSsm, fr: ForcedReduction, radii=None,
                          n_angles: int = 16, seed: int = 0) -> float:
    """Log-log slope of the max relative O(eps) defect vs sample radius."""
    if radii is None:
        radii = np.logspace(-2, -0.8, 7)
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0, 2 * np.pi, n_angles)
    worst = []
    for r in radii:
        res = forced_residual(ssm, fr, r * np.exp(1j * angles))
        worst.append(res["max_relative"])
    slope = np.polyfit(np.log(radii), np.log(worst), 1)[0]
    return float(slope)
