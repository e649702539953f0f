"""Jitted inner loop of the likelihood fit.

The 16 real parameters are a lower-triangular T (4 real diagonal entries,
then 6 complex sub-diagonal entries split into real and imaginary parts,
both in np.tril_indices order); the candidate state is T^dag T / tr(T^dag T),
which is positive and unit-trace by construction.  The objective is the
noise-weighted squared deviation of the 17 predicted populations.

Nelder-Mead is implemented here rather than through scipy because the
bootstrap re-runs the fit hundreds of times and the Python-level overhead
of a generic simplex driver dominates the runtime; the algorithm and its
standard coefficients (reflect 1, expand 2, contract 0.5, shrink 0.5) are
unchanged.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def params_to_rho(t: np.ndarray) -> np.ndarray:
    """Map the 16-parameter vector to a 4x4 density operator."""
    T = np.zeros((4, 4), np.complex128)
    T[0, 0] = t[0]
    T[1, 1] = t[1]
    T[2, 2] = t[2]
    T[3, 3] = t[3]
    T[1, 0] = complex(t[4], t[10])
    T[2, 0] = complex(t[5], t[11])
    T[2, 1] = complex(t[6], t[12])
    T[3, 0] = complex(t[7], t[13])
    T[3, 1] = complex(t[8], t[14])
    T[3, 2] = complex(t[9], t[15])
    rho = np.conj(T.T) @ T
    tr = rho[0, 0].real + rho[1, 1].real + rho[2, 2].real + rho[3, 3].real
    return rho / tr


@njit(cache=True)
def objective(t: np.ndarray, kmat: np.ndarray, p_exp: np.ndarray, weights: np.ndarray) -> float:
    """sum_j w_j (P_j(rho(t)) - P_j^exp)^2 with P = Re(kmat @ vec(rho))."""
    rho = params_to_rho(t)
    flat = rho.reshape(16)
    total = 0.0
    for j in range(kmat.shape[0]):
        pj = 0.0
        for m in range(16):
            pj += kmat[j, m].real * flat[m].real - kmat[j, m].imag * flat[m].imag
        d = pj - p_exp[j]
        total += weights[j] * d * d
    return total


@njit(cache=True)
def nelder_mead(
    x0: np.ndarray,
    kmat: np.ndarray,
    p_exp: np.ndarray,
    weights: np.ndarray,
    xatol: float,
    fatol: float,
    maxiter: int,
    maxfev: int,
):
    """Simplex minimization of ``objective``; returns (x, f, nfev, niter, converged)."""
    n = x0.shape[0]
    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        y = x0.copy()
        if y[i] != 0.0:
            y[i] *= 1.05
        else:
            y[i] = 0.00025
        sim[i + 1] = y
    fval = np.empty(n + 1)
    for i in range(n + 1):
        fval[i] = objective(sim[i], kmat, p_exp, weights)
    nfev = n + 1

    niter = 0
    converged = False
    while niter < maxiter and nfev < maxfev:
        order = np.argsort(fval, kind="mergesort")
        sim = sim[order]
        fval = fval[order]

        spread = 0.0
        for i in range(1, n + 1):
            for j in range(n):
                d = abs(sim[i, j] - sim[0, j])
                if d > spread:
                    spread = d
        if spread <= xatol and abs(fval[n] - fval[0]) <= fatol:
            converged = True
            break

        centroid = np.zeros(n)
        for i in range(n):
            for j in range(n):
                centroid[j] += sim[i, j]
        centroid /= n

        xr = centroid + (centroid - sim[n])
        fr = objective(xr, kmat, p_exp, weights)
        nfev += 1
        if fr < fval[0]:
            xe = centroid + 2.0 * (centroid - sim[n])
            fe = objective(xe, kmat, p_exp, weights)
            nfev += 1
            if fe < fr:
                sim[n] = xe
                fval[n] = fe
            else:
                sim[n] = xr
                fval[n] = fr
        elif fr < fval[n - 1]:
            sim[n] = xr
            fval[n] = fr
        else:
            shrink = False
            if fr < fval[n]:
                xc = centroid + 0.5 * (centroid - sim[n])
                fc = objective(xc, kmat, p_exp, weights)
                nfev += 1
                if fc <= fr:
                    sim[n] = xc
                    fval[n] = fc
                else:
                    shrink = True
            else:
                xc = centroid + 0.5 * (sim[n] - centroid)
                fc = objective(xc, kmat, p_exp, weights)
                nfev += 1
                if fc < fval[n]:
                    sim[n] = xc
                    fval[n] = fc
                else:
                    shrink = True
            if shrink:
                for i in range(1, n + 1):
                    sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                    fval[i] = objective(sim[i], kmat, p_exp, weights)
                    nfev += 1
        niter += 1

    best = int(np.argmin(fval))
    return sim[best].copy(), fval[best], nfev, niter, converged
