"""Mutual information, measurement-optimized classical correlation, discord, Holevo quantity.

The classical correlation J is a supremum over measurements on one qubit.
The optimizer restricts to rank-1 projective measurements (two antipodal
outcomes on the Bloch sphere), locates the optimum with a 400-direction
Fibonacci-sphere scan, and polishes it with Nelder-Mead on (theta, phi).
All quantities are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .qmath import (
    ContractViolation,
    check_density_operator,
    partial_trace,
    projector,
    von_neumann_entropy,
)

#: Number of Fibonacci-sphere directions scanned before local refinement.
GRID_SIZE = 400
#: Nelder-Mead termination tolerance for the (theta, phi) refinement.
REFINE_TOL = 1e-8
#: Allowed negativity of the reported discord (optimizer slack).
OPTIMIZER_SLACK = 1e-4


@dataclass(frozen=True)
class MeasurementBasis:
    """Projective qubit measurement along the Bloch direction (theta, phi).

    theta is the polar angle in [0, pi], phi the azimuth in [0, 2*pi).
    Out-of-range angles are canonicalized to the same physical direction.
    """

    theta: float
    phi: float

    def __post_init__(self):
        t = float(self.theta) % (2 * math.pi)
        p = float(self.phi)
        if t > math.pi:
            t = 2 * math.pi - t
            p += math.pi
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "phi", p % (2 * math.pi))

    def outcome_kets(self) -> tuple[np.ndarray, np.ndarray]:
        """The two orthogonal outcome kets (along +n and -n)."""
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        e = np.exp(1j * self.phi)
        return np.array([c, s * e]), np.array([s, -c * e])

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Rank-1 projectors summing to the identity."""
        v, w = self.outcome_kets()
        return projector(v), projector(w)


@dataclass(frozen=True)
class CorrelationReport:
    """I, J and discord delta = I - J for one state and one measured side."""

    mutual_information: float
    classical: float
    discord: float
    argmax_basis: MeasurementBasis
    measured_side: str

    def __post_init__(self):
        if abs(self.discord - (self.mutual_information - self.classical)) > 1e-12:
            raise ContractViolation("discord must equal I - J")
        if self.classical < -1e-9:
            raise ContractViolation(f"J = {self.classical} is negative")
        if self.mutual_information < self.classical - 1e-6:
            raise ContractViolation("I < J beyond tolerance")


@njit(cache=True)
def _j_projective(theta: float, phi: float, rho: np.ndarray, s_unmeasured: float) -> float:
    """J for measuring the FIRST qubit factor of a 4x4 state along (theta, phi).

    Uses the closed-form spectrum of the 2x2 conditional states; outcomes with
    probability below 1e-12 contribute zero.
    """
    ct = math.cos(theta / 2)
    st = math.sin(theta / 2)
    er = math.cos(phi)
    ei = math.sin(phi)
    e = complex(er, ei)
    total = s_unmeasured
    for outcome in range(2):
        if outcome == 0:
            u0 = complex(ct, 0.0)
            u1 = st * e
        else:
            u0 = complex(st, 0.0)
            u1 = -ct * e
        m00 = complex(0.0, 0.0)
        m01 = complex(0.0, 0.0)
        m10 = complex(0.0, 0.0)
        m11 = complex(0.0, 0.0)
        for i in range(2):
            cu = np.conj(u0) if i == 0 else np.conj(u1)
            for k in range(2):
                uk = u0 if k == 0 else u1
                c = cu * uk
                m00 += c * rho[2 * i, 2 * k]
                m01 += c * rho[2 * i, 2 * k + 1]
                m10 += c * rho[2 * i + 1, 2 * k]
                m11 += c * rho[2 * i + 1, 2 * k + 1]
        p = m00.real + m11.real
        if p < 1e-12:
            continue
        det = (m00 * m11 - m01 * m10).real
        disc = p * p - 4.0 * det
        disc = math.sqrt(disc) if disc > 0.0 else 0.0
        lam1 = 0.5 * (p + disc)
        lam2 = 0.5 * (p - disc)
        # p * S(M/p) = -sum lam * log2(lam / p)
        for lam in (lam1, lam2):
            if lam > 1e-18:
                total -= -lam * math.log2(lam / p)
    return total


@njit(cache=True)
def _j_grid(thetas: np.ndarray, phis: np.ndarray, rho: np.ndarray, s_unmeasured: float) -> np.ndarray:
    out = np.empty(thetas.shape[0])
    for i in range(thetas.shape[0]):
        out[i] = _j_projective(thetas[i], phis[i], rho, s_unmeasured)
    return out


def _fibonacci_sphere(n: int) -> tuple[np.ndarray, np.ndarray]:
    i = np.arange(n) + 0.5
    theta = np.arccos(1.0 - 2.0 * i / n)
    phi = (math.pi * (1.0 + math.sqrt(5.0)) * i) % (2.0 * math.pi)
    return theta, phi


def _oriented(rho: np.ndarray, measured: str) -> np.ndarray:
    """Reorder a two-qubit state so the measured factor comes first."""
    if measured == "A":
        return rho
    if measured == "B":
        return np.ascontiguousarray(rho.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4))
    raise ContractViolation(f"measured side must be 'A' or 'B', got {measured!r}")


def _check_two_qubit(rho, dims: tuple[int, int]) -> np.ndarray:
    if tuple(dims) != (2, 2):
        raise ContractViolation(f"measurement optimization needs qubit factors, got dims {dims}")
    m = check_density_operator(rho)
    if m.shape[0] != 4:
        raise ContractViolation(f"dimension mismatch: {m.shape[0]} != 4")
    return m


def mutual_information(rho, dims: tuple[int, int] = (2, 2)) -> float:
    """I(A,B) = S(A) + S(B) - S(AB), non-negative to 1e-9."""
    m = check_density_operator(rho)
    da, db = dims
    if m.shape[0] != da * db:
        raise ContractViolation(f"dimension mismatch: {m.shape[0]} != {da}*{db}")
    i_ab = (
        von_neumann_entropy(partial_trace(m, dims, "A"))
        + von_neumann_entropy(partial_trace(m, dims, "B"))
        - von_neumann_entropy(m)
    )
    if i_ab < -1e-9:
        raise ContractViolation(f"mutual information {i_ab} below -1e-9")
    return max(i_ab, 0.0)


def conditional_J(rho, measured: str, basis: MeasurementBasis, dims: tuple[int, int] = (2, 2)) -> float:
    """Entropy reduction of the unmeasured side for one fixed projective basis."""
    m = _check_two_qubit(rho, dims)
    orient = _oriented(m, measured)
    keep = "B" if measured == "A" else "A"
    s_other = von_neumann_entropy(partial_trace(m, dims, keep))
    return float(_j_projective(basis.theta, basis.phi, orient, s_other))


def classical_correlation(
    rho,
    measured: str = "A",
    dims: tuple[int, int] = (2, 2),
    grid_size: int = GRID_SIZE,
) -> tuple[float, MeasurementBasis]:
    """Maximal projective-measurement correlation J and the optimizing basis.

    Coarse Fibonacci-sphere scan (``grid_size`` directions, deterministic
    tie-break toward smaller theta then smaller phi) followed by Nelder-Mead
    refinement at tolerance 1e-8.
    """
    m = _check_two_qubit(rho, dims)
    orient = _oriented(m, measured)
    keep = "B" if measured == "A" else "A"
    s_other = von_neumann_entropy(partial_trace(m, dims, keep))

    thetas, phis = _fibonacci_sphere(grid_size)
    values = _j_grid(thetas, phis, orient, s_other)
    best = values.max()
    ties = np.flatnonzero(values == best)
    if ties.size > 1:
        order = np.lexsort((phis[ties], thetas[ties]))
        k = int(ties[order[0]])
    else:
        k = int(ties[0])

    res = minimize(
        lambda x: -_j_projective(x[0], x[1], orient, s_other),
        np.array([thetas[k], phis[k]]),
        method="Nelder-Mead",
        options=dict(xatol=REFINE_TOL, fatol=REFINE_TOL**2, maxiter=2000),
    )
    j_refined = -float(res.fun)
    if j_refined >= best:
        basis = MeasurementBasis(float(res.x[0]), float(res.x[1]))
        j_best = j_refined
    else:
        basis = MeasurementBasis(float(thetas[k]), float(phis[k]))
        j_best = float(best)
    return max(j_best, 0.0), basis


def discord(rho, measured: str = "A", dims: tuple[int, int] = (2, 2)) -> CorrelationReport:
    """Full correlation report: I, supremal J, and discord delta = I - J."""
    i_ab = mutual_information(rho, dims)
    j, basis = classical_correlation(rho, measured, dims)
    delta = i_ab - j
    if delta < -OPTIMIZER_SLACK:
        raise ContractViolation(f"discord {delta} below optimizer slack -{OPTIMIZER_SLACK}")
    return CorrelationReport(
        mutual_information=i_ab,
        classical=j,
        discord=delta,
        argmax_basis=basis,
        measured_side=measured,
    )


def holevo_chi(ensemble) -> float:
    """Holevo quantity chi = S(sum p_i rho_i) - sum p_i S(rho_i).

    ``ensemble`` is a sequence of (probability, density operator or ket).
    Kets are promoted to projectors, so pure-state ensembles reduce to the
    entropy of the average state.
    """
    if not ensemble:
        raise ContractViolation("empty ensemble")
    probs = []
    states = []
    for p, state in ensemble:
        arr = np.asarray(state, dtype=complex)
        states.append(projector(arr) if arr.ndim == 1 else check_density_operator(arr))
        probs.append(float(p))
    probs_arr = np.asarray(probs)
    if np.any(probs_arr < 0) or abs(probs_arr.sum() - 1.0) > 1e-10:
        raise ContractViolation("probabilities must be non-negative and sum to 1")
    dim = states[0].shape[0]
    if any(s.shape[0] != dim for s in states):
        raise ContractViolation("ensemble states have mixed dimensions")
    avg = sum(p * s for p, s in zip(probs_arr, states))
    chi = von_neumann_entropy(avg) - sum(
        p * von_neumann_entropy(s) for p, s in zip(probs_arr, states) if p > 0
    )
    return float(chi)
