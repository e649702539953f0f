"""Bloch-direction spin states, six-direction pair ensembles, and the spin-flip map.

The two reference ensembles mix product pairs over the six coordinate
directions: the aligned family pairs each direction with itself, the
anti-aligned family pairs each direction with its antipode on the first spin.
The universal spin flip is anti-unitary and therefore acts on density
operators as partial transposition followed by a y-rotation of the target
factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmath import ContractViolation, check_density_operator, projector

DIRECTION_TOL = 1e-12

#: The six coordinate directions +x, -x, +y, -y, +z, -z, in that order.
STANDARD_DIRECTIONS = tuple(
    np.array(v, dtype=float)
    for v in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
)

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


def _check_direction(n) -> np.ndarray:
    v = np.asarray(n, dtype=float).reshape(-1)
    if v.shape != (3,):
        raise ContractViolation(f"direction must be a 3-vector, got shape {v.shape}")
    if abs(np.linalg.norm(v) - 1.0) > DIRECTION_TOL:
        raise ContractViolation(f"direction must be unit norm, |n| = {np.linalg.norm(v)}")
    return v


def bloch_state(n) -> np.ndarray:
    """Qubit ket pointing along the unit vector ``n``.

    Satisfies |n><n| = (I + n.sigma)/2.  Phase convention: the spin-up
    amplitude is real and non-negative; for n = -z the result is exactly
    (0, 1).
    """
    v = _check_direction(n)
    if v[2] <= -1.0 + DIRECTION_TOL:
        return np.array([0.0, 1.0], dtype=complex)
    theta = np.arccos(np.clip(v[2], -1.0, 1.0))
    phi = np.arctan2(v[1], v[0])
    return np.array([np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)])


@dataclass(frozen=True)
class SpinPairEnsemble:
    """Probabilistic mixture of product pure pairs (weight, dir_a, dir_b)."""

    members: tuple[tuple[float, np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        total = 0.0
        checked = []
        for w, na, nb in self.members:
            if w < 0:
                raise ContractViolation(f"negative ensemble weight {w}")
            checked.append((float(w), _check_direction(na), _check_direction(nb)))
            total += w
        if abs(total - 1.0) > DIRECTION_TOL:
            raise ContractViolation(f"ensemble weights sum to {total}, not 1")
        object.__setattr__(self, "members", tuple(checked))

    def __len__(self) -> int:
        return len(self.members)


def aligned_ensemble() -> SpinPairEnsemble:
    """Equal mixture of the six pairs |n>|n>."""
    return SpinPairEnsemble(tuple((1 / 6, n, n) for n in STANDARD_DIRECTIONS))


def antialigned_ensemble() -> SpinPairEnsemble:
    """Equal mixture of the six pairs |-n>|n>."""
    return SpinPairEnsemble(tuple((1 / 6, -n, n) for n in STANDARD_DIRECTIONS))


def ensemble_density(ensemble: SpinPairEnsemble) -> np.ndarray:
    """4x4 density operator sum_i w_i |a_i><a_i| (x) |b_i><b_i|."""
    rho = np.zeros((4, 4), dtype=complex)
    for w, na, nb in ensemble.members:
        rho += w * np.kron(projector(bloch_state(na)), projector(bloch_state(nb)))
    return rho


def aligned_pair_state() -> np.ndarray:
    """Density operator of the aligned six-direction mixture (eigenvalues 1/3,1/3,1/3,0)."""
    return ensemble_density(aligned_ensemble())


def antialigned_pair_state() -> np.ndarray:
    """Density operator of the anti-aligned mixture (eigenvalues 1/2,1/6,1/6,1/6)."""
    return ensemble_density(antialigned_ensemble())


def unot_apply(rho, dims: tuple[int, int], target: str) -> np.ndarray:
    """Universal spin flip on one qubit factor of a bipartite state.

    Implements the anti-unitary map (conjugate, then |down><up| - |up><down|)
    at the density-operator level: partial transpose of the target factor
    conjugated by sigma_y.  Applying it twice returns the input exactly.
    On separable inputs the output is again a density operator; on entangled
    inputs positivity can fail (the map is positive but not completely
    positive), which is exactly why no hardware implements it directly.
    """
    da, db = dims
    m = check_density_operator(rho)
    if m.shape[0] != da * db:
        raise ContractViolation(f"dimension mismatch: {m.shape[0]} != {da}*{db}")
    r = m.reshape(da, db, da, db)
    if target == "A":
        if da != 2:
            raise ContractViolation("spin flip target must be a qubit")
        rt = np.einsum("ijkl->kjil", r).reshape(da * db, da * db)
        y = np.kron(_SIGMA_Y, np.eye(db))
    elif target == "B":
        if db != 2:
            raise ContractViolation("spin flip target must be a qubit")
        rt = np.einsum("ijkl->ilkj", r).reshape(da * db, da * db)
        y = np.kron(np.eye(da), _SIGMA_Y)
    else:
        raise ContractViolation(f"target must be 'A' or 'B', got {target!r}")
    return y @ rt @ y


def quantum_classical_state(p, blocks) -> np.ndarray:
    """sum_i p_i |i><i| (x) rho_i^B in the computational basis of A.

    A two-block construction; every output has zero discord when A is the
    measured side.
    """
    probs = np.asarray(p, dtype=float)
    if probs.shape != (2,) or len(blocks) != 2:
        raise ContractViolation("expected two probabilities and two blocks")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > DIRECTION_TOL:
        raise ContractViolation("probabilities must be non-negative and sum to 1")
    out = np.zeros((4, 4), dtype=complex)
    for i, (pi, block) in enumerate(zip(probs, blocks)):
        b = np.asarray(block, dtype=complex)
        if b.shape != (2, 2):
            raise ContractViolation(f"block {i} must be a 2x2 density operator")
        if pi > 0:
            check_density_operator(b)
        ket = np.zeros(2)
        ket[i] = 1.0
        out += pi * np.kron(np.outer(ket, ket), b)
    return out
