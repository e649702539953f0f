"""Dense complex linear algebra: eigendecompositions, entropy, partial trace, fidelity.

All operators are plain ``numpy`` arrays.  Density operators are validated
against three invariants (Hermitian to 1e-10, unit trace to 1e-10, smallest
eigenvalue >= -1e-10); entropy is always reported in bits (log base 2).
"""

from __future__ import annotations

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10


class ContractViolation(ValueError):
    """An operator handed to a kernel does not satisfy its stated preconditions."""


def as_complex_matrix(a) -> np.ndarray:
    """Coerce to a square complex matrix with finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ContractViolation("matrix entries must be finite")
    return m


def check_density_operator(rho) -> np.ndarray:
    """Validate Hermiticity / unit trace / positivity and return the array."""
    m = as_complex_matrix(rho)
    herm_err = np.abs(m - m.conj().T).max()
    if herm_err > HERMITICITY_TOL:
        raise ContractViolation(f"not Hermitian: max |rho - rho^dag| = {herm_err:.3e}")
    tr_err = abs(np.trace(m) - 1.0)
    if tr_err > TRACE_TOL:
        raise ContractViolation(f"trace differs from 1 by {tr_err:.3e}")
    lam_min = np.linalg.eigvalsh(m)[0]
    if lam_min < -PSD_TOL:
        raise ContractViolation(f"not positive semidefinite: min eigenvalue {lam_min:.3e}")
    return m


def check_pure_state(psi) -> np.ndarray:
    """Validate unit norm and return the amplitude vector."""
    v = np.asarray(psi, dtype=complex).reshape(-1)
    err = abs(np.vdot(v, v).real - 1.0)
    if err > HERMITICITY_TOL:
        raise ContractViolation(f"state norm^2 differs from 1 by {err:.3e}")
    return v


def projector(psi) -> np.ndarray:
    """|psi><psi| for a unit ket."""
    v = check_pure_state(psi)
    return np.outer(v, v.conj())


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, orthonormal eigenvector columns) such that
    ``h == V @ diag(lam) @ V.conj().T`` to 1e-9.
    """
    m = as_complex_matrix(h)
    herm_err = np.abs(m - m.conj().T).max()
    if herm_err > HERMITICITY_TOL:
        raise ContractViolation(f"not Hermitian: max |H - H^dag| = {herm_err:.3e}")
    lam, vec = np.linalg.eigh(m)
    return lam, vec


def von_neumann_entropy(rho) -> float:
    """Entropy -sum(lam log2 lam) in bits, with 0 log 0 := 0.

    Eigenvalues in [-1e-10, 0) are clamped to 0 (numerical PSD slack);
    anything more negative fails validation.
    """
    m = check_density_operator(rho)
    lam = np.linalg.eigvalsh(m)
    lam = np.clip(lam, 0.0, None)
    lam = lam[lam > 0.0]
    return float(-(lam * np.log2(lam)).sum())


def partial_trace(rho, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    ``dims = (dA, dB)`` with ``rho`` of dimension dA*dB; ``keep`` is "A" or "B".
    """
    da, db = dims
    m = as_complex_matrix(rho)
    if m.shape[0] != da * db:
        raise ContractViolation(f"dimension mismatch: {m.shape[0]} != {da}*{db}")
    r = m.reshape(da, db, da, db)
    if keep == "A":
        return np.einsum("ijkj->ik", r)
    if keep == "B":
        return np.einsum("ijil->jl", r)
    raise ContractViolation(f"keep must be 'A' or 'B', got {keep!r}")


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(m)
    lam = np.clip(lam, 0.0, None)
    return (vec * np.sqrt(lam)) @ vec.conj().T


def fidelity(rho, sigma, *, squared: bool = True) -> float:
    """Uhlmann fidelity between two density operators.

    F = [tr sqrt(sqrt(rho) sigma sqrt(rho))]^2 by default; ``squared=False``
    drops the outer square (both conventions appear in the literature).
    """
    a = check_density_operator(rho)
    b = check_density_operator(sigma)
    if a.shape != b.shape:
        raise ContractViolation(f"dimension mismatch: {a.shape} vs {b.shape}")
    sa = _psd_sqrt(a)
    lam = np.linalg.eigvalsh(sa @ b @ sa)
    root_sum = np.sqrt(np.clip(lam, 0.0, None)).sum()
    f = float(root_sum**2) if squared else float(root_sum)
    return min(max(f, 0.0), 1.0) if squared else f


def trace_distance(rho, sigma) -> float:
    """0.5 * tr |rho - sigma| for Hermitian operators."""
    d = as_complex_matrix(rho) - as_complex_matrix(sigma)
    return float(0.5 * np.abs(np.linalg.eigvalsh(d)).sum())


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random unitary via QR of a complex Gaussian matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density_operator(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state from a Wishart-style construction."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    m = g @ g.conj().T
    return m / np.trace(m).real
