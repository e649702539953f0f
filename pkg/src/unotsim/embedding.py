"""Real-amplitude embedding of a qubit in four levels, and its decoding.

A qubit alpha|up> + beta|down> is stored as the real 4-vector
(Re alpha, Re beta, Im alpha, Im beta).  On the embedded space the
(anti-unitary) universal spin flip becomes the ordinary unitary
|1><0| - |0><1| - |3><2| + |2><3|.

Encoded pairs live on the 8-dimensional space (4-level internal) x (qubit),
ordered internal-major: basis index 2*n + m for internal level n and partner
level m.  The decoding matrix W (rows e_j + i e_{j+4}) maps encoded pairs
back to the logical two-qubit space and satisfies W W^dag = 2 I.
"""

from __future__ import annotations

import warnings

import numpy as np

from .qmath import ContractViolation, check_density_operator, check_pure_state, projector
from .spinstates import SpinPairEnsemble, bloch_state

DECODE_FAIL_TRACE = 1e-6
LEAK_WARN_TOL = 1e-8


class LeakageWarning(UserWarning):
    """Decoded trace differs from one: population left the encoded manifold."""


def encode_qubit(phi) -> np.ndarray:
    """Map a qubit ket to its real-amplitude 4-level image."""
    v = check_pure_state(phi)
    if v.shape != (2,):
        raise ContractViolation(f"expected a qubit ket, got dim {v.shape}")
    return np.array([v[0].real, v[1].real, v[0].imag, v[1].imag])


def encoded_unot() -> np.ndarray:
    """The embedded spin-flip unitary (a signed permutation; squares to -I)."""
    u = np.zeros((4, 4))
    u[1, 0] = 1.0
    u[0, 1] = -1.0
    u[3, 2] = -1.0
    u[2, 3] = 1.0
    return u


def decoding_map() -> np.ndarray:
    """The 4x8 decoding matrix W with rows e_j + i*e_{j+4}."""
    w = np.zeros((4, 8), dtype=complex)
    for j in range(4):
        w[j, j] = 1.0
        w[j, j + 4] = 1.0j
    return w


_W = decoding_map()


def decode_pair(rho_enc) -> np.ndarray:
    """Decode an 8-dim encoded-pair operator to the logical 4x4 state.

    rho = W rho_enc W^dag.  If the decoded trace deviates from 1 by more than
    1e-8 a LeakageWarning is emitted and the result is renormalized; a trace
    below 1e-6 is a decoding failure.
    """
    m = check_density_operator(rho_enc)
    if m.shape[0] != 8:
        raise ContractViolation(f"encoded pair must be 8-dimensional, got {m.shape[0]}")
    rho = _W @ m @ _W.conj().T
    tr = np.trace(rho).real
    if tr < DECODE_FAIL_TRACE:
        raise ContractViolation(f"decoding failure: decoded trace {tr:.3e}")
    if abs(tr - 1.0) > LEAK_WARN_TOL:
        warnings.warn(
            f"decoded trace {tr!r} deviates from 1 by {abs(tr - 1.0):.3e}; renormalizing",
            LeakageWarning,
            stacklevel=2,
        )
        rho = rho / tr
    return rho


def encode_pair(ensemble: SpinPairEnsemble) -> np.ndarray:
    """Encode a product-pair mixture on the 8-dim space, pair by pair.

    Each member contributes (M|a>)(M|a>)^dag (x) |b><b| with the first spin
    embedded and the second left as a qubit; decode_pair inverts the result
    exactly.
    """
    out = np.zeros((8, 8), dtype=complex)
    for w, na, nb in ensemble.members:
        enc = encode_qubit(bloch_state(na)).astype(complex)
        out += w * np.kron(np.outer(enc, enc.conj()), projector(bloch_state(nb)))
    return out


def encode_measurement_ket(psi) -> np.ndarray:
    """Encoded image W^dag |psi> / sqrt(2) of a logical pair ket (unit norm)."""
    v = check_pure_state(psi)
    if v.shape != (4,):
        raise ContractViolation(f"expected a two-qubit ket, got dim {v.shape}")
    return _W.conj().T @ v / np.sqrt(2.0)
