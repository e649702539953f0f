"""Pulse-level simulator: 4 internal levels x truncated motional ladder.

State ordering is |internal n> (x) |motional m>, flat index n*(n_max+1) + m.
Two pulse families drive everything:

* microwave(n, chi, phi): rotation between internal levels 0 and n,
  exp[-i chi/2 (e^{-i phi} |n><0| + h.c.)], motional factor untouched;
* red sideband: exp[chi/2 (e^{-i phi} s+ a - e^{i phi} s- a^dag)] with
  s+ = |2><0|, coupling |0, m+1> <-> |2, m> at a sqrt(m+1)-scaled rate.

Composite FLIP and SWAP sequences are built from three sideband pulses; the
twelve standard preparation sequences and a four-pulse compilation of the
embedded spin flip are provided on top.  Pulses are ideal unitaries; no
decoherence is modeled.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .embedding import encode_qubit, encoded_unot
from .qmath import ContractViolation
from .spinstates import STANDARD_DIRECTIONS, bloch_state

N_INTERNAL = 4
DEFAULT_FOCK_CUTOFF = 8
#: Combined population allowed in the top two motional levels after a sequence.
TAIL_TOL = 1e-8
NORM_TOL = 1e-10

_TWO_PI = 2.0 * math.pi


class TruncationError(RuntimeError):
    """Population reached the top of the motional ladder; raise the cutoff."""


def _reduce_phase(phi: float) -> float:
    return float(phi) % _TWO_PI


@dataclass(frozen=True)
class Pulse:
    """One hardware pulse: microwave on transition 0<->n, or red sideband."""

    kind: str  # "microwave" | "red_sideband"
    chi: float
    phi: float
    n: int | None = None  # target internal level for microwave pulses

    def __post_init__(self):
        if self.kind == "microwave":
            if self.n not in (1, 2, 3):
                raise ContractViolation(f"microwave target level must be 1, 2 or 3, got {self.n}")
        elif self.kind == "red_sideband":
            if self.n is not None:
                raise ContractViolation("red sideband pulses take no target level")
        else:
            raise ContractViolation(f"unknown pulse kind {self.kind!r}")
        if not math.isfinite(self.chi):
            raise ContractViolation("pulse angle must be finite")
        object.__setattr__(self, "chi", float(self.chi))
        object.__setattr__(self, "phi", _reduce_phase(self.phi))

    def to_text(self) -> str:
        if self.kind == "microwave":
            return f"R{self.n}({self.chi!r},{self.phi!r})"
        return f"RSB({self.chi!r},{self.phi!r})"

    @staticmethod
    def from_text(line: str) -> "Pulse":
        m = re.fullmatch(r"\s*(R([123])|RSB)\(([^,]+),([^)]+)\)\s*", line)
        if not m:
            raise ContractViolation(f"unparseable pulse line {line!r}")
        chi, phi = float(m.group(3)), float(m.group(4))
        if m.group(1) == "RSB":
            return Pulse("red_sideband", chi, phi)
        return Pulse("microwave", chi, phi, n=int(m.group(2)))


def mw(n: int, chi: float, phi: float) -> Pulse:
    return Pulse("microwave", chi, phi, n=n)


def rsb(chi: float, phi: float) -> Pulse:
    return Pulse("red_sideband", chi, phi)


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulses, applied first-to-last."""

    pulses: tuple[Pulse, ...]
    label: str = ""

    def to_text(self) -> str:
        return "\n".join(p.to_text() for p in self.pulses)

    @staticmethod
    def from_text(text: str, label: str = "") -> "PulseSequence":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        return PulseSequence(tuple(Pulse.from_text(ln) for ln in lines), label=label)

    def __len__(self) -> int:
        return len(self.pulses)


@dataclass(frozen=True)
class IonState:
    """Ket on the (4 internal) x (fock_cutoff + 1 motional) product space."""

    fock_cutoff: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.fock_cutoff < 2:
            raise ContractViolation("fock cutoff must be at least 2")
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape[0] != N_INTERNAL * (self.fock_cutoff + 1):
            raise ContractViolation(
                f"amplitude length {v.shape[0]} != 4*({self.fock_cutoff}+1)"
            )
        if abs(np.vdot(v, v).real - 1.0) > NORM_TOL:
            raise ContractViolation("ion state must be unit norm")
        object.__setattr__(self, "amplitudes", v)

    def tail_population(self) -> float:
        """Population in the top two motional levels (truncation health)."""
        grid = self.amplitudes.reshape(N_INTERNAL, self.fock_cutoff + 1)
        return float((np.abs(grid[:, self.fock_cutoff - 1 :]) ** 2).sum())

    def encoded_vector(self) -> np.ndarray:
        """Projection onto the encoded-pair subspace (m in {0, 1}), index 2n+m."""
        grid = self.amplitudes.reshape(N_INTERNAL, self.fock_cutoff + 1)
        return grid[:, :2].reshape(8).copy()


def ground_state(n_max: int = DEFAULT_FOCK_CUTOFF) -> IonState:
    v = np.zeros(N_INTERNAL * (n_max + 1), dtype=complex)
    v[0] = 1.0
    return IonState(n_max, v)


def state_from_encoded(ket8, n_max: int = DEFAULT_FOCK_CUTOFF) -> IonState:
    """Embed an 8-dim encoded-pair ket (index 2n+m) at the bottom of the ladder."""
    v8 = np.asarray(ket8, dtype=complex).reshape(8)
    full = np.zeros((N_INTERNAL, n_max + 1), dtype=complex)
    full[:, :2] = v8.reshape(N_INTERNAL, 2)
    return IonState(n_max, full.reshape(-1))


def microwave(n: int, chi: float, phi: float, n_max: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    """Unitary of a microwave pulse on the full space (closed form)."""
    if n not in (1, 2, 3):
        raise ContractViolation(f"microwave target level must be 1, 2 or 3, got {n}")
    u = np.eye(N_INTERNAL, dtype=complex)
    c, s = math.cos(chi / 2), math.sin(chi / 2)
    u[0, 0] = c
    u[n, n] = c
    u[n, 0] = -1j * np.exp(-1j * phi) * s
    u[0, n] = -1j * np.exp(1j * phi) * s
    return np.kron(u, np.eye(n_max + 1))


def red_sideband(chi: float, phi: float, n_max: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    """Unitary of a red-sideband pulse on the truncated space."""
    if n_max < 2:
        raise TruncationError("fock cutoff must be at least 2 for sideband pulses")
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), 1)
    s_plus = np.zeros((N_INTERNAL, N_INTERNAL))
    s_plus[2, 0] = 1.0
    gen = np.exp(-1j * phi) * np.kron(s_plus, a) - np.exp(1j * phi) * np.kron(s_plus.T, a.conj().T)
    return expm(chi / 2 * gen)


_UNITARY_CACHE: dict[tuple, np.ndarray] = {}


def pulse_unitary(pulse: Pulse, n_max: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    """Cached unitary for one pulse; safe for concurrent reads."""
    key = (pulse.kind, pulse.n, pulse.chi, pulse.phi, n_max)
    u = _UNITARY_CACHE.get(key)
    if u is None:
        if pulse.kind == "microwave":
            u = microwave(pulse.n, pulse.chi, pulse.phi, n_max)
        else:
            u = red_sideband(pulse.chi, pulse.phi, n_max)
        u.setflags(write=False)
        _UNITARY_CACHE[key] = u
    return u


def sequence_unitary(seq: PulseSequence, n_max: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    u = np.eye(N_INTERNAL * (n_max + 1), dtype=complex)
    for pulse in seq.pulses:
        u = pulse_unitary(pulse, n_max) @ u
    return u


def apply_sequence(state: IonState, seq: PulseSequence) -> IonState:
    """Apply a pulse sequence and enforce the truncation-health guard."""
    v = state.amplitudes
    for pulse in seq.pulses:
        v = pulse_unitary(pulse, state.fock_cutoff) @ v
    out = IonState(state.fock_cutoff, v)
    if out.tail_population() > TAIL_TOL:
        raise TruncationError(
            f"tail population {out.tail_population():.3e} exceeds {TAIL_TOL}; raise fock_cutoff"
        )
    return out


# --- composite operations ---------------------------------------------------

_HALF_ANGLE_REF = math.pi / math.sqrt(2.0)  # half-angle of the middle SWAP pulse


def flip_sequence(phi: float) -> PulseSequence:
    """Three sideband pulses exchanging |0,1><->|2,0| and |0,2><->|2,1> as pi transfers."""
    return PulseSequence(
        (
            rsb(math.pi / 2, phi),
            rsb(math.pi / math.sqrt(2.0), phi + math.pi / 2),
            rsb(math.pi / 2, phi),
        ),
        label=f"FLIP({phi!r})",
    )


def flip(phi: float, n_max: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    return sequence_unitary(flip_sequence(phi), n_max)


def swap_parameters(chi: float, phi: float) -> tuple[float, float]:
    """Solve sin(pi/sqrt2) cos(alpha) = sin(chi/4), tan(pi/sqrt2) cos(phi - gamma) = tan(chi/4).

    Root-finding on [0, pi] per equation (residual <= 1e-12); outside the
    solvable range a ContractViolation is raised.  The principal branch
    (alpha >= 0, gamma = phi - arccos) reproduces the target rotation on the
    {|0,1>, |2,0>} manifold while acting as the identity one rung up.
    """
    sin_ref = math.sin(_HALF_ANGLE_REF)
    tan_ref = math.tan(_HALF_ANGLE_REF)
    ca = math.sin(chi / 4) / sin_ref
    cg = math.tan(chi / 4) / tan_ref
    if abs(ca) > 1.0 or abs(cg) > 1.0:
        raise ContractViolation(f"swap angle chi={chi} outside the solvable range")
    alpha = brentq(lambda x: math.cos(x) - ca, 0.0, math.pi, xtol=1e-15, rtol=1e-15)
    delta = brentq(lambda x: math.cos(x) - cg, 0.0, math.pi, xtol=1e-15, rtol=1e-15)
    if abs(math.sin(_HALF_ANGLE_REF) * math.cos(alpha) - math.sin(chi / 4)) > 1e-12:
        raise ContractViolation("swap parameter solve failed the residual check")
    if abs(math.tan(_HALF_ANGLE_REF) * math.cos(delta) - math.tan(chi / 4)) > 1e-12:
        raise ContractViolation("swap parameter solve failed the residual check")
    return float(alpha), float(phi - delta)


def swap_sequence(chi: float, phi: float) -> PulseSequence:
    alpha, gamma = swap_parameters(chi, phi)
    return PulseSequence(
        (
            rsb(math.pi / math.sqrt(2.0), gamma),
            rsb(math.sqrt(2.0) * math.pi, 2 * alpha + gamma),
            rsb(math.pi / math.sqrt(2.0), gamma),
        ),
        label=f"SWAP({chi!r},{phi!r})",
    )


def swap(chi: float, phi: float, n_max: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    """Composite rotating {|0,1>, |2,0>} by chi at phase phi, identity on {|0,2>, |2,1>}."""
    return sequence_unitary(swap_sequence(chi, phi), n_max)


# --- preparation of the twelve direction pairs -------------------------------

_X, _MX, _Y, _MY, _Z, _MZ = (tuple(int(c) for c in d) for d in STANDARD_DIRECTIONS)

_PREP_TABLE: dict[tuple[tuple, tuple], tuple[Pulse, ...]] = {
    (_X, _X): (mw(2, math.pi / 2, math.pi / 2), rsb(math.pi, 0.0), mw(1, math.pi / 2, -math.pi / 2)),
    (_MX, _MX): (mw(2, math.pi / 2, -math.pi / 2), rsb(math.pi, 0.0), mw(1, math.pi / 2, math.pi / 2)),
    (_Y, _Y): (mw(2, math.pi / 2, 0.0), rsb(math.pi, 0.0), mw(3, math.pi / 2, -math.pi / 2)),
    (_MY, _MY): (mw(2, math.pi / 2, math.pi), rsb(math.pi, 0.0), mw(3, math.pi / 2, math.pi / 2)),
    (_Z, _Z): (),
    (_MZ, _MZ): (mw(2, math.pi, 0.0), rsb(math.pi, 0.0), mw(1, math.pi, 0.0)),
    (_MX, _X): (mw(2, math.pi / 2, math.pi / 2), rsb(math.pi, 0.0), mw(1, math.pi / 2, math.pi / 2)),
    (_X, _MX): (mw(2, math.pi / 2, -math.pi / 2), rsb(math.pi, 0.0), mw(1, math.pi / 2, -math.pi / 2)),
    (_MY, _Y): (mw(2, math.pi / 2, 0.0), rsb(math.pi, 0.0), mw(3, math.pi / 2, math.pi / 2)),
    (_Y, _MY): (mw(2, math.pi / 2, math.pi), rsb(math.pi, 0.0), mw(3, math.pi / 2, -math.pi / 2)),
    (_MZ, _Z): (mw(1, math.pi, -math.pi / 2),),
    (_Z, _MZ): (mw(2, math.pi, math.pi / 2), rsb(math.pi, 0.0)),
}


def _direction_key(n) -> tuple:
    v = np.asarray(n, dtype=float)
    key = tuple(int(round(c)) for c in v)
    if np.abs(v - np.array(key)).max() > 1e-12 or sum(abs(c) for c in key) != 1:
        raise ContractViolation(f"{v} is not one of the six coordinate directions")
    return key


def preparation_sequence(dir_a, dir_b) -> PulseSequence:
    """The tabulated pulse sequence preparing the encoded pair (dir_a, dir_b)."""
    key = (_direction_key(dir_a), _direction_key(dir_b))
    if key not in _PREP_TABLE:
        raise ContractViolation(f"no preparation sequence tabulated for pair {key}")
    return PulseSequence(_PREP_TABLE[key], label=f"prep{key}")


def encoded_target(dir_a, dir_b) -> np.ndarray:
    """The expected encoded-pair ket (index 2n+m) for a direction pair."""
    return np.kron(encode_qubit(bloch_state(dir_a)).astype(complex), bloch_state(dir_b))


def prepare_pair(dir_a, dir_b, n_max: int = DEFAULT_FOCK_CUTOFF) -> IonState:
    """Run the tabulated sequence from |0, 0| to the encoded pair state."""
    return apply_sequence(ground_state(n_max), preparation_sequence(dir_a, dir_b))


def ket_fidelity_up_to_phase(a, b) -> float:
    """|<a|b>|^2, insensitive to one global phase."""
    va = np.asarray(a, dtype=complex).reshape(-1)
    vb = np.asarray(b, dtype=complex).reshape(-1)
    return float(abs(np.vdot(va, vb)) ** 2)


# --- four-pulse compilation of the embedded spin flip ------------------------

_COMPILE_CACHE: list[PulseSequence] = []


def _internal_pi(n: int, phi: float) -> np.ndarray:
    u = np.zeros((N_INTERNAL, N_INTERNAL), dtype=complex)
    for m in range(N_INTERNAL):
        if m not in (0, n):
            u[m, m] = 1.0
    u[n, 0] = -1j * np.exp(-1j * phi)
    u[0, n] = -1j * np.exp(1j * phi)
    return u


def _phase_aligned_distance(u: np.ndarray, target: np.ndarray) -> float:
    overlap = np.trace(target.conj().T @ u) / target.shape[0]
    if abs(overlap) < 1e-12:
        return float(np.linalg.norm(u - target))
    return float(np.linalg.norm(u - (overlap / abs(overlap)) * target))


def compile_encoded_unot(tol: float = 1e-9) -> PulseSequence:
    """Find four microwave pi pulses whose product is the embedded spin flip.

    Searches target-level patterns and an 8-point phase grid per pulse, with
    Nelder-Mead phase refinement as a fallback, and accepts the first product
    matching the target up to one global phase (Frobenius distance <= tol).
    The result is cached.
    """
    if _COMPILE_CACHE:
        return _COMPILE_CACHE[0]
    target = encoded_unot().astype(complex)
    phases = [k * math.pi / 4 for k in range(8)]
    pulse_u = {(n, k): _internal_pi(n, phases[k]) for n in (1, 2, 3) for k in range(8)}

    best: tuple[float, tuple, tuple] | None = None
    for ns in itertools.product((1, 2, 3), repeat=4):
        for ks in itertools.product(range(8), repeat=4):
            u = pulse_u[(ns[3], ks[3])] @ pulse_u[(ns[2], ks[2])] @ pulse_u[(ns[1], ks[1])] @ pulse_u[(ns[0], ks[0])]
            dist = _phase_aligned_distance(u, target)
            if best is None or dist < best[0]:
                best = (dist, ns, tuple(phases[k] for k in ks))
            if dist <= tol:
                seq = PulseSequence(
                    tuple(mw(n, math.pi, ph) for n, ph in zip(ns, (phases[k] for k in ks))),
                    label="encoded-unot",
                )
                _COMPILE_CACHE.append(seq)
                return seq

    # grid miss: polish the best candidate's phases
    assert best is not None
    from scipy.optimize import minimize

    dist0, ns, ph0 = best

    def cost(ph):
        u = np.eye(N_INTERNAL, dtype=complex)
        for n, p in zip(ns, ph):
            u = _internal_pi(n, p) @ u
        return _phase_aligned_distance(u, target)

    res = minimize(cost, np.array(ph0), method="Nelder-Mead", options=dict(xatol=1e-13, fatol=1e-26))
    if res.fun > tol:
        raise ContractViolation(f"pulse compilation failed: best distance {res.fun:.3e} > {tol}")
    seq = PulseSequence(tuple(mw(n, math.pi, p) for n, p in zip(ns, res.x)), label="encoded-unot")
    _COMPILE_CACHE.append(seq)
    return seq
