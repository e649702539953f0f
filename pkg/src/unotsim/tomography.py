"""Seventeen-setting pair tomography: measurement model, shot noise, likelihood fit.

Each setting measures one population P_j = <psi_j|rho|psi_j>/2, realized on
the hardware layer as the encoded population <psi_j~|rho~|psi_j~> of the
state psi_j~ = W^dag psi_j / sqrt(2).  Counts are binomial per (pair,
setting) cell with deterministic per-cell substreams; the density operator
is recovered by minimizing the noise-weighted squared population residuals
over a positivity-guaranteeing Cholesky-style parametrization, and
uncertainties come from a parametric bootstrap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._mle import nelder_mead, objective, params_to_rho
from .correlations import classical_correlation, mutual_information
from .embedding import encode_measurement_ket
from .qmath import ContractViolation, check_density_operator, fidelity
from .spinstates import SpinPairEnsemble
from .trapsim import (
    DEFAULT_FOCK_CUTOFF,
    PulseSequence,
    apply_sequence,
    mw,
    prepare_pair,
    rsb,
)

DATASET_VERSION = 1
N_SETTINGS = 17
N_PAIRS = 6

# substream tags so data, starts and bootstrap never share a seed path
_STREAM_DATA = 0
_STREAM_START = 1
_STREAM_BOOT = 2

_LOW = np.tril_indices(4, -1)
_DIAG = np.diag_indices(4)


class ReconstructionError(RuntimeError):
    """No optimizer start converged within the iteration cap."""

    def __init__(self, message: str, best: "ReconstructionResult"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class MeasurementSetting:
    """One tomography row: target kets and the matrix-element formula."""

    index: int
    ket: np.ndarray = field(repr=False)  # logical two-qubit target |psi>
    encoded_ket: np.ndarray = field(repr=False)  # W^dag|psi>/sqrt(2), index 2n+m
    # formula terms (kind, i, j, weight): kind 'z' uses rho_ii, 'x' Re rho_ij, 'y' -Im rho_ij
    terms: tuple[tuple[str, int, int, float], ...]

    def formula_value(self, rho) -> float:
        m = np.asarray(rho, dtype=complex)
        total = 0.0
        for kind, i, j, weight in self.terms:
            if kind == "z":
                total += weight * m[i, i].real
            elif kind == "x":
                total += weight * m[i, j].real
            else:
                total += weight * (-m[i, j].imag)
        return total

    def population(self, rho) -> float:
        m = np.asarray(rho, dtype=complex)
        return float(np.real(self.ket.conj() @ m @ self.ket)) / 2.0


def _ket(*amps) -> np.ndarray:
    v = np.array(amps, dtype=complex)
    return v / np.linalg.norm(v)


def _build_settings() -> tuple[MeasurementSetting, ...]:
    e = np.eye(4, dtype=complex)
    kets = [
        e[0], e[1], e[2], e[3],
        _ket(1, 1, 0, 0), _ket(1, 1j, 0, 0),
        _ket(1, 0, 1, 0), _ket(1, 0, 1j, 0),
        _ket(1, 0, 0, 1), _ket(1, 0, 0, -1), _ket(1, 0, 0, 1j),
        _ket(0, 1, 1, 0), _ket(0, 1, 1j, 0),
        _ket(0, 1, 0, 1), _ket(0, 1, 0, 1j),
        _ket(0, 0, 1, 1), _ket(0, 0, 1, 1j),
    ]

    def diag(i):
        return ("z", i, i, 0.5)

    def pair(i, j, kind, sign=1.0):
        return [("z", i, i, 0.25), ("z", j, j, 0.25), (kind, i, j, 0.5 * sign)]

    formulas = [
        [diag(0)], [diag(1)], [diag(2)], [diag(3)],
        pair(0, 1, "x"), pair(0, 1, "y"),
        pair(0, 2, "x"), pair(0, 2, "y"),
        pair(0, 3, "x"), pair(0, 3, "x", -1.0), pair(0, 3, "y"),
        pair(1, 2, "x"), pair(1, 2, "y"),
        pair(1, 3, "x"), pair(1, 3, "y"),
        pair(2, 3, "x"), pair(2, 3, "y"),
    ]
    return tuple(
        MeasurementSetting(
            index=j,
            ket=kets[j],
            encoded_ket=encode_measurement_ket(kets[j]),
            terms=tuple(formulas[j]),
        )
        for j in range(N_SETTINGS)
    )


_SETTINGS = _build_settings()

#: P = Re(_KMAT @ vec(rho)) gives all 17 populations at once.
_KMAT = 0.5 * np.einsum(
    "ji,jk->jik", np.stack([s.ket for s in _SETTINGS]).conj(), np.stack([s.ket for s in _SETTINGS])
).reshape(N_SETTINGS, 16)


def measurement_settings() -> tuple[MeasurementSetting, ...]:
    """The 17 tomography settings, in table order."""
    return _SETTINGS


def ideal_population(rho, j: int) -> float:
    """Noise-free population P_j = <psi_j|rho|psi_j>/2, in [0, 1/2]."""
    m = check_density_operator(rho)
    return _SETTINGS[j].population(m)


def all_populations(rho) -> np.ndarray:
    m = np.asarray(rho, dtype=complex)
    return np.clip(np.real(_KMAT @ m.reshape(16)), 0.0, 0.5)


@dataclass(frozen=True)
class TomographyDataset:
    """Binomial counts for 6 pure pairs x 17 settings."""

    shots: int
    counts: np.ndarray = field(repr=False)  # (6, 17) ints
    ensemble_label: str
    seed: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=int)
        if c.shape != (N_PAIRS, N_SETTINGS):
            raise ContractViolation(f"counts must be (6, 17), got {c.shape}")
        if self.shots < 1:
            raise ContractViolation("shots must be positive")
        if np.any(c < 0) or np.any(c > self.shots):
            raise ContractViolation("counts must lie in [0, shots]")
        if self.ensemble_label not in ("aligned", "antialigned"):
            raise ContractViolation(f"unknown ensemble label {self.ensemble_label!r}")
        object.__setattr__(self, "counts", c)

    @property
    def total_trials(self) -> int:
        return N_PAIRS * N_SETTINGS * self.shots

    def measured_populations(self) -> np.ndarray:
        """P_j^exp: per-setting mean of the six per-pair rates."""
        return self.counts.mean(axis=0) / self.shots

    def to_json(self) -> str:
        doc = {
            "version": DATASET_VERSION,
            "ensemble_label": self.ensemble_label,
            "seed": self.seed,
            "shots": self.shots,
            "counts": self.counts.tolist(),
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "TomographyDataset":
        doc = json.loads(text)
        if doc.get("version") != DATASET_VERSION:
            raise ContractViolation(f"unsupported dataset version {doc.get('version')!r}")
        return TomographyDataset(
            shots=int(doc["shots"]),
            counts=np.asarray(doc["counts"], dtype=int),
            ensemble_label=str(doc["ensemble_label"]),
            seed=int(doc["seed"]),
        )


def _cell_rng(seed: int, stream: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=[seed, stream, *tags]))


# --- pulse-compiled readout for the Bell rows (verification path) ------------

BELL_ROWS = (8, 9, 11)


def bell_readout_sequence(j: int) -> PulseSequence:
    """Pulses mapping the Bell row's target ket onto |0_A, 0_B> exactly.

    After this sequence the row's population equals the population of the
    fiducial |0_A, 0_B| level, so one fluorescence-style readout suffices.
    Only the three Bell rows are compiled; the other settings are measured
    at the projector level.
    """
    if j == 8 or j == 9:
        last_phase = 0.0 if j == 8 else math.pi
        pulses = (
            mw(2, -math.pi / 2, 0.0),
            mw(1, math.pi, 0.0),
            rsb(math.pi, 0.0),
            mw(3, math.pi, 0.0),
            rsb(math.pi / 2, -math.pi / 2),
            mw(2, math.pi, 0.0),
            mw(1, math.pi / 2, last_phase),
        )
    elif j == 11:
        pulses = (
            mw(2, -math.pi / 2, 0.0),
            rsb(math.pi, 0.0),
            mw(3, math.pi, 0.0),
            mw(1, math.pi / 2, -math.pi / 2),
            mw(2, math.pi / 2, -math.pi / 2),
        )
    else:
        raise ContractViolation(f"no compiled readout for setting {j}; Bell rows are {BELL_ROWS}")
    return PulseSequence(pulses, label=f"bell-readout-{j}")


def bell_readout_population(state, j: int) -> float:
    """Row-j population measured by pulses plus one fiducial-level readout."""
    out = apply_sequence(state, bell_readout_sequence(j))
    return float(abs(out.amplitudes[0]) ** 2)


def simulate_dataset(
    ensemble: SpinPairEnsemble,
    shots: int,
    seed: int,
    *,
    ensemble_label: str,
    extra_sequence: PulseSequence | None = None,
    fock_cutoff: int = DEFAULT_FOCK_CUTOFF,
) -> TomographyDataset:
    """Prepare each pure pair on the pulse simulator and draw binomial counts.

    Every (pair, setting) cell uses its own substream derived from
    (seed, pair, setting), so the dataset is reproducible and independent of
    evaluation order.  ``extra_sequence`` is applied after preparation (for
    the compiled spin-flip pulses).
    """
    if len(ensemble) != N_PAIRS:
        raise ContractViolation(f"ensemble must have exactly 6 members, got {len(ensemble)}")
    if any(abs(w - 1 / 6) > 1e-12 for w, _, _ in ensemble.members):
        raise ContractViolation("ensemble members must have equal weight 1/6")
    counts = np.zeros((N_PAIRS, N_SETTINGS), dtype=int)
    encoded_kets = np.stack([s.encoded_ket for s in _SETTINGS])
    for ip, (_, dir_a, dir_b) in enumerate(ensemble.members):
        state = prepare_pair(dir_a, dir_b, fock_cutoff)
        if extra_sequence is not None:
            state = apply_sequence(state, extra_sequence)
        enc = state.encoded_vector()
        probs = np.clip(np.abs(encoded_kets.conj() @ enc) ** 2, 0.0, 1.0)
        for js in range(N_SETTINGS):
            rng = _cell_rng(seed, _STREAM_DATA, ip, js)
            counts[ip, js] = rng.binomial(shots, probs[js])
    return TomographyDataset(shots=shots, counts=counts, ensemble_label=ensemble_label, seed=seed)


@dataclass(frozen=True)
class ReconstructionResult:
    """Fitted state, objective value, and (optional) bootstrap half-widths."""

    rho_hat: np.ndarray = field(repr=False)
    objective_value: float
    uncertainty: dict | None = None

    def to_json(self) -> str:
        m = self.rho_hat
        doc = {
            "version": DATASET_VERSION,
            "objective_value": self.objective_value,
            "rho_re_im": [[[m[i, j].real, m[i, j].imag] for j in range(4)] for i in range(4)],
            "uncertainty": self.uncertainty,
        }
        return json.dumps(doc, sort_keys=True)


def _params_from_rho(rho: np.ndarray, ridge: float = 1e-9) -> np.ndarray:
    """Inverse of the Cholesky-style parametrization (ridge keeps it definite)."""
    r = (1 - ridge) * rho + ridge * np.eye(4) / 4
    flip4 = np.eye(4)[::-1]
    lower = np.linalg.cholesky(flip4 @ r @ flip4)
    upper = flip4 @ lower @ flip4
    tmat = upper.conj().T
    phase = np.exp(-1j * np.angle(np.diag(tmat)))
    tmat = phase[:, None] * tmat
    t = np.empty(16)
    t[:4] = np.real(np.diag(tmat))
    t[4:10] = np.real(tmat[_LOW])
    t[10:16] = np.imag(tmat[_LOW])
    return t


def _herm_from_coords(x: np.ndarray) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[_DIAG] = x[:4]
    m[_LOW] = x[4:10] + 1j * x[10:16]
    return m + m.conj().T - np.diag(np.diag(m).real)


_DESIGN = None


def _design_matrix() -> np.ndarray:
    """Populations (and trace) of the 16 Hermitian basis elements, for linear inversion."""
    global _DESIGN
    if _DESIGN is None:
        a = np.zeros((N_SETTINGS + 1, 16))
        for col in range(16):
            x = np.zeros(16)
            x[col] = 1.0
            h = _herm_from_coords(x)
            a[:N_SETTINGS, col] = np.real(_KMAT @ h.reshape(16))
            a[N_SETTINGS, col] = np.trace(h).real
        _DESIGN = a
    return _DESIGN


def linear_inversion(p_exp: np.ndarray) -> np.ndarray:
    """Least-squares matrix inversion of the population formulas (may be non-PSD)."""
    rhs = np.concatenate([p_exp, [1.0]])
    x, *_ = np.linalg.lstsq(_design_matrix(), rhs, rcond=None)
    return _herm_from_coords(x)


def _project_psd(rho: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(rho)
    lam = np.clip(lam, 0.0, None)
    s = lam.sum()
    lam = lam / s if s > 0 else np.full(4, 0.25)
    return (vec * lam) @ vec.conj().T


def _noise_weights(p_exp: np.ndarray, shots: int) -> np.ndarray:
    """1/(2 Delta^2) with Delta = 1.96 sigma, binomial sigma floored at 1/(2 n_eff)."""
    n_eff = N_PAIRS * shots
    sigma = np.sqrt(np.clip(p_exp * (1.0 - p_exp), 0.0, None) / n_eff)
    sigma = np.maximum(sigma, 1.0 / (2.0 * n_eff))
    return 1.0 / (2.0 * (1.96 * sigma) ** 2)


def reconstruct_mle(
    dataset: TomographyDataset,
    *,
    xatol: float = 1e-6,
    fatol: float = 1e-10,
    maxiter: int = 20000,
    maxfev: int = 12000,
) -> ReconstructionResult:
    """Maximum-likelihood state fit from one dataset.

    Runs Nelder-Mead from five deterministic starts (maximally mixed,
    PSD-projected linear inversion, and three seeded perturbations of the
    latter) and keeps the best objective.  Raises ReconstructionError with
    the best-so-far attached if no start converges within the caps.
    """
    p_exp = dataset.measured_populations()
    weights = _noise_weights(p_exp, dataset.shots)

    rho_lin = _project_psd(linear_inversion(p_exp))
    t_lin = _params_from_rho(rho_lin)
    starts = [_params_from_rho(np.eye(4) / 4), t_lin]
    for i in range(3):
        rng = _cell_rng(dataset.seed, _STREAM_START, i)
        starts.append(t_lin + 0.05 * rng.standard_normal(16))

    best_x = None
    best_f = np.inf
    any_converged = False
    for x0 in starts:
        x, f, _nfev, _niter, converged = nelder_mead(
            np.asarray(x0, dtype=float), _KMAT, p_exp, weights, xatol, fatol, maxiter, maxfev
        )
        any_converged = any_converged or converged
        if f < best_f:
            best_f, best_x = f, x

    rho_hat = params_to_rho(best_x)
    rho_hat = 0.5 * (rho_hat + rho_hat.conj().T)
    check_density_operator(rho_hat)
    result = ReconstructionResult(rho_hat=rho_hat, objective_value=float(best_f))
    if not any_converged:
        raise ReconstructionError(
            f"no start converged within {maxiter} iterations", best=result
        )
    return result


def fit_objective_value(rho, dataset: TomographyDataset) -> float:
    """Objective of an arbitrary state against a dataset (for optimality checks)."""
    p_exp = dataset.measured_populations()
    weights = _noise_weights(p_exp, dataset.shots)
    t = _params_from_rho(np.asarray(rho, dtype=complex), ridge=1e-12)
    return float(objective(t, _KMAT, p_exp, weights))


def derived_quantities(rho, reference) -> dict:
    """fidelity / J / discord / I of a state against a reference."""
    j, _ = classical_correlation(rho, measured="A")
    i_ab = mutual_information(rho)
    return {
        "fidelity": fidelity(rho, reference),
        "J": j,
        "delta": i_ab - j,
        "I": i_ab,
    }


def monte_carlo_errors(
    dataset: TomographyDataset,
    resamples: int,
    reference,
    *,
    xatol: float = 1e-6,
    fatol: float = 1e-10,
) -> dict:
    """Parametric-bootstrap 95% half-widths for fidelity, J, discord and I.

    Each replica redraws every cell from Binomial(shots, k/shots) on its own
    substream, refits, and recomputes the four quantities; the half-width is
    half the central 95% interquantile range.  More than 10% failed replicas
    is an error.
    """
    if resamples < 50:
        raise ContractViolation("resamples must be at least 50")
    ref = check_density_operator(reference)
    rates = dataset.counts / dataset.shots
    samples: dict[str, list[float]] = {"fidelity": [], "J": [], "delta": [], "I": []}
    failures = 0
    for rep in range(resamples):
        counts = np.zeros((N_PAIRS, N_SETTINGS), dtype=int)
        for ip in range(N_PAIRS):
            for js in range(N_SETTINGS):
                rng = _cell_rng(dataset.seed, _STREAM_BOOT, rep, ip, js)
                counts[ip, js] = rng.binomial(dataset.shots, rates[ip, js])
        replica = TomographyDataset(
            shots=dataset.shots,
            counts=counts,
            ensemble_label=dataset.ensemble_label,
            seed=dataset.seed,
        )
        try:
            rec = reconstruct_mle(replica, xatol=xatol, fatol=fatol)
        except ReconstructionError:
            failures += 1
            continue
        for key, value in derived_quantities(rec.rho_hat, ref).items():
            samples[key].append(value)
    if failures > 0.1 * resamples:
        raise ReconstructionError(
            f"{failures}/{resamples} bootstrap replicas failed to converge",
            best=ReconstructionResult(rho_hat=np.eye(4) / 4, objective_value=np.inf),
        )
    out = {}
    for key, values in samples.items():
        lo, hi = np.quantile(np.asarray(values), [0.025, 0.975])
        out[key] = float((hi - lo) / 2.0)
    return out
