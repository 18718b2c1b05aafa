"""Reduced density matrices of symmetric-sector states and the entanglement measures built on them.

Two-qubit matrices use the basis |00>, |01>, |10>, |11> with index 2*x_first + x_second.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import entr

from symfloq.dynamics.floquet import (
    DEFAULT_PERIOD_HORIZON,
    DEFAULT_PERIOD_TOL,
    BlockUnitary,
    FloquetParams,
    build_floquet,
    evolve_series,
    projective_period,
)
from symfloq.dynamics.symbasis import (
    BasisMap,
    CoherentParams,
    DickeAmplitudes,
    binomial,
    coherent_to_phi,
)
from symfloq.errors import InvalidDensityMatrixError, InvalidParamsError, PeriodNotFoundError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
PSD_SLACK = 1e-10
EIGEN_FLOOR = 1e-12
DEFAULT_LONG_WINDOW = 10_000

SPIN_FLIP = np.array([[0, 0, 0, -1],
                      [0, 0, 1, 0],
                      [0, 1, 0, 0],
                      [-1, 0, 0, 0]], dtype=float)

AveragingMode = Literal['exact-period', 'long-window']


def _check_density(matrix: np.ndarray, dim: int) -> np.ndarray:
    matrix = np.array(matrix, dtype=complex)
    if matrix.shape != (dim, dim):
        raise InvalidDensityMatrixError(f"expected a {dim}x{dim} matrix, got shape {matrix.shape}")
    if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_TOL:
        raise InvalidDensityMatrixError("density matrix is not Hermitian")
    if abs(np.trace(matrix) - 1) > TRACE_TOL:
        raise InvalidDensityMatrixError(f"density matrix has trace {np.trace(matrix)}")
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class Rdm1:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'matrix', _check_density(self.matrix, 2))

    @property
    def population(self) -> float:
        """<0|rho|0>"""
        return float(self.matrix[0, 0].real)

    @property
    def coherence(self) -> complex:
        """<0|rho|1>"""
        return complex(self.matrix[0, 1])


@dataclass(frozen=True, eq=False)
class Rdm2:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'matrix', _check_density(self.matrix, 4))


@dataclass(frozen=True, eq=False)
class EntanglementSeries:
    """Per-step entanglement measures for one trajectory, n = 0..len-1"""
    coherent: CoherentParams
    floquet: FloquetParams
    s_lin: np.ndarray
    s_vn: np.ndarray
    concurrence: np.ndarray
    operator_period: Optional[int] = None

    @property
    def steps(self) -> np.ndarray:
        return np.arange(len(self.s_lin))

    def measures(self) -> np.ndarray:
        return np.stack([self.s_lin, self.s_vn, self.concurrence])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'step': self.steps, 's_lin': self.s_lin,
                             's_vn': self.s_vn, 'conc': self.concurrence})


@dataclass(frozen=True)
class AveragedRecord:
    mode: str
    period: Optional[int]
    s_lin: float
    s_vn: float
    conc: float
    drift: float = 0.0
    # exact-period mode only: the same averages taken over n = 1..P
    shifted: Optional[Tuple[float, float, float]] = field(default=None)


@lru_cache(maxsize=128)
def _rdm1_weights(n_qubits: int) -> Tuple[np.ndarray, np.ndarray]:
    q = np.arange(n_qubits + 1)
    population = (n_qubits - q) / n_qubits
    coherence = np.sqrt((q[:-1] + 1) * (n_qubits - q[:-1])) / n_qubits
    return population, coherence


@lru_cache(maxsize=128)
def _rdm2_weights(n_qubits: int) -> np.ndarray:
    """Row a of the result weights c_{k+s_a}, k = 0..N-2, with s_a the excitation count of pair state a"""
    k = np.arange(n_qubits - 1)
    weights = np.empty((3, n_qubits - 1))
    for s in range(3):
        weights[s] = [np.sqrt(binomial(n_qubits - 2, kk) / binomial(n_qubits, kk + s)) for kk in k]
    return weights


def rdm1_batch(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """Single-qubit RDMs for rows of Dicke amplitudes, shape (steps, 2, 2)"""
    amps = np.atleast_2d(amps)
    population, coherence = _rdm1_weights(n_qubits)
    rho00 = (np.abs(amps) ** 2) @ population
    rho01 = np.sum(amps[:, :-1] * amps[:, 1:].conj() * coherence, axis=1)
    out = np.empty((amps.shape[0], 2, 2), dtype=complex)
    out[:, 0, 0] = rho00
    out[:, 1, 1] = 1 - rho00
    out[:, 0, 1] = rho01
    out[:, 1, 0] = rho01.conj()
    return out


def rdm2_batch(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """Two-qubit RDMs for rows of Dicke amplitudes, shape (steps, 4, 4)"""
    if n_qubits < 2:
        raise InvalidParamsError(f"two-qubit RDM needs N >= 2, got {n_qubits}")
    amps = np.atleast_2d(amps)
    weights = _rdm2_weights(n_qubits)
    span = n_qubits - 1
    v = np.empty((amps.shape[0], 4, span), dtype=complex)
    for row, s in enumerate((0, 1, 1, 2)):
        v[:, row, :] = weights[s] * amps[:, s:s + span]
    return v @ np.swapaxes(v.conj(), 1, 2)


def _det2(rho: np.ndarray) -> np.ndarray:
    return (rho[..., 0, 0] * rho[..., 1, 1] - np.abs(rho[..., 0, 1]) ** 2).real


def linear_entropy_batch(rho1: np.ndarray) -> np.ndarray:
    # 1 - tr rho^2 = 2 det rho for a unit-trace 2x2 matrix
    return np.clip(2 * _det2(rho1), 0.0, 0.5)


def rdm1_eigs_batch(rho1: np.ndarray) -> np.ndarray:
    root = np.sqrt(np.clip(1 - 4 * _det2(rho1), 0.0, 1.0))
    return np.stack([(1 + root) / 2, (1 - root) / 2], axis=-1)


def vn_entropy_batch(rho1: np.ndarray) -> np.ndarray:
    return np.sum(entr(np.clip(rdm1_eigs_batch(rho1), 0.0, 1.0)), axis=-1)


def concurrence_batch(rho2: np.ndarray) -> np.ndarray:
    """max(0, mu1 - mu2 - mu3 - mu4) with mu the singular values of V^T (sy x sy) V, rho = V V^dagger

    These are the square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy), obtained without
    taking square roots of possibly negative rounding noise.
    """
    rho2 = np.asarray(rho2)
    eigenvalues, vectors = np.linalg.eigh(rho2)
    lowest = float(np.min(eigenvalues))
    if lowest < -PSD_SLACK:
        raise InvalidDensityMatrixError(f"two-qubit RDM has eigenvalue {lowest:.3e}")
    eigenvalues = np.where(eigenvalues < EIGEN_FLOOR, 0.0, eigenvalues)
    v = vectors * np.sqrt(eigenvalues)[..., None, :]
    m = np.swapaxes(v, -1, -2) @ SPIN_FLIP @ v
    mu = np.linalg.svd(m, compute_uv=False)
    return np.clip(mu[..., 0] - mu[..., 1] - mu[..., 2] - mu[..., 3], 0.0, 1.0)


def rdm1(d: DickeAmplitudes) -> Rdm1:
    return Rdm1(rdm1_batch(d.amps, d.n_qubits)[0])


def rdm2(d: DickeAmplitudes) -> Rdm2:
    return Rdm2(rdm2_batch(d.amps, d.n_qubits)[0])


def rdm1_eigs(r: Rdm1) -> Tuple[float, float]:
    high, low = rdm1_eigs_batch(r.matrix)
    return float(high), float(low)


def linear_entropy(r: Rdm1) -> float:
    return float(linear_entropy_batch(r.matrix))


def vn_entropy(r: Rdm1) -> float:
    return float(vn_entropy_batch(r.matrix))


def concurrence(r: Rdm2) -> float:
    return float(concurrence_batch(r.matrix[None])[0])


def measures_from_dicke(amps: np.ndarray, n_qubits: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(s_lin, s_vn, concurrence) for each row of Dicke amplitudes"""
    rho1 = rdm1_batch(amps, n_qubits)
    return linear_entropy_batch(rho1), vn_entropy_batch(rho1), concurrence_batch(rdm2_batch(amps, n_qubits))


def entanglement_series(p: CoherentParams, f: FloquetParams, n_steps: int,
                        u: Optional[BlockUnitary] = None,
                        period_hint: Optional[int] = None,
                        detect_period: bool = True,
                        period_horizon: int = DEFAULT_PERIOD_HORIZON) -> EntanglementSeries:
    """Records n = 0..n_steps; n = 0 is the initial state itself, n = 1 follows the first kick

    The projective operator period (detected here unless a hint is given or detection is off)
    is attached to the series; series_period uses it to break ties.
    """
    if n_steps < 0:
        raise InvalidParamsError(f"n_steps must be >= 0, got {n_steps}")
    if p.n_qubits != f.n_qubits:
        raise InvalidParamsError(f"initial state has N={p.n_qubits}, Floquet params have N={f.n_qubits}")
    m = BasisMap.for_qubits(p.n_qubits)
    u = u or build_floquet(f, m)
    phi_rows = evolve_series(coherent_to_phi(p), u, n_steps)
    dicke_rows = phi_rows @ m.transform.conj()
    s_lin, s_vn, conc = measures_from_dicke(dicke_rows, p.n_qubits)
    if period_hint is None and detect_period:
        period_hint = projective_period(u, n_max=period_horizon)
    return EntanglementSeries(p, f, s_lin, s_vn, conc, operator_period=period_hint)


def series_period(s: EntanglementSeries, tol: float = DEFAULT_PERIOD_TOL) -> Optional[int]:
    """Smallest P with |x(n+P) - x(n)| < tol for every recorded n and all three measures

    Only P with 3P <= len(series) are tested. When the operator period is known, passing candidates
    that divide it take precedence.
    """
    values = s.measures()
    length = values.shape[1]
    passing = []
    for candidate in range(1, length // 3 + 1):
        if np.max(np.abs(values[:, candidate:] - values[:, :-candidate])) < tol:
            passing.append(candidate)
            if s.operator_period is None or s.operator_period % candidate == 0:
                return candidate
    return passing[0] if passing else None


def time_average(s: EntanglementSeries, mode: AveragingMode = 'exact-period',
                 period: Optional[int] = None, window: Optional[int] = None) -> AveragedRecord:
    values = s.measures()
    if mode == 'exact-period':
        period = period or series_period(s)
        if period is None:
            raise PeriodNotFoundError(
                f"no entanglement period within {values.shape[1]} steps for {s.coherent}, {s.floquet}")
        if values.shape[1] < period + 1:
            raise InvalidParamsError(f"series of {values.shape[1]} records is shorter than period {period} + 1")
        head = values[:, :period].mean(axis=1)
        shifted = values[:, 1:period + 1].mean(axis=1)
        return AveragedRecord(mode, period, *head.tolist(), drift=0.0, shifted=tuple(shifted.tolist()))
    if mode == 'long-window':
        window = min(window or values.shape[1], values.shape[1])
        if window < 1:
            raise InvalidParamsError("long-window averaging needs at least one record")
        head = values[:, :window].mean(axis=1)
        half = window // 2
        drift = abs(float(values[0, :half].mean() - values[0, half:window].mean())) if half else 0.0
        return AveragedRecord(mode, None, *head.tolist(), drift=drift)
    raise InvalidParamsError(f"unknown averaging mode {mode!r}")
