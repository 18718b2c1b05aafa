"""Full 2^N state-vector reference for the symmetric-sector pipeline.

Amplitude index = sum_l bit_l 2^l (qubit l is bit l, little-endian). In the (2,)*N tensor view
qubit l is axis N-1-l.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from symfloq.dynamics.entangle import (
    EntanglementSeries,
    Rdm1,
    Rdm2,
    concurrence_batch,
    linear_entropy_batch,
    rdm1_batch,
    rdm2_batch,
    vn_entropy_batch,
)
from symfloq.dynamics.floquet import FloquetParams, build_floquet, evolve_series
from symfloq.dynamics.symbasis import BasisMap, CoherentParams, DickeAmplitudes, binomial, coherent_to_phi
from symfloq.errors import DimensionMismatchError, InvalidParamsError, NormalizationError

logger = logging.getLogger(__name__)

MAX_QUBITS = 12
NORM_TOL = 1e-12
CROSSCHECK_TOL = 1e-9

SIGMA_Y = np.array([[0, -1j], [1j, 0]])


def _check_size(n_qubits: int) -> None:
    if int(n_qubits) != n_qubits or not 1 <= n_qubits <= MAX_QUBITS:
        raise InvalidParamsError(f"brute-force states need 1 <= N <= {MAX_QUBITS}, got {n_qubits}")


@dataclass(frozen=True, eq=False)
class FullState:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        _check_size(self.n_qubits)
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (2 ** self.n_qubits,):
            raise DimensionMismatchError(f"expected {2 ** self.n_qubits} amplitudes, got shape {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-9:
            raise NormalizationError(f"full state has squared norm {norm}")
        amps.setflags(write=False)
        object.__setattr__(self, 'amps', amps)

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n_qubits)


@lru_cache(maxsize=16)
def _popcounts(n_qubits: int) -> np.ndarray:
    return np.bitwise_count(np.arange(2 ** n_qubits, dtype=np.uint64)).astype(int)


def _axis(n_qubits: int, qubit: int) -> int:
    return n_qubits - 1 - qubit


def _apply_single(psi: np.ndarray, op: np.ndarray, axis: int) -> np.ndarray:
    """op acting on one tensor axis; psi may carry leading batch axes"""
    return np.moveaxis(np.tensordot(op, psi, (1, axis)), 0, axis)


def brute_coherent(p: CoherentParams) -> FullState:
    _check_size(p.n_qubits)
    single = np.array([np.cos(p.theta0 / 2), np.exp(-1j * p.phi0) * np.sin(p.theta0 / 2)])
    return FullState(p.n_qubits, reduce(np.kron, [single] * p.n_qubits))


def _rotation(kick_period: float) -> np.ndarray:
    # exp(-i tau sigma^y)
    c, s = np.cos(kick_period), np.sin(kick_period)
    return np.array([[c, -s], [s, c]])


def _ising_diagonal(n_qubits: int, ising_strength: float, kick_period: float) -> np.ndarray:
    m = _popcounts(n_qubits)
    # sum_{l<l'} z_l z_l' = [(N-2m)^2 - N]/2
    return np.exp(-1j * ising_strength * kick_period * ((n_qubits - 2 * m) ** 2 - n_qubits) / 2)


def _step_amps(amps: np.ndarray, n_qubits: int, rotation: np.ndarray, diagonal: np.ndarray) -> np.ndarray:
    psi = amps.reshape((2,) * n_qubits)
    for axis in range(n_qubits):
        psi = _apply_single(psi, rotation, axis)
    return diagonal * psi.reshape(-1)


def brute_step(s: FullState, ising_strength: float, kick_period: float) -> FullState:
    """One period: the sigma^y kick on every qubit, then the Ising phase"""
    amps = _step_amps(s.amps, s.n_qubits, _rotation(kick_period),
                      _ising_diagonal(s.n_qubits, ising_strength, kick_period))
    return FullState(s.n_qubits, amps)


def brute_evolve(s: FullState, ising_strength: float, kick_period: float, n_steps: int) -> np.ndarray:
    """Amplitudes for n = 0..n_steps, shape (n_steps+1, 2^N)"""
    if n_steps < 0:
        raise InvalidParamsError(f"n_steps must be >= 0, got {n_steps}")
    rotation = _rotation(kick_period)
    diagonal = _ising_diagonal(s.n_qubits, ising_strength, kick_period)
    rows = np.empty((n_steps + 1, 2 ** s.n_qubits), dtype=complex)
    rows[0] = s.amps
    for n in range(1, n_steps + 1):
        rows[n] = _step_amps(rows[n - 1], s.n_qubits, rotation, diagonal)
    return rows


def brute_parity(s: FullState) -> FullState:
    """Global sigma^y on every qubit"""
    psi = s.tensor()
    for axis in range(s.n_qubits):
        psi = _apply_single(psi, SIGMA_Y, axis)
    return FullState(s.n_qubits, psi.reshape(-1))


def _check_keep(n_qubits: int, keep: Sequence[int]) -> Tuple[int, ...]:
    keep = tuple(int(k) for k in keep)
    if len(keep) not in (1, 2) or len(set(keep)) != len(keep) or not all(0 <= k < n_qubits for k in keep):
        raise InvalidParamsError(f"keep must list 1 or 2 distinct qubits in 0..{n_qubits - 1}, got {keep}")
    return keep


def rdm_rows(rows: np.ndarray, n_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """Partial traces of many full states at once, shape (steps, 2^k, 2^k)

    The first kept qubit is the most significant index of the result.
    """
    keep = _check_keep(n_qubits, keep)
    rows = np.atleast_2d(rows)
    psi = rows.reshape((rows.shape[0],) + (2,) * n_qubits)
    kept_axes = [1 + _axis(n_qubits, k) for k in keep]
    psi = np.moveaxis(psi, kept_axes, list(range(1, len(keep) + 1)))
    flat = psi.reshape(rows.shape[0], 2 ** len(keep), -1)
    return flat @ np.swapaxes(flat.conj(), 1, 2)


def brute_rdm(s: FullState, keep: Sequence[int]) -> Union[Rdm1, Rdm2]:
    rho = rdm_rows(s.amps, s.n_qubits, keep)[0]
    return Rdm1(rho) if rho.shape == (2, 2) else Rdm2(rho)


def embed_dicke(d: DickeAmplitudes) -> FullState:
    _check_size(d.n_qubits)
    counts = _popcounts(d.n_qubits)
    norms = np.sqrt([binomial(d.n_qubits, q) for q in range(d.n_qubits + 1)])
    return FullState(d.n_qubits, (d.amps / norms)[counts])


def project_dicke_rows(rows: np.ndarray, n_qubits: int) -> Tuple[np.ndarray, np.ndarray]:
    """(Dicke amplitudes, norm left outside the symmetric sector) for each row"""
    rows = np.atleast_2d(rows)
    counts = _popcounts(n_qubits)
    amps = np.zeros((rows.shape[0], n_qubits + 1), dtype=complex)
    for q in range(n_qubits + 1):
        amps[:, q] = rows[:, counts == q].sum(axis=1) / np.sqrt(binomial(n_qubits, q))
    leftover = np.clip(1 - np.sum(np.abs(amps) ** 2, axis=1), 0.0, None)
    return amps, leftover


def project_dicke(s: FullState) -> Tuple[np.ndarray, float]:
    amps, leftover = project_dicke_rows(s.amps, s.n_qubits)
    return amps[0], float(leftover[0])


def brute_series(p: CoherentParams, f: FloquetParams, n_steps: int,
                 period_hint: Optional[int] = None) -> EntanglementSeries:
    """EntanglementSeries computed from full-space evolution and partial traces of qubits 0 and 1"""
    if p.n_qubits != f.n_qubits:
        raise InvalidParamsError(f"initial state has N={p.n_qubits}, Floquet params have N={f.n_qubits}")
    rows = brute_evolve(brute_coherent(p), f.ising_strength, f.kick_period, n_steps)
    rho1 = rdm_rows(rows, p.n_qubits, [0])
    rho2 = rdm_rows(rows, p.n_qubits, [0, 1])
    return EntanglementSeries(p, f, linear_entropy_batch(rho1), vn_entropy_batch(rho1),
                              concurrence_batch(rho2), operator_period=period_hint)


@dataclass(frozen=True)
class CrosscheckReport:
    coherent: CoherentParams
    floquet: FloquetParams
    n_steps: int
    deviations: Dict[str, float] = field(default_factory=dict)
    tol: float = CROSSCHECK_TOL

    @property
    def passed(self) -> bool:
        return all(value < self.tol for value in self.deviations.values())

    @property
    def worst(self) -> Tuple[str, float]:
        return max(self.deviations.items(), key=lambda item: item[1])

    def to_dict(self) -> Dict:
        return {
            'n': self.coherent.n_qubits, 'j': self.floquet.ising_strength, 'tau': self.floquet.kick_period,
            'theta0': self.coherent.theta0, 'phi0': self.coherent.phi0, 'steps': self.n_steps,
            'passed': self.passed, 'deviations': self.deviations,
        }


def crosscheck(p: CoherentParams, f: FloquetParams, n_steps: int, tol: float = CROSSCHECK_TOL) -> CrosscheckReport:
    """Compare every symmetric-sector quantity with its full-space counterpart over n = 0..n_steps"""
    if p.n_qubits != f.n_qubits:
        raise InvalidParamsError(f"initial state has N={p.n_qubits}, Floquet params have N={f.n_qubits}")
    n = p.n_qubits
    m = BasisMap.for_qubits(n)
    sector = evolve_series(coherent_to_phi(p), build_floquet(f, m), n_steps) @ m.transform.conj()
    full = brute_evolve(brute_coherent(p), f.ising_strength, f.kick_period, n_steps)
    projected, leftover = project_dicke_rows(full, n)

    rho1_sector, rho1_full = rdm1_batch(sector, n), rdm_rows(full, n, [0])
    rho2_sector, rho2_full = rdm2_batch(sector, n), rdm_rows(full, n, [0, 1])

    def gap(a, b) -> float:
        return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))

    deviations = {
        'amplitudes': gap(sector, projected),
        'leakage': float(np.max(leftover)),
        'rho1': gap(rho1_sector, rho1_full),
        'rho2': gap(rho2_sector, rho2_full),
        's_lin': gap(linear_entropy_batch(rho1_sector), linear_entropy_batch(rho1_full)),
        's_vn': gap(vn_entropy_batch(rho1_sector), vn_entropy_batch(rho1_full)),
        'conc': gap(concurrence_batch(rho2_sector), concurrence_batch(rho2_full)),
    }
    report = CrosscheckReport(p, f, n_steps, deviations, tol)
    if not report.passed:
        logger.warning("crosscheck failed for %s, %s: %s=%.3e", p, f, *report.worst)
    return report
