"""Floquet operator of the kicked infinite-range Ising model in the parity (phi) basis.

One period is U = exp(-i J tau sum_{l<l'} z_l z_l') exp(-i tau sum_l sigma^y_l); the kick acts first.
In the Dicke basis U = diag(ising_phase) @ kick_matrix, and U_phi = T U T^dagger is block diagonal.
"""
import logging
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import block_diag, eigh_tridiagonal, schur

from symfloq.dynamics.symbasis import BasisMap, PhiAmplitudes
from symfloq.errors import DimensionMismatchError, InvalidParamsError, LeakageError

logger = logging.getLogger(__name__)

DEFAULT_TAU = np.pi / 4
LEAKAGE_TOL = 1e-10
DEFAULT_PERIOD_HORIZON = 10_000
DEFAULT_PERIOD_TOL = 1e-8
_DEGENERACY_DECIMALS = 9


@dataclass(frozen=True)
class FloquetParams:
    n_qubits: int
    ising_strength: float
    kick_period: float = DEFAULT_TAU

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 2:
            raise InvalidParamsError(f"n_qubits must be an integer >= 2, got {self.n_qubits}")
        if not self.kick_period > 0:
            raise InvalidParamsError(f"kick period tau must be positive, got {self.kick_period}")


@dataclass(frozen=True, eq=False)
class BlockUnitary:
    """Parity blocks of the Floquet operator (or of any of its powers)"""
    n_qubits: int
    u_plus: np.ndarray
    u_minus: np.ndarray
    params: Optional[FloquetParams] = None

    def __post_init__(self):
        for name in ('u_plus', 'u_minus'):
            block = np.array(getattr(self, name), dtype=complex)
            if block.ndim != 2 or block.shape[0] != block.shape[1]:
                raise DimensionMismatchError(f"{name} must be square, got shape {block.shape}")
            block.setflags(write=False)
            object.__setattr__(self, name, block)
        if self.u_plus.shape[0] + self.u_minus.shape[0] != self.n_qubits + 1:
            raise DimensionMismatchError(
                f"blocks of sizes {self.u_plus.shape[0]}+{self.u_minus.shape[0]} do not span N+1={self.n_qubits + 1}")

    @property
    def blocks(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.u_plus, self.u_minus

    def full(self) -> np.ndarray:
        """Assembled (N+1)x(N+1) matrix in canonical phi ordering"""
        return block_diag(self.u_plus, self.u_minus)

    def unitarity_error(self) -> float:
        return max(float(np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0])))) for b in self.blocks)

    @cached_property
    def eigensystem(self) -> Tuple[Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
        """Per block (eigenphases, Z) with block = Z diag(exp(i*phase)) Z^dagger

        Complex Schur vectors stay orthonormal inside degenerate eigenspaces, which plain eig does not guarantee.
        """
        return tuple(_unitary_eigensystem(b) for b in self.blocks)


@dataclass(frozen=True, eq=False)
class SpectralData:
    eigenvalues: np.ndarray
    block_labels: Tuple[str, ...]

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.eigenvalues)

    @property
    def degeneracies(self) -> Dict[float, int]:
        """Multiplicity of each eigenphase (radians, rounded)"""
        counts = Counter(np.round(_canonical_angle(self.eigenvalues), _DEGENERACY_DECIMALS).tolist())
        return dict(sorted(counts.items()))


def _canonical_angle(values: np.ndarray) -> np.ndarray:
    angles = np.angle(values)
    # -pi and pi are the same eigenvalue; keep the representative in (-pi, pi]
    return np.where(angles <= -np.pi + 1e-12, np.pi, angles)


def _unitary_eigensystem(block: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    triangular, z = schur(block, output='complex')
    return np.angle(np.diag(triangular)), z


def ising_phase(n_qubits: int, q: int, ising_strength: float, kick_period: float) -> complex:
    """exp(-i J tau [(N-2q)^2 - N]/2), the Ising phase picked up by |D_q>"""
    if not 0 <= q <= n_qubits:
        raise InvalidParamsError(f"excitation count q={q} outside 0..{n_qubits}")
    return complex(np.exp(-1j * ising_strength * kick_period * ((n_qubits - 2 * q) ** 2 - n_qubits) / 2))


def ising_phases(n_qubits: int, ising_strength: float, kick_period: float) -> np.ndarray:
    q = np.arange(n_qubits + 1)
    return np.exp(-1j * ising_strength * kick_period * ((n_qubits - 2 * q) ** 2 - n_qubits) / 2)


def kick_matrix(n_qubits: int, kick_period: float) -> np.ndarray:
    """exp(-i tau sum sigma^y) restricted to the Dicke sector, i.e. exp(-2i tau S_y) for spin N/2

    S_y = P S_x P^dagger with P = diag(i^q), and S_x is the real tridiagonal matrix with
    <D_{q-1}|S_x|D_q> = sqrt(q(N-q+1))/2, so the rotation follows from one real symmetric eigensolve.
    """
    if n_qubits < 1:
        raise InvalidParamsError(f"n_qubits must be >= 1, got {n_qubits}")
    q = np.arange(1, n_qubits + 1)
    off_diagonal = np.sqrt(q * (n_qubits - q + 1)) / 2
    eigenvalues, vectors = eigh_tridiagonal(np.zeros(n_qubits + 1), off_diagonal)
    rotation_x = (vectors * np.exp(-2j * kick_period * eigenvalues)) @ vectors.T
    p = np.array([1, 1j, -1, -1j])[np.arange(n_qubits + 1) % 4]
    return (p[:, None] * rotation_x * p.conj()[None, :]).real


def dicke_floquet(p: FloquetParams) -> np.ndarray:
    """U in the Dicke basis"""
    return ising_phases(p.n_qubits, p.ising_strength, p.kick_period)[:, None] * kick_matrix(p.n_qubits,
                                                                                            p.kick_period)


def build_floquet(p: FloquetParams, m: Optional[BasisMap] = None) -> BlockUnitary:
    m = m or BasisMap.for_qubits(p.n_qubits)
    if m.n_qubits != p.n_qubits:
        raise DimensionMismatchError(f"basis map has N={m.n_qubits}, params have N={p.n_qubits}")
    t = m.transform
    u_phi = t @ dicke_floquet(p) @ t.conj().T
    split = m.split
    leakage = max(float(np.max(np.abs(u_phi[:split, split:]), initial=0.0)),
                  float(np.max(np.abs(u_phi[split:, :split]), initial=0.0)))
    if leakage >= LEAKAGE_TOL:
        raise LeakageError(f"cross-parity leakage {leakage:.3e} for {p}")
    logger.debug("built Floquet blocks for %s (leakage %.2e)", p, leakage)
    return BlockUnitary(p.n_qubits, u_phi[:split, :split], u_phi[split:, split:], params=p)


def _identity_like(u: BlockUnitary) -> BlockUnitary:
    return BlockUnitary(u.n_qubits, np.eye(u.u_plus.shape[0]), np.eye(u.u_minus.shape[0]), params=u.params)


def power(u: BlockUnitary, n: int) -> BlockUnitary:
    """U^n per block as Z diag(lambda^n) Z^dagger"""
    if n < 0:
        raise InvalidParamsError(f"power exponent must be >= 0, got {n}")
    if n == 0:
        return _identity_like(u)
    if n == 1:
        return u
    blocks = [(z * np.exp(1j * n * phases)) @ z.conj().T for phases, z in u.eigensystem]
    return BlockUnitary(u.n_qubits, blocks[0], blocks[1], params=u.params)


def _check_state(state: PhiAmplitudes, u: BlockUnitary) -> None:
    if state.n_qubits != u.n_qubits:
        raise DimensionMismatchError(f"state has N={state.n_qubits}, operator has N={u.n_qubits}")


def evolve(state: PhiAmplitudes, u: BlockUnitary, n: int) -> PhiAmplitudes:
    _check_state(state, u)
    if n < 0:
        raise InvalidParamsError(f"number of steps must be >= 0, got {n}")
    if n == 0:
        return state
    parts = []
    for (phases, z), x in zip(u.eigensystem, (state.plus, state.minus)):
        parts.append(z @ (np.exp(1j * n * phases) * (z.conj().T @ x)))
    return PhiAmplitudes(state.n_qubits, parts[0], parts[1])


def evolve_series(state: PhiAmplitudes, u: BlockUnitary, n_steps: int) -> np.ndarray:
    """Canonical phi coordinates for n = 0..n_steps, shape (n_steps+1, N+1)"""
    _check_state(state, u)
    if n_steps < 0:
        raise InvalidParamsError(f"number of steps must be >= 0, got {n_steps}")
    steps = np.arange(n_steps + 1)
    parts = []
    for (phases, z), x in zip(u.eigensystem, (state.plus, state.minus)):
        coefficients = z.conj().T @ x
        parts.append((np.exp(1j * np.outer(steps, phases)) * coefficients) @ z.T)
    return np.concatenate(parts, axis=1)


def spectrum(u: BlockUnitary) -> SpectralData:
    (phases_plus, _), (phases_minus, _) = u.eigensystem
    eigenvalues = np.exp(1j * np.concatenate([phases_plus, phases_minus]))
    labels = np.array(['+'] * len(phases_plus) + ['-'] * len(phases_minus))
    order = np.lexsort((labels, np.round(_canonical_angle(eigenvalues), 12)))
    return SpectralData(eigenvalues[order], tuple(labels[order].tolist()))


def _first_recurrence(fractions: np.ndarray, n_max: int, tol: float) -> List[int]:
    """Candidate n <= n_max with |exp(2 pi i n f) - 1| < tol for every fraction f"""
    steps = np.arange(1, n_max + 1)
    distance = np.abs(2 * np.sin(np.pi * np.outer(steps, fractions)))
    return (steps[np.all(distance < tol, axis=1)]).tolist()


def _all_phases(u: BlockUnitary) -> np.ndarray:
    return np.concatenate([phases for phases, _ in u.eigensystem])


def operator_period(u: BlockUnitary, n_max: int = DEFAULT_PERIOD_HORIZON,
                    tol: float = DEFAULT_PERIOD_TOL) -> Optional[int]:
    """Smallest n <= n_max with ||U^n - I||_max < tol, or None"""
    if n_max < 1 or tol <= 0:
        raise InvalidParamsError(f"need n_max >= 1 and tol > 0, got {n_max}, {tol}")
    fractions = _all_phases(u) / (2 * np.pi)
    for n in _first_recurrence(fractions, n_max, tol):
        deviation = max(float(np.max(np.abs(b - np.eye(b.shape[0])))) for b in power(u, n).blocks)
        if deviation < tol:
            return n
        logger.debug("period candidate %d rejected (deviation %.2e)", n, deviation)
    return None


def projective_period(u: BlockUnitary, n_max: int = DEFAULT_PERIOD_HORIZON,
                      tol: float = DEFAULT_PERIOD_TOL) -> Optional[int]:
    """Smallest n <= n_max with U^n = e^{i alpha} I, or None"""
    if n_max < 1 or tol <= 0:
        raise InvalidParamsError(f"need n_max >= 1 and tol > 0, got {n_max}, {tol}")
    phases = _all_phases(u)
    fractions = (phases - phases[0]) / (2 * np.pi)
    for n in _first_recurrence(fractions, n_max, tol):
        full = power(u, n).full()
        deviation = float(np.max(np.abs(full - full[0, 0] * np.eye(full.shape[0]))))
        if deviation < tol:
            return n
    return None
