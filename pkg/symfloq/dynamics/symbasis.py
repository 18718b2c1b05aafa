"""Coherent initial states and the Dicke / parity (phi) representations of the symmetric sector.

Dicke index q counts |1> excitations; qubit |0> is spin up. The parity basis is

    phi_q^{+-} = (D_q +- s_q D_{N-q}) / sqrt(2),    s_q = i^(N-2q)

with the even-N middle state phi_{N/2}^+ = D_{N/2}. For even N, i^(N-2q) = (-1)^(N/2-q).
Canonical phi ordering is the plus block ascending in q, then the minus block ascending in q.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import gammaln

from symfloq.errors import DimensionMismatchError, InvalidParamsError, NormalizationError

logger = logging.getLogger(__name__)

EXACT_BINOMIAL_LIMIT = 60
NORM_CHECK_TOL = 1e-9
_I_POWERS = (1, 1j, -1, -1j)


def _readonly(values, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def binomial(n: int, k: int) -> float:
    """C(n, k) as a float; exact integer arithmetic up to n = 60, log-gamma beyond"""
    if k < 0 or k > n:
        return 0.0
    if n <= EXACT_BINOMIAL_LIMIT:
        return float(math.comb(n, k))
    return float(np.exp(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)))


def parity_phase(n_qubits: int, q: int) -> complex:
    """s_q = i^(N-2q), the phase pairing D_q with D_{N-q}"""
    return _I_POWERS[(n_qubits - 2 * q) % 4]


def plus_dim(n_qubits: int) -> int:
    return n_qubits // 2 + 1


def minus_dim(n_qubits: int) -> int:
    return (n_qubits + 1) // 2


@dataclass(frozen=True)
class CoherentParams:
    """Product state |theta0, phi0>^N with single-qubit state cos(theta0/2)|0> + e^{-i phi0} sin(theta0/2)|1>"""
    n_qubits: int
    theta0: float
    phi0: float

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 2:
            raise InvalidParamsError(f"n_qubits must be an integer >= 2, got {self.n_qubits}")
        if not 0.0 <= self.theta0 <= np.pi:
            raise InvalidParamsError(f"theta0 must lie in [0, pi], got {self.theta0}")
        if not -np.pi <= self.phi0 <= np.pi:
            raise InvalidParamsError(f"phi0 must lie in [-pi, pi], got {self.phi0}")

    @classmethod
    def from_bloch(cls, n_qubits: int, theta: float, phi: float) -> "CoherentParams":
        """Map arbitrary spherical angles onto the canonical domain (same Bloch vector, global phase dropped)"""
        theta = float(np.mod(theta, 2 * np.pi))
        if theta > np.pi:
            theta = 2 * np.pi - theta
            phi = phi + np.pi
        phi = float(np.angle(np.exp(1j * phi)))
        return cls(n_qubits, min(theta, np.pi), phi)


@dataclass(frozen=True, eq=False)
class DickeAmplitudes:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        amps = _readonly(self.amps)
        if amps.shape != (self.n_qubits + 1,):
            raise DimensionMismatchError(
                f"expected {self.n_qubits + 1} Dicke amplitudes, got shape {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_CHECK_TOL:
            raise NormalizationError(f"Dicke amplitudes have squared norm {norm}")
        object.__setattr__(self, 'amps', amps)


@dataclass(frozen=True, eq=False)
class PhiAmplitudes:
    n_qubits: int
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        plus = _readonly(self.plus)
        minus = _readonly(self.minus)
        if plus.shape != (plus_dim(self.n_qubits),) or minus.shape != (minus_dim(self.n_qubits),):
            raise DimensionMismatchError(
                f"phi blocks for N={self.n_qubits} must have lengths "
                f"{plus_dim(self.n_qubits)}/{minus_dim(self.n_qubits)}, got {plus.shape}/{minus.shape}")
        norm = float(np.vdot(plus, plus).real + np.vdot(minus, minus).real)
        if abs(norm - 1.0) > NORM_CHECK_TOL:
            raise NormalizationError(f"phi amplitudes have squared norm {norm}")
        object.__setattr__(self, 'plus', plus)
        object.__setattr__(self, 'minus', minus)

    @property
    def vector(self) -> np.ndarray:
        """Canonical concatenation [plus | minus]"""
        return np.concatenate([self.plus, self.minus])

    @classmethod
    def from_vector(cls, n_qubits: int, vector) -> "PhiAmplitudes":
        vector = np.asarray(vector, dtype=complex)
        if vector.shape != (n_qubits + 1,):
            raise DimensionMismatchError(f"expected {n_qubits + 1} phi amplitudes, got shape {vector.shape}")
        split = plus_dim(n_qubits)
        return cls(n_qubits, vector[:split], vector[split:])


@lru_cache(maxsize=128)
def _transform(n_qubits: int) -> np.ndarray:
    dim = n_qubits + 1
    t = np.zeros((dim, dim), dtype=complex)
    split = plus_dim(n_qubits)
    root = 1 / np.sqrt(2)
    for q in range(split):
        partner = n_qubits - q
        if partner == q:
            t[q, q] = 1.0
            continue
        s = parity_phase(n_qubits, q)
        t[q, q] = root
        t[q, partner] = np.conj(s) * root
    for q in range(minus_dim(n_qubits)):
        s = parity_phase(n_qubits, q)
        t[split + q, q] = root
        t[split + q, n_qubits - q] = -np.conj(s) * root
    t.setflags(write=False)
    return t


@dataclass(frozen=True, eq=False)
class BasisMap:
    """T with phi coordinates = T @ Dicke coordinates"""
    n_qubits: int
    transform: np.ndarray

    @classmethod
    def for_qubits(cls, n_qubits: int) -> "BasisMap":
        if n_qubits < 1:
            raise InvalidParamsError(f"n_qubits must be >= 1, got {n_qubits}")
        return cls(n_qubits, _transform(n_qubits))

    @property
    def split(self) -> int:
        return plus_dim(self.n_qubits)


def _coherent_factors(p: CoherentParams) -> Tuple[np.ndarray, np.ndarray]:
    q = np.arange(p.n_qubits + 1)
    root_binom = np.sqrt([binomial(p.n_qubits, k) for k in q])
    cos_half = np.cos(p.theta0 / 2)
    sin_half = np.sin(p.theta0 / 2)
    magnitude = root_binom * cos_half ** (p.n_qubits - q) * sin_half ** q
    return magnitude, np.exp(-1j * q * p.phi0)


def coherent_to_dicke(p: CoherentParams) -> DickeAmplitudes:
    magnitude, phase = _coherent_factors(p)
    return DickeAmplitudes(p.n_qubits, magnitude * phase)


def coherent_to_phi(p: CoherentParams) -> PhiAmplitudes:
    """Direct parity-basis expansion

    a_q = c_q + conj(s_q) c_{N-q}, b_q = c_q - conj(s_q) c_{N-q}; plus = a/sqrt(2), minus = b/sqrt(2),
    and for even N the middle slot is c_{N/2} itself.
    """
    n = p.n_qubits
    magnitude, phase = _coherent_factors(p)
    plus = np.empty(plus_dim(n), dtype=complex)
    minus = np.empty(minus_dim(n), dtype=complex)
    for q in range(minus_dim(n)):
        s_conj = np.conj(parity_phase(n, q))
        direct = magnitude[q] * phase[q]
        mirrored = s_conj * magnitude[n - q] * phase[n - q]
        plus[q] = (direct + mirrored) / np.sqrt(2)
        minus[q] = (direct - mirrored) / np.sqrt(2)
    if n % 2 == 0:
        plus[n // 2] = magnitude[n // 2] * phase[n // 2]
    return PhiAmplitudes(n, plus, minus)


def dicke_to_phi(d: DickeAmplitudes, m: BasisMap) -> PhiAmplitudes:
    if d.n_qubits != m.n_qubits:
        raise DimensionMismatchError(f"state has N={d.n_qubits}, basis map has N={m.n_qubits}")
    return PhiAmplitudes.from_vector(d.n_qubits, m.transform @ d.amps)


def phi_to_dicke(p: PhiAmplitudes, m: BasisMap) -> DickeAmplitudes:
    if p.n_qubits != m.n_qubits:
        raise DimensionMismatchError(f"state has N={p.n_qubits}, basis map has N={m.n_qubits}")
    return DickeAmplitudes(p.n_qubits, m.transform.conj().T @ p.vector)
