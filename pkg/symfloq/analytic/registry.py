import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib.resources import files
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import orjson

from symfloq.dynamics.entangle import entanglement_series
from symfloq.dynamics.floquet import DEFAULT_TAU, FloquetParams, build_floquet, projective_period
from symfloq.dynamics.symbasis import CoherentParams
from symfloq.errors import InvalidParamsError, UnsupportedModelError

logger = logging.getLogger(__name__)

S_LIN_MAX = 0.5
_J_TOL = 1e-12
_PHI_FUNCTIONS = {'cos': np.cos, 'sin': np.sin}


def ising_key(ising_strength) -> Fraction:
    """Exact J used to look up tabulated results; 0.5, "1/2" and Fraction(1, 2) are the same key"""
    if isinstance(ising_strength, str):
        return Fraction(ising_strength)
    frac = Fraction(float(ising_strength)).limit_denominator(64)
    if abs(float(frac) - float(ising_strength)) > _J_TOL:
        return Fraction(float(ising_strength))
    return frac


@dataclass(frozen=True)
class FormulaTerm:
    coef: float
    # each poly is ((a, k), ...) for sum a*cos(k theta0); the polys multiply
    theta: Tuple[Tuple[Tuple[float, int], ...], ...]
    sin_pow: int = 0
    cos_pow: int = 0
    phi: Optional[Tuple[str, int]] = None

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "FormulaTerm":
        phi = raw.get('phi')
        if phi is not None and phi[0] not in _PHI_FUNCTIONS:
            raise ValueError(f"unknown phi function {phi[0]!r}")
        return cls(coef=raw['coef'],
                   theta=tuple(tuple((a, k) for a, k in poly) for poly in raw.get('theta', [])),
                   sin_pow=raw.get('sin_pow', 0),
                   cos_pow=raw.get('cos_pow', 0),
                   phi=tuple(phi) if phi is not None else None)

    def evaluate(self, theta0, phi0):
        value = self.coef * np.sin(theta0) ** self.sin_pow * np.cos(theta0) ** self.cos_pow
        for poly in self.theta:
            value = value * sum(a * np.cos(k * theta0) for a, k in poly)
        if self.phi is not None:
            fn, m = self.phi
            value = value * _PHI_FUNCTIONS[fn](m * phi0)
        return value


@dataclass(frozen=True)
class ExtremalState:
    theta0: float
    phi0: float
    value: float


@dataclass(frozen=True, eq=False)
class AvgEntropyFormula:
    """Time-averaged single-qubit linear entropy of |theta0, phi0> for one (N, J) pair at tau = pi/4"""
    n_qubits: int
    ising_strength: Fraction
    source: str
    denominator: Optional[float]
    terms: Tuple[FormulaTerm, ...]
    interval: Tuple[float, float]
    extrema: Dict[str, ExtremalState] = field(default_factory=dict)

    @property
    def key(self) -> Tuple[int, Fraction]:
        return self.n_qubits, self.ising_strength

    def closed_form(self, theta0, phi0):
        """Vectorised over numpy arrays of angles"""
        if self.source != 'closed-form':
            raise UnsupportedModelError(f"no closed form held for N={self.n_qubits}, J={self.ising_strength}")
        return self.transcribed(theta0, phi0)

    def transcribed(self, theta0, phi0):
        """Held term table, also for numeric entries that keep a transcription which failed the numeric check"""
        if not self.terms:
            raise UnsupportedModelError(f"no terms held for N={self.n_qubits}, J={self.ising_strength}")
        total = sum(term.evaluate(theta0, phi0) for term in self.terms)
        return total / self.denominator

    def evaluate(self, theta0: float, phi0: float) -> float:
        if self.source == 'closed-form':
            return float(self.closed_form(theta0, phi0))
        return numeric_avg_linear_entropy(self.n_qubits, float(self.ising_strength), theta0, phi0)


@lru_cache(maxsize=64)
def _operator_and_period(n_qubits: int, ising_strength: float, kick_period: float):
    f = FloquetParams(n_qubits, ising_strength, kick_period)
    u = build_floquet(f)
    period = projective_period(u)
    if period is None:
        raise UnsupportedModelError(f"no operator period for {f}; a one-period average is undefined")
    return f, u, period


def numeric_avg_linear_entropy(n_qubits: int, ising_strength: float, theta0: float, phi0: float,
                               kick_period: float = DEFAULT_TAU) -> float:
    """Average of S_lin over n = 0..P-1 with P the projective operator period"""
    f, u, period = _operator_and_period(n_qubits, ising_strength, kick_period)
    p = CoherentParams.from_bloch(n_qubits, theta0, phi0)
    series = entanglement_series(p, f, period - 1, u=u, period_hint=period)
    return float(np.mean(series.s_lin))


class AvgEntropyRegistry:
    """Registry of the tabulated time-averaged linear entropies, keyed by (N, J)"""

    def __init__(self, formulas_path=None, verbose=False):
        self.formulas: Dict[Tuple[int, Fraction], AvgEntropyFormula] = {}
        self.verbose = verbose
        self._warned = set()
        self.load_formulas(formulas_path)

    def load_formulas(self, formulas_path=None) -> Dict[Tuple[int, Fraction], AvgEntropyFormula]:
        """Load the term tables from a JSON file, or from the packaged resource when no path is given"""
        source = formulas_path or files('symfloq').joinpath('resources', 'avg_entropy_formulas.json')
        try:
            if formulas_path:
                with open(formulas_path, 'rb') as f:
                    raw = orjson.loads(f.read())
            else:
                raw = orjson.loads(source.read_bytes())
            entries = [self._parse_entry(entry) for entry in raw['formulas']]
        except (OSError, KeyError, TypeError, ValueError) as e:
            raise ValueError(f"error loading formulas: {str(e)}")
        self.formulas = {entry.key: entry for entry in entries}
        if self.verbose:
            logger.info("loaded %d formulas from %s", len(self.formulas), source)
        return self.formulas

    @staticmethod
    def _parse_entry(entry: Dict[str, Any]) -> AvgEntropyFormula:
        source = entry.get('source', 'closed-form')
        if source not in ('closed-form', 'numeric'):
            raise ValueError(f"unknown formula source {source!r}")
        if (source == 'closed-form' or entry.get('terms')) and not entry.get('denominator'):
            raise ValueError(f"{source} entry N={entry['n_qubits']} has terms but no denominator")
        return AvgEntropyFormula(
            n_qubits=int(entry['n_qubits']),
            ising_strength=ising_key(entry['ising_strength']),
            source=source,
            denominator=entry.get('denominator'),
            terms=tuple(FormulaTerm.from_dict(t) for t in entry.get('terms', [])),
            interval=tuple(entry['interval']),
            extrema={name: ExtremalState(**state) for name, state in entry.get('extrema', {}).items()},
        )

    def pairs(self) -> List[Tuple[int, Fraction]]:
        return sorted(self.formulas, key=lambda k: (-k[1], k[0]))

    def get(self, n_qubits: int, ising_strength) -> AvgEntropyFormula:
        key = (n_qubits, ising_key(ising_strength))
        if key not in self.formulas:
            raise UnsupportedModelError(f"no averaged-entropy result held for N={n_qubits}, J={ising_strength}")
        return self.formulas[key]

    def evaluate(self, n_qubits: int, ising_strength, theta0: float, phi0: float) -> float:
        entry = self.get(n_qubits, ising_strength)
        if entry.source == 'numeric' and entry.key not in self._warned:
            logger.warning("N=%d J=%s: tabulated formula is not usable, falling back to the numeric average",
                           entry.n_qubits, entry.ising_strength)
            self._warned.add(entry.key)
        return entry.evaluate(theta0, phi0)


@lru_cache(maxsize=1)
def default_registry() -> AvgEntropyRegistry:
    return AvgEntropyRegistry()


def closed_avg_linear_entropy(n_qubits: int, ising_strength, theta0: float, phi0: float) -> float:
    if not np.isfinite(theta0) or not np.isfinite(phi0):
        raise InvalidParamsError(f"angles must be finite, got ({theta0}, {phi0})")
    return default_registry().evaluate(n_qubits, ising_strength, theta0, phi0)
