import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from symfloq.dynamics.entangle import (
    DEFAULT_LONG_WINDOW,
    AveragedRecord,
    EntanglementSeries,
    entanglement_series,
    series_period,
    time_average,
)
from symfloq.dynamics.floquet import (
    DEFAULT_PERIOD_HORIZON,
    DEFAULT_TAU,
    BlockUnitary,
    FloquetParams,
    build_floquet,
    projective_period,
)
from symfloq.dynamics.symbasis import CoherentParams
from symfloq.errors import InvalidParamsError, PeriodNotFoundError
from symfloq.oracle.brute import MAX_QUBITS, brute_series

logger = logging.getLogger(__name__)

S_LIN_MAX = 0.5
S_VN_MAX = float(np.log(2))
AVERAGING_MODES = ('auto', 'exact-period', 'long-window')
BACKENDS = ('symmetric', 'brute')
MEASURES = ('avg_s_lin', 'avg_s_vn', 'avg_conc')
CSV_COLUMNS = ['n', 'j', 'tau', 'theta0', 'phi0', 'period', 'avg_s_lin', 'avg_s_vn', 'avg_conc', 'ratio', 'drift']
EXTREMA_TOL = 1e-9
_J_DECIMALS = 12


@dataclass(frozen=True)
class SweepSpec:
    n_qubits: Tuple[int, ...]
    ising_strengths: Tuple[float, ...]
    kick_period: float = DEFAULT_TAU
    grid_theta: int = 101
    grid_phi: int = 101
    averaging: str = 'auto'
    window: int = DEFAULT_LONG_WINDOW
    period_horizon: int = DEFAULT_PERIOD_HORIZON
    backend: str = 'symmetric'
    measures: Tuple[str, ...] = MEASURES

    def __post_init__(self):
        if not self.n_qubits or not self.ising_strengths:
            raise InvalidParamsError("a sweep needs at least one N and one J")
        if self.grid_theta < 2 or self.grid_phi < 2:
            raise InvalidParamsError(f"grid sizes must be >= 2, got {self.grid_theta}x{self.grid_phi}")
        if self.averaging not in AVERAGING_MODES:
            raise InvalidParamsError(f"averaging must be one of {AVERAGING_MODES}, got {self.averaging!r}")
        if self.backend not in BACKENDS:
            raise InvalidParamsError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == 'brute' and max(self.n_qubits) > MAX_QUBITS:
            raise InvalidParamsError(f"brute backend supports N <= {MAX_QUBITS}")
        if self.window < 1 or self.period_horizon < 1:
            raise InvalidParamsError("window and period horizon must be >= 1")
        unknown = set(self.measures) - set(MEASURES)
        if unknown:
            raise InvalidParamsError(f"unknown measures {sorted(unknown)}")

    def theta_grid(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.grid_theta)

    def phi_grid(self) -> np.ndarray:
        return np.linspace(-np.pi, np.pi, self.grid_phi)


@dataclass(frozen=True)
class PointTask:
    n_qubits: int
    ising_strength: float
    kick_period: float
    theta0: float
    phi0: float
    averaging: str = 'auto'
    window: int = DEFAULT_LONG_WINDOW
    period_horizon: int = DEFAULT_PERIOD_HORIZON
    backend: str = 'symmetric'
    # projective operator period when already known for this (N, J, tau); None with detect_period
    # False means the parent searched and found none
    period_hint: Optional[int] = None
    detect_period: bool = True


@dataclass(frozen=True)
class SweepResultRow:
    n: int
    j: float
    tau: float
    theta0: float
    phi0: float
    period: int
    avg_s_lin: float
    avg_s_vn: float
    avg_conc: float
    ratio: float
    drift: float
    ratio_vn: float = field(default=0.0)

    @classmethod
    def from_average(cls, task: PointTask, record: AveragedRecord) -> "SweepResultRow":
        return cls(n=task.n_qubits, j=task.ising_strength, tau=task.kick_period,
                   theta0=task.theta0, phi0=task.phi0,
                   period=record.period if record.period is not None else -1,
                   avg_s_lin=record.s_lin, avg_s_vn=record.s_vn, avg_conc=record.conc,
                   ratio=record.s_lin / S_LIN_MAX, drift=record.drift,
                   ratio_vn=record.s_vn / S_VN_MAX)


def _series(task: PointTask, p: CoherentParams, f: FloquetParams, u: BlockUnitary,
            n_steps: int, period: Optional[int]) -> EntanglementSeries:
    if task.backend == 'brute':
        return brute_series(p, f, n_steps, period_hint=period)
    return entanglement_series(p, f, n_steps, u=u, period_hint=period, detect_period=False)


def evaluate_point(task: PointTask) -> SweepResultRow:
    """Time-averaged measures for one initial state

    With a projective operator period P the series is recorded for 3P steps and averaged over its own
    (entanglement) period; otherwise a long window is averaged and its drift reported.
    """
    f = FloquetParams(task.n_qubits, task.ising_strength, task.kick_period)
    p = CoherentParams.from_bloch(task.n_qubits, task.theta0, task.phi0)
    u = build_floquet(f)
    period = task.period_hint
    if task.detect_period and period is None and task.averaging != 'long-window':
        period = projective_period(u, n_max=task.period_horizon)

    if task.averaging != 'long-window' and period is not None:
        series = _series(task, p, f, u, 3 * period, period)
        # the measures repeat with P itself, so P is a valid fallback
        entanglement_period = series_period(series) or period
        record = time_average(series, 'exact-period', period=entanglement_period)
    elif task.averaging == 'exact-period':
        raise PeriodNotFoundError(f"no operator period within {task.period_horizon} steps for {f}")
    else:
        series = _series(task, p, f, u, task.window - 1, period)
        record = time_average(series, 'long-window', window=task.window)
    return SweepResultRow.from_average(task, record)


def run_tasks(tasks: Sequence[PointTask], workers: int = 1, progress: bool = False) -> List[SweepResultRow]:
    """Results in task order regardless of which worker finishes first"""
    if workers <= 1 or len(tasks) <= 1:
        return [evaluate_point(t) for t in tqdm(tasks, disable=not progress, desc='sweep')]
    chunksize = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(tqdm(executor.map(evaluate_point, tasks, chunksize=chunksize),
                         total=len(tasks), disable=not progress, desc='sweep'))


def _known_period(spec_averaging: str, n_qubits: int, ising_strength: float, kick_period: float,
                  horizon: int) -> Dict:
    if spec_averaging == 'long-window':
        return {'period_hint': None, 'detect_period': False}
    u = build_floquet(FloquetParams(n_qubits, ising_strength, kick_period))
    period = projective_period(u, n_max=horizon)
    logger.debug("N=%d J=%s tau=%s: projective period %s", n_qubits, ising_strength, kick_period, period)
    return {'period_hint': period, 'detect_period': False}


def grid_tasks(spec: SweepSpec) -> List[PointTask]:
    """One task per (N, J, theta0, phi0); theta0 outer, phi0 inner"""
    tasks = []
    for n_qubits, ising_strength in product(spec.n_qubits, spec.ising_strengths):
        base = PointTask(n_qubits, ising_strength, spec.kick_period, 0.0, 0.0, averaging=spec.averaging,
                         window=spec.window, period_horizon=spec.period_horizon, backend=spec.backend,
                         **_known_period(spec.averaging, n_qubits, ising_strength, spec.kick_period,
                                         spec.period_horizon))
        tasks.extend(replace(base, theta0=float(theta), phi0=float(phi))
                     for theta, phi in product(spec.theta_grid(), spec.phi_grid()))
    return tasks


def state_tasks(n_values: Sequence[int], j_values: Sequence[float], states: Sequence[Tuple[float, float]],
                kick_period: float = DEFAULT_TAU, averaging: str = 'auto', window: int = DEFAULT_LONG_WINDOW,
                period_horizon: int = DEFAULT_PERIOD_HORIZON, backend: str = 'symmetric') -> List[PointTask]:
    """Tasks for J or N sweeps at fixed initial states; periods are searched inside the workers"""
    if averaging not in AVERAGING_MODES:
        raise InvalidParamsError(f"averaging must be one of {AVERAGING_MODES}, got {averaging!r}")
    if backend not in BACKENDS:
        raise InvalidParamsError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == 'brute' and max(n_values) > MAX_QUBITS:
        raise InvalidParamsError(f"brute backend supports N <= {MAX_QUBITS}")
    return [PointTask(n, j, kick_period, theta, phi, averaging=averaging, window=window,
                      period_horizon=period_horizon, backend=backend)
            for n, j, (theta, phi) in product(n_values, j_values, states)]


def value_range(start: float, stop: float, step: float) -> List[float]:
    """Inclusive arithmetic range, values rounded so repeated sweeps print identical J"""
    if step <= 0:
        raise InvalidParamsError(f"step must be positive, got {step}")
    if stop < start:
        raise InvalidParamsError(f"range end {stop} is below its start {start}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, _J_DECIMALS) for k in range(count)]


def int_range(start: int, stop: int, step: int = 1) -> List[int]:
    if step < 1 or stop < start:
        raise InvalidParamsError(f"bad integer range {start}..{stop} step {step}")
    return list(range(start, stop + 1, step))


def rows_to_frame(rows: Sequence[SweepResultRow], with_vn_ratio: bool = False) -> pd.DataFrame:
    columns = CSV_COLUMNS + (['ratio_vn'] if with_vn_ratio else [])
    frame = pd.DataFrame([asdict(r) for r in rows], columns=CSV_COLUMNS + ['ratio_vn'])
    return frame.loc[:, columns]


def extrema_report(frame: pd.DataFrame, measures: Sequence[str] = MEASURES, tol: float = EXTREMA_TOL) -> Dict:
    """Per (N, J, tau): max and min of each measure with every grid state within tol of it"""
    groups = []
    for (n, j, tau), group in frame.groupby(['n', 'j', 'tau'], sort=False):
        entry = {'n': int(n), 'j': float(j), 'tau': float(tau)}
        for measure in measures:
            values = group[measure].to_numpy()
            entry[measure] = {}
            for label, target in (('max', values.max()), ('min', values.min())):
                hits = group[np.abs(values - target) <= tol]
                entry[measure][label] = {
                    'value': float(target),
                    'states': [{'theta0': float(t), 'phi0': float(ph)}
                               for t, ph in zip(hits['theta0'], hits['phi0'])],
                }
        groups.append(entry)
    return {'groups': groups}


def dip_report(frame: pd.DataFrame, dip_values: Sequence[float] = (0.5, 1.0)) -> Dict:
    """Ratio deficit at the integrable J values against the median ratio of the other J in the sweep"""
    reports = []
    for (n, theta, phi), group in frame.groupby(['n', 'theta0', 'phi0'], sort=False):
        special = np.zeros(len(group), dtype=bool)
        for target in dip_values:
            special |= np.isclose(group['j'].to_numpy(), target, atol=1e-9)
        baseline = float(group.loc[~special, 'ratio'].median()) if (~special).any() else None
        dips = []
        for _, row in group.loc[special].iterrows():
            dips.append({'j': float(row['j']), 'ratio': float(row['ratio']),
                         'dip': None if baseline is None else baseline - float(row['ratio'])})
        reports.append({'n': int(n), 'theta0': float(theta), 'phi0': float(phi),
                        'baseline_ratio': baseline, 'dips': dips})
    return {'states': reports}
