import logging
from fractions import Fraction

import numpy as np
import orjson
import pytest

from symfloq.analytic.registry import (
    AvgEntropyRegistry,
    closed_avg_linear_entropy,
    ising_key,
    numeric_avg_linear_entropy,
)
from symfloq.errors import InvalidParamsError, UnsupportedModelError
from symfloq.harness.sweep import PointTask, SweepSpec, evaluate_point, grid_tasks, run_tasks
from symfloq.harness.validate import transcription_deviation

CLOSED_PAIRS = [(n, 1) for n in range(4, 11)] + [(4, 0.5), (6, 0.5)]


class TestAvgEntropyRegistry:
    @pytest.fixture
    def registry(self):
        return AvgEntropyRegistry(verbose=True)

    @pytest.fixture
    def sample_formulas(self, tmp_path):
        payload = {
            "description": "toy table",
            "formulas": [{
                "n_qubits": 4, "ising_strength": "1", "source": "closed-form", "denominator": 8,
                "terms": [
                    {"coef": 2, "theta": [], "sin_pow": 0, "cos_pow": 0, "phi": None},
                    {"coef": 1, "theta": [[[1, 0], [1, 2]]], "sin_pow": 0, "cos_pow": 0, "phi": ["cos", 2]},
                ],
                "interval": [0.0, 0.5],
            }],
        }
        path = tmp_path / 'formulas.json'
        path.write_bytes(orjson.dumps(payload))
        return path

    def test_load_packaged(self, registry):
        pairs = registry.pairs()
        assert len(pairs) == 11
        assert pairs[0] == (4, Fraction(1))
        assert (10, Fraction(1, 2)) in pairs

    def test_sources(self, registry):
        assert registry.get(6, 1).source == 'closed-form'
        assert registry.get(8, "1/2").source == 'numeric'
        with pytest.raises(UnsupportedModelError):
            registry.get(8, 0.5).closed_form(1.0, 0.0)

    @pytest.mark.parametrize("n_qubits,j", [(3, 1), (11, 1), (5, 0.5), (4, 0.3)])
    def test_unsupported(self, registry, n_qubits, j):
        with pytest.raises(UnsupportedModelError):
            registry.get(n_qubits, j)

    def test_ising_key(self):
        assert ising_key(0.5) == Fraction(1, 2)
        assert ising_key("1/2") == Fraction(1, 2)
        assert ising_key(1.0) == Fraction(1)
        assert ising_key(0.37) == Fraction(0.37)

    @pytest.mark.parametrize("n_qubits,j,expected", [
        (4, 1, 0.25), (6, 1, 0.25), (8, 1, 0.25), (10, 1, 0.25),
        (5, 1, 1 / 3), (7, 1, 1 / 3), (9, 1, 1 / 3),
        (4, 0.5, 0.375), (6, 0.5, 47 / 128),
    ])
    def test_pole_values(self, registry, n_qubits, j, expected):
        assert registry.evaluate(n_qubits, j, 0.0, 0.0) == pytest.approx(expected, abs=1e-12)

    def test_known_values(self, registry):
        assert registry.evaluate(4, 1, np.pi / 4, 0.0) == pytest.approx(0.234375, abs=1e-12)
        assert registry.evaluate(4, 0.5, np.pi / 2, 0.0) == pytest.approx(0.375, abs=1e-12)

    @pytest.mark.parametrize("n_qubits,j", CLOSED_PAIRS)
    def test_interval(self, registry, n_qubits, j):
        """the tabulated range is the min and max over the 101x101 grid of initial states"""
        entry = registry.get(n_qubits, j)
        theta, phi = np.meshgrid(np.linspace(0, np.pi, 101), np.linspace(-np.pi, np.pi, 101))
        values = entry.closed_form(theta, phi)
        low, high = entry.interval
        assert abs(values.min() - low) < 1e-3
        assert abs(values.max() - high) < 1e-3
        assert np.all(values <= 0.5)

    @pytest.mark.slow
    @pytest.mark.parametrize("n_qubits", [8, 10])
    def test_numeric_interval(self, registry, n_qubits):
        entry = registry.get(n_qubits, 0.5)
        rows = run_tasks(grid_tasks(SweepSpec((n_qubits,), (0.5,))), workers=2)
        values = np.array([row.avg_s_lin for row in rows])
        low, high = entry.interval
        assert abs(values.min() - low) < 1e-3
        assert abs(values.max() - high) < 1e-3

    def test_held_transcription(self, registry):
        """the N=10 J=1/2 term table agrees at the pole but not at |pi/2, pi/2>, so the entry stays numeric"""
        entry = registry.get(10, 0.5)
        assert entry.source == 'numeric'
        assert entry.transcribed(0.0, 0.0) == pytest.approx(767 / 2048, abs=1e-12)
        numeric = numeric_avg_linear_entropy(10, 0.5, np.pi / 2, np.pi / 2)
        assert numeric == pytest.approx(383 / 1024, abs=1e-4)
        assert abs(entry.transcribed(np.pi / 2, np.pi / 2) - numeric) > 0.01
        with pytest.raises(UnsupportedModelError):
            registry.get(8, 0.5).transcribed(1.0, 0.0)

    def test_transcription_deviation_logged(self, registry, caplog):
        with caplog.at_level(logging.WARNING, logger='symfloq.harness.validate'):
            deviation = transcription_deviation(registry.get(10, 0.5))
        assert deviation > 0.01
        assert "transcribed formula is off" in caplog.text

    def test_concurrence_maximum_decreases(self, registry):
        """at J=1/2 the largest averaged concurrence falls strictly with even N"""
        maxima = [registry.get(n, 0.5).extrema['conc_max'].value for n in (4, 6, 8, 10)]
        assert all(a > b for a, b in zip(maxima, maxima[1:]))
        assert maxima == pytest.approx([0.1406, 0.0668, 0.0150, 0.0116], abs=1e-4)

    @pytest.mark.parametrize("n_qubits,j", CLOSED_PAIRS)
    def test_closed_form_matches_numeric(self, registry, n_qubits, j):
        for theta, phi in [(0.3, 0.2), (1.2, -2.5), (2.7, 1.9)]:
            closed = registry.evaluate(n_qubits, j, theta, phi)
            assert closed == pytest.approx(numeric_avg_linear_entropy(n_qubits, float(j), theta, phi), abs=1e-9)

    def test_numeric_warns_once(self, registry, caplog):
        with caplog.at_level(logging.WARNING, logger='symfloq.analytic.registry'):
            first = registry.evaluate(8, 0.5, 1.0, 0.3)
            second = registry.evaluate(8, 0.5, 1.0, 0.3)
        assert first == second
        assert 0.0 <= first <= 0.5
        assert len([r for r in caplog.records if r.levelno == logging.WARNING]) == 1

    def test_custom_path(self, sample_formulas):
        registry = AvgEntropyRegistry(formulas_path=sample_formulas)
        assert registry.pairs() == [(4, Fraction(1))]
        # (2 + (1 + cos 2t) cos 2p) / 8 at t = p = 0
        assert registry.evaluate(4, 1.0, 0.0, 0.0) == pytest.approx(0.5)
        assert registry.evaluate(4, 1.0, np.pi / 2, 0.0) == pytest.approx(0.25)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"formulas": [{"n_qubits": 4')
        with pytest.raises(ValueError, match="error loading formulas"):
            AvgEntropyRegistry(formulas_path=path)

    def test_missing_denominator(self, tmp_path):
        path = tmp_path / 'nodenominator.json'
        path.write_bytes(orjson.dumps({"formulas": [{"n_qubits": 4, "ising_strength": "1", "terms": [],
                                                     "interval": [0, 0.5]}]}))
        with pytest.raises(ValueError):
            AvgEntropyRegistry(formulas_path=path)

    def test_module_helper(self):
        assert closed_avg_linear_entropy(4, 1, 0.0, 0.0) == pytest.approx(0.25)
        with pytest.raises(InvalidParamsError):
            closed_avg_linear_entropy(4, 1, float('nan'), 0.0)


class TestExtrema:
    @pytest.fixture(scope='class')
    def registry(self):
        return AvgEntropyRegistry()

    def _check(self, registry, n_qubits, j):
        entry = registry.get(n_qubits, j)
        for label, state in entry.extrema.items():
            row = evaluate_point(PointTask(n_qubits, float(j), np.pi / 4, state.theta0, state.phi0))
            value = row.avg_conc if label.startswith('conc') else row.avg_s_lin
            assert value == pytest.approx(state.value, abs=1e-3), label

    @pytest.mark.parametrize("n_qubits,j", CLOSED_PAIRS)
    def test_tabulated_extrema(self, registry, n_qubits, j):
        self._check(registry, n_qubits, j)

    @pytest.mark.slow
    @pytest.mark.parametrize("n_qubits", [8, 10])
    def test_numeric_extrema(self, registry, n_qubits):
        self._check(registry, n_qubits, 0.5)

    @pytest.mark.parametrize("n_qubits,label,expected,printed_sign", [
        (4, 'conc_min', 0.0726645, 0.10227),
        (6, 'conc_max', 0.0668075, 0.06293),
    ])
    def test_mirrored_concurrence_states(self, registry, n_qubits, label, expected, printed_sign):
        """the J=1/2 concurrence extremes sit at the mirrored azimuth; the unmirrored state is another value"""
        state = registry.get(n_qubits, 0.5).extrema[label]
        for phi0, value in ((state.phi0, expected), (-state.phi0, printed_sign)):
            row = evaluate_point(PointTask(n_qubits, 0.5, np.pi / 4, state.theta0, phi0))
            assert row.avg_conc == pytest.approx(value, abs=1e-3)
