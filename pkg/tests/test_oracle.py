import numpy as np
import pytest

from symfloq.dynamics.entangle import concurrence, entanglement_series, linear_entropy
from symfloq.dynamics.floquet import FloquetParams
from symfloq.dynamics.symbasis import (
    BasisMap,
    CoherentParams,
    DickeAmplitudes,
    PhiAmplitudes,
    coherent_to_dicke,
    phi_to_dicke,
)
from symfloq.errors import InvalidParamsError
from symfloq.oracle.brute import (
    FullState,
    brute_coherent,
    brute_evolve,
    brute_parity,
    brute_rdm,
    brute_series,
    brute_step,
    crosscheck,
    embed_dicke,
    project_dicke,
    project_dicke_rows,
)

QUARTER = np.pi / 4


class TestFullState:
    def test_poles(self):
        up = brute_coherent(CoherentParams(4, 0.0, 0.7))
        assert up.amps[0] == pytest.approx(1.0)
        down = brute_coherent(CoherentParams(4, np.pi, 0.0))
        assert abs(down.amps[-1]) == pytest.approx(1.0)

    def test_uniform(self):
        s = brute_coherent(CoherentParams(3, np.pi / 2, 0.0))
        np.testing.assert_allclose(s.amps, np.full(8, 1 / np.sqrt(8)), atol=1e-15)

    def test_too_large(self):
        with pytest.raises(InvalidParamsError):
            brute_coherent(CoherentParams(13, 1.0, 0.0))

    def test_norm_checked(self):
        with pytest.raises(ValueError):
            FullState(2, [1.0, 1.0, 0.0, 0.0])


class TestStep:
    def test_identity(self):
        s = brute_coherent(CoherentParams(3, 1.1, 0.4))
        np.testing.assert_allclose(brute_step(s, 0.0, 0.0).amps, s.amps, atol=1e-15)

    def test_single_qubit_rotation(self):
        s = brute_step(FullState(1, [1.0, 0.0]), 0.8, QUARTER)
        np.testing.assert_allclose(s.amps, [np.cos(QUARTER), np.sin(QUARTER)], atol=1e-15)

    def test_eight_steps_return(self):
        rows = brute_evolve(brute_coherent(CoherentParams(4, 0.0, 0.0)), 1.0, QUARTER, 8)
        np.testing.assert_allclose(rows[8], rows[0], atol=1e-10)

    def test_norm_drift(self):
        rows = brute_evolve(brute_coherent(CoherentParams(8, 1.3, 0.2)), 0.71, 0.9, 1000)
        np.testing.assert_allclose(np.sum(np.abs(rows) ** 2, axis=1), 1.0, atol=1e-11)

    def test_stays_symmetric(self):
        rows = brute_evolve(brute_coherent(CoherentParams(6, 2.0, -1.0)), 0.37, 1.1, 100)
        _, leftover = project_dicke_rows(rows, 6)
        assert np.max(leftover) < 1e-12

    def test_negative_steps(self):
        with pytest.raises(InvalidParamsError):
            brute_evolve(brute_coherent(CoherentParams(2, 1.0, 0.0)), 1.0, QUARTER, -1)


class TestPartialTrace:
    def test_product_state_pure(self):
        r = brute_rdm(brute_coherent(CoherentParams(5, 0.9, 0.3)), [0])
        assert linear_entropy(r) == pytest.approx(0.0, abs=1e-12)
        assert r.population == pytest.approx(np.cos(0.45) ** 2)

    def test_bell_pair(self):
        r = brute_rdm(FullState(2, np.array([0, 1, 1, 0]) / np.sqrt(2)), [0, 1])
        bell = np.zeros((4, 4))
        bell[1:3, 1:3] = 0.5
        np.testing.assert_allclose(r.matrix, bell, atol=1e-15)
        assert concurrence(r) == pytest.approx(1.0)

    def test_bit_order(self):
        # index 1 sets qubit 0 only
        s = FullState(4, np.eye(16)[1])
        assert brute_rdm(s, [0]).population == pytest.approx(0.0)
        assert brute_rdm(s, [3]).population == pytest.approx(1.0)

    def test_symmetric_state_any_qubit(self):
        rows = brute_evolve(brute_coherent(CoherentParams(4, 2 * np.pi / 3, -np.pi / 12)), 1.0, QUARTER, 3)
        s = FullState(4, rows[3])
        np.testing.assert_allclose(brute_rdm(s, [0]).matrix, brute_rdm(s, [3]).matrix, atol=1e-12)
        np.testing.assert_allclose(brute_rdm(s, [0, 1]).matrix, brute_rdm(s, [2, 3]).matrix, atol=1e-12)

    @pytest.mark.parametrize("keep", [[], [0, 0], [4], [0, 1, 2]])
    def test_bad_keep(self, keep):
        with pytest.raises(InvalidParamsError):
            brute_rdm(brute_coherent(CoherentParams(4, 1.0, 0.0)), keep)


class TestSymmetricSector:
    def test_embed_dicke(self):
        s = embed_dicke(DickeAmplitudes(2, [0.0, 1.0, 0.0]))
        np.testing.assert_allclose(s.amps, [0, 1 / np.sqrt(2), 1 / np.sqrt(2), 0], atol=1e-15)

    def test_project_leftover(self):
        amps, leftover = project_dicke(FullState(2, [0.0, 1.0, 0.0, 0.0]))
        np.testing.assert_allclose(amps, [0, 1 / np.sqrt(2), 0], atol=1e-15)
        assert leftover == pytest.approx(0.5)

    def test_coherent_matches_expansion(self):
        p = CoherentParams(4, 2 * np.pi / 3, -np.pi / 12)
        np.testing.assert_allclose(embed_dicke(coherent_to_dicke(p)).amps, brute_coherent(p).amps, atol=1e-12)

    @pytest.mark.parametrize("n_qubits", [2, 4, 5, 8])
    def test_parity_eigenstates(self, n_qubits):
        m = BasisMap.for_qubits(n_qubits)
        for index in range(n_qubits + 1):
            phi = PhiAmplitudes.from_vector(n_qubits, np.eye(n_qubits + 1)[index])
            state = embed_dicke(phi_to_dicke(phi, m))
            sign = 1 if index < m.split else -1
            np.testing.assert_allclose(brute_parity(state).amps, sign * state.amps, atol=1e-12)


class TestCrosscheck:
    @pytest.mark.parametrize("n_qubits,j,tau,theta0,phi0", [
        (6, 1.0, QUARTER, 3.0, -2.0),
        (9, 0.5, QUARTER, np.pi / 8, np.pi / 8),
        (4, 0.37, 1.1, 1.9, 0.8),
    ])
    def test_passes(self, n_qubits, j, tau, theta0, phi0):
        report = crosscheck(CoherentParams(n_qubits, theta0, phi0), FloquetParams(n_qubits, j, tau), 30)
        assert report.passed, report.worst
        assert report.to_dict()['steps'] == 30

    def test_series_matches(self):
        p = CoherentParams.from_bloch(5, 8 * np.pi / 5, -4 * np.pi / 5)
        f = FloquetParams(5, 1.0, QUARTER)
        brute = brute_series(p, f, 20)
        sector = entanglement_series(p, f, 20, detect_period=False)
        np.testing.assert_allclose(brute.measures(), sector.measures(), atol=1e-10)

    def test_mismatched_sizes(self):
        with pytest.raises(InvalidParamsError):
            crosscheck(CoherentParams(4, 1.0, 0.0), FloquetParams(5, 1.0, QUARTER), 3)
