import math
import unittest

import numpy as np

from cavity_swap.common import DimensionMismatch, InvalidState
from cavity_swap.constants import QubitLevel, Scenario
from cavity_swap.harness import scenario_initial_state
from cavity_swap.hilbert import build_space, fock_state, QuantumState, adjoint
from cavity_swap.metrics import uhlmann_fidelity, purity, excitation_expectation, qubit_e_population, \
    mode_populations, pair_marginal, pair_fidelities

layout = build_space(2, 3)


def random_density_matrix(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = ginibre @ adjoint(ginibre)
    return rho / np.trace(rho)


def random_unitary(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


class FidelityTest(unittest.TestCase):

    def test_identical_and_orthogonal(self):
        psi = fock_state(layout, [1, 0, 0, 1])
        self.assertAlmostEqual(uhlmann_fidelity(psi, psi).value, 1.0, places=12, msg='F(psi, psi) != 1')
        self.assertAlmostEqual(uhlmann_fidelity(psi.to_mixed(), psi.to_mixed()).value, 1.0, places=6,
                               msg='F(rho, rho) != 1 for a pure density matrix')
        other = fock_state(layout, [0, 1, 0, 1])
        self.assertAlmostEqual(uhlmann_fidelity(psi, other).value, 0.0, places=12, msg='orthogonal states overlap')
        self.assertAlmostEqual(uhlmann_fidelity(psi.to_mixed(), other.to_mixed()).value, 0.0, places=6,
                               msg='orthogonal density matrices overlap')

    def test_commuting_mixed_states(self):
        fidelity = uhlmann_fidelity(np.diag([2 / 3, 1 / 3]), np.diag([0.5, 0.5])).value
        expected = math.sqrt(1 / 3) + math.sqrt(1 / 6)
        self.assertAlmostEqual(fidelity, expected, places=10, msg=f'F = {fidelity}, expected {expected}')
        self.assertAlmostEqual(expected, 0.98560, places=5, msg='reference value drifted')

    def test_pure_shortcut_matches_general_formula(self):
        rng = np.random.default_rng(7)
        psi = rng.normal(size=6) + 1j * rng.normal(size=6)
        psi /= np.linalg.norm(psi)
        rho = random_density_matrix(6, 11)
        shortcut = uhlmann_fidelity(psi, rho).raw
        general = uhlmann_fidelity(np.outer(psi, psi.conj()), rho).raw
        self.assertAlmostEqual(shortcut, general, delta=1e-10, msg='pure-state shortcut disagrees')
        self.assertAlmostEqual(uhlmann_fidelity(rho, psi).raw, shortcut, delta=1e-12, msg='argument order matters')

    def test_symmetry_and_unitary_invariance(self):
        rho, sigma = random_density_matrix(5, 1), random_density_matrix(5, 2)
        u = random_unitary(5, 3)
        forward = uhlmann_fidelity(rho, sigma).raw
        self.assertAlmostEqual(forward, uhlmann_fidelity(sigma, rho).raw, delta=1e-10, msg='F is not symmetric')
        rotated = uhlmann_fidelity(u @ rho @ adjoint(u), u @ sigma @ adjoint(u)).raw
        self.assertAlmostEqual(forward, rotated, delta=1e-10, msg='F is not unitarily invariant')
        self.assertTrue(0.0 < forward < 1.0, f'F = {forward} outside (0, 1)')

    def test_rejects_bad_inputs(self):
        with self.assertRaises(DimensionMismatch):
            uhlmann_fidelity(np.eye(2) / 2, np.eye(3) / 3)
        with self.assertRaises(InvalidState):
            uhlmann_fidelity(np.diag([1.5, -0.5]), np.eye(2) / 2)
        with self.assertRaises(InvalidState):
            uhlmann_fidelity(np.array([1.0, 1.0]), np.array([1.0, 1.0]))

    def test_pure_ideal_rejects_non_positive_actual(self):
        unphysical = np.diag([0.9, 0.3, -0.2]).astype(complex)
        for ideal, actual in ((np.array([1.0, 0.0, 0.0]), unphysical), (unphysical, np.array([1.0, 0.0, 0.0]))):
            with self.assertRaises(InvalidState):
                uhlmann_fidelity(ideal, actual)
        with self.assertRaises(InvalidState):
            uhlmann_fidelity(np.diag([1.0, 0.0, 0.0]), unphysical)

    def test_float_conversion_clips(self):
        value = uhlmann_fidelity(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        self.assertTrue(0.0 <= float(value) <= 1.0, 'clipped value out of range')


class ObservableTest(unittest.TestCase):

    def test_purity(self):
        self.assertAlmostEqual(purity(fock_state(layout, [1, 0, 0, 0])), 1.0, places=12, msg='pure state purity != 1')
        self.assertAlmostEqual(purity(np.eye(4) / 4), 0.25, places=12, msg='maximally mixed purity != 1/d')

    def test_qubit_population(self):
        small = build_space(1, 2)
        ground = fock_state(small, [0, 0]).density_matrix()
        excited = fock_state(small, [0, 0], QubitLevel.E).density_matrix()
        mixed = QuantumState(0.5 * (ground + excited))
        self.assertAlmostEqual(qubit_e_population(mixed), 0.5, places=12, msg='qubit population != 1/2')
        self.assertAlmostEqual(excitation_expectation(mixed, small), 0.5, places=12, msg='qubit excitation not counted')

    def test_excitation_expectation(self):
        scenario_one = scenario_initial_state(Scenario.I, layout).state
        self.assertAlmostEqual(excitation_expectation(scenario_one, layout), 1.0, places=12,
                               msg='scenario (i) carries one photon on average')
        three = build_space(3, 2)
        epr_input = scenario_initial_state(Scenario.EPR_INPUT, three).state
        self.assertAlmostEqual(excitation_expectation(epr_input, three), 3.0, places=12,
                               msg='EPR input carries one photon per pair')

    def test_mode_populations(self):
        populations = mode_populations(fock_state(layout, [2, 0, 1, 0]), layout)
        self.assertTrue(populations == {'a1': 2.0, 'a2': 0.0, 'b1': 1.0, 'b2': 0.0}, f'populations {populations}')

    def test_pair_marginal(self):
        marginal = pair_marginal(fock_state(layout, [1, 0, 2, 0]), layout, 1)
        index = 1 * layout.fock_cutoff + 2
        self.assertTrue(marginal.shape == (9, 9), f'marginal shape {marginal.shape}')
        self.assertAlmostEqual(marginal[index, index].real, 1.0, places=12, msg='pair 1 is not |1,2>')

    def test_pair_fidelities(self):
        ideal = fock_state(layout, [1, 0, 0, 1])
        per_pair = pair_fidelities(ideal, ideal.to_mixed(), layout)
        self.assertTrue(sorted(per_pair) == [1, 2], 'expected one fidelity per pair')
        self.assertTrue(all(abs(f.value - 1.0) < 1e-6 for f in per_pair.values()), 'identical pairs differ')
        swapped = pair_fidelities(ideal, fock_state(layout, [0, 0, 1, 1]), layout)
        self.assertAlmostEqual(swapped[1].value, 0.0, places=6, msg='pair 1 should be orthogonal')
        self.assertAlmostEqual(swapped[2].value, 1.0, places=6, msg='pair 2 is unchanged')


if __name__ == '__main__':
    unittest.main()
