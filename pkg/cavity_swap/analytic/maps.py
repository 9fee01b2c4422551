"""
Closed-form propagation under the beam-splitter Hamiltonian He and the ideal targets of the
swap and EPR-generation protocols. Targets are built from exact matrix exponentials of the
dispersive Hamiltonians; the binomial Fock-space expansion of the mode map is kept as an
independent oracle.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger as lg

from cavity_swap.common import InvalidConfiguration, InvalidState
from cavity_swap.constants import Scenario, Frame, QubitLevel
from cavity_swap.hilbert import SystemLayout, QuantumState, basis_index, basis_occupations, expm, adjoint
from cavity_swap.model import ProtocolConfig, effective_hamiltonians, swap_hamiltonian


@dataclass(frozen=True)
class PhaseFactors:
    phi: Tuple[float, ...]
    theta: Tuple[float, ...]

    def to_dict(self) -> Dict[str, List[float]]:
        return {'phi': list(self.phi), 'theta': list(self.theta)}


def phase_factors(config: ProtocolConfig) -> PhaseFactors:
    """phi_k = 1/2 + (g_k^2/Delta_k)/(2 lambda), theta_j = 1/2 + (mu_j^2/Delta_j)/(2 lambda)."""
    lam = config.lam
    if not math.isfinite(lam) or lam <= 0:
        raise InvalidConfiguration(f"Phase factors diverge for lambda = {lam}")
    phi = tuple(0.5 + stark / (2.0 * lam) for stark in config.stark_a)
    theta = tuple(0.5 + stark / (2.0 * lam) for stark in config.stark_b)
    return PhaseFactors(phi, theta)


def beam_splitter_map(lam: float, t: float) -> np.ndarray:
    """
    Row 0 is the image of a^dagger, row 1 the image of b^dagger, in the (a^dagger, b^dagger) basis:
    a^dagger -> cos(lam t) a^dagger + i sin(lam t) b^dagger and symmetrically for b^dagger.
    """
    c, s = math.cos(lam * t), math.sin(lam * t)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=complex)


def _pair_column(mode_map: np.ndarray, n_a: int, n_b: int) -> Dict[Tuple[int, int], complex]:
    (m_aa, m_ab), (m_ba, m_bb) = mode_map
    column: Dict[Tuple[int, int], complex] = {}
    norm = math.sqrt(math.factorial(n_a) * math.factorial(n_b))
    for k in range(n_a + 1):
        for l in range(n_b + 1):
            p = k + l
            q = n_a + n_b - p
            amplitude = (math.comb(n_a, k) * math.comb(n_b, l) * m_aa ** k * m_ab ** (n_a - k)
                         * m_ba ** l * m_bb ** (n_b - l) * math.sqrt(math.factorial(p) * math.factorial(q)) / norm)
            column[(p, q)] = column.get((p, q), 0.0) + amplitude
    return column


def pair_fock_block(mode_map: np.ndarray, fock_cutoff: int) -> Tuple[np.ndarray, List[int]]:
    """
    Fock-basis matrix of a two-mode map on the pair states with n_a + n_b <= d - 1, the block
    where truncation is exact. Returns the block and the pair indices n_a * d + n_b it acts on.
    """
    states = [(n_a, n_b) for n_a in range(fock_cutoff) for n_b in range(fock_cutoff) if n_a + n_b < fock_cutoff]
    position = {state: index for index, state in enumerate(states)}
    block = np.zeros((len(states), len(states)), dtype=complex)
    for column_index, (n_a, n_b) in enumerate(states):
        for state, amplitude in _pair_column(mode_map, n_a, n_b).items():
            block[position[state], column_index] = amplitude
    return block, [n_a * fock_cutoff + n_b for n_a, n_b in states]


def propagate_fock_state(layout: SystemLayout, config: ProtocolConfig, occupations: Sequence[int],
                         t: float) -> np.ndarray:
    """exp(-i He t) applied to a Fock state with the qubit in |g>, from the closed-form map."""
    if len(occupations) != layout.n_modes:
        raise InvalidConfiguration(f"Expected {layout.n_modes} occupations, got {len(occupations)}")
    pair_columns = []
    for j, lam in enumerate(config.pair_lambdas, start=1):
        n_a, n_b = occupations[layout.a_mode(j)], occupations[layout.b_mode(j)]
        if n_a + n_b >= layout.fock_cutoff:
            raise InvalidConfiguration(f"Pair {j} holds {n_a + n_b} photons; the closed form is exact only "
                                       f"below the cutoff {layout.fock_cutoff}")
        pair_columns.append(list(_pair_column(beam_splitter_map(lam, t), n_a, n_b).items()))
    vector = np.zeros(layout.dim, dtype=complex)
    for outcome in itertools.product(*pair_columns):
        target = [0] * layout.n_modes
        amplitude = 1.0 + 0.0j
        for j, ((p, q), pair_amplitude) in enumerate(outcome, start=1):
            target[layout.a_mode(j)] = p
            target[layout.b_mode(j)] = q
            amplitude *= pair_amplitude
        vector[basis_index(layout, target)] += amplitude
    return vector


def swap_propagator(config: ProtocolConfig, layout: SystemLayout, t: float) -> np.ndarray:
    return expm(swap_hamiltonian(config, layout), -1j * t)


@dataclass(frozen=True)
class ScenarioState:
    name: Scenario
    state: QuantumState
    layout: SystemLayout

    def __post_init__(self):
        object.__setattr__(self, 'name', Scenario(self.name))
        if not in_ground_sector(self.layout, self.state):
            raise InvalidState(f"Scenario {self.name.value} must leave the qubit exactly in |g>")


def in_ground_sector(layout: SystemLayout, state: QuantumState) -> bool:
    excited = basis_occupations(layout)[:, layout.qubit_index] == 1
    if state.is_pure:
        return not np.any(state.data[excited])
    return not (np.any(state.data[excited, :]) or np.any(state.data[:, excited]))


def product_scenario(layout: SystemLayout, set_a: np.ndarray, set_b: np.ndarray,
                     name: Scenario = Scenario.CUSTOM) -> ScenarioState:
    """rho^a (x) rho^b (x) |g><g| from set states given as kets or density matrices on d^N levels."""
    set_dim = layout.fock_cutoff ** layout.n_pairs
    set_a, set_b = np.asarray(set_a, dtype=complex), np.asarray(set_b, dtype=complex)
    for label, part in (('a', set_a), ('b', set_b)):
        if part.shape[0] != set_dim:
            raise InvalidConfiguration(f"Set {label} state must act on {set_dim} levels, got shape {part.shape}")
    ground = np.array([1.0, 0.0], dtype=complex)
    if set_a.ndim == 1 and set_b.ndim == 1:
        state = QuantumState(np.kron(np.kron(set_a, set_b), ground))
    else:
        as_density = [np.outer(p, p.conj()) if p.ndim == 1 else p for p in (set_a, set_b)]
        state = QuantumState(np.kron(np.kron(as_density[0], as_density[1]), np.outer(ground, ground)))
    return ScenarioState(name, state, layout)


def ideal_swapped_state(initial: Union[ScenarioState, QuantumState], config: ProtocolConfig, layout: SystemLayout,
                        t: Optional[float] = None) -> QuantumState:
    """
    rho_id = U rho(0) U^dagger with U = exp(-i H0 t) exp(-i He t) on the |g> sector, t = pi/(2 lambda)
    by default. H0 and HI commute, so U is the exponential of H0 + HI.
    """
    state = initial.state if isinstance(initial, ScenarioState) else initial
    if not in_ground_sector(layout, state):
        raise InvalidState("The ideal swap is defined for initial states with the qubit in |g>")
    t_final = config.t_swap if t is None else t
    h0, hi = effective_hamiltonians(config, layout)
    propagator = expm(h0 + hi, -1j * t_final)
    phases = phase_factors(config)
    metadata = dict(phases.to_dict(), t_swap=t_final)
    lg.debug(f"Ideal swap target at t={t_final:.6e}s with phi={phases.phi}, theta={phases.theta}")
    if state.is_pure:
        return QuantumState(propagator @ state.data, Frame.INTERACTION, metadata)
    evolved = propagator @ state.data @ adjoint(propagator)
    return QuantumState(0.5 * (evolved + adjoint(evolved)), Frame.INTERACTION, metadata)


def epr_state_at(layout: SystemLayout, config: ProtocolConfig, t: float) -> QuantumState:
    """e^{i N lambda t} prod_j [cos(lambda t)|1>_aj|0>_bj + i sin(lambda t)|0>_aj|1>_bj], qubit in |g>."""
    if layout.n_pairs != config.n_pairs:
        raise InvalidConfiguration(f"Layout has {layout.n_pairs} pairs but the configuration has {config.n_pairs}")
    vector = np.zeros(layout.dim, dtype=complex)
    global_phase = np.exp(1j * config.n_pairs * config.lam * t)
    for choice in itertools.product((0, 1), repeat=config.n_pairs):
        occupations = [0] * layout.n_modes
        amplitude = global_phase
        for j, (moved, lam) in enumerate(zip(choice, config.pair_lambdas), start=1):
            if moved:
                occupations[layout.b_mode(j)] = 1
                amplitude *= 1j * math.sin(lam * t)
            else:
                occupations[layout.a_mode(j)] = 1
                amplitude *= math.cos(lam * t)
        vector[basis_index(layout, occupations, QubitLevel.G)] = amplitude
    return QuantumState(vector, Frame.INTERACTION, {'t': t})


def epr_target_state(layout: SystemLayout, config: ProtocolConfig) -> QuantumState:
    return epr_state_at(layout, config, config.t_epr)
