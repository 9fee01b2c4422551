from typing import Callable, List, Tuple

import numpy as np

from cavity_swap.common import InvalidConfiguration
from cavity_swap.constants import EvolutionModel
from cavity_swap.hilbert import SystemLayout, Operator, annihilation_op, number_op, qubit_ops, identity, adjoint
from cavity_swap.model.protocol import ProtocolConfig


def _check_layout(config: ProtocolConfig, layout: SystemLayout) -> None:
    if layout.n_pairs != config.n_pairs:
        raise InvalidConfiguration(f"Layout has {layout.n_pairs} pairs but the configuration has {config.n_pairs}")


def _coupling_blocks(config: ProtocolConfig, layout: SystemLayout) -> List[Operator]:
    """X_j = (g_j a_j + mu_j b_j) S+ for every pair; H(t) = sum_j e^{i Delta_j t} X_j + h.c."""
    s_plus = qubit_ops(layout).s_plus
    blocks = []
    for j in range(1, config.n_pairs + 1):
        a_j = annihilation_op(layout, layout.a_mode(j))
        b_j = annihilation_op(layout, layout.b_mode(j))
        blocks.append((config.g[j - 1] * a_j + config.mu[j - 1] * b_j) @ s_plus)
    return blocks


def time_dependent_hamiltonian(config: ProtocolConfig, layout: SystemLayout) -> Callable[[float], Operator]:
    _check_layout(config, layout)
    blocks = _coupling_blocks(config, layout)
    detunings = np.asarray(config.delta)

    def hamiltonian_at(t: float) -> Operator:
        raising = sum(np.exp(1j * detuning * t) * block for detuning, block in zip(detunings, blocks))
        return raising + adjoint(raising)

    return hamiltonian_at


def full_hamiltonian_at(config: ProtocolConfig, layout: SystemLayout, t: float) -> Operator:
    return time_dependent_hamiltonian(config, layout)(t)


def _pair_number_ops(layout: SystemLayout, j: int) -> Tuple[Operator, Operator]:
    return number_op(layout, layout.a_mode(j)), number_op(layout, layout.b_mode(j))


def rotating_frame_hamiltonian(config: ProtocolConfig, layout: SystemLayout) -> Operator:
    """Time-independent H_R = -sum_j Delta_j (n_aj + n_bj) + sum_j (X_j + h.c.)."""
    _check_layout(config, layout)
    raising = sum(_coupling_blocks(config, layout))
    free = np.zeros((layout.dim, layout.dim), dtype=complex)
    for j in range(1, config.n_pairs + 1):
        n_a, n_b = _pair_number_ops(layout, j)
        free -= config.delta[j - 1] * (n_a + n_b)
    return free + (raising + adjoint(raising))


def _hopping(layout: SystemLayout, j: int) -> Operator:
    """a_j b_j^dagger."""
    return annihilation_op(layout, layout.a_mode(j)) @ adjoint(annihilation_op(layout, layout.b_mode(j)))


def effective_hamiltonians(config: ProtocolConfig, layout: SystemLayout) -> Tuple[Operator, Operator]:
    """
    Dispersive H0 (ac-Stark shifts) and HI (qubit-state-dependent beam splitter).
    In the |e> sector a a^dagger is taken as n + 1 so H0 keeps commuting with HI at the
    truncation edge.
    """
    _check_layout(config, layout)
    qubit = qubit_ops(layout)
    eye = identity(layout)
    h0 = np.zeros((layout.dim, layout.dim), dtype=complex)
    sector_sign = qubit.proj_e - qubit.proj_g
    hopping = np.zeros((layout.dim, layout.dim), dtype=complex)
    for j in range(1, config.n_pairs + 1):
        n_a, n_b = _pair_number_ops(layout, j)
        stark_a, stark_b = config.stark_a[j - 1], config.stark_b[j - 1]
        h0 += (stark_a * (n_a + eye) + stark_b * (n_b + eye)) @ qubit.proj_e
        h0 -= (stark_a * n_a + stark_b * n_b) @ qubit.proj_g
        hopping += config.pair_lambdas[j - 1] * (_hopping(layout, j) @ sector_sign)
    return h0, hopping + adjoint(hopping)


def swap_hamiltonian(config: ProtocolConfig, layout: SystemLayout) -> Operator:
    """He = -sum_j lambda_j (a_j b_j^dagger + a_j^dagger b_j), identity on the qubit."""
    _check_layout(config, layout)
    hopping = sum(lam * _hopping(layout, j) for j, lam in enumerate(config.pair_lambdas, start=1))
    return -(hopping + adjoint(hopping))


def generator_for(config: ProtocolConfig, layout: SystemLayout, model: EvolutionModel) -> Operator:
    if EvolutionModel(model) == EvolutionModel.FULL:
        return rotating_frame_hamiltonian(config, layout)
    h0, hi = effective_hamiltonians(config, layout)
    return h0 + hi
