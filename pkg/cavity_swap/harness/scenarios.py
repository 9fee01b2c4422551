import math
from typing import Sequence

import numpy as np

from cavity_swap.analytic import ScenarioState, product_scenario
from cavity_swap.common import InvalidConfiguration
from cavity_swap.constants import Scenario
from cavity_swap.hilbert import SystemLayout

PAIR_SCENARIOS = (Scenario.I, Scenario.II, Scenario.III, Scenario.IV)


def set_ket(layout: SystemLayout, occupations: Sequence[int]) -> np.ndarray:
    """Fock ket on one set of N cavities, first cavity most significant."""
    ket = np.zeros(layout.fock_cutoff ** layout.n_pairs, dtype=complex)
    ket[np.ravel_multi_index(tuple(occupations), (layout.fock_cutoff,) * layout.n_pairs)] = 1.0
    return ket


def _projector(ket: np.ndarray) -> np.ndarray:
    return np.outer(ket, ket.conj())


def scenario_initial_state(name: Scenario, layout: SystemLayout) -> ScenarioState:
    name = Scenario(name)
    n = layout.n_pairs
    if name in PAIR_SCENARIOS and n != 2:
        raise InvalidConfiguration(f"Scenario {name.value} is defined for 2 pairs, the layout has {n}")
    vacuum = set_ket(layout, [0] * n)
    full = set_ket(layout, [1] * n)
    if name == Scenario.I:
        return product_scenario(layout, (vacuum + full) / math.sqrt(2), vacuum, name)
    if name == Scenario.II:
        return product_scenario(layout, (vacuum + full) / math.sqrt(2), (vacuum - full) / math.sqrt(2), name)
    if name == Scenario.III:
        mixture = 0.5 * (_projector(vacuum) + _projector(full))
        return product_scenario(layout, mixture, _projector(vacuum), name)
    if name == Scenario.IV:
        mixture_a = 0.5 * (_projector(vacuum) + _projector(full))
        mixture_b = 2.0 / 3.0 * _projector(vacuum) + 1.0 / 3.0 * _projector(full)
        return product_scenario(layout, mixture_a, mixture_b, name)
    if name == Scenario.EPR_INPUT:
        return product_scenario(layout, full, vacuum, name)
    if name == Scenario.GHZ:
        return product_scenario(layout, (vacuum + full) / math.sqrt(2), vacuum, name)
    if name == Scenario.W:
        w = sum(set_ket(layout, [1 if k == j else 0 for k in range(n)]) for j in range(n)) / math.sqrt(n)
        return product_scenario(layout, w, vacuum, name)
    raise InvalidConfiguration(f"Scenario {name.value} has no built-in initial state; use product_scenario")
