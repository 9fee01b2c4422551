"""Quick physics invariants run by the `selftest` subcommand."""
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from loguru import logger as lg

from cavity_swap.analytic import propagate_fock_state, swap_propagator, epr_target_state
from cavity_swap.common import SimulationError
from cavity_swap.constants import DEFAULT_B, DEFAULT_FOCK_CUTOFF, Scenario, EvolutionModel, HERMITIAN_TOL, \
    TRACE_TOL, POSITIVITY_TOL
from cavity_swap.dynamics import IntegratorOptions, evolve_lindblad
from cavity_swap.harness.scenarios import scenario_initial_state
from cavity_swap.hilbert import build_space, commutator, identity, adjoint, fock_state, QuantumState, \
    total_excitation_op
from cavity_swap.metrics import uhlmann_fidelity
from cavity_swap.model import DecoherenceConfig, derive_paper_parameters, effective_hamiltonians, \
    rotating_frame_hamiltonian


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_invariant_suite(b: float = DEFAULT_B, fock_cutoff: int = DEFAULT_FOCK_CUTOFF) -> List[CheckResult]:
    config = derive_paper_parameters(b)
    layout = build_space(2, fock_cutoff)
    decoherence = DecoherenceConfig.reference(2)
    short = IntegratorOptions()
    t_short = config.t_swap / 20

    def effective_commute() -> Tuple[bool, str]:
        h0, hi = effective_hamiltonians(config, layout)
        scale = np.linalg.norm(h0) * np.linalg.norm(hi)
        residual = np.linalg.norm(commutator(h0, hi)) / scale
        return residual < 1e-12, f"|[H0, HI]| / (|H0| |HI|) = {residual:.2e}"

    def conserves_excitations() -> Tuple[bool, str]:
        residual = np.linalg.norm(commutator(rotating_frame_hamiltonian(config, layout), total_excitation_op(layout)))
        return residual < 1e-6 * config.delta[0], f"|[H_R, N_tot]| = {residual:.2e} rad/s"

    def swap_unitary() -> Tuple[bool, str]:
        propagator = swap_propagator(config, layout, config.t_swap)
        residual = np.max(np.abs(adjoint(propagator) @ propagator - identity(layout)))
        return residual < 1e-10, f"max |U^dagger U - I| = {residual:.2e}"

    def closed_form_matches() -> Tuple[bool, str]:
        t = config.t_swap / 3
        occupations = [1, 1, 0, 0]
        exact = swap_propagator(config, layout, t) @ fock_state(layout, occupations).data
        residual = np.max(np.abs(exact - propagate_fock_state(layout, config, occupations, t)))
        return residual < 1e-10, f"max amplitude difference {residual:.2e}"

    def lindblad_sanity() -> Tuple[bool, str]:
        initial = scenario_initial_state(Scenario.III, layout).state
        trajectory = evolve_lindblad(config, decoherence, initial, t_short, short, layout, EvolutionModel.FULL)
        passed = (trajectory.max_trace_error <= TRACE_TOL and trajectory.max_hermiticity_error <= HERMITIAN_TOL
                  and trajectory.min_eig >= -POSITIVITY_TOL)
        return passed, (f"trace error {trajectory.max_trace_error:.2e}, hermiticity "
                        f"{trajectory.max_hermiticity_error:.2e}, min eig {trajectory.min_eig:.2e}")

    def lindblad_linear() -> Tuple[bool, str]:
        first = scenario_initial_state(Scenario.I, layout).state.density_matrix()
        second = scenario_initial_state(Scenario.III, layout).state.density_matrix()
        mixed = QuantumState(0.5 * (first + second))
        outputs = [evolve_lindblad(config, decoherence, QuantumState(rho), t_short, short, layout,
                                   EvolutionModel.EFFECTIVE).final_state.data
                   for rho in (first, second, mixed.data)]
        residual = np.max(np.abs(outputs[2] - 0.5 * (outputs[0] + outputs[1])))
        return residual < 1e-9, f"max deviation from linearity {residual:.2e}"

    def epr_under_swap() -> Tuple[bool, str]:
        initial = scenario_initial_state(Scenario.EPR_INPUT, layout).state
        evolved = QuantumState(swap_propagator(config, layout, config.t_epr) @ initial.data)
        fidelity = uhlmann_fidelity(epr_target_state(layout, config), evolved).raw
        return fidelity > 1 - 1e-9, f"fidelity to the EPR target {fidelity:.12f}"

    checks: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
        ('effective Hamiltonians commute', effective_commute),
        ('rotating-frame Hamiltonian conserves N_tot', conserves_excitations),
        ('swap propagator is unitary', swap_unitary),
        ('closed-form Fock map matches expm', closed_form_matches),
        ('short Lindblad run keeps trace, hermiticity and positivity', lindblad_sanity),
        ('Lindblad map is linear', lindblad_linear),
        ('EPR pairs under He', epr_under_swap),
    ]
    results = []
    lg.info(f"Starting invariant suite at b={b:g}, d={fock_cutoff}")
    for name, check in checks:
        try:
            passed, detail = check()
        except SimulationError as e:
            passed, detail = False, f"raised {type(e).__name__}: {e.message}"
        results.append(CheckResult(name, bool(passed), detail))
        lg.debug(f"{name}: {'pass' if passed else 'fail'} ({detail})")
    lg.info(f"Finished invariant suite: {sum(r.passed for r in results)}/{len(results)} passed")
    return results
