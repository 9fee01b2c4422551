from .maps import PhaseFactors, ScenarioState, phase_factors, beam_splitter_map, pair_fock_block, \
    propagate_fock_state, swap_propagator, product_scenario, in_ground_sector, ideal_swapped_state, epr_state_at, \
    epr_target_state
