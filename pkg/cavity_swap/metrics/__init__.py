from .measures import FidelityValue, uhlmann_fidelity, purity, excitation_expectation, qubit_e_population, \
    mode_populations, pair_marginal, pair_fidelities
