from .protocol import ProtocolConfig, DecoherenceConfig, ValidityReport, derive_paper_parameters, derive_protocol, \
    check_validity, check_couplings
from .hamiltonians import full_hamiltonian_at, time_dependent_hamiltonian, rotating_frame_hamiltonian, \
    effective_hamiltonians, swap_hamiltonian, generator_for
