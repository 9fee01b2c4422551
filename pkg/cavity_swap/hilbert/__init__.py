from .space import SystemLayout, QuantumState, QubitOperators, Operator, build_space, annihilation_op, creation_op, \
    number_op, total_excitation_op, total_excitations, basis_occupations, basis_index, qubit_ops, fock_state, identity, \
    tensor, adjoint, matmul, commutator, expm, partial_trace, single_mode_lowering, excited_mask
