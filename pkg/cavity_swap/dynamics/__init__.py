from .solver import IntegratorOptions, Trajectory, evolve_schrodinger, evolve_lindblad, frame_to_interaction, \
    frame_phases, default_dt, infer_layout, collapse_operators, coherence_sectors, sector_liouvillian, liouvillian, \
    rk4_step_matrix
