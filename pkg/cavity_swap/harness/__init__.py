from .scenarios import scenario_initial_state, set_ket, PAIR_SCENARIOS
from .config import SweepSpec, load_sweep_spec, spec_from_document, b_grid, refine_grid
from .service import SweepRecord, EprRecord, ProtocolExperimentService, run_swap_point, records_to_frame, \
    write_records, sort_records, format_validity_report
from .selftest import CheckResult, run_invariant_suite
