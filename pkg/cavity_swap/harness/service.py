import json
import math
import time
from dataclasses import dataclass, asdict
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
from loguru import logger as lg

from cavity_swap.analytic import ideal_swapped_state, epr_target_state
from cavity_swap.common import SimulationService, NumericalFailure, InvalidConfiguration, write_text_atomic, \
    ensure_writable
from cavity_swap.constants import CSV_COLUMNS, CSV_FLOAT_FORMAT, SCENARIO_ORDER, TRACE_TOL, POSITIVITY_TOL, \
    DEFAULT_MAX_WORKERS, Scenario, Frame, OutputFormat
from cavity_swap.dynamics import evolve_lindblad, frame_to_interaction, Trajectory
from cavity_swap.harness.config import SweepSpec
from cavity_swap.harness.scenarios import scenario_initial_state
from cavity_swap.hilbert import build_space, SystemLayout, QuantumState
from cavity_swap.metrics import uhlmann_fidelity, pair_fidelities
from cavity_swap.model import ProtocolConfig, ValidityReport, derive_protocol, check_validity


@dataclass(frozen=True)
class SweepRecord:
    b: float
    scenario: Scenario
    fidelity: float
    t_swap_ns: float
    trace_error: float
    min_eig: float
    qubit_e_pop_max: float
    wall_time_s: float
    raw_fidelity: float = math.nan

    @property
    def flagged(self) -> bool:
        clamped = not math.isnan(self.raw_fidelity) and abs(self.raw_fidelity - self.fidelity) > 1e-12
        return self.trace_error > TRACE_TOL or self.min_eig < -POSITIVITY_TOL or clamped

    def to_row(self) -> Dict[str, Any]:
        row = {column: getattr(self, column) for column in CSV_COLUMNS}
        row['scenario'] = self.scenario.value
        return row


@dataclass(frozen=True)
class EprRecord:
    n_pairs: int
    b: float
    t_ns: float
    t_epr_ns: float
    fidelity: float
    pair_fidelities: Tuple[float, ...]
    trace_error: float
    min_eig: float
    qubit_e_pop_max: float
    wall_time_s: float

    @property
    def flagged(self) -> bool:
        return self.trace_error > TRACE_TOL or self.min_eig < -POSITIVITY_TOL

    def to_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row['pair_fidelities'] = list(self.pair_fidelities)
        return row


Record = Union[SweepRecord, EprRecord]


def _interaction_picture(trajectory: Trajectory, t: float, config: ProtocolConfig,
                         layout: SystemLayout) -> QuantumState:
    final = trajectory.final_state
    if final.frame == Frame.LAB_ROTATING:
        return frame_to_interaction(final, t, config, layout)
    return final


def _integrate(config: ProtocolConfig, spec: SweepSpec, initial: QuantumState, t_final: float, layout: SystemLayout,
               context: str) -> Trajectory:
    try:
        return evolve_lindblad(config, spec.decoherence_config(layout.n_pairs), initial, t_final, spec.integrator,
                               layout, spec.model)
    except NumericalFailure as e:
        lg.error(f"Integration failed for {context}: {e.message}")
        raise e.annotate(context)


def run_swap_point(b: float, scenario: Scenario, spec: SweepSpec) -> SweepRecord:
    scenario = Scenario(scenario)
    description = f"swap point b={b:g}, scenario {scenario.value}"
    lg.info(f"Starting {description}")
    start = time.perf_counter()
    config = derive_protocol(b, spec.n_pairs, spec.delta_1, spec.delta_2)
    layout = build_space(spec.n_pairs, spec.fock_cutoff, spec.max_dimension)
    initial = scenario_initial_state(scenario, layout)
    target = ideal_swapped_state(initial, config, layout)
    trajectory = _integrate(config, spec, initial.state, config.t_swap, layout, f"b={b:g}, scenario={scenario.value}")
    fidelity = uhlmann_fidelity(target, _interaction_picture(trajectory, config.t_swap, config, layout))
    record = SweepRecord(b=float(b), scenario=scenario, fidelity=fidelity.value, t_swap_ns=config.t_swap * 1e9,
                         trace_error=trajectory.max_trace_error, min_eig=trajectory.min_eig,
                         qubit_e_pop_max=trajectory.max_qubit_e_population,
                         wall_time_s=time.perf_counter() - start, raw_fidelity=fidelity.raw)
    if record.flagged:
        lg.warning(f"Flagged {description}: trace error {record.trace_error:.3e}, min eig {record.min_eig:.3e}, "
                   f"raw fidelity {record.raw_fidelity:.12f}")
    lg.info(f"Finished {description}: fidelity {record.fidelity:.6f}")
    return record


def _swap_point_job(job: Tuple[float, Scenario], spec: SweepSpec) -> SweepRecord:
    b, scenario = job
    return run_swap_point(b, scenario, spec)


def sort_records(records: Sequence[SweepRecord]) -> List[SweepRecord]:
    return sorted(records, key=lambda r: (SCENARIO_ORDER[r.scenario], r.b))


def records_to_frame(records: Sequence[Record], index_keys: Optional[List[str]] = None) -> pd.DataFrame:
    rows = []
    for record in records:
        row = record.to_row()
        row['flagged'] = record.flagged
        rows.append(row)
    df = pd.DataFrame(rows)
    if index_keys and len(df) > 0:
        df = df.set_index(index_keys)
    return df


def write_records(records: Sequence[Record], file_path: str, output_format: OutputFormat = OutputFormat.CSV,
                  metadata: Optional[Dict[str, Any]] = None) -> None:
    output_format = OutputFormat(output_format)
    if output_format == OutputFormat.CSV:
        if any(not isinstance(r, SweepRecord) for r in records):
            raise InvalidConfiguration("CSV output holds sweep records only; use JSON for EPR results")
        df = records_to_frame(records)
        df = df.reindex(columns=CSV_COLUMNS)
        text = df.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    else:
        document = {'metadata': metadata or {}, 'rows': records_to_frame(records).to_dict(orient='records')}
        text = json.dumps(document, indent=2, default=str) + '\n'
    write_text_atomic(file_path, text)
    lg.info(f"Wrote {len(records)} records to {file_path}")


def format_validity_report(b: float, report: ValidityReport) -> str:
    lines = [f"Validity check at b = {b:g}: {report.verdict.value.upper()}",
             f"  large-detuning condition: {report.detuning_verdict.value}"]
    for j, (over_g, over_mu) in sorted(report.detuning_ratios.items()):
        lines.append(f"    pair {j}: Delta/g = {over_g:.2f}, Delta/mu = {over_mu:.2f}")
    lines.append(f"  cross-pair condition: {report.cross_verdict.value}")
    for (j, k), ratios in sorted(report.cross_ratios.items()):
        lines.append(f"    pairs {j},{k}: " + ", ".join(f"{r:.2f}" for r in ratios))
    lines.extend(f"  note: {note}" for note in report.notes)
    return "\n".join(lines)


class ProtocolExperimentService(SimulationService):

    def __init__(self, max_workers: int = DEFAULT_MAX_WORKERS):
        SimulationService.__init__(self, max_workers)

    def run_swap_point(self, b: float, scenario: Scenario, spec: SweepSpec) -> SweepRecord:
        return run_swap_point(b, scenario, spec)

    def run_fidelity_sweep_raw(self, spec: SweepSpec) -> List[SweepRecord]:
        jobs = [(b, scenario) for scenario in spec.scenarios for b in sorted(spec.b_values)]
        description = f"fidelity sweep over {len(spec.b_values)} b values and {len(spec.scenarios)} scenarios"
        if spec.output_path is not None:
            ensure_writable(spec.output_path)
        lg.info(f"Starting {description}")
        records = sort_records(SimulationService._process_parallel(jobs, _swap_point_job, self._get_max_workers(),
                                                                   spec=spec))
        if spec.output_path is not None:
            write_records(records, spec.output_path, spec.output_format, self._metadata(spec))
        lg.info(f"Finished {description}")
        return records

    def run_fidelity_sweep(self, spec: SweepSpec, index_keys: List[str] = None) -> pd.DataFrame:
        if index_keys is None:
            index_keys = ['scenario', 'b']
        return records_to_frame(self.run_fidelity_sweep_raw(spec), index_keys)

    def run_epr_generation(self, n_pairs: int, b: float, spec: SweepSpec, t_final: Optional[float] = None) -> EprRecord:
        if n_pairs < 1:
            raise InvalidConfiguration(f"n_pairs must be >= 1, got {n_pairs}")
        description = f"EPR generation N={n_pairs}, b={b:g}"
        lg.info(f"Starting {description}")
        start = time.perf_counter()
        config = derive_protocol(b, n_pairs, spec.delta_1, spec.delta_2)
        layout = build_space(n_pairs, spec.fock_cutoff, spec.max_dimension)
        initial = scenario_initial_state(Scenario.EPR_INPUT, layout)
        t = config.t_epr if t_final is None else t_final
        target = epr_target_state(layout, config)
        trajectory = _integrate(config, spec, initial.state, t, layout, f"b={b:g}, scenario=epr-input")
        final = _interaction_picture(trajectory, t, config, layout)
        fidelity = uhlmann_fidelity(target, final)
        per_pair = pair_fidelities(target, final, layout)
        record = EprRecord(n_pairs=n_pairs, b=float(b), t_ns=t * 1e9, t_epr_ns=config.t_epr * 1e9,
                           fidelity=fidelity.value, pair_fidelities=tuple(f.value for f in per_pair.values()),
                           trace_error=trajectory.max_trace_error, min_eig=trajectory.min_eig,
                           qubit_e_pop_max=trajectory.max_qubit_e_population,
                           wall_time_s=time.perf_counter() - start)
        if record.flagged:
            lg.warning(f"Flagged {description}: trace error {record.trace_error:.3e}, min eig {record.min_eig:.3e}")
        lg.info(f"Finished {description}: fidelity {record.fidelity:.6f}")
        return record

    def run_validity_check(self, b: float, spec: SweepSpec) -> ValidityReport:
        config = derive_protocol(b, spec.n_pairs, spec.delta_1, spec.delta_2)
        report = check_validity(config)
        lg.debug(format_validity_report(b, report))
        return report

    @staticmethod
    def _metadata(spec: SweepSpec) -> Dict[str, Any]:
        return {
            'n_pairs': spec.n_pairs,
            'fock_cutoff': spec.fock_cutoff,
            'model': spec.model.value,
            'decoherence_enabled': spec.decoherence_enabled,
            'sz_convention': spec.sz_convention.value,
            'integrator': spec.integrator.method.value,
            'dt': spec.integrator.dt,
        }
