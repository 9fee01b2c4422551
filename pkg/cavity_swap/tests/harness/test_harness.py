import json
import math
import os
import tempfile
import unittest
from unittest import mock

import numpy as np
import pandas as pd

from cavity_swap.analytic import ideal_swapped_state, swap_propagator
from cavity_swap.cli import main
from cavity_swap.common import InvalidConfiguration, OutputError, SimulationService, ensure_writable
from cavity_swap.constants import CSV_COLUMNS, DEFAULT_DELTA_1, Scenario, EvolutionModel, Verdict, OutputFormat, \
    SzConvention
from cavity_swap.harness import ProtocolExperimentService, SweepSpec, load_sweep_spec, spec_from_document, b_grid, \
    refine_grid, scenario_initial_state, records_to_frame, write_records, format_validity_report, run_invariant_suite
from cavity_swap.hilbert import build_space, partial_trace, QuantumState, adjoint
from cavity_swap.metrics import uhlmann_fidelity, purity, excitation_expectation
from cavity_swap.model import derive_paper_parameters

# Determine the directory of the current file
current_dir = os.path.dirname(__file__)
default_config_path = os.path.join(current_dir, "../../../protocol.json")

pes = ProtocolExperimentService(max_workers=1)
layout = build_space(2, 3)
ideal = SweepSpec(model=EvolutionModel.EFFECTIVE, decoherence_enabled=False, max_workers=1)


class ScenarioTest(unittest.TestCase):

    def test_scenario_four(self):
        state = scenario_initial_state(Scenario.IV, layout).state
        self.assertAlmostEqual(np.trace(state.data).real, 1.0, places=12, msg='scenario (iv) trace != 1')
        set_b = partial_trace(layout, state.data, [layout.b_mode(1), layout.b_mode(2)])
        self.assertAlmostEqual(purity(set_b), 5.0 / 9.0, places=12, msg='set b purity != (2/3)^2 + (1/3)^2')

    def test_pair_scenarios_need_two_pairs(self):
        with self.assertRaises(InvalidConfiguration):
            scenario_initial_state(Scenario.I, build_space(3, 2))
        with self.assertRaises(InvalidConfiguration):
            scenario_initial_state(Scenario.CUSTOM, layout)

    def test_ghz_and_w(self):
        three = build_space(3, 2)
        w = scenario_initial_state(Scenario.W, three).state
        ghz = scenario_initial_state(Scenario.GHZ, three).state
        self.assertAlmostEqual(excitation_expectation(w, three), 1.0, places=12, msg='W state carries one photon')
        self.assertAlmostEqual(excitation_expectation(ghz, three), 1.5, places=12, msg='GHZ state carries 3/2 photons')


class ConfigTest(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(InvalidConfiguration):
            SweepSpec(b_values=(0.5,))
        with self.assertRaises(InvalidConfiguration):
            SweepSpec(b_values=())
        with self.assertRaises(InvalidConfiguration):
            SweepSpec(scenarios=('v',))
        with self.assertRaises(InvalidConfiguration):
            SweepSpec(kappa_a=(1.0,)).decoherence_config()
        self.assertTrue(ideal.decoherence_config().is_closed, 'disabled decoherence must give zero rates')

    def test_document_units(self):
        spec = spec_from_document({
            'couplings': {'delta_1': 1.0, 'delta_2': {'value': 500, 'unit': 'MHz'}},
            'decoherence': {'kappa': {'value': 20, 'unit': 'us'}, 'gamma_phi': {'value': 0.2, 'unit': '1/us'}},
            'integrator': {'dt': {'value': 1, 'unit': 'ps'}},
            'sweep': {'b_min': 11, 'b_max': 31, 'b_steps': 11, 'scenarios': ['i', 'iii']},
        })
        self.assertAlmostEqual(spec.delta_1, DEFAULT_DELTA_1, delta=1e-3, msg='1 GHz is not 2 pi 1e9 rad/s')
        self.assertAlmostEqual(spec.delta_2, 0.5 * DEFAULT_DELTA_1, delta=1e-3, msg='500 MHz conversion is off')
        self.assertAlmostEqual(spec.kappa, 5e4, delta=1e-6, msg='20 us lifetime is not 5e4 1/s')
        self.assertAlmostEqual(spec.gamma_phi, 2e5, delta=1e-6, msg='0.2 1/us is not 2e5 1/s')
        self.assertAlmostEqual(spec.integrator.dt, 1e-12, delta=1e-24, msg='1 ps conversion is off')
        self.assertTrue(spec.b_values == tuple(float(b) for b in range(11, 32, 2)), f'b grid {spec.b_values}')
        self.assertTrue(spec.scenarios == (Scenario.I, Scenario.III), 'scenarios not parsed')

    def test_document_errors(self):
        with self.assertRaises(InvalidConfiguration):
            spec_from_document({'plots': {}})
        with self.assertRaises(InvalidConfiguration):
            spec_from_document({'sweep': {'b_min': 11}})
        with self.assertRaises(InvalidConfiguration):
            spec_from_document({'couplings': {'delta_1': {'value': 1, 'unit': 'THz'}}})
        with self.assertRaises(InvalidConfiguration):
            spec_from_document({'integrator': {'method': 'euler'}})

    def test_load(self):
        spec = load_sweep_spec(default_config_path)
        self.assertTrue(spec.scenarios == (Scenario.I, Scenario.II, Scenario.III, Scenario.IV), 'default scenarios')
        self.assertTrue(len(spec.b_values) == 11, 'default grid has 11 points')
        self.assertTrue(load_sweep_spec() == SweepSpec(), 'no file must give the defaults')
        with self.assertRaises(FileNotFoundError):
            load_sweep_spec(os.path.join(current_dir, "missing.json"))
        with tempfile.TemporaryDirectory() as directory:
            broken = os.path.join(directory, "broken.json")
            with open(broken, 'w') as file:
                file.write("{not json")
            with self.assertRaises(InvalidConfiguration):
                load_sweep_spec(broken)

    def test_grids(self):
        self.assertTrue(b_grid(11, 31, 3) == (11.0, 21.0, 31.0), 'b_grid endpoints are off')
        self.assertTrue(b_grid(21, 21, 1) == (21.0,), 'single-point grid')
        self.assertTrue(refine_grid([21.0, 11.0, 31.0]) == (11.0, 16.0, 21.0, 26.0, 31.0), 'midpoints missing')


class SwapPointTest(unittest.TestCase):

    def test_ideal_limit(self):
        for scenario in (Scenario.I, Scenario.III):
            record = pes.run_swap_point(21.0, scenario, ideal)
            self.assertTrue(record.fidelity >= 1 - 1e-7, f'{scenario.value}: fidelity {record.fidelity}')
            self.assertAlmostEqual(record.t_swap_ns, 110.25, places=9, msg='t_swap != 110.25 ns at b=21')

    def test_mixture_target_is_phase_blind(self):
        config = derive_paper_parameters(21.0)
        initial = scenario_initial_state(Scenario.III, layout).state
        target = ideal_swapped_state(initial, config, layout)
        propagator = swap_propagator(config, layout, config.t_swap)
        swapped = QuantumState(propagator @ initial.data @ adjoint(propagator))
        self.assertAlmostEqual(uhlmann_fidelity(target, swapped).raw, 1.0, places=6,
                               msg='Fock mixtures must not depend on the Stark phases')

    def test_sweep(self):
        spec = ideal.with_overrides(b_values=(31.0, 21.0), scenarios=(Scenario.III, Scenario.I))
        with tempfile.TemporaryDirectory() as directory:
            output = os.path.join(directory, "sweep.csv")
            records = pes.run_fidelity_sweep_raw(spec.with_overrides(output_path=output))
            with open(output, 'r') as file:
                header = file.readline().strip()
            df = pd.read_csv(output)
        self.assertTrue(header == ','.join(CSV_COLUMNS), f'CSV header {header}')
        self.assertTrue([(r.scenario, r.b) for r in records] ==
                        [(Scenario.I, 21.0), (Scenario.I, 31.0), (Scenario.III, 21.0), (Scenario.III, 31.0)],
                        'rows are not scenario-major with ascending b')
        self.assertTrue(list(df['scenario']) == ['i', 'i', 'iii', 'iii'], 'CSV rows out of order')
        indexed = pes.run_fidelity_sweep(spec)
        self.assertTrue(indexed.index.names == ['scenario', 'b'], f'index {indexed.index.names}')
        self.assertTrue('flagged' in indexed.columns, 'flagged column missing')

    def test_repeated_sweeps_write_identical_csv(self):
        spec = ideal.with_overrides(b_values=(21.0, 25.0), scenarios=(Scenario.II, Scenario.IV))
        contents = []
        with tempfile.TemporaryDirectory() as directory:
            for name in ("first.csv", "second.csv"):
                output = os.path.join(directory, name)
                pes.run_fidelity_sweep_raw(spec.with_overrides(output_path=output))
                with open(output, 'rb') as file:
                    contents.append(file.read())
        # wall_time_s is the last column and the only one allowed to differ
        first, second = ([line.rsplit(b',', 1)[0] for line in text.splitlines()] for text in contents)
        self.assertTrue(len(first) == 5, f'expected a header and four rows, got {len(first)} lines')
        self.assertTrue(first == second, 'two identical sweeps wrote different CSV bytes')

    def test_unwritable_output_fails_before_integration(self):
        spec = ideal.with_overrides(b_values=(21.0, 25.0, 31.0))
        with tempfile.TemporaryDirectory() as directory:
            blocker = os.path.join(directory, "blocker")
            with open(blocker, 'w') as file:
                file.write("")
            blocked = spec.with_overrides(output_path=os.path.join(blocker, "out.csv"))
            with mock.patch.object(SimulationService, '_process_parallel') as dispatch:
                with self.assertRaises(OutputError):
                    pes.run_fidelity_sweep_raw(blocked)
                code = main(['sweep', '--b', '21', '--model', 'effective', '--out', blocked.output_path, '-q'])
            self.assertTrue(not dispatch.called, 'jobs were dispatched before the output path was checked')
            self.assertTrue(code == 1, f'exit code {code}')
            with self.assertRaises(OutputError):
                ensure_writable(directory)

    def test_sz_convention_leaves_effective_fidelity_unchanged(self):
        noisy = SweepSpec(model=EvolutionModel.EFFECTIVE, max_workers=1)
        for scenario in (Scenario.III, Scenario.IV):
            unhalved = pes.run_swap_point(21.0, scenario, noisy)
            halved = pes.run_swap_point(21.0, scenario, noisy.with_overrides(sz_convention=SzConvention.HALVED))
            self.assertTrue(abs(unhalved.raw_fidelity - halved.raw_fidelity) <= 1e-10,
                            f'{scenario.value}: {unhalved.raw_fidelity} vs {halved.raw_fidelity}')
            self.assertTrue(unhalved.fidelity < 1 - 1e-3, f'{scenario.value}: decoherence had no effect')

    def test_records_to_frame(self):
        self.assertTrue(records_to_frame([], ['scenario', 'b']).empty, 'no records must give an empty frame')

    def test_output_errors(self):
        record = pes.run_swap_point(21.0, Scenario.III, ideal)
        epr = pes.run_epr_generation(1, 21.0, ideal, 0.0)
        with tempfile.TemporaryDirectory() as directory:
            blocker = os.path.join(directory, "blocker")
            with open(blocker, 'w') as file:
                file.write("")
            with self.assertRaises(OutputError):
                write_records([record], os.path.join(blocker, "out.csv"))
            with self.assertRaises(InvalidConfiguration):
                write_records([epr], os.path.join(directory, "epr.csv"))
            path = os.path.join(directory, "epr.json")
            write_records([epr], path, OutputFormat.JSON, {'n_pairs': 1})
            with open(path, 'r') as file:
                document = json.load(file)
        self.assertTrue(document['metadata'] == {'n_pairs': 1}, 'metadata not written')
        self.assertTrue(len(document['rows']) == 1, 'one EPR row expected')


class EprGenerationTest(unittest.TestCase):

    def test_closed_generation(self):
        record = pes.run_epr_generation(2, 21.0, ideal)
        self.assertTrue(record.fidelity >= 1 - 1e-7, f'EPR fidelity {record.fidelity}')
        self.assertAlmostEqual(record.t_epr_ns, 55.125, places=9, msg='t_epr != t_swap / 2')
        self.assertTrue(len(record.pair_fidelities) == 2, 'one fidelity per pair expected')
        self.assertTrue(all(f >= 1 - 1e-6 for f in record.pair_fidelities), 'pair fidelities below 1')

    def test_initial_overlap(self):
        record = pes.run_epr_generation(1, 21.0, ideal, 0.0)
        self.assertAlmostEqual(record.fidelity, math.sqrt(0.5), places=9, msg='t=0 overlap is not 1/sqrt(2)')
        with self.assertRaises(InvalidConfiguration):
            pes.run_epr_generation(0, 21.0, ideal)


class ValidityTest(unittest.TestCase):

    def test_report(self):
        report = pes.run_validity_check(21.0, ideal)
        self.assertTrue(report.verdict == Verdict.WARN, f'verdict {report.verdict}')
        text = format_validity_report(21.0, report)
        self.assertTrue(text.startswith('Validity check at b = 21: WARN'), text)
        self.assertTrue('pair 1: Delta/g = 21.00' in text, 'detuning ratio missing from the report')


class SelfTest(unittest.TestCase):

    def test_invariant_suite(self):
        results = run_invariant_suite()
        failed = [f'{r.name}: {r.detail}' for r in results if not r.passed]
        self.assertTrue(len(results) == 7, 'seven checks expected')
        self.assertTrue(not failed, f'failed checks: {failed}')


class CliTest(unittest.TestCase):

    def test_check(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "check.json")
            code = main(['check', '--b', '21', '--format', 'json', '--out', path, '-q'])
            with open(path, 'r') as file:
                document = json.load(file)
        self.assertTrue(code == 0, f'exit code {code}')
        self.assertTrue(document['verdict'] == 'warn', f'verdict {document["verdict"]}')
        self.assertTrue(document['b'] == 21.0, 'b missing from the report')

    def test_missing_config(self):
        code = main(['point', '--config', os.path.join(current_dir, "missing.json"), '-q'])
        self.assertTrue(code == 1, f'exit code {code}')

    def test_point(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "point.csv")
            code = main(['point', '--b', '21', '--scenario', 'i', '--no-dissipation', '--model', 'effective',
                         '--cutoff', '2', '--out', path, '-q'])
            df = pd.read_csv(path)
        self.assertTrue(code == 0, f'exit code {code}')
        self.assertTrue(list(df.columns) == CSV_COLUMNS, f'columns {list(df.columns)}')
        self.assertTrue(df['fidelity'].iloc[0] >= 1 - 1e-7, 'ideal point fidelity below 1')

    def test_scenario_needs_two_pairs(self):
        code = main(['point', '--n-pairs', '3', '--scenario', 'i', '--model', 'effective', '-q'])
        self.assertTrue(code == 1, f'exit code {code}')


if __name__ == '__main__':
    unittest.main()
