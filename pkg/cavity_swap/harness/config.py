"""
Experiment configuration: the SweepSpec dataclass and its JSON loader.

Frequencies in the file are f = omega / 2pi with an explicit unit and are converted to
rad/s on load; decoherence entries are rates ('1/us') or lifetimes ('us').
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger as lg

from cavity_swap.common import InvalidConfiguration, load_json_file, quantity, to_angular_frequency, to_rate, \
    to_seconds
from cavity_swap.constants import DEFAULT_B_VALUES, SWAP_SCENARIOS, DEFAULT_N_PAIRS, DEFAULT_FOCK_CUTOFF, \
    DEFAULT_DELTA_1, DEFAULT_DELTA_2, DEFAULT_CAVITY_LIFETIME, DEFAULT_RELAXATION_TIME, DEFAULT_DEPHASING_TIME, \
    DEFAULT_MAX_WORKERS, MAX_DIMENSION, Scenario, SzConvention, EvolutionModel, OutputFormat, IntegratorMethod
from cavity_swap.dynamics import IntegratorOptions
from cavity_swap.model import DecoherenceConfig

SECTIONS = ('system', 'couplings', 'decoherence', 'integrator', 'sweep', 'output')


@dataclass(frozen=True)
class SweepSpec:
    b_values: Tuple[float, ...] = DEFAULT_B_VALUES
    scenarios: Tuple[Scenario, ...] = SWAP_SCENARIOS
    n_pairs: int = DEFAULT_N_PAIRS
    fock_cutoff: int = DEFAULT_FOCK_CUTOFF
    max_dimension: int = MAX_DIMENSION
    delta_1: float = DEFAULT_DELTA_1
    delta_2: float = DEFAULT_DELTA_2
    model: EvolutionModel = EvolutionModel.FULL
    decoherence_enabled: bool = True
    kappa_a: Optional[Tuple[float, ...]] = None
    kappa_b: Optional[Tuple[float, ...]] = None
    kappa: float = 1.0 / DEFAULT_CAVITY_LIFETIME
    gamma: float = 1.0 / DEFAULT_RELAXATION_TIME
    gamma_phi: float = 1.0 / DEFAULT_DEPHASING_TIME
    sz_convention: SzConvention = SzConvention.UNHALVED
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    max_workers: int = DEFAULT_MAX_WORKERS
    output_path: Optional[str] = None
    output_format: OutputFormat = OutputFormat.CSV

    def __post_init__(self):
        object.__setattr__(self, 'b_values', tuple(float(b) for b in self.b_values))
        try:
            object.__setattr__(self, 'scenarios', tuple(Scenario(s) for s in self.scenarios))
            object.__setattr__(self, 'model', EvolutionModel(self.model))
            object.__setattr__(self, 'sz_convention', SzConvention(self.sz_convention))
            object.__setattr__(self, 'output_format', OutputFormat(self.output_format))
        except ValueError as e:
            raise InvalidConfiguration(f"Unknown name in sweep configuration: {e}")
        if len(self.b_values) == 0:
            raise InvalidConfiguration("b_values must not be empty")
        if any(not b > 1 for b in self.b_values):
            raise InvalidConfiguration(f"Every b must exceed 1, got {self.b_values}")
        if len(self.scenarios) == 0:
            raise InvalidConfiguration("At least one scenario is required")
        if self.n_pairs < 1:
            raise InvalidConfiguration(f"n_pairs must be >= 1, got {self.n_pairs}")
        if self.fock_cutoff < 2:
            raise InvalidConfiguration(f"fock_cutoff must be >= 2, got {self.fock_cutoff}")
        if self.max_workers < 1:
            raise InvalidConfiguration(f"max_workers must be >= 1, got {self.max_workers}")
        for name in ('kappa_a', 'kappa_b'):
            rates = getattr(self, name)
            if rates is not None:
                object.__setattr__(self, name, tuple(float(r) for r in rates))

    def decoherence_config(self, n_pairs: Optional[int] = None) -> DecoherenceConfig:
        n_pairs = n_pairs or self.n_pairs
        if not self.decoherence_enabled:
            return DecoherenceConfig.closed(n_pairs, self.sz_convention)
        kappa_a = self.kappa_a if self.kappa_a is not None else (self.kappa,) * n_pairs
        kappa_b = self.kappa_b if self.kappa_b is not None else (self.kappa,) * n_pairs
        if len(kappa_a) != n_pairs or len(kappa_b) != n_pairs:
            raise InvalidConfiguration(f"Per-cavity decay rates must list {n_pairs} values per set")
        return DecoherenceConfig(kappa_a, kappa_b, gamma=self.gamma, gamma_phi=self.gamma_phi,
                                 sz_convention=self.sz_convention)

    def with_overrides(self, **overrides) -> 'SweepSpec':
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})


def b_grid(b_min: float, b_max: float, b_steps: int) -> Tuple[float, ...]:
    if b_steps < 1:
        raise InvalidConfiguration(f"b_steps must be >= 1, got {b_steps}")
    if b_steps == 1:
        return (float(b_min),)
    if b_max < b_min:
        raise InvalidConfiguration(f"b_max {b_max} is below b_min {b_min}")
    return tuple(float(b) for b in np.linspace(b_min, b_max, b_steps))


def refine_grid(b_values: Sequence[float]) -> Tuple[float, ...]:
    """Insert midpoints between neighbouring b values, doubling the grid density."""
    ordered = sorted(b_values)
    refined = [ordered[0]]
    for left, right in zip(ordered, ordered[1:]):
        refined.extend([0.5 * (left + right), right])
    return tuple(refined)


def _section(document: Dict[str, Any], name: str) -> Dict[str, Any]:
    section = document.get(name, {})
    if not isinstance(section, dict):
        raise InvalidConfiguration(f"The '{name}' section must be a JSON object")
    return section


def _rates(section: Dict[str, Any], key: str) -> Optional[Tuple[float, ...]]:
    if key not in section:
        return None
    entries = section[key]
    if not isinstance(entries, list):
        raise InvalidConfiguration(f"'{key}' must be a list of rates")
    return tuple(quantity(entry, to_rate, '1/s') for entry in entries)


def _integrator_options(section: Dict[str, Any]) -> IntegratorOptions:
    dt = section.get('dt')
    try:
        return IntegratorOptions(
            method=IntegratorMethod(section.get('method', IntegratorMethod.FIXED_RK4.value)),
            dt=None if dt is None else quantity(dt, to_seconds, 's'),
            rtol=float(section.get('rtol', 1e-8)),
            atol=float(section.get('atol', 1e-10)),
            record_stride=section.get('record_stride'),
            monitor_positivity=bool(section.get('monitor_positivity', True)),
            monitor_trace=bool(section.get('monitor_trace', True)),
            restrict_excitations=bool(section.get('restrict_excitations', True)),
        )
    except ValueError as e:
        raise InvalidConfiguration(f"Invalid integrator section: {e}")


def spec_from_document(document: Dict[str, Any]) -> SweepSpec:
    unknown = set(document) - set(SECTIONS)
    if unknown:
        raise InvalidConfiguration(f"Unknown configuration sections: {sorted(unknown)}")
    system = _section(document, 'system')
    couplings = _section(document, 'couplings')
    decoherence = _section(document, 'decoherence')
    sweep = _section(document, 'sweep')
    output = _section(document, 'output')

    settings: Dict[str, Any] = {}
    for key in ('n_pairs', 'fock_cutoff', 'max_dimension', 'sz_convention'):
        if key in system:
            settings[key] = system[key]
    if 'delta_1' in couplings:
        settings['delta_1'] = quantity(couplings['delta_1'], to_angular_frequency, 'GHz')
    if 'delta_2' in couplings:
        settings['delta_2'] = quantity(couplings['delta_2'], to_angular_frequency, 'GHz')
    if 'model' in couplings:
        settings['model'] = couplings['model']

    if 'enabled' in decoherence:
        settings['decoherence_enabled'] = bool(decoherence['enabled'])
    for key in ('kappa', 'gamma', 'gamma_phi'):
        if key in decoherence:
            settings[key] = quantity(decoherence[key], to_rate, '1/s')
    for key in ('kappa_a', 'kappa_b'):
        rates = _rates(decoherence, key)
        if rates is not None:
            settings[key] = rates

    settings['integrator'] = _integrator_options(_section(document, 'integrator'))

    if 'b_values' in sweep:
        settings['b_values'] = tuple(sweep['b_values'])
    elif 'b_min' in sweep or 'b_max' in sweep:
        try:
            settings['b_values'] = b_grid(sweep['b_min'], sweep['b_max'], int(sweep.get('b_steps', 11)))
        except KeyError as e:
            raise InvalidConfiguration(f"The sweep section needs both b_min and b_max, missing {e}")
    if 'scenarios' in sweep:
        settings['scenarios'] = tuple(sweep['scenarios'])
    if 'max_workers' in sweep:
        settings['max_workers'] = int(sweep['max_workers'])

    if 'path' in output:
        settings['output_path'] = output['path']
    if 'format' in output:
        settings['output_format'] = output['format']
    return SweepSpec(**settings)


def load_sweep_spec(file_path: Optional[str] = None) -> SweepSpec:
    if file_path is None:
        lg.debug("No configuration file given, using defaults")
        return SweepSpec()
    lg.debug(f"Loading configuration from {file_path}")
    return spec_from_document(load_json_file(file_path))
