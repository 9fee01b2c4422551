import json
import math
import multiprocessing
import os
import tempfile
from abc import ABC
from functools import partial
from typing import Any, Callable, Dict, List, Sequence

from loguru import logger as lg

from cavity_swap.constants import FREQUENCY_UNITS, TIME_UNITS, DEFAULT_MAX_WORKERS


class SimulationError(Exception):
    def __init__(self, message="Simulation failed"):
        self.message = message
        super().__init__(self.message)


class InvalidConfiguration(SimulationError):
    def __init__(self, message="Invalid configuration"):
        super().__init__(message)


class DimensionMismatch(InvalidConfiguration):
    def __init__(self, message="Operator dimensions do not match"):
        super().__init__(message)


class InvalidState(SimulationError):
    def __init__(self, message="Quantum state violates its invariants"):
        super().__init__(message)


class NumericalFailure(SimulationError):
    def __init__(self, message="Numerical integration failed", diagnostics: Dict[str, Any] = None):
        self.diagnostics = diagnostics if diagnostics is not None else {}
        super().__init__(message)

    def annotate(self, context: str) -> 'NumericalFailure':
        return NumericalFailure(f"{context}: {self.message}", dict(self.diagnostics, context=context))


class OutputError(SimulationError):
    def __init__(self, message="Output path is not writable"):
        super().__init__(message)


class SimulationService(ABC):
    _max_workers: int

    def __init__(self, max_workers: int = DEFAULT_MAX_WORKERS):
        if max_workers < 1:
            raise InvalidConfiguration(f"max_workers must be >= 1, got {max_workers}")
        self._max_workers = max_workers

    def _get_max_workers(self) -> int:
        return self._max_workers

    @staticmethod
    def _process_parallel(jobs: Sequence[Any], worker: Callable, max_workers: int, **worker_kwargs) -> List[Any]:
        bound_worker = partial(worker, **worker_kwargs)
        worker_count = min(max_workers, multiprocessing.cpu_count(), max(len(jobs), 1))
        if worker_count <= 1:
            lg.debug(f"Running {len(jobs)} jobs in-process")
            return [bound_worker(job) for job in jobs]
        lg.debug(f"Will use {worker_count} workers for {len(jobs)} jobs")
        pool = multiprocessing.Pool(worker_count)
        try:
            results = pool.map(bound_worker, jobs)
        finally:
            pool.close()
            pool.join()
        lg.debug("Finished parallel jobs")
        return results


def load_json_file(file_path: str) -> Dict[str, Any]:
    try:
        with open(file_path, 'r') as file:
            document = json.load(file)
    except FileNotFoundError:
        full_path = os.path.abspath(file_path)
        raise FileNotFoundError(f"The file at {full_path} is missing.")
    except json.JSONDecodeError as e:
        raise InvalidConfiguration(f"The file {file_path} is not valid JSON: {e}")
    if not isinstance(document, dict):
        raise InvalidConfiguration(f"The file {file_path} must hold a JSON object at the top level.")
    return document


def ensure_writable(file_path: str) -> None:
    """Fail before any computation if file_path cannot be created or replaced."""
    directory = os.path.dirname(os.path.abspath(file_path))
    try:
        os.makedirs(directory, exist_ok=True)
        if os.path.isdir(file_path):
            raise IsADirectoryError(f"{file_path} is a directory")
        with tempfile.NamedTemporaryFile('w', dir=directory, suffix='.tmp'):
            pass
    except OSError as e:
        raise OutputError(f"Cannot write {file_path}: {e}")


def write_text_atomic(file_path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(file_path))
    try:
        os.makedirs(directory, exist_ok=True)
        with tempfile.NamedTemporaryFile('w', dir=directory, delete=False, suffix='.tmp', newline='') as handle:
            handle.write(text)
            temp_path = handle.name
        os.replace(temp_path, file_path)
    except OSError as e:
        raise OutputError(f"Cannot write {file_path}: {e}")


def to_angular_frequency(value: float, unit: str) -> float:
    """Convert a frequency quoted as f = omega/2pi into rad/s. 'rad/s' passes through."""
    if unit == 'rad/s':
        return float(value)
    if unit not in FREQUENCY_UNITS:
        raise InvalidConfiguration(f"Unknown frequency unit: {unit}")
    return 2.0 * math.pi * float(value) * FREQUENCY_UNITS[unit]


def to_seconds(value: float, unit: str) -> float:
    if unit not in TIME_UNITS:
        raise InvalidConfiguration(f"Unknown time unit: {unit}")
    return float(value) * TIME_UNITS[unit]


def to_rate(value: float, unit: str) -> float:
    """Rates come either as '1/us'-style units or as lifetimes ('us'), which invert."""
    if unit.startswith('1/'):
        time_unit = unit[2:]
        if time_unit not in TIME_UNITS:
            raise InvalidConfiguration(f"Unknown rate unit: {unit}")
        return float(value) / TIME_UNITS[time_unit]
    lifetime = to_seconds(value, unit)
    if lifetime <= 0:
        raise InvalidConfiguration(f"Lifetimes must be positive, got {value} {unit}")
    return 1.0 / lifetime


def quantity(entry: Any, converter: Callable[[float, str], float], default_unit: str) -> float:
    if isinstance(entry, dict):
        try:
            return converter(entry['value'], entry.get('unit', default_unit))
        except KeyError:
            raise InvalidConfiguration(f"The 'value' key is missing in {entry}")
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        return converter(entry, default_unit)
    raise InvalidConfiguration(f"Expected a number or a {{value, unit}} object, got {entry!r}")
