"""
Time evolution of the coupler system: Schrödinger propagation used as an oracle and
Lindblad master-equation integration with cavity decay, qubit relaxation and dephasing.

Lindblad runs are restricted to the basis states whose total excitation does not exceed
the largest one present in the initial state whenever the generator conserves N_tot and
no collapse operator raises it. The restriction is exact; samples are embedded back into
the full space on access. Fixed-step runs further split rho into coherence sectors of
equal N_i - N_j and advance each one with a power of its RK4 step matrix.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger as lg
from scipy.integrate import solve_ivp

from cavity_swap.common import InvalidConfiguration, InvalidState, NumericalFailure
from cavity_swap.constants import IntegratorMethod, EvolutionModel, Frame, DT_DELTA_FACTOR, DT_SWAP_DIVISOR, \
    SCHRODINGER_DT_DELTA_FACTOR, DEFAULT_RECORD_SAMPLES, LIOUVILLIAN_MAX_SIZE, NORM_DRIFT_ABORT, POSITIVITY_ABORT, \
    TRACE_TOL
from cavity_swap.hilbert import SystemLayout, QuantumState, Operator, annihilation_op, qubit_ops, \
    total_excitations, basis_occupations, excited_mask, adjoint
from cavity_swap.model import ProtocolConfig, DecoherenceConfig, generator_for

Hamiltonian = Union[Operator, Callable[[float], Operator]]


@dataclass(frozen=True)
class IntegratorOptions:
    method: IntegratorMethod = IntegratorMethod.FIXED_RK4
    dt: Optional[float] = None
    rtol: float = 1e-8
    atol: float = 1e-10
    record_stride: Optional[int] = None
    monitor_positivity: bool = True
    monitor_trace: bool = True
    restrict_excitations: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'method', IntegratorMethod(self.method))
        if self.dt is not None and not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidConfiguration(f"dt must be positive, got {self.dt}")
        if not 0 < self.rtol < 1:
            raise InvalidConfiguration(f"rtol must lie in (0, 1), got {self.rtol}")
        if not 0 < self.atol < 1:
            raise InvalidConfiguration(f"atol must lie in (0, 1), got {self.atol}")
        if self.record_stride is not None and self.record_stride < 1:
            raise InvalidConfiguration(f"record_stride must be >= 1, got {self.record_stride}")

    def with_dt(self, dt: float) -> 'IntegratorOptions':
        return replace(self, dt=dt)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Recorded samples of a run. `samples` live on the basis states listed in `keep`;
    vectors for Schrödinger runs, density matrices for Lindblad runs.
    """
    times: np.ndarray
    samples: List[np.ndarray]
    keep: np.ndarray
    dim: int
    frame: Frame
    trace_error: np.ndarray
    hermiticity_error: np.ndarray
    min_eigenvalue: np.ndarray
    qubit_e_population: np.ndarray
    metadata: Dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def _expand(self, sample: np.ndarray) -> np.ndarray:
        if len(self.keep) == self.dim:
            return sample
        if sample.ndim == 1:
            full = np.zeros(self.dim, dtype=complex)
            full[self.keep] = sample
            return full
        full = np.zeros((self.dim, self.dim), dtype=complex)
        full[np.ix_(self.keep, self.keep)] = sample
        return full

    def state_at(self, index: int) -> QuantumState:
        return QuantumState(self._expand(self.samples[index]), self.frame, {'t': float(self.times[index])},
                            check=False)

    @property
    def states(self) -> List[QuantumState]:
        return [self.state_at(k) for k in range(len(self))]

    @property
    def final_state(self) -> QuantumState:
        return self.state_at(len(self) - 1)

    @property
    def max_trace_error(self) -> float:
        return float(np.max(self.trace_error))

    @property
    def max_hermiticity_error(self) -> float:
        return float(np.max(self.hermiticity_error))

    @property
    def min_eig(self) -> float:
        return float(np.nanmin(self.min_eigenvalue)) if np.any(np.isfinite(self.min_eigenvalue)) else math.nan

    @property
    def max_qubit_e_population(self) -> float:
        return float(np.max(self.qubit_e_population))

    def diagnostics_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({
            't': self.times,
            'trace_error': self.trace_error,
            'hermiticity_error': self.hermiticity_error,
            'min_eig': self.min_eigenvalue,
            'qubit_e_pop': self.qubit_e_population,
        })
        return df.set_index('t')


def _time_grid(t_final: float, dt: float, record_stride: Optional[int]) -> Tuple[int, float, List[int]]:
    """Step count, adjusted step and recorded step indices; the last record is t_final exactly."""
    if t_final < 0 or not math.isfinite(t_final):
        raise InvalidConfiguration(f"t_final must be finite and >= 0, got {t_final}")
    if t_final == 0:
        return 0, 0.0, [0]
    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    step = t_final / n_steps
    stride = record_stride or max(1, n_steps // DEFAULT_RECORD_SAMPLES)
    recorded = list(range(0, n_steps, stride))
    recorded.append(n_steps)
    return n_steps, step, recorded


def _record_times(step: float, recorded: Sequence[int], t_final: float) -> np.ndarray:
    times = np.array(recorded, dtype=float) * step
    times[-1] = t_final
    return times


def default_dt(config: ProtocolConfig, model: EvolutionModel = EvolutionModel.FULL) -> float:
    """min(0.002 / max Delta_j, t_swap / 2000) for the full model, t_swap / 2000 for the effective one."""
    swap_limited = config.t_swap / DT_SWAP_DIVISOR
    if EvolutionModel(model) == EvolutionModel.EFFECTIVE:
        return swap_limited
    return min(DT_DELTA_FACTOR / max(config.delta), swap_limited)


class _Diagnostics:
    def __init__(self, excited: np.ndarray, monitor_positivity: bool, monitor_trace: bool):
        self._excited = excited
        self._monitor_positivity = monitor_positivity
        self._monitor_trace = monitor_trace
        self.trace_error: List[float] = []
        self.hermiticity_error: List[float] = []
        self.min_eigenvalue: List[float] = []
        self.qubit_e_population: List[float] = []

    def record_vector(self, t: float, psi: np.ndarray) -> None:
        if not np.all(np.isfinite(psi)):
            raise NumericalFailure(f"Non-finite amplitudes at t={t:.6e}s", {'time': t})
        populations = np.abs(psi) ** 2
        drift = abs(math.sqrt(populations.sum()) - 1.0)
        if drift > NORM_DRIFT_ABORT:
            raise NumericalFailure(f"Norm drift {drift:.3e} at t={t:.6e}s exceeds {NORM_DRIFT_ABORT:g}",
                                   {'time': t, 'norm_drift': drift})
        self.trace_error.append(abs(populations.sum() - 1.0))
        self.hermiticity_error.append(0.0)
        self.min_eigenvalue.append(0.0)
        self.qubit_e_population.append(float(populations[self._excited].sum()))

    def record_matrix(self, t: float, rho: np.ndarray) -> None:
        if not np.all(np.isfinite(rho)):
            raise NumericalFailure(f"Non-finite density matrix entries at t={t:.6e}s", {'time': t})
        trace_error = abs(np.trace(rho) - 1.0)
        hermiticity = float(np.max(np.abs(rho - adjoint(rho))))
        min_eig = math.nan
        if self._monitor_positivity:
            min_eig = float(np.linalg.eigvalsh(0.5 * (rho + adjoint(rho))).min())
            if min_eig < -POSITIVITY_ABORT:
                raise NumericalFailure(f"Density matrix eigenvalue {min_eig:.3e} at t={t:.6e}s is below "
                                       f"-{POSITIVITY_ABORT:g}", {'time': t, 'min_eig': min_eig})
        if self._monitor_trace and trace_error > TRACE_TOL:
            lg.warning(f"Trace drift {trace_error:.3e} at t={t:.6e}s")
        self.trace_error.append(float(trace_error))
        self.hermiticity_error.append(hermiticity)
        self.min_eigenvalue.append(min_eig)
        self.qubit_e_population.append(float(np.real(np.diag(rho)[self._excited].sum())))

    def build(self, times: np.ndarray, samples: List[np.ndarray], keep: np.ndarray, dim: int, frame: Frame,
              metadata: Dict) -> Trajectory:
        return Trajectory(times, samples, keep, dim, frame, np.array(self.trace_error),
                          np.array(self.hermiticity_error), np.array(self.min_eigenvalue),
                          np.array(self.qubit_e_population), metadata)


def evolve_schrodinger(hamiltonian: Hamiltonian, psi0: QuantumState, t_final: float,
                       opts: Optional[IntegratorOptions] = None,
                       max_frequency: Optional[float] = None) -> Trajectory:
    """
    psi(t) under -i H psi. A constant H is diagonalised once and sampled exactly; a callable
    H(t) is stepped with RK4 (or solve_ivp in adaptive mode). Without an explicit dt the
    callable path needs `max_frequency` and uses dt = 0.01 / max_frequency.
    """
    opts = opts or IntegratorOptions()
    if not psi0.is_pure:
        raise InvalidState("evolve_schrodinger needs a pure initial state")
    psi0.validate()
    dim = psi0.dim
    keep = np.arange(dim)
    diagnostics = _Diagnostics(excited_mask(dim), opts.monitor_positivity, opts.monitor_trace)
    samples: List[np.ndarray] = []

    if not callable(hamiltonian):
        hamiltonian = np.asarray(hamiltonian, dtype=complex)
        if hamiltonian.shape != (dim, dim):
            raise InvalidConfiguration(f"Hamiltonian shape {hamiltonian.shape} does not match state dim {dim}")
        dt = opts.dt or (t_final / DT_SWAP_DIVISOR if t_final > 0 else 1.0)
        _, step, recorded = _time_grid(t_final, dt, opts.record_stride)
        times = _record_times(step, recorded, t_final)
        eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (hamiltonian + adjoint(hamiltonian)))
        coefficients = adjoint(eigenvectors) @ psi0.data
        for t in times:
            psi = eigenvectors @ (np.exp(-1j * eigenvalues * t) * coefficients)
            diagnostics.record_vector(t, psi)
            samples.append(psi)
        return diagnostics.build(times, samples, keep, dim, psi0.frame, {'method': 'eigh'})

    if opts.dt is None and max_frequency is None and opts.method == IntegratorMethod.FIXED_RK4:
        raise InvalidConfiguration("A time-dependent Hamiltonian needs opts.dt or max_frequency")
    dt = opts.dt or (SCHRODINGER_DT_DELTA_FACTOR / max_frequency if max_frequency else t_final / DT_SWAP_DIVISOR)
    n_steps, step, recorded = _time_grid(t_final, dt, opts.record_stride)
    times = _record_times(step, recorded, t_final)
    lg.debug(f"Schrödinger run: {n_steps} steps of {step:.3e}s, {len(times)} records, method {opts.method.value}")

    if opts.method == IntegratorMethod.ADAPTIVE and t_final > 0:
        solution = solve_ivp(lambda t, y: -1j * (hamiltonian(t) @ y), (0.0, t_final), np.array(psi0.data),
                             method='DOP853', t_eval=times, rtol=opts.rtol, atol=opts.atol)
        if not solution.success:
            raise NumericalFailure(f"Adaptive Schrödinger integration failed: {solution.message}")
        for index, t in enumerate(times):
            psi = solution.y[:, index]
            diagnostics.record_vector(t, psi)
            samples.append(psi)
        return diagnostics.build(times, samples, keep, dim, psi0.frame, {'method': 'adaptive'})

    psi = np.array(psi0.data)
    diagnostics.record_vector(0.0, psi)
    samples.append(psi.copy())
    next_record = 1
    for k in range(n_steps):
        t = k * step
        k1 = -1j * (hamiltonian(t) @ psi)
        k2 = -1j * (hamiltonian(t + step / 2) @ (psi + step / 2 * k1))
        k3 = -1j * (hamiltonian(t + step / 2) @ (psi + step / 2 * k2))
        k4 = -1j * (hamiltonian(t + step) @ (psi + step * k3))
        psi = psi + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if next_record < len(recorded) and recorded[next_record] == k + 1:
            diagnostics.record_vector(times[next_record], psi)
            samples.append(psi.copy())
            next_record += 1
    return diagnostics.build(times, samples, keep, dim, psi0.frame, {'method': 'fixed-rk4', 'dt': step})


def infer_layout(n_pairs: int, dim: int) -> SystemLayout:
    """Recover the Fock cutoff from a state dimension d^(2N) * 2."""
    cutoff = int(round((dim / 2) ** (1.0 / (2 * n_pairs))))
    for candidate in (cutoff - 1, cutoff, cutoff + 1):
        if candidate >= 2 and candidate ** (2 * n_pairs) * 2 == dim:
            return SystemLayout(n_pairs, candidate)
    raise InvalidConfiguration(f"State dimension {dim} does not fit {n_pairs} pairs of cavities and a qubit")


def collapse_operators(decoherence: DecoherenceConfig, layout: SystemLayout) -> List[Tuple[float, Operator]]:
    """(rate, c) pairs for every nonzero rate; dephasing enters as rate * L[Sz]."""
    qubit = qubit_ops(layout, decoherence.sz_convention)
    jumps = []
    for j in range(1, layout.n_pairs + 1):
        jumps.append((decoherence.kappa_a[j - 1], annihilation_op(layout, layout.a_mode(j))))
        jumps.append((decoherence.kappa_b[j - 1], annihilation_op(layout, layout.b_mode(j))))
    jumps.append((decoherence.gamma, qubit.s_minus))
    jumps.append((decoherence.gamma_phi, qubit.sz))
    return [(rate, op) for rate, op in jumps if rate > 0]


def _excitation_subspace(layout: SystemLayout, hamiltonian: Operator, jumps: Sequence[Tuple[float, Operator]],
                         rho: np.ndarray) -> np.ndarray:
    excitations = total_excitations(layout)
    changes = excitations[:, None] != excitations[None, :]
    if np.any(hamiltonian[changes] != 0):
        lg.debug("Generator does not conserve N_tot; integrating on the full space")
        return np.arange(layout.dim)
    raises = excitations[:, None] > excitations[None, :]
    if any(np.any(op[raises] != 0) for _, op in jumps):
        lg.debug("A collapse operator raises N_tot; integrating on the full space")
        return np.arange(layout.dim)
    occupied = np.any(rho != 0, axis=1)
    ceiling = excitations[occupied].max() if np.any(occupied) else 0
    return np.flatnonzero(excitations <= ceiling)


def coherence_sectors(excitations: np.ndarray, hamiltonian: Operator, jumps: Sequence[Tuple[float, Operator]],
                      rho: np.ndarray) -> Optional[List[np.ndarray]]:
    """
    Row-major indices of rho grouped by N_i - N_j, for the groups the initial state occupies.
    The Lindbladian maps each group into itself when H conserves N_tot and every collapse
    operator shifts it by a fixed amount; otherwise None.
    """
    difference = excitations[:, None] - excitations[None, :]
    if np.any(hamiltonian[difference != 0] != 0):
        return None
    for _, op in jumps:
        if len(np.unique(difference[op != 0])) > 1:
            return None
    present = np.unique(difference[rho != 0])
    return [np.flatnonzero((difference == k).ravel()) for k in present]


def sector_liouvillian(hamiltonian: Operator, jumps: Sequence[Tuple[float, Operator]],
                       flat_indices: np.ndarray) -> np.ndarray:
    """Rows and columns of the Liouvillian for the given row-major entries of rho."""
    dim = hamiltonian.shape[0]
    rows, cols = np.divmod(np.asarray(flat_indices), dim)
    eye = np.eye(dim, dtype=complex)
    terms = [(-1j * hamiltonian, eye), (eye, 1j * hamiltonian.T)]
    for rate, op in jumps:
        decay = adjoint(op) @ op
        terms.extend([(rate * op, op.conj()), (-0.5 * rate * decay, eye), (eye, -0.5 * rate * decay.T)])
    block = np.zeros((len(rows), len(rows)), dtype=complex)
    for left, right in terms:
        block += left[np.ix_(rows, rows)] * right[np.ix_(cols, cols)]
    return block


def liouvillian(hamiltonian: Operator, jumps: Sequence[Tuple[float, Operator]]) -> np.ndarray:
    """Superoperator acting on row-major vec(rho): vec(A rho B) = (A kron B^T) vec(rho)."""
    return sector_liouvillian(hamiltonian, jumps, np.arange(hamiltonian.shape[0] ** 2))


def rk4_step_matrix(generator: np.ndarray, step: float) -> np.ndarray:
    """I + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24, the RK4 update of a linear ODE."""
    scaled = step * generator
    eye = np.eye(generator.shape[0], dtype=complex)
    return eye + scaled @ (eye + scaled @ (eye + scaled @ (eye + scaled / 4) / 3) / 2)


def _lindblad_rhs(rho: np.ndarray, hamiltonian: Operator, jumps: Sequence[Tuple[float, Operator, Operator]]) -> np.ndarray:
    drho = -1j * (hamiltonian @ rho - rho @ hamiltonian)
    for rate, op, decay in jumps:
        drho += rate * (op @ rho @ adjoint(op) - 0.5 * (decay @ rho + rho @ decay))
    return drho


def evolve_lindblad(config: ProtocolConfig, decoherence: DecoherenceConfig, rho0: QuantumState, t_final: float,
                    opts: Optional[IntegratorOptions] = None, layout: Optional[SystemLayout] = None,
                    model: EvolutionModel = EvolutionModel.FULL) -> Trajectory:
    """
    d rho/dt = -i[H, rho] + sum rate * L[c] with H the rotating-frame Hamiltonian (FULL,
    samples tagged lab-rotating) or the dispersive H0 + HI (EFFECTIVE, tagged interaction).
    No trace renormalisation is applied.
    """
    opts = opts or IntegratorOptions()
    model = EvolutionModel(model)
    if decoherence.n_pairs != config.n_pairs:
        raise InvalidConfiguration(f"Decoherence lists {decoherence.n_pairs} pairs, configuration has {config.n_pairs}")
    layout = layout or infer_layout(config.n_pairs, rho0.dim)
    if rho0.dim != layout.dim:
        raise InvalidConfiguration(f"Initial state dim {rho0.dim} does not match layout dim {layout.dim}")
    rho0.validate()

    hamiltonian = generator_for(config, layout, model)
    jumps = collapse_operators(decoherence, layout)
    rho = rho0.density_matrix()
    if opts.restrict_excitations:
        keep = _excitation_subspace(layout, hamiltonian, jumps, rho)
    else:
        keep = np.arange(layout.dim)
    index = np.ix_(keep, keep)
    hamiltonian_r = hamiltonian[index]
    jumps_r = [(rate, op[index]) for rate, op in jumps]
    rho = rho[index]
    size = len(keep)

    excited = basis_occupations(layout)[keep, layout.qubit_index] == 1
    diagnostics = _Diagnostics(excited, opts.monitor_positivity, opts.monitor_trace)
    dt = opts.dt or default_dt(config, model)
    n_steps, step, recorded = _time_grid(t_final, dt, opts.record_stride)
    times = _record_times(step, recorded, t_final)
    frame = Frame.LAB_ROTATING if model == EvolutionModel.FULL else Frame.INTERACTION
    metadata = {'model': model.value, 'method': opts.method.value, 'dt': step, 'n_steps': n_steps,
                'restricted_dim': size}
    lg.debug(f"Lindblad run: model {model.value}, dim {layout.dim} -> {size}, {n_steps} steps of {step:.3e}s, "
             f"{len(jumps_r)} collapse operators")

    samples: List[np.ndarray] = []
    diagnostics.record_matrix(0.0, rho)
    samples.append(rho.copy())
    if n_steps == 0:
        return diagnostics.build(times, samples, keep, layout.dim, frame, metadata)

    if opts.method == IntegratorMethod.ADAPTIVE:
        with_decay = [(rate, op, adjoint(op) @ op) for rate, op in jumps_r]

        def rhs(_, y):
            return _lindblad_rhs(y.reshape(size, size), hamiltonian_r, with_decay).reshape(-1)

        solution = solve_ivp(rhs, (0.0, t_final), rho.reshape(-1), method='DOP853', t_eval=times,
                             rtol=opts.rtol, atol=opts.atol)
        if not solution.success:
            raise NumericalFailure(f"Adaptive Lindblad integration failed: {solution.message}")
        for k in range(1, len(times)):
            sample = solution.y[:, k].reshape(size, size)
            diagnostics.record_matrix(times[k], sample)
            samples.append(sample)
        return diagnostics.build(times, samples, keep, layout.dim, frame, metadata)

    sectors = coherence_sectors(total_excitations(layout)[keep], hamiltonian_r, jumps_r, rho)
    if sectors is None:
        sectors = [np.arange(size * size)]
    if max(len(indices) for indices in sectors) <= LIOUVILLIAN_MAX_SIZE:
        lg.debug(f"RK4 step matrices on coherence sectors of sizes {[len(s) for s in sectors]}")
        metadata['sectors'] = [len(s) for s in sectors]
        propagators = [(indices, rk4_step_matrix(sector_liouvillian(hamiltonian_r, jumps_r, indices), step), {})
                       for indices in sectors]
        vector = rho.reshape(-1).copy()
        for k in range(1, len(recorded)):
            gap = recorded[k] - recorded[k - 1]
            for indices, step_matrix, powers in propagators:
                if gap not in powers:
                    powers[gap] = np.linalg.matrix_power(step_matrix, gap)
                vector[indices] = powers[gap] @ vector[indices]
            sample = vector.reshape(size, size).copy()
            diagnostics.record_matrix(times[k], sample)
            samples.append(sample)
        return diagnostics.build(times, samples, keep, layout.dim, frame, metadata)

    with_decay = [(rate, op, adjoint(op) @ op) for rate, op in jumps_r]
    next_record = 1
    for k in range(n_steps):
        k1 = _lindblad_rhs(rho, hamiltonian_r, with_decay)
        k2 = _lindblad_rhs(rho + step / 2 * k1, hamiltonian_r, with_decay)
        k3 = _lindblad_rhs(rho + step / 2 * k2, hamiltonian_r, with_decay)
        k4 = _lindblad_rhs(rho + step * k3, hamiltonian_r, with_decay)
        rho = rho + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if recorded[next_record] == k + 1:
            diagnostics.record_matrix(times[next_record], rho)
            samples.append(rho.copy())
            next_record += 1
    return diagnostics.build(times, samples, keep, layout.dim, frame, metadata)


def frame_phases(config: ProtocolConfig, layout: SystemLayout, t: float) -> np.ndarray:
    """Diagonal of D(t) = exp(-i sum_j Delta_j (n_aj + n_bj) t)."""
    occupations = basis_occupations(layout)
    energies = np.zeros(layout.dim)
    for j, detuning in enumerate(config.delta, start=1):
        energies += detuning * (occupations[:, layout.a_mode(j)] + occupations[:, layout.b_mode(j)])
    return np.exp(-1j * energies * t)


def frame_to_interaction(state: QuantumState, t: float, config: ProtocolConfig,
                         layout: Optional[SystemLayout] = None) -> QuantumState:
    if state.frame != Frame.LAB_ROTATING:
        raise InvalidState(f"frame_to_interaction expects a lab-rotating state, got {state.frame.value}")
    layout = layout or infer_layout(config.n_pairs, state.dim)
    phases = frame_phases(config, layout, t)
    if state.is_pure:
        data = phases * state.data
    else:
        data = phases[:, None] * state.data * phases.conj()[None, :]
    return QuantumState(data, Frame.INTERACTION, dict(state.metadata), check=False)
