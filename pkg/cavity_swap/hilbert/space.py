"""
Truncated-Fock Hilbert space for 2N cavity modes plus one two-level coupler qubit.

Basis enumeration follows the Kronecker order (a_1, ..., a_N, b_1, ..., b_N, qubit):
a_1 is the most significant digit and the qubit index varies fastest, with |g> = 0
and |e> = 1. Every operator is a dense complex numpy matrix on that basis.
"""
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from loguru import logger as lg

from cavity_swap.common import InvalidConfiguration, DimensionMismatch, InvalidState
from cavity_swap.constants import MAX_DIMENSION, QubitLevel, Frame, SzConvention, PURE_NORM_TOL, HERMITIAN_TOL, \
    TRACE_TOL, POSITIVITY_TOL

Operator = np.ndarray
ModeRef = Union[int, str]


@dataclass(frozen=True)
class SystemLayout:
    n_pairs: int
    fock_cutoff: int

    @property
    def n_modes(self) -> int:
        return 2 * self.n_pairs

    @property
    def qubit_index(self) -> int:
        return self.n_modes

    @property
    def factor_dims(self) -> Tuple[int, ...]:
        return (self.fock_cutoff,) * self.n_modes + (2,)

    @property
    def dim(self) -> int:
        return self.fock_cutoff ** self.n_modes * 2

    @property
    def mode_labels(self) -> Tuple[str, ...]:
        return tuple(f"a{j}" for j in range(1, self.n_pairs + 1)) + \
            tuple(f"b{j}" for j in range(1, self.n_pairs + 1))

    def a_mode(self, j: int) -> int:
        """Factor index of cavity a_j (1-based pair index)."""
        return j - 1

    def b_mode(self, j: int) -> int:
        return self.n_pairs + j - 1

    def mode_index(self, mode: ModeRef) -> int:
        if isinstance(mode, str):
            if mode not in self.mode_labels:
                raise InvalidConfiguration(f"Unknown mode label: {mode}")
            return self.mode_labels.index(mode)
        if isinstance(mode, (int, np.integer)) and 0 <= mode < self.n_modes:
            return int(mode)
        raise InvalidConfiguration(f"Unknown mode index: {mode} (layout has {self.n_modes} modes)")


def build_space(n_pairs: int, fock_cutoff: int, max_dimension: int = MAX_DIMENSION) -> SystemLayout:
    if n_pairs < 1:
        raise InvalidConfiguration(f"n_pairs must be >= 1, got {n_pairs}")
    if fock_cutoff < 2:
        raise InvalidConfiguration(f"fock_cutoff must be >= 2, got {fock_cutoff}")
    layout = SystemLayout(int(n_pairs), int(fock_cutoff))
    if layout.dim > max_dimension:
        raise InvalidConfiguration(f"Hilbert space dimension {layout.dim} exceeds the cap of {max_dimension}")
    lg.debug(f"Built layout N={n_pairs}, d={fock_cutoff}, dim={layout.dim}")
    return layout


def basis_occupations(layout: SystemLayout) -> np.ndarray:
    """(dim, 2N + 1) integer table: photon numbers per mode, then the qubit level."""
    grids = np.indices(layout.factor_dims).reshape(len(layout.factor_dims), -1)
    return grids.T.copy()


def total_excitations(layout: SystemLayout) -> np.ndarray:
    return basis_occupations(layout).sum(axis=1)


def _embed(layout: SystemLayout, factor: np.ndarray, position: int) -> Operator:
    factors = [np.eye(dim, dtype=complex) for dim in layout.factor_dims]
    factors[position] = factor.astype(complex)
    return reduce(np.kron, factors)


def single_mode_lowering(fock_cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, fock_cutoff, dtype=float)), k=1).astype(complex)


def identity(layout: SystemLayout) -> Operator:
    return np.eye(layout.dim, dtype=complex)


def annihilation_op(layout: SystemLayout, mode: ModeRef) -> Operator:
    return _embed(layout, single_mode_lowering(layout.fock_cutoff), layout.mode_index(mode))


def creation_op(layout: SystemLayout, mode: ModeRef) -> Operator:
    return adjoint(annihilation_op(layout, mode))


def number_op(layout: SystemLayout, mode: ModeRef) -> Operator:
    return _embed(layout, np.diag(np.arange(layout.fock_cutoff, dtype=float)), layout.mode_index(mode))


def total_excitation_op(layout: SystemLayout) -> Operator:
    return np.diag(total_excitations(layout).astype(complex))


class QubitOperators(NamedTuple):
    s_minus: Operator
    s_plus: Operator
    sz: Operator
    proj_g: Operator
    proj_e: Operator


def qubit_ops(layout: SystemLayout, sz_convention: SzConvention = SzConvention.UNHALVED) -> QubitOperators:
    s_plus_block = np.array([[0, 0], [1, 0]], dtype=complex)
    proj_g_block = np.diag([1, 0]).astype(complex)
    proj_e_block = np.diag([0, 1]).astype(complex)
    sz_block = proj_e_block - proj_g_block
    if sz_convention == SzConvention.HALVED:
        sz_block = 0.5 * sz_block
    position = layout.qubit_index
    s_plus = _embed(layout, s_plus_block, position)
    return QubitOperators(s_minus=adjoint(s_plus), s_plus=s_plus, sz=_embed(layout, sz_block, position),
                          proj_g=_embed(layout, proj_g_block, position),
                          proj_e=_embed(layout, proj_e_block, position))


def basis_index(layout: SystemLayout, occupations: Sequence[int], qubit_level: QubitLevel = QubitLevel.G) -> int:
    if len(occupations) != layout.n_modes:
        raise InvalidConfiguration(f"Expected {layout.n_modes} occupations, got {len(occupations)}")
    for label, n in zip(layout.mode_labels, occupations):
        if not 0 <= n < layout.fock_cutoff:
            raise InvalidConfiguration(f"Occupation {n} of mode {label} is outside 0..{layout.fock_cutoff - 1}")
    level = 1 if QubitLevel(qubit_level) == QubitLevel.E else 0
    return int(np.ravel_multi_index(tuple(occupations) + (level,), layout.factor_dims))


def tensor(op_a: np.ndarray, op_b: np.ndarray) -> np.ndarray:
    return np.kron(op_a, op_b)


def adjoint(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def matmul(op_a: np.ndarray, op_b: np.ndarray) -> np.ndarray:
    if op_a.shape[-1] != op_b.shape[0]:
        raise DimensionMismatch(f"Cannot multiply {op_a.shape} by {op_b.shape}")
    return op_a @ op_b


def commutator(op_a: np.ndarray, op_b: np.ndarray) -> np.ndarray:
    return matmul(op_a, op_b) - matmul(op_b, op_a)


def expm(op: np.ndarray, scalar: complex = 1.0) -> np.ndarray:
    """exp(scalar * op); Hermitian inputs go through an eigendecomposition."""
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionMismatch(f"expm needs a square matrix, got shape {op.shape}")
    if not np.all(np.isfinite(op)):
        raise InvalidConfiguration("expm input has non-finite entries")
    if np.array_equal(op, adjoint(op)):
        eigenvalues, eigenvectors = np.linalg.eigh(op)
        return (eigenvectors * np.exp(scalar * eigenvalues)) @ adjoint(eigenvectors)
    return scipy.linalg.expm(scalar * op)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state vector (1-d) or density matrix (2-d), tagged with its frame."""
    data: np.ndarray
    frame: Frame = Frame.INTERACTION
    metadata: Dict = field(default_factory=dict, compare=False)
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        data.flags.writeable = False
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'frame', Frame(self.frame))
        if data.ndim == 2 and data.shape[0] != data.shape[1]:
            raise InvalidState(f"Density matrix must be square, got shape {data.shape}")
        if data.ndim not in (1, 2):
            raise InvalidState(f"State data must be a vector or a matrix, got {data.ndim} dimensions")
        if self.check:
            self.validate()

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def to_mixed(self) -> 'QuantumState':
        return QuantumState(self.density_matrix(), self.frame, dict(self.metadata), check=False)

    def with_frame(self, frame: Frame) -> 'QuantumState':
        return QuantumState(self.data, frame, dict(self.metadata), check=False)

    def validate(self) -> None:
        if not np.all(np.isfinite(self.data)):
            raise InvalidState("State has non-finite entries")
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1.0) > PURE_NORM_TOL:
                raise InvalidState(f"State vector norm {norm:.15f} is not 1")
            return
        hermiticity = np.max(np.abs(self.data - adjoint(self.data)))
        if hermiticity > HERMITIAN_TOL:
            raise InvalidState(f"Density matrix is not Hermitian (max deviation {hermiticity:.3e})")
        trace = np.trace(self.data).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidState(f"Density matrix trace {trace:.12f} is not 1")
        min_eig = np.linalg.eigvalsh(0.5 * (self.data + adjoint(self.data))).min()
        if min_eig < -POSITIVITY_TOL:
            raise InvalidState(f"Density matrix has negative eigenvalue {min_eig:.3e}")


def fock_state(layout: SystemLayout, occupations: Sequence[int], qubit_level: QubitLevel = QubitLevel.G,
               frame: Frame = Frame.INTERACTION) -> QuantumState:
    vector = np.zeros(layout.dim, dtype=complex)
    vector[basis_index(layout, occupations, qubit_level)] = 1.0
    return QuantumState(vector, frame)


def partial_trace(layout: SystemLayout, rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduce a density matrix onto the factors in `keep` (mode indices, qubit = 2N)."""
    dims = list(layout.factor_dims)
    keep = sorted(set(keep))
    if any(not 0 <= k < len(dims) for k in keep):
        raise InvalidConfiguration(f"Factor indices {keep} are outside 0..{len(dims) - 1}")
    if rho.shape != (layout.dim, layout.dim):
        raise DimensionMismatch(f"Expected a {layout.dim}x{layout.dim} density matrix, got {rho.shape}")
    reduced = rho.reshape(dims + dims)
    traced: List[int] = [axis for axis in range(len(dims)) if axis not in keep]
    for axis in sorted(traced, reverse=True):
        half = reduced.ndim // 2
        reduced = np.trace(reduced, axis1=axis, axis2=axis + half)
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return reduced.reshape(kept_dim, kept_dim)


def excited_mask(dim: int) -> np.ndarray:
    """Basis indices with the qubit in |e>; the qubit is the fastest index, so these are the odd ones."""
    return np.arange(dim) % 2 == 1
