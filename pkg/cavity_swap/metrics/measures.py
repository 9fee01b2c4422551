import math
from dataclasses import dataclass
from typing import Dict, Union

import numpy as np

from cavity_swap.common import DimensionMismatch, InvalidState
from cavity_swap.constants import EIGENVALUE_CLIP, FIDELITY_PSD_TOL, FIDELITY_OVERSHOOT
from cavity_swap.hilbert import SystemLayout, QuantumState, basis_occupations, partial_trace, adjoint

StateLike = Union[QuantumState, np.ndarray]


@dataclass(frozen=True)
class FidelityValue:
    """Raw Uhlmann fidelity and its value clipped to [0, 1] for reporting."""
    raw: float

    @property
    def value(self) -> float:
        return min(1.0, max(0.0, self.raw))

    def __float__(self) -> float:
        return self.value


def _as_data(state: StateLike) -> np.ndarray:
    if isinstance(state, QuantumState):
        return state.data
    return np.asarray(state, dtype=complex)


def _as_density(state: StateLike) -> np.ndarray:
    data = _as_data(state)
    return np.outer(data, data.conj()) if data.ndim == 1 else data


def _check_psd(eigenvalues: np.ndarray) -> None:
    if eigenvalues.min() < -FIDELITY_PSD_TOL:
        raise InvalidState(f"Fidelity input has eigenvalue {eigenvalues.min():.3e} below -{FIDELITY_PSD_TOL:g}")


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (rho + adjoint(rho)))
    _check_psd(eigenvalues)
    clipped = np.where(eigenvalues < EIGENVALUE_CLIP, 0.0, eigenvalues)
    return (eigenvectors * np.sqrt(clipped)) @ adjoint(eigenvectors)


def uhlmann_fidelity(ideal: StateLike, actual: StateLike) -> FidelityValue:
    """
    F = Tr sqrt(sqrt(rho_id) rho sqrt(rho_id)). A pure argument short-cuts to
    sqrt(<psi|rho|psi>); two pure arguments give |<psi|phi>|.
    """
    first, second = _as_data(ideal), _as_data(actual)
    if first.shape[0] != second.shape[0]:
        raise DimensionMismatch(f"Cannot compare states of dimension {first.shape[0]} and {second.shape[0]}")
    if first.ndim == 1 and second.ndim == 1:
        raw = abs(np.vdot(first, second))
    elif first.ndim == 1 or second.ndim == 1:
        psi, rho = (first, second) if first.ndim == 1 else (second, first)
        _check_psd(np.linalg.eigvalsh(0.5 * (rho + adjoint(rho))))
        overlap = np.real(np.vdot(psi, rho @ psi))
        if overlap < -FIDELITY_PSD_TOL:
            raise InvalidState(f"Negative expectation {overlap:.3e} in the fidelity of a pure state")
        raw = math.sqrt(max(overlap, 0.0))
    else:
        root = _psd_sqrt(first)
        _check_psd(np.linalg.eigvalsh(0.5 * (second + adjoint(second))))
        inner = root @ second @ root
        eigenvalues = np.linalg.eigvalsh(0.5 * (inner + adjoint(inner)))
        if eigenvalues.min() < -FIDELITY_PSD_TOL:
            raise InvalidState(f"Fidelity input has eigenvalue {eigenvalues.min():.3e} below -{FIDELITY_PSD_TOL:g}")
        clipped = np.where(eigenvalues < EIGENVALUE_CLIP, 0.0, eigenvalues)
        raw = float(np.sqrt(clipped).sum())
    if raw > 1.0 + FIDELITY_OVERSHOOT:
        raise InvalidState(f"Fidelity {raw:.12f} exceeds 1; inputs are not normalised states")
    return FidelityValue(float(raw))


def purity(state: StateLike) -> float:
    data = _as_data(state)
    if data.ndim == 1:
        return float(np.vdot(data, data).real ** 2)
    return float(np.real(np.trace(data @ data)))


def _diagonal(state: StateLike) -> np.ndarray:
    data = _as_data(state)
    if data.ndim == 1:
        return np.abs(data) ** 2
    return np.real(np.diag(data))


def excitation_expectation(state: StateLike, layout: SystemLayout) -> float:
    """Tr(rho N_tot); N_tot is diagonal so only populations enter."""
    return float(_diagonal(state) @ basis_occupations(layout).sum(axis=1))


def qubit_e_population(state: StateLike) -> float:
    return float(_diagonal(state)[1::2].sum())


def mode_populations(state: StateLike, layout: SystemLayout) -> Dict[str, float]:
    occupations = basis_occupations(layout)
    populations = _diagonal(state)
    return {label: float(populations @ occupations[:, m]) for m, label in enumerate(layout.mode_labels)}


def pair_marginal(state: StateLike, layout: SystemLayout, j: int) -> np.ndarray:
    """Reduced density matrix of (a_j, b_j) on d^2 levels, index n_a * d + n_b."""
    return partial_trace(layout, _as_density(state), [layout.a_mode(j), layout.b_mode(j)])


def pair_fidelities(ideal: StateLike, actual: StateLike, layout: SystemLayout) -> Dict[int, FidelityValue]:
    return {j: uhlmann_fidelity(pair_marginal(ideal, layout, j), pair_marginal(actual, layout, j))
            for j in range(1, layout.n_pairs + 1)}
