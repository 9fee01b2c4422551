import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from loguru import logger as lg

from cavity_swap.common import InvalidConfiguration
from cavity_swap.constants import DEFAULT_DELTA_1, DEFAULT_DELTA_2, LAMBDA_REL_TOL, DEFAULT_DEPHASING_TIME, \
    DEFAULT_RELAXATION_TIME, DEFAULT_CAVITY_LIFETIME, SzConvention, Verdict, VERDICT_SEVERITY, VALIDITY_PASS_RATIO, \
    VALIDITY_WARN_RATIO


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Couplings g_j (cavity a_j), mu_j (cavity b_j) and qubit-cavity detunings Delta_j,
    all in rad/s. In standard mode g_j == mu_j and every pair shares the same
    lambda_j = g_j mu_j / Delta_j.
    """
    g: Tuple[float, ...]
    mu: Tuple[float, ...]
    delta: Tuple[float, ...]
    target_lambda: Optional[float] = None
    standard: bool = True

    def __post_init__(self):
        for name in ('g', 'mu', 'delta'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not (len(self.g) == len(self.mu) == len(self.delta)) or len(self.g) == 0:
            raise InvalidConfiguration(f"g, mu and delta must have the same nonzero length, got "
                                       f"{len(self.g)}, {len(self.mu)}, {len(self.delta)}")
        if any(d <= 0 for d in self.delta):
            raise InvalidConfiguration(f"Detunings must be positive, got {self.delta}")
        if len(set(self.delta)) != len(self.delta):
            raise InvalidConfiguration(f"Detunings must be pairwise distinct, got {self.delta}")
        if self.standard:
            if self.g != self.mu:
                raise InvalidConfiguration(f"Standard protocol requires g_j == mu_j, got g={self.g}, mu={self.mu}")
            reference = self.lam
            for j, lam_j in enumerate(self.raw_lambdas, start=1):
                if abs(lam_j - reference) > LAMBDA_REL_TOL * abs(reference):
                    raise InvalidConfiguration(f"Standard protocol requires lambda_{j} == lambda "
                                               f"({lam_j:.12e} vs {reference:.12e})")

    @property
    def n_pairs(self) -> int:
        return len(self.g)

    @property
    def raw_lambdas(self) -> Tuple[float, ...]:
        return tuple(g * mu / d for g, mu, d in zip(self.g, self.mu, self.delta))

    @property
    def lam(self) -> float:
        return self.target_lambda if self.target_lambda is not None else self.raw_lambdas[0]

    @property
    def pair_lambdas(self) -> Tuple[float, ...]:
        # standard mode pins every pair to the shared lambda
        if self.standard:
            return (self.lam,) * self.n_pairs
        return self.raw_lambdas

    @property
    def stark_a(self) -> Tuple[float, ...]:
        if self.standard:
            return self.pair_lambdas
        return tuple(g * g / d for g, d in zip(self.g, self.delta))

    @property
    def stark_b(self) -> Tuple[float, ...]:
        if self.standard:
            return self.pair_lambdas
        return tuple(mu * mu / d for mu, d in zip(self.mu, self.delta))

    @property
    def t_swap(self) -> float:
        return math.pi / (2.0 * self.lam)

    @property
    def t_epr(self) -> float:
        return math.pi / (4.0 * self.lam)


@dataclass(frozen=True)
class DecoherenceConfig:
    kappa_a: Tuple[float, ...]
    kappa_b: Tuple[float, ...]
    gamma: float = 0.0
    gamma_phi: float = 0.0
    sz_convention: SzConvention = SzConvention.UNHALVED

    def __post_init__(self):
        object.__setattr__(self, 'kappa_a', tuple(float(k) for k in self.kappa_a))
        object.__setattr__(self, 'kappa_b', tuple(float(k) for k in self.kappa_b))
        object.__setattr__(self, 'sz_convention', SzConvention(self.sz_convention))
        if len(self.kappa_a) != len(self.kappa_b):
            raise InvalidConfiguration("kappa_a and kappa_b must list one rate per pair")
        rates = self.kappa_a + self.kappa_b + (self.gamma, self.gamma_phi)
        if any(r < 0 or not math.isfinite(r) for r in rates):
            raise InvalidConfiguration(f"Decoherence rates must be finite and >= 0, got {rates}")

    @property
    def n_pairs(self) -> int:
        return len(self.kappa_a)

    @property
    def is_closed(self) -> bool:
        return not any(self.kappa_a + self.kappa_b + (self.gamma, self.gamma_phi))

    @classmethod
    def reference(cls, n_pairs: int, sz_convention: SzConvention = SzConvention.UNHALVED) -> 'DecoherenceConfig':
        kappa = 1.0 / DEFAULT_CAVITY_LIFETIME
        return cls((kappa,) * n_pairs, (kappa,) * n_pairs, gamma=1.0 / DEFAULT_RELAXATION_TIME,
                   gamma_phi=1.0 / DEFAULT_DEPHASING_TIME, sz_convention=sz_convention)

    @classmethod
    def closed(cls, n_pairs: int, sz_convention: SzConvention = SzConvention.UNHALVED) -> 'DecoherenceConfig':
        return cls((0.0,) * n_pairs, (0.0,) * n_pairs, sz_convention=sz_convention)


def derive_paper_parameters(b: float, delta_1: float = DEFAULT_DELTA_1, delta_2: float = DEFAULT_DELTA_2) -> ProtocolConfig:
    """
    Two-pair operating point for b = Delta_1 / g_1: g_1 = mu_1 = Delta_1 / b,
    g_2 = mu_2 = sqrt(Delta_2 / Delta_1) g_1, so that lambda = g_1^2 / Delta_1 for both pairs.
    """
    if b <= 0 or delta_1 <= 0 or delta_2 <= 0:
        raise InvalidConfiguration(f"b, delta_1 and delta_2 must be positive, got {b}, {delta_1}, {delta_2}")
    if not delta_1 > delta_2:
        raise InvalidConfiguration(f"delta_1 must exceed delta_2, got {delta_1} <= {delta_2}")
    g_1 = delta_1 / b
    g_2 = math.sqrt(delta_2 / delta_1) * g_1
    lam = g_1 * g_1 / delta_1
    return ProtocolConfig(g=(g_1, g_2), mu=(g_1, g_2), delta=(delta_1, delta_2), target_lambda=lam)


def derive_protocol(b: float, n_pairs: int, delta_1: float = DEFAULT_DELTA_1,
                    delta_2: float = DEFAULT_DELTA_2) -> ProtocolConfig:
    """
    N-pair operating point: detunings evenly spaced from delta_1 down to delta_2,
    g_j = mu_j = sqrt(Delta_j / Delta_1) Delta_1 / b. Two pairs give derive_paper_parameters.
    """
    if n_pairs < 1:
        raise InvalidConfiguration(f"n_pairs must be >= 1, got {n_pairs}")
    if n_pairs == 2:
        return derive_paper_parameters(b, delta_1, delta_2)
    if b <= 0 or delta_1 <= 0:
        raise InvalidConfiguration(f"b and delta_1 must be positive, got {b}, {delta_1}")
    if n_pairs == 1:
        deltas = (delta_1,)
    else:
        if not delta_1 > delta_2 > 0:
            raise InvalidConfiguration(f"Need delta_1 > delta_2 > 0, got {delta_1}, {delta_2}")
        deltas = tuple(delta_1 + (delta_2 - delta_1) * k / (n_pairs - 1) for k in range(n_pairs))
    g_1 = delta_1 / b
    couplings = tuple(math.sqrt(d / delta_1) * g_1 for d in deltas)
    return ProtocolConfig(g=couplings, mu=couplings, delta=deltas, target_lambda=g_1 * g_1 / delta_1)


@dataclass(frozen=True)
class ValidityReport:
    detuning_ratios: Dict[int, Tuple[float, float]]
    cross_ratios: Dict[Tuple[int, int], Tuple[float, float, float]]
    detuning_verdict: Verdict
    cross_verdict: Verdict
    verdict: Verdict
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'verdict': self.verdict.value,
            'detuning_verdict': self.detuning_verdict.value,
            'cross_verdict': self.cross_verdict.value,
            'detuning_ratios': {f"pair_{j}": {'delta_over_g': r[0], 'delta_over_mu': r[1]}
                                for j, r in self.detuning_ratios.items()},
            'cross_ratios': {f"pair_{j}_{k}": {'over_g_g': r[0], 'over_g_mu': r[1], 'over_mu_mu': r[2]}
                             for (j, k), r in self.cross_ratios.items()},
            'thresholds': {'pass': VALIDITY_PASS_RATIO, 'warn': VALIDITY_WARN_RATIO},
            'notes': list(self.notes),
        }


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return math.inf
    return numerator / denominator


def _classify(ratios: Sequence[float]) -> Verdict:
    if not ratios:
        return Verdict.PASS
    worst = min(ratios)
    if worst >= VALIDITY_PASS_RATIO:
        return Verdict.PASS
    if worst >= VALIDITY_WARN_RATIO:
        return Verdict.WARN
    return Verdict.FAIL


def check_couplings(g: Sequence[float], mu: Sequence[float], delta: Sequence[float]) -> ValidityReport:
    if not (len(g) == len(mu) == len(delta)) or len(g) == 0:
        raise InvalidConfiguration("g, mu and delta must have the same nonzero length")
    detuning_ratios = {j + 1: (_ratio(abs(delta[j]), abs(g[j])), _ratio(abs(delta[j]), abs(mu[j])))
                       for j in range(len(g))}
    cross_ratios = {}
    for j, k in itertools.combinations(range(len(g)), 2):
        if delta[j] == 0 or delta[k] == 0:
            scale = 0.0
        else:
            scale = abs(delta[j] - delta[k]) / (1.0 / delta[j] + 1.0 / delta[k])
        mixed = max(abs(g[j] * mu[k]), abs(mu[j] * g[k]))
        cross_ratios[(j + 1, k + 1)] = (_ratio(scale, abs(g[j] * g[k])), _ratio(scale, mixed),
                                        _ratio(scale, abs(mu[j] * mu[k])))

    detuning_verdict = _classify([r for pair in detuning_ratios.values() for r in pair])
    cross_verdict = _classify([r for triple in cross_ratios.values() for r in triple])
    verdict = max(detuning_verdict, cross_verdict, key=lambda v: VERDICT_SEVERITY[v])
    notes = [f"thresholds are a convention of this package: ratio >= {VALIDITY_PASS_RATIO:g} passes, "
             f">= {VALIDITY_WARN_RATIO:g} warns, below fails"]
    if detuning_verdict != Verdict.PASS:
        worst = min(r for pair in detuning_ratios.values() for r in pair)
        notes.append(f"large-detuning check is {detuning_verdict.value}: smallest Delta/g ratio is {worst:.2f}")
    if cross_verdict != Verdict.PASS:
        worst = min(r for triple in cross_ratios.values() for r in triple)
        notes.append(f"cross-pair check is {cross_verdict.value}: smallest ratio is {worst:.2f}")
    report = ValidityReport(detuning_ratios, cross_ratios, detuning_verdict, cross_verdict, verdict, notes)
    lg.debug(f"Validity verdict {verdict.value} (detuning {detuning_verdict.value}, cross {cross_verdict.value})")
    return report


def check_validity(config: ProtocolConfig) -> ValidityReport:
    return check_couplings(config.g, config.mu, config.delta)
