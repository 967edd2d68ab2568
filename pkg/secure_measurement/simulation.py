"""
Sampling of the protocol: Monte Carlo runs of the honest receiver and
attacks by observer coalitions.

Every random draw comes from a Philox stream derived from (rng_seed, purpose,
index) so that runs are reproducible independently of evaluation order.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from state_discrimination.numerics import CHECK_TOL, ComplexMatrix, haar_unitary, partial_trace, unitarity_violation
from state_discrimination.symmetry import ElementLike
from state_discrimination.utils import max_pairwise_tv, parse_complex_matrix, total_variation

from .exceptions import ProtocolError

if TYPE_CHECKING:
    from .pipeline import SecureMeasurementPipeline

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.random.Philox"

MONTE_CARLO_STREAM = 0
ATTACK_MEASUREMENT_STREAM = 1
ATTACK_SAMPLING_STREAM = 2


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))


def sample_counts(distribution: np.ndarray, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Counts of trials draws from a (possibly slightly unnormalized) distribution."""
    p = np.clip(np.asarray(distribution, dtype=float), 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ProtocolError("Cannot sample from an all-zero distribution")
    indices = rng.choice(p.size, size=trials, p=p / total)
    return np.bincount(indices, minlength=p.size)


# ============================================================================
# Monte Carlo
# ============================================================================

@dataclass(frozen=True)
class MonteCarloResult:
    message: Tuple[int, ...]
    trials: int
    counts: np.ndarray              # receiver outcomes, G then "?"
    exact: np.ndarray
    observer_counts: Dict[Tuple, int]

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.trials

    @property
    def standard_errors(self) -> np.ndarray:
        f = self.frequencies
        return np.sqrt(f * (1.0 - f) / self.trials)

    @property
    def tv_distance(self) -> float:
        return total_variation(self.frequencies, self.exact)

    def max_sigma_deviation(self) -> float:
        """Largest |f - P| in units of sqrt(P(1-P)/trials); inf if an impossible outcome occurred."""
        sigma = np.sqrt(self.exact * (1.0 - self.exact) / self.trials)
        diff = np.abs(self.frequencies - self.exact)
        worst = 0.0
        for d, s in zip(diff, sigma):
            if s > 0:
                worst = max(worst, d / s)
            elif d > CHECK_TOL:
                return float("inf")
        return worst


def monte_carlo(
    pipeline: "SecureMeasurementPipeline",
    m: ElementLike,
    trials: int,
    rng_seed: int
) -> MonteCarloResult:
    """
    Samples the observers' product-basis outcomes for message m and decodes them.

    Raises:
        ProtocolError: trials < 1
    """
    if trials < 1:
        raise ProtocolError(f"Monte Carlo needs at least one trial, got {trials}")
    group = pipeline.state_set.group
    m_idx = group.index(m)
    receiver = pipeline.receiver
    rho = pipeline.states[m_idx]

    rng = make_rng(rng_seed, MONTE_CARLO_STREAM, m_idx)
    basis_counts = sample_counts(receiver.outcome_distribution(rho), trials, rng)
    counts = np.bincount(receiver.assignment, weights=basis_counts, minlength=receiver.n_outcomes).astype(np.int64)

    observer_counts = {}
    for index in np.flatnonzero(basis_counts):
        observer_counts[tuple(receiver.labels(index))] = int(basis_counts[index])

    result = MonteCarloResult(
        message=group.elements[m_idx],
        trials=trials,
        counts=counts,
        exact=receiver.probabilities(rho),
        observer_counts=observer_counts
    )
    logger.debug(f"Monte Carlo m={group.label(result.message)}: counts {counts.tolist()}")
    return result


# ============================================================================
# Attack simulation
# ============================================================================

@dataclass(frozen=True)
class AttackResult:
    subset: Tuple[int, ...]
    strategy: str
    exact_tv: float
    empirical_tv: Optional[float]
    trials: int
    distributions: np.ndarray       # (M, d_S) exact outcome distributions


def validate_subset(subset: Sequence[int], n_observers: int) -> Tuple[int, ...]:
    """
    Raises:
        ProtocolError: Empty subset, indices out of range or duplicated, or all observers
    """
    subset = tuple(int(n) for n in subset)
    if not subset:
        raise ProtocolError("Attack subset must not be empty")
    if len(set(subset)) != len(subset) or any(not 0 <= n < n_observers for n in subset):
        raise ProtocolError(f"Invalid observer subset {subset} for {n_observers} observers")
    if len(subset) == n_observers:
        raise ProtocolError("All observers together are the receiver, not an attack")
    return tuple(sorted(subset))


def load_measurement(path: Union[str, Path]) -> ComplexMatrix:
    """Reads a unitary (columns = measurement basis) with [re, im] entries from YAML/JSON."""
    path = Path(path)
    if not path.exists():
        raise ProtocolError(f"Measurement file not found: {path}")
    with open(path) as f:
        data = yaml.safe_load(f)
    if isinstance(data, dict):
        data = data.get("basis", data.get("matrix"))
    try:
        return parse_complex_matrix(data)
    except ValueError as e:
        raise ProtocolError(f"{path}: {e}") from e


def attack_states(
    states: Sequence[ComplexMatrix],
    dims: Sequence[int],
    subset: Sequence[int],
    measurement: ComplexMatrix,
    trials: int = 0,
    rng: Optional[np.random.Generator] = None
) -> Tuple[np.ndarray, float, Optional[float]]:
    """
    Outcome distributions of a coalition measuring its reduced states in the
    columns of the given unitary.

    Returns:
        (distributions, exact max pairwise TV, empirical max pairwise TV or None)
    """
    dims = list(dims)
    subset = validate_subset(subset, len(dims))
    reduced_dim = int(np.prod([dims[n] for n in subset]))
    if measurement.shape != (reduced_dim, reduced_dim) or unitarity_violation(measurement) > CHECK_TOL:
        raise ProtocolError(f"Attack measurement must be a {reduced_dim}x{reduced_dim} unitary")

    distributions = []
    for rho in states:
        reduced = partial_trace(rho, dims, subset)
        diag = np.einsum("ji,jk,ki->i", measurement.conj(), reduced, measurement).real
        distributions.append(np.clip(diag, 0.0, None))
    distributions = np.stack(distributions)
    exact = max_pairwise_tv(list(distributions))

    empirical = None
    if trials > 0:
        if rng is None:
            raise ProtocolError("Sampling an attack requires an rng")
        frequencies = [sample_counts(d, trials, rng) / trials for d in distributions]
        empirical = max_pairwise_tv(frequencies)
    return distributions, exact, empirical


def attack_sim(
    pipeline: "SecureMeasurementPipeline",
    subset: Sequence[int],
    strategy: Union[str, ComplexMatrix] = "random",
    trials: int = 0,
    rng_seed: int = 0
) -> AttackResult:
    """
    Leakage seen by a coalition of observers.

    strategy is "random" (Haar unitary on the coalition's joint system),
    "file:<path>" (unitary read from disk) or a unitary matrix.
    """
    pmap = pipeline.pmap
    subset = validate_subset(subset, pmap.n_observers)
    reduced_dim = pmap.local_dim ** len(subset)

    if isinstance(strategy, str) and strategy == "random":
        measurement = haar_unitary(reduced_dim, make_rng(rng_seed, ATTACK_MEASUREMENT_STREAM, *subset))
        label = "random"
    elif isinstance(strategy, str) and strategy.startswith("file:"):
        measurement = load_measurement(strategy[len("file:"):])
        label = strategy
    elif isinstance(strategy, str):
        raise ProtocolError(f"Unknown attack strategy '{strategy}' (use 'random' or 'file:<path>')")
    else:
        measurement = np.asarray(strategy, dtype=complex)
        label = "explicit"

    rng = make_rng(rng_seed, ATTACK_SAMPLING_STREAM, *subset)
    distributions, exact, empirical = attack_states(
        pipeline.states, pmap.dims, subset, measurement, trials, rng
    )
    logger.info(f"Attack by observers {list(subset)} ({label}): exact TV {exact:.3e}")
    return AttackResult(
        subset=subset,
        strategy=label,
        exact_tv=exact,
        empirical_tv=empirical,
        trials=trials,
        distributions=distributions
    )
