"""
Exact checks on the preprocessed states: secrecy against observer
coalitions and equivalence of the receiver statistics with the OIM.
"""

import itertools
import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from state_discrimination import AguStateSet, ProjectiveDilation
from state_discrimination.numerics import DEFAULT_DIMENSION_CAP, ComplexMatrix, kron_all, partial_trace

from .exceptions import ProtocolError
from .preprocessing import PreprocessMap, preprocess
from .receiver import ReceiverPovm

logger = logging.getLogger(__name__)

Coalition = Tuple[int, ...]


def coalitions(n_observers: int, exhaustive: bool = None) -> List[Coalition]:
    """
    Observer subsets whose reduced states must not depend on the message.

    Always every (N-1)-subset; every non-empty proper subset when N <= 3
    (or when exhaustive is requested).
    """
    if exhaustive is None:
        exhaustive = n_observers <= 3
    sizes = range(1, n_observers) if exhaustive else [n_observers - 1]
    return [c for size in sizes for c in itertools.combinations(range(n_observers), size)]


def secrecy_deviations(
    states: Sequence[ComplexMatrix],
    n_observers: int,
    local_dim: int
) -> Dict[Coalition, float]:
    """max_{j,k} ||Tr_{not S} rho'_j - Tr_{not S} rho'_k||_F for each coalition S."""
    if len(states) == 0:
        raise ProtocolError("No states to check")
    dims = [local_dim] * n_observers
    composite = local_dim ** n_observers
    for rho in states:
        if rho.shape != (composite, composite):
            raise ProtocolError(f"State of shape {rho.shape} is not on the {dims} composite")

    deviations = {}
    for coalition in coalitions(n_observers):
        reduced = [partial_trace(rho, dims, coalition) for rho in states]
        worst = 0.0
        for j in range(len(reduced)):
            for k in range(j + 1, len(reduced)):
                worst = max(worst, float(np.linalg.norm(reduced[j] - reduced[k])))
        deviations[coalition] = worst
    return deviations


def check_secrecy(states: Sequence[ComplexMatrix], n_observers: int, local_dim: int) -> float:
    deviations = secrecy_deviations(states, n_observers, local_dim)
    worst = max(deviations.values())
    logger.debug(f"Secrecy deviation {worst:.3e} over {len(deviations)} coalitions")
    return worst


def baseline_states(
    state_set: AguStateSet,
    dil: ProjectiveDilation,
    n_observers: int,
    dimension_cap: int = DEFAULT_DIMENSION_CAP
) -> np.ndarray:
    """
    No preprocessing: rho_m sits with observer 0 (embedded in H_ex), every
    other observer holds the ancilla |0><0|.
    """
    if n_observers < 2:
        raise ProtocolError(f"At least two observers are required, got {n_observers}")
    ancilla = np.zeros((dil.dim_ex, dil.dim_ex), dtype=complex)
    ancilla[0, 0] = 1.0
    embedded = dil.embed_states(state_set)
    return np.stack([
        kron_all([rho] + [ancilla] * (n_observers - 1), dimension_cap)
        for rho in embedded
    ])


def exact_table(states: Sequence[ComplexMatrix], rp: ReceiverPovm) -> np.ndarray:
    """P[k|m] = Tr(rho'_m Pi'_k), rows in element order, columns G then "?"."""
    return np.stack([rp.probabilities(rho) for rho in states])


def direct_table(state_set: AguStateSet, dil: ProjectiveDilation) -> np.ndarray:
    """Tr(rho_m P Omega_k P^dagger) from the dilation, same layout as exact_table."""
    embedded = dil.embed_states(state_set)
    return np.einsum("mxy,kyx->mk", embedded, dil.outcome_projectors()).real


def check_equivalence(
    state_set: AguStateSet,
    dil: ProjectiveDilation,
    pmap: PreprocessMap,
    rp: ReceiverPovm
) -> float:
    """max_{m,k} |Tr(rho'_m Pi'_k) - Tr(rho_m P Omega_k P^dagger)|"""
    if rp.dim != pmap.composite_dim or rp.group != pmap.frame.group:
        raise ProtocolError(
            f"Receiver POVM acts on dimension {rp.dim}, map outputs dimension {pmap.composite_dim}"
        )
    states = preprocess(pmap, state_set, dil)
    deviation = float(np.abs(exact_table(states, rp) - direct_table(state_set, dil)).max())
    logger.debug(f"Equivalence deviation {deviation:.3e}")
    return deviation
