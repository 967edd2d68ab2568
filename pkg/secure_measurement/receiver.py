"""
Receiver side of the protocol: every observer measures in its local ONB and
announces (s_n, t_n, r_n); the receiver decodes the announced tuple.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple, Union

import numpy as np

from state_discrimination import FAILURE, AbelianGroup, Povm
from state_discrimination.exceptions import SymmetryError
from state_discrimination.numerics import ComplexMatrix, kron_all, unitarity_violation
from state_discrimination.symmetry import Element

from .exceptions import ProtocolError
from .preprocessing import LocalFrame, OutcomeLabel, PreprocessMap

logger = logging.getLogger(__name__)

ReceiverOutcome = Union[Element, str]


@dataclass(frozen=True)
class Decoded:
    outcome: ReceiverOutcome
    r_labels: Tuple[int, ...]

    @property
    def failed(self) -> bool:
        return isinstance(self.outcome, str) and self.outcome == FAILURE


def decode(outcomes: Sequence[Sequence], group: AbelianGroup) -> Decoded:
    """
    k = t_0 o ... o t_{N-1} if the parities s_n add up to 0 and every
    observer reports the same r, otherwise "?".

    Raises:
        ProtocolError: Fewer than two outcomes, or a malformed triple
    """
    if len(outcomes) < 2:
        raise ProtocolError(f"Expected one outcome per observer (at least 2), got {len(outcomes)}")
    parity = 0
    elements = []
    r_labels = []
    for n, triple in enumerate(outcomes):
        try:
            s, t, r = triple
        except (TypeError, ValueError) as e:
            raise ProtocolError(f"Observer {n}: outcome must be an (s, t, r) triple, got {triple!r}") from e
        if s not in (0, 1):
            raise ProtocolError(f"Observer {n}: s-label must be 0 or 1, got {s!r}")
        if not isinstance(r, (int, np.integer)) or r < 0:
            raise ProtocolError(f"Observer {n}: r-label must be a non-negative integer, got {r!r}")
        try:
            elements.append(group.normalize(t))
        except (SymmetryError, TypeError, ValueError) as e:
            raise ProtocolError(f"Observer {n}: invalid group element {t!r}") from e
        parity ^= int(s)
        r_labels.append(int(r))

    if parity != 0 or len(set(r_labels)) != 1:
        return Decoded(outcome=FAILURE, r_labels=tuple(r_labels))
    return Decoded(outcome=group.compose_all(elements), r_labels=tuple(r_labels))


@dataclass(frozen=True, eq=False)
class ReceiverPovm:
    """
    Pi'_k and Pi'_? stored as the receiver outcome of each product-basis
    vector. assignment[i] is the outcome index (element order, M for "?")
    of the i-th product basis vector in Kronecker order.
    """

    frame: LocalFrame
    assignment: np.ndarray

    @property
    def group(self) -> AbelianGroup:
        return self.frame.group

    @property
    def n_outcomes(self) -> int:
        return self.group.order + 1

    @property
    def dim(self) -> int:
        return self.frame.composite_dim

    @cached_property
    def product_basis(self) -> ComplexMatrix:
        """Kronecker product of the local bases; built only for operator()."""
        return kron_all(self.frame.bases, max(self.dim, 1))

    def labels(self, index: int) -> List[OutcomeLabel]:
        local = np.unravel_index(int(index), [self.frame.local_dim] * self.frame.n_observers)
        return [self.frame.label(i) for i in local]

    def operator(self, outcome) -> ComplexMatrix:
        if isinstance(outcome, str) and outcome == FAILURE:
            idx = self.group.order
        else:
            idx = self.group.index(outcome)
        cols = self.product_basis[:, self.assignment == idx]
        return cols @ cols.conj().T

    def operators(self) -> np.ndarray:
        outcomes = list(self.group.elements) + [FAILURE]
        return np.stack([self.operator(k) for k in outcomes])

    def as_povm(self) -> Povm:
        ops = self.operators()
        return Povm(group=self.group, conclusive=ops[:-1], failure=ops[-1])

    def validity_violation(self) -> float:
        """
        Bound on the POVM violation without building it: the product basis
        is orthonormal up to the summed local unitarity violations, and
        every product vector carries exactly one outcome.
        """
        outcomes = self.assignment
        if outcomes.shape != (self.dim,) or outcomes.min() < 0 or outcomes.max() >= self.n_outcomes:
            return float("inf")
        return float(sum(unitarity_violation(basis) for basis in self.frame.bases))

    def outcome_distribution(self, rho: ComplexMatrix) -> np.ndarray:
        """<basis_i|rho|basis_i> over the product basis, one local basis at a time."""
        N, d = self.frame.n_observers, self.frame.local_dim
        tensor = np.asarray(rho, dtype=complex).reshape([d] * (2 * N))
        identity = np.eye(d)
        for n, basis in enumerate(self.frame.bases):
            if np.array_equal(basis, identity):
                continue
            tensor = np.moveaxis(np.tensordot(basis.conj().T, tensor, axes=([1], [n])), 0, n)
            tensor = np.moveaxis(np.tensordot(tensor, basis, axes=([N + n], [0])), -1, N + n)
        diag = np.diagonal(tensor.reshape(self.dim, self.dim)).real
        return np.clip(diag, 0.0, None)

    def probabilities(self, rho: ComplexMatrix) -> np.ndarray:
        """Tr(rho Pi'_k) in outcome order."""
        return np.bincount(self.assignment, weights=self.outcome_distribution(rho), minlength=self.n_outcomes)


def receiver_povm(pmap: PreprocessMap) -> ReceiverPovm:
    frame = pmap.frame
    group = frame.group
    labels = [frame.label(i) for i in range(frame.local_dim)]
    assignment = np.empty(frame.composite_dim, dtype=np.int64)
    for flat, combo in enumerate(itertools.product(labels, repeat=frame.n_observers)):
        decoded = decode(combo, group)
        assignment[flat] = group.order if decoded.failed else group.index(decoded.outcome)
    logger.debug(
        f"Receiver POVM over {frame.composite_dim} product outcomes, "
        f"{int(np.sum(assignment == group.order))} assigned to failure"
    )
    return ReceiverPovm(frame=frame, assignment=assignment)
