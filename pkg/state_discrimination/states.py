"""
Abelian geometrically uniform (AGU) state sets.

rho_m = sum_r |psi_{m,r}><psi_{m,r}| with psi_{m,r} = U_m psi_{e,r} and equal
priors 1/M.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .exceptions import StateSetError, SymmetryError
from .numerics import CHECK_TOL, ComplexMatrix, as_matrix, dagger
from .symmetry import AbelianGroup, ElementLike, UnitaryRep, rep_from_generator, rep_violation_against, validate_rep

logger = logging.getLogger(__name__)

TRACE_TOL = 1e-10


@dataclass(frozen=True)
class AguStateSet:
    group: AbelianGroup
    rep: UnitaryRep
    seed_vectors: ComplexMatrix     # D x R
    vectors: np.ndarray             # (M, D, R), vectors[m][:, r] = psi_{m,r}
    densities: np.ndarray           # (M, D, D)
    linearly_independent: bool
    spans_space: bool

    @property
    def n_states(self) -> int:
        return self.group.order

    @property
    def dim(self) -> int:
        return self.rep.dim

    @property
    def rank(self) -> int:
        return self.seed_vectors.shape[1]

    @property
    def is_pure(self) -> bool:
        return self.rank == 1

    @property
    def priors(self) -> np.ndarray:
        return np.full(self.n_states, 1.0 / self.n_states)

    def state(self, element: ElementLike) -> ComplexMatrix:
        return self.densities[self.group.index(element)]

    def vector(self, element: ElementLike, r: int = 0) -> np.ndarray:
        return self.vectors[self.group.index(element)][:, r]

    def all_vectors(self) -> ComplexMatrix:
        """D x MR matrix, columns in (m, r) order."""
        return np.concatenate(list(self.vectors), axis=1)

    def average_state(self) -> ComplexMatrix:
        return self.densities.mean(axis=0)

    def ensemble_operator(self) -> ComplexMatrix:
        """S = sum_{m,r} |psi_{m,r}><psi_{m,r}|."""
        psi = self.all_vectors()
        return psi @ dagger(psi)

    def covariance_violation(self) -> float:
        return rep_violation_against(self.rep, list(self.densities))


def make_agu_set(
    group: AbelianGroup,
    rep: UnitaryRep,
    seed_vectors,
    tol: float = CHECK_TOL
) -> AguStateSet:
    """
    Builds the orbit of the seed vectors under the representation.

    Args:
        group: Symmetry group
        rep: Representation of group in dimension D
        seed_vectors: D x R matrix (columns), or a sequence of R vectors

    Returns:
        AguStateSet with the linear independence and spanning flags set

    Raises:
        StateSetError: rep/group mismatch, invalid rep, wrong dimensions,
            trace of rho_e not 1, or dependent seed vectors
    """
    if rep.group != group:
        raise StateSetError(f"Representation is for orders {rep.group.orders}, not {group.orders}")
    violation = validate_rep(rep)
    if violation > tol:
        raise StateSetError(f"Representation invalid (violation {violation:.3e})")

    if isinstance(seed_vectors, (list, tuple)):
        seeds = np.column_stack([np.asarray(v, dtype=complex).ravel() for v in seed_vectors])
    else:
        seeds = as_matrix(seed_vectors, "seed_vectors")
    if seeds.shape[0] != rep.dim:
        raise StateSetError(
            f"Seed vectors have length {seeds.shape[0]}, representation dimension is {rep.dim}"
        )

    trace = float(np.sum(np.abs(seeds) ** 2))
    if abs(trace - 1.0) > TRACE_TOL:
        raise StateSetError(f"Seed state must have unit trace, got {trace:.12f}")

    R = seeds.shape[1]
    seed_singular = sla.svdvals(seeds)
    if int(np.sum(seed_singular > tol)) != R:
        raise StateSetError(f"The {R} seed vectors must be linearly independent")

    vectors = np.stack([u @ seeds for u in rep.matrices])
    densities = np.einsum("mdr,mer->mde", vectors, vectors.conj())

    all_vectors = np.concatenate(list(vectors), axis=1)
    singular = sla.svdvals(all_vectors)
    span_rank = int(np.sum(singular > tol))
    linearly_independent = span_rank == all_vectors.shape[1]
    spans_space = span_rank == rep.dim

    if not spans_space:
        logger.warning(
            f"States span a {span_rank}-dimensional subspace of the {rep.dim}-dimensional space"
        )

    state_set = AguStateSet(
        group=group,
        rep=rep,
        seed_vectors=seeds,
        vectors=vectors,
        densities=densities,
        linearly_independent=linearly_independent,
        spans_space=spans_space
    )
    logger.debug(
        f"AGU set: M={group.order}, D={rep.dim}, R={R}, "
        f"independent={linearly_independent}, spanning={spans_space}"
    )
    return state_set


def _generator_order(V: ComplexMatrix, limit: int, tol: float) -> int:
    power = np.eye(V.shape[0], dtype=complex)
    for m in range(1, limit + 1):
        power = power @ V
        if np.linalg.norm(power - np.eye(V.shape[0])) <= tol:
            return m
    raise StateSetError(f"V has no finite order up to {limit}")


def make_cyclic_pure_set(
    V,
    psi0,
    M: Optional[int] = None,
    tol: float = CHECK_TOL
) -> AguStateSet:
    """
    Pure cyclic set psi_m = V^m psi_0.

    M defaults to the order of V.

    Raises:
        StateSetError: psi0 not normalized or V not of order M
    """
    V = as_matrix(V, "V")
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    norm = float(np.linalg.norm(psi0))
    if abs(norm - 1.0) > TRACE_TOL:
        raise StateSetError(f"psi0 must have unit norm, got {norm:.12f}")
    if M is None:
        M = _generator_order(V, limit=64, tol=tol)
    try:
        rep = rep_from_generator(V, M, tol)
    except SymmetryError as e:
        raise StateSetError(str(e)) from e
    return make_agu_set(rep.group, rep, psi0.reshape(-1, 1), tol)


def gram(state_set: AguStateSet) -> ComplexMatrix:
    """G[j, k] = <psi_j|psi_k> for a pure set."""
    if not state_set.is_pure:
        raise StateSetError(f"Gram matrix requires a pure set, got rank {state_set.rank}")
    psi = state_set.all_vectors()
    return dagger(psi) @ psi
