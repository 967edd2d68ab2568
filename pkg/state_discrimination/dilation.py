"""
Projective dilation of a covariant inconclusive measurement.

Coordinates: H is the first D coordinates of H~ (dimension MR), which is the
first MR coordinates of H_ex (dimension 2MR). Vector columns of the dilation
are indexed (s, m, r) -> s * MR + index(m) * R + r.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from .exceptions import DilationError
from .measurement import OimSolution, Povm, validate_povm
from .numerics import (
    CHECK_TOL,
    ComplexMatrix,
    complete_onb,
    contraction_eigen,
    contraction_sqrt,
    dagger,
    default_cutoff,
    hermitian_part,
)
from .states import AguStateSet
from .symmetry import AbelianGroup, ElementLike

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProjectiveDilation:
    group: AbelianGroup
    rank: int
    dim: int
    omega: ComplexMatrix            # (2MR, 2MR), columns omega^{(s)}_{m,r}
    projection: ComplexMatrix       # P: (D, 2MR)
    projection_tilde: ComplexMatrix  # P_1: (MR, 2MR)
    lambda_op: ComplexMatrix        # Lambda on H
    lambda_pinv: ComplexMatrix
    support_projector: ComplexMatrix  # P_Lambda on H
    schatten_values: np.ndarray     # lambda_d, d < MR (padded with 1)
    schatten_vectors: ComplexMatrix  # phi_d as columns in H~
    v0: ComplexMatrix               # (MR, MR) columns v^{(0)}_{m,r}
    v1: ComplexMatrix
    phi_ex: np.ndarray              # (2, 2MR, MR) columns phi_d^{(s)}
    f0: ComplexMatrix               # (2MR, MR)
    f1: ComplexMatrix
    pi_prime: ComplexMatrix         # (D, MR) columns Lambda^+ pi_{m,r}

    @property
    def n_vectors(self) -> int:
        return self.group.order * self.rank

    @property
    def dim_ex(self) -> int:
        return 2 * self.n_vectors

    def index(self, s: int, element: ElementLike, r: int) -> int:
        return s * self.n_vectors + self.group.index(element) * self.rank + r

    def omega_vector(self, s: int, element: ElementLike, r: int) -> np.ndarray:
        return self.omega[:, self.index(s, element, r)]

    def outcome_projectors(self) -> np.ndarray:
        """(M+1, 2MR, 2MR): Omega_m in element order, then Omega_?."""
        M, R, n = self.group.order, self.rank, self.n_vectors
        projectors = []
        for m in range(M):
            cols = self.omega[:, m * R:(m + 1) * R]
            projectors.append(cols @ dagger(cols))
        fail = self.omega[:, n:]
        projectors.append(fail @ dagger(fail))
        return np.stack(projectors)

    def embed_vectors(self, state_set: AguStateSet) -> np.ndarray:
        """(M, 2MR, R) embedded state vectors P^dagger psi_{m,r}."""
        return np.einsum("xd,mdr->mxr", dagger(self.projection), state_set.vectors)

    def embed_states(self, state_set: AguStateSet) -> np.ndarray:
        return np.einsum("xd,mde,ey->mxy", dagger(self.projection), state_set.densities, self.projection)

    def onb_violation(self) -> float:
        return float(np.linalg.norm(dagger(self.omega) @ self.omega - np.eye(self.dim_ex)))


@dataclass(frozen=True)
class DilationReport:
    onb: float
    compression: float
    covariance: float
    statistics: float
    pf0: float
    pf1: float
    completeness: float
    projective: float

    def max_residual(self) -> float:
        return max(asdict(self).values())

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def _row_completion(rows: ComplexMatrix, dim: int) -> ComplexMatrix:
    """Unitary dim x dim matrix whose first rows are the given orthonormal rows."""
    return dagger(complete_onb(dagger(rows), dim))


def build_dilation(
    state_set: AguStateSet,
    oim: OimSolution,
    me: Povm,
    tol: float = CHECK_TOL
) -> ProjectiveDilation:
    """
    Lifts the covariant OIM to a projective, covariant measurement on H_ex.

    Steps: Schatten data of Lambda = (1 - Pi_?)^{1/2} padded to H~; Naimark
    completion v^{(0)} of the Parseval frame Lambda^+ pi; Naimark completion
    v^{(1)} of the minimum-error vectors; paired vectors phi_d^{(s)} with
    weights sqrt(1 - lambda_d), sqrt(lambda_d); omega^{(s)} = F_s v^{(s)}.

    Raises:
        DilationError: Non-covariant or invalid input POVM, missing
            rank-one vectors, or D > MR
    """
    group = state_set.group
    M, D, R = group.order, state_set.dim, state_set.rank
    n = M * R
    if D > n:
        raise DilationError(f"Dimension {D} exceeds MR = {n}; states cannot span the space")

    povm = oim.povm
    violation = validate_povm(povm, state_set.rep)
    if not povm.covariant or violation > tol:
        raise DilationError(f"Input OIM is not a valid covariant POVM (violation {violation:.3e})")
    if povm.vectors is None:
        raise DilationError("Input OIM lacks its rank-R vectors")
    if me.vectors is None:
        raise DilationError("Minimum-error POVM lacks its rank-one vectors")

    # Schatten decomposition of Lambda, padded to H~; the failure spectrum is
    # snapped onto 0 and 1 before any square root
    eig = contraction_eigen(povm.failure)
    sigma = np.sqrt(1.0 - eig.values)
    lambda_op = hermitian_part((eig.vectors * sigma) @ dagger(eig.vectors))
    phi = np.zeros((n, n), dtype=complex)
    phi[:D, :D] = eig.vectors
    phi[D:, D:] = np.eye(n - D)
    lam = np.ones(n)
    lam[:D] = eig.values

    # v^{(0)}: Naimark completion of pi' = Lambda^+ pi
    W = np.concatenate(list(povm.vectors), axis=1)
    support = sigma > default_cutoff(sigma, D)
    Q = eig.vectors[:, support]
    lambda_pinv = hermitian_part((Q / sigma[support]) @ dagger(Q))
    pi_prime = lambda_pinv @ W
    support_projector = Q @ dagger(Q)
    X = dagger(Q) @ pi_prime
    frame_violation = float(np.linalg.norm(X @ dagger(X) - np.eye(X.shape[0]))) if X.size else 0.0
    if frame_violation > tol * 10:
        raise DilationError(f"Filtered vectors are not a Parseval frame (violation {frame_violation:.3e})")
    Y = _row_completion(X, n) if X.size else np.eye(n, dtype=complex)
    Q_tilde = np.zeros((n, Q.shape[1]), dtype=complex)
    Q_tilde[:D] = Q
    B = complete_onb(Q_tilde, n)
    v0 = B @ Y

    # v^{(1)}: Naimark completion of the minimum-error vectors
    W_me = np.concatenate(list(me.vectors), axis=1)
    me_violation = float(np.linalg.norm(W_me @ dagger(W_me) - np.eye(D)))
    if me_violation > tol * 10:
        raise DilationError(f"Minimum-error vectors are not complete (violation {me_violation:.3e})")
    v1 = _row_completion(W_me, n)

    # phi_d^{(s)} and F_s
    phi_ex = np.zeros((2, 2 * n, n), dtype=complex)
    phi_ex[0, :n] = phi * np.sqrt(1.0 - lam)
    phi_ex[0, n:] = np.diag(np.sqrt(lam))
    phi_ex[1, :n] = phi * np.sqrt(lam)
    phi_ex[1, n:] = -np.diag(np.sqrt(1.0 - lam))
    f0 = phi_ex[0] @ dagger(phi)
    f1 = phi_ex[1] @ dagger(phi)

    omega = np.hstack([f0 @ v0, f1 @ v1])

    projection = np.zeros((D, 2 * n), dtype=complex)
    projection[:, :D] = np.eye(D)
    projection_tilde = np.zeros((n, 2 * n), dtype=complex)
    projection_tilde[:, :n] = np.eye(n)

    dilation = ProjectiveDilation(
        group=group,
        rank=R,
        dim=D,
        omega=omega,
        projection=projection,
        projection_tilde=projection_tilde,
        lambda_op=lambda_op,
        lambda_pinv=lambda_pinv,
        support_projector=support_projector,
        schatten_values=lam,
        schatten_vectors=phi,
        v0=v0,
        v1=v1,
        phi_ex=phi_ex,
        f0=f0,
        f1=f1,
        pi_prime=pi_prime
    )
    logger.info(f"Projective dilation built in dimension {dilation.dim_ex}")
    return dilation


def verify_dilation(dil: ProjectiveDilation, state_set: AguStateSet, oim: OimSolution) -> DilationReport:
    """Residuals of every identity the dilation must satisfy."""
    group = dil.group
    M, R, n, D = group.order, dil.rank, dil.n_vectors, dil.dim
    P = dil.projection
    povm = oim.povm

    onb = dil.onb_violation()

    projectors = dil.outcome_projectors()
    targets = povm.operators()
    compression = max(
        float(np.linalg.norm(P @ proj @ dagger(P) - target))
        for proj, target in zip(projectors, targets)
    )

    compressed = P @ dil.omega
    covariance = 0.0
    for s in range(2):
        for i, m in enumerate(group.elements):
            u = state_set.rep.matrices[i]
            for k in group.elements:
                mk = group.compose(m, k)
                for r in range(R):
                    lhs = compressed[:, dil.index(s, mk, r)]
                    rhs = u @ compressed[:, dil.index(s, k, r)]
                    covariance = max(covariance, float(np.linalg.norm(lhs - rhs)))

    embedded = dil.embed_vectors(state_set)
    lifted = np.einsum("mxr,kxy,myr->mk", embedded.conj(), projectors, embedded).real
    direct = np.einsum("mdr,kde,mer->mk", state_set.vectors.conj(), targets, state_set.vectors).real
    statistics = float(np.abs(lifted - direct).max())

    target_pf0 = np.zeros((D, n), dtype=complex)
    target_pf0[:, :D] = dil.lambda_op
    target_pf1 = np.zeros((D, n), dtype=complex)
    target_pf1[:, :D] = contraction_sqrt(povm.failure)
    pf0 = float(np.linalg.norm(P @ dil.f0 - target_pf0))
    pf1 = float(np.linalg.norm(P @ dil.f1 - target_pf1))

    completeness = float(np.linalg.norm(projectors.sum(axis=0) - np.eye(dil.dim_ex)))
    projective = max(float(np.linalg.norm(proj @ proj - proj)) for proj in projectors)

    report = DilationReport(
        onb=onb,
        compression=compression,
        covariance=covariance,
        statistics=statistics,
        pf0=pf0,
        pf1=pf1,
        completeness=completeness,
        projective=projective
    )
    logger.debug(f"Dilation residuals: {report.as_dict()}")
    return report
