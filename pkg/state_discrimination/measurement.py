"""
POVMs over G u {?}, minimum-error detection and optimal inconclusive
measurements (OIM) for AGU state sets.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg as sla
from scipy.optimize import minimize

from .exceptions import MeasurementError
from .numerics import (
    CHECK_TOL,
    ComplexMatrix,
    as_square,
    contraction_eigen,
    dagger,
    herm_eigen,
    hermitian_part,
    psd_inverse_sqrt,
)
from .states import AguStateSet
from .symmetry import (
    AbelianGroup,
    CharacterBasis,
    ElementLike,
    UnitaryRep,
    character_basis,
    isotypic_projector,
    rep_violation_against,
)

logger = logging.getLogger(__name__)

FAILURE = "?"
ME_TOL = 1e-8
CONSTRAINT_TOL = 1e-6

Outcome = Union[ElementLike, str]


@dataclass(frozen=True)
class Povm:
    """
    Detection operators for the outcomes G (in element order) followed by "?".

    vectors holds the rank-R factors pi_{m,r} (shape (M, D, R)) when the
    conclusive operators are known to be Pi_m = sum_r |pi_{m,r}><pi_{m,r}|.
    """

    group: AbelianGroup
    conclusive: np.ndarray          # (M, D, D)
    failure: ComplexMatrix          # (D, D)
    vectors: Optional[np.ndarray] = None
    covariant: bool = False

    @property
    def dim(self) -> int:
        return self.failure.shape[0]

    @property
    def outcome_labels(self) -> List[str]:
        return [self.group.label(m) for m in self.group.elements] + [FAILURE]

    def operator(self, outcome: Outcome) -> ComplexMatrix:
        if isinstance(outcome, str) and outcome == FAILURE:
            return self.failure
        return self.conclusive[self.group.index(outcome)]

    def operators(self) -> np.ndarray:
        """(M+1, D, D) stack in outcome order."""
        return np.concatenate([self.conclusive, self.failure[None]], axis=0)


@dataclass(frozen=True)
class MinimumErrorResult:
    povm: Povm
    residual: float
    method: str
    iterations: int = 0


@dataclass(frozen=True)
class DominanceResult:
    draws: int
    p: float
    max_excess: float
    best_random_correct: float

    @property
    def passed(self) -> bool:
        return self.max_excess <= CONSTRAINT_TOL


@dataclass
class OimCertificate:
    method: str
    restarts: int = 0
    feasible_candidates: int = 0
    me_residual: Optional[float] = None
    dominance: Optional[DominanceResult] = None


@dataclass(frozen=True)
class OimSolution:
    povm: Povm
    lam: np.ndarray
    p_target: float
    p_achieved: float
    correct_prob: float
    certificate: OimCertificate


# ============================================================================
# Validity and statistics
# ============================================================================

def validate_povm(povm: Povm, rep: Optional[UnitaryRep] = None) -> float:
    """Largest completeness, Hermiticity/PSD or covariance violation."""
    ops = povm.operators()
    dim = povm.dim
    violation = float(np.linalg.norm(ops.sum(axis=0) - np.eye(dim)))
    for op in ops:
        violation = max(violation, float(np.linalg.norm(op - dagger(op))))
        smallest = float(np.linalg.eigvalsh(hermitian_part(op)).min())
        violation = max(violation, -smallest)
    if rep is not None:
        violation = max(violation, rep_violation_against(rep, list(povm.conclusive)))
        fail = povm.failure
        for u in rep.matrices:
            violation = max(violation, float(np.linalg.norm(fail - u @ fail @ dagger(u))))
    return violation


def outcome_probs(state_set: AguStateSet, povm: Povm) -> np.ndarray:
    """
    P[m, x] = Tr(rho_m Pi_x), outcomes x in element order then "?".

    Raises:
        MeasurementError: Dimension mismatch
    """
    if povm.dim != state_set.dim:
        raise MeasurementError(f"POVM dimension {povm.dim} does not match state dimension {state_set.dim}")
    if povm.group.order != state_set.n_states:
        raise MeasurementError("POVM outcome set does not match the state set")
    table = np.einsum("mij,xji->mx", state_set.densities, povm.operators()).real
    table[(table < 0) & (table >= -1e-10)] = 0.0
    return table


def avg_correct(state_set: AguStateSet, povm: Povm) -> float:
    table = outcome_probs(state_set, povm)
    M = state_set.n_states
    return float(np.trace(table[:, :M]) / M)


def avg_failure(state_set: AguStateSet, povm: Povm) -> float:
    table = outcome_probs(state_set, povm)
    return float(table[:, -1].mean())


# ============================================================================
# Minimum-error detection
# ============================================================================

def _povm_from_vectors(
    state_set: AguStateSet,
    pi_vectors: np.ndarray,
    complement: Optional[ComplexMatrix] = None
) -> Povm:
    conclusive = np.einsum("mdr,mer->mde", pi_vectors, pi_vectors.conj())
    vectors = pi_vectors
    if complement is not None:
        conclusive = conclusive + complement[None] / state_set.n_states
        vectors = None
    dim = state_set.dim
    return Povm(
        group=state_set.group,
        conclusive=conclusive,
        failure=np.zeros((dim, dim), dtype=complex),
        vectors=vectors,
        covariant=True
    )


def srm(state_set: AguStateSet) -> Povm:
    """
    Square-root measurement pi_{m,r} = S^{+1/2} psi_{m,r}.

    When the states do not span the space, the complement of their span is
    shared equally by the conclusive operators; the rank-one factors are
    then dropped.
    """
    S = state_set.ensemble_operator()
    T = psd_inverse_sqrt(S)
    pi_vectors = np.einsum("de,mer->mdr", T, state_set.vectors)
    complement = None
    if not state_set.spans_space:
        support = T @ S @ T
        complement = hermitian_part(np.eye(state_set.dim) - support)
    return _povm_from_vectors(state_set, pi_vectors, complement)


def check_me_optimality(state_set: AguStateSet, povm: Povm, tol: float = CHECK_TOL) -> float:
    """
    Residual of the minimum-error optimality conditions.

    Y = sum_k xi_k rho_k Pi_k (Hermitian part); the residual is the largest
    negative eigenvalue magnitude of Y - xi_m rho_m over m.

    Raises:
        MeasurementError: POVM has a nonzero "?" operator
    """
    if np.linalg.norm(povm.failure) > tol:
        raise MeasurementError("Minimum-error certificate requires Pi_? = 0")
    xi = 1.0 / state_set.n_states
    Y = hermitian_part(xi * np.einsum("kij,kjl->il", state_set.densities, povm.conclusive))
    residual = 0.0
    for rho in state_set.densities:
        smallest = float(np.linalg.eigvalsh(hermitian_part(Y - xi * rho)).min())
        residual = max(residual, -smallest)
    return residual


def _covariant_orbit(state_set: AguStateSet, pi_e: ComplexMatrix) -> np.ndarray:
    return np.stack([u @ pi_e @ dagger(u) for u in state_set.rep.matrices])


def _rank_factors(state_set: AguStateSet, pi_e: ComplexMatrix) -> np.ndarray:
    eig = herm_eigen(hermitian_part(pi_e))
    R = state_set.rank
    factor = eig.vectors[:, :R] * np.sqrt(np.clip(eig.values[:R], 0.0, None))
    return np.stack([u @ factor for u in state_set.rep.matrices])


def refine_minimum_error(
    state_set: AguStateSet,
    povm: Povm,
    max_iter: int = 10000,
    tol: float = ME_TOL
) -> Tuple[Povm, int]:
    """
    Iterative covariant refinement Pi_m <- R^{-1/2} rho_m Pi_m rho_m R^{-1/2}
    with R = sum_k rho_k Pi_k rho_k. Each step keeps the POVM complete,
    covariant and of rank at most R.
    """
    conclusive = povm.conclusive.copy()
    iterations = 0
    for iterations in range(1, max_iter + 1):
        weighted = np.einsum("kij,kjl,klm->kim", state_set.densities, conclusive, state_set.densities)
        T = psd_inverse_sqrt(hermitian_part(weighted.sum(axis=0)))
        pi_e = hermitian_part(T @ weighted[0] @ T)
        conclusive = _covariant_orbit(state_set, pi_e)
        if iterations % 25 == 0:
            candidate = Povm(
                group=state_set.group,
                conclusive=conclusive,
                failure=np.zeros_like(povm.failure),
                covariant=True
            )
            if check_me_optimality(state_set, candidate) <= tol:
                break

    vectors = _rank_factors(state_set, conclusive[0]) if state_set.spans_space else None
    refined = Povm(
        group=state_set.group,
        conclusive=conclusive,
        failure=np.zeros_like(povm.failure),
        vectors=vectors,
        covariant=True
    )
    return refined, iterations


def minimum_error(state_set: AguStateSet, tol: float = ME_TOL) -> MinimumErrorResult:
    """SRM with its optimality certificate; refines iteratively if it fails."""
    povm = srm(state_set)
    residual = check_me_optimality(state_set, povm)
    if residual <= tol:
        logger.debug(f"SRM certified minimum-error optimal (residual {residual:.2e})")
        return MinimumErrorResult(povm=povm, residual=residual, method="srm")

    logger.warning(f"SRM certificate residual {residual:.2e} exceeds {tol:.0e}; refining")
    refined, iterations = refine_minimum_error(state_set, povm, tol=tol)
    refined_residual = check_me_optimality(state_set, refined)
    logger.info(f"Refinement finished after {iterations} iterations (residual {refined_residual:.2e})")
    return MinimumErrorResult(
        povm=refined,
        residual=refined_residual,
        method="srm+refinement",
        iterations=iterations
    )


# ============================================================================
# Optimal inconclusive measurement
# ============================================================================

def filtered_srm(state_set: AguStateSet, failure_op) -> Povm:
    """
    Pi_k = Lambda S_k Lambda, where Lambda = (1 - Pi_?)^{1/2} and S_k is the
    SRM of the filtered ensemble {Lambda psi_{m,r}}.

    The spectrum of Pi_? is snapped onto 0 and 1 and Pi_? is kept as given;
    for a spanning set the filtered vectors span the support of Lambda, so
    sum_k Pi_k = Lambda^2 = 1 - Pi_?.
    """
    eig = contraction_eigen(as_square(failure_op, "failure operator"))
    failure = hermitian_part(eig.reconstruct())
    lam = hermitian_part((eig.vectors * np.sqrt(1.0 - eig.values)) @ dagger(eig.vectors))
    filtered = np.einsum("de,mer->mdr", lam, state_set.vectors)
    flat = np.concatenate(list(filtered), axis=1)
    T = psd_inverse_sqrt(flat @ dagger(flat))
    pi_vectors = np.einsum("de,ef,mfr->mdr", lam, T, filtered)
    conclusive = np.einsum("mdr,mer->mde", pi_vectors, pi_vectors.conj())
    return Povm(
        group=state_set.group,
        conclusive=conclusive,
        failure=failure,
        vectors=pi_vectors,
        covariant=True
    )


def _filtered_correct(state_set: AguStateSet, failure_op: ComplexMatrix) -> float:
    povm = filtered_srm(state_set, failure_op)
    rho_e = state_set.densities[0]
    return float(np.trace(rho_e @ povm.conclusive[0]).real)


def _seed_components(state_set: AguStateSet, basis: CharacterBasis) -> np.ndarray:
    return dagger(basis.vectors) @ state_set.seed_vectors[:, 0]


def _water_level(a: np.ndarray, budget: float) -> float:
    """tau with sum_k min(a_k, tau)^2 = budget."""
    ordered = np.sort(a)
    n = len(ordered)
    clamped = 0.0
    for j, a_j in enumerate(ordered):
        tau = np.sqrt(max(budget - clamped, 0.0) / (n - j))
        if tau <= a_j:
            return float(tau)
        clamped += a_j ** 2
    return float(ordered[-1])


def water_filling(state_set: AguStateSet, basis: CharacterBasis, p: float) -> np.ndarray:
    """
    Closed-form failure spectrum for pure, multiplicity-free sets.

    With a_k = |c_k| the seed components in the character basis, the
    filtered components x_k = min(a_k, tau) satisfy sum x_k^2 = 1 - p and
    lambda_k = 1 - x_k^2 / a_k^2.
    """
    a = np.abs(_seed_components(state_set, basis))
    if np.any(a <= CHECK_TOL):
        raise MeasurementError("Seed has a vanishing character component; states do not span")
    tau = _water_level(a, 1.0 - p)
    x = np.minimum(a, tau)
    return np.clip(1.0 - (x / a) ** 2, 0.0, 1.0)


class _BlockParameterization:
    """
    Pi_? = sum_b Phi_b W_b diag(lambda_b) W_b^dagger Phi_b^dagger with
    W_b = expm(i H_b) over each character block of the commutant.
    """

    def __init__(self, basis: CharacterBasis):
        self.basis = basis
        self.blocks = list(basis.blocks().values())
        self.dim = basis.vectors.shape[0]
        self.n_generators = sum(len(b) ** 2 for b in self.blocks if len(b) > 1)

    @property
    def size(self) -> int:
        return self.dim + self.n_generators

    def bounds(self) -> List[Tuple[Optional[float], Optional[float]]]:
        return [(0.0, 1.0)] * self.dim + [(None, None)] * self.n_generators

    def _hermitian(self, params: np.ndarray, n: int) -> ComplexMatrix:
        h = np.zeros((n, n), dtype=complex)
        h[np.diag_indices(n)] = params[:n]
        upper = np.triu_indices(n, k=1)
        count = len(upper[0])
        values = params[n:n + count] + 1j * params[n + count:n + 2 * count]
        h[upper] = values
        h[(upper[1], upper[0])] = values.conj()
        return h

    def failure(self, params: np.ndarray) -> ComplexMatrix:
        lam = np.clip(params[:self.dim], 0.0, 1.0)
        offset = self.dim
        failure = np.zeros((self.dim, self.dim), dtype=complex)
        position = 0
        for block in self.blocks:
            n = len(block)
            lam_b = lam[position:position + n]
            position += n
            if n > 1:
                w = sla.expm(1j * self._hermitian(params[offset:offset + n * n], n))
                offset += n * n
                inner = (w * lam_b) @ dagger(w)
            else:
                inner = np.diag(lam_b)
            phi = self.basis.vectors[:, block]
            failure += phi @ inner @ dagger(phi)
        return hermitian_part(failure)

    def spectrum(self, params: np.ndarray) -> np.ndarray:
        return np.clip(params[:self.dim], 0.0, 1.0)

    def uniform(self, p: float) -> np.ndarray:
        x = np.zeros(self.size)
        x[:self.dim] = p
        return x


def _optimize_failure(
    state_set: AguStateSet,
    basis: CharacterBasis,
    p: float,
    restarts: int,
    rng_seed: int
) -> Tuple[ComplexMatrix, np.ndarray, OimCertificate]:
    param = _BlockParameterization(basis)
    rho_bar = state_set.average_state()

    def failure_prob(x):
        return float(np.trace(rho_bar @ param.failure(x)).real)

    def objective(x):
        return -_filtered_correct(state_set, param.failure(x))

    constraints = [{"type": "eq", "fun": lambda x: failure_prob(x) - p}]
    rng = np.random.Generator(np.random.Philox(rng_seed))

    starts = [param.uniform(p)]
    for _ in range(restarts):
        x0 = np.empty(param.size)
        x0[:param.dim] = rng.uniform(0.0, 1.0, param.dim)
        x0[param.dim:] = rng.normal(0.0, 1.0, param.n_generators)
        starts.append(x0)

    candidates = [(-objective(starts[0]), starts[0])]
    for i, x0 in enumerate(starts):
        result = minimize(
            objective,
            x0,
            method="SLSQP",
            bounds=param.bounds(),
            constraints=constraints,
            options={"maxiter": 300, "ftol": 1e-13}
        )
        x = np.array(result.x, dtype=float)
        x[:param.dim] = np.clip(x[:param.dim], 0.0, 1.0)
        gap = abs(failure_prob(x) - p)
        logger.debug(f"OIM start {i}: success={result.success}, correct={-result.fun:.10f}, gap={gap:.2e}")
        if gap <= CONSTRAINT_TOL / 10:
            candidates.append((-objective(x), x))

    def rank_key(candidate):
        correct, x = candidate
        lam = param.spectrum(x)
        return (-round(correct, 9), round(float(np.linalg.norm(lam)), 12), tuple(np.round(lam, 12)))

    best_correct, best_x = min(candidates, key=rank_key)
    certificate = OimCertificate(
        method="slsqp",
        restarts=restarts,
        feasible_candidates=len(candidates)
    )
    failure = param.failure(best_x)
    lam = contraction_eigen(failure).values
    logger.debug(f"OIM numerical optimum {best_correct:.10f} from {len(candidates)} feasible candidates")
    return failure, lam, certificate


def scaled_minimum_error(povm: Povm, p: float) -> Povm:
    """(1 - p) Pi_m with Pi_? = p 1: fails with probability p on every state."""
    dim = povm.dim
    vectors = None if povm.vectors is None else np.sqrt(1.0 - p) * povm.vectors
    return Povm(
        group=povm.group,
        conclusive=(1.0 - p) * povm.conclusive,
        failure=p * np.eye(dim, dtype=complex),
        vectors=vectors,
        covariant=povm.covariant
    )


def solve_oim(
    state_set: AguStateSet,
    p: float,
    restarts: int = 20,
    rng_seed: int = 0,
    dominance_draws: int = 0,
    me: Optional[MinimumErrorResult] = None
) -> OimSolution:
    """
    Optimal inconclusive measurement at average failure probability p.

    At p = 0 the certified minimum-error measurement is returned (SRM, or
    its refinement when the SRM certificate fails). Pure sets are
    multiplicity-free in the character basis and use the closed-form
    water-filling spectrum; mixed sets or sets with repeated characters use
    SLSQP over the commutant with deterministic restarts, and the scaled
    minimum-error measurement replaces the SLSQP optimum when it does better.

    Args:
        me: Minimum-error result to reuse; computed when needed and absent

    Raises:
        MeasurementError: p outside [0, 1], non-spanning set, or the
            returned failure probability misses p by more than 1e-6
    """
    if not 0.0 <= p <= 1.0:
        raise MeasurementError(f"Failure probability must lie in [0, 1], got {p}")
    if not state_set.spans_space:
        raise MeasurementError("OIM requires states that span the representation space")

    basis = character_basis(state_set.rep)
    dim = state_set.dim
    numerical = not (state_set.is_pure and basis.multiplicity_free)
    if me is None and (p == 0.0 or (numerical and p < 1.0)):
        me = minimum_error(state_set)

    if p == 0.0:
        povm = me.povm
        lam = np.zeros(dim)
        certificate = OimCertificate(method=me.method, me_residual=me.residual)
    elif p == 1.0:
        lam = np.ones(dim)
        povm = filtered_srm(state_set, np.eye(dim, dtype=complex))
        certificate = OimCertificate(method="endpoint")
    elif not numerical:
        lam = water_filling(state_set, basis, p)
        povm = filtered_srm(state_set, (basis.vectors * lam) @ dagger(basis.vectors))
        certificate = OimCertificate(method="water-filling")
    else:
        failure, lam, certificate = _optimize_failure(state_set, basis, p, restarts, rng_seed)
        povm = filtered_srm(state_set, failure)
        scaled = scaled_minimum_error(me.povm, p)
        if scaled.vectors is not None and avg_correct(state_set, scaled) > avg_correct(state_set, povm):
            logger.warning(f"Scaled minimum-error measurement beats the SLSQP optimum at p={p:.6f}")
            povm = scaled
            lam = np.full(dim, float(p))
            certificate.method = "scaled-minimum-error"

    p_achieved = avg_failure(state_set, povm)
    correct = avg_correct(state_set, povm)
    if abs(p_achieved - p) > CONSTRAINT_TOL:
        raise MeasurementError(f"OIM failure probability {p_achieved:.9f} misses target {p:.9f}")

    solution = OimSolution(
        povm=povm,
        lam=np.asarray(lam, dtype=float),
        p_target=float(p),
        p_achieved=float(p_achieved),
        correct_prob=float(correct),
        certificate=certificate
    )
    if dominance_draws > 0:
        rng = np.random.Generator(np.random.Philox(rng_seed))
        certificate.dominance = dominance_check(state_set, solution, dominance_draws, rng)

    logger.info(f"OIM at p={p:.6f}: correct={correct:.10f} via {certificate.method}")
    return solution


def unamb_threshold(state_set: AguStateSet) -> float:
    """
    Smallest failure probability allowing error-free discrimination of a
    pure set: 1 - M min_chi ||P_chi psi_e||^2 over all M characters.
    Linearly dependent sets report the degenerate threshold 1.

    Raises:
        MeasurementError: Mixed set
    """
    if not state_set.is_pure:
        raise MeasurementError("Unambiguous threshold is defined for pure sets only")
    if not state_set.linearly_independent:
        logger.warning("Linearly dependent set: no unambiguous measurement, threshold is 1")
        return 1.0
    psi = state_set.seed_vectors[:, 0]
    weights = [
        float(np.linalg.norm(isotypic_projector(state_set.rep, label) @ psi) ** 2)
        for label in state_set.group.elements
    ]
    return float(np.clip(1.0 - state_set.n_states * min(weights), 0.0, 1.0))


# ============================================================================
# Brute-force dominance check
# ============================================================================

def random_povm_at_failure(dim: int, n_outcomes: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """
    Random POVM (last element is "?") with failure weight moved so that
    Tr(rho_bar Pi_?) can be pinned; returns the raw normalized stack.
    """
    rank = dim if rng.uniform() < 0.5 else 1
    raw = []
    for _ in range(n_outcomes):
        a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
        raw.append(a @ dagger(a))
    raw = np.stack(raw)
    T = psd_inverse_sqrt(hermitian_part(raw.sum(axis=0)))
    return np.einsum("ij,kjl,lm->kim", T, raw, T)


def _pin_failure(ops: np.ndarray, rho_bar: ComplexMatrix, p: float) -> np.ndarray:
    M = ops.shape[0] - 1
    f = float(np.trace(rho_bar @ ops[-1]).real)
    ops = ops.copy()
    if f > p:
        beta = p / f
        ops[:M] += (1.0 - beta) * ops[-1][None] / M
        ops[-1] *= beta
    elif f < p:
        gamma = (1.0 - p) / (1.0 - f)
        ops[-1] += (1.0 - gamma) * ops[:M].sum(axis=0)
        ops[:M] *= gamma
    return ops


def dominance_check(
    state_set: AguStateSet,
    solution: OimSolution,
    draws: int,
    rng: np.random.Generator
) -> DominanceResult:
    """Largest excess of random valid POVMs (failure exactly p) over the solver."""
    M = state_set.n_states
    rho_bar = state_set.average_state()
    best = 0.0
    for _ in range(draws):
        ops = random_povm_at_failure(state_set.dim, M + 1, solution.p_target, rng)
        ops = _pin_failure(ops, rho_bar, solution.p_target)
        correct = float(np.einsum("mij,mji->", state_set.densities, ops[:M]).real) / M
        best = max(best, correct)
    excess = best - solution.correct_prob
    logger.debug(f"Dominance check over {draws} draws: best random {best:.8f}, excess {excess:.2e}")
    return DominanceResult(draws=draws, p=solution.p_target, max_excess=excess, best_random_correct=best)
