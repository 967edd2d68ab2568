"""
Step-1 preprocessing maps.

Each observer n holds a 2MR-dimensional system with an ONB mu^{(s)}_{t,r}
(s in {0,1}, t in G, r < R), stored as the columns of a unitary in the order
s * MR + index(t) * R + r. Observers are tensored in ascending index order.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from state_discrimination import AguStateSet, ProjectiveDilation
from state_discrimination.exceptions import DimensionCapError
from state_discrimination.numerics import (
    CHECK_TOL,
    DEFAULT_DIMENSION_CAP,
    ComplexMatrix,
    as_square,
    dagger,
    kron_all,
    unitarity_violation,
)
from state_discrimination.symmetry import AbelianGroup, Element, ElementLike

from .exceptions import ProtocolError

logger = logging.getLogger(__name__)

ENTANGLED = "entangled"
SEPARABLE = "separable"

OutcomeLabel = Tuple[int, Element, int]


@dataclass(frozen=True, eq=False)
class LocalFrame:
    """Per-observer ONBs mu^{(s)}_{t,r} for N observers."""

    group: AbelianGroup
    rank: int
    bases: Tuple[ComplexMatrix, ...]

    @property
    def n_observers(self) -> int:
        return len(self.bases)

    @property
    def local_dim(self) -> int:
        return 2 * self.group.order * self.rank

    @property
    def composite_dim(self) -> int:
        return self.local_dim ** self.n_observers

    def label_index(self, s: int, t: ElementLike, r: int) -> int:
        return s * self.group.order * self.rank + self.group.index(t) * self.rank + r

    def label(self, index: int) -> OutcomeLabel:
        n = self.group.order * self.rank
        s, rest = divmod(int(index), n)
        t, r = divmod(rest, self.rank)
        return s, self.group.elements[t], r

    def vector(self, observer: int, s: int, t: ElementLike, r: int) -> np.ndarray:
        return self.bases[observer][:, self.label_index(s, t, r)]

    def product(self, labels: Sequence[OutcomeLabel], max_dim: int = DEFAULT_DIMENSION_CAP) -> np.ndarray:
        factors = [self.vector(n, s, t, r).reshape(-1, 1) for n, (s, t, r) in enumerate(labels)]
        return kron_all(factors, max_dim).ravel()

    def eta(self, q: int, k: ElementLike, r: int, max_dim: int = DEFAULT_DIMENSION_CAP) -> np.ndarray:
        """
        eta^{(q)}_{k,r} = (1/C) sum_{s in S_q} sum_{t in G_k} (x)_n mu^{(s_n)}_{t_n,r}

        S_q: parity vectors with sum s_n = q (mod 2); G_k: tuples with
        t_0 o ... o t_{N-1} = k; C = (2M)^{(N-1)/2}.
        """
        group = self.group
        N = self.n_observers
        k = group.normalize(k)
        norm = (2 * group.order) ** ((N - 1) / 2)
        total = np.zeros(self.composite_dim, dtype=complex)
        for s_head in itertools.product((0, 1), repeat=N - 1):
            s = s_head + ((q + sum(s_head)) % 2,)
            for t_head in itertools.product(group.elements, repeat=N - 1):
                t_last = group.compose(group.inverse(group.compose_all(t_head)), k)
                t = t_head + (t_last,)
                total += self.product([(s[n], t[n], r) for n in range(N)], max_dim)
        return total / norm

    def eta_rewritten(
        self, q: int, k: ElementLike, r: int, nu: int, max_dim: int = DEFAULT_DIMENSION_CAP
    ) -> np.ndarray:
        """
        Same vector summed over tau in G^{N-1}: t_n = inv(tau_{n-1}) o k_{n,nu} o tau_n
        with tau_{-1} = tau_{N-1} = e and k_{n,nu} = k if n = nu else e.
        """
        group = self.group
        N = self.n_observers
        k = group.normalize(k)
        e = group.identity
        norm = (2 * group.order) ** ((N - 1) / 2)
        total = np.zeros(self.composite_dim, dtype=complex)
        for s_head in itertools.product((0, 1), repeat=N - 1):
            s = s_head + ((q + sum(s_head)) % 2,)
            for tau_head in itertools.product(group.elements, repeat=N - 1):
                tau = (e,) + tau_head + (e,)
                t = []
                for n in range(N):
                    k_n = k if n == nu else e
                    t.append(group.compose(group.compose(group.inverse(tau[n]), k_n), tau[n + 1]))
                total += self.product([(s[n], t[n], r) for n in range(N)], max_dim)
        return total / norm


@dataclass(frozen=True, eq=False)
class PreprocessMap:
    kind: str
    frame: LocalFrame
    kraus: Tuple[ComplexMatrix, ...]
    eta: Optional[ComplexMatrix] = None     # (composite, 2MR) columns in omega order

    @property
    def n_observers(self) -> int:
        return self.frame.n_observers

    @property
    def local_dim(self) -> int:
        return self.frame.local_dim

    @property
    def composite_dim(self) -> int:
        return self.frame.composite_dim

    @property
    def dims(self) -> List[int]:
        return [self.local_dim] * self.n_observers

    @property
    def local_bases(self) -> Tuple[ComplexMatrix, ...]:
        return self.frame.bases

    def trace_preservation_violation(self) -> float:
        total = sum(dagger(k) @ k for k in self.kraus)
        return float(np.linalg.norm(total - np.eye(self.local_dim)))

    def isometry_violation(self) -> float:
        if self.kind != ENTANGLED:
            raise ProtocolError("Isometry check applies to entangled maps only")
        a = self.kraus[0]
        return float(np.linalg.norm(dagger(a) @ a - np.eye(self.local_dim)))


def make_frame(
    dil: ProjectiveDilation,
    n_observers: int,
    local_bases: Optional[Sequence] = None,
    tol: float = CHECK_TOL
) -> LocalFrame:
    """Standard bases by default; explicit bases must be unitary of size 2MR."""
    if n_observers < 2:
        raise ProtocolError(f"At least two observers are required, got {n_observers}")
    local_dim = dil.dim_ex
    if local_bases is None:
        bases = tuple(np.eye(local_dim, dtype=complex) for _ in range(n_observers))
    else:
        if len(local_bases) != n_observers:
            raise ProtocolError(f"Expected {n_observers} local bases, got {len(local_bases)}")
        bases = tuple(as_square(b, "local basis") for b in local_bases)
        for b in bases:
            if b.shape[0] != local_dim or unitarity_violation(b) > tol:
                raise ProtocolError(f"Local bases must be {local_dim}x{local_dim} unitaries")
    return LocalFrame(group=dil.group, rank=dil.rank, bases=bases)


def _check_dilation(dil: ProjectiveDilation, tol: float) -> None:
    violation = dil.onb_violation()
    if violation > tol:
        raise ProtocolError(f"Dilation vectors are not an ONB (violation {violation:.3e})")


def _check_cap(local_dim: int, n_observers: int, dimension_cap: int) -> None:
    composite = local_dim ** n_observers
    if composite > dimension_cap:
        raise DimensionCapError(
            f"Composite dimension {local_dim}^{n_observers} = {composite} exceeds cap {dimension_cap}"
        )


def build_bipartite_entangled(
    dil: ProjectiveDilation,
    local_bases: Optional[Sequence] = None,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
    tol: float = CHECK_TOL
) -> PreprocessMap:
    """
    A = sum_{q,k,r} |eta^{(q)}_{k,r}><omega^{(q)}_{k,r}| with
    eta^{(q)}_{k,r} = (1/sqrt(2M)) sum_{s,t} a^{(s)}_{t,r} (x) b^{(q+s)}_{inv(t) o k, r}.
    """
    _check_dilation(dil, tol)
    _check_cap(dil.dim_ex, 2, dimension_cap)
    frame = make_frame(dil, 2, local_bases, tol)
    group, R = dil.group, dil.rank
    norm = np.sqrt(2 * group.order)

    eta = np.zeros((frame.composite_dim, dil.dim_ex), dtype=complex)
    for q in (0, 1):
        for k in group.elements:
            for r in range(R):
                column = np.zeros(frame.composite_dim, dtype=complex)
                for s in (0, 1):
                    for t in group.elements:
                        partner = group.compose(group.inverse(t), k)
                        column += np.kron(frame.vector(0, s, t, r), frame.vector(1, (q + s) % 2, partner, r))
                eta[:, dil.index(q, k, r)] = column / norm

    a = eta @ dagger(dil.omega)
    logger.info(f"Bipartite entangled map built on a {frame.composite_dim}-dimensional composite")
    return PreprocessMap(kind=ENTANGLED, frame=frame, kraus=(a,), eta=eta)


def build_multipartite(
    dil: ProjectiveDilation,
    n_observers: int,
    local_bases: Optional[Sequence] = None,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
    tol: float = CHECK_TOL
) -> PreprocessMap:
    """A_N = sum_{q,k,r} |eta^{(q)}_{k,r}><omega^{(q)}_{k,r}| for N observers."""
    _check_dilation(dil, tol)
    _check_cap(dil.dim_ex, n_observers, dimension_cap)
    frame = make_frame(dil, n_observers, local_bases, tol)
    group, R = dil.group, dil.rank

    eta = np.zeros((frame.composite_dim, dil.dim_ex), dtype=complex)
    for q in (0, 1):
        for k in group.elements:
            for r in range(R):
                eta[:, dil.index(q, k, r)] = frame.eta(q, k, r, dimension_cap)

    a = eta @ dagger(dil.omega)
    logger.info(f"{n_observers}-partite entangled map built on a {frame.composite_dim}-dimensional composite")
    return PreprocessMap(kind=ENTANGLED, frame=frame, kraus=(a,), eta=eta)


def build_bipartite_separable(
    dil: ProjectiveDilation,
    local_bases: Optional[Sequence] = None,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
    tol: float = CHECK_TOL
) -> PreprocessMap:
    """
    Kraus family A^{(s)}_{k,r} = (1/sqrt(2M)) |a^{(s)}_{k,r}> (x)
    sum_{q,j} |b^{(q+s)}_{inv(k) o j, r}><omega^{(q)}_{j,r}|, ordered (s, k, r).
    """
    _check_dilation(dil, tol)
    _check_cap(dil.dim_ex, 2, dimension_cap)
    frame = make_frame(dil, 2, local_bases, tol)
    group, R = dil.group, dil.rank
    norm = np.sqrt(2 * group.order)

    kraus = []
    for s in (0, 1):
        for k in group.elements:
            for r in range(R):
                b_part = np.zeros((dil.dim_ex, dil.dim_ex), dtype=complex)
                for q in (0, 1):
                    for j in group.elements:
                        partner = group.compose(group.inverse(k), j)
                        b_vec = frame.vector(1, (q + s) % 2, partner, r)
                        b_part += np.outer(b_vec, dil.omega_vector(q, j, r).conj())
                a_vec = frame.vector(0, s, k, r).reshape(-1, 1)
                kraus.append(np.kron(a_vec, b_part) / norm)

    logger.info(f"Bipartite separable map built with {len(kraus)} Kraus operators")
    return PreprocessMap(kind=SEPARABLE, frame=frame, kraus=tuple(kraus))


def preprocess(pmap: PreprocessMap, state_set: AguStateSet, dil: ProjectiveDilation) -> np.ndarray:
    """
    rho'_m = sum_K sum_r K P^dagger psi_{m,r} (K P^dagger psi_{m,r})^dagger.

    Returns:
        (M, composite, composite) stack in element order

    Raises:
        ProtocolError: Dimension mismatch between map, dilation and states
    """
    if dil.dim != state_set.dim or dil.group != state_set.group:
        raise ProtocolError("Dilation does not belong to this state set")
    if pmap.local_dim != dil.dim_ex or pmap.frame.group != dil.group:
        raise ProtocolError(
            f"Map acts on local dimension {pmap.local_dim}, dilation has {dil.dim_ex}"
        )
    embedded = dil.embed_vectors(state_set)
    kraus = np.stack(pmap.kraus)
    images = np.einsum("kij,mjr->mkir", kraus, embedded)
    return np.einsum("mkir,mkjr->mij", images, images.conj())


def separable_product_form(pmap: PreprocessMap, state_set: AguStateSet, dil: ProjectiveDilation) -> np.ndarray:
    """
    Evaluates rho'_m = sum_{s,k,r} |a^{(s)}_{k,r}><a| (x) sum_t |gamma><gamma| with
    gamma^{(s)}_{m,k,r,t} = sum_{q,j} chi^{(q)}_{inv(m) o j, r, t} b^{(q+s)}_{inv(k) o j, r}
    and chi^{(q)}_{j,r,t} = <omega^{(q)}_{j,r}|psi_{e,t}> / sqrt(2M).
    """
    if pmap.kind != SEPARABLE:
        raise ProtocolError("Product form applies to the separable map only")
    group, R = dil.group, dil.rank
    frame = pmap.frame
    norm = np.sqrt(2 * group.order)
    embedded = dil.embed_vectors(state_set)
    seed = embedded[group.index(group.identity)]

    chi = np.zeros((2, group.order, R, R), dtype=complex)
    for q in (0, 1):
        for j in group.elements:
            for r in range(R):
                chi[q, group.index(j), r] = dil.omega_vector(q, j, r).conj() @ seed / norm

    d = frame.composite_dim
    result = np.zeros((group.order, d, d), dtype=complex)
    for mi, m in enumerate(group.elements):
        for s in (0, 1):
            for k in group.elements:
                for r in range(R):
                    a_vec = frame.vector(0, s, k, r)
                    a_proj = np.outer(a_vec, a_vec.conj())
                    b_block = np.zeros((frame.local_dim, frame.local_dim), dtype=complex)
                    for t in range(R):
                        gamma = np.zeros(frame.local_dim, dtype=complex)
                        for q in (0, 1):
                            for j in group.elements:
                                shifted = group.compose(group.inverse(m), j)
                                coefficient = chi[q, group.index(shifted), r, t]
                                partner = group.compose(group.inverse(k), j)
                                gamma += coefficient * frame.vector(1, (q + s) % 2, partner, r)
                        b_block += np.outer(gamma, gamma.conj())
                    result[mi] += np.kron(a_proj, b_block)
    return result


def eta_vector(pmap: PreprocessMap, q: int, k: ElementLike, r: int) -> np.ndarray:
    return pmap.frame.eta(q, k, r, max(pmap.composite_dim, DEFAULT_DIMENSION_CAP))


def eta_vector_rewritten(pmap: PreprocessMap, q: int, k: ElementLike, r: int, nu: int) -> np.ndarray:
    if not 0 <= nu < pmap.n_observers:
        raise ProtocolError(f"Observer index {nu} outside 0..{pmap.n_observers - 1}")
    return pmap.frame.eta_rewritten(q, k, r, nu, max(pmap.composite_dim, DEFAULT_DIMENSION_CAP))
