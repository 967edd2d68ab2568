"""
Finite Abelian groups and their unitary representations.

Group elements are canonical residue tuples (m_1, ..., m_t) with m_i in Z_{n_i};
the group law is componentwise addition. Characters are labeled by the same
tuples: chi_k(m) = exp(2 pi i sum_i k_i m_i / n_i).
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .exceptions import SymmetryError
from .numerics import CHECK_TOL, ComplexMatrix, as_square, dagger, herm_eigen, unitarity_violation

logger = logging.getLogger(__name__)

Element = Tuple[int, ...]
ElementLike = Union[int, Sequence[int]]


@dataclass(frozen=True)
class AbelianGroup:
    """Direct product Z_{n_1} x ... x Z_{n_t}."""

    orders: Tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(n) for n in self.orders)
        if not orders or any(n < 1 for n in orders):
            raise SymmetryError(f"Group orders must be positive integers, got {self.orders}")
        object.__setattr__(self, "orders", orders)

    @property
    def order(self) -> int:
        return int(np.prod(self.orders))

    @property
    def identity(self) -> Element:
        return tuple(0 for _ in self.orders)

    @cached_property
    def elements(self) -> Tuple[Element, ...]:
        return tuple(itertools.product(*(range(n) for n in self.orders)))

    def normalize(self, element: ElementLike) -> Element:
        """Accepts ints for single-factor groups and residue sequences otherwise."""
        if isinstance(element, (int, np.integer)):
            if len(self.orders) != 1:
                raise SymmetryError(f"Integer element {element} is ambiguous for orders {self.orders}")
            element = (int(element),)
        element = tuple(int(x) for x in element)
        if len(element) != len(self.orders) or any(
            not 0 <= x < n for x, n in zip(element, self.orders)
        ):
            raise SymmetryError(f"{element} is not an element of the group with orders {self.orders}")
        return element

    def index(self, element: ElementLike) -> int:
        element = self.normalize(element)
        idx = 0
        for x, n in zip(element, self.orders):
            idx = idx * n + x
        return idx

    def compose(self, a: ElementLike, b: ElementLike) -> Element:
        a, b = self.normalize(a), self.normalize(b)
        return tuple((x + y) % n for x, y, n in zip(a, b, self.orders))

    def inverse(self, a: ElementLike) -> Element:
        a = self.normalize(a)
        return tuple((-x) % n for x, n in zip(a, self.orders))

    def compose_all(self, elements: Sequence[ElementLike]) -> Element:
        return reduce(self.compose, elements, self.identity)

    def character(self, label: ElementLike, element: ElementLike) -> complex:
        label, element = self.normalize(label), self.normalize(element)
        phase = sum(k * m / n for k, m, n in zip(label, element, self.orders))
        return complex(np.exp(2j * np.pi * phase))

    @cached_property
    def compose_table(self) -> np.ndarray:
        table = np.empty((self.order, self.order), dtype=int)
        for i, a in enumerate(self.elements):
            for j, b in enumerate(self.elements):
                table[i, j] = self.index(self.compose(a, b))
        return table

    def label(self, element: ElementLike) -> str:
        element = self.normalize(element)
        if len(element) == 1:
            return str(element[0])
        return "(" + ",".join(str(x) for x in element) + ")"

    def __mul__(self, other: "AbelianGroup") -> "AbelianGroup":
        return AbelianGroup(self.orders + other.orders)


def make_cyclic_group(M: int) -> AbelianGroup:
    if int(M) < 2:
        raise SymmetryError(f"Cyclic group needs M >= 2, got {M}")
    return AbelianGroup((int(M),))


@dataclass(frozen=True)
class UnitaryRep:
    """Unitary representation stored as explicit matrices in element order."""

    group: AbelianGroup
    matrices: Tuple[ComplexMatrix, ...]

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def matrix(self, element: ElementLike) -> ComplexMatrix:
        return self.matrices[self.group.index(element)]

    def act(self, element: ElementLike, vector) -> np.ndarray:
        return self.matrix(element) @ np.asarray(vector, dtype=complex)


def validate_rep(rep: UnitaryRep) -> float:
    """Largest homomorphism, identity or unitarity violation (Frobenius)."""
    group = rep.group
    dim = rep.dim
    violation = float(np.linalg.norm(rep.matrix(group.identity) - np.eye(dim)))
    for i, u in enumerate(rep.matrices):
        violation = max(violation, unitarity_violation(u))
        for j, v in enumerate(rep.matrices):
            product = rep.matrices[group.compose_table[i, j]]
            violation = max(violation, float(np.linalg.norm(u @ v - product)))
    return violation


def make_rep(group: AbelianGroup, matrices: Sequence, tol: float = CHECK_TOL) -> UnitaryRep:
    """
    Builds and eagerly validates a representation.

    Raises:
        SymmetryError: Wrong matrix count, inconsistent shapes, or a
            representation violation above tol
    """
    if len(matrices) != group.order:
        raise SymmetryError(f"Expected {group.order} matrices, got {len(matrices)}")
    mats = tuple(as_square(m, "representation matrix") for m in matrices)
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise SymmetryError(f"Representation matrices have inconsistent dimensions {sorted(dims)}")
    rep = UnitaryRep(group=group, matrices=mats)
    violation = validate_rep(rep)
    if violation > tol:
        raise SymmetryError(f"Not a unitary representation (violation {violation:.3e})")
    logger.debug(f"Representation of orders {group.orders} in dimension {rep.dim} validated")
    return rep


def rep_from_generator(V, M: int, tol: float = CHECK_TOL) -> UnitaryRep:
    """U_m = V^m over Z_M."""
    group = make_cyclic_group(M)
    V = as_square(V, "V")
    if unitarity_violation(V) > tol:
        raise SymmetryError("Generator is not unitary")
    power = np.linalg.matrix_power(V, group.order)
    if np.linalg.norm(power - np.eye(V.shape[0])) > tol:
        raise SymmetryError(f"V^{M} is not the identity; V is not an order-{M} generator")
    return make_rep(group, [np.linalg.matrix_power(V, m) for m in range(group.order)], tol)


def rep_from_generators(group: AbelianGroup, generators: Sequence, tol: float = CHECK_TOL) -> UnitaryRep:
    """One generator per cyclic factor; U_m = prod_i G_i^{m_i}."""
    if len(generators) != len(group.orders):
        raise SymmetryError(
            f"Expected {len(group.orders)} generators for orders {group.orders}, got {len(generators)}"
        )
    gens = [as_square(g, "generator") for g in generators]
    dim = gens[0].shape[0]
    matrices = []
    for element in group.elements:
        u = np.eye(dim, dtype=complex)
        for g, power in zip(gens, element):
            u = u @ np.linalg.matrix_power(g, power)
        matrices.append(u)
    return make_rep(group, matrices, tol)


def shift_rep(group: AbelianGroup) -> UnitaryRep:
    """Regular representation: U_m e_k = e_{m o k}."""
    M = group.order
    matrices = []
    for i in range(M):
        u = np.zeros((M, M), dtype=complex)
        for k in range(M):
            u[group.compose_table[i, k], k] = 1.0
        matrices.append(u)
    return make_rep(group, matrices)


def diag_character_rep(group: AbelianGroup) -> UnitaryRep:
    """U_m = diag(chi_k(m)) over all characters k in element order."""
    matrices = [
        np.diag([group.character(k, m) for k in group.elements]) for m in group.elements
    ]
    return make_rep(group, matrices)


@dataclass(frozen=True)
class CharacterBasis:
    """Simultaneous eigenbasis (columns) with one character label per column."""

    vectors: ComplexMatrix
    labels: Tuple[Element, ...]

    def blocks(self) -> Dict[Element, List[int]]:
        blocks: Dict[Element, List[int]] = {}
        for column, label in enumerate(self.labels):
            blocks.setdefault(label, []).append(column)
        return blocks

    @property
    def multiplicity_free(self) -> bool:
        return len(set(self.labels)) == len(self.labels)


def isotypic_projector(rep: UnitaryRep, label: ElementLike) -> ComplexMatrix:
    """(1/M) sum_m conj(chi(m)) U_m, the projector onto the chi-eigenspace."""
    group = rep.group
    total = sum(np.conj(group.character(label, m)) * rep.matrix(m) for m in group.elements)
    return total / group.order


def character_basis(rep: UnitaryRep, tol: float = CHECK_TOL) -> CharacterBasis:
    """
    Simultaneous eigenbasis of all U_m.

    Characters appear in group-element order; within a character block
    vectors follow the deterministic eigenvector ordering of herm_eigen.

    Raises:
        SymmetryError: Invalid representation
    """
    violation = validate_rep(rep)
    if violation > tol:
        raise SymmetryError(f"Representation invalid (violation {violation:.3e})")

    columns = []
    labels = []
    for label in rep.group.elements:
        eig = herm_eigen(isotypic_projector(rep, label))
        for i in np.flatnonzero(eig.values > 0.5):
            columns.append(eig.vectors[:, i])
            labels.append(label)

    if len(columns) != rep.dim:
        raise SymmetryError(
            f"Character decomposition found {len(columns)} vectors in dimension {rep.dim}"
        )
    vectors = np.column_stack(columns)
    logger.debug(f"Character basis with {len(set(labels))} distinct characters in dimension {rep.dim}")
    return CharacterBasis(vectors=vectors, labels=tuple(labels))


def rep_violation_against(rep: UnitaryRep, operators: Sequence[ComplexMatrix]) -> float:
    """Largest violation of O_{m o k} = U_m O_k U_m^dagger for element-indexed operators."""
    group = rep.group
    worst = 0.0
    for i, u in enumerate(rep.matrices):
        for k in range(group.order):
            target = operators[group.compose_table[i, k]]
            worst = max(worst, float(np.linalg.norm(target - u @ operators[k] @ dagger(u))))
    return worst
